#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "levelflow/config.hpp"
#include "levelflow/fem/assembly.hpp"
#include "levelflow/fem/field.hpp"

namespace levelflow::levelset {

/// Velocity seen by the transport: either a finite-element vector field on
/// the level-set mesh or an analytic function of position.
class VelocityField {
 public:
  static VelocityField from_field(const fem::Field& u);
  static VelocityField from_function(std::function<Vec2(const Vec2&)> f);

  /// Values at the points of `fe`, which must be reinitialized on `cell`.
  void on_cell(int cell, const fem::FEValues& fe, std::vector<Vec2>& out) const;
  /// Largest nodal speed (field) or largest speed at the nodes of `probe` (function).
  double max_norm(const fem::FESpace& probe) const;

 private:
  const fem::Field* field_ = nullptr;
  std::function<Vec2(const Vec2&)> fn_;
  mutable std::shared_ptr<fem::FEValues> fe_u_;
  mutable std::vector<double> local_;
};

struct LevelSetState {
  fem::Field phi;
  double beta = 0.0;
  double lambda = 0.0;
};

/// Per-cell viscosities; mu_stab = min(mu_lin, mu_ent) on every cell.
struct StabilizationField {
  std::vector<double> mu_stab;
  std::vector<double> mu_lin;
  std::vector<double> mu_ent;
};

/// Inflow boundary data: the prescribed value at a boundary node, if it lies on the inflow part.
using InflowData = std::function<std::optional<double>(const Vec2& point, double t)>;

int sign_h(double s, double beta, double c_s);
double compute_lambda(double u_max, double c_lambda);
/// G(z) = 1 - (z / beta)^2.
inline double reinit_g(double z, double beta) { return 1.0 - (z / beta) * (z / beta); }

/// L(phi, u) = -u . grad(phi) + lambda sign_h(phi) (G(phi) - |grad phi|) at one point.
double transport_rhs(double phi, const Vec2& grad_phi, const Vec2& u, double lambda, double beta, double c_s);

/// Per-cell max over quadrature points of the entropy residual of the stage field.
std::vector<double> entropy_residual(const fem::Field& phi_stage, const fem::Field& phi_n, double dt_eff,
                                     const VelocityField& u, double lambda, double beta,
                                     const NumericalParams& params);

StabilizationField viscosities(const fem::Field& phi_stage, const fem::Field& phi_n, double dt_eff,
                               const VelocityField& u, double lambda, double beta, const NumericalParams& params);

/// Reusable mass matrix of a level-set space.
struct MassCache {
  const fem::FESpace* space = nullptr;
  fem::SparseMatrix mass;
  const fem::SparseMatrix& get(const fem::FESpace& s);
};

struct StepDiagnostics {
  StabilizationField stage2;
  StabilizationField stage3;
  long solver_iterations = 0;
};

/// One SSP-RK3 step from t to t + dt. Velocities are sampled at t (u_n),
/// t + dt/2 (u_half) and t + dt (u_np1).
LevelSetState ssprk3_step(const LevelSetState& state, const VelocityField& u_n, const VelocityField& u_half,
                          const VelocityField& u_np1, double t, double dt, const NumericalParams& params,
                          const InflowData& inflow = {}, MassCache* cache = nullptr,
                          StepDiagnostics* diagnostics = nullptr);

/// Largest stable step C_CFL min_K h_K / |u + lambda sign_h(phi) grad phi/|grad phi||_K,
/// capped at dt_max; cells with zero speed are skipped.
double cfl_dt(const fem::Field& phi, const VelocityField& u, double lambda, double beta, double c_cfl, double c_s,
              double dt_max);

}  // namespace levelflow::levelset
