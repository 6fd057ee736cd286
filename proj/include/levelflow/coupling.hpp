#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "levelflow/config.hpp"
#include "levelflow/fem/assembly.hpp"
#include "levelflow/fem/field.hpp"
#include "levelflow/levelset.hpp"
#include "levelflow/mesh.hpp"
#include "levelflow/nsolver.hpp"

namespace levelflow::coupling {

/// Regularized Heaviside in [-1, 1] with a linear ramp of half-width beta tanh(c_h).
double heaviside_h(double s, double beta, double c_h);

/// Cross law mu_inf + (mu_0 - mu_inf) / (1 + (gamma / gamma_c)^n); constant models return mu.
double cross_viscosity(double gamma, const ViscosityModel& model);

/// Frobenius norm of the symmetric gradient.
double shear_rate(const Tensor2& grad_u);

/// Rescaled piecewise-linear Dirac mass; 0 when the gradient vanishes.
double dirac_eps(double phi, const Vec2& grad_phi, double epsilon);

/// I - g (x) g / |g|^2, or I when |g| < 1e-12.
Tensor2 tangential_projector(const Vec2& grad_phi);

/// Density and viscosity at the Gauss points of every cell (cell-major).
struct MaterialFields {
  int points_per_cell = 0;
  std::vector<double> rho, mu;

  double rho_min() const;
  double rho_max() const;
  double mu_min() const;
  double mu_max() const;
  nsolver::MaterialFn as_function() const;
};

/// Blends phase properties through heaviside_h(phi). The plus-phase viscosity
/// follows its model with the shear rate of `velocity` when one is given.
MaterialFields blend(const fem::Field& phi, const PhysicalParams& phys, double beta, double c_h,
                     const fem::Field* velocity = nullptr);

/// Per-point surface-tension data (weight sigma delta_eps, projector) for the velocity prediction.
struct InterfaceFields {
  int points_per_cell = 0;
  std::vector<nsolver::InterfacePoint> points;

  nsolver::InterfaceFn as_function() const;
};

InterfaceFields surface_tension_forms(const fem::Field& phi, double sigma, double epsilon);

/// Assembled explicit right-hand side -int w P:grad V and implicit matrix
/// dt int w (grad U P):(grad V P) over the free velocity dofs.
struct SurfaceTensionSystem {
  Eigen::VectorXd rhs;
  fem::SparseMatrix matrix;
};
SurfaceTensionSystem assemble_surface_tension(const fem::FESpace& velocity, const InterfaceFields& forms, double dt);

/// Velocity constraints implied by the boundary conditions.
fem::DirichletMask velocity_mask(const ScenarioConfig& c);
/// Prescribed velocity at constrained boundary nodes.
std::function<Vec2(const Vec2&)> boundary_velocity(const ScenarioConfig& c);
/// True when the point lies in the inflow window of an inflow side.
bool in_inflow_window(const ScenarioConfig& c, const Vec2& p);

/// Signed distance to the configured shape, positive inside.
double shape_distance(const LevelSetInit& init, const Extents& domain, const Vec2& p);
/// Initial level set: inside_sign times the distance or its tanh profile.
std::function<double(const Vec2&)> initial_levelset(const ScenarioConfig& c, double beta);
std::function<Vec2(const Vec2&)> initial_velocity(const ScenarioConfig& c);
/// Analytic velocity of prescribed-flow scenarios.
std::function<Vec2(const Vec2&, double)> prescribed_velocity(const FlowConfig& flow);

/// Beta for a mesh: num.beta when set, otherwise the smallest cell side.
double beta_for(const ScenarioConfig& c, const QuadMesh& mesh);

struct SimulationState {
  std::shared_ptr<const QuadMesh> mesh;
  std::shared_ptr<const fem::FESpace> phi_space, velocity_space, pressure_space;
  levelset::LevelSetState ls;
  /// Navier-Stokes fields; empty spaces in prescribed-flow mode.
  nsolver::NSState ns;
  double t = 0.0;
  long step = 0;
  std::shared_ptr<levelset::MassCache> mass_cache = std::make_shared<levelset::MassCache>();

  bool has_flow() const { return static_cast<bool>(velocity_space); }
};

struct StepInfo {
  double dt = 0.0;
  double dt_levelset = 0.0;
  double dt_ns = std::numeric_limits<double>::infinity();
  double rho_min = 0.0, rho_max = 0.0, mu_min = 0.0, mu_max = 0.0;
  levelset::StabilizationField viscosities;
  nsolver::SolveReport ns;
  long levelset_iterations = 0;
  AdaptReport adapt;
};

/// Builds the initial mesh (adapted to a fixed point around the initial interface) and fields.
SimulationState initialize(const ScenarioConfig& c);

/// One global step: time step choice, level-set transport, material update,
/// Navier-Stokes solve, mesh adaptation. dt_cap bounds the step from above.
SimulationState advance(const SimulationState& state, const ScenarioConfig& c,
                        double dt_cap = std::numeric_limits<double>::infinity(), StepInfo* info = nullptr);

}  // namespace levelflow::coupling
