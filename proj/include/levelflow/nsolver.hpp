#pragma once

#include <functional>
#include <memory>

#include "levelflow/fem/assembly.hpp"
#include "levelflow/fem/field.hpp"
#include "levelflow/geometry.hpp"

namespace levelflow::nsolver {

/// Variable-step BDF2 weights: dU/dt(t^{n+1}) ~ a0 U^{n+1} + a1 U^n + a2 U^{n-1}.
struct StepCoefficients {
  double dt = 0.0;
  double eta = 0.0;
  double a0 = 0.0, a1 = 0.0, a2 = 0.0;
  /// Extrapolation (U^n)* = (1 + eta) U^n - eta U^{n-1}.
  double ext_n = 1.0, ext_nm1 = 0.0;
};

StepCoefficients bdf2_coeffs(double dt_np1, double dt_n);
/// eta = 0 weights: backward Euler with constant extrapolation.
StepCoefficients backward_euler_coeffs(double dt);

/// Taylor-Hood Q2 velocity / Q1 pressure state. P and Psi share one
/// unconstrained Q1 space.
struct NSState {
  fem::Field U_n, U_nm1;
  fem::Field P_n;
  fem::Field Psi_n, Psi_nm1;
  double dt_n = 0.0;
  /// Completed steps; the first step has no U^{n-1} and uses eta = 0.
  long steps = 0;
};

/// Zero velocity and pressure on the given spaces.
NSState zero_state(std::shared_ptr<const fem::FESpace> velocity, std::shared_ptr<const fem::FESpace> pressure);

/// Density and viscosity at every quadrature point of the velocity cell.
using MaterialFn = std::function<void(int cell, const fem::FEValues& fe, double* rho, double* mu)>;

/// Regularized interface data at a quadrature point: weight = sigma * delta_eps,
/// projector = I - n (x) n.
struct InterfacePoint {
  double weight = 0.0;
  Tensor2 projector{1.0, 0.0, 0.0, 1.0};
};
using InterfaceFn = std::function<void(int cell, const fem::FEValues& fe, InterfacePoint* out)>;

/// Inputs of the velocity prediction at t^{n+1}.
struct PredictionData {
  MaterialFn material;
  Vec2 gravity{};
  /// Extra force per unit volume.
  std::function<Vec2(const Vec2&)> force;
  /// Traction on boundary points of non-Dirichlet sides; null means zero.
  std::function<Vec2(const Vec2&, Side)> neumann;
  /// Prescribed velocity at Dirichlet dofs.
  std::function<Vec2(const Vec2&)> dirichlet;
  /// Surface tension: explicit -int w P:grad V and implicit dt int w (grad U P):(grad V P).
  InterfaceFn interface;
  double c_stab = 0.1;
  /// False drops the explicit advection term (unsteady Stokes).
  bool advection = true;
  double tol = 1e-8;
  int max_iter = 10000;
};

struct SolveReport {
  long velocity_iterations = 0;
  long correction_iterations = 0;
  long update_iterations = 0;
};

/// Extrapolated velocity (U^n)* of the coefficients.
fem::Field extrapolate(const NSState& state, const StepCoefficients& c);

fem::Field velocity_prediction(const NSState& state, const StepCoefficients& c, const PredictionData& data,
                               SolveReport* report = nullptr);

/// int grad Psi . grad Q = -(3 rho_min / (2 dt)) int div(U) Q, homogeneous Neumann, mean-zero when singular.
fem::Field pressure_correction(const fem::Field& U_np1, std::shared_ptr<const fem::FESpace> pressure,
                               double rho_min, double dt_np1, double tol = 1e-8, int max_iter = 10000,
                               SolveReport* report = nullptr);

/// Rotational update: int P^{n+1} Q = int (P^n + Psi^{n+1}) Q - mu_min int div(U^{n+1}) Q.
fem::Field pressure_update(const fem::Field& P_n, const fem::Field& Psi_np1, const fem::Field& U_np1, double mu_min,
                           double tol = 1e-8, int max_iter = 10000, SolveReport* report = nullptr);

/// Gradient part of the body force: int grad P . grad Q = int rho g . grad Q, homogeneous Neumann,
/// mean-zero. Starting from this pressure avoids the free-fall transient of P = 0.
fem::Field initial_pressure(std::shared_ptr<const fem::FESpace> pressure, const MaterialFn& material, const Vec2& gravity,
                            double tol = 1e-8, int max_iter = 10000);
/// One full step: prediction, correction, update. Returns the next state.
NSState step(const NSState& state, double dt_np1, const PredictionData& data, double rho_min, double mu_min,
             SolveReport* report = nullptr);

/// C_CFL * (min distance between Q2 nodes) / ||U||_inf, capped at dt_max.
double cfl_dt_ns(const fem::Field& U, const QuadMesh& mesh, double c_cfl, double dt_max);

/// ||div U||_{L2}.
double divergence_l2(const fem::Field& U);

/// Grad-div stabilization form S_T(W, V) with constant rho and mu, for inspection.
fem::SparseMatrix grad_div_matrix(const fem::Field& advecting, double rho, double mu, double c_stab);

}  // namespace levelflow::nsolver
