#pragma once

#include <array>
#include <string>
#include <string_view>

#include "levelflow/geometry.hpp"

namespace levelflow {

struct NumericalParams {
  double c_cfl = 0.25;
  double c_lambda = 0.01;
  double c_h = 1.25;
  double c_s = 0.5;
  double c_r = 2.0;
  double c_c = 2.0;
  int r_max = 2;
  double c_lin = 0.1;
  double c_ent = 0.1;
  double entropy_p = 20.0;
  double c_stab = 0.1;
  double lin_solver_rel_tol = 1e-8;
  int lin_solver_max_iter = 10000;
  /// Interface thickness. 0 selects the smallest cell side of the current mesh.
  double beta = 0.0;

  friend bool operator==(const NumericalParams&, const NumericalParams&) = default;
};

NumericalParams default_params();

/// Throws ConfigError naming the first violated invariant.
void validate(const NumericalParams& p);

struct ViscosityModel {
  enum class Kind { constant, cross };
  Kind kind = Kind::constant;
  double mu = 1.0;
  double mu_0 = 1.0;
  double mu_inf = 1.0;
  double gamma_c = 1.0;
  double exponent_n = 1.0;

  static ViscosityModel constant(double mu) { return {Kind::constant, mu, mu, mu, 1.0, 1.0}; }
  static ViscosityModel cross(double mu_0, double mu_inf, double gamma_c, double n) {
    return {Kind::cross, mu_0, mu_0, mu_inf, gamma_c, n};
  }
  /// Largest viscosity the model can produce.
  double upper() const { return kind == Kind::constant ? mu : mu_0; }
  /// Smallest viscosity the model can produce.
  double lower() const { return kind == Kind::constant ? mu : mu_inf; }

  friend bool operator==(const ViscosityModel&, const ViscosityModel&) = default;
};

struct PhysicalParams {
  double rho_plus = 1.0;
  double rho_minus = 1.0;
  ViscosityModel viscosity_plus = ViscosityModel::constant(1.0);
  double mu_minus = 1.0;
  double sigma = 0.0;
  Vec2 gravity{0.0, 0.0};

  friend bool operator==(const PhysicalParams&, const PhysicalParams&) = default;
};

void validate(const PhysicalParams& p);

enum class BoundaryKind { dirichlet, open, slip, inflow };

struct BoundaryCondition {
  BoundaryKind kind = BoundaryKind::dirichlet;
  /// Prescribed velocity: wall velocity for dirichlet, inflow velocity for inflow.
  Vec2 velocity{0.0, 0.0};
  /// Inflow window along the side, in the side's tangential coordinate.
  double window_lo = 0.0;
  double window_hi = 0.0;
  /// Condition applied on the part of an inflow side outside the window.
  BoundaryKind outside = BoundaryKind::dirichlet;
  bool parabolic = false;

  friend bool operator==(const BoundaryCondition&, const BoundaryCondition&) = default;
};

struct LevelSetInit {
  enum class Shape { circle, halfplane, box, jet, zalesak };
  enum class Profile { distance, tanh };
  Shape shape = Shape::halfplane;
  Profile profile = Profile::distance;
  /// +1: the shape interior is the plus phase; -1: it is the minus phase.
  int inside_sign = 1;
  Vec2 center{0.5, 0.5};
  double radius = 0.25;
  Vec2 point{0.5, 0.5};
  Vec2 normal{0.0, 1.0};
  Extents box{0.25, 0.75, 0.25, 0.75};
  double jet_x0 = 0.45;
  double jet_x1 = 0.55;
  double jet_tip = 0.5;
  bool has_bath = false;
  double bath_level = 0.0;
  Vec2 jet_velocity{0.0, 0.0};
  Vec2 bath_velocity{0.0, 0.0};
  double slot_width = 0.05;
  double slot_depth = 0.25;

  friend bool operator==(const LevelSetInit&, const LevelSetInit&) = default;
};

struct FlowConfig {
  enum class Mode { navier_stokes, prescribed };
  enum class Prescribed { rotation, vortex, uniform };
  Mode mode = Mode::navier_stokes;
  Prescribed velocity = Prescribed::rotation;
  Vec2 center{0.0, 0.0};
  double omega = 1.0;
  /// T in the time modulation cos(pi t / T) of the vortex field.
  double period = 1.0;
  Vec2 value{0.0, 0.0};
  bool advection = true;

  friend bool operator==(const FlowConfig&, const FlowConfig&) = default;
};

struct StudyConfig {
  enum class Reference { initial, tanh_initial };
  Reference reference = Reference::initial;
  bool refine_mesh = true;

  friend bool operator==(const StudyConfig&, const StudyConfig&) = default;
};

struct ScenarioConfig {
  std::string name = "scenario";
  Extents domain{};
  double h0 = 0.0;
  double t_final = 0.0;
  double dt_max = 1e-2;
  /// Fixed time step; 0 selects the CFL-limited step.
  double dt = 0.0;
  double first_step_factor = 0.1;
  std::array<BoundaryCondition, kNumSides> bc{};
  LevelSetInit levelset{};
  PhysicalParams phys{};
  NumericalParams num{};
  FlowConfig flow{};
  StudyConfig study{};
  int output_every = 0;
  std::string output_dir = "out";
  /// +1 tracks the plus phase in the metrics, -1 the minus phase.
  int metrics_phase = 1;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

void validate(const ScenarioConfig& c);

/// Parses the flat `section.key = value` format. Unspecified values keep
/// their defaults; the result is validated.
ScenarioConfig parse_scenario(std::string_view text);

/// Writes every key, so that parse_scenario(serialize(c)) == c.
std::string serialize(const ScenarioConfig& c);

std::string_view side_name(Side s);
std::string_view boundary_kind_name(BoundaryKind k);

}  // namespace levelflow
