#pragma once

#include <cstdint>
#include <vector>

#include "fmm/engine.hpp"

namespace fmm::sims {

// Gaussian regularization 1 - exp(-r^2/delta^2).
double smoother(double r, double delta);

// --- vortex dynamics -------------------------------------------------------

struct VortexSystem {
  std::vector<cplx> pos;
  std::vector<double> gamma;  // circulations, constant during convection
  double delta = 0.05;        // smoothing radius
  double dt = 0.01;

  std::size_t size() const { return pos.size(); }
  double total_circulation() const;
};

// Regular lattice in an aspect:1 rectangle centered at the origin; the upper
// half carries +gamma, the lower half -gamma, so the total circulation is
// zero. n must be even.
VortexSystem init_shear_layer(int n, double aspect, double gamma);

// Velocity of every vortex induced by all others (self term excluded),
// smoothed in the near field. Reconfigures the engine to the harmonic
// kernel with the system's smoothing radius.
std::vector<cplx> vortex_velocities(const VortexSystem& sys, FmmEngine& engine,
                                    EvalResult* info = nullptr);

void euler_step(VortexSystem& sys, const std::vector<cplx>& velocities);

// --- gravity ----------------------------------------------------------------

struct GravitySystem {
  std::vector<cplx> pos, vel;
  std::vector<double> mass;  // > 0, constant
  double G = 1.0;
  double delta = 0.01;
  double dt = 1e-3;

  std::size_t size() const { return pos.size(); }
};

// Uniform-density disc sample rotating as a rigid body with angular
// velocity omega; equal masses summing to total_mass.
GravitySystem init_rotating_disc(int n, double radius, double omega, std::uint64_t seed,
                                 double total_mass = 1.0);

// Smoothed accelerations a_i = G sum_j m_j / sqrt(delta^2 + r_ij^2) directed
// along r_ij (attractive).
std::vector<cplx> gravity_forces(const GravitySystem& sys, FmmEngine& engine,
                                 EvalResult* info = nullptr);

// Velocity Stoermer-Verlet (kick-drift-kick). Takes the accelerations at the
// current positions and returns the accelerations at the new positions, so
// one force evaluation is spent per step.
std::vector<cplx> stormer_verlet_step(GravitySystem& sys, const std::vector<cplx>& accel,
                                      FmmEngine& engine, EvalResult* info = nullptr);

// --- impulsively started cylinder flow ---------------------------------------

struct CylinderFlow {
  VortexSystem vortices;
  double R = 1.0;            // cylinder radius
  double V_inf = 1.0;        // asymptotic flow speed along +x
  double omega_wall = 0.0;   // peripheral wall speed, counterclockwise > 0
  double nu = 1e-3;          // viscosity, sets the emission offset only
  int n_colloc = 64;
  int flagged_reflections = 0;  // stage positions pushed back outside the wall

  double emission_offset() const;
};

// Velocity field at `at` for vortices sitting at vortex_pos: free stream
// past the cylinder plus every vortex and its mirror image at R^2/conj(x_k)
// with strength -Gamma_k. self_eval wires eval k to physical vortex k so its
// own direct term is skipped (its mirror still acts).
std::vector<cplx> cylinder_field_at(const CylinderFlow& flow, FmmEngine& engine,
                                    const std::vector<cplx>& vortex_pos,
                                    const std::vector<cplx>& at, bool self_eval,
                                    EvalResult* info = nullptr);

std::vector<cplx> cylinder_velocities(const CylinderFlow& flow, FmmEngine& engine,
                                      EvalResult* info = nullptr);

std::vector<cplx> wall_collocation_points(const CylinderFlow& flow);
// Radial / tangential velocity components at the collocation points.
std::vector<double> wall_radial_velocity(const CylinderFlow& flow, FmmEngine& engine);
std::vector<double> wall_tangential_slip(const CylinderFlow& flow, FmmEngine& engine);

// Places one vortex per collocation angle on the circle R + emission_offset
// and solves the dense system that cancels the tangential slip (relative to
// the rotating wall) at the collocation points. The slip and the influence
// matrix are evaluated directly; the point count is small.
void emit_boundary_vortices(CylinderFlow& flow);

// Classical RK4 on the vortex positions; mirrors are regenerated at every
// stage. A stage position inside the cylinder is reflected to R(1 + 1e-9)
// and counted in flagged_reflections.
void rk4_convect(CylinderFlow& flow, FmmEngine& engine);

}  // namespace fmm::sims
