#pragma once

#include <span>
#include <string>
#include <vector>

#include "glsharp/geometry.hpp"

namespace glsharp {

struct EnergyBreakdown {
    double dirichlet = 0;  ///< 1/2 int |grad u|^2
    double potential = 0;  ///< 1/(4 eps^2) int p (1 - |u|^2)^2
    double total = 0;
    std::string region = "all";
    double eps = 1;
};

/**
 * Energy attributed to each node. Every edge contributes half of its Dirichlet
 * energy to each endpoint, so region energies are exactly additive over any
 * partition of the nodes.
 */
struct NodalEnergy {
    std::vector<double> dirichlet;
    std::vector<double> potential;
};

/// Nodal energy with an optional per-node potential weight p (defaults to 1).
NodalEnergy nodal_energy(const VectorField& u, double eps, std::span<const double> potential_weight = {});

/// E_eps(u; region) on any grid. On a sphere grid this is the tangential energy.
EnergyBreakdown gl_energy(const VectorField& u, double eps, std::span<const std::uint8_t> region = {},
                          std::string region_name = "all");

/// E_eps^(T)(u; region) for fields on a sphere grid.
EnergyBreakdown tangential_energy(const VectorField& u, double eps, std::span<const std::uint8_t> region = {},
                                  std::string region_name = "all");

/// F_eps(U; D_1) = int 1/2 |grad U|^2 + p/(4 eps^2) (1 - |U|^2)^2.
double weighted_energy(const VectorField& u, double eps, std::span<const double> p);

/// Delta u + p/eps^2 (1 - |u|^2) u at free nodes (zero at boundary nodes).
std::vector<cplx> gl_residual(const VectorField& u, double eps, std::span<const double> potential_weight = {},
                              std::span<const std::uint8_t> fixed = {});

double max_abs(std::span<const cplx> values);

/// Circle energy int_{C} 1/2 |d_s u|^2 + 1/(4 eps^2)(1 - |u|^2)^2 ds of a closed loop
/// sampled uniformly along a circle of the given length.
double loop_energy(std::span<const cplx> loop, double length, double eps);

/// Ordered samples (r, E(r), E'(r), e_T(r)).
struct ShellEnergyTrace {
    std::vector<double> r;
    std::vector<double> E;
    std::vector<double> dE;
    std::vector<double> eT;
};

struct TraceOptions {
    double eps = 1;
    int sphere_n_phi = 64;
    /// Width of the linear cutoff used to evaluate E(u; B_r), in units of h.
    double ramp_width = 2.0;
};

/// E(r) by smooth radial cutoff of the nodal energy, E'(r) by centered
/// differencing of E over the radii, e_T(r) by restriction to S_r.
ShellEnergyTrace shell_energy_trace(const VectorField& u, std::span<const double> radii, const TraceOptions& opts = {});

/// Ball energy with the same cutoff as `shell_energy_trace`.
double ball_energy(const VectorField& u, const NodalEnergy& nodal, double r, double ramp_width);

/// Indices k such that E(r_{k+1})/r_{k+1}^{N-2} drops below E(r_k)/r_k^{N-2} by more
/// than `slack` relative.
std::vector<std::size_t> monotonicity_check(const ShellEnergyTrace& trace, int dimension, double slack = 1e-3);

/// Indices where e_T(r) exceeds E'(r) by more than `slack` relative.
std::vector<std::size_t> tangential_bound_violations(const ShellEnergyTrace& trace, double slack);

struct HarmonicIdentityReport {
    double radius = 0;          ///< radius of the ball on which both sides are evaluated
    double lhs = 0;             ///< int_B |grad w|^2
    double rhs = 0;             ///< R/(N-1) int_S |grad_T w|^2
    double tangential = 0;      ///< int_S |grad_T w|^2
    double normal = 0;          ///< int_S |d_n w|^2
    double pohozaev_defect = 0; ///< |(N-2) int_B |grad w|^2 - R int_S (|grad_T w|^2 - |d_n w|^2)|
    double laplace_residual = 0;
};

struct HarmonicOptions {
    double residual_tol = 1e-8;
    /// Evaluation radius offset from the lattice radius, in units of h.
    double inset = 3.0;
};

/// Checks the Dirichlet-energy bound for harmonic functions and the Pohozaev
/// identity for the real part of `w` on a ball lattice. Throws when w is not
/// harmonic (7-point or 19-point discrete Laplacian above tolerance).
HarmonicIdentityReport harmonic_identities(const VectorField& w, const HarmonicOptions& opts = {});

}  // namespace glsharp
