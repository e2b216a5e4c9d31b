#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "glsharp/energy.hpp"
#include "glsharp/geometry.hpp"

namespace glsharp {

enum class InitKind {
    smooth,  ///< boundary data followed by Jacobi smoothing of the free nodes
    random,  ///< smooth start plus seeded noise on the free nodes
    given,   ///< the supplied field as is
};

struct SolveOptions {
    /// Max-norm of the GL residual at free nodes; <= 0 selects default_tolerance(grid).
    double tol = 0;
    int max_iters = 20000;
    /// Number of L-BFGS correction pairs.
    int memory = 8;
    InitKind init = InitKind::smooth;
    int jacobi_sweeps = 50;
    /// Number of starts: the first uses `init`, the rest are random. The lowest energy wins.
    int inits = 1;
    double noise = 0.5;
    std::uint64_t seed = 1;
    /// Further starting fields tried alongside the regular ones (boundary values are reset).
    std::vector<VectorField> extra_inits;
    bool record_history = false;
};

struct SolveReport {
    EnergyBreakdown energy;
    int iterations = 0;
    double residual = 0;
    double tol = 0;
    bool converged = false;
    double wall_time = 0;
    double min_modulus = 0;
    Vec3 min_location;
    double max_modulus = 0;
    /// |u| at the origin by multilinear interpolation (lattices only, NaN otherwise).
    double center_modulus = 0;
    int best_start = 0;
    /// Energy after each accepted step (when requested).
    std::vector<double> history;
};

struct SolveResult {
    VectorField u;
    SolveReport report;
};

/// 1e-6 / h^2 for grid spacing h.
double default_tolerance(const Grid& grid);

/**
 * Minimizes E_eps over fields agreeing with g on the fixed nodes (the grid
 * boundary by default). Never throws on non-convergence: the best iterate is
 * returned with report.converged = false.
 */
SolveResult minimize_dirichlet(const VectorField& g, double eps, const SolveOptions& opts = {},
                               std::span<const std::uint8_t> fixed = {});

/// Same for the weighted energy F_eps with potential weight p.
SolveResult minimize_weighted(const VectorField& g, double eps, std::span<const double> p,
                              const SolveOptions& opts = {}, std::span<const std::uint8_t> fixed = {});

struct EtaRow {
    double eps = 0;
    double energy = 0;
    double ratio = 0;      ///< E / |ln eps|
    double center = 0;     ///< |u(0)|
    bool premise = false;  ///< E <= gamma |ln eps|
    bool converged = false;
    double residual = 0;
    std::string error;
};

/// Minimizers on the given ball lattice for boundary data g and each eps (decreasing).
std::vector<EtaRow> eta_sweep(const LatticePtr& ball, const std::function<cplx(const Vec3&)>& g,
                              std::span<const double> eps_list, double gamma, const SolveOptions& opts = {});

/// CSV with columns eps,E,Eratio,u0,premise,converged.
void write_eta_csv(std::ostream& out, std::span<const EtaRow> rows);

}  // namespace glsharp
