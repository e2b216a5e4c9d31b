#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "glsharp/bad_discs.hpp"
#include "glsharp/geometry.hpp"
#include "glsharp/relax.hpp"

namespace glsharp {

// -- stereographic transplant ------------------------------------------------------

/**
 * Chart between a geodesic disc of S_R and the planar unit disc: the disc
 * center is rotated to the south pole, projected stereographically from the
 * north pole and scaled by t = tan(rho / 2R). Under this chart
 * E(u; disc) = F_eps(U; D_1) with eps = 1/(2 R t) and p(y) = (1 + t^2 |y|^2)^-2.
 */
struct TransplantChart {
    SphericalDisc disc;
    double sphere_radius = 1;
    double t = 0;
    double eps = 0;
    Mat3 to_south{};
    Mat3 from_south{};
    LatticePtr plane;
    std::vector<double> weight;
    double weight_min = 1;
    bool gate_ok = true;  ///< rho / R < 1/10

    Vec3 to_sphere(const Vec3& y) const;
    Vec3 to_plane(const Vec3& x) const;
};

/// Throws invalid_argument when rho/R >= 1/10 unless `enforce_gate` is false.
TransplantChart make_chart(const SphericalDisc& disc, double sphere_radius, double plane_h, bool enforce_gate = true);

/// U(y) = u(S^-1(t y)) on the chart lattice.
VectorField transplant(const std::function<cplx(const Vec3&)>& u, const TransplantChart& chart);
VectorField transplant(const VectorField& u_sphere, const TransplantChart& chart);

/// Copy of `base` (a sphere field) with the nodes inside the chart disc replaced by U.
VectorField inverse_transplant(const VectorField& U, const TransplantChart& chart, const VectorField& base);

// -- filling a good disc --------------------------------------------------------------

struct FillOptions {
    double plane_h = 0;        ///< <= 0 picks min(0.02, eps/3)
    bool enforce_gate = true;
    double circle_constant = 2 * pi;  ///< c1 in the circle-energy premise E^(T) <= c1 / rho
    SolveOptions solve;
};

struct FillResult {
    TransplantChart chart;
    VectorField plane_field;      ///< minimizer of F_eps on D_1
    double energy = 0;            ///< F_eps of the minimizer = E^(T)(v; disc)
    double data_energy = 0;       ///< F_eps of the transplanted data = E^(T)(u; disc)
    double circle_energy = 0;
    bool circle_bound_ok = false;
    double min_modulus = 0;
    SolveReport solve;

    /// v at a point of S_R inside the disc.
    cplx value(const Vec3& x) const;
};

/// Minimizes the tangential energy on the disc with u's boundary values, via the
/// transplant. Refuses (nonzero_winding) when u has nonzero degree on the boundary.
FillResult fill_spherical_disc(const VectorField& u_sphere, const SphericalDisc& disc, const FillOptions& opts = {});

// -- cone extension ----------------------------------------------------------------------

/// U = V W at (x', z) with W = w(H x'/z) inside the cone (H/R)|x'| < z, W = 1 outside, w = u/v.
cplx cone_value(const std::function<cplx(double, double)>& u, const std::function<cplx(double, double)>& v,
                double R, double H, double x1, double x2, double z);

struct ConeResult {
    VectorField U;  ///< on the cylinder D_R x [0, H]
    double energy = 0;
    double potential = 0;
    double energy_u = 0, energy_v = 0;
    double potential_u = 0, potential_v = 0;
    /// E(U) / ((H + R^2/H)(E(u) + E(v))).
    double c_measured = 0;
    /// potential(U) / (H (int (1-|u|^2)^2 + int (1-|v|^2)^2)).
    double c_potential = 0;
};

/// u and v live on the same disc lattice and agree on its boundary nodes.
ConeResult cone_extension(const VectorField& u, const VectorField& v, double H, double hz);

// -- spherical cylinder map ---------------------------------------------------------------

/// Psi(y) = ((y3 + R - H)/R) (y1, y2, sqrt(R^2 - y1^2 - y2^2)).
Vec3 psi(const Vec3& y, double R, double H);
Vec3 psi_inverse(const Vec3& x, double R, double H);

/// Pulls a cylinder-lattice field back to the target lattice: value at x is U(Psi^-1(x)).
VectorField map_from_cylinder(const VectorField& U_cylinder, double R, double H, const LatticePtr& target);

// -- lifting and harmonic extension ---------------------------------------------------------

/// V = modulus * exp(i phase) on a sphere grid with a single-valued phase.
struct SpherePhase {
    SpherePtr grid;
    std::vector<double> modulus;
    std::vector<double> phase;
    double min_modulus = 0;
    /// max |exp(i phase) - V/|V|| over nodes with |V| >= 7/8.
    double lifting_error = 0;

    double modulus_at(const Vec3& direction) const;
    double phase_at(const Vec3& direction) const;
};

/// Spanning-tree unwrapping with a plaquette and polar-cap audit. Throws
/// lifting_defect if any elementary loop winds.
SpherePhase lift_phase(const VectorField& V);

struct HarmonicExtension {
    std::vector<double> phi;  ///< per lattice node; defined on the core and its Dirichlet neighbours
    double residual = 0;      ///< max discrete Laplace residual on core nodes
    int iterations = 0;
    double dirichlet = 0;     ///< 1/2 sum coef (Phi_a - Phi_b)^2 over edges touching the core
    double bound = 0;         ///< (R'/4) int_S |grad_T phi|^2
};

/// Discrete harmonic Phi on the `core` nodes of a lattice with Dirichlet values
/// phase(x/|x|) on lattice neighbours outside the core (conjugate gradients).
HarmonicExtension harmonic_phase_extension(const LatticeGrid& lattice, const NodeMask& core, const SpherePhase& phase,
                                           double core_radius, double tol = 1e-10);

// -- annulus interpolation -----------------------------------------------------------------

/// U at radius r in [R_out - H, R_out] from the lifting on S_{R_out}.
cplx annulus_value(const SpherePhase& lift, const Vec3& x, double R_out, double H);

/// Semi-analytic energy pieces of the interpolation on B_{R_out} minus B_{R_out - H}.
struct AnnulusPieces {
    double radial = 0;       ///< 1/2 int |d_r rho|^2
    double modulus = 0;      ///< 1/2 int |grad_T rho|^2
    double phase = 0;        ///< 1/2 int rho^2 |grad_T phi|^2
    double potential = 0;    ///< 1/4 int (1 - rho^2)^2
    double total() const { return radial + modulus + phase + potential; }
};
AnnulusPieces annulus_pieces(const SpherePhase& lift, double R_out, double H);

// -- the full competitor -------------------------------------------------------------------------

struct CompetitorOptions {
    double alpha = 0;        ///< <= 0 selects default_alpha(gamma)
    double h = 1;            ///< ball lattice spacing
    bool enforce_gate = true;
    PipelineOptions bad_discs;
    FillOptions fill;
};

struct CompetitorReport {
    double R = 0, alpha = 0, H = 0;
    double total = 0, shell = 0, annulus = 0, core = 0;
    double bookkeeping_defect = 0;     ///< |total - sum of regions| / total
    double tangential_energy = 0;      ///< E^(T)(u; S_R)
    double inner_tangential = 0;       ///< E^(T)(V; S_{R-H})
    double sigma = 0;                  ///< core / (R E^(T))
    double sigma_core_radius = 0;      ///< core / ((R - 2H) E^(T))
    double error_constant = 0;         ///< (shell + annulus) / (R^alpha ln R)
    double harmonic_bound = 0;         ///< (R'/4) int |grad_T phi|^2
    double harmonic_residual = 0;
    double lifting_error = 0;
    double min_inner_modulus = 0;
    AnnulusPieces annulus_pieces;
    std::vector<bool> gate_ok;
    std::vector<double> fill_min_modulus;
    std::vector<double> fill_energy;
    std::vector<double> fill_data_energy;
    nlohmann::json bad_discs;
};

struct CompetitorResult {
    VectorField U;
    CompetitorReport report;
    NodeMask shell, annulus, core;
};

/// Builds the comparison map on a ball lattice of radius R = u's sphere radius.
CompetitorResult competitor(const VectorField& u_sphere, double gamma, double lambda, const CompetitorOptions& opts = {});

nlohmann::json to_json(const CompetitorReport& r);
nlohmann::json to_json(const AnnulusPieces& p);

}  // namespace glsharp
