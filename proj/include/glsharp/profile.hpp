#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

#include "glsharp/geometry.hpp"

namespace glsharp {

/**
 * Degree-one radial vortex profile: f'' + f'/r - f/r^2 + (1 - f^2) f = 0,
 * f(0) = 0, f(inf) = 1. Sampled on a uniform radial grid up to r_max; beyond
 * r_max the far-field expansion 1 - 1/(2r^2) - 9/(8r^4) is used.
 */
struct Profile {
    std::vector<double> r;
    std::vector<double> f;
    std::vector<double> df;
    double slope = 0;     ///< f'(0) found by shooting
    double r_max = 0;
    double residual = 0;  ///< max |ODE residual| by 4th-order differences on the samples

    double value(double radius) const;
    double derivative(double radius) const;
};

/// Far-field expansion of the profile.
double profile_far_field(double r);

/// Shooting on f'(0). Bisection stops when the slope bracket is narrower than tol.
Profile solve_profile(double r_max = 20, double tol = 1e-10, double dr = 1e-3);

/// Two-column CSV (r, f).
void write_profile_csv(std::ostream& out, const Profile& p);

/// Vortex of degree +-1 with core size eps centered at `center`:
/// f(|x' - c'| / eps) ((x' - c') / |x' - c'|)^degree, using only the first two coordinates.
cplx vortex_value(const Profile& p, const Vec3& x, const Vec3& center = {}, double eps = 1, int degree = 1);

/// U(x) = f(|x|) x/|x| on 2D grids, V(x, z) = U(x) on 3D grids.
VectorField canonical_map(const Profile& p, GridPtr grid);

/**
 * Vortex/antivortex pair on S_R, both zeros on the equator at geodesic distance
 * `separation` apart, centered on (R, 0, 0): the +1 zero lies at positive y.
 * Phases come from the stereographic coordinate about the midpoint, moduli
 * from the profile at chordal distance / core.
 */
cplx sphere_dipole_value(const Profile& p, const Vec3& x, double R, double separation, double core = 1);
VectorField sphere_dipole(const Profile& p, const SpherePtr& sphere, double separation, double core = 1);

/// Zeros (+1, -1) of the sphere dipole.
std::array<Vec3, 2> sphere_dipole_zeros(double R, double separation);

/**
 * e2(rho) = E(U; D_rho), the planar energy of the canonical vortex on a disc,
 * from a cumulative radial quadrature table.
 */
class DiscEnergyTable {
public:
    explicit DiscEnergyTable(const Profile& p, double max_radius, double dr = 5e-3);
    double operator()(double rho) const;
    double max_radius() const { return dr_ * (cumulative_.size() - 1); }

private:
    double density(double r) const;
    const Profile* profile_;
    double dr_;
    std::vector<double> cumulative_;
};

struct GrowthRateResult {
    std::vector<double> R;
    std::vector<double> E;
    std::vector<double> ratio;      ///< E / (R ln R)
    std::vector<double> residual;   ///< E - (a R ln R + b R)
    double a = 0;
    double b = 0;
};

/// E(V; B_R) through the slab reduction int_{-R}^{R} e2(sqrt(R^2 - z^2)) dz.
double slab_energy(const DiscEnergyTable& e2, double R);

/// Least-squares fit of E(V; B_R) = a R ln R + b R over the given radii.
GrowthRateResult growth_rate(const Profile& p, std::span<const double> radii);

}  // namespace glsharp
