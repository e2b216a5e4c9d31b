#pragma once

#include <span>
#include <vector>

#include "glsharp/geometry.hpp"

namespace glsharp {

/// Closed loop of samples (last == first).
struct Loop {
    std::vector<cplx> samples;

    /// Appends the first sample to an open sequence of at least 8 samples.
    static Loop closed(std::vector<cplx> samples);
    double min_modulus() const;
};

/// Largest accepted phase increment between consecutive samples.
inline constexpr double default_max_jump = 3 * pi / 4;

/**
 * (1/2pi) times the sum of principal-value phase increments. Throws
 * degree_undefined on a zero sample and under_resolved when an increment
 * exceeds max_jump.
 */
int winding_number(const Loop& loop, double max_jump = default_max_jump);

/// Samples of a planar lattice field along the circle |x - center| = radius.
Loop planar_circle_loop(const VectorField& u, const Vec3& center, double radius, int samples);

/// Degree of a sphere field on the boundary of a geodesic disc. The trace is
/// refined by doubling (up to 4 rounds) while it is under-resolved.
int degree_on_sphere(const VectorField& u, const SphericalDisc& disc, double max_jump = default_max_jump);

}  // namespace glsharp
