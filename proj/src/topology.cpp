#include "glsharp/topology.hpp"

#include <cmath>
#include <limits>

namespace glsharp {

Loop Loop::closed(std::vector<cplx> samples) {
    if (samples.size() < 8) throw Error(ErrorKind::invalid_argument, "a loop needs at least 8 samples");
    samples.push_back(samples.front());
    return Loop{std::move(samples)};
}

double Loop::min_modulus() const {
    double m = std::numeric_limits<double>::infinity();
    for (const cplx& z : samples) m = std::min(m, std::abs(z));
    return m;
}

int winding_number(const Loop& loop, double max_jump) {
    const auto& s = loop.samples;
    if (s.size() < 9 || s.front() != s.back()) throw Error(ErrorKind::invalid_argument, "loop must be closed with at least 8 samples");
    if (!(loop.min_modulus() > 0)) throw Error(ErrorKind::degree_undefined, "loop passes through a zero");
    double total = 0;
    for (std::size_t k = 1; k < s.size(); ++k) {
        const double step = std::arg(s[k] * std::conj(s[k - 1]));
        if (std::abs(step) > max_jump) {
            throw Error(ErrorKind::under_resolved, "phase jump " + std::to_string(step) + " between loop samples");
        }
        total += step;
    }
    return static_cast<int>(std::lround(total / (2 * pi)));
}

Loop planar_circle_loop(const VectorField& u, const Vec3& center, double radius, int samples) {
    const auto* lat = dynamic_cast<const LatticeGrid*>(&u.grid());
    if (!lat) throw Error(ErrorKind::invalid_argument, "planar loops need a lattice field");
    std::vector<cplx> v;
    for (int k = 0; k < samples; ++k) {
        const double t = 2 * pi * k / samples;
        const Vec3 p = center + Vec3{radius * std::cos(t), radius * std::sin(t), 0};
        const auto z = lat->interpolate(u.values(), p);
        if (!z) throw Error(ErrorKind::out_of_range, "loop leaves the lattice");
        v.push_back(*z);
    }
    return Loop::closed(std::move(v));
}

int degree_on_sphere(const VectorField& u, const SphericalDisc& disc, double max_jump) {
    const auto* sg = dynamic_cast<const SphereGrid*>(&u.grid());
    if (!sg) throw Error(ErrorKind::invalid_argument, "degree_on_sphere needs a sphere field");
    int samples = default_trace_samples(*sg, disc);
    for (int round = 0;; ++round) {
        try {
            return winding_number(Loop{circle_trace(u, disc, samples)}, max_jump);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::under_resolved || round == 4) throw;
            samples *= 2;
        }
    }
}

}  // namespace glsharp
