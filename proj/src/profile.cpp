#include "glsharp/profile.hpp"

#include <array>
#include <cmath>
#include <ostream>
#include <tuple>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint/stepper/runge_kutta4.hpp>

namespace glsharp {

namespace {

using State = std::array<long double, 2>;

void profile_rhs(const State& x, State& dxdr, long double r) {
    dxdr[0] = x[1];
    dxdr[1] = -x[1] / r + x[0] / (r * r) - (1 - x[0] * x[0]) * x[0];
}

enum class Shot { low, high };

struct Trajectory {
    std::vector<long double> f, df;
};

// Odd power series f = sum a_k r^k about the origin, from the recurrence
// ((k+2)^2 - 1) a_{k+2} = -a_k + [f^3]_k.
std::array<long double, 10> series_coefficients(long double s) {
    std::array<long double, 10> a{};
    a[1] = s;
    for (int k = 1; k + 2 < 10; k += 2) {
        long double cube = 0;
        for (int i = 1; i <= k; i += 2)
            for (int j = 1; i + j <= k; j += 2)
                if ((k - i - j) % 2 == 1) cube += a[i] * a[j] * a[k - i - j];
        a[k + 2] = (-a[k] + cube) / ((k + 2) * (k + 2) - 1);
    }
    return a;
}

State series(const std::array<long double, 10>& a, long double r) {
    State x{0, 0};
    for (int k = 9; k >= 1; k -= 2) {
        x[0] += a[k] * std::pow(r, k);
        x[1] += k * a[k] * std::pow(r, k - 1);
    }
    return x;
}

// Integrates from node `start` to r_max. Overshooting 1 means the trajectory
// is too high, turning back down means it is too low.
Shot shoot(long start, State x, double r_max, double dr, Trajectory* keep) {
    boost::numeric::odeint::runge_kutta4<State, long double, State, long double> stepper;
    const long double h = dr;
    const long n = std::lround(r_max / dr);
    const int substeps = 4;
    for (long i = start; i < n; ++i) {
        for (int sub = 0; sub < substeps; ++sub) stepper.do_step(profile_rhs, x, i * h + sub * h / substeps, h / substeps);
        if (keep) {
            keep->f.push_back(x[0]);
            keep->df.push_back(x[1]);
        }
        if (x[0] >= 1) return Shot::high;
        if (x[1] <= 0) return Shot::low;
    }
    return x[0] > profile_far_field(r_max) ? Shot::high : Shot::low;
}

double hermite(double t, double h, double f0, double f1, double d0, double d1) {
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * f0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * f1 + (t3 - t2) * h * d1;
}

double hermite_slope(double t, double h, double f0, double f1, double d0, double d1) {
    const double t2 = t * t;
    return ((6 * t2 - 6 * t) * f0 + (-6 * t2 + 6 * t) * f1) / h + (3 * t2 - 4 * t + 1) * d0 + (3 * t2 - 2 * t) * d1;
}

}  // namespace

double profile_far_field(double r) {
    const double r2 = r * r;
    return 1 - 1 / (2 * r2) - 9 / (8 * r2 * r2);
}

double Profile::value(double radius) const {
    if (radius <= 0) return 0;
    if (radius >= r_max) return profile_far_field(radius);
    const double h = r[1] - r[0];
    const auto i = std::min(static_cast<std::size_t>(radius / h), r.size() - 2);
    return hermite((radius - r[i]) / h, h, f[i], f[i + 1], df[i], df[i + 1]);
}

double Profile::derivative(double radius) const {
    if (radius <= 0) return slope;
    if (radius >= r_max) {
        const double r3 = radius * radius * radius;
        return 1 / r3 + 9 / (2 * r3 * radius * radius);
    }
    const double h = r[1] - r[0];
    const auto i = std::min(static_cast<std::size_t>(radius / h), r.size() - 2);
    return hermite_slope((radius - r[i]) / h, h, f[i], f[i + 1], df[i], df[i + 1]);
}

Profile solve_profile(double r_max, double tol, double dr) {
    if (!(r_max >= 20)) throw Error(ErrorKind::invalid_argument, "profile needs r_max >= 20");
    if (!(tol > 0 && tol <= 1e-8)) throw Error(ErrorKind::invalid_argument, "profile tolerance must lie in (0, 1e-8]");
    if (!(dr > 0 && dr <= 1e-2)) throw Error(ErrorKind::invalid_argument, "profile step must lie in (0, 1e-2]");

    const long n = std::lround(r_max / dr);
    const long origin = std::max(1L, std::lround(std::ceil(0.05 / dr)));
    const long double h = dr;

    // Trajectories are parametrized by a shift t: of f'(0) on the first
    // segment (series start), of f' at the restart node afterwards.
    long start = origin;
    State anchor{};
    auto initial = [&](long double t) {
        if (start == origin) return series(series_coefficients(t), start * h);
        return State{anchor[0], anchor[1] + t};
    };
    auto bisect = [&](long double lo, long double hi) {
        for (int it = 0; it < 200; ++it) {
            const long double mid = 0.5L * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            (shoot(start, initial(mid), r_max, dr, nullptr) == Shot::high ? hi : lo) = mid;
        }
        return std::pair{lo, hi};
    };

    long double lo = 0.3L, hi = 0.9L;
    if (shoot(start, initial(lo), r_max, dr, nullptr) != Shot::low ||
        shoot(start, initial(hi), r_max, dr, nullptr) != Shot::high) {
        throw Error(ErrorKind::bracket_failure, "shooting bracket [0.3, 0.9] does not straddle the profile slope");
    }
    std::tie(lo, hi) = bisect(lo, hi);

    Profile p;
    p.r_max = r_max;
    p.slope = static_cast<double>(lo);
    Trajectory tr;
    {
        const auto a = series_coefficients(lo);
        for (long i = 0; i <= origin; ++i) {
            const State x = series(a, i * h);
            tr.f.push_back(x[0]);
            tr.df.push_back(x[1]);
        }
    }
    // The unstable far-field mode grows like exp(sqrt(2) r), so a single shot
    // cannot resolve large r_max. Keep the part of the trajectory where the two
    // bracketing shots still agree and restart from there.
    while (true) {
        Trajectory a, b;
        shoot(start, initial(lo), r_max, dr, &a);
        shoot(start, initial(hi), r_max, dr, &b);
        std::size_t agree = 0;
        while (agree < a.f.size() && agree < b.f.size() && std::fabs(a.f[agree] - b.f[agree]) < 1e-16L) ++agree;
        const bool complete = static_cast<long>(a.f.size()) == n - start;
        if (complete && agree == a.f.size()) {
            tr.f.insert(tr.f.end(), a.f.begin(), a.f.end());
            tr.df.insert(tr.df.end(), a.df.begin(), a.df.end());
            break;
        }
        if (agree < 2) throw Error(ErrorKind::bracket_failure, "shooting restart made no progress");
        tr.f.insert(tr.f.end(), a.f.begin(), a.f.begin() + static_cast<long>(agree));
        tr.df.insert(tr.df.end(), a.df.begin(), a.df.begin() + static_cast<long>(agree));
        start += static_cast<long>(agree);
        anchor = {tr.f.back(), tr.df.back()};
        long double width = 1e-14L;
        while (shoot(start, initial(-width), r_max, dr, nullptr) != Shot::low ||
               shoot(start, initial(width), r_max, dr, nullptr) != Shot::high) {
            width *= 10;
            if (width > 1e-2L) throw Error(ErrorKind::bracket_failure, "no restart bracket at r = " + std::to_string(start * dr));
        }
        std::tie(lo, hi) = bisect(-width, width);
    }

    p.r.resize(n + 1);
    p.f.resize(n + 1);
    p.df.resize(n + 1);
    for (long i = 0; i <= n; ++i) {
        p.r[i] = i * dr;
        p.f[i] = static_cast<double>(tr.f[i]);
        p.df[i] = static_cast<double>(tr.df[i]);
    }

    long double worst = 0;
    for (long i = 2; i + 2 < n; ++i) {
        const long double r = i * h;
        const auto& f = tr.f;
        const long double d2 = (-f[i + 2] + 16 * f[i + 1] - 30 * f[i] + 16 * f[i - 1] - f[i - 2]) / (12 * h * h);
        const long double d1 = (-f[i + 2] + 8 * f[i + 1] - 8 * f[i - 1] + f[i - 2]) / (12 * h);
        const long double res = d2 + d1 / r - f[i] / (r * r) + (1 - f[i] * f[i]) * f[i];
        worst = std::max(worst, std::fabs(res));
    }
    p.residual = static_cast<double>(worst);
    if (p.residual > tol) {
        throw Error(ErrorKind::not_converged, "profile residual " + std::to_string(p.residual) + " above tolerance");
    }
    return p;
}

void write_profile_csv(std::ostream& out, const Profile& p) {
    out << "r,f\n";
    out.precision(17);
    for (std::size_t i = 0; i < p.r.size(); ++i) out << p.r[i] << ',' << p.f[i] << '\n';
}

cplx vortex_value(const Profile& p, const Vec3& x, const Vec3& center, double eps, int degree) {
    const double dx = x.x - center.x, dy = x.y - center.y;
    const double rho = std::hypot(dx, dy);
    if (rho == 0) return {0, 0};
    const cplx phase{dx / rho, dy / rho};
    return p.value(rho / eps) * (degree >= 0 ? std::pow(phase, degree) : std::pow(std::conj(phase), -degree));
}

VectorField canonical_map(const Profile& p, GridPtr grid) {
    const auto pos = grid->positions();
    std::vector<cplx> v(pos.size());
    for (std::size_t i = 0; i < pos.size(); ++i) v[i] = vortex_value(p, pos[i]);
    return VectorField(std::move(grid), std::move(v));
}

std::array<Vec3, 2> sphere_dipole_zeros(double R, double separation) {
    const double b = separation / (2 * R);
    return {Vec3{R * std::cos(b), R * std::sin(b), 0}, Vec3{R * std::cos(b), -R * std::sin(b), 0}};
}

cplx sphere_dipole_value(const Profile& p, const Vec3& x, double R, double separation, double core) {
    if (!(separation > 0 && separation < pi * R)) throw Error(ErrorKind::invalid_argument, "dipole separation out of range");
    const auto zeros = sphere_dipole_zeros(R, separation);
    const Vec3 n = normalized(x);
    const double denom = 1 + n.x;
    const double modulus = p.value(norm(x - zeros[0]) / core) * p.value(norm(x - zeros[1]) / core);
    if (denom < 1e-14) return modulus;  // antipode of the midpoint, where the phase tends to 1
    const cplx zeta{n.y / denom, n.z / denom};
    const double t = std::tan(separation / (4 * R));
    const cplx a = zeta - t, b = zeta + t;
    if (std::abs(a) == 0 || std::abs(b) == 0) return 0;
    return modulus * (a / std::abs(a)) * std::conj(b / std::abs(b));
}

VectorField sphere_dipole(const Profile& p, const SpherePtr& sphere, double separation, double core) {
    const double R = sphere->radius();
    return VectorField::from_function(sphere, [&](const Vec3& x) { return sphere_dipole_value(p, x, R, separation, core); });
}

DiscEnergyTable::DiscEnergyTable(const Profile& p, double max_radius, double dr) : profile_(&p), dr_(dr) {
    if (!(max_radius > 0 && dr > 0)) throw Error(ErrorKind::invalid_argument, "disc energy table needs positive extent");
    const auto n = static_cast<std::size_t>(std::ceil(max_radius / dr));
    cumulative_.assign(n + 1, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double a = k * dr, b = a + dr;
        cumulative_[k + 1] = cumulative_[k] + dr / 6 * (density(a) + 4 * density(0.5 * (a + b)) + density(b));
    }
}

double DiscEnergyTable::density(double r) const {
    if (r == 0) return 0;
    const double f = profile_->value(r), d = profile_->derivative(r);
    const double w = 1 - f * f;
    return pi * (d * d + f * f / (r * r)) * r + 0.5 * pi * w * w * r;
}

double DiscEnergyTable::operator()(double rho) const {
    if (rho <= 0) return 0;
    if (rho > max_radius() * (1 + 1e-12)) throw Error(ErrorKind::out_of_range, "disc energy table too short");
    const auto k = std::min(static_cast<std::size_t>(rho / dr_), cumulative_.size() - 1);
    const double a = k * dr_;
    const double rest = rho - a;
    if (rest <= 0) return cumulative_[k];
    return cumulative_[k] + rest / 6 * (density(a) + 4 * density(a + 0.5 * rest) + density(rho));
}

double slab_energy(const DiscEnergyTable& e2, double R) {
    // z = R sin t removes the square-root endpoint behavior
    auto integrand = [&](double t) {
        const double c = std::cos(t);
        return e2(R * c) * R * c;
    };
    return 2 * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, pi / 2, 15, 1e-12);
}

GrowthRateResult growth_rate(const Profile& p, std::span<const double> radii) {
    if (radii.size() < 2) throw Error(ErrorKind::invalid_argument, "growth rate needs at least two radii");
    for (std::size_t i = 1; i < radii.size(); ++i) {
        if (!(radii[i] > radii[i - 1])) throw Error(ErrorKind::invalid_argument, "growth-rate radii must increase");
    }
    if (!(radii.front() > 1)) throw Error(ErrorKind::invalid_argument, "growth-rate radii must exceed 1");
    DiscEnergyTable e2(p, radii.back());
    GrowthRateResult g;
    // normal equations for E = a x + b y with x = R ln R, y = R
    double sxx = 0, sxy = 0, syy = 0, sxe = 0, sye = 0;
    for (double R : radii) {
        const double E = slab_energy(e2, R);
        g.R.push_back(R);
        g.E.push_back(E);
        g.ratio.push_back(E / (R * std::log(R)));
        const double x = R * std::log(R), y = R;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
        sxe += x * E;
        sye += y * E;
    }
    const double det = sxx * syy - sxy * sxy;
    g.a = (sxe * syy - sye * sxy) / det;
    g.b = (sxx * sye - sxy * sxe) / det;
    for (std::size_t i = 0; i < g.R.size(); ++i) {
        g.residual.push_back(g.E[i] - (g.a * g.R[i] * std::log(g.R[i]) + g.b * g.R[i]));
    }
    return g;
}

}  // namespace glsharp
