#include "glsharp/relax.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <ostream>
#include <random>

namespace glsharp {

namespace {

struct Problem {
    const Grid* grid = nullptr;
    double eps = 1;
    std::vector<double> pot;  // w_i p_i / (4 eps^2)
    std::vector<std::uint8_t> fixed;
    std::vector<std::uint32_t> free;
    std::vector<double> diag;  // preconditioner
};

Problem make_problem(const Grid& grid, double eps, std::span<const double> p, std::span<const std::uint8_t> fixed) {
    if (!(eps > 0)) throw Error(ErrorKind::invalid_argument, "eps must be positive");
    const std::size_t n = grid.size();
    if (!p.empty() && p.size() != n) throw Error(ErrorKind::invalid_argument, "weight size mismatch");
    if (!fixed.empty() && fixed.size() != n) throw Error(ErrorKind::invalid_argument, "fixed mask size mismatch");
    Problem pr;
    pr.grid = &grid;
    pr.eps = eps;
    pr.pot.resize(n);
    const auto w = grid.weights();
    for (std::size_t i = 0; i < n; ++i) {
        const double pi_ = p.empty() ? 1.0 : p[i];
        if (!(pi_ > 0) || !std::isfinite(pi_)) throw Error(ErrorKind::invalid_argument, "potential weight must be positive");
        pr.pot[i] = w[i] * pi_ / (4 * eps * eps);
    }
    pr.fixed.assign(fixed.begin(), fixed.end());
    if (pr.fixed.empty()) pr.fixed.assign(grid.boundary().begin(), grid.boundary().end());
    for (std::size_t i = 0; i < n; ++i) {
        if (!pr.fixed[i]) pr.free.push_back(static_cast<std::uint32_t>(i));
    }
    pr.diag.assign(n, 0.0);
    for (const Edge& e : grid.edges()) {
        pr.diag[e.a] += e.coef;
        pr.diag[e.b] += e.coef;
    }
    for (std::size_t i = 0; i < n; ++i) pr.diag[i] += 8 * pr.pot[i];
    return pr;
}

// Energy and its gradient (d/dRe + i d/dIm); the gradient vanishes on fixed nodes.
double energy_gradient(const Problem& pr, std::span<const cplx> u, std::vector<cplx>& g) {
    g.assign(u.size(), cplx{0, 0});
    long double e = 0;
    for (const Edge& ed : pr.grid->edges()) {
        const cplx d = u[ed.a] - u[ed.b];
        e += 0.5L * ed.coef * std::norm(d);
        g[ed.a] += ed.coef * d;
        g[ed.b] -= ed.coef * d;
    }
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double m = 1 - std::norm(u[i]);
        e += pr.pot[i] * m * m;
        g[i] -= 4 * pr.pot[i] * m * u[i];
    }
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (pr.fixed[i]) g[i] = 0;
    }
    return static_cast<double>(e);
}

double real_dot(std::span<const cplx> a, std::span<const cplx> b, std::span<const std::uint32_t> idx) {
    long double s = 0;
    for (auto i : idx) s += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    return static_cast<double>(s);
}

// E(u + a d) - E(u) = c[0] a + c[1] a^2 + c[2] a^3 + c[3] a^4.
std::array<double, 4> quartic(const Problem& pr, std::span<const cplx> u, std::span<const cplx> d) {
    long double c1 = 0, c2 = 0, c3 = 0, c4 = 0;
    for (const Edge& ed : pr.grid->edges()) {
        const cplx D = u[ed.a] - u[ed.b];
        const cplx del = d[ed.a] - d[ed.b];
        c1 += ed.coef * (D.real() * del.real() + D.imag() * del.imag());
        c2 += 0.5 * ed.coef * std::norm(del);
    }
    for (auto i : pr.free) {
        const double a = std::norm(u[i]);
        const double q1 = 2 * (u[i].real() * d[i].real() + u[i].imag() * d[i].imag());
        const double q2 = std::norm(d[i]);
        const double k = pr.pot[i];
        c1 += k * q1 * (2 * a - 2);
        c2 += k * (q2 * (2 * a - 2) + q1 * q1);
        c3 += k * 2 * q1 * q2;
        c4 += k * q2 * q2;
    }
    return {static_cast<double>(c1), static_cast<double>(c2), static_cast<double>(c3), static_cast<double>(c4)};
}

// First positive critical point of the quartic (a local minimum since the slope starts negative).
double exact_step(const std::array<double, 4>& c) {
    auto slope = [&](double a) { return c[0] + a * (2 * c[1] + a * (3 * c[2] + a * 4 * c[3])); };
    auto curv = [&](double a) { return 2 * c[1] + a * (6 * c[2] + a * 12 * c[3]); };
    double lo = 0, hi = 1;
    int grow = 0;
    while (slope(hi) < 0) {
        lo = hi;
        hi *= 2;
        if (++grow > 200) throw Error(ErrorKind::not_converged, "line search found no minimum along the direction");
    }
    double a = 0.5 * (lo + hi);
    for (int it = 0; it < 100; ++it) {
        const double s = slope(a);
        if (s < 0) lo = a;
        else hi = a;
        const double k = curv(a);
        double next = k > 0 ? a - s / k : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - a) <= 1e-15 * a) {
            a = next;
            break;
        }
        a = next;
    }
    return a;
}

double max_residual(const Problem& pr, std::span<const cplx> g) {
    const auto w = pr.grid->weights();
    double r = 0;
    for (auto i : pr.free) r = std::max(r, std::abs(g[i]) / w[i]);
    return r;
}

struct Run {
    std::vector<cplx> u;
    double energy = 0;
    double residual = 0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> history;
};

Run lbfgs(const Problem& pr, std::vector<cplx> u, const SolveOptions& opts, double tol) {
    const std::size_t n = u.size();
    Run run;
    std::vector<cplx> g, g_new, d(n), q(n);
    double e = energy_gradient(pr, u, g);
    struct Pair {
        std::vector<cplx> s, y;
        double rho;
    };
    std::deque<Pair> mem;
    const auto& fr = pr.free;
    if (opts.record_history) run.history.push_back(e);

    for (int it = 0;; ++it) {
        run.residual = max_residual(pr, g);
        run.iterations = it;
        if (run.residual <= tol) {
            run.converged = true;
            break;
        }
        if (it >= opts.max_iters) break;

        // two-loop recursion with the diagonal preconditioner as initial metric
        for (auto i : fr) q[i] = g[i];
        std::vector<double> alpha(mem.size());
        for (std::size_t k = mem.size(); k-- > 0;) {
            alpha[k] = mem[k].rho * real_dot(mem[k].s, q, fr);
            for (auto i : fr) q[i] -= alpha[k] * mem[k].y[i];
        }
        double scale = 1;
        if (!mem.empty()) {
            const auto& last = mem.back();
            long double yHy = 0;
            for (auto i : fr) yHy += std::norm(last.y[i]) / pr.diag[i];
            scale = 1 / (last.rho * static_cast<double>(yHy));
        }
        for (auto i : fr) q[i] *= scale / pr.diag[i];
        for (std::size_t k = 0; k < mem.size(); ++k) {
            const double b = mem[k].rho * real_dot(mem[k].y, q, fr);
            for (auto i : fr) q[i] += (alpha[k] - b) * mem[k].s[i];
        }
        std::fill(d.begin(), d.end(), cplx{0, 0});
        for (auto i : fr) d[i] = -q[i];
        if (!(real_dot(d, g, fr) < 0)) {
            mem.clear();
            for (auto i : fr) d[i] = -g[i] / pr.diag[i];
        }

        const auto c = quartic(pr, u, d);
        if (!(c[0] < 0)) break;  // no descent left at working precision
        const double a = exact_step(c);
        for (auto i : fr) u[i] += a * d[i];
        const double e_new = energy_gradient(pr, u, g_new);

        Pair pair{std::vector<cplx>(n), std::vector<cplx>(n), 0};
        for (auto i : fr) {
            pair.s[i] = a * d[i];
            pair.y[i] = g_new[i] - g[i];
        }
        const double sy = real_dot(pair.s, pair.y, fr);
        if (sy > 1e-300) {
            pair.rho = 1 / sy;
            mem.push_back(std::move(pair));
            if (static_cast<int>(mem.size()) > opts.memory) mem.pop_front();
        }
        g.swap(g_new);
        e = e_new;
        if (opts.record_history) run.history.push_back(e);
    }
    run.energy = e;
    run.u = std::move(u);
    return run;
}

void jacobi_smooth(const Problem& pr, std::vector<cplx>& u, int sweeps) {
    std::vector<cplx> num(u.size());
    std::vector<double> den(u.size());
    for (int s = 0; s < sweeps; ++s) {
        std::fill(num.begin(), num.end(), cplx{0, 0});
        std::fill(den.begin(), den.end(), 0.0);
        for (const Edge& e : pr.grid->edges()) {
            num[e.a] += e.coef * u[e.b];
            num[e.b] += e.coef * u[e.a];
            den[e.a] += e.coef;
            den[e.b] += e.coef;
        }
        for (auto i : pr.free) {
            if (den[i] > 0) u[i] = num[i] / den[i];
        }
    }
}

SolveResult solve(const VectorField& g, double eps, std::span<const double> p, const SolveOptions& opts,
                  std::span<const std::uint8_t> fixed) {
    const auto t0 = std::chrono::steady_clock::now();
    if (opts.max_iters < 1) throw Error(ErrorKind::invalid_argument, "max_iters must be at least 1");
    if (opts.inits < 1) throw Error(ErrorKind::invalid_argument, "at least one start is required");
    if (opts.memory < 1) throw Error(ErrorKind::invalid_argument, "L-BFGS memory must be at least 1");
    const Grid& grid = g.grid();
    const Problem pr = make_problem(grid, eps, p, fixed);
    const double tol = opts.tol > 0 ? opts.tol : default_tolerance(grid);

    std::vector<std::vector<cplx>> starts;
    std::vector<cplx> base(g.values().begin(), g.values().end());
    if (opts.init != InitKind::given) jacobi_smooth(pr, base, opts.jacobi_sweeps);
    for (int k = 0; k < opts.inits; ++k) {
        if (k == 0 && opts.init != InitKind::random) {
            starts.push_back(base);
            continue;
        }
        std::mt19937_64 rng(opts.seed + static_cast<std::uint64_t>(k));
        std::uniform_real_distribution<double> noise(-opts.noise, opts.noise);
        auto s = base;
        for (auto i : pr.free) s[i] += cplx{noise(rng), noise(rng)};
        starts.push_back(std::move(s));
    }
    for (const auto& extra : opts.extra_inits) {
        if (extra.size() != grid.size()) throw Error(ErrorKind::invalid_argument, "extra start lives on another grid");
        std::vector<cplx> s(extra.values().begin(), extra.values().end());
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (pr.fixed[i]) s[i] = g[i];
        }
        starts.push_back(std::move(s));
    }

    Run best;
    int best_k = -1;
    for (std::size_t k = 0; k < starts.size(); ++k) {
        Run r = lbfgs(pr, std::move(starts[k]), opts, tol);
        if (best_k < 0 || r.energy < best.energy) {
            best = std::move(r);
            best_k = static_cast<int>(k);
        }
    }

    SolveResult out{VectorField(g.grid_ptr(), std::move(best.u)), {}};
    auto& rep = out.report;
    rep.energy = p.empty() ? gl_energy(out.u, eps) : EnergyBreakdown{};
    if (!p.empty()) {
        const auto nodal = nodal_energy(out.u, eps, p);
        rep.energy.dirichlet = pairwise_sum(nodal.dirichlet);
        rep.energy.potential = pairwise_sum(nodal.potential);
        rep.energy.total = rep.energy.dirichlet + rep.energy.potential;
        rep.energy.eps = eps;
        rep.energy.region = "weighted";
    }
    rep.iterations = best.iterations;
    rep.residual = best.residual;
    rep.tol = tol;
    rep.converged = best.converged;
    rep.best_start = best_k;
    rep.history = std::move(best.history);
    rep.min_modulus = std::numeric_limits<double>::infinity();
    const auto pos = grid.positions();
    for (std::size_t i = 0; i < out.u.size(); ++i) {
        const double m = std::abs(out.u[i]);
        if (m < rep.min_modulus) {
            rep.min_modulus = m;
            rep.min_location = pos[i];
        }
        rep.max_modulus = std::max(rep.max_modulus, m);
    }
    if (const auto* lat = dynamic_cast<const LatticeGrid*>(&grid)) {
        rep.center_modulus = std::abs(lat->sample(out.u.values(), Vec3{}));
    } else {
        rep.center_modulus = std::numeric_limits<double>::quiet_NaN();
    }
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace

double default_tolerance(const Grid& grid) {
    const double h = grid.spacing();
    return 1e-6 / (h * h);
}

SolveResult minimize_dirichlet(const VectorField& g, double eps, const SolveOptions& opts,
                               std::span<const std::uint8_t> fixed) {
    return solve(g, eps, {}, opts, fixed);
}

SolveResult minimize_weighted(const VectorField& g, double eps, std::span<const double> p, const SolveOptions& opts,
                              std::span<const std::uint8_t> fixed) {
    if (p.size() != g.size()) throw Error(ErrorKind::invalid_argument, "weight size mismatch");
    return solve(g, eps, p, opts, fixed);
}

std::vector<EtaRow> eta_sweep(const LatticePtr& ball, const std::function<cplx(const Vec3&)>& g,
                              std::span<const double> eps_list, double gamma, const SolveOptions& opts) {
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        if (!(eps_list[i] > 0 && eps_list[i] < 1)) throw Error(ErrorKind::invalid_argument, "eps values must lie in (0, 1)");
        if (i > 0 && !(eps_list[i] < eps_list[i - 1])) throw Error(ErrorKind::invalid_argument, "eps list must decrease");
    }
    const auto data = VectorField::from_function(ball, g);
    std::vector<EtaRow> rows;
    for (double eps : eps_list) {
        EtaRow row;
        row.eps = eps;
        try {
            const auto res = minimize_dirichlet(data, eps, opts);
            row.energy = res.report.energy.total;
            row.ratio = row.energy / std::abs(std::log(eps));
            row.center = res.report.center_modulus;
            row.premise = row.energy <= gamma * std::abs(std::log(eps));
            row.converged = res.report.converged;
            row.residual = res.report.residual;
        } catch (const Error& e) {
            row.error = e.what();
        }
        rows.push_back(row);
    }
    return rows;
}

void write_eta_csv(std::ostream& out, std::span<const EtaRow> rows) {
    out << "eps,E,Eratio,u0,premise,converged\n";
    out.precision(12);
    for (const auto& r : rows) {
        out << r.eps << ',' << r.energy << ',' << r.ratio << ',' << r.center << ',' << (r.premise ? 1 : 0) << ','
            << (r.converged ? 1 : 0) << '\n';
    }
}

}  // namespace glsharp
