#include "glsharp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <ostream>

namespace glsharp {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_argument: return "invalid_argument";
        case ErrorKind::out_of_range: return "out_of_range";
        case ErrorKind::not_converged: return "not_converged";
        case ErrorKind::degree_undefined: return "degree_undefined";
        case ErrorKind::under_resolved: return "under_resolved";
        case ErrorKind::pole_contact: return "pole_contact";
        case ErrorKind::too_energetic: return "too_energetic";
        case ErrorKind::growth_regime: return "growth_regime";
        case ErrorKind::no_qualifying_time: return "no_qualifying_time";
        case ErrorKind::nonzero_winding: return "nonzero_winding";
        case ErrorKind::lifting_defect: return "lifting_defect";
        case ErrorKind::bracket_failure: return "bracket_failure";
        case ErrorKind::no_solution: return "no_solution";
        case ErrorKind::io: return "io";
    }
    return "unknown";
}

const char* to_string(GridKind kind) {
    switch (kind) {
        case GridKind::disc: return "disc";
        case GridKind::annulus: return "annulus";
        case GridKind::ball: return "ball";
        case GridKind::shell: return "shell";
        case GridKind::cylinder: return "cylinder";
        case GridKind::sphere: return "sphere";
    }
    return "unknown";
}

double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

Vec3 normalized(const Vec3& a) {
    const double n = norm(a);
    if (n == 0) throw Error(ErrorKind::invalid_argument, "cannot normalize the zero vector");
    return a / n;
}

double angle_between(const Vec3& a, const Vec3& b) {
    return std::atan2(norm(cross(a, b)), dot(a, b));
}

Mat3 rotation_between(const Vec3& from, const Vec3& to) {
    const Vec3 f = normalized(from);
    const Vec3 t = normalized(to);
    const Vec3 v = cross(f, t);
    const double c = dot(f, t);
    if (c < -1 + 1e-14) {
        // Half turn about any axis orthogonal to f.
        Vec3 axis = std::abs(f.x) < 0.9 ? cross(f, Vec3{1, 0, 0}) : cross(f, Vec3{0, 1, 0});
        axis = normalized(axis);
        return {2 * axis.x * axis.x - 1, 2 * axis.x * axis.y, 2 * axis.x * axis.z,
                2 * axis.y * axis.x, 2 * axis.y * axis.y - 1, 2 * axis.y * axis.z,
                2 * axis.z * axis.x, 2 * axis.z * axis.y, 2 * axis.z * axis.z - 1};
    }
    const double k = 1.0 / (1.0 + c);
    return {v.x * v.x * k + c, v.x * v.y * k - v.z, v.x * v.z * k + v.y,
            v.y * v.x * k + v.z, v.y * v.y * k + c, v.y * v.z * k - v.x,
            v.z * v.x * k - v.y, v.z * v.y * k + v.x, v.z * v.z * k + c};
}

Vec3 apply(const Mat3& m, const Vec3& v) {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
}

Mat3 transpose(const Mat3& m) { return {m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]}; }

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 32) {
        double s = 0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

NodeMask Grid::mask_where(const std::function<bool(const Vec3&)>& pred) const {
    NodeMask m(size());
    for (std::size_t i = 0; i < size(); ++i) m[i] = pred(position_[i]) ? 1 : 0;
    return m;
}

// ---------------------------------------------------------------------------
// LatticeGrid

namespace {

constexpr double kMaskSlack = 1e-12;

int steps_for(double extent, double h) {
    return static_cast<int>(std::ceil(extent / h - 1e-9));
}

}  // namespace

int LatticeGrid::node_at(int i, int j, int k) const {
    if (i < 0 || j < 0 || k < 0 || i >= dims_[0] || j >= dims_[1] || k >= dims_[2]) return -1;
    return node_of_site_[(static_cast<std::size_t>(k) * dims_[1] + j) * dims_[0] + i];
}

Vec3 LatticeGrid::site_position(int i, int j, int k) const {
    return {origin_.x + i * step_[0], origin_.y + j * step_[1], origin_.z + k * step_[2]};
}

void LatticeGrid::build(const std::function<bool(const Vec3&)>& inside, bool trapezoid_z) {
    const std::size_t sites = static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
    node_of_site_.assign(sites, -1);
    for (int k = 0; k < dims_[2]; ++k) {
        for (int j = 0; j < dims_[1]; ++j) {
            for (int i = 0; i < dims_[0]; ++i) {
                const Vec3 p = site_position(i, j, k);
                if (!inside(p)) continue;
                node_of_site_[(static_cast<std::size_t>(k) * dims_[1] + j) * dims_[0] + i] =
                    static_cast<std::int32_t>(position_.size());
                position_.push_back(p);
                site_.push_back({i, j, k});
            }
        }
    }
    const bool three_d = dims_[2] > 1;
    dimension_ = three_d ? 3 : 2;
    const double cell = three_d ? step_[0] * step_[1] * step_[2] : step_[0] * step_[1];
    weight_.resize(position_.size());
    for (std::size_t n = 0; n < position_.size(); ++n) {
        double w = cell;
        if (trapezoid_z && three_d && (site_[n][2] == 0 || site_[n][2] == dims_[2] - 1)) w *= 0.5;
        weight_[n] = w;
    }
    boundary_.assign(position_.size(), 0);
    const int axes = three_d ? 3 : 2;
    for (std::size_t n = 0; n < position_.size(); ++n) {
        const auto [i, j, k] = site_[n];
        for (int axis = 0; axis < axes; ++axis) {
            std::array<int, 3> plus{i, j, k}, minus{i, j, k};
            plus[axis] += 1;
            minus[axis] -= 1;
            const int np = node_at(plus[0], plus[1], plus[2]);
            const int nm = node_at(minus[0], minus[1], minus[2]);
            if (nm < 0 || np < 0) boundary_[n] = 1;
            if (np >= 0) {
                double coef;
                if (axis == 2) {
                    // z-edges carry the slab between two layers.
                    coef = step_[0] * step_[1] / step_[2];
                } else {
                    coef = weight_[n] / (step_[axis] * step_[axis]);
                }
                edge_.push_back({static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(np), coef});
            }
        }
    }
}

std::shared_ptr<const LatticeGrid> LatticeGrid::disc(double radius, double h) {
    if (!(radius > 0) || !(h > 0)) throw Error(ErrorKind::invalid_argument, "disc needs radius > 0 and h > 0");
    auto g = std::shared_ptr<LatticeGrid>(new LatticeGrid());
    const int n = steps_for(radius, h);
    if (n < 2) throw Error(ErrorKind::invalid_argument, "disc grid needs at least 3 nodes per axis");
    g->kind_ = GridKind::disc;
    g->dims_ = {2 * n + 1, 2 * n + 1, 1};
    g->step_ = {h, h, h};
    g->origin_ = {-n * h, -n * h, 0};
    g->radius_ = radius;
    g->spacing_ = h;
    g->build([&](const Vec3& p) { return p.x * p.x + p.y * p.y <= radius * radius * (1 + kMaskSlack); }, false);
    return g;
}

std::shared_ptr<const LatticeGrid> LatticeGrid::annulus(double inner, double outer, double h) {
    if (!(inner >= 0 && outer > inner && h > 0)) throw Error(ErrorKind::invalid_argument, "annulus needs 0 <= inner < outer");
    auto g = std::shared_ptr<LatticeGrid>(new LatticeGrid());
    const int n = steps_for(outer, h);
    g->kind_ = GridKind::annulus;
    g->dims_ = {2 * n + 1, 2 * n + 1, 1};
    g->step_ = {h, h, h};
    g->origin_ = {-n * h, -n * h, 0};
    g->radius_ = outer;
    g->inner_ = inner;
    g->spacing_ = h;
    g->build([&](const Vec3& p) {
        const double r2 = p.x * p.x + p.y * p.y;
        return r2 <= outer * outer * (1 + kMaskSlack) && r2 >= inner * inner * (1 - kMaskSlack);
    }, false);
    return g;
}

std::shared_ptr<const LatticeGrid> LatticeGrid::ball(double radius, double h) {
    if (!(radius > 0) || !(h > 0)) throw Error(ErrorKind::invalid_argument, "ball needs radius > 0 and h > 0");
    auto g = std::shared_ptr<LatticeGrid>(new LatticeGrid());
    const int n = steps_for(radius, h);
    if (n < 2) throw Error(ErrorKind::invalid_argument, "ball grid needs at least 3 nodes per axis");
    g->kind_ = GridKind::ball;
    g->dims_ = {2 * n + 1, 2 * n + 1, 2 * n + 1};
    g->step_ = {h, h, h};
    g->origin_ = {-n * h, -n * h, -n * h};
    g->radius_ = radius;
    g->spacing_ = h;
    g->build([&](const Vec3& p) { return dot(p, p) <= radius * radius * (1 + kMaskSlack); }, false);
    return g;
}

std::shared_ptr<const LatticeGrid> LatticeGrid::shell(double inner, double outer, double h) {
    if (!(inner >= 0 && outer > inner && h > 0)) throw Error(ErrorKind::invalid_argument, "shell needs 0 <= inner < outer");
    auto g = std::shared_ptr<LatticeGrid>(new LatticeGrid());
    const int n = steps_for(outer, h);
    g->kind_ = GridKind::shell;
    g->dims_ = {2 * n + 1, 2 * n + 1, 2 * n + 1};
    g->step_ = {h, h, h};
    g->origin_ = {-n * h, -n * h, -n * h};
    g->radius_ = outer;
    g->inner_ = inner;
    g->spacing_ = h;
    g->build([&](const Vec3& p) {
        const double r2 = dot(p, p);
        return r2 <= outer * outer * (1 + kMaskSlack) && r2 >= inner * inner * (1 - kMaskSlack);
    }, false);
    return g;
}

std::shared_ptr<const LatticeGrid> LatticeGrid::cylinder(double radius, double height, double h, double hz) {
    if (!(radius > 0 && height > 0 && h > 0 && hz > 0)) throw Error(ErrorKind::invalid_argument, "cylinder needs positive sizes");
    auto g = std::shared_ptr<LatticeGrid>(new LatticeGrid());
    const int n = steps_for(radius, h);
    const int nz = std::max(2, static_cast<int>(std::lround(height / hz)));
    g->kind_ = GridKind::cylinder;
    g->dims_ = {2 * n + 1, 2 * n + 1, nz + 1};
    g->step_ = {h, h, height / nz};
    g->origin_ = {-n * h, -n * h, 0};
    g->radius_ = radius;
    g->height_ = height;
    g->spacing_ = h;
    g->build([&](const Vec3& p) { return p.x * p.x + p.y * p.y <= radius * radius * (1 + kMaskSlack); }, true);
    return g;
}

std::shared_ptr<const LatticeGrid> LatticeGrid::masked_box(const Vec3& lo, const Vec3& hi, double h,
                                                           const std::function<bool(const Vec3&)>& inside,
                                                           GridKind kind) {
    if (!(h > 0)) throw Error(ErrorKind::invalid_argument, "masked_box needs h > 0");
    auto g = std::shared_ptr<LatticeGrid>(new LatticeGrid());
    g->kind_ = kind;
    g->dims_ = {steps_for(hi.x - lo.x, h) + 1, steps_for(hi.y - lo.y, h) + 1, steps_for(hi.z - lo.z, h) + 1};
    g->step_ = {h, h, h};
    g->origin_ = lo;
    g->radius_ = std::max({std::abs(lo.x), std::abs(hi.x), std::abs(lo.y), std::abs(hi.y)});
    g->spacing_ = h;
    g->build(inside, false);
    return g;
}

namespace {

struct Stencil {
    std::array<int, 8> node{};
    std::array<double, 8> w{};
    int count = 0;
    bool complete = true;
};

}  // namespace

static Stencil lattice_stencil(const LatticeGrid& g, const Vec3& p) {
    const auto dims = g.dims();
    const auto step = g.steps();
    const Vec3 o = g.origin();
    const bool three_d = dims[2] > 1;
    std::array<double, 3> s{(p.x - o.x) / step[0], (p.y - o.y) / step[1], three_d ? (p.z - o.z) / step[2] : 0.0};
    std::array<int, 3> base{};
    std::array<double, 3> t{};
    for (int a = 0; a < 3; ++a) {
        const int limit = dims[a] - 1;
        double fl = std::floor(s[a]);
        if (limit == 0) {
            base[a] = 0;
            t[a] = 0;
            continue;
        }
        // Nodes exactly on the upper face interpolate from the last cell.
        if (fl >= limit && s[a] <= limit + 1e-9) fl = limit - 1;
        base[a] = static_cast<int>(fl);
        t[a] = s[a] - fl;
    }
    Stencil st;
    const int corners = three_d ? 8 : 4;
    for (int c = 0; c < corners; ++c) {
        const int di = c & 1, dj = (c >> 1) & 1, dk = (c >> 2) & 1;
        const double w = (di ? t[0] : 1 - t[0]) * (dj ? t[1] : 1 - t[1]) * (three_d ? (dk ? t[2] : 1 - t[2]) : 1.0);
        const int n = g.node_at(base[0] + di, base[1] + dj, base[2] + dk);
        if (n < 0) {
            if (w > 1e-14) st.complete = false;
            continue;
        }
        st.node[st.count] = n;
        st.w[st.count] = w;
        ++st.count;
    }
    return st;
}

std::optional<cplx> LatticeGrid::interpolate(std::span<const cplx> values, const Vec3& p) const {
    const Stencil st = lattice_stencil(*this, p);
    if (!st.complete || st.count == 0) return std::nullopt;
    cplx acc{0, 0};
    for (int c = 0; c < st.count; ++c) acc += st.w[c] * values[st.node[c]];
    return acc;
}

namespace {

int nearest_node(const LatticeGrid& g, const Vec3& p) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    const auto pos = g.positions();
    for (std::size_t n = 0; n < pos.size(); ++n) {
        const double d = dot(pos[n] - p, pos[n] - p);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(n);
        }
    }
    return best;
}

}  // namespace

cplx LatticeGrid::sample(std::span<const cplx> values, const Vec3& p) const {
    const Stencil st = lattice_stencil(*this, p);
    if (!st.complete && st.count > 0) {
        // Taylor expansion about the heaviest present corner keeps second-order accuracy at the mask edge
        int anchor = 0;
        for (int c = 1; c < st.count; ++c) {
            if (st.w[c] > st.w[anchor]) anchor = c;
        }
        const int n0 = st.node[anchor];
        const auto site = site_[n0];
        const Vec3 x0 = position_[n0];
        cplx acc = values[n0];
        for (int a = 0; a < 3; ++a) {
            if (dims_[a] == 1) continue;
            auto shifted = site;
            shifted[a] += 1;
            const int np = node_at(shifted[0], shifted[1], shifted[2]);
            shifted[a] -= 2;
            const int nm = node_at(shifted[0], shifted[1], shifted[2]);
            cplx d{0, 0};
            if (np >= 0 && nm >= 0) d = (values[np] - values[nm]) / (2 * step_[a]);
            else if (np >= 0) d = (values[np] - values[n0]) / step_[a];
            else if (nm >= 0) d = (values[n0] - values[nm]) / step_[a];
            acc += d * (p[a] - x0[a]);
        }
        return acc;
    }
    double wsum = 0;
    cplx acc{0, 0};
    for (int c = 0; c < st.count; ++c) {
        acc += st.w[c] * values[st.node[c]];
        wsum += st.w[c];
    }
    if (wsum > 1e-12) return acc / wsum;
    const int n = nearest_node(*this, p);
    if (n < 0) throw Error(ErrorKind::out_of_range, "sample on an empty lattice");
    return values[n];
}

double LatticeGrid::sample_real(std::span<const double> values, const Vec3& p) const {
    const Stencil st = lattice_stencil(*this, p);
    double wsum = 0, acc = 0;
    for (int c = 0; c < st.count; ++c) {
        acc += st.w[c] * values[st.node[c]];
        wsum += st.w[c];
    }
    if (wsum > 1e-12) return acc / wsum;
    const int n = nearest_node(*this, p);
    if (n < 0) throw Error(ErrorKind::out_of_range, "sample on an empty lattice");
    return values[n];
}

// ---------------------------------------------------------------------------
// SphereGrid

std::shared_ptr<const SphereGrid> SphereGrid::make(double radius, int n_phi, int n_theta) {
    if (!(radius > 0)) throw Error(ErrorKind::invalid_argument, "sphere radius must be positive");
    if (n_phi < 4) throw Error(ErrorKind::invalid_argument, "sphere grid needs n_phi >= 4");
    if (n_theta == 0) n_theta = 2 * n_phi;
    if (n_theta < 8 || n_theta % 2 != 0) throw Error(ErrorKind::invalid_argument, "n_theta must be even and >= 8");
    auto g = std::shared_ptr<SphereGrid>(new SphereGrid());
    g->kind_ = GridKind::sphere;
    g->dimension_ = 2;
    g->radius_ = radius;
    g->n_phi_ = n_phi;
    g->n_theta_ = n_theta;
    const double dp = g->dphi(), dt = g->dtheta();
    g->spacing_ = radius * dp;
    const std::size_t n = static_cast<std::size_t>(n_phi) * n_theta;
    g->position_.resize(n);
    g->weight_.resize(n);
    g->boundary_.assign(n, 0);
    for (int j = 0; j < n_phi; ++j) {
        const double phi = g->colatitude(j);
        const double sp = std::sin(phi), cp = std::cos(phi);
        for (int k = 0; k < n_theta; ++k) {
            const double th = g->longitude(k);
            const std::size_t id = g->node(j, k);
            g->position_[id] = {radius * sp * std::cos(th), radius * sp * std::sin(th), radius * cp};
            g->weight_[id] = radius * radius * sp * dp * dt;
        }
    }
    g->edge_.reserve(2 * n);
    for (int j = 0; j < n_phi; ++j) {
        const double sp = std::sin(g->colatitude(j));
        const double theta_coef = dp / (sp * dt);
        const double phi_coef = std::sin((j + 1) * dp) * dt / dp;
        for (int k = 0; k < n_theta; ++k) {
            const auto a = static_cast<std::uint32_t>(g->node(j, k));
            g->edge_.push_back({a, static_cast<std::uint32_t>(g->node(j, (k + 1) % n_theta)), theta_coef});
            if (j + 1 < n_phi) g->edge_.push_back({a, static_cast<std::uint32_t>(g->node(j + 1, k)), phi_coef});
        }
    }
    return g;
}

std::shared_ptr<const SphereGrid> SphereGrid::rescaled(double radius) const {
    return make(radius, n_phi_, n_theta_);
}

std::size_t SphereGrid::node(int j, int k) const {
    return static_cast<std::size_t>(j) * n_theta_ + static_cast<std::size_t>(k);
}

namespace {

struct SphereStencil {
    std::array<std::size_t, 4> node{};
    std::array<double, 4> w{};
};

SphereStencil sphere_stencil(const SphereGrid& g, const Vec3& p) {
    const double r = norm(p);
    if (r == 0) throw Error(ErrorKind::invalid_argument, "cannot project the origin onto the sphere");
    const double phi = std::acos(std::clamp(p.z / r, -1.0, 1.0));
    double theta = std::atan2(p.y, p.x);
    if (theta < 0) theta += 2 * pi;
    double fj = phi / g.dphi() - 0.5;
    fj = std::clamp(fj, 0.0, static_cast<double>(g.n_phi() - 1));
    int j0 = static_cast<int>(std::floor(fj));
    if (j0 >= g.n_phi() - 1) j0 = g.n_phi() - 2;
    const double tj = fj - j0;
    const double fk = theta / g.dtheta();
    int k0 = static_cast<int>(std::floor(fk));
    const double tk = fk - k0;
    k0 %= g.n_theta();
    const int k1 = (k0 + 1) % g.n_theta();
    SphereStencil st;
    st.node = {g.node(j0, k0), g.node(j0, k1), g.node(j0 + 1, k0), g.node(j0 + 1, k1)};
    st.w = {(1 - tj) * (1 - tk), (1 - tj) * tk, tj * (1 - tk), tj * tk};
    return st;
}

}  // namespace

cplx SphereGrid::sample(std::span<const cplx> values, const Vec3& p) const {
    const SphereStencil st = sphere_stencil(*this, p);
    cplx acc{0, 0};
    for (int c = 0; c < 4; ++c) acc += st.w[c] * values[st.node[c]];
    return acc;
}

double SphereGrid::sample_real(std::span<const double> values, const Vec3& p) const {
    const SphereStencil st = sphere_stencil(*this, p);
    double acc = 0;
    for (int c = 0; c < 4; ++c) acc += st.w[c] * values[st.node[c]];
    return acc;
}

bool SphereGrid::in_polar_cap(const Vec3& p) const {
    const double phi = std::acos(std::clamp(p.z / norm(p), -1.0, 1.0));
    return phi < 0.5 * dphi() || phi > pi - 0.5 * dphi();
}

// ---------------------------------------------------------------------------
// VectorField

VectorField::VectorField(GridPtr grid, std::vector<cplx> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) throw Error(ErrorKind::invalid_argument, "field needs a grid");
    if (values_.size() != grid_->size()) throw Error(ErrorKind::invalid_argument, "field size does not match grid");
    for (const cplx& v : values_) {
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw Error(ErrorKind::invalid_argument, "field values must be finite");
    }
}

VectorField::VectorField(GridPtr grid, cplx fill) : grid_(std::move(grid)) {
    if (!grid_) throw Error(ErrorKind::invalid_argument, "field needs a grid");
    values_.assign(grid_->size(), fill);
}

VectorField VectorField::from_function(GridPtr grid, const std::function<cplx(const Vec3&)>& fn) {
    std::vector<cplx> v(grid->size());
    const auto pos = grid->positions();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(pos[i]);
    return VectorField(std::move(grid), std::move(v));
}

// ---------------------------------------------------------------------------
// Spherical discs

double SphericalDisc::euclidean_radius() const {
    const double R = sphere_radius();
    return R * std::sin(radius / R);
}

double geodesic_distance(const Vec3& a, const Vec3& b, double sphere_radius) {
    return sphere_radius * angle_between(a, b);
}

bool SphericalDisc::contains(const Vec3& p) const {
    return geodesic_distance(center, p, sphere_radius()) <= radius;
}

Vec3 circle_point(const SphericalDisc& disc, double t) {
    const double R = disc.sphere_radius();
    const Vec3 c = disc.center / R;
    const Vec3 ref = std::abs(c.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    const Vec3 e1 = normalized(ref - c * dot(ref, c));
    const Vec3 e2 = cross(c, e1);
    const double a = disc.radius / R;
    return (c * std::cos(a) + (e1 * std::cos(t) + e2 * std::sin(t)) * std::sin(a)) * R;
}

// ---------------------------------------------------------------------------
// Discrete calculus

std::vector<std::array<cplx, 3>> gradient(const VectorField& f) {
    const auto* lat = dynamic_cast<const LatticeGrid*>(&f.grid());
    if (!lat) throw Error(ErrorKind::invalid_argument, "gradient expects a lattice grid");
    const auto dims = lat->dims();
    const auto step = lat->steps();
    const int axes = dims[2] > 1 ? 3 : 2;
    for (int a = 0; a < axes; ++a) {
        if (dims[a] < 3) throw Error(ErrorKind::invalid_argument, "gradient needs at least 3 nodes per axis");
    }
    std::vector<std::array<cplx, 3>> out(f.size());
    const auto vals = f.values();
    for (std::size_t n = 0; n < f.size(); ++n) {
        const auto s = lat->site_of(n);
        for (int a = 0; a < 3; ++a) {
            if (a >= axes) {
                out[n][a] = 0;
                continue;
            }
            auto p = s, m = s;
            p[a] += 1;
            m[a] -= 1;
            const int np = lat->node_at(p[0], p[1], p[2]);
            const int nm = lat->node_at(m[0], m[1], m[2]);
            if (np >= 0 && nm >= 0) out[n][a] = (vals[np] - vals[nm]) / (2 * step[a]);
            else if (np >= 0) out[n][a] = (vals[np] - vals[n]) / step[a];
            else if (nm >= 0) out[n][a] = (vals[n] - vals[nm]) / step[a];
            else out[n][a] = 0;
        }
    }
    return out;
}

std::vector<std::array<cplx, 2>> tangential_gradient(const VectorField& f) {
    const auto* sg = dynamic_cast<const SphereGrid*>(&f.grid());
    if (!sg) throw Error(ErrorKind::invalid_argument, "tangential_gradient expects a sphere grid");
    const int np = sg->n_phi(), nt = sg->n_theta();
    const double R = sg->radius(), dp = sg->dphi(), dt = sg->dtheta();
    const auto v = f.values();
    std::vector<std::array<cplx, 2>> out(f.size());
    for (int j = 0; j < np; ++j) {
        const double sp = std::sin(sg->colatitude(j));
        for (int k = 0; k < nt; ++k) {
            // Across a pole the meridian continues on the opposite longitude.
            const cplx up = j + 1 < np ? v[sg->node(j + 1, k)] : v[sg->node(j, (k + nt / 2) % nt)];
            const cplx dn = j > 0 ? v[sg->node(j - 1, k)] : v[sg->node(j, (k + nt / 2) % nt)];
            const cplx e = v[sg->node(j, (k + 1) % nt)];
            const cplx w = v[sg->node(j, (k + nt - 1) % nt)];
            auto& o = out[sg->node(j, k)];
            o[0] = (up - dn) / (2 * dp * R);
            o[1] = (e - w) / (2 * dt * R * sp);
        }
    }
    return out;
}

double integrate(const Grid& grid, std::span<const double> density, std::span<const std::uint8_t> region) {
    if (density.size() != grid.size()) throw Error(ErrorKind::invalid_argument, "density size does not match grid");
    if (!region.empty() && region.size() != grid.size()) throw Error(ErrorKind::invalid_argument, "region size does not match grid");
    const auto w = grid.weights();
    std::vector<double> terms(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        terms[i] = (region.empty() || region[i]) ? w[i] * density[i] : 0.0;
    }
    return pairwise_sum(terms);
}

VectorField restrict_to_sphere(const VectorField& u, double r, int n_phi, int n_theta) {
    const auto* lat = dynamic_cast<const LatticeGrid*>(&u.grid());
    if (!lat || lat->dimension() != 3) throw Error(ErrorKind::invalid_argument, "restrict_to_sphere expects a 3D lattice");
    const double h = lat->spacing();
    if (!(r > 2 * h && r < lat->radius() - 2 * h))
        throw Error(ErrorKind::out_of_range, "restriction radius must satisfy 2h < r < R - 2h");
    auto sphere = SphereGrid::make(r, n_phi, n_theta);
    std::vector<cplx> vals(sphere->size());
    const auto pos = sphere->positions();
    for (std::size_t i = 0; i < vals.size(); ++i) {
        const auto v = lat->interpolate(u.values(), pos[i]);
        if (!v) throw Error(ErrorKind::out_of_range, "restriction point falls outside the lattice mask");
        vals[i] = *v;
    }
    return VectorField(sphere, std::move(vals));
}

int default_trace_samples(const SphereGrid& grid, const SphericalDisc& disc) {
    const double perimeter = 2 * pi * disc.euclidean_radius();
    return std::max(32, static_cast<int>(std::ceil(perimeter / grid.spacing())));
}

std::vector<cplx> circle_trace(const VectorField& u, const SphericalDisc& disc, int samples) {
    const auto* sg = dynamic_cast<const SphereGrid*>(&u.grid());
    if (!sg) throw Error(ErrorKind::invalid_argument, "circle_trace expects a sphere grid");
    if (!(disc.radius > 0 && disc.radius < pi * disc.sphere_radius()))
        throw Error(ErrorKind::invalid_argument, "disc radius must lie in (0, pi R)");
    const int n = std::max(samples, default_trace_samples(*sg, disc));
    std::vector<cplx> loop(n + 1);
    for (int k = 0; k < n; ++k) {
        const Vec3 p = circle_point(disc, 2 * pi * k / n);
        if (sg->in_polar_cap(p)) throw Error(ErrorKind::out_of_range, "disc boundary enters a polar cap");
        loop[k] = sg->sample(u.values(), p);
    }
    loop[n] = loop[0];
    return loop;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr char kMagic[4] = {'G', 'L', 'S', 'F'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw Error(ErrorKind::io, "truncated field snapshot");
    return v;
}

}  // namespace

void write_field_binary(std::ostream& out, const VectorField& f) {
    std::array<std::uint64_t, 3> dims{};
    std::array<double, 3> spacing{};
    std::vector<double> body;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (const auto* lat = dynamic_cast<const LatticeGrid*>(&f.grid())) {
        const auto d = lat->dims();
        dims = {static_cast<std::uint64_t>(d[0]), static_cast<std::uint64_t>(d[1]), static_cast<std::uint64_t>(d[2])};
        spacing = lat->steps();
        body.assign(2 * dims[0] * dims[1] * dims[2], nan);
        for (std::size_t n = 0; n < f.size(); ++n) {
            const auto s = lat->site_of(n);
            const std::size_t site = (static_cast<std::size_t>(s[2]) * d[1] + s[1]) * d[0] + s[0];
            body[2 * site] = f[n].real();
            body[2 * site + 1] = f[n].imag();
        }
    } else if (const auto* sg = dynamic_cast<const SphereGrid*>(&f.grid())) {
        dims = {static_cast<std::uint64_t>(sg->n_phi()), static_cast<std::uint64_t>(sg->n_theta()), 1};
        spacing = {sg->dphi(), sg->dtheta(), sg->radius()};
        body.resize(2 * f.size());
        for (std::size_t n = 0; n < f.size(); ++n) {
            body[2 * n] = f[n].real();
            body[2 * n + 1] = f[n].imag();
        }
    } else {
        throw Error(ErrorKind::io, "unsupported grid for binary snapshot");
    }
    out.write(kMagic, 4);
    put<std::uint32_t>(out, kVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(f.grid().kind()));
    for (auto d : dims) put<std::uint64_t>(out, d);
    for (auto s : spacing) put<double>(out, s);
    out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size() * sizeof(double)));
    if (!out) throw Error(ErrorKind::io, "failed writing field snapshot");
}

void write_field_binary(const std::string& path, const VectorField& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot open " + path);
    write_field_binary(out, f);
}

FieldSnapshot read_field_binary(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) throw Error(ErrorKind::io, "not a field snapshot");
    if (get<std::uint32_t>(in) != kVersion) throw Error(ErrorKind::io, "unsupported snapshot version");
    FieldSnapshot s;
    s.kind = static_cast<GridKind>(get<std::uint32_t>(in));
    for (auto& d : s.dims) d = get<std::uint64_t>(in);
    for (auto& h : s.spacing) h = get<double>(in);
    s.body.resize(2 * s.dims[0] * s.dims[1] * s.dims[2]);
    in.read(reinterpret_cast<char*>(s.body.data()), static_cast<std::streamsize>(s.body.size() * sizeof(double)));
    if (!in) throw Error(ErrorKind::io, "truncated field snapshot body");
    return s;
}

FieldSnapshot read_field_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path);
    return read_field_binary(in);
}

void write_field_csv(std::ostream& out, const VectorField& f) {
    out << "x,y,z,re,im\n";
    out.precision(17);
    const auto pos = f.grid().positions();
    for (std::size_t n = 0; n < f.size(); ++n) {
        out << pos[n].x << ',' << pos[n].y << ',' << pos[n].z << ',' << f[n].real() << ',' << f[n].imag() << '\n';
    }
}

}  // namespace glsharp
