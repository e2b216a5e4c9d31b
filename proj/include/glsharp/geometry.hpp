#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "glsharp/error.hpp"

namespace glsharp {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;

struct Vec3 {
    double x = 0, y = 0, z = 0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
double norm(const Vec3& a);
Vec3 normalized(const Vec3& a);

/// Angle between two nonzero vectors, robust near 0 and pi.
double angle_between(const Vec3& a, const Vec3& b);

/// Rotation matrix (row-major) taking unit vector `from` onto unit vector `to`.
using Mat3 = std::array<double, 9>;
Mat3 rotation_between(const Vec3& from, const Vec3& to);
Vec3 apply(const Mat3& m, const Vec3& v);
Mat3 transpose(const Mat3& m);

/// Deterministic pairwise (tree) summation.
double pairwise_sum(std::span<const double> values);

enum class GridKind : std::uint32_t {
    disc = 1,
    annulus = 2,
    ball = 3,
    shell = 4,
    cylinder = 5,
    sphere = 6,
};

const char* to_string(GridKind kind);

/// Dirichlet coupling between two nodes: contributes coef/2 * |u_a - u_b|^2 to the energy.
struct Edge {
    std::uint32_t a;
    std::uint32_t b;
    double coef;
};

/// Region selector over grid nodes: 1 = included. Empty span means the whole grid.
using NodeMask = std::vector<std::uint8_t>;

/**
 * Common discrete structure shared by every grid: node positions, quadrature
 * weights, and the edge graph carrying the Dirichlet form. Energies, residuals
 * and the solver work on this view only.
 */
class Grid {
public:
    virtual ~Grid() = default;

    GridKind kind() const { return kind_; }
    std::size_t size() const { return position_.size(); }
    /// Intrinsic dimension (2 for discs, annuli and spheres; 3 otherwise).
    int dimension() const { return dimension_; }
    /// Characteristic node spacing.
    double spacing() const { return spacing_; }

    std::span<const Vec3> positions() const { return position_; }
    std::span<const double> weights() const { return weight_; }
    std::span<const Edge> edges() const { return edge_; }
    /// Nodes on the discrete boundary (fixed in Dirichlet problems).
    std::span<const std::uint8_t> boundary() const { return boundary_; }

    NodeMask mask_where(const std::function<bool(const Vec3&)>& pred) const;

protected:
    GridKind kind_ = GridKind::disc;
    int dimension_ = 2;
    double spacing_ = 1;
    std::vector<Vec3> position_;
    std::vector<double> weight_;
    std::vector<Edge> edge_;
    std::vector<std::uint8_t> boundary_;
};

using GridPtr = std::shared_ptr<const Grid>;

/**
 * Masked Cartesian lattice. Covers discs and annuli (2D, z = 0) and balls,
 * spherical shells and cylinders (3D). Sites are indexed (i, j, k) with i
 * fastest; `node_at` maps a site to a node index or -1 outside the mask.
 */
class LatticeGrid : public Grid {
public:
    static std::shared_ptr<const LatticeGrid> disc(double radius, double h);
    static std::shared_ptr<const LatticeGrid> annulus(double inner, double outer, double h);
    static std::shared_ptr<const LatticeGrid> ball(double radius, double h);
    static std::shared_ptr<const LatticeGrid> shell(double inner, double outer, double h);
    /// D_R x [0, H]; trapezoidal weights along z so that the weights sum to |D_R| H.
    static std::shared_ptr<const LatticeGrid> cylinder(double radius, double height, double h, double hz);
    /// General 3D lattice over the box [lo, hi] masked by `inside`.
    static std::shared_ptr<const LatticeGrid> masked_box(const Vec3& lo, const Vec3& hi, double h,
                                                         const std::function<bool(const Vec3&)>& inside,
                                                         GridKind kind = GridKind::ball);

    /// Outer radius of the region (disc/ball/shell/annulus/cylinder base).
    double radius() const { return radius_; }
    double inner_radius() const { return inner_; }
    double height() const { return height_; }
    std::array<int, 3> dims() const { return dims_; }
    std::array<double, 3> steps() const { return step_; }
    Vec3 origin() const { return origin_; }

    int node_at(int i, int j, int k) const;
    std::array<int, 3> site_of(std::size_t node) const { return site_[node]; }
    Vec3 site_position(int i, int j, int k) const;

    /// Multilinear interpolation; nullopt unless every corner lies in the mask.
    std::optional<cplx> interpolate(std::span<const cplx> values, const Vec3& p) const;
    /// Multilinear interpolation; at the mask edge a first-order Taylor expansion about
    /// the heaviest present corner. Falls back to the nearest node when no corner is present.
    cplx sample(std::span<const cplx> values, const Vec3& p) const;
    double sample_real(std::span<const double> values, const Vec3& p) const;

private:
    LatticeGrid() = default;
    void build(const std::function<bool(const Vec3&)>& inside, bool trapezoid_z);

    std::array<int, 3> dims_{1, 1, 1};
    std::array<double, 3> step_{1, 1, 1};
    Vec3 origin_;
    double radius_ = 0;
    double inner_ = 0;
    double height_ = 0;
    std::vector<std::int32_t> node_of_site_;
    std::vector<std::array<int, 3>> site_;
};

using LatticePtr = std::shared_ptr<const LatticeGrid>;

/**
 * Latitude-longitude grid on S_R. Colatitudes phi_j = (j + 1/2) pi / n_phi,
 * longitudes theta_k = 2 pi k / n_theta; no node sits at a pole. Weights are
 * R^2 sin(phi) dphi dtheta. Polar caps take the value of the nearest ring.
 */
class SphereGrid : public Grid {
public:
    static std::shared_ptr<const SphereGrid> make(double radius, int n_phi, int n_theta = 0);
    /// Same angular grid, different radius.
    std::shared_ptr<const SphereGrid> rescaled(double radius) const;

    double radius() const { return radius_; }
    int n_phi() const { return n_phi_; }
    int n_theta() const { return n_theta_; }
    double dphi() const { return pi / n_phi_; }
    double dtheta() const { return 2 * pi / n_theta_; }
    double colatitude(int j) const { return (j + 0.5) * dphi(); }
    double longitude(int k) const { return k * dtheta(); }
    std::size_t node(int j, int k) const;

    /// Bilinear interpolation in (phi, theta) at the radial projection of p.
    cplx sample(std::span<const cplx> values, const Vec3& p) const;
    double sample_real(std::span<const double> values, const Vec3& p) const;
    /// True when the radial projection of p falls inside a polar cap (outside the ring band).
    bool in_polar_cap(const Vec3& p) const;

private:
    SphereGrid() = default;
    double radius_ = 1;
    int n_phi_ = 0;
    int n_theta_ = 0;
};

using SpherePtr = std::shared_ptr<const SphereGrid>;

/// R^2-valued order parameter sampled at every node of a grid.
class VectorField {
public:
    VectorField() = default;
    VectorField(GridPtr grid, std::vector<cplx> values);
    explicit VectorField(GridPtr grid, cplx fill = {0, 0});

    static VectorField from_function(GridPtr grid, const std::function<cplx(const Vec3&)>& fn);

    const Grid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    std::span<const cplx> values() const { return values_; }
    std::span<cplx> values() { return values_; }
    cplx operator[](std::size_t i) const { return values_[i]; }
    cplx& operator[](std::size_t i) { return values_[i]; }
    std::size_t size() const { return values_.size(); }

private:
    GridPtr grid_;
    std::vector<cplx> values_;
};

/// Geodesic disc on S_R: |center| = R, radius measured along the sphere.
struct SphericalDisc {
    Vec3 center;
    double radius = 0;

    double sphere_radius() const { return norm(center); }
    /// Euclidean radius of the boundary circle.
    double euclidean_radius() const;
    bool contains(const Vec3& p) const;
};

/// Geodesic distance between the radial projections of a and b onto S_R.
double geodesic_distance(const Vec3& a, const Vec3& b, double sphere_radius);

/// Point at geodesic distance `radius` from `center` in direction angle t (0..2pi).
Vec3 circle_point(const SphericalDisc& disc, double t);

// -- discrete calculus ------------------------------------------------------

/// Per-node partial derivatives (d/dx, d/dy, d/dz) of a lattice field.
/// Central differences in the interior, one-sided at mask edges.
std::vector<std::array<cplx, 3>> gradient(const VectorField& f);

/// Per-node tangential derivatives (d_phi / R, d_theta / (R sin phi)) on a sphere grid.
std::vector<std::array<cplx, 2>> tangential_gradient(const VectorField& f);

/// Weighted quadrature of a nodal density over the grid or a region mask.
double integrate(const Grid& grid, std::span<const double> density, std::span<const std::uint8_t> region = {});

/// Trilinear restriction of a ball-lattice field to S_r on a lat-long grid.
VectorField restrict_to_sphere(const VectorField& u, double r, int n_phi, int n_theta = 0);

/// Ordered closed loop of samples along the boundary circle of `disc` (last == first).
std::vector<cplx> circle_trace(const VectorField& u, const SphericalDisc& disc, int samples = 0);

/// Default sample count for a circle trace: max(32, perimeter / h).
int default_trace_samples(const SphereGrid& grid, const SphericalDisc& disc);

// -- serialization -------------------------------------------------------------

/// Binary snapshot: see docs/FORMATS.md.
void write_field_binary(std::ostream& out, const VectorField& f);
void write_field_binary(const std::string& path, const VectorField& f);

struct FieldSnapshot {
    GridKind kind;
    std::array<std::uint64_t, 3> dims;
    std::array<double, 3> spacing;
    std::vector<double> body;  // row-major, two doubles (re, im) per site, NaN outside the mask
};
FieldSnapshot read_field_binary(std::istream& in);
FieldSnapshot read_field_binary(const std::string& path);

/// CSV with columns x,y,z,re,im per node.
void write_field_csv(std::ostream& out, const VectorField& f);

}  // namespace glsharp
