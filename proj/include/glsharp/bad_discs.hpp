#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "glsharp/geometry.hpp"

namespace glsharp {

/// Geodesic discs on S_R (R = sphere_radius).
struct DiscFamily {
    double sphere_radius = 1;
    std::vector<SphericalDisc> discs;
    /// Per-disc degrees, filled in by certification.
    std::vector<std::optional<int>> degrees;

    double total_radius() const;
    /// Geodesic distance between centers exceeds the radius sum for every pair.
    bool disjoint() const;
    /// Same discs on the sphere of radius `radius` (centers and radii scaled).
    DiscFamily scaled(double radius) const;
};

/// Replaces two discs by the disc of radius r1 + r2 centered on the geodesic
/// c1c2 at distance d r2/(r1 + r2) from c1. Contains both when d <= r1 + r2.
SphericalDisc merge_discs(const SphericalDisc& a, const SphericalDisc& b, double sphere_radius);

/// Merges intersecting discs until the family is disjoint.
DiscFamily disjoint_family(DiscFamily family);

/**
 * Cover of {|v| <= 1 - delta} for v on the unit sphere: connected components
 * of bad nodes, each enclosed by a disc about its normalized mean, radii
 * clamped up to lambda eps, then merged into a disjoint family.
 */
DiscFamily initial_cover(const VectorField& v, double eps, double delta, double lambda);

struct GrowthOptions {
    /// Throw growth_regime once the radius sum exceeds this fraction of pi R.
    double regime_fraction = 0.5;
};

/// Ball growth to time t: radii scale by e^t, touching discs merge. The number
/// of merge events is added to *merges when given.
DiscFamily grow(const DiscFamily& family, double t, const GrowthOptions& opts = {}, int* merges = nullptr);

struct GrowthSample {
    double t = 0;
    DiscFamily family;
    std::vector<double> circle_energy;  ///< E^(T)_eps(v; boundary circle) per disc
    std::vector<std::optional<int>> degree;
    double functional = 0;              ///< sum rho_i * circle energy
};

struct GrowthTrace {
    double s = 0;
    double bound = 0;  ///< 2 pi * 2 gamma / (gamma + 2 pi)
    std::vector<GrowthSample> samples;
    std::optional<std::size_t> selected;
    /// Times after which growth left the small-disc regime or reached a pole cap.
    std::optional<double> stopped_at;
};

struct SelectOptions {
    int samples = 64;
    double slack = 0.10;
};

/**
 * Samples 64 log-spaced times in (0, s], s = (2pi + gamma)/(4pi) |ln eps|, and
 * selects the first time whose functional is within bound (1 + slack).
 * Throws no_qualifying_time when none is.
 */
GrowthTrace select_time(const VectorField& v, const DiscFamily& family, double eps, double gamma,
                        const SelectOptions& opts = {});

struct ConditionCheck {
    bool pass = false;
    double margin = 0;
};

struct Certificate {
    ConditionCheck p1;  ///< |u| > 7/8 off the discs
    ConditionCheck p2;  ///< sum r_i <= R^alpha
    ConditionCheck p3;  ///< E^(T)(u, boundary) <= 2 pi / r_i
    ConditionCheck p4;  ///< every degree 0
    ConditionCheck p5;  ///< r_i >= Lambda
    double alpha = 0;
    double alpha_tilde = 0;  ///< 1 - alpha
    bool alpha_admissible = false;  ///< alpha_tilde < (2 pi - gamma)/(4 pi)
    std::vector<double> circle_energy;
    std::vector<std::optional<int>> degree;
    /// Upper bounds on deg^2 from the circle-energy lower bound pi d^2 (1-delta)^2 / sin rho.
    std::vector<double> degree_sq_bound;
    double degree_sq_sum = 0;
    bool all_pass() const { return p1.pass && p2.pass && p3.pass && p4.pass && p5.pass; }
};

/// Checks the five conditions for u on S_R and a family on S_R.
Certificate certify(const VectorField& u, DiscFamily& family, double gamma, double lambda, double alpha,
                    double delta);

/// delta0 solving 2/(1 - delta)^2 * 2 gamma/(gamma + 2 pi) = 2, and the default min(1/8, delta0)/2.
double delta_limit(double gamma);
double default_delta(double gamma);
/// 1 - (2 pi - gamma)/(8 pi), half the admissible range for alpha_tilde.
double default_alpha(double gamma);

struct PipelineOptions {
    double delta = 0;  ///< <= 0 selects default_delta(gamma)
    double alpha = 0;  ///< <= 0 selects default_alpha(gamma)
    SelectOptions select;
};

struct PipelineResult {
    double tangential_energy = 0;
    bool premise = false;  ///< E^(T)(u; S_R) <= gamma ln R
    double eps = 0;
    double delta = 0;
    DiscFamily initial;    ///< on S_1
    double r0 = 0;         ///< initial radius sum on S_1
    double r0_scaled = 0;  ///< r0 / (eps |ln eps| / delta^3)
    GrowthTrace trace;
    DiscFamily family;     ///< selected family on S_R
    Certificate certificate;
};

/// Rescale to S_1 with eps = 1/R, cover, grow, select, rescale back, certify.
PipelineResult bad_disc_pipeline(const VectorField& u, double gamma, double lambda, const PipelineOptions& opts = {});

nlohmann::json to_json(const DiscFamily& f);
nlohmann::json to_json(const GrowthTrace& t);
nlohmann::json to_json(const Certificate& c);

}  // namespace glsharp
