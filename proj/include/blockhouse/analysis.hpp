#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace blockhouse::analysis {

/// n auditors, each answering correctly with probability p. X_n ~ Binomial(n, p)
/// counts correct answers.
struct MajorityModel {
    std::uint32_t n = 0;
    double p = 0.0;

    double mean() const { return n * p; }
    double sigma() const;

    /// Conditions under which the normal approximation is considered usable.
    bool enough_nodes() const { return n >= 30; }
    bool enough_successes() const { return n * p >= 5.0; }
    bool enough_failures() const { return n * (1.0 - p) >= 5.0; }
    bool valid() const { return enough_nodes() && enough_successes() && enough_failures(); }
};

/// P(0 <= X <= n/2) under N(np, np(1-p)): the density integrated from 0 to n/2,
/// evaluated in closed form with erfc. No continuity correction.
/// Throws std::invalid_argument unless 0 < p < 1 and n >= 1.
double dishonest_majority_normal(std::uint32_t n, double p);

/// P(X <= floor(n/2)) for the binomial itself, summed in the log domain.
double dishonest_majority_exact(std::uint32_t n, double p);

/// The normal density N(np, np(1-p)) at x.
double majority_density(std::uint32_t n, double p, double x);

/// Smallest n satisfying MajorityModel::valid() with
/// dishonest_majority_normal(n, p) < target. Requires 1/2 < p < 1, 0 < target < 1.
std::uint32_t min_auditors(double p, double target);

struct CurvePoint {
    std::uint32_t n = 0;
    double prob_normal = 0.0;
    double prob_exact = 0.0;
};

std::vector<CurvePoint> curve(double p, std::uint32_t n_min, std::uint32_t n_max, std::uint32_t step = 1);

/// Header line `n,prob_normal,prob_exact` then one row per point, values with
/// 17 significant digits so a reload reproduces them exactly.
void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& points);
/// Throws std::runtime_error on a malformed header or row.
std::vector<CurvePoint> read_curve_csv(std::istream& in);

}  // namespace blockhouse::analysis
