#include "blockhouse/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <numbers>
#include <string>
#include <vector>

namespace blockhouse::analysis {
namespace {

void check_model(std::uint32_t n, double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::invalid_argument("honesty probability must lie strictly between 0 and 1");
    }
    if (n == 0) {
        throw std::invalid_argument("need at least one auditor");
    }
}

// Standard normal CDF through erfc, accurate deep in the lower tail.
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

double MajorityModel::sigma() const { return std::sqrt(n * p * (1.0 - p)); }

double majority_density(std::uint32_t n, double p, double x) {
    check_model(n, p);
    const MajorityModel m{n, p};
    const double z = (x - m.mean()) / m.sigma();
    return std::exp(-0.5 * z * z) / (m.sigma() * std::sqrt(2.0 * std::numbers::pi));
}

double dishonest_majority_normal(std::uint32_t n, double p) {
    check_model(n, p);
    const MajorityModel m{n, p};
    const double upper = (n / 2.0 - m.mean()) / m.sigma();
    const double lower = (0.0 - m.mean()) / m.sigma();
    return normal_cdf(upper) - normal_cdf(lower);
}

double dishonest_majority_exact(std::uint32_t n, double p) {
    check_model(n, p);
    const std::uint32_t kmax = n / 2;
    const double log_p = std::log(p);
    const double log_q = std::log1p(-p);
    const double log_nfact = std::lgamma(n + 1.0);
    std::vector<double> terms;
    terms.reserve(kmax + 1);
    double peak = -INFINITY;
    for (std::uint32_t k = 0; k <= kmax; ++k) {
        const double t = log_nfact - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * log_p + (n - k) * log_q;
        terms.push_back(t);
        peak = std::max(peak, t);
    }
    double sum = 0.0;
    for (double t : terms) {
        sum += std::exp(t - peak);
    }
    return std::min(1.0, std::exp(peak) * sum);
}

std::uint32_t min_auditors(double p, double target) {
    if (!(p > 0.5 && p < 1.0)) {
        throw std::invalid_argument("a majority guarantee needs 1/2 < p < 1");
    }
    if (!(target > 0.0 && target < 1.0)) {
        throw std::invalid_argument("target probability must lie strictly between 0 and 1");
    }
    constexpr std::uint32_t kSearchLimit = 1u << 26;
    for (std::uint32_t n = 1; n < kSearchLimit; ++n) {
        if (MajorityModel{n, p}.valid() && dishonest_majority_normal(n, p) < target) {
            return n;
        }
    }
    throw std::runtime_error("no auditor count below the search limit reaches the target");
}

std::vector<CurvePoint> curve(double p, std::uint32_t n_min, std::uint32_t n_max, std::uint32_t step) {
    if (n_min == 0 || n_min > n_max || step == 0) {
        throw std::invalid_argument("curve needs 1 <= n_min <= n_max and step >= 1");
    }
    std::vector<CurvePoint> out;
    for (std::uint64_t n = n_min; n <= n_max; n += step) {
        const auto k = static_cast<std::uint32_t>(n);
        out.push_back(CurvePoint{k, dishonest_majority_normal(k, p), dishonest_majority_exact(k, p)});
    }
    return out;
}

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& points) {
    out << "n,prob_normal,prob_exact\n";
    char buf[128];
    for (const auto& pt : points) {
        std::snprintf(buf, sizeof buf, "%u,%.17g,%.17g\n", pt.n, pt.prob_normal, pt.prob_exact);
        out << buf;
    }
}

std::vector<CurvePoint> read_curve_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "n,prob_normal,prob_exact") {
        throw std::runtime_error("curve file: missing or unexpected header");
    }
    std::vector<CurvePoint> out;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) {
            continue;
        }
        CurvePoint pt;
        char* end = nullptr;
        const char* s = line.c_str();
        const unsigned long n = std::strtoul(s, &end, 10);
        if (end == s || *end != ',') {
            throw std::runtime_error("curve file: bad n on row " + std::to_string(row));
        }
        pt.n = static_cast<std::uint32_t>(n);
        s = end + 1;
        pt.prob_normal = std::strtod(s, &end);
        if (end == s || *end != ',') {
            throw std::runtime_error("curve file: bad prob_normal on row " + std::to_string(row));
        }
        s = end + 1;
        pt.prob_exact = std::strtod(s, &end);
        if (end == s || *end != '\0') {
            throw std::runtime_error("curve file: bad prob_exact on row " + std::to_string(row));
        }
        out.push_back(pt);
    }
    return out;
}

}  // namespace blockhouse::analysis
