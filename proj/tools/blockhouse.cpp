#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "blockhouse/analysis.hpp"
#include "blockhouse/error.hpp"
#include "blockhouse/hash.hpp"
#include "blockhouse/por.hpp"
#include "blockhouse/rng.hpp"
#include "blockhouse/sim.hpp"

namespace bh = blockhouse;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kBadInput = 2;

// "0.8", "4/5"
double parse_probability(const std::string& text) {
    const auto slash = text.find('/');
    std::size_t used = 0;
    double value = 0.0;
    if (slash == std::string::npos) {
        value = std::stod(text, &used);
        if (used != text.size()) {
            throw std::invalid_argument("bad probability " + text);
        }
    } else {
        const std::string num = text.substr(0, slash);
        const std::string den = text.substr(slash + 1);
        std::size_t used_den = 0;
        const double a = std::stod(num, &used);
        const double b = std::stod(den, &used_den);
        if (used != num.size() || used_den != den.size() || b == 0.0) {
            throw std::invalid_argument("bad probability " + text);
        }
        value = a / b;
    }
    if (!(value > 0.0 && value < 1.0)) {
        throw std::invalid_argument("probability must lie strictly between 0 and 1");
    }
    return value;
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) {
        s.append(width - s.size(), ' ');
    }
    return s;
}

int cmd_simulate(const std::string& scenario_path, const std::string& out_path, std::optional<std::uint64_t> seed) {
    bh::sim::Scenario scenario = bh::sim::load_scenario(scenario_path);
    if (seed) {
        scenario.seed = *seed;
    }
    const bh::sim::Trace trace = bh::sim::run(scenario);
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) {
            throw std::invalid_argument("cannot write " + out_path);
        }
        out << trace.jsonl();
    }

    std::cout << pad("contract", 10) << pad("host", 16) << pad("outcome", 26) << "released\n";
    for (std::size_t i = 0; i < trace.contracts.size(); ++i) {
        const auto& c = trace.contracts[i];
        std::string outcome = c.outcome ? std::string(bh::to_string(*c.outcome)) : "unsettled";
        if (!c.id) {
            outcome = "rejected";
        }
        std::uint64_t released = 0;
        for (const auto& s : trace.settlements) {
            if (c.id && s.contract == *c.id) {
                released = s.total().value();
            }
        }
        std::cout << pad(std::to_string(i), 10) << pad(c.host.value_or("-"), 16) << pad(outcome, 26) << released
                  << '\n';
    }
    std::cout << "\nbalance changes\n";
    for (const auto& [name, initial] : trace.initial_balances) {
        const auto final_balance = trace.final_balances.at(name);
        if (final_balance != initial) {
            const auto delta = static_cast<std::int64_t>(final_balance.value()) -
                               static_cast<std::int64_t>(initial.value());
            std::cout << "  " << pad(name, 20) << (delta > 0 ? "+" : "") << delta << '\n';
        }
    }
    if (!trace.burned.is_zero()) {
        std::cout << "  " << pad("burn", 20) << "+" << trace.burned.value() << '\n';
    }
    for (const auto& name : trace.banned) {
        std::cout << "banned: " << name << '\n';
    }
    std::cout << "steps: " << trace.steps << ", conservation violations: " << trace.conservation_violations
              << ", all settled: " << (trace.all_settled ? "yes" : "no") << '\n';
    for (const auto& f : trace.assertion_failures) {
        std::cout << "FAILED " << f << '\n';
    }
    return trace.ok() ? kOk : kFailed;
}

int cmd_prob_curve(const std::string& p_text, std::uint32_t n_min, std::uint32_t n_max, std::uint32_t step,
                   const std::string& out_path) {
    const double p = parse_probability(p_text);
    if (p <= 0.5) {
        std::cerr << "warning: p <= 1/2, a truthful majority is not guaranteed for any n\n";
    }
    const auto points = bh::analysis::curve(p, n_min, n_max, step);
    for (const auto& pt : points) {
        if (!bh::analysis::MajorityModel{pt.n, p}.valid()) {
            std::cerr << "warning: n=" << pt.n << " fails the normal approximation validity conditions\n";
            break;
        }
    }
    if (out_path.empty() || out_path == "-") {
        bh::analysis::write_curve_csv(std::cout, points);
    } else {
        std::ofstream out(out_path);
        if (!out) {
            throw std::invalid_argument("cannot write " + out_path);
        }
        bh::analysis::write_curve_csv(out, points);
    }
    return kOk;
}

int cmd_min_auditors(const std::string& p_text, double target, const std::string& curve_path) {
    const double p = parse_probability(p_text);
    const std::uint32_t n = bh::analysis::min_auditors(p, target);
    std::cout << n << '\n';
    if (curve_path.empty()) {
        return kOk;
    }
    std::ifstream in(curve_path);
    if (!in) {
        throw std::invalid_argument("cannot read " + curve_path);
    }
    const auto points = bh::analysis::read_curve_csv(in);
    std::optional<std::uint32_t> from_curve;
    for (const auto& pt : points) {
        if (bh::analysis::MajorityModel{pt.n, p}.valid() && pt.prob_normal < target) {
            from_curve = pt.n;
            break;
        }
    }
    if (!from_curve) {
        std::cerr << "curve has no row below the target\n";
        return kFailed;
    }
    if (*from_curve != n) {
        std::cerr << "curve disagrees: first row below the target is n=" << *from_curve << '\n';
        return kFailed;
    }
    std::cerr << "curve agrees\n";
    return kOk;
}

int cmd_por_selftest(const std::string& file_path, std::uint32_t chunk_size, std::uint32_t c, std::uint32_t trials,
                     std::uint64_t seed) {
    std::ifstream in(file_path, std::ios::binary);
    if (!in) {
        throw std::invalid_argument("cannot read " + file_path);
    }
    const std::vector<std::uint8_t> file((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (file.empty() || chunk_size == 0 || c == 0 || trials == 0) {
        throw std::invalid_argument("file, chunk size, challenges and trials must be non-empty");
    }
    const bh::FileMetadata meta = bh::gen_metadata(file, chunk_size);
    const std::uint64_t n = meta.chunk_count;
    bh::DigestRng rng(bh::sha256("por-selftest:" + std::to_string(seed)));
    auto random_seed = [&] {
        bh::Digest d{};
        for (std::size_t i = 0; i < d.size(); i += 8) {
            std::uint64_t w = rng();
            for (std::size_t j = 0; j < 8; ++j) {
                d[i + j] = static_cast<std::uint8_t>(w >> (8 * j));
            }
        }
        return bh::Seed{d};
    };

    bool ok = true;
    bh::ChunkStore honest(file, chunk_size);
    std::uint32_t complete_failures = 0;
    for (std::uint32_t t = 0; t < trials; ++t) {
        const auto ch = bh::derive_challenge(random_seed(), n, c);
        if (!bh::verify_proof(meta, ch, bh::gen_proof(honest, ch))) {
            ++complete_failures;
        }
    }
    std::cout << "chunks: " << n << ", challenge size: " << std::min<std::uint64_t>(c, n) << '\n';
    std::cout << "completeness: " << complete_failures << " failures over " << trials << " honest proofs\n";
    ok = ok && complete_failures == 0;

    // A proof answering a different challenge must not verify.
    std::uint32_t accepted_wrong = 0;
    for (std::uint32_t t = 0; t < trials; ++t) {
        const auto asked = bh::derive_challenge(random_seed(), n, c);
        const auto other = bh::derive_challenge(random_seed(), n, c);
        if (asked != other && bh::verify_proof(meta, asked, bh::gen_proof(honest, other))) {
            ++accepted_wrong;
        }
    }
    bh::ChunkStore corrupted(file, chunk_size);
    corrupted.corrupt(0);
    bh::Challenge first{{0}};
    const bool corrupt_rejected = !bh::verify_proof(meta, first, bh::gen_proof(corrupted, first));
    std::cout << "soundness: " << accepted_wrong << " proofs for the wrong challenge accepted, corrupted chunk "
              << (corrupt_rejected ? "rejected" : "ACCEPTED") << '\n';
    ok = ok && accepted_wrong == 0 && corrupt_rejected;

    if (n >= 2) {
        const std::uint64_t missing = std::max<std::uint64_t>(1, n / 10);
        bh::ChunkStore lossy(file, chunk_size);
        for (std::uint64_t k = 0; k < missing; ++k) {
            lossy.drop(k);
        }
        std::uint32_t passed = 0;
        for (std::uint32_t t = 0; t < trials; ++t) {
            const auto ch = bh::derive_challenge(random_seed(), n, c);
            if (bh::verify_proof(meta, ch, bh::gen_proof(lossy, ch))) {
                ++passed;
            }
        }
        const double expected = bh::detection_pass_probability(n, missing, c);
        const double rate = static_cast<double>(passed) / trials;
        const double sigma = std::sqrt(expected * (1.0 - expected) / trials);
        const bool within = std::abs(rate - expected) <= 3.0 * sigma + 1e-12;
        std::printf("detection: %llu of %llu chunks missing, pass rate %.4f, expected %.4f (3 sigma = %.4f) %s\n",
                    static_cast<unsigned long long>(missing), static_cast<unsigned long long>(n), rate, expected,
                    3.0 * sigma, within ? "ok" : "OUT OF RANGE");
        ok = ok && within;
    }
    std::cout << (ok ? "PASS" : "FAIL") << '\n';
    return ok ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"BlockHouse storage protocol simulator"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_path;
    std::optional<std::uint64_t> sim_seed;
    auto* simulate = app.add_subcommand("simulate", "Run a scenario and write its trace");
    simulate->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
    simulate->add_option("--out", out_path, "Trace output (JSON lines)");
    simulate->add_option("--seed", sim_seed, "Override the scenario seed");

    std::string p_text = "4/5";
    std::uint32_t n_min = 30;
    std::uint32_t n_max = 300;
    std::uint32_t step = 1;
    std::string curve_out;
    auto* prob_curve = app.add_subcommand("prob-curve", "Dishonest-majority probability against auditor count");
    prob_curve->add_option("--p", p_text, "Auditor honesty, decimal or fraction")->capture_default_str();
    prob_curve->add_option("--n-min", n_min)->capture_default_str();
    prob_curve->add_option("--n-max", n_max)->capture_default_str();
    prob_curve->add_option("--step", step)->capture_default_str();
    prob_curve->add_option("--out", curve_out, "CSV output, - for stdout");
    prob_curve->add_option("--seed", sim_seed, "Accepted for uniformity; the curve is deterministic");

    double target = 1e-6;
    std::string curve_in;
    auto* min_aud = app.add_subcommand("min-auditors", "Smallest auditor count below a target probability");
    min_aud->add_option("--p", p_text)->capture_default_str();
    min_aud->add_option("--target", target)->capture_default_str();
    min_aud->add_option("--curve", curve_in, "Cross-check against a prob-curve CSV");

    std::string file_path;
    std::uint32_t chunk_size = bh::kDefaultChunkSize;
    std::uint32_t challenges = bh::kDefaultChallengeSize;
    std::uint32_t trials = 1000;
    std::uint64_t seed = 0;
    auto* selftest = app.add_subcommand("por-selftest", "Completeness, soundness and detection checks on a file");
    selftest->add_option("--file", file_path)->required();
    selftest->add_option("--chunk-size", chunk_size)->capture_default_str();
    selftest->add_option("--challenges", challenges)->capture_default_str();
    selftest->add_option("--trials", trials)->capture_default_str();
    selftest->add_option("--seed", seed)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kBadInput;
    }

    try {
        if (*simulate) {
            return cmd_simulate(scenario_path, out_path, sim_seed);
        }
        if (*prob_curve) {
            return cmd_prob_curve(p_text, n_min, n_max, step, curve_out);
        }
        if (*min_aud) {
            return cmd_min_auditors(p_text, target, curve_in);
        }
        return cmd_por_selftest(file_path, chunk_size, challenges, trials, seed);
    } catch (const bh::ProtocolError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kBadInput;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kBadInput;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kBadInput;
    }
}
