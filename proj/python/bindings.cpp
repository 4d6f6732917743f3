#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "blockhouse/analysis.hpp"
#include "blockhouse/contract.hpp"
#include "blockhouse/error.hpp"
#include "blockhouse/hash.hpp"
#include "blockhouse/por.hpp"
#include "blockhouse/sim.hpp"

namespace py = pybind11;
namespace bh = blockhouse;

namespace {

std::vector<std::uint8_t> to_bytes(const py::bytes& b) {
    const std::string s = b;
    return {s.begin(), s.end()};
}

bh::Seed seed_from(const py::bytes& b) {
    const std::string s = b;
    if (s.size() != bh::kDigestSize) {
        throw py::value_error("seed must be 32 bytes");
    }
    bh::Seed out;
    std::copy(s.begin(), s.end(), out.value.begin());
    return out;
}

py::dict trace_summary(const bh::sim::Trace& t) {
    py::dict d;
    d["lines"] = t.lines;
    d["ok"] = t.ok();
    d["all_settled"] = t.all_settled;
    d["conservation_violations"] = t.conservation_violations;
    d["steps"] = t.steps;
    d["burned"] = t.burned.value();
    d["escrow_outstanding"] = t.escrow_outstanding.value();
    d["banned"] = t.banned;
    d["assertion_failures"] = t.assertion_failures;
    py::dict initial;
    py::dict final;
    for (const auto& [name, v] : t.initial_balances) {
        initial[py::str(name)] = v.value();
    }
    for (const auto& [name, v] : t.final_balances) {
        final[py::str(name)] = v.value();
    }
    d["initial_balances"] = initial;
    d["final_balances"] = final;
    py::list outcomes;
    for (const auto& c : t.contracts) {
        if (c.outcome) {
            outcomes.append(std::string(bh::to_string(*c.outcome)));
        } else {
            outcomes.append(py::none());
        }
    }
    d["outcomes"] = outcomes;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "BlockHouse storage protocol simulator";

    py::register_exception<bh::ProtocolError>(m, "ProtocolError", PyExc_ValueError);

    auto an = m.def_submodule("analysis", "Auditor majority probabilities");
    an.def("dishonest_majority_normal", &bh::analysis::dishonest_majority_normal, py::arg("n"), py::arg("p"));
    an.def("dishonest_majority_exact", &bh::analysis::dishonest_majority_exact, py::arg("n"), py::arg("p"));
    an.def("min_auditors", &bh::analysis::min_auditors, py::arg("p"), py::arg("target") = 1e-6);
    an.def(
        "curve",
        [](double p, std::uint32_t n_min, std::uint32_t n_max, std::uint32_t step) {
            std::vector<std::tuple<std::uint32_t, double, double>> rows;
            for (const auto& pt : bh::analysis::curve(p, n_min, n_max, step)) {
                rows.emplace_back(pt.n, pt.prob_normal, pt.prob_exact);
            }
            return rows;
        },
        py::arg("p"), py::arg("n_min") = 30, py::arg("n_max") = 300, py::arg("step") = 1,
        "List of (n, normal, exact) rows.");

    auto por = m.def_submodule("por", "Proof of retrievability");
    py::class_<bh::FileMetadata>(por, "FileMetadata")
        .def_property_readonly("merkle_root", [](const bh::FileMetadata& x) { return bh::to_hex(x.merkle_root); })
        .def_property_readonly("file_id", [](const bh::FileMetadata& x) { return bh::to_hex(x.file_id); })
        .def_readonly("file_size", &bh::FileMetadata::file_size)
        .def_readonly("chunk_size", &bh::FileMetadata::chunk_size)
        .def_readonly("chunk_count", &bh::FileMetadata::chunk_count);
    py::class_<bh::Proof>(por, "Proof").def_property_readonly("size", [](const bh::Proof& p) {
        return p.entries.size();
    });
    py::class_<bh::ChunkStore>(por, "ChunkStore")
        .def(py::init([](const py::bytes& data, std::uint32_t chunk_size) {
                 return bh::ChunkStore(to_bytes(data), chunk_size);
             }),
             py::arg("data"), py::arg("chunk_size") = bh::kDefaultChunkSize)
        .def_property_readonly("chunk_count", &bh::ChunkStore::chunk_count)
        .def_property_readonly("held_count", &bh::ChunkStore::held_count)
        .def("drop", &bh::ChunkStore::drop)
        .def("corrupt", &bh::ChunkStore::corrupt);
    por.def(
        "gen_metadata",
        [](const py::bytes& data, std::uint32_t chunk_size) { return bh::gen_metadata(to_bytes(data), chunk_size); },
        py::arg("data"), py::arg("chunk_size") = bh::kDefaultChunkSize);
    por.def(
        "derive_challenge",
        [](const py::bytes& seed, std::uint64_t chunk_count, std::uint32_t c) {
            return bh::derive_challenge(seed_from(seed), chunk_count, c).indices;
        },
        py::arg("seed"), py::arg("chunk_count"), py::arg("c") = bh::kDefaultChallengeSize);
    por.def(
        "gen_proof",
        [](const bh::ChunkStore& store, std::vector<std::uint64_t> indices) {
            return bh::gen_proof(store, bh::Challenge{std::move(indices)});
        },
        py::arg("store"), py::arg("indices"));
    por.def(
        "verify_proof",
        [](const bh::FileMetadata& meta, std::vector<std::uint64_t> indices, const bh::Proof& proof) {
            return bh::verify_proof(meta, bh::Challenge{std::move(indices)}, proof);
        },
        py::arg("meta"), py::arg("indices"), py::arg("proof"));
    por.def("detection_pass_probability", &bh::detection_pass_probability, py::arg("chunk_count"),
            py::arg("missing"), py::arg("c"));

    auto sim = m.def_submodule("sim", "Deterministic simulation");
    sim.def(
        "run",
        [](const std::string& scenario_json) { return trace_summary(bh::sim::run(bh::sim::parse_scenario(scenario_json))); },
        py::arg("scenario_json"), "Run a scenario given as JSON text.");
    sim.def(
        "run_file", [](const std::string& path) { return trace_summary(bh::sim::run(bh::sim::load_scenario(path))); },
        py::arg("path"));
    sim.def(
        "replay", [](const std::vector<std::string>& lines) { return bh::sim::replay(lines); }, py::arg("lines"));
    sim.def(
        "generate_scenario",
        [](std::uint64_t seed) { return bh::sim::scenario_to_text(bh::sim::generate_scenario(seed)); },
        py::arg("seed"), "Random valid scenario as canonical JSON text.");
}
