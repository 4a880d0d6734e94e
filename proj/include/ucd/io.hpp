#pragma once

// JSON forms of relations, shapes, lattices, unitaries, circuits,
// subalgebras and reports. Complex matrices are row-major nested arrays of
// [re, im] pairs.

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "causal.hpp"
#include "decomposer.hpp"
#include "lattice.hpp"
#include "operator_algebra.hpp"
#include "relation.hpp"

namespace ucd {

using json = nlohmann::json;

class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
        rows.push_back(row);
    }
    return rows;
}

inline Matrix matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw InputError("matrix must be a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (!j[i].is_array() || static_cast<Eigen::Index>(j[i].size()) != cols) throw InputError("ragged matrix rows");
        for (Eigen::Index k = 0; k < cols; ++k) {
            const json& e = j[i][k];
            if (e.is_number()) m(i, k) = e.get<double>();
            else if (e.is_array() && e.size() == 2) m(i, k) = cplx(e[0].get<double>(), e[1].get<double>());
            else throw InputError("matrix entries must be [re, im] pairs");
        }
    }
    return m;
}

inline json relation_to_json(const Relation& g) {
    json pairs = json::array();
    for (const auto& [a, b] : g.pairs()) pairs.push_back({a, b});
    return {{"inputs", g.inputs()}, {"outputs", g.outputs()}, {"pairs", pairs}};
}

inline Relation relation_from_json(const json& j) {
    if (!j.is_object() || !j.contains("inputs") || !j.contains("outputs"))
        throw InputError("relation needs \"inputs\" and \"outputs\"");
    std::vector<std::pair<std::string, std::string>> pairs;
    if (j.contains("pairs"))
        for (const auto& p : j.at("pairs")) {
            if (!p.is_array() || p.size() != 2) throw InputError("relation pairs must be [input, output]");
            pairs.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
        }
    return Relation(j.at("inputs").get<std::vector<std::string>>(), j.at("outputs").get<std::vector<std::string>>(),
                    pairs);
}

inline json shape_to_json(const CircuitShape& s) {
    json nodes = json::array();
    for (const auto& n : s.node_names) nodes.push_back({{"name", n}});
    json covers = json::array();
    for (auto [v, w] : s.covers) covers.push_back({v, w});
    json lambda = json::object(), mu = json::object();
    for (std::size_t a = 0; a < s.inputs.size(); ++a) lambda[s.inputs[a]] = s.lambda[a];
    for (std::size_t b = 0; b < s.outputs.size(); ++b) mu[s.outputs[b]] = s.mu[b];
    return {{"inputs", s.inputs}, {"outputs", s.outputs}, {"nodes", nodes},
            {"covers", covers}, {"lambda", lambda},       {"mu", mu}};
}

inline json lattice_to_json(const ConceptLattice& lat) {
    json j = shape_to_json(lat.shape());
    const auto& g = lat.relation();
    for (std::size_t v = 0; v < lat.size(); ++v) {
        j["nodes"][v]["alpha"] = g.input_labels(lat.node(static_cast<int>(v)).alpha);
        j["nodes"][v]["beta"] = g.output_labels(lat.node(static_cast<int>(v)).beta);
    }
    return j;
}

inline CircuitShape shape_from_json(const json& j) {
    CircuitShape s;
    s.inputs = j.at("inputs").get<std::vector<std::string>>();
    s.outputs = j.at("outputs").get<std::vector<std::string>>();
    for (const auto& n : j.at("nodes")) s.node_names.push_back(n.at("name").get<std::string>());
    for (const auto& c : j.at("covers")) s.covers.emplace_back(c.at(0).get<int>(), c.at(1).get<int>());
    for (const auto& a : s.inputs) s.lambda.push_back(j.at("lambda").at(a).get<int>());
    for (const auto& b : s.outputs) s.mu.push_back(j.at("mu").at(b).get<int>());
    s.finalize();
    return s;
}

inline json space_to_json(const TensorSpace& s) {
    json legs = json::array();
    for (const auto& l : s.legs()) legs.push_back({{"label", l.label}, {"dim", l.dim}});
    return legs;
}

inline TensorSpace space_from_json(const json& j) {
    std::vector<Leg> legs;
    for (const auto& l : j) legs.push_back({l.at("label").get<std::string>(), l.at("dim").get<int>()});
    return TensorSpace(legs);
}

inline json channel_to_json(const UnitaryChannel& u) {
    return {{"in", space_to_json(u.in_space)}, {"out", space_to_json(u.out_space)}, {"matrix", matrix_to_json(chop(u.matrix))}};
}

inline UnitaryChannel channel_from_json(const json& j) {
    return make_channel(matrix_from_json(j.at("matrix")), space_from_json(j.at("in")), space_from_json(j.at("out")),
                        1e-8);
}

inline json circuit_to_json(const Circuit& c, const ConceptLattice* lat = nullptr) {
    json j = lat ? lattice_to_json(*lat) : shape_to_json(c.shape);
    j["leg_order"] = gate_leg_order;
    j["in"] = space_to_json(c.in_space());
    j["out"] = space_to_json(c.out_space());
    json wires = json::object();
    for (const auto& [vw, d] : c.wire_dims) wires[std::to_string(vw.first) + "->" + std::to_string(vw.second)] = d;
    j["wire_dims"] = wires;
    json gates = json::object();
    for (std::size_t v = 0; v < c.gates.size(); ++v) gates[std::to_string(v)] = matrix_to_json(chop(c.gates[v]));
    j["gates"] = gates;
    return j;
}

inline Circuit circuit_from_json(const json& j) {
    Circuit c;
    c.shape = shape_from_json(j);
    const TensorSpace in = space_from_json(j.at("in")), out = space_from_json(j.at("out"));
    for (std::size_t a = 0; a < c.shape.inputs.size(); ++a) c.input_dims.push_back(in.leg(in.index_of(c.shape.inputs[a])).dim);
    for (std::size_t b = 0; b < c.shape.outputs.size(); ++b)
        c.output_dims.push_back(out.leg(out.index_of(c.shape.outputs[b])).dim);
    for (const auto& [key, d] : j.at("wire_dims").items()) {
        const auto arrow = key.find("->");
        if (arrow == std::string::npos) throw InputError("wire keys must look like \"i->j\"");
        c.wire_dims[{std::stoi(key.substr(0, arrow)), std::stoi(key.substr(arrow + 2))}] = d.get<int>();
    }
    c.gates.assign(c.shape.num_nodes(), Matrix());
    for (std::size_t v = 0; v < c.shape.num_nodes(); ++v) {
        const std::string key = std::to_string(v);
        if (!j.at("gates").contains(key)) throw InputError("missing gate for node " + key);
        c.gates[v] = matrix_from_json(j.at("gates").at(key));
    }
    check_circuit(c);
    return c;
}

inline json subalgebra_to_json(const MatrixSubalgebra& s) {
    json basis = json::array();
    for (const auto& b : s.basis) basis.push_back(matrix_to_json(b));
    return {{"ambient", space_to_json(s.ambient)}, {"basis", basis}};
}

inline json witness_to_json(const C3Witness& w) {
    return {{"inputs", {w.a1, w.a2, w.a3}}, {"outputs", {w.b1, w.b2, w.b3}}};
}

inline json sectors_to_json(const SectorDecomposition& s) {
    json ranks = json::array();
    for (const auto& p : s.projectors) ranks.push_back(std::lround(p.trace().real()));
    return {{"count", s.count()}, {"dims", s.sectors}, {"ranks", ranks}};
}

inline json report_to_json(const DecompositionReport& r) {
    json j;
    j["status"] = status_name(r.status);
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, RefusedC3EP>) j["witness"] = witness_to_json(s.witness);
            if constexpr (std::is_same_v<T, RefusedCausal>) j["extra_pair"] = {s.a, s.b};
            if constexpr (std::is_same_v<T, Obstruction>) {
                j["node"] = s.node;
                j["reason"] = s.reason;
                j["sectors"] = sectors_to_json(s.sectors);
            }
            if constexpr (std::is_same_v<T, VerificationFailed>) j["failures"] = s.failures;
        },
        r.status);
    if (!std::isnan(r.recomposition_residual)) j["recomposition_residual"] = r.recomposition_residual;
    j["gate_unitarity_residual"] = r.gate_unitarity_residual;
    j["connectivity_ok"] = r.connectivity_ok;
    j["faithful"] = r.faithful;
    if (r.connectivity) j["connectivity"] = relation_to_json(*r.connectivity);
    if (r.causal) j["causal_structure"] = relation_to_json(*r.causal);
    json nodes = json::array();
    for (const auto& n : r.nodes) {
        json targets = json::object();
        for (const auto& [k, d] : n.targets) targets[k] = d;
        nodes.push_back({{"node", n.node},
                         {"name", n.name},
                         {"local_dim", n.local_dim},
                         {"local_legs", n.local_legs},
                         {"targets", targets},
                         {"support_residual", n.support_residual},
                         {"inclusion_residual", n.inclusion_residual},
                         {"alignment_residual", n.alignment_residual}});
    }
    j["nodes"] = nodes;
    return j;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InputError(path + ": " + e.what());
    }
}

// Runs a parser, turning JSON access errors into InputError.
template <class F>
auto parse_or_throw(const std::string& what, F f) -> decltype(f()) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw InputError(what + ": " + e.what());
    }
}

inline Relation load_relation(const std::string& path) {
    return parse_or_throw(path, [&] { return relation_from_json(read_json_file(path)); });
}
inline UnitaryChannel load_channel(const std::string& path) {
    return parse_or_throw(path, [&] { return channel_from_json(read_json_file(path)); });
}
inline Circuit load_circuit(const std::string& path) {
    return parse_or_throw(path, [&] { return circuit_from_json(read_json_file(path)); });
}

}  // namespace ucd
