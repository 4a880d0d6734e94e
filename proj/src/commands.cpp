#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>

#include "ucd/gallery.hpp"
#include "ucd/io.hpp"

namespace ucd::cli {

namespace {

std::string sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", x);
    return buf;
}

std::string join(const std::vector<std::string>& xs, const std::string& sep = " ") {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? sep : "") + xs[i];
    return s;
}

std::string pairs_text(const Relation& g) {
    std::vector<std::string> ps;
    for (const auto& [a, b] : g.pairs()) ps.push_back(a + "->" + b);
    return ps.empty() ? "(none)" : join(ps);
}

std::string witness_text(const C3Witness& w) {
    return "inputs " + w.a1 + " " + w.a2 + " " + w.a3 + ", outputs " + w.b1 + " " + w.b2 + " " + w.b3;
}

void write_file(const std::string& path, const json& j) {
    std::ofstream f(path);
    if (!f) throw InputError("cannot write " + path);
    f << j.dump() << '\n';
}

// Emits the artifact to --out if given, else to stdout.
void emit(const json& artifact, const Common& common, std::ostream& out, const std::string& what) {
    if (common.out.empty()) {
        out << artifact.dump() << '\n';
    } else {
        write_file(common.out, artifact);
        if (!common.json) out << "wrote " << what << " to " << common.out << '\n';
    }
}

int exit_for(const DecompositionStatus& s) {
    if (std::holds_alternative<Success>(s)) return ok;
    if (std::holds_alternative<RefusedC3EP>(s) || std::holds_alternative<RefusedCausal>(s) ||
        std::holds_alternative<VerificationFailed>(s))
        return refused;
    return numerical_failure;
}

void print_report(const DecompositionReport& r, std::ostream& out) {
    out << "status: " << status_name(r.status) << '\n';
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, RefusedC3EP>) out << "C3 witness: " << witness_text(s.witness) << '\n';
            if constexpr (std::is_same_v<T, RefusedCausal>)
                out << "influence outside the relation: " << s.a << " -> " << s.b << '\n';
            if constexpr (std::is_same_v<T, Obstruction>) {
                out << "obstruction at node " << s.node << ": " << s.reason << '\n';
                out << "sectors: " << s.sectors.count() << '\n';
            }
            if constexpr (std::is_same_v<T, VerificationFailed>)
                for (const auto& f : s.failures) out << "failure: " << f << '\n';
        },
        r.status);
    if (!std::isnan(r.recomposition_residual)) {
        out << "recomposition residual: " << sci(r.recomposition_residual) << '\n';
        out << "gate unitarity residual: " << sci(r.gate_unitarity_residual) << '\n';
        out << "connectivity within relation: " << (r.connectivity_ok ? "yes" : "no") << '\n';
        out << "connectivity equals causal structure: " << (r.faithful ? "yes" : "no") << '\n';
    }
    if (r.connectivity) out << "connectivity: " << pairs_text(*r.connectivity) << '\n';
    for (const auto& n : r.nodes) {
        std::vector<std::string> ts;
        for (const auto& [k, d] : n.targets) ts.push_back(k + "=" + std::to_string(d));
        out << "node " << n.node << " " << n.name << ": local dim " << n.local_dim << ", emits "
            << (ts.empty() ? "nothing" : join(ts)) << '\n';
    }
}

}  // namespace

int cmd_lattice(const LatticeArgs& args, std::ostream& out) {
    const Relation g = load_relation(args.relation);
    const ConceptLattice lat(g);
    if (args.format == "dot") {
        out << to_dot(lat);
    } else if (args.format == "json") {
        out << lattice_to_json(lat).dump(2) << '\n';
    } else if (args.format == "text") {
        const auto& s = lat.shape();
        for (std::size_t v = 0; v < lat.size(); ++v) out << "node " << v << " " << lat.describe(static_cast<int>(v)) << '\n';
        for (auto [v, w] : s.covers) out << "cover " << v << " -> " << w << '\n';
        for (std::size_t a = 0; a < s.inputs.size(); ++a) out << "lambda " << s.inputs[a] << " = " << s.lambda[a] << '\n';
        for (std::size_t b = 0; b < s.outputs.size(); ++b) out << "mu " << s.outputs[b] << " = " << s.mu[b] << '\n';
    } else {
        throw InputError("unknown format '" + args.format + "' (text, dot or json)");
    }
    return ok;
}

int cmd_check(const std::string& relation, const Common& common, std::ostream& out) {
    const Relation g = load_relation(relation);
    const C3Result scan = check_c3ep_scan(g), triple = check_c3ep_triple(g);
    const LatticeC3Result lattice = check_c3ep_lattice(g);
    if (scan.satisfied() != triple.satisfied() || scan.satisfied() != lattice.satisfied)
        throw NumericalError("the three C3-EP tests disagree");
    const C3Result r = check_c3ep(g);
    if (common.json) {
        json j{{"satisfied", r.satisfied()}, {"scan", scan.satisfied()}, {"triple", triple.satisfied()},
               {"lattice", lattice.satisfied}};
        if (r.witness) j["witness"] = witness_to_json(*r.witness);
        if (lattice.multipath) j["multipath"] = {{"pair", {lattice.multipath->first, lattice.multipath->second}}, {"paths", lattice.paths}};
        out << j.dump(2) << '\n';
    } else {
        out << "C3-EP: " << (r.satisfied() ? "satisfied" : "violated") << '\n';
        out << "agreement: scan, triple intersection and lattice paths\n";
        if (r.witness) out << "witness: " << witness_text(*r.witness) << '\n';
        if (lattice.multipath)
            out << "lattice: " << lattice.paths << " paths from " << lattice.multipath->first << " to "
                << lattice.multipath->second << '\n';
    }
    return r.satisfied() ? ok : refused;
}

int cmd_analyze(const AnalyzeArgs& args, const Common& common, std::ostream& out) {
    const UnitaryChannel u = load_channel(args.unitary);
    check_ambient(u.dim());
    const double threshold = args.threshold > 0 ? args.threshold : influence_threshold;
    const CausalAnalysis c = analyze_causal_structure(u, threshold);
    if (common.json) {
        json strengths = json::array();
        for (const auto& p : c.pairs)
            strengths.push_back({{"input", p.a}, {"output", p.b}, {"strength", p.strength},
                                 {"influences", p.influences}, {"borderline", p.borderline}});
        out << json{{"causal_structure", relation_to_json(c.relation)}, {"threshold", threshold},
                    {"strengths", strengths}, {"warnings", c.warnings}}
                   .dump(2)
            << '\n';
    } else {
        for (const auto& p : c.pairs)
            out << p.a << " -> " << p.b << "  " << sci(p.strength) << (p.influences ? "  influences" : "") << '\n';
        out << "causal structure: " << pairs_text(c.relation) << '\n';
        for (const auto& w : c.warnings) out << "warning: " << w << '\n';
    }
    return ok;
}

int cmd_decompose(const DecomposeArgs& args, const Common& common, std::ostream& out) {
    const UnitaryChannel u = load_channel(args.unitary);
    const Relation g = load_relation(args.relation);
    const Decomposition d = decompose(u, g, {common.tol, common.seed, args.pad_connectivity});
    if (d.circuit && !common.out.empty()) {
        const ConceptLattice lat(g);
        write_file(common.out, circuit_to_json(*d.circuit, &lat));
    }
    if (common.json) {
        out << report_to_json(d.report).dump(2) << '\n';
    } else {
        print_report(d.report, out);
        if (d.circuit && !common.out.empty()) out << "circuit written to " << common.out << '\n';
    }
    return exit_for(d.report.status);
}

int cmd_verify(const VerifyArgs& args, const Common& common, std::ostream& out) {
    const UnitaryChannel u = load_channel(args.unitary);
    const Circuit c = load_circuit(args.circuit);
    const Relation g = load_relation(args.relation);
    const DecompositionReport r = verify_decomposition(u, c, g, {common.tol, args.pad_connectivity});
    if (common.json) out << report_to_json(r).dump(2) << '\n';
    else print_report(r, out);
    return exit_for(r.status);
}

int cmd_roundtrip(const RoundtripArgs& args, const Common& common, std::ostream& out) {
    const Relation g = load_relation(args.relation);
    if (args.trials < 1) throw InputError("--trials must be positive");
    if (args.wire_dim < 1 || args.leg_dim < 1) throw InputError("--dims must be positive");
    if (auto c3 = check_c3ep(g); c3.witness) {
        if (common.json) out << json{{"status", "RefusedC3EP"}, {"witness", witness_to_json(*c3.witness)}}.dump(2) << '\n';
        else out << "refused: relation violates C3-EP, witness " << witness_text(*c3.witness) << '\n';
        return refused;
    }
    int passed = 0;
    json trials = json::array();
    for (int t = 0; t < args.trials; ++t) {
        const std::uint64_t seed = common.seed + static_cast<std::uint64_t>(t);
        auto [circuit, u] = random_circuit_unitary(g, {args.leg_dim, args.wire_dim}, seed);
        const Decomposition d = decompose(u, g, {common.tol, seed, false});
        const bool pass = d.report.success();
        passed += pass;
        const double res = d.report.recomposition_residual;
        if (common.json)
            trials.push_back({{"trial", t}, {"seed", seed}, {"dim", u.dim()}, {"status", status_name(d.report.status)},
                              {"residual", std::isnan(res) ? json() : json(res)}});
        else
            out << "trial " << t << " seed " << seed << " dim " << u.dim() << ": " << status_name(d.report.status)
                << (std::isnan(res) ? "" : ", residual " + sci(res)) << '\n';
    }
    if (common.json) out << json{{"passed", passed}, {"trials", trials}}.dump(2) << '\n';
    else out << passed << "/" << args.trials << " passed\n";
    return passed == args.trials ? ok : numerical_failure;
}

int cmd_gallery(const std::string& name, const Common& common, std::ostream& out) {
    if (name == "u3") emit(channel_to_json(u3()), common, out, "u3");
    else if (name == "cnot") emit(channel_to_json(cnot()), common, out, "cnot");
    else if (name == "swap") emit(channel_to_json(swap_channel()), common, out, "swap");
    else if (name == "identity")
        emit(channel_to_json(identity_channel({"a1", "a2"}, {"b1", "b2"}, {2, 2})), common, out, "identity");
    else if (name == "loose-wires") emit(channel_to_json(loose_wires_c3().second), common, out, "loose-wires unitary");
    else if (name == "loose-wires-circuit") {
        const ConceptLattice lat(c3_relation());
        emit(circuit_to_json(loose_wires_c3().first, &lat), common, out, "loose-wires circuit");
    } else if (name == "two-cnot") {
        emit(circuit_to_json(two_cnot_circuit().first), common, out, "two-CNOT circuit");
    } else if (name.rfind("counterexample:", 0) == 0) {
        const Relation g = load_relation(name.substr(std::string("counterexample:").size()));
        if (check_c3ep(g).satisfied()) throw InputError("relation satisfies C3-EP; no counterexample applies");
        const Counterexample ce = build_counterexample(g, common.seed);
        const bool equal = detail::same_relation(ce.structure, g);
        if (!equal) throw NumericalError("counterexample causal structure differs from the relation");
        emit(channel_to_json(ce.grouped), common, out,
             "counterexample (dim " + std::to_string(ce.grouped.dim()) + ", " + std::to_string(ce.attempts) +
                 " attempt(s), causal structure equals relation)");
    } else {
        throw InputError("unknown gallery entry '" + name +
                         "' (u3, cnot, swap, identity, loose-wires, loose-wires-circuit, two-cnot, counterexample:<file>)");
    }
    return ok;
}

int guarded(const std::function<int()>& command, std::ostream& err) {
    try {
        return command();
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return input_error;
    } catch (const json::exception& e) {
        err << "error: " << e.what() << '\n';
        return input_error;
    } catch (const std::length_error& e) {
        err << "error: " << e.what() << '\n';
        return input_error;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return input_error;
    } catch (const std::out_of_range& e) {
        err << "error: " << e.what() << '\n';
        return input_error;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return numerical_failure;
    }
}

}  // namespace ucd::cli
