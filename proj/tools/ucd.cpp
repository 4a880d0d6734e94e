#include <CLI11.hpp>

#include <iostream>
#include <sstream>

#include "commands.hpp"

using namespace ucd::cli;

int main(int argc, char** argv) {
    CLI::App app{"Causal decomposition of unitary channels"};
    app.require_subcommand(1);

    Common common;
    auto add_common = [&](CLI::App* sub, bool with_out) {
        sub->add_option("--tol", common.tol, "numerical tolerance")->capture_default_str();
        sub->add_option("--seed", common.seed, "random seed")->capture_default_str();
        sub->add_flag("--json", common.json, "machine-readable output");
        if (with_out) sub->add_option("--out", common.out, "write the produced artifact to this file");
    };

    LatticeArgs lattice;
    auto* lat = app.add_subcommand("lattice", "build the concept lattice of a relation");
    lat->add_option("relation", lattice.relation)->required();
    lat->add_option("--format", lattice.format, "text, dot or json")->check(CLI::IsMember({"text", "dot", "json"}));
    bool lattice_json = false;
    lat->add_flag("--json", lattice_json, "same as --format json");

    std::string check_file;
    auto* check = app.add_subcommand("check", "test the C3-exclusion property");
    check->add_option("relation", check_file)->required();
    add_common(check, false);

    AnalyzeArgs analyze;
    auto* an = app.add_subcommand("analyze", "causal structure of a unitary");
    an->add_option("unitary", analyze.unitary)->required();
    an->add_option("--tol", analyze.threshold, "influence threshold (default 1e-9)");
    an->add_flag("--json", common.json, "machine-readable output");

    DecomposeArgs dec;
    auto* de = app.add_subcommand("decompose", "synthesize a circuit of shape Λ(G)");
    de->add_option("unitary", dec.unitary)->required();
    de->add_option("relation", dec.relation)->required();
    de->add_flag("--pad-connectivity", dec.pad_connectivity, "count dimension-1 wires as connections");
    add_common(de, true);

    VerifyArgs ver;
    auto* ve = app.add_subcommand("verify", "check a circuit against a unitary and a relation");
    ve->add_option("unitary", ver.unitary)->required();
    ve->add_option("circuit", ver.circuit)->required();
    ve->add_option("relation", ver.relation)->required();
    ve->add_flag("--pad-connectivity", ver.pad_connectivity, "count dimension-1 wires as connections");
    add_common(ve, false);

    RoundtripArgs rt;
    std::string dims = "2";
    auto* ro = app.add_subcommand("roundtrip", "decompose random circuit unitaries of shape Λ(G)");
    ro->add_option("relation", rt.relation)->required();
    ro->add_option("--trials", rt.trials)->capture_default_str();
    ro->add_option("--dims", dims, "wire dimension, or leg:wire")->capture_default_str();
    add_common(ro, false);

    std::string gallery_name;
    auto* ga = app.add_subcommand("gallery", "emit a named construction");
    ga->add_option("name", gallery_name, "u3, cnot, swap, identity, loose-wires, loose-wires-circuit, two-cnot, counterexample:<file>")
        ->required();
    add_common(ga, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : input_error;
    }

    return guarded(
        [&]() -> int {
            if (*lat) {
                if (lattice_json) lattice.format = "json";
                return cmd_lattice(lattice, std::cout);
            }
            if (*check) return cmd_check(check_file, common, std::cout);
            if (*an) return cmd_analyze(analyze, common, std::cout);
            if (*de) return cmd_decompose(dec, common, std::cout);
            if (*ve) return cmd_verify(ver, common, std::cout);
            if (*ro) {
                const auto colon = dims.find(':');
                try {
                    if (colon == std::string::npos) {
                        rt.wire_dim = std::stoi(dims);
                    } else {
                        rt.leg_dim = std::stoi(dims.substr(0, colon));
                        rt.wire_dim = std::stoi(dims.substr(colon + 1));
                    }
                } catch (const std::exception&) {
                    throw std::invalid_argument("--dims expects an integer or leg:wire");
                }
                return cmd_roundtrip(rt, common, std::cout);
            }
            return cmd_gallery(gallery_name, common, std::cout);
        },
        std::cerr);
}
