#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>

namespace ucd::cli {

enum Exit : int { ok = 0, refused = 1, input_error = 2, numerical_failure = 3 };

struct Common {
    double tol = 1e-8;
    std::uint64_t seed = 0;
    bool json = false;
    std::string out;  // file to write the produced artifact to
};

struct LatticeArgs {
    std::string relation;
    std::string format = "text";  // text | dot | json
};

struct AnalyzeArgs {
    std::string unitary;
    double threshold = 0.0;  // 0 selects the library default
};

struct DecomposeArgs {
    std::string unitary, relation;
    bool pad_connectivity = false;
};

struct VerifyArgs {
    std::string unitary, circuit, relation;
    bool pad_connectivity = false;
};

struct RoundtripArgs {
    std::string relation;
    int trials = 10;
    int wire_dim = 2;
    int leg_dim = 2;
};

int cmd_lattice(const LatticeArgs& args, std::ostream& out);
int cmd_check(const std::string& relation, const Common& common, std::ostream& out);
int cmd_analyze(const AnalyzeArgs& args, const Common& common, std::ostream& out);
int cmd_decompose(const DecomposeArgs& args, const Common& common, std::ostream& out);
int cmd_verify(const VerifyArgs& args, const Common& common, std::ostream& out);
int cmd_roundtrip(const RoundtripArgs& args, const Common& common, std::ostream& out);
int cmd_gallery(const std::string& name, const Common& common, std::ostream& out);

// Runs a command, mapping exceptions to exit codes with a message on err.
int guarded(const std::function<int()>& command, std::ostream& err);

}  // namespace ucd::cli
