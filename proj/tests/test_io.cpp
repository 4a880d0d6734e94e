#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "test_support.hpp"
#include "ucd/gallery.hpp"
#include "ucd/io.hpp"

using namespace ucd;
using namespace ucd::testing;

TEST(Io, MatrixRoundTrip) {
    Rng rng(1);
    const Matrix m = ginibre(3, 2, rng);
    EXPECT_EQ(matrix_from_json(matrix_to_json(m)), m);
    EXPECT_EQ(matrix_from_json(json::parse("[[1, 0], [0, 1]]")), Matrix::Identity(2, 2));
}

TEST(Io, MatrixRejectsMalformed) {
    EXPECT_THROW(matrix_from_json(json::parse("[]")), InputError);
    EXPECT_THROW(matrix_from_json(json::parse("[[1, 2], [3]]")), InputError);
    EXPECT_THROW(matrix_from_json(json::parse("[[[1, 2, 3]]]")), InputError);
}

TEST(Io, RelationRoundTrip) {
    const Relation g = c3_relation();
    EXPECT_EQ(relation_from_json(relation_to_json(g)), g);
    EXPECT_EQ(load_relation(data("c3.json")), g);
    EXPECT_EQ(load_relation(data("empty.json")).size(), 0u);
}

TEST(Io, RelationRejectsMalformed) {
    EXPECT_THROW(relation_from_json(json::parse(R"({"inputs": ["a"]})")), InputError);
    EXPECT_THROW(relation_from_json(json::parse(R"({"inputs": ["a"], "outputs": ["b"], "pairs": [["a"]]})")),
                 InputError);
    EXPECT_THROW(relation_from_json(json::parse(R"({"inputs": ["a"], "outputs": ["b"], "pairs": [["a", "z"]]})")),
                 RelationError);
    EXPECT_THROW(load_relation(data("missing.json")), InputError);
}

TEST(Io, ChannelRoundTrip) {
    const UnitaryChannel u = u3();
    const UnitaryChannel v = channel_from_json(channel_to_json(u));
    EXPECT_EQ(v.matrix, u.matrix);
    EXPECT_EQ(v.input_labels(), u.input_labels());
    EXPECT_EQ(v.output_labels(), u.output_labels());
    Matrix bad = Matrix::Identity(2, 2);
    bad(0, 0) = 0.5;
    json j = channel_to_json(identity_channel({"a"}, {"b"}, {2}));
    j["matrix"] = matrix_to_json(bad);
    EXPECT_THROW(channel_from_json(j), std::invalid_argument);
}

TEST(Io, CircuitRoundTrip) {
    const auto [c, u] = random_circuit_unitary(restrict_to(c3_relation(), {"a1", "a2"}, {"b1", "b2"}), {}, 3);
    const ConceptLattice lat(c3_relation());
    const Circuit d = circuit_from_json(circuit_to_json(c));
    EXPECT_EQ(d.input_dims, c.input_dims);
    EXPECT_EQ(d.wire_dims, c.wire_dims);
    EXPECT_LT((compose(d).matrix - u.matrix).norm(), 1e-10);
    const auto [lc, lu] = loose_wires_c3();
    const json j = circuit_to_json(lc, &lat);
    EXPECT_TRUE(j["nodes"][0].contains("alpha"));
    EXPECT_EQ(compose(circuit_from_json(j)).matrix, lu.matrix);
}

TEST(Io, CircuitRejectsBadGates) {
    const auto [c, u] = loose_wires_c3();
    json j = circuit_to_json(c);
    j["gates"]["0"] = matrix_to_json(Matrix::Identity(3, 3));
    EXPECT_THROW(circuit_from_json(j), ShapeError);
    j = circuit_to_json(c);
    j["gates"].erase("1");
    EXPECT_THROW(circuit_from_json(j), InputError);
    j = circuit_to_json(c);
    j["wire_dims"] = {{"0-1", 2}};
    EXPECT_THROW(circuit_from_json(j), InputError);
}

TEST(Io, ShapeRoundTrip) {
    const ConceptLattice lat(load_relation(data("g41.json")));
    const CircuitShape s = shape_from_json(lattice_to_json(lat));
    EXPECT_EQ(s.covers, lat.shape().covers);
    EXPECT_EQ(s.lambda, lat.shape().lambda);
    EXPECT_EQ(connectivity(s), lat.relation());
}

TEST(Io, UnparsableFile) {
    const auto path = std::filesystem::temp_directory_path() / "ucd_io_bad.json";
    std::ofstream(path) << "{not json";
    EXPECT_THROW(read_json_file(path.string()), InputError);
    EXPECT_THROW(load_channel(path.string()), InputError);
    std::filesystem::remove(path);
}

TEST(Io, ReportCarriesWitness) {
    const Decomposition d = decompose(u3(), c3_relation());
    const json j = report_to_json(d.report);
    EXPECT_EQ(j["status"], "RefusedC3EP");
    EXPECT_EQ(j["witness"]["inputs"].size(), 3u);
}
