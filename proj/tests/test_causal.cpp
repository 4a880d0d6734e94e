#include <gtest/gtest.h>

#include "test_support.hpp"
#include "ucd/decomposer.hpp"
#include "ucd/gallery.hpp"

using namespace ucd;
using namespace ucd::testing;

namespace {

Matrix pauli(char p) {
    Matrix m = Matrix::Zero(2, 2);
    if (p == 'X') m << 0, 1, 1, 0;
    if (p == 'Z') m << 1, 0, 0, -1;
    if (p == 'I') m = Matrix::Identity(2, 2);
    return m;
}

UnitaryChannel haar_channel(const std::vector<int>& in_dims, const std::vector<int>& out_dims, std::uint64_t seed,
                            const std::string& in_prefix = "a", const std::string& out_prefix = "b") {
    Rng rng(seed);
    std::vector<Leg> in, out;
    for (std::size_t i = 0; i < in_dims.size(); ++i) in.push_back({in_prefix + std::to_string(i + 1), in_dims[i]});
    for (std::size_t i = 0; i < out_dims.size(); ++i) out.push_back({out_prefix + std::to_string(i + 1), out_dims[i]});
    const TensorSpace is(in), os(out);
    return make_channel(haar_unitary(is.total_dim(), rng), is, os);
}

// Every subset pair of inputs and outputs: the composite test and the Choi
// oracle must agree.
void expect_choi_agreement(const UnitaryChannel& u) {
    const auto ins = u.input_labels(), outs = u.output_labels();
    for (std::uint64_t am = 1; am < (1u << ins.size()); ++am)
        for (std::uint64_t bm = 1; bm < (1u << outs.size()); ++bm) {
            std::vector<std::string> alpha, beta;
            for (std::size_t i = 0; i < ins.size(); ++i)
                if ((am >> i) & 1) alpha.push_back(ins[i]);
            for (std::size_t i = 0; i < outs.size(); ++i)
                if ((bm >> i) & 1) beta.push_back(outs[i]);
            EXPECT_EQ(composite_influences(u, alpha, beta), !no_influence_choi_oracle(u, alpha, beta))
                << "alpha " << am << " beta " << bm;
        }
}

}  // namespace

TEST(HeisenbergImage, IdentityAndSwap) {
    const UnitaryChannel id = identity_channel({"a1", "a2"}, {"b1", "b2"}, {2, 3});
    EXPECT_TRUE(span_equal(heisenberg_image(id, {"b2"}), leg_algebra(id.in_space, {1})));
    const UnitaryChannel sw = swap_channel();
    EXPECT_TRUE(span_equal(heisenberg_image(sw, {"b1"}), leg_algebra(sw.in_space, {1})));
}

TEST(HeisenbergImage, CnotContainsXX) {
    const UnitaryChannel c = cnot();
    const MatrixSubalgebra img = heisenberg_image(c, {"b1"});
    EXPECT_TRUE(img.contains(kron(pauli('X'), pauli('X'))));
    // Oracle: direct conjugation.
    const Matrix direct = c.matrix.adjoint() * kron(pauli('X'), pauli('I')) * c.matrix;
    EXPECT_LT((direct - kron(pauli('X'), pauli('X'))).norm(), 1e-14);
}

TEST(Influence, U3NoInfluencePairs) {
    const UnitaryChannel u = u3();
    EXPECT_FALSE(influences(u, "a3", "b1"));
    EXPECT_FALSE(influences(u, "a1", "b3"));
    EXPECT_TRUE(influences(u, "a2", "b2"));
    EXPECT_EQ(causal_structure(u), c3_relation());
}

TEST(Influence, CnotPhaseKickback) {
    const UnitaryChannel c = cnot();
    EXPECT_TRUE(influences(c, "a2", "b1"));
    // Oracle: X⊗X does not commute with 1⊗Z.
    EXPECT_GT(commutator(kron(pauli('X'), pauli('X')), kron(pauli('I'), pauli('Z'))).norm(), 1.0);
    EXPECT_EQ(causal_structure(c).size(), 4u);
}

TEST(Influence, SwapAndIdentity) {
    EXPECT_EQ(pair_set(causal_structure(swap_channel())), (PairSet{{"a1", "b2"}, {"a2", "b1"}}));
    const UnitaryChannel id = identity_channel({"a1", "a2"}, {"b1", "b2"}, {2, 2});
    EXPECT_FALSE(influences(id, "a1", "b2"));
    EXPECT_EQ(pair_set(causal_structure(id)), (PairSet{{"a1", "b1"}, {"a2", "b2"}}));
}

TEST(Influence, StrengthGapOnU3) {
    const CausalAnalysis c = analyze_causal_structure(u3());
    for (const auto& p : c.pairs) {
        EXPECT_TRUE(p.strength < 1e-12 || p.strength > 0.5) << p.a << p.b << " " << p.strength;
        EXPECT_FALSE(p.borderline);
    }
    EXPECT_TRUE(c.warnings.empty());
}

TEST(Influence, BorderlineWarning) {
    // A rotation by a tiny angle mixing the two qubits.
    const double eps = 1e-9;
    Matrix g = Matrix::Identity(4, 4);
    g(1, 1) = g(2, 2) = std::cos(eps);
    g(1, 2) = -std::sin(eps);
    g(2, 1) = std::sin(eps);
    const UnitaryChannel u = make_channel(g, qubits({"a1", "a2"}), qubits({"b1", "b2"}));
    const CausalAnalysis c = analyze_causal_structure(u);
    EXPECT_FALSE(c.warnings.empty());
    // The coupling is resolved, not lost next to the O(1) diagonal terms.
    EXPECT_NEAR(influence_strength(u, "a1", "b2"), 2 * eps, 1e-12);
    EXPECT_TRUE(influences(u, "a1", "b2"));
}

TEST(ChoiOracle, Examples) {
    EXPECT_TRUE(no_influence_choi_oracle(u3(), {"a3"}, {"b1"}));
    EXPECT_TRUE(no_influence_choi_oracle(swap_channel(), {"a1"}, {"b1"}));
    EXPECT_FALSE(no_influence_choi_oracle(cnot(), {"a2"}, {"b1"}));
}

TEST(ChoiOracle, AgreesOnGallery) {
    expect_choi_agreement(u3());
    expect_choi_agreement(cnot());
    expect_choi_agreement(swap_channel());
    expect_choi_agreement(identity_channel({"a1", "a2", "a3"}, {"b1", "b2", "b3"}, {2, 2, 2}));
}

TEST(ChoiOracle, AgreesOnRandomAndStructured) {
    expect_choi_agreement(haar_channel({2, 2, 2}, {2, 2, 2}, 1));
    expect_choi_agreement(haar_channel({2, 3}, {3, 2}, 2));
    // A random unitary on the first two legs, identity on the third.
    expect_choi_agreement(tensor(haar_channel({2, 2}, {2, 2}, 3), haar_channel({2}, {2}, 4, "c", "d")));
    // Random circuits of a few shapes.
    const Relation chain({"a1", "a2"}, {"b1", "b2"}, {{"a1", "b1"}, {"a1", "b2"}, {"a2", "b2"}});
    expect_choi_agreement(random_circuit_unitary(chain, {}, 5).second);
    const Relation fan({"a1", "a2", "a3"}, {"b"}, {{"a1", "b"}, {"a2", "b"}, {"a3", "b"}});
    expect_choi_agreement(random_circuit_unitary(fan, {}, 6).second);
}

TEST(Atomicity, Examples) {
    EXPECT_TRUE(atomicity_check(u3()));
    EXPECT_TRUE(atomicity_check(haar_channel({2, 2, 2}, {2, 2, 2}, 9)));
    EXPECT_TRUE(atomicity_check(identity_channel({"a1", "a2"}, {"b1", "b2"}, {2, 2})));
    const Relation chain({"a1", "a2", "a3"}, {"b1", "b2", "b3"},
                         {{"a1", "b1"}, {"a1", "b2"}, {"a1", "b3"}, {"a2", "b2"}, {"a2", "b3"}, {"a3", "b3"}});
    EXPECT_TRUE(atomicity_check(random_circuit_unitary(chain, {}, 10).second));
}

TEST(CausalProperties, TensorProductIsDisjointUnion) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const UnitaryChannel u = seed % 2 ? u3() : swap_channel();
        const UnitaryChannel v = haar_channel({2}, {2}, seed, "c", "d");
        const UnitaryChannel w = tensor(u, tensor(v, identity_channel({"x"}, {"y"}, {2})));
        PairSet expected = pair_set(causal_structure(u));
        for (const auto& p : pair_set(causal_structure(v))) expected.insert(p);
        expected.insert({"x", "y"});
        EXPECT_EQ(pair_set(causal_structure(w)), expected);
    }
}

TEST(CausalProperties, RelabelingEquivariance) {
    const UnitaryChannel u = u3();
    const UnitaryChannel r = reorder_channel(u, {"a3", "a1", "a2"}, {"b2", "b3", "b1"});
    EXPECT_EQ(pair_set(causal_structure(r)), pair_set(causal_structure(u)));
    // Renaming legs renames pairs.
    UnitaryChannel renamed = u;
    renamed.in_space = TensorSpace({{"p", 2}, {"q", 2}, {"r", 2}});
    renamed.out_space = TensorSpace({{"x", 2}, {"y", 2}, {"z", 2}});
    EXPECT_EQ(pair_set(causal_structure(renamed)),
              (PairSet{{"p", "x"}, {"p", "y"}, {"q", "x"}, {"q", "y"}, {"q", "z"}, {"r", "y"}, {"r", "z"}}));
}

TEST(CausalProperties, RandomLocalUnitariesDoNotChangeStructure) {
    // Local unitaries before and after leave the causal structure unchanged.
    Rng rng(15);
    const UnitaryChannel u = u3();
    Matrix before = Matrix::Identity(1, 1), after = Matrix::Identity(1, 1);
    for (int k = 0; k < 3; ++k) {
        before = kron(before, haar_unitary(2, rng));
        after = kron(after, haar_unitary(2, rng));
    }
    const UnitaryChannel v = make_channel(after * u.matrix * before, u.in_space, u.out_space);
    EXPECT_EQ(causal_structure(v), c3_relation());
}

TEST(Channel, RejectsNonUnitary) {
    Matrix m = Matrix::Identity(4, 4);
    m(0, 0) = 2;
    EXPECT_THROW(make_channel(m, qubits({"a1", "a2"}), qubits({"b1", "b2"})), std::invalid_argument);
    EXPECT_THROW(make_channel(Matrix::Identity(4, 4), qubits({"a1"}), qubits({"b1", "b2"})), std::invalid_argument);
}
