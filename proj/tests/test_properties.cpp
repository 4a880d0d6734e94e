#include <gtest/gtest.h>

#include "test_support.hpp"
#include "ucd/operator_algebra.hpp"

using namespace ucd;
using namespace ucd::testing;

// The maps α ↦ common children and β ↦ common parents form a Galois
// connection; checked for every relation and every pair of subsets up to 3×3.
TEST(GaloisLaws, Exhaustive) {
    for (int n = 1; n <= 3; ++n)
        for (int m = 1; m <= 3; ++m)
            for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << (n * m)); ++bits) {
                const Relation g = relation_from_bits(bits, n, m);
                const Mask all_a = full_mask(n), all_b = full_mask(m);
                for (Mask a = 0; a <= all_a; ++a) {
                    const Mask cc = g.common_children(a);
                    ASSERT_EQ(g.closure_inputs(a) & a, a);                            // extensive
                    ASSERT_EQ(g.closure_inputs(g.closure_inputs(a)), g.closure_inputs(a));  // idempotent
                    ASSERT_EQ(g.common_children(g.closure_inputs(a)), cc);
                    for (Mask b = 0; b <= all_b; ++b)
                        ASSERT_EQ(is_subset(b, cc), is_subset(a, g.common_parents(b)));
                    for (Mask a2 = 0; a2 <= all_a; ++a2)
                        if (is_subset(a, a2)) {
                            ASSERT_TRUE(is_subset(g.common_children(a2), cc));  // antitone
                            ASSERT_TRUE(is_subset(g.closure_inputs(a), g.closure_inputs(a2)));  // monotone
                        }
                }
                for (Mask b = 0; b <= all_b; ++b) {
                    ASSERT_EQ(g.closure_outputs(b) & b, b);
                    ASSERT_EQ(g.closure_outputs(g.closure_outputs(b)), g.closure_outputs(b));
                }
            }
}

// Mask-based maps agree with the set-based oracle.
TEST(GaloisLaws, MatchSetOracle) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 100; ++t) {
        const Relation g = random_relation(1 + static_cast<int>(rng() % 5), 1 + static_cast<int>(rng() % 5), rng);
        const Mask a = rng() & full_mask(g.num_inputs());
        EXPECT_EQ(set_of(g.output_labels(g.common_children(a))), common_children_set(g, set_of(g.input_labels(a))));
    }
}

namespace {

// U (M_d1 ⊗ 1_m1 ⊕ M_d2 ⊗ 1_m2) U† on C^n, n = d1 m1 + d2 m2.
MatrixSubalgebra random_algebra(const std::vector<std::pair<int, int>>& blocks, Rng& rng) {
    int n = 0;
    for (auto [d, m] : blocks) n += d * m;
    const Matrix u = haar_unitary(n, rng);
    std::vector<Matrix> gens;
    int off = 0;
    for (auto [d, m] : blocks) {
        for (int k = 0; k < 2; ++k) {
            Matrix g = Matrix::Zero(n, n);
            g.block(off, off, d * m, d * m) = kron(ginibre(d, d, rng), Matrix::Identity(m, m));
            gens.push_back(u * g * u.adjoint());
        }
        off += d * m;
    }
    return algebra_closure(TensorSpace::from_dims({n}), gens);
}

}  // namespace

TEST(AlgebraProperties, DoubleCommutantAndCentre) {
    Rng rng(17);
    const std::vector<std::vector<std::pair<int, int>>> cases = {
        {{2, 1}}, {{2, 2}}, {{1, 1}, {1, 1}}, {{2, 1}, {1, 2}}, {{2, 2}, {1, 3}}, {{3, 1}, {2, 1}}};
    for (const auto& blocks : cases) {
        const MatrixSubalgebra s = random_algebra(blocks, rng);
        std::size_t expected = 0;
        for (auto [d, m] : blocks) expected += d * d;
        EXPECT_EQ(s.dim(), expected);
        const MatrixSubalgebra sc = commutant(s, 1);
        std::size_t expected_c = 0;
        for (auto [d, m] : blocks) expected_c += m * m;
        EXPECT_EQ(sc.dim(), expected_c);
        EXPECT_TRUE(span_equal(commutant(sc, 2), s));
        const MatrixSubalgebra z = centre(s);
        EXPECT_EQ(z.dim(), blocks.size());
        for (const auto& x : z.basis) {
            EXPECT_TRUE(s.contains(x));
            EXPECT_TRUE(sc.contains(x));
        }
        const auto ps = minimal_central_projectors(s, 3);
        ASSERT_EQ(ps.size(), blocks.size());
        Matrix sum = Matrix::Zero(s.n(), s.n());
        for (std::size_t i = 0; i < ps.size(); ++i) {
            sum += ps[i];
            EXPECT_LT((ps[i] * ps[i] - ps[i]).norm(), 1e-9);
            for (std::size_t j = i + 1; j < ps.size(); ++j) EXPECT_LT((ps[i] * ps[j]).norm(), 1e-9);
        }
        EXPECT_LT((sum - Matrix::Identity(s.n(), s.n())).norm(), 1e-9);
    }
}

TEST(AlgebraProperties, ClosureIsClosed) {
    Rng rng(23);
    for (int t = 0; t < 5; ++t) {
        const MatrixSubalgebra s = random_algebra({{2, 1}, {1, 2}}, rng);
        for (std::size_t i = 0; i < s.basis.size(); ++i) {
            EXPECT_TRUE(s.contains(s.basis[i].adjoint()));
            for (std::size_t j = 0; j < s.basis.size(); ++j) EXPECT_TRUE(s.contains(s.basis[i] * s.basis[j]));
        }
    }
}
