#include <gtest/gtest.h>

#include "ucd/operator_algebra.hpp"

using namespace ucd;

namespace {

Matrix pauli_x() {
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

Matrix pauli_z() {
    Matrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

Matrix hadamard() {
    Matrix m(2, 2);
    m << 1, 1, 1, -1;
    return m / std::sqrt(2.0);
}

MatrixSubalgebra conjugated(const MatrixSubalgebra& s, const Matrix& w) {
    MatrixSubalgebra out{s.ambient, {}};
    for (const auto& b : s.basis) out.basis.push_back(w * b * w.adjoint());
    return out;
}

MatrixSubalgebra diagonal(int n) {
    MatrixSubalgebra s{TensorSpace::from_dims({n}), {}};
    for (int i = 0; i < n; ++i) s.basis.push_back(matrix_unit(n, i, i));
    return s;
}

// M2 ⊕ M3 as block-diagonal matrix units in M5.
MatrixSubalgebra m2_plus_m3() {
    MatrixSubalgebra s{TensorSpace::from_dims({5}), {}};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) s.basis.push_back(matrix_unit(5, i, j));
    for (int i = 2; i < 5; ++i)
        for (int j = 2; j < 5; ++j) s.basis.push_back(matrix_unit(5, i, j));
    return s;
}

// Independent check that v B v† ⊆ L(C^d) ⊗ 1_m: every conjugated element
// commutes with 1_d ⊗ E_kl.
double left_factor_defect(const MatrixSubalgebra& b, const Matrix& v, int d, int m) {
    double r = 0.0;
    for (const auto& x : b.basis) {
        const Matrix y = v * x * v.adjoint();
        for (int k = 0; k < m; ++k)
            for (int l = 0; l < m; ++l) {
                const Matrix e = kron(Matrix::Identity(d, d), matrix_unit(m, k, l));
                r = std::max(r, (y * e - e * y).norm());
            }
    }
    return r;
}

void expect_projectors(const std::vector<Matrix>& ps, long n) {
    Matrix sum = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < ps.size(); ++i) {
        EXPECT_LT((ps[i] * ps[i] - ps[i]).norm(), 1e-9);
        EXPECT_LT((ps[i] - ps[i].adjoint()).norm(), 1e-9);
        for (std::size_t j = 0; j < i; ++j) EXPECT_LT((ps[i] * ps[j]).norm(), 1e-9);
        sum += ps[i];
    }
    EXPECT_LT((sum - Matrix::Identity(n, n)).norm(), 1e-9);
}

}  // namespace

TEST(AlgebraClosure, PauliExamples) {
    const TensorSpace q = TensorSpace::from_dims({2});
    EXPECT_EQ(algebra_closure(q, {pauli_x()}).dim(), 2u);
    EXPECT_EQ(algebra_closure(q, {pauli_x(), pauli_z()}).dim(), 4u);
    EXPECT_EQ(algebra_closure(q, {}).dim(), 1u);
    EXPECT_TRUE(algebra_closure(q, {pauli_x()}).contains(Matrix::Identity(2, 2)));
}

TEST(AlgebraClosure, RejectsWrongSize) {
    EXPECT_THROW(algebra_closure(TensorSpace::from_dims({2}), {Matrix::Identity(3, 3)}), AlgebraError);
}

TEST(Commutant, LegAlgebras) {
    const TensorSpace s = TensorSpace::from_dims({2, 2});
    const MatrixSubalgebra c = commutant(leg_algebra(s, {0}));
    EXPECT_TRUE(span_equal(c, leg_algebra(s, {1})));
    EXPECT_EQ(commutant(scalars(s)).dim(), 16u);
    const TensorSpace t = TensorSpace::from_dims({2, 3});
    EXPECT_TRUE(span_equal(commutant(leg_algebra(t, {1})), leg_algebra(t, {0})));
}

TEST(Commutant, DoubleCommutantOfConjugatedFactor) {
    Rng rng(3);
    const TensorSpace s = TensorSpace::from_dims({2, 2});
    const MatrixSubalgebra b = conjugated(leg_algebra(s, {0}), haar_unitary(4, rng));
    EXPECT_TRUE(span_equal(commutant(commutant(b, 1), 2), b));
}

TEST(Centre, Examples) {
    const TensorSpace m4 = TensorSpace::from_dims({4});
    EXPECT_EQ(centre(full_algebra(m4)).dim(), 1u);
    EXPECT_TRUE(is_factor(full_algebra(m4)));
    const MatrixSubalgebra d2 = diagonal(2);
    EXPECT_TRUE(span_equal(centre(d2), d2));
    EXPECT_FALSE(is_factor(d2));
    EXPECT_EQ(centre(leg_algebra(TensorSpace::from_dims({2, 2}), {0})).dim(), 1u);
}

TEST(CentralProjectors, Examples) {
    EXPECT_EQ(minimal_central_projectors(full_algebra(TensorSpace::from_dims({4}))).size(), 1u);
    auto d2 = minimal_central_projectors(diagonal(2));
    ASSERT_EQ(d2.size(), 2u);
    expect_projectors(d2, 2);
    for (const auto& p : d2) EXPECT_LT(std::min((p - matrix_unit(2, 0, 0)).norm(), (p - matrix_unit(2, 1, 1)).norm()), 1e-9);
}

TEST(CentralProjectors, M2PlusM3Ranks) {
    Rng rng(4);
    const MatrixSubalgebra s = conjugated(m2_plus_m3(), haar_unitary(5, rng));
    auto ps = minimal_central_projectors(s, 7);
    ASSERT_EQ(ps.size(), 2u);
    expect_projectors(ps, 5);
    std::vector<long> ranks;
    for (const auto& p : ps) {
        ranks.push_back(std::lround(p.trace().real()));
        for (const auto& b : s.basis) EXPECT_LT((p * b - b * p).norm(), 1e-9);
        EXPECT_TRUE(s.contains(p));
    }
    std::sort(ranks.begin(), ranks.end());
    EXPECT_EQ(ranks, (std::vector<long>{2, 3}));
}

TEST(FactorizeFactor, Examples) {
    const TensorSpace s = TensorSpace::from_dims({2, 2});
    FactorSplit f = factorize_factor(leg_algebra(s, {0}));
    EXPECT_EQ(f.d, 2);
    EXPECT_EQ(f.m, 2);
    EXPECT_LT((f.iso.matrix - Matrix::Identity(4, 4)).norm(), 1e-12);

    FactorSplit sc = factorize_factor(scalars(TensorSpace::from_dims({3})));
    EXPECT_EQ(sc.d, 1);
    EXPECT_EQ(sc.m, 3);
    EXPECT_THROW(factorize_factor(diagonal(2)), AlgebraError);
}

class WedderburnRoundTrip : public ::testing::TestWithParam<std::pair<int, int>> {};

TEST_P(WedderburnRoundTrip, ConjugatedFactor) {
    const auto [d, m] = GetParam();
    Rng rng(static_cast<std::uint64_t>(d * 31 + m));
    const TensorSpace s = TensorSpace::from_dims({d, m});
    const MatrixSubalgebra b = conjugated(leg_algebra(s, {0}), haar_unitary(d * m, rng));
    const FactorSplit f = factorize_factor(b, 5);
    EXPECT_EQ(f.d, d);
    EXPECT_EQ(f.m, m);
    EXPECT_LT(unitarity_residual(f.iso.matrix), 1e-9);
    EXPECT_LT(left_factor_defect(b, f.iso.matrix, d, m), 1e-8);
}

INSTANTIATE_TEST_SUITE_P(Dims, WedderburnRoundTrip,
                         ::testing::Values(std::pair{2, 2}, std::pair{2, 3}, std::pair{3, 2}, std::pair{2, 4},
                                           std::pair{3, 3}, std::pair{4, 3}, std::pair{4, 4}, std::pair{2, 8}));

TEST(SplitCommutingFactors, LegAlgebrasGiveIdentity) {
    const TensorSpace s = TensorSpace::from_dims({2, 2});
    const FactorsSplit f = split_commuting_factors({leg_algebra(s, {0}), leg_algebra(s, {1})}, s);
    EXPECT_EQ(f.dims, (std::vector<int>{2, 2}));
    EXPECT_EQ(f.multiplicity, 1);
    EXPECT_LT((f.iso.matrix - Matrix::Identity(4, 4)).norm(), 1e-12);

    const TensorSpace m3 = TensorSpace::from_dims({3});
    const FactorsSplit g = split_commuting_factors({full_algebra(m3)}, m3);
    EXPECT_EQ(g.dims, (std::vector<int>{3}));
}

TEST(SplitCommutingFactors, ConjugatedFactorsInM8) {
    Rng rng(8);
    const TensorSpace s = TensorSpace::from_dims({2, 2, 2});
    const Matrix w = haar_unitary(8, rng);
    const MatrixSubalgebra b1 = conjugated(leg_algebra(s, {0}), w), b2 = conjugated(leg_algebra(s, {1}), w);
    const FactorsSplit f = split_commuting_factors({b1, b2}, s, 3);
    EXPECT_EQ(f.dims, (std::vector<int>{2, 2}));
    EXPECT_EQ(f.multiplicity, 2);
    // Each conjugated factor acts on its own leg only.
    const std::vector<int> split{2, 2, 2};
    for (const auto& x : b1.basis) EXPECT_LT(trivial_action_residual(f.iso.matrix * x * f.iso.matrix.adjoint(), split, {1, 2}), 1e-8);
    for (const auto& x : b2.basis) EXPECT_LT(trivial_action_residual(f.iso.matrix * x * f.iso.matrix.adjoint(), split, {0, 2}), 1e-8);
}

TEST(SplitCommutingFactors, RejectsNonCommuting) {
    const TensorSpace s = TensorSpace::from_dims({2, 2});
    EXPECT_THROW(split_commuting_factors({leg_algebra(s, {0}), full_algebra(s)}, s), AlgebraError);
}

TEST(TensorSplit, Examples) {
    const TensorSpace s = TensorSpace::from_dims({2, 2});
    EXPECT_EQ(tensor_split_over_known_factor(full_algebra(s)).dim(), 4u);
    EXPECT_EQ(tensor_split_over_known_factor(leg_algebra(s, {0})).dim(), 1u);
    // M2 ⊗ D2.
    const MatrixSubalgebra x = algebra_closure(s, {embed(pauli_x(), {2, 2}, {0}), embed(pauli_z(), {2, 2}, {0}),
                                                   embed(pauli_z(), {2, 2}, {1})});
    ASSERT_EQ(x.dim(), 8u);
    const MatrixSubalgebra y = tensor_split_over_known_factor(x);
    EXPECT_TRUE(span_equal(y, diagonal(2)));
}

TEST(Sectorize, DiagonalQubit) {
    const TensorSpace a = TensorSpace::from_dims({2});
    const SectorDecomposition sd = sectorize(a, {0}, {{}}, {diagonal(2)});
    EXPECT_EQ(sd.count(), 2u);
    EXPECT_EQ(sd.sectors, (std::vector<std::vector<int>>{{1}, {1}}));
    expect_projectors(sd.projectors, 2);
    EXPECT_LT(unitarity_residual(sd.iso.matrix), 1e-9);
}

TEST(Sectorize, TwoLegFactorsGiveOneSector) {
    const TensorSpace s = TensorSpace::from_dims({2, 2});
    const SectorDecomposition sd = sectorize(s, {0, 1}, {{}, {}}, {leg_algebra(s, {0}), leg_algebra(s, {1})});
    EXPECT_EQ(sd.count(), 1u);
    EXPECT_EQ(sd.sectors, (std::vector<std::vector<int>>{{2, 2}}));
}

TEST(Sectorize, ProjectorsCommuteWithRestrictions) {
    Rng rng(12);
    const MatrixSubalgebra s = conjugated(m2_plus_m3(), haar_unitary(5, rng));
    const SectorDecomposition sd = sectorize(s.ambient, {0}, {{}}, {s}, 3);
    ASSERT_EQ(sd.count(), 2u);
    expect_projectors(sd.projectors, 5);
    for (const auto& p : sd.projectors)
        for (const auto& b : s.basis) EXPECT_LT((p * b - b * p).norm(), 1e-9);
}

TEST(AlgebraicLemma, ConjugatedTensorFactors) {
    Rng rng(21);
    // A = C^4 with X_1 = X_2 = a qubit each; B_k = W_k-conjugated factors.
    const TensorSpace s = TensorSpace::from_dims({4, 2, 2});
    const Matrix w = haar_unitary(4, rng);
    const Matrix wa = embed(w, {4, 2, 2}, {0});
    // B_1 = M2(first half of A) ⊗ L(X_1), B_2 = M2(second half of A) ⊗ L(X_2), after W on A.
    const TensorSpace fine = TensorSpace::from_dims({2, 2, 2, 2});
    auto lift = [&](const std::vector<int>& legs) {
        MatrixSubalgebra b = leg_algebra(fine, legs);
        b.ambient = s;
        return conjugated(b, wa);
    };
    const auto b1 = lift({0, 2}), b2 = lift({1, 3});
    const LemmaResult r = algebraic_lemma(s, {0}, {{1}, {2}}, {b1, b2}, 4);
    ASSERT_TRUE(std::holds_alternative<LemmaFactorization>(r));
    const auto& f = std::get<LemmaFactorization>(r);
    EXPECT_EQ(f.dims, (std::vector<int>{2, 2}));
    EXPECT_LT(unitarity_residual(f.iso.matrix), 1e-9);
    // V maps A ∩ B_k onto L(Z_k): pulled-back matrix units of Z_k lie in B_k.
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                const Matrix y = f.iso.matrix.adjoint() * embed(matrix_unit(2, i, j), {2, 2}, {k}) * f.iso.matrix;
                EXPECT_TRUE((k == 0 ? b1 : b2).contains(embed(y, {4, 2, 2}, {0})));
            }
}

TEST(AlgebraicLemma, SingleFullFactor) {
    const TensorSpace s = TensorSpace::from_dims({3});
    const LemmaResult r = algebraic_lemma(s, {0}, {{}}, {full_algebra(s)});
    ASSERT_TRUE(std::holds_alternative<LemmaFactorization>(r));
    const auto& f = std::get<LemmaFactorization>(r);
    EXPECT_EQ(f.dims, (std::vector<int>{3}));
    EXPECT_LT((f.iso.matrix - Matrix::Identity(3, 3)).norm(), 1e-12);
}

TEST(AlgebraicLemma, DiagonalIsObstructed) {
    const TensorSpace s = TensorSpace::from_dims({2});
    const LemmaResult r = algebraic_lemma(s, {0}, {{}}, {diagonal(2)});
    ASSERT_TRUE(std::holds_alternative<SectorObstruction>(r));
    EXPECT_EQ(std::get<SectorObstruction>(r).sectors.count(), 2u);
}

TEST(AlgebraicLemma, AssumptionsAreChecked) {
    const TensorSpace s = TensorSpace::from_dims({2, 2});
    // B is supported on leg 1 but no X leg is declared.
    EXPECT_THROW(algebraic_lemma(s, {0}, {{}}, {full_algebra(s)}), AssumptionError);
    // Non-commuting subalgebras.
    EXPECT_THROW(algebraic_lemma(s, {0, 1}, {{}, {}}, {full_algebra(s), leg_algebra(s, {0})}), AssumptionError);
}

TEST(UnitaryFromIsomorphism, Examples) {
    auto images_of = [](const Matrix& w) {
        const int d = static_cast<int>(w.cols());
        std::vector<std::vector<Matrix>> f(d, std::vector<Matrix>(d));
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) f[i][j] = w * matrix_unit(d, i, j) * w.adjoint();
        return f;
    };
    const Matrix h = hadamard();
    EXPECT_TRUE(equal_up_to_global_phase(unitary_from_isomorphism(images_of(h)), h, 1e-12));
    EXPECT_LT((unitary_from_isomorphism(images_of(Matrix::Identity(3, 3))) - Matrix::Identity(3, 3)).norm(), 1e-12);
    Rng rng(30);
    const Matrix w = haar_unitary(5, rng);
    EXPECT_TRUE(equal_up_to_global_phase(unitary_from_isomorphism(images_of(w)), w, 1e-9));
    // Not a *-isomorphism.
    auto bad = images_of(h);
    bad[0][1] = Matrix::Zero(2, 2);
    EXPECT_THROW(unitary_from_isomorphism(bad), NumericalError);
}

TEST(AmbientCap, LargeAmbientIsRejected) {
    EXPECT_THROW(check_ambient(max_ambient_dim + 1), std::length_error);
    EXPECT_NO_THROW(check_ambient(max_ambient_dim));
}
