#pragma once

// Causal structure of unitary channels. The algebraic test asks whether the
// Heisenberg image of an output algebra commutes with an input algebra; the
// Choi oracle asks whether the marginal channel onto the outputs ignores the
// inputs. The two are computed along independent paths.

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lattice.hpp"
#include "linalg.hpp"
#include "operator_algebra.hpp"
#include "relation.hpp"

namespace ucd {

struct UnitaryChannel {
    Matrix matrix;
    TensorSpace in_space, out_space;

    long dim() const { return matrix.rows(); }
    std::vector<std::string> input_labels() const { return labels_of(in_space); }
    std::vector<std::string> output_labels() const { return labels_of(out_space); }

    // Relation with this channel's labels and no pairs.
    Relation empty_relation() const { return Relation(input_labels(), output_labels()); }

private:
    static std::vector<std::string> labels_of(const TensorSpace& s) {
        std::vector<std::string> out;
        for (const auto& l : s.legs()) out.push_back(l.label);
        return out;
    }
};

inline UnitaryChannel make_channel(Matrix m, TensorSpace in, TensorSpace out, double tolerance = 1e-10) {
    if (m.rows() != m.cols()) throw std::invalid_argument("unitary matrix must be square");
    if (in.total_dim() != m.cols() || out.total_dim() != m.rows())
        throw std::invalid_argument("leg dimensions do not match the matrix size " + std::to_string(m.rows()));
    const double r = unitarity_residual(m);
    if (r > tolerance * std::max(1.0, std::sqrt(static_cast<double>(m.rows()))))
        throw std::invalid_argument("matrix is not unitary (residual " + std::to_string(r) + ")");
    return {std::move(m), std::move(in), std::move(out)};
}

inline std::vector<int> leg_indices(const TensorSpace& s, const std::vector<std::string>& labels) {
    std::vector<int> out;
    for (const auto& l : labels) out.push_back(s.index_of(l));
    return out;
}

// Reorders the channel's legs to the given label orders.
inline UnitaryChannel reorder_channel(const UnitaryChannel& u, const std::vector<std::string>& inputs,
                                      const std::vector<std::string>& outputs) {
    auto in_order = leg_indices(u.in_space, inputs);
    auto out_order = leg_indices(u.out_space, outputs);
    if (in_order.size() != u.in_space.size() || out_order.size() != u.out_space.size())
        throw std::invalid_argument("label lists do not cover the channel's legs");
    Matrix m = reorder_cols(reorder_rows(u.matrix, u.out_space.dims(), out_order), u.in_space.dims(), in_order);
    return {m, u.in_space.sub(in_order), u.out_space.sub(out_order)};
}

inline UnitaryChannel tensor(const UnitaryChannel& u, const UnitaryChannel& v) {
    std::vector<Leg> in = u.in_space.legs(), out = u.out_space.legs();
    in.insert(in.end(), v.in_space.legs().begin(), v.in_space.legs().end());
    out.insert(out.end(), v.out_space.legs().begin(), v.out_space.legs().end());
    return {kron(u.matrix, v.matrix), TensorSpace(in), TensorSpace(out)};
}

namespace detail {

// Column blocks C_I of T (rows: any space, columns: the space `dims` with the
// `legs` digit I), so that T (|I⟩⟨J| ⊗ 1) T† = C_I C_J†.
inline std::vector<Matrix> column_blocks(const Matrix& t, const std::vector<int>& dims, const std::vector<int>& legs) {
    const long d = product(permuted(dims, legs));
    const long m = product(dims) / d;
    Matrix tp = reorder_cols(t, dims, legs_first(dims.size(), legs));
    std::vector<Matrix> out;
    for (long i = 0; i < d; ++i) out.push_back(tp.middleCols(i * m, m));
    return out;
}

}  // namespace detail

// T (L(legs) ⊗ 1) T† for a unitary T whose columns live on `dims`; basis
// elements C_I C_J† / sqrt(m) are exactly orthonormal.
inline std::vector<Matrix> conjugated_leg_basis(const Matrix& t, const std::vector<int>& dims,
                                                const std::vector<int>& legs) {
    auto blocks = detail::column_blocks(t, dims, legs);
    const double norm = blocks.empty() ? 1.0 : std::sqrt(static_cast<double>(blocks[0].cols()));
    std::vector<Matrix> out;
    for (std::size_t j = 0; j < blocks.size(); ++j)
        for (std::size_t i = 0; i < blocks.size(); ++i) out.push_back(blocks[i] * blocks[j].adjoint() / norm);
    return out;
}

// U†(B_β ⊗ 1)U on the input space.
inline MatrixSubalgebra heisenberg_image(const UnitaryChannel& u, const std::vector<std::string>& beta) {
    auto legs = leg_indices(u.out_space, beta);
    return {u.in_space, conjugated_leg_basis(u.matrix.adjoint(), u.out_space.dims(), legs)};
}

namespace detail {

// max over composite matrix units E_ij on `legs` of ‖[E_ij ⊗ 1, g]‖_F. With
// the legs moved first and g in blocks g_kl, the commutator's squared norm is
// Σ_{l≠j} ‖g_jl‖² + Σ_{k≠i} ‖g_ki‖² + ‖g_jj − g_ii‖², a sum of non-negative
// terms that stays accurate near zero.
inline double max_leg_commutator(const Matrix& g, const std::vector<int>& dims, const std::vector<int>& legs) {
    const long d = product(permuted(dims, legs));
    const long m = product(dims) / d;
    Matrix gp = reorder_operator(g, dims, legs_first(dims.size(), legs));
    // Off-diagonal row and column sums, accumulated without the diagonal
    // block so that small couplings are not lost to cancellation.
    Eigen::VectorXd row_off = Eigen::VectorXd::Zero(d), col_off = Eigen::VectorXd::Zero(d);
    for (long k = 0; k < d; ++k)
        for (long l = 0; l < d; ++l)
            if (k != l) {
                const double n = gp.block(k * m, l * m, m, m).squaredNorm();
                row_off(k) += n;
                col_off(l) += n;
            }
    double best = 0.0;
    for (long i = 0; i < d; ++i)
        for (long j = 0; j < d; ++j) {
            double s = row_off(j) + col_off(i);
            if (i != j) s += (gp.block(j * m, j * m, m, m) - gp.block(i * m, i * m, m, m)).squaredNorm();
            best = std::max(best, std::sqrt(s));
        }
    return best;
}

}  // namespace detail

inline constexpr double influence_threshold = 1e-9;

// Normalized influence of input a on output b: the largest
// ‖[g, e]‖_F · sqrt(D) / (‖g‖_F ‖e‖_F) over matrix units g of B_b (conjugated)
// and e of A_a. Zero exactly when a does not influence b.
inline double influence_strength(const UnitaryChannel& u, const std::string& a, const std::string& b) {
    const int ai = u.in_space.index_of(a), bi = u.out_space.index_of(b);
    const auto dims = u.in_space.dims();
    const double big_d = static_cast<double>(u.dim());
    const double e_norm = std::sqrt(big_d / dims[ai]);
    double best = 0.0;
    for (const auto& g : conjugated_leg_basis(u.matrix.adjoint(), u.out_space.dims(), {bi}))
        best = std::max(best, detail::max_leg_commutator(g, dims, {ai}) * std::sqrt(big_d) / (g.norm() * e_norm));
    return best;
}

inline bool influences(const UnitaryChannel& u, const std::string& a, const std::string& b) {
    return influence_strength(u, a, b) > influence_threshold;
}

struct PairStrength {
    std::string a, b;
    double strength = 0.0;
    bool influences = false;
    bool borderline = false;  // within a factor 10 of the threshold
};

struct CausalAnalysis {
    Relation relation;
    std::vector<PairStrength> pairs;
    std::vector<std::string> warnings;
};

inline CausalAnalysis analyze_causal_structure(const UnitaryChannel& u, double threshold = influence_threshold) {
    CausalAnalysis out{u.empty_relation(), {}, {}};
    for (const auto& a : u.input_labels())
        for (const auto& b : u.output_labels()) {
            PairStrength p{a, b, influence_strength(u, a, b)};
            p.influences = p.strength > threshold;
            p.borderline = p.strength > threshold / 10 && p.strength < threshold * 10;
            if (p.influences) out.relation.add(out.relation.input_index(a), out.relation.output_index(b));
            if (p.borderline)
                out.warnings.push_back("borderline influence " + a + " -> " + b + ": strength " +
                                       std::to_string(p.strength) + " is within 10x of the threshold");
            out.pairs.push_back(p);
        }
    return out;
}

inline Relation causal_structure(const UnitaryChannel& u) { return analyze_causal_structure(u).relation; }

// Composite test: some element of U†(B_β) acts non-trivially on the α legs.
inline double composite_influence_strength(const UnitaryChannel& u, const std::vector<std::string>& alpha,
                                           const std::vector<std::string>& beta) {
    if (alpha.empty() || beta.empty()) return 0.0;
    auto alegs = leg_indices(u.in_space, alpha);
    const auto dims = u.in_space.dims();
    double best = 0.0;
    for (const auto& g : heisenberg_image(u, beta).basis)
        best = std::max(best, trivial_action_residual(g, dims, alegs));
    return best;
}

inline bool composite_influences(const UnitaryChannel& u, const std::vector<std::string>& alpha,
                                 const std::vector<std::string>& beta) {
    return composite_influence_strength(u, alpha, beta) > influence_threshold;
}

// Trace-norm distance of the normalized Choi state of Tr_{B∖β} ∘ U from
// (1_α / d_α) ⊗ (its α-marginal). Exact when the Choi dimension is at most 512,
// otherwise bounded above via sqrt(n) times the Frobenius norm.
inline double choi_signalling_distance(const UnitaryChannel& u, const std::vector<std::string>& alpha,
                                       const std::vector<std::string>& beta) {
    if (alpha.empty()) return 0.0;
    const auto in_dims = u.in_space.dims();
    const auto out_dims = u.out_space.dims();
    auto blegs = leg_indices(u.out_space, beta);
    auto alegs = leg_indices(u.in_space, alpha);
    const long big_d = u.dim();
    const long db = product(permuted(out_dims, blegs));
    const long m = big_d / db;
    // Output rows reordered to [β, rest]; column I reshaped to M_I (db × m).
    Matrix up = reorder_rows(u.matrix, out_dims, legs_first(out_dims.size(), blegs));
    std::vector<Matrix> mi(big_d);
    for (long i = 0; i < big_d; ++i) {
        Matrix col = up.col(i);
        mi[i] = Eigen::Map<const Matrix>(col.data(), m, db).transpose();
    }
    // J = Σ_IJ |I⟩⟨J| ⊗ M_I M_J†, indices (input, β).
    const long n = big_d * db;
    Matrix j(n, n);
    for (long i = 0; i < big_d; ++i)
        for (long k = 0; k < big_d; ++k) j.block(i * db, k * db, db, db) = mi[i] * mi[k].adjoint();
    j /= static_cast<double>(big_d);
    std::vector<int> jdims = in_dims;
    jdims.push_back(static_cast<int>(db));
    const double da = static_cast<double>(product(permuted(in_dims, alegs)));
    auto keep = complement(jdims.size(), alegs);
    Matrix marginal = partial_trace(j, jdims, keep);
    Matrix diff = j - embed(marginal, jdims, keep) / da;
    if (n <= 512) {
        Eigen::SelfAdjointEigenSolver<Matrix> es((diff + diff.adjoint()) / 2.0, Eigen::EigenvaluesOnly);
        return es.eigenvalues().cwiseAbs().sum();
    }
    return std::sqrt(static_cast<double>(n)) * diff.norm();
}

inline bool no_influence_choi_oracle(const UnitaryChannel& u, const std::vector<std::string>& alpha,
                                     const std::vector<std::string>& beta, double tolerance = 1e-8) {
    return choi_signalling_distance(u, alpha, beta) <= tolerance;
}

struct AtomicityViolation {
    std::vector<std::string> alpha, beta;
    bool composite = false, singleton = false;
};

// Composite influence α → β holds iff some a ∈ α influences some b ∈ β, over
// all subsets. Returns the first violation, if any.
inline std::optional<AtomicityViolation> atomicity_violation(const UnitaryChannel& u) {
    const Relation g = causal_structure(u);
    if (g.num_inputs() > 8 || g.num_outputs() > 8)
        throw std::length_error("atomicity check is exhaustive and limited to 8 legs per side");
    for (Mask am = 1; am <= g.all_inputs(); ++am)
        for (Mask bm = 1; bm <= g.all_outputs(); ++bm) {
            bool singleton = false;
            for (int a : mask_indices(am)) singleton = singleton || (g.children_mask(a) & bm) != 0;
            const bool composite = composite_influences(u, g.input_labels(am), g.output_labels(bm));
            if (composite != singleton)
                return AtomicityViolation{g.input_labels(am), g.output_labels(bm), composite, singleton};
        }
    return std::nullopt;
}

inline bool atomicity_check(const UnitaryChannel& u) { return !atomicity_violation(u).has_value(); }

}  // namespace ucd
