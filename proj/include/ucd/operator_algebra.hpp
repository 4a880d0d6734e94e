#pragma once

// Finite-dimensional operator algebra on labeled tensor-product spaces:
// generated subalgebras, commutants, centres, Wedderburn-style splitting of
// factors, sector decompositions of commuting subalgebras, and the
// factorization lemma used by the circuit synthesis.
//
// Subalgebras are stored as bases orthonormal under ⟨X,Y⟩ = tr(X†Y). Every
// randomized step draws from a generator seeded by the caller.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "linalg.hpp"

#ifndef UCD_MAX_AMBIENT_DIM
#define UCD_MAX_AMBIENT_DIM 256
#endif

namespace ucd {

inline constexpr long max_ambient_dim = UCD_MAX_AMBIENT_DIM;

class AlgebraError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Leg {
    std::string label;
    int dim = 1;
    friend bool operator==(const Leg&, const Leg&) = default;
};

class TensorSpace {
public:
    TensorSpace() = default;
    explicit TensorSpace(std::vector<Leg> legs) : legs_(std::move(legs)) {
        for (std::size_t i = 0; i < legs_.size(); ++i) {
            if (legs_[i].dim < 1) throw AlgebraError("leg '" + legs_[i].label + "' has dimension < 1");
            for (std::size_t j = 0; j < i; ++j)
                if (legs_[j].label == legs_[i].label) throw AlgebraError("duplicate leg '" + legs_[i].label + "'");
        }
    }

    static TensorSpace from_dims(const std::vector<int>& dims, const std::string& prefix = "q") {
        std::vector<Leg> legs;
        for (std::size_t i = 0; i < dims.size(); ++i) legs.push_back({prefix + std::to_string(i), dims[i]});
        return TensorSpace(std::move(legs));
    }

    const std::vector<Leg>& legs() const { return legs_; }
    const Leg& leg(int i) const { return legs_.at(i); }
    std::size_t size() const { return legs_.size(); }
    std::vector<int> dims() const {
        std::vector<int> d;
        for (const auto& l : legs_) d.push_back(l.dim);
        return d;
    }
    long total_dim() const { return product(dims()); }

    int index_of(const std::string& label) const {
        for (std::size_t i = 0; i < legs_.size(); ++i)
            if (legs_[i].label == label) return static_cast<int>(i);
        throw AlgebraError("unknown leg '" + label + "'");
    }
    TensorSpace sub(const std::vector<int>& which) const {
        std::vector<Leg> out;
        for (int i : which) out.push_back(legs_.at(i));
        return TensorSpace(std::move(out));
    }

    friend bool operator==(const TensorSpace&, const TensorSpace&) = default;

private:
    std::vector<Leg> legs_;
};

inline void check_ambient(long n) {
    if (n > max_ambient_dim)
        throw std::length_error("ambient dimension " + std::to_string(n) + " exceeds the configured limit " +
                                std::to_string(max_ambient_dim));
}

struct MatrixSubalgebra {
    TensorSpace ambient;
    std::vector<Matrix> basis;

    std::size_t dim() const { return basis.size(); }
    long n() const { return ambient.total_dim(); }

    Matrix project(const Matrix& x) const {
        Matrix p = Matrix::Zero(x.rows(), x.cols());
        for (const auto& b : basis) p += b.conjugate().cwiseProduct(x).sum() * b;
        return p;
    }
    // ‖x − P(x)‖ / ‖x‖ where P is the orthogonal projection onto the span.
    double membership_residual(const Matrix& x) const {
        const double nx = x.norm();
        return nx == 0.0 ? 0.0 : (x - project(x)).norm() / nx;
    }
    bool contains(const Matrix& x, double tolerance = tol::residual) const {
        return membership_residual(x) <= tolerance;
    }
};

struct UnitaryIso {
    Matrix matrix;
    TensorSpace domain, codomain;
};

// ---------------------------------------------------------------------------
// Spans and standard subalgebras.

inline std::vector<Matrix> orthonormal_span(const std::vector<Matrix>& mats, Eigen::Index n) {
    if (mats.empty()) return {};
    Matrix cols(n * n, static_cast<Eigen::Index>(mats.size()));
    for (std::size_t k = 0; k < mats.size(); ++k) cols.col(k) = vec(mats[k]);
    Matrix q = column_space(cols);
    std::vector<Matrix> out;
    for (Eigen::Index j = 0; j < q.cols(); ++j) out.push_back(unvec(q.col(j), n));
    return out;
}

inline MatrixSubalgebra scalars(const TensorSpace& ambient) {
    const long n = ambient.total_dim();
    return {ambient, {Matrix::Identity(n, n) / std::sqrt(static_cast<double>(n))}};
}

inline MatrixSubalgebra full_algebra(const TensorSpace& ambient) {
    const long n = ambient.total_dim();
    check_ambient(n);
    MatrixSubalgebra s{ambient, {}};
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) s.basis.push_back(matrix_unit(static_cast<int>(n), i, j));
    return s;
}

// L(legs) ⊗ 1, with composite matrix units as the basis.
inline MatrixSubalgebra leg_algebra(const TensorSpace& ambient, const std::vector<int>& legs) {
    const auto dims = ambient.dims();
    const long dk = product(permuted(dims, legs));
    const double norm = std::sqrt(static_cast<double>(ambient.total_dim() / dk));
    MatrixSubalgebra s{ambient, {}};
    for (int j = 0; j < dk; ++j)
        for (int i = 0; i < dk; ++i)
            s.basis.push_back(embed(matrix_unit(static_cast<int>(dk), i, j), dims, legs) / norm);
    return s;
}

// Smallest unital *-subalgebra containing the generators. The span is grown
// by left multiplication with generators and their adjoints until stable.
inline MatrixSubalgebra algebra_closure(const TensorSpace& ambient, const std::vector<Matrix>& generators) {
    const long n = ambient.total_dim();
    check_ambient(n);
    std::vector<Matrix> gens;
    for (const auto& g : generators) {
        if (g.rows() != n || g.cols() != n) throw AlgebraError("generator has the wrong dimension");
        gens.push_back(g);
        gens.push_back(g.adjoint());
    }
    std::vector<Vector> q;
    std::vector<Matrix> basis;
    // `scale` bounds the norm of x before cancellation, so rounding noise in
    // a product that vanishes exactly is not mistaken for a new direction.
    auto try_add = [&](const Matrix& x, double scale) {
        Vector v = vec(x);
        if (v.norm() == 0.0) return;
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& b : q) v -= b.dot(v) * b;
        if (v.norm() <= 1e-8 * scale) return;
        v.normalize();
        q.push_back(v);
        basis.push_back(unvec(v, n));
    };
    try_add(Matrix::Identity(n, n), std::sqrt(static_cast<double>(n)));
    for (const auto& g : gens) try_add(g, g.norm());
    for (std::size_t k = 0; k < basis.size(); ++k)
        for (const auto& g : gens) {
            if (basis.size() == static_cast<std::size_t>(n * n)) break;
            try_add(g * basis[k], g.norm());
        }
    return {ambient, basis};
}

// ---------------------------------------------------------------------------
// Commutants and centres.

// Orthonormal basis of the commutant of a *-closed set of n×n matrices
// (given as an orthonormal basis of its span). The candidate space starts as
// the commutant of one random Hermitian element, which is block diagonal in
// its eigenbasis, and is cut down by the remaining elements in batches.
inline std::vector<Matrix> commutant_of(const std::vector<Matrix>& span, Eigen::Index n, Rng& rng) {
    Matrix cand;
    if (span.empty()) {
        cand = Matrix::Identity(n * n, n * n);
    } else {
        Matrix h = random_hermitian_combination(span, rng);
        std::vector<Matrix> clusters = eigen_clusters(h);
        Eigen::Index r = 0;
        for (const auto& c : clusters) r += c.cols() * c.cols();
        cand.resize(n * n, r);
        Eigen::Index col = 0;
        for (const auto& c : clusters)
            for (Eigen::Index j = 0; j < c.cols(); ++j)
                for (Eigen::Index i = 0; i < c.cols(); ++i)
                    cand.col(col++) = vec(c.col(i) * c.col(j).adjoint());
    }
    const std::size_t batch = std::max<std::size_t>(1, 4096 / static_cast<std::size_t>(n * n));
    for (std::size_t start = 0; start < span.size() && cand.cols() > 1; start += batch) {
        const std::size_t stop = std::min(span.size(), start + batch);
        Matrix c(static_cast<Eigen::Index>(stop - start) * n * n, cand.cols());
        double scale = 0.0;
        for (std::size_t k = start; k < stop; ++k) {
            const Matrix& s = span[k];
            scale = std::max(scale, s.norm());
            if ((s - s.trace() / static_cast<double>(n) * Matrix::Identity(n, n)).norm() <= 1e-12 * s.norm()) {
                c.block(static_cast<Eigen::Index>(k - start) * n * n, 0, n * n, cand.cols()).setZero();
                continue;
            }
            for (Eigen::Index j = 0; j < cand.cols(); ++j) {
                Matrix x = unvec(cand.col(j), n);
                c.block(static_cast<Eigen::Index>(k - start) * n * n, j, n * n, 1) = vec(s * x - x * s);
            }
        }
        Matrix ns = null_space(c, scale);
        if (ns.cols() < cand.cols()) cand = reorthonormalize(cand * ns);
    }
    std::vector<Matrix> out;
    for (Eigen::Index j = 0; j < cand.cols(); ++j) out.push_back(unvec(cand.col(j), n));
    return out;
}

inline MatrixSubalgebra commutant(const MatrixSubalgebra& s, std::uint64_t seed = 0) {
    check_ambient(s.n());
    Rng rng(seed);
    return {s.ambient, commutant_of(s.basis, s.n(), rng)};
}

// Span intersection of two subspaces given by orthonormal bases.
inline MatrixSubalgebra intersection(const MatrixSubalgebra& s, const MatrixSubalgebra& t) {
    const long n = s.n();
    if (s.basis.empty()) return s;
    Matrix c(n * n, static_cast<Eigen::Index>(s.basis.size()));
    for (std::size_t k = 0; k < s.basis.size(); ++k) c.col(k) = vec(s.basis[k] - t.project(s.basis[k]));
    Matrix ns = null_space(c, 1.0);
    std::vector<Matrix> out;
    for (Eigen::Index j = 0; j < ns.cols(); ++j) {
        Matrix x = Matrix::Zero(n, n);
        for (std::size_t k = 0; k < s.basis.size(); ++k) x += ns(k, j) * s.basis[k];
        out.push_back(x);
    }
    return {s.ambient, orthonormal_span(out, n)};
}

// Z(S) = S ∩ S', computed in coefficient space over S's basis.
inline MatrixSubalgebra centre(const MatrixSubalgebra& s) {
    const long n = s.n();
    check_ambient(n);
    const auto r = static_cast<Eigen::Index>(s.basis.size());
    Matrix cand = Matrix::Identity(r, r);
    const std::size_t batch = std::max<std::size_t>(1, 4096 / static_cast<std::size_t>(n * n));
    for (std::size_t start = 0; start < s.basis.size() && cand.cols() > 1; start += batch) {
        const std::size_t stop = std::min(s.basis.size(), start + batch);
        Matrix c(static_cast<Eigen::Index>(stop - start) * n * n, cand.cols());
        for (std::size_t k = start; k < stop; ++k)
            for (Eigen::Index j = 0; j < cand.cols(); ++j) {
                Matrix x = Matrix::Zero(n, n);
                for (Eigen::Index i = 0; i < r; ++i) x += cand(i, j) * s.basis[i];
                c.block(static_cast<Eigen::Index>(k - start) * n * n, j, n * n, 1) =
                    vec(s.basis[k] * x - x * s.basis[k]);
            }
        Matrix ns = null_space(c, 1.0);
        if (ns.cols() < cand.cols()) cand = reorthonormalize(cand * ns);
    }
    std::vector<Matrix> out;
    for (Eigen::Index j = 0; j < cand.cols(); ++j) {
        Matrix x = Matrix::Zero(n, n);
        for (Eigen::Index i = 0; i < r; ++i) x += cand(i, j) * s.basis[i];
        out.push_back(x);
    }
    return {s.ambient, out};
}

inline bool is_factor(const MatrixSubalgebra& s) { return centre(s).dim() == 1; }

inline bool span_equal(const MatrixSubalgebra& s, const MatrixSubalgebra& t, double tolerance = 1e-9) {
    if (s.dim() != t.dim()) return false;
    for (const auto& b : s.basis)
        if (t.membership_residual(b) > tolerance) return false;
    return true;
}

// The minimal central projections, from the spectral projectors of a random
// Hermitian element of the centre.
inline std::vector<Matrix> minimal_central_projectors(const MatrixSubalgebra& s, std::uint64_t seed = 0) {
    const long n = s.n();
    MatrixSubalgebra z = centre(s);
    if (z.dim() == 1) return {Matrix::Identity(n, n)};
    Rng rng(seed);
    for (int attempt = 0; attempt < 4; ++attempt) {
        auto clusters = eigen_clusters(random_hermitian_combination(z.basis, rng));
        if (clusters.size() != z.dim()) continue;
        std::vector<Matrix> out;
        for (const auto& c : clusters) out.push_back(c * c.adjoint());
        return out;
    }
    throw NumericalError("could not separate the central projections");
}

// Relative size of the commutator of random elements of two spans; zero iff
// the spans commute (with probability one).
inline double commutation_defect(const std::vector<Matrix>& x, const std::vector<Matrix>& y, Rng& rng) {
    if (x.empty() || y.empty()) return 0.0;
    Matrix a = random_combination(x, rng), b = random_combination(y, rng);
    const double na = a.norm(), nb = b.norm();
    return na == 0.0 || nb == 0.0 ? 0.0 : commutator(a, b).norm() / (na * nb);
}

// Relative distance of a random element of the span from acting trivially on
// `legs`.
inline double support_defect(const std::vector<Matrix>& x, const std::vector<int>& dims,
                             const std::vector<int>& legs, Rng& rng) {
    if (x.empty() || legs.empty()) return 0.0;
    return trivial_action_residual(random_combination(x, rng), dims, legs);
}

// ---------------------------------------------------------------------------
// Factors.

struct FactorSplit {
    UnitaryIso iso;  // V with V B V† = L(C^d) ⊗ 1_m
    int d = 1, m = 1;
    double residual = 0.0;
};

namespace detail {

// Minimal projections (as eigenvector blocks) and partial isometries
// e_{i1} = E_i W_i E_1† of a factor of degree d in an n-dimensional ambient.
// Returns false if the random draws were degenerate.
inline bool matrix_units(const std::vector<Matrix>& basis, int d, long n, Rng& rng, std::vector<Matrix>& blocks) {
    auto clusters = eigen_clusters(random_hermitian_combination(basis, rng));
    if (static_cast<int>(clusters.size()) != d) return false;
    const long m = n / d;
    for (const auto& c : clusters)
        if (c.cols() != m) return false;
    Matrix s = random_combination(basis, rng);
    blocks.assign(1, clusters[0]);
    for (int i = 1; i < d; ++i) {
        Eigen::Index rank = 0;
        Matrix w = polar_isometry(clusters[i].adjoint() * s * clusters[0], &rank);
        if (rank != m) return false;
        blocks.push_back(clusters[i] * w);
    }
    return true;
}

inline int degree(const MatrixSubalgebra& b) {
    const int d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(b.dim()))));
    if (d * d != static_cast<int>(b.dim()) || b.n() % d != 0)
        throw AlgebraError("subalgebra dimension " + std::to_string(b.dim()) + " is not that of a factor");
    return d;
}

}  // namespace detail

inline FactorSplit factorize_factor(const MatrixSubalgebra& b, std::uint64_t seed = 0) {
    const long n = b.n();
    check_ambient(n);
    const int d = detail::degree(b);
    if (!is_factor(b)) throw AlgebraError("subalgebra is not a factor");
    const int m = static_cast<int>(n / d);
    const std::vector<int> split{d, m};
    TensorSpace codomain({{"Z", d}, {"M", m}});

    auto residual_of = [&](const Matrix& v) {
        double r = 0.0;
        for (const auto& x : b.basis) r = std::max(r, trivial_action_residual(v * x * v.adjoint(), split, {1}));
        return r;
    };
    Matrix id = Matrix::Identity(n, n);
    if (double r = residual_of(id); r < 1e-10) return {{id, b.ambient, codomain}, d, m, r};

    Rng rng(seed);
    for (int attempt = 0; attempt < 4; ++attempt) {
        std::vector<Matrix> blocks;
        if (!detail::matrix_units(b.basis, d, n, rng, blocks)) continue;
        Matrix vd(n, n);
        for (int i = 0; i < d; ++i) vd.middleCols(static_cast<Eigen::Index>(i) * m, m) = blocks[i];
        Matrix v = vd.adjoint();
        const double r = residual_of(v);
        if (r < tol::residual && unitarity_residual(v) < tol::residual) return {{v, b.ambient, codomain}, d, m, r};
    }
    throw NumericalError("factorize_factor: verification failed");
}

struct FactorsSplit {
    UnitaryIso iso;          // V: H → ⊗_k C^{d_k} ⊗ C^r
    std::vector<int> dims;   // d_k
    int multiplicity = 1;    // r
    double residual = 0.0;
};

// Pairwise commuting factors B_1..B_K become the tensor legs of a single
// unitary frame. Minimal projections p_k of each factor multiply to a
// projection of rank r; applying the partial isometries of every factor to
// an orthonormal basis of its range gives the new basis.
inline FactorsSplit split_commuting_factors(const std::vector<MatrixSubalgebra>& bs, const TensorSpace& ambient,
                                            std::uint64_t seed = 0) {
    const long n = ambient.total_dim();
    check_ambient(n);
    Rng rng(seed);
    std::vector<int> dims;
    long prod = 1;
    for (std::size_t k = 0; k < bs.size(); ++k) {
        if (bs[k].n() != n) throw AlgebraError("subalgebra lives on a different ambient");
        dims.push_back(detail::degree(bs[k]));
        if (!is_factor(bs[k])) throw AlgebraError("subalgebra " + std::to_string(k) + " is not a factor");
        prod *= dims.back();
        for (std::size_t l = 0; l < k; ++l)
            if (commutation_defect(bs[k].basis, bs[l].basis, rng) > tol::rank * 10)
                throw AlgebraError("subalgebras " + std::to_string(l) + " and " + std::to_string(k) +
                                   " do not commute");
    }
    if (n % prod != 0) throw AlgebraError("factor degrees do not divide the ambient dimension");
    const int r = static_cast<int>(n / prod);
    std::vector<int> split = dims;
    split.push_back(r);
    std::vector<Leg> legs;
    for (std::size_t k = 0; k < dims.size(); ++k) legs.push_back({"Z" + std::to_string(k), dims[k]});
    legs.push_back({"M", r});
    TensorSpace codomain(legs);

    auto residual_of = [&](const Matrix& v) {
        double res = 0.0;
        for (std::size_t k = 0; k < bs.size(); ++k) {
            auto others = complement(split.size(), {static_cast<int>(k)});
            for (const auto& x : bs[k].basis)
                res = std::max(res, trivial_action_residual(v * x * v.adjoint(), split, others));
        }
        return res;
    };
    Matrix id = Matrix::Identity(n, n);
    if (double res = residual_of(id); res < 1e-10) return {{id, ambient, codomain}, dims, r, res};

    for (int attempt = 0; attempt < 4; ++attempt) {
        std::vector<std::vector<Matrix>> units(bs.size());
        bool ok = true;
        for (std::size_t k = 0; k < bs.size() && ok; ++k) {
            std::vector<Matrix> blocks;
            ok = detail::matrix_units(bs[k].basis, dims[k], n, rng, blocks);
            for (const auto& blk : blocks) units[k].push_back(blk * blocks[0].adjoint());
        }
        if (!ok) continue;
        Matrix p = id;
        for (const auto& u : units) p = p * u[0];
        Eigen::SelfAdjointEigenSolver<Matrix> es((p + p.adjoint()) / 2.0);
        Eigen::Index rank = 0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (es.eigenvalues()(i) > 0.5) ++rank;
        if (rank != r) continue;
        Matrix cols = es.eigenvectors().rightCols(r);
        for (int k = static_cast<int>(bs.size()) - 1; k >= 0; --k) {
            Matrix next(n, cols.cols() * dims[k]);
            for (int i = 0; i < dims[k]; ++i) next.middleCols(i * cols.cols(), cols.cols()) = units[k][i] * cols;
            cols = next;
        }
        Matrix v = cols.adjoint();
        const double res = residual_of(v);
        if (res < tol::residual && unitarity_residual(v) < tol::residual) return {{v, ambient, codomain}, dims, r, res};
    }
    throw NumericalError("split_commuting_factors: verification failed");
}

// The algebra generated by the keep-side operator-Schmidt components of a
// *-closed set: the smallest Y on the kept legs with every element in
// Y ⊗ L(rest). Computed as a double commutant.
inline MatrixSubalgebra restrict_to_legs(const TensorSpace& ambient, const std::vector<Matrix>& mats,
                                         const std::vector<int>& keep, Rng& rng) {
    const auto dims = ambient.dims();
    const long dk = product(permuted(dims, keep));
    std::vector<Matrix> blocks;
    for (const auto& m : mats) blocks.push_back(keep_side_slices(m, dims, keep));
    Matrix q = column_space_sketched(blocks, dk * dk, rng);
    std::vector<Matrix> slices;
    for (Eigen::Index j = 0; j < q.cols(); ++j) slices.push_back(unvec(q.col(j), dk));
    auto outer = commutant_of(slices, dk, rng);
    return {ambient.sub(keep), commutant_of(outer, dk, rng)};
}

// X ⊆ L(A ⊗ B) containing L(A) ⊗ 1 has the form L(A) ⊗ Y; returns Y on the
// B leg. Y is the commutant within L(B) of Z, where 1 ⊗ Z = X'.
inline MatrixSubalgebra tensor_split_over_known_factor(const MatrixSubalgebra& x, std::uint64_t seed = 0) {
    if (x.ambient.size() != 2) throw AlgebraError("tensor_split_over_known_factor needs a two-leg ambient");
    const auto dims = x.ambient.dims();
    for (int j = 0; j < dims[0]; ++j)
        for (int i = 0; i < dims[0]; ++i)
            if (!x.contains(embed(matrix_unit(dims[0], i, j), dims, {0})))
                throw AlgebraError("subalgebra does not contain the known factor");
    Rng rng(seed);
    MatrixSubalgebra y = restrict_to_legs(x.ambient, x.basis, {1}, rng);
    if (static_cast<long>(y.dim()) * dims[0] * dims[0] != static_cast<long>(x.dim()))
        throw NumericalError("tensor_split_over_known_factor: dimension count mismatch");
    return y;
}

// ---------------------------------------------------------------------------
// Sectors and the factorization lemma.

class AssumptionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SectorDecomposition {
    std::vector<std::vector<int>> sectors;  // per-leg dims of each sector
    UnitaryIso iso;                         // onto the direct sum, sector by sector
    std::vector<Matrix> projectors;         // on the A leg
    std::size_t count() const { return sectors.size(); }
};

namespace detail {

// Assumptions (i) pairwise commutation and (ii) B_k supported on A ⊗ X_k.
inline void check_lemma_assumptions(const TensorSpace& ambient, const std::vector<int>& a_legs,
                                    const std::vector<std::vector<int>>& x_legs,
                                    const std::vector<MatrixSubalgebra>& bs, Rng& rng) {
    if (bs.empty()) throw std::invalid_argument("at least one subalgebra is required");
    if (x_legs.size() != bs.size()) throw std::invalid_argument("one X leg list per subalgebra is required");
    const auto dims = ambient.dims();
    for (std::size_t k = 0; k < bs.size(); ++k) {
        if (!(bs[k].ambient == ambient)) throw AlgebraError("subalgebra lives on a different ambient");
        std::vector<int> support = a_legs;
        support.insert(support.end(), x_legs[k].begin(), x_legs[k].end());
        if (support_defect(bs[k].basis, dims, complement(dims.size(), support), rng) > tol::residual)
            throw AssumptionError("subalgebra " + std::to_string(k) + " is not supported on A ⊗ X_" +
                                  std::to_string(k));
        for (std::size_t l = 0; l < k; ++l)
            if (commutation_defect(bs[k].basis, bs[l].basis, rng) > tol::residual)
                throw AssumptionError("subalgebras " + std::to_string(l) + " and " + std::to_string(k) +
                                      " do not commute");
    }
}

inline std::vector<MatrixSubalgebra> restrictions(const TensorSpace& ambient, const std::vector<int>& a_legs,
                                                  const std::vector<MatrixSubalgebra>& bs, Rng& rng) {
    std::vector<MatrixSubalgebra> out;
    for (const auto& b : bs) out.push_back(restrict_to_legs(ambient, b.basis, a_legs, rng));
    return out;
}

inline SectorDecomposition sectorize_restricted(const std::vector<MatrixSubalgebra>& tildes, const TensorSpace& a,
                                                Rng& rng) {
    const long da = a.total_dim();
    std::vector<std::vector<Matrix>> central;
    for (const auto& t : tildes) central.push_back(minimal_central_projectors(t, rng()));
    SectorDecomposition out;
    Matrix iso(da, da);
    Eigen::Index row = 0;
    std::vector<std::size_t> idx(tildes.size(), 0);
    while (true) {
        Matrix pi = Matrix::Identity(da, da);
        for (std::size_t k = 0; k < tildes.size(); ++k) pi = pi * central[k][idx[k]];
        const long rank = std::lround(pi.trace().real());
        if (rank > 0) {
            Eigen::SelfAdjointEigenSolver<Matrix> es((pi + pi.adjoint()) / 2.0);
            Matrix q = es.eigenvectors().rightCols(rank);
            TensorSpace sector_space = TensorSpace::from_dims({static_cast<int>(rank)}, "s");
            std::vector<MatrixSubalgebra> local;
            for (const auto& t : tildes) {
                std::vector<Matrix> mats;
                for (const auto& b : t.basis) mats.push_back(q.adjoint() * b * q);
                local.push_back({sector_space, orthonormal_span(mats, rank)});
            }
            FactorsSplit fs = split_commuting_factors(local, sector_space, rng());
            std::vector<int> dims = fs.dims;
            if (dims.empty()) dims.push_back(fs.multiplicity);
            else dims.back() *= fs.multiplicity;
            out.sectors.push_back(dims);
            out.projectors.push_back(q * q.adjoint());
            iso.middleRows(row, rank) = fs.iso.matrix * q.adjoint();
            row += rank;
        }
        std::size_t k = 0;
        while (k < idx.size() && ++idx[k] == central[k].size()) idx[k++] = 0;
        if (k == idx.size()) break;
    }
    if (row != da) throw NumericalError("sector projectors do not resolve the identity");
    out.iso = {iso, a, TensorSpace::from_dims({static_cast<int>(da)}, "sectors")};
    return out;
}

}  // namespace detail

// Direct-sum-of-tensor-products structure of pairwise commuting subalgebras
// B_k supported on A ⊗ X_k, seen on the A leg.
inline SectorDecomposition sectorize(const TensorSpace& ambient, const std::vector<int>& a_legs,
                                     const std::vector<std::vector<int>>& x_legs,
                                     const std::vector<MatrixSubalgebra>& bs, std::uint64_t seed = 0) {
    check_ambient(ambient.total_dim());
    Rng rng(seed);
    detail::check_lemma_assumptions(ambient, a_legs, x_legs, bs, rng);
    auto tildes = detail::restrictions(ambient, a_legs, bs, rng);
    return detail::sectorize_restricted(tildes, ambient.sub(a_legs), rng);
}

struct LemmaFactorization {
    UnitaryIso iso;         // V: A → ⊗_k Z_k
    std::vector<int> dims;  // dim Z_k
};

struct SectorObstruction {
    SectorDecomposition sectors;
    std::string reason;
};

using LemmaResult = std::variant<LemmaFactorization, SectorObstruction>;

// If A ⊆ ⋁_k B_k, returns V with V(A ∩ B_k) = L(Z_k) and A ≅ ⊗_k Z_k;
// otherwise the sector structure that obstructs such a factorization.
inline LemmaResult algebraic_lemma(const TensorSpace& ambient, const std::vector<int>& a_legs,
                                   const std::vector<std::vector<int>>& x_legs,
                                   const std::vector<MatrixSubalgebra>& bs, std::uint64_t seed = 0) {
    check_ambient(ambient.total_dim());
    Rng rng(seed);
    detail::check_lemma_assumptions(ambient, a_legs, x_legs, bs, rng);
    const TensorSpace a = ambient.sub(a_legs);
    const long da = a.total_dim();
    auto tildes = detail::restrictions(ambient, a_legs, bs, rng);

    std::string reason;
    long span = 1;
    bool factors = true;
    for (const auto& t : tildes) {
        span *= static_cast<long>(t.dim());
        factors = factors && is_factor(t);
    }
    if (!factors) reason = "a restricted subalgebra has a non-trivial centre";
    else if (span != da * da) reason = "the restricted subalgebras do not span the A leg";
    if (reason.empty()) {
        FactorsSplit fs = split_commuting_factors(tildes, a, rng());
        const auto dims = ambient.dims();
        std::vector<int> zdims = fs.dims;
        for (std::size_t k = 0; k < bs.size() && reason.empty(); ++k) {
            // A random element of L(Z_k), pulled back to A ⊗ X, must lie in B_k.
            Matrix z = ginibre(zdims[k], zdims[k], rng);
            Matrix y = fs.iso.matrix.adjoint() * embed(z, zdims, {static_cast<int>(k)}) * fs.iso.matrix;
            if (bs[k].membership_residual(embed(y, dims, a_legs)) > tol::residual)
                reason = "A is not contained in the span of the subalgebras";
        }
        if (reason.empty()) {
            std::vector<Leg> legs(fs.iso.codomain.legs().begin(), fs.iso.codomain.legs().end() - 1);
            return LemmaFactorization{{fs.iso.matrix, a, TensorSpace(legs)}, zdims};
        }
    }
    return SectorObstruction{detail::sectorize_restricted(tildes, a, rng), reason};
}

// ---------------------------------------------------------------------------
// Every *-isomorphism of full matrix algebras is Ad(w). Given the images
// F_ij = φ(|i⟩⟨j|), recover w with its first non-negligible entry real
// positive.
inline Matrix unitary_from_isomorphism(const std::vector<std::vector<Matrix>>& images, double tolerance = 1e-9) {
    const int d = static_cast<int>(images.size());
    if (d == 0) throw AlgebraError("no images given");
    const Matrix& f11 = images[0][0];
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < f11.cols(); ++j)
        if (f11.col(j).norm() > f11.col(best).norm()) best = j;
    const double nb = f11.col(best).norm();
    if (nb == 0.0) throw AlgebraError("image of |0><0| vanishes");
    Vector w1 = f11.col(best) / nb;
    Matrix w(f11.rows(), d);
    for (int i = 0; i < d; ++i) w.col(i) = images[i][0] * w1;
    w = normalize_phase_first(w);
    double res = 0.0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            res = std::max(res, (images[i][j] - w.col(i) * w.col(j).adjoint()).norm());
    if (res > tolerance || unitarity_residual(w) > tolerance)
        throw NumericalError("images do not define a *-isomorphism (residual " + std::to_string(res) + ")");
    return w;
}

}  // namespace ucd
