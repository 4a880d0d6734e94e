#pragma once

// Dense complex linear-algebra helpers shared by the operator-algebra,
// causal-structure and decomposition code: tensor-leg bookkeeping, partial
// traces, numerical ranks, spectral clustering and Haar sampling.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

namespace ucd {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Rng = std::mt19937_64;

namespace tol {
inline constexpr double rank = 1e-9;      // relative singular-value threshold
inline constexpr double cluster = 1e-7;   // relative eigenvalue gap for merging
inline constexpr double residual = 1e-8;  // verification residuals
inline constexpr double unitary = 1e-9;   // gate unitarity
}  // namespace tol

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline long product(const std::vector<int>& dims) {
    return std::accumulate(dims.begin(), dims.end(), 1L, std::multiplies<long>());
}

inline Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

inline Matrix unvec(const Vector& v, Eigen::Index n) { return Eigen::Map<const Matrix>(v.data(), n, n); }

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline Matrix matrix_unit(int d, int i, int j) {
    Matrix e = Matrix::Zero(d, d);
    e(i, j) = 1.0;
    return e;
}

inline Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }

// ---------------------------------------------------------------------------
// Leg bookkeeping. Flat indices are row-major over the legs, leg 0 being the
// most significant digit.

// p[new_flat] = old_flat for the reordering that lists old legs in `order`.
inline std::vector<Eigen::Index> reorder_index(const std::vector<int>& dims, const std::vector<int>& order) {
    const std::size_t n = dims.size();
    if (order.size() != n) throw std::invalid_argument("reorder_index: order must be a permutation");
    std::vector<long> stride(n, 1);
    for (int k = static_cast<int>(n) - 2; k >= 0; --k) stride[k] = stride[k + 1] * dims[k + 1];
    const long total = product(dims);
    std::vector<Eigen::Index> p(total);
    std::vector<int> digit(n, 0);
    for (long i = 0; i < total; ++i) {
        long old = 0;
        for (std::size_t j = 0; j < n; ++j) old += digit[j] * stride[order[j]];
        p[i] = old;
        for (int j = static_cast<int>(n) - 1; j >= 0; --j) {
            if (++digit[j] < dims[order[j]]) break;
            digit[j] = 0;
        }
    }
    return p;
}

// `legs` first (in the given order), then the remaining legs in their
// original order.
inline std::vector<int> legs_first(std::size_t n, const std::vector<int>& legs) {
    std::vector<int> order = legs;
    for (int k = 0; k < static_cast<int>(n); ++k)
        if (std::find(legs.begin(), legs.end(), k) == legs.end()) order.push_back(k);
    return order;
}

inline std::vector<int> permuted(const std::vector<int>& dims, const std::vector<int>& order) {
    std::vector<int> out;
    for (int k : order) out.push_back(dims[k]);
    return out;
}

inline std::vector<int> complement(std::size_t n, const std::vector<int>& legs) {
    std::vector<int> out;
    for (int k = 0; k < static_cast<int>(n); ++k)
        if (std::find(legs.begin(), legs.end(), k) == legs.end()) out.push_back(k);
    return out;
}

inline Matrix reorder_operator(const Matrix& m, const std::vector<int>& dims, const std::vector<int>& order) {
    auto p = reorder_index(dims, order);
    const auto n = static_cast<Eigen::Index>(p.size());
    Matrix out(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) out(i, j) = m(p[i], p[j]);
    return out;
}

inline Matrix reorder_rows(const Matrix& m, const std::vector<int>& dims, const std::vector<int>& order) {
    auto p = reorder_index(dims, order);
    Matrix out(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(p.size()); ++i) out.row(i) = m.row(p[i]);
    return out;
}

inline Matrix reorder_cols(const Matrix& m, const std::vector<int>& dims, const std::vector<int>& order) {
    auto p = reorder_index(dims, order);
    Matrix out(m.rows(), m.cols());
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(p.size()); ++j) out.col(j) = m.col(p[j]);
    return out;
}

// Operator on `legs` (in that order) extended by the identity elsewhere.
inline Matrix embed(const Matrix& op, const std::vector<int>& dims, const std::vector<int>& legs) {
    auto order = legs_first(dims.size(), legs);
    const long dk = product(permuted(dims, legs));
    if (op.rows() != dk || op.cols() != dk) throw std::invalid_argument("embed: operator has wrong size");
    const long dr = product(dims) / dk;
    Matrix big = kron(op, Matrix::Identity(dr, dr));
    // big is expressed in the reordered basis; map back.
    auto p = reorder_index(dims, order);
    Matrix out(big.rows(), big.cols());
    for (Eigen::Index j = 0; j < big.cols(); ++j)
        for (Eigen::Index i = 0; i < big.rows(); ++i) out(p[i], p[j]) = big(i, j);
    return out;
}

// Partial trace onto `keep` (result legs in the order of `keep`).
inline Matrix partial_trace(const Matrix& m, const std::vector<int>& dims, const std::vector<int>& keep) {
    Matrix mp = reorder_operator(m, dims, legs_first(dims.size(), keep));
    const long dk = product(permuted(dims, keep));
    const long dr = product(dims) / dk;
    Matrix out = Matrix::Zero(dk, dk);
    for (long k = 0; k < dk; ++k)
        for (long l = 0; l < dk; ++l) {
            cplx s = 0;
            for (long r = 0; r < dr; ++r) s += mp(k * dr + r, l * dr + r);
            out(k, l) = s;
        }
    return out;
}

// Relative Frobenius distance of m from (its reduction) ⊗ 1 on `legs`; zero
// iff m acts trivially on those legs.
inline double trivial_action_residual(const Matrix& m, const std::vector<int>& dims, const std::vector<int>& legs) {
    if (legs.empty()) return 0.0;
    auto rest = complement(dims.size(), legs);
    const double d = static_cast<double>(product(permuted(dims, legs)));
    Matrix reduced = partial_trace(m, dims, rest) / d;
    Matrix back = embed(reduced, dims, rest);
    const double nm = m.norm();
    return nm == 0.0 ? 0.0 : (m - back).norm() / nm;
}

// Columns are the vectorized keep-side blocks m_{rs} of m written in the
// basis ordered [keep, rest]: m = Σ_{rs} m_{rs} ⊗ |r⟩⟨s|.
inline Matrix keep_side_slices(const Matrix& m, const std::vector<int>& dims, const std::vector<int>& keep) {
    Matrix mp = reorder_operator(m, dims, legs_first(dims.size(), keep));
    const long dk = product(permuted(dims, keep));
    const long dr = product(dims) / dk;
    Matrix out(dk * dk, dr * dr);
    for (long r = 0; r < dr; ++r)
        for (long s = 0; s < dr; ++s)
            for (long l = 0; l < dk; ++l)
                for (long k = 0; k < dk; ++k) out(k + dk * l, r * dr + s) = mp(k * dr + r, l * dr + s);
    return out;
}

// ---------------------------------------------------------------------------
// Numerical rank decisions.

// Eigen 3.4's divide-and-conquer SVD returns wrong singular values and NaN
// vectors on some complex inputs with clustered spectra; every decomposition
// here goes through the Jacobi SVD with a QR preconditioner instead.
using Svd = Eigen::JacobiSVD<Matrix, Eigen::ColPivHouseholderQRPreconditioner>;

inline double rank_threshold(double sigma_max, Eigen::Index dim) {
    return tol::rank * sigma_max * std::sqrt(static_cast<double>(std::max<Eigen::Index>(dim, 1)));
}

// Orthonormal basis of the column space.
inline Matrix column_space(const Matrix& a) {
    if (a.cols() == 0 || a.rows() == 0) return Matrix(a.rows(), 0);
    Svd svd(a, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    const double cut = rank_threshold(s(0), a.rows());
    Eigen::Index r = 0;
    while (r < s.size() && s(r) > cut) ++r;
    return svd.matrixU().leftCols(r);
}

// Column space of a very wide matrix, computed on a Gaussian sketch with a few
// more columns than rows. The range is exact with probability one.
inline Matrix column_space_sketched(const std::vector<Matrix>& blocks, Eigen::Index rows, Rng& rng) {
    const Eigen::Index k = rows + 8;
    Eigen::Index total = 0;
    for (const auto& b : blocks) total += b.cols();
    if (total <= 2 * k) {
        Matrix all(rows, total);
        Eigen::Index c = 0;
        for (const auto& b : blocks) {
            all.middleCols(c, b.cols()) = b;
            c += b.cols();
        }
        return column_space(all);
    }
    std::normal_distribution<double> g;
    Matrix y = Matrix::Zero(rows, k);
    for (const auto& b : blocks) {
        Matrix omega(b.cols(), k);
        for (Eigen::Index j = 0; j < k; ++j)
            for (Eigen::Index i = 0; i < b.cols(); ++i) omega(i, j) = cplx(g(rng), g(rng));
        y += b * omega;
    }
    return column_space(y);
}

// Orthonormal basis of the null space of a. `scale` is a lower bound for the
// reference singular value, so that a numerically zero map has a full null
// space instead of a noise-determined one.
inline Matrix null_space(const Matrix& a, double scale = 0.0) {
    const Eigen::Index n = a.cols();
    if (a.rows() == 0 || n == 0) return Matrix::Identity(n, n);
    Svd svd(a, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    const double cut = rank_threshold(std::max(s.size() ? s(0) : 0.0, scale), n);
    Eigen::Index r = 0;
    while (r < s.size() && s(r) > cut) ++r;
    return svd.matrixV().rightCols(n - r);
}

// Re-orthonormalize columns that are already nearly orthonormal.
inline Matrix reorthonormalize(const Matrix& q) {
    if (q.cols() == 0) return q;
    Eigen::HouseholderQR<Matrix> qr(q);
    Matrix out = qr.householderQ() * Matrix::Identity(q.rows(), q.cols());
    // Undo the sign/phase freedom of QR so the result stays close to q.
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        cplx ov = out.col(j).dot(q.col(j));
        if (std::abs(ov) > 0) out.col(j) *= ov / std::abs(ov);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Spectral clustering of Hermitian matrices.

// Eigenvectors of h grouped by eigenvalue, merging neighbours whose gap is
// below tol::cluster times the spectral range. Groups are in ascending order.
inline std::vector<Matrix> eigen_clusters(const Matrix& h) {
    Matrix herm = (h + h.adjoint()) / 2.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(herm);
    const auto& ev = es.eigenvalues();
    const Eigen::Index n = ev.size();
    std::vector<Matrix> out;
    if (n == 0) return out;
    const double range = ev(n - 1) - ev(0);
    const double scale = std::max({std::abs(ev(0)), std::abs(ev(n - 1)), 1e-300});
    const bool flat = range <= 1e-12 * scale;
    Eigen::Index start = 0;
    for (Eigen::Index i = 1; i <= n; ++i) {
        if (i == n || (!flat && ev(i) - ev(i - 1) > tol::cluster * range)) {
            out.push_back(es.eigenvectors().middleCols(start, i - start));
            start = i;
        }
    }
    return out;
}

// Partial isometry part of the polar decomposition, keeping singular values
// above the rank threshold.
inline Matrix polar_isometry(const Matrix& x, Eigen::Index* rank = nullptr) {
    Svd svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    const double cut = s.size() ? rank_threshold(s(0), std::max(x.rows(), x.cols())) : 0.0;
    Eigen::Index r = 0;
    while (r < s.size() && s(r) > cut) ++r;
    if (rank) *rank = r;
    return svd.matrixU().leftCols(r) * svd.matrixV().leftCols(r).adjoint();
}

// ---------------------------------------------------------------------------
// Random sampling.

inline Matrix ginibre(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<double> g;
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = cplx(g(rng), g(rng));
    return m;
}

// Haar-distributed unitary: QR of a Ginibre matrix with the phases of R's
// diagonal moved into Q.
inline Matrix haar_unitary(Eigen::Index n, Rng& rng) {
    Matrix z = ginibre(n, n, rng);
    Eigen::HouseholderQR<Matrix> qr(z);
    Matrix q = qr.householderQ();
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double a = std::abs(r(i, i));
        if (a > 0) q.col(i) *= r(i, i) / a;
    }
    return q;
}

inline Matrix random_hermitian_combination(const std::vector<Matrix>& basis, Rng& rng) {
    std::normal_distribution<double> g;
    Matrix x = Matrix::Zero(basis.at(0).rows(), basis.at(0).cols());
    for (const auto& b : basis) x += cplx(g(rng), g(rng)) * b;
    return (x + x.adjoint()) / 2.0;
}

inline Matrix random_combination(const std::vector<Matrix>& basis, Rng& rng) {
    std::normal_distribution<double> g;
    Matrix x = Matrix::Zero(basis.at(0).rows(), basis.at(0).cols());
    for (const auto& b : basis) x += cplx(g(rng), g(rng)) * b;
    return x;
}

// ---------------------------------------------------------------------------
// Unitaries and phases.

inline double unitarity_residual(const Matrix& u) {
    if (u.rows() != u.cols()) return std::numeric_limits<double>::infinity();
    return (u.adjoint() * u - Matrix::Identity(u.rows(), u.cols())).norm();
}

// min_θ ‖P − e^{iθ}Q‖_F with θ the phase of tr(Q†P).
inline double phase_residual(const Matrix& p, const Matrix& q) {
    if (p.rows() != q.rows() || p.cols() != q.cols())
        throw std::invalid_argument("phase_residual: dimension mismatch");
    cplx t = (q.adjoint() * p).trace();
    cplx phase = std::abs(t) > 0 ? t / std::abs(t) : cplx(1.0);
    return (p - phase * q).norm();
}

inline bool equal_up_to_global_phase(const Matrix& p, const Matrix& q, double tolerance = -1.0) {
    if (tolerance < 0) tolerance = tol::residual * std::sqrt(static_cast<double>(p.rows()));
    return phase_residual(p, q) <= tolerance;
}

// Multiplies by the phase that makes the largest-magnitude entry real and
// positive (first such entry in row-major order on near-ties).
inline Matrix normalize_phase_largest(const Matrix& m) {
    double best = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) best = std::max(best, std::abs(m(i, j)));
    if (best == 0.0) return m;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (std::abs(m(i, j)) >= best * (1 - 1e-9)) return m * (std::abs(m(i, j)) / m(i, j));
    return m;
}

// Multiplies by the phase that makes the first non-negligible entry
// (row-major) real and positive.
inline Matrix normalize_phase_first(const Matrix& m, double cutoff = 1e-9) {
    const double scale = m.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (std::abs(m(i, j)) > cutoff * scale) return m * (std::abs(m(i, j)) / m(i, j));
    return m;
}

// Zeroes entries below 1e-14 so exact permutation arithmetic stays exact in
// serialized output.
inline Matrix chop(const Matrix& m, double eps = 1e-14) {
    Matrix out = m;
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        double re = out(i).real(), im = out(i).imag();
        out(i) = cplx(std::abs(re) < eps ? 0.0 : re, std::abs(im) < eps ? 0.0 : im);
    }
    return out;
}

}  // namespace ucd
