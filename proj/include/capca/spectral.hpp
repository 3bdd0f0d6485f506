#pragma once

// Covariance, symmetric eigendecomposition and the Karhunen-Loeve transform.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "capca/dataset.hpp"
#include "capca/errors.hpp"

namespace capca {

inline constexpr double kDefaultComponentTau = 1e-10;

/// Square symmetric matrix. Only the upper triangle of the input is read;
/// the lower triangle is rebuilt from it so a(i,j) == a(j,i) bit for bit.
class SymMatrix {
public:
    SymMatrix() = default;

    explicit SymMatrix(const Eigen::MatrixXd& m) {
        if (m.rows() != m.cols()) throw DomainError("SymMatrix: matrix is not square");
        entries_ = m.triangularView<Eigen::Upper>();
        entries_.triangularView<Eigen::StrictlyLower>() = m.transpose().triangularView<Eigen::StrictlyLower>();
    }

    [[nodiscard]] Eigen::Index order() const noexcept { return entries_.rows(); }
    [[nodiscard]] const Eigen::MatrixXd& entries() const noexcept { return entries_; }
    [[nodiscard]] double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }
    [[nodiscard]] double trace() const { return entries_.trace(); }

private:
    Eigen::MatrixXd entries_;
};

/// Eigenvalues in weakly descending order; column i of `eigenvectors`
/// belongs to eigenvalues[i].
struct Spectrum {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;

    [[nodiscard]] Eigen::Index order() const noexcept { return eigenvalues.size(); }
    [[nodiscard]] double sum() const { return eigenvalues.sum(); }
};

/// R = (1/n) X^T X over the rows of a centred matrix.
inline SymMatrix covariance(const Eigen::MatrixXd& centered) {
    if (centered.rows() == 0) throw DomainError("covariance: no rows");
    const double n = static_cast<double>(centered.rows());
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(centered.cols(), centered.cols());
    r.selfadjointView<Eigen::Upper>().rankUpdate(centered.transpose(), 1.0 / n);
    return SymMatrix(r);
}

inline SymMatrix covariance(const CenteredMatrix& X) { return covariance(X.values); }

namespace detail {

inline void require_finite(const SymMatrix& R) {
    if (!R.entries().allFinite()) throw DomainError("eigensolver: non-finite matrix entry");
}

// Reorders to descending eigenvalues (stable, so ties keep solver order)
// and makes the largest-magnitude entry of each eigenvector positive.
inline Spectrum canonical_spectrum(const Eigen::VectorXd& values, const Eigen::MatrixXd& vectors) {
    const auto k = values.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return values(a) > values(b); });

    Spectrum s;
    s.eigenvalues.resize(k);
    s.eigenvectors.resize(vectors.rows(), k);
    for (Eigen::Index i = 0; i < k; ++i) {
        const auto src = order[static_cast<std::size_t>(i)];
        s.eigenvalues(i) = values(src);
        Eigen::VectorXd v = vectors.col(src);
        Eigen::Index pivot = 0;
        v.cwiseAbs().maxCoeff(&pivot);
        if (v(pivot) < 0.0) v = -v;
        s.eigenvectors.col(i) = v;
    }
    return s;
}

}  // namespace detail

/// Full symmetric eigendecomposition (Householder tridiagonalisation + QR,
/// via Eigen's SelfAdjointEigenSolver).
inline Spectrum eig_sym(const SymMatrix& R) {
    detail::require_finite(R);
    if (R.order() == 0) return {};
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(R.entries(), Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) throw DataError("eig_sym: eigensolver did not converge");
    return detail::canonical_spectrum(solver.eigenvalues(), solver.eigenvectors());
}

/// Cyclic Jacobi eigensolver. Slower than eig_sym but shares no code with
/// it, which makes it usable as an independent cross-check.
inline Spectrum eig_jacobi(const SymMatrix& R, int max_sweeps = 100) {
    detail::require_finite(R);
    const auto n = R.order();
    Eigen::MatrixXd a = R.entries();
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
    const double scale = std::max(a.norm(), std::numeric_limits<double>::min());

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (std::sqrt(off) <= 1e-15 * scale) break;

        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                // Symmetric Schur 2x2: choose (c, s) zeroing a(p, q).
                const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    return detail::canonical_spectrum(a.diagonal(), v);
}

/// Spectrum of the n x n Gram matrix (1/n) X X^T. Its nonzero eigenvalues
/// coincide with those of covariance(X); solved with eig_jacobi so the two
/// routes are independent.
inline Spectrum dual_spectrum(const Eigen::MatrixXd& centered) {
    if (centered.rows() == 0) throw DomainError("dual_spectrum: no rows");
    const double n = static_cast<double>(centered.rows());
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(centered.rows(), centered.rows());
    g.selfadjointView<Eigen::Upper>().rankUpdate(centered, 1.0 / n);
    return eig_jacobi(SymMatrix(g));
}

inline Spectrum dual_spectrum(const CenteredMatrix& X) { return dual_spectrum(X.values); }

/// Number of eigenvalues above tau_rel * lambda_1.
inline int count_components(const Spectrum& spectrum, double tau_rel = kDefaultComponentTau) {
    if (spectrum.order() == 0) throw DomainError("count_components: empty spectrum");
    if (!(tau_rel > 0.0 && tau_rel < 1.0)) throw DomainError("count_components: tau_rel must lie in (0, 1)");
    const double cut = tau_rel * spectrum.eigenvalues(0);
    int count = 0;
    for (Eigen::Index i = 0; i < spectrum.order(); ++i) {
        if (spectrum.eigenvalues(i) > cut) ++count;
    }
    return count;
}

/// Karhunen-Loeve basis truncated to m components: forward A = Phi^T,
/// backward B = Phi.
class KlBasis {
public:
    KlBasis(const Spectrum& spectrum, Eigen::Index m) : backward_(spectrum.eigenvectors), m_(m) {
        if (spectrum.eigenvectors.rows() != spectrum.eigenvectors.cols()) {
            throw DomainError("KlBasis: eigenvector matrix must be square");
        }
        if (m < 1 || m > order()) {
            throw DomainError("KlBasis: truncation order " + std::to_string(m) + " outside 1.." +
                              std::to_string(order()));
        }
    }

    [[nodiscard]] Eigen::Index order() const noexcept { return backward_.rows(); }
    [[nodiscard]] Eigen::Index m() const noexcept { return m_; }
    [[nodiscard]] Eigen::MatrixXd forward() const { return backward_.transpose(); }
    [[nodiscard]] const Eigen::MatrixXd& backward() const noexcept { return backward_; }

    [[nodiscard]] KlBasis truncated(Eigen::Index m) const {
        KlBasis copy = *this;
        if (m < 1 || m > order()) throw DomainError("KlBasis: truncation order out of range");
        copy.m_ = m;
        return copy;
    }

private:
    Eigen::MatrixXd backward_;
    Eigen::Index m_;
};

/// First m KL coefficients of u.
inline Eigen::VectorXd kl_project(const Eigen::VectorXd& u, const KlBasis& basis) {
    if (u.size() != basis.order()) throw DomainError("kl_project: vector length does not match basis order");
    return basis.backward().leftCols(basis.m()).transpose() * u;
}

/// Back to the original coordinates from m coefficients (the rest taken as zero).
inline Eigen::VectorXd kl_reconstruct(const Eigen::VectorXd& w, const KlBasis& basis) {
    if (w.size() != basis.m()) throw DomainError("kl_reconstruct: coefficient count does not match m");
    return basis.backward().leftCols(basis.m()) * w;
}

/// J_m measured directly: mean squared distance between each row of X and
/// its m-term reconstruction.
inline double truncation_error(const Eigen::MatrixXd& centered, const KlBasis& basis) {
    if (centered.cols() != basis.order()) throw DomainError("truncation_error: column count does not match basis");
    const auto phi_m = basis.backward().leftCols(basis.m());
    const Eigen::MatrixXd residual = centered - (centered * phi_m) * phi_m.transpose();
    return residual.squaredNorm() / static_cast<double>(centered.rows());
}

inline double truncation_error(const CenteredMatrix& X, const KlBasis& basis) {
    return truncation_error(X.values, basis);
}

/// Worst-case deviations from the Spectrum contract for a given R.
struct SpectrumDiagnostics {
    double residual = 0.0;         // max_i ||R phi_i - lambda_i phi_i||_inf
    double orthonormality = 0.0;   // ||Phi^T Phi - I||_inf (entrywise max)
    double trace_gap = 0.0;        // |sum lambda - trace R|
    bool descending = true;
};

inline SpectrumDiagnostics diagnose(const SymMatrix& R, const Spectrum& s) {
    SpectrumDiagnostics d;
    const Eigen::MatrixXd lhs = R.entries() * s.eigenvectors;
    const Eigen::MatrixXd rhs = s.eigenvectors * s.eigenvalues.asDiagonal();
    d.residual = s.order() ? (lhs - rhs).cwiseAbs().maxCoeff() : 0.0;
    const Eigen::MatrixXd gram = s.eigenvectors.transpose() * s.eigenvectors;
    d.orthonormality = s.order() ? (gram - Eigen::MatrixXd::Identity(s.order(), s.order())).cwiseAbs().maxCoeff() : 0.0;
    d.trace_gap = std::abs(s.sum() - R.trace());
    for (Eigen::Index i = 1; i < s.order(); ++i) {
        if (s.eigenvalues(i) > s.eigenvalues(i - 1)) d.descending = false;
    }
    return d;
}

}  // namespace capca
