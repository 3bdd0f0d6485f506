#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "capca/dataset.hpp"
#include "capca/spectral.hpp"
#include "oracles.hpp"

using namespace capca;

namespace {

const std::set<int> kAll = [] {
    const auto v = all_rules();
    return std::set<int>(v.begin(), v.end());
}();

Eigen::MatrixXd random_centered(std::mt19937_64& rng, Eigen::Index n, Eigen::Index p) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd m(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j) m(i, j) = gauss(rng);
    m.rowwise() -= m.colwise().mean();
    return m;
}

CenteredMatrix standardized_db(int l) { return standardize(center_and_weigh(build_matrix(l, kAll))); }

void expect_contract(const SymMatrix& R, const Spectrum& s) {
    const auto d = diagnose(R, s);
    const double scale = std::max(1.0, std::abs(s.eigenvalues(0)));
    EXPECT_LE(d.residual, 1e-8 * scale);
    EXPECT_LE(d.orthonormality, 1e-9);
    EXPECT_LE(d.trace_gap, 1e-8 * std::max(1.0, std::abs(R.trace())));
    EXPECT_TRUE(d.descending);
}

}  // namespace

TEST(SymMatrixTest, CanonicalSymmetry) {
    Eigen::MatrixXd m(2, 2);
    m << 1, 2, 2.0000000001, 3;
    const SymMatrix s(m);
    EXPECT_EQ(s(1, 0), s(0, 1));
    EXPECT_THROW(SymMatrix(Eigen::MatrixXd(2, 3)), DomainError);
}

TEST(CovarianceTest, MatchesLongDoubleOracle) {
    const int l = 5;
    const auto X = center_and_weigh(build_matrix(l, kAll));
    const auto R = covariance(X);
    for (std::size_t a = 0; a < X.col_labels.size(); a += 17) {
        for (std::size_t b = 0; b < X.col_labels.size(); b += 13) {
            const auto ref = oracle::centered_cross(oracle::column(X.col_labels[a], l), oracle::column(X.col_labels[b], l));
            EXPECT_NEAR(R(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)), static_cast<double>(ref), 1e-12);
        }
    }
}

TEST(CovarianceTest, IdenticalColumnsPerfectlyCorrelated) {
    DataMatrix F;
    F.values.resize(4, 2);
    F.values << 0, 0, 1, 1, 3, 3, 2, 2;
    F.col_labels = {0, 1};
    F.row_labels = {0, 1, 2, 3};
    const auto R = covariance(standardize(center_and_weigh(F)));
    EXPECT_NEAR(R(0, 1), 1.0, 1e-9);
}

TEST(CovarianceTest, NoiselessTraceAndSemidefinite) {
    const auto R = covariance(standardized_db(4));
    EXPECT_NEAR(R.trace(), 254.0, 1e-6);
    EXPECT_GE(eig_sym(R).eigenvalues.minCoeff(), -1e-10);
}

TEST(EigSymTest, DiagonalMatrix) {
    Eigen::MatrixXd m = Eigen::Vector3d(3, 1, 2).asDiagonal();
    const auto s = eig_sym(SymMatrix(m));
    EXPECT_DOUBLE_EQ(s.eigenvalues(0), 3.0);
    EXPECT_DOUBLE_EQ(s.eigenvalues(1), 2.0);
    EXPECT_DOUBLE_EQ(s.eigenvalues(2), 1.0);
}

TEST(EigSymTest, LinearSystemMatrix) {
    // [[lambda, 1], [1, lambda]] with lambda = 2 has eigenvalues lambda +- 1.
    Eigen::MatrixXd m(2, 2);
    m << 2, 1, 1, 2;
    const auto s = eig_sym(SymMatrix(m));
    EXPECT_NEAR(s.eigenvalues(0), 3.0, 1e-12);
    EXPECT_NEAR(s.eigenvalues(1), 1.0, 1e-12);
    const auto j = eig_jacobi(SymMatrix(m));
    EXPECT_NEAR(j.eigenvalues(0), 3.0, 1e-12);
    EXPECT_NEAR(j.eigenvalues(1), 1.0, 1e-12);
}

TEST(EigSymTest, NoiselessL4TopEigenvalue) {
    const auto R = covariance(standardized_db(4));
    const auto s = eig_sym(R);
    EXPECT_NEAR(s.eigenvalues(0), 52.6802, 1e-3);
    expect_contract(R, s);
}

TEST(EigSymTest, RejectsNonFinite) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(2, 2);
    m(0, 1) = std::nan("");
    EXPECT_THROW(eig_sym(SymMatrix(m)), DomainError);
    EXPECT_THROW(eig_jacobi(SymMatrix(m)), DomainError);
}

TEST(EigSymTest, EigenvectorSignConvention) {
    std::mt19937_64 rng(3);
    const auto X = random_centered(rng, 10, 6);
    const auto s = eig_sym(covariance(X));
    for (Eigen::Index i = 0; i < s.order(); ++i) {
        Eigen::Index k = 0;
        s.eigenvectors.col(i).cwiseAbs().maxCoeff(&k);
        EXPECT_GT(s.eigenvectors(k, i), 0.0);
    }
}

TEST(EigSymTest, ContractOnRandomMatrices) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> dim(1, 12);
    for (int trial = 0; trial < 50; ++trial) {
        const auto X = random_centered(rng, dim(rng), dim(rng));
        const auto R = covariance(X);
        expect_contract(R, eig_sym(R));
        expect_contract(R, eig_jacobi(R));
    }
}

TEST(DualSpectrumTest, AgreesWithPrimalOnRandomMatrices) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> dim(2, 12);
    for (int trial = 0; trial < 50; ++trial) {
        const auto X = random_centered(rng, dim(rng), dim(rng));
        const auto primal = eig_sym(covariance(X));
        const auto dual = dual_spectrum(X);
        const int k = count_components(primal);
        ASSERT_EQ(count_components(dual), k);
        ASSERT_LE(k, std::min(X.rows(), X.cols()));
        for (int i = 0; i < k; ++i) EXPECT_NEAR(primal.eigenvalues(i), dual.eigenvalues(i), 1e-8 * primal.eigenvalues(0));
    }
}

TEST(DualSpectrumTest, NoiselessL5) {
    const auto X = standardized_db(5);
    const auto primal = eig_sym(covariance(X));
    const auto dual = dual_spectrum(X);
    ASSERT_EQ(dual.order(), 32);
    ASSERT_EQ(count_components(primal), 7);
    ASSERT_EQ(count_components(dual), 7);
    for (int i = 0; i < 7; ++i) EXPECT_NEAR(dual.eigenvalues(i) / primal.eigenvalues(i), 1.0, 1e-8);
}

TEST(DualSpectrumTest, RankOneMatrix) {
    Eigen::MatrixXd X(6, 4);
    Eigen::VectorXd col(6);
    col << 1, -1, 2, -2, 0.5, -0.5;
    for (int j = 0; j < 4; ++j) X.col(j) = col;
    EXPECT_EQ(count_components(dual_spectrum(X)), 1);
    EXPECT_EQ(count_components(eig_sym(covariance(X))), 1);
}

TEST(KlTest, FullBasisIsOrthogonalChange) {
    std::mt19937_64 rng(17);
    const auto X = random_centered(rng, 9, 7);
    const auto s = eig_sym(covariance(X));
    const KlBasis basis(s, 7);
    EXPECT_LE((basis.backward() * basis.forward() - Eigen::MatrixXd::Identity(7, 7)).cwiseAbs().maxCoeff(), 1e-9);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const Eigen::VectorXd u = X.row(i).transpose();
        const auto w = kl_project(u, basis);
        EXPECT_NEAR(w.norm(), u.norm(), 1e-9);
        EXPECT_LE((kl_reconstruct(w, basis) - u).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(KlTest, FirstEigenvectorProjectsToUnitCoefficient) {
    std::mt19937_64 rng(19);
    const auto s = eig_sym(covariance(random_centered(rng, 8, 5)));
    for (Eigen::Index m = 1; m <= 5; ++m) {
        const auto w = kl_project(s.eigenvectors.col(0), KlBasis(s, m));
        ASSERT_EQ(w.size(), m);
        EXPECT_NEAR(w(0), 1.0, 1e-12);
        for (Eigen::Index k = 1; k < m; ++k) EXPECT_NEAR(w(k), 0.0, 1e-12);
    }
    EXPECT_EQ(kl_project(Eigen::VectorXd::Zero(5), KlBasis(s, 3)).norm(), 0.0);
}

TEST(KlTest, ContractViolations) {
    std::mt19937_64 rng(23);
    const auto s = eig_sym(covariance(random_centered(rng, 8, 4)));
    EXPECT_THROW(KlBasis(s, 0), DomainError);
    EXPECT_THROW(KlBasis(s, 5), DomainError);
    const KlBasis basis(s, 2);
    EXPECT_THROW(kl_project(Eigen::VectorXd::Zero(3), basis), DomainError);
    EXPECT_THROW(kl_reconstruct(Eigen::VectorXd::Zero(3), basis), DomainError);
}

TEST(TruncationTest, DirectErrorEqualsDiscardedEigenvalues) {
    std::mt19937_64 rng(29);
    std::uniform_int_distribution<int> dim(1, 12);
    for (int trial = 0; trial < 50; ++trial) {
        const auto X = random_centered(rng, dim(rng), dim(rng));
        const auto R = covariance(X);
        const auto s = eig_sym(R);
        const double tol = 1e-8 * std::max(1.0, R.trace());
        double previous = std::numeric_limits<double>::infinity();
        for (Eigen::Index m = 1; m <= s.order(); ++m) {
            const double direct = truncation_error(X, KlBasis(s, m));
            const double tail = s.eigenvalues.tail(s.order() - m).sum();
            EXPECT_NEAR(direct, tail, tol);
            EXPECT_LE(direct, previous + tol);
            previous = direct;
        }
        EXPECT_LE(truncation_error(X, KlBasis(s, s.order())), 1e-9 * std::max(1.0, R.trace()));
        EXPECT_NEAR(truncation_error(X, KlBasis(s, 1)), R.trace() - s.eigenvalues(0), tol);
    }
}

TEST(TruncationTest, RankSevenCapturesNoiselessDatabase) {
    for (int l : {4, 5}) {
        const auto X = standardized_db(l);
        const auto R = covariance(X);
        const auto s = eig_sym(R);
        const KlBasis basis(s, 7);
        EXPECT_LE(truncation_error(X, basis) / R.trace(), 1e-6) << "l=" << l;

        Eigen::VectorXd worst = Eigen::VectorXd::Zero(1);
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            const Eigen::VectorXd u = X.values.row(i).transpose();
            const double err = (kl_reconstruct(kl_project(u, basis), basis) - u).norm();
            worst(0) = std::max(worst(0), err);
        }
        EXPECT_LE(worst(0), 1e-6);
    }
}

TEST(CountComponentsTest, ThresholdAndErrors) {
    Spectrum s;
    s.eigenvalues = Eigen::Vector4d(10, 1, 1e-10, 1e-12);
    EXPECT_EQ(count_components(s, 1e-10), 2);
    EXPECT_EQ(count_components(s, 1e-12), 3);
    EXPECT_THROW(count_components(Spectrum{}), DomainError);
    EXPECT_THROW(count_components(s, 0.0), DomainError);
    EXPECT_THROW(count_components(s, 1.0), DomainError);
}

TEST(CountComponentsTest, NoiselessRankSevenAllLengths) {
    for (int l = 4; l <= 12; ++l) EXPECT_EQ(count_components(eig_sym(covariance(standardized_db(l)))), 7) << "l=" << l;
}

TEST(CountComponentsTest, NoisyCountsFollowPatternCount) {
    for (double p : {0.2, 0.4, 0.6, 0.8}) {
        const auto X5 = standardize(center_and_weigh(build_matrix(5, kAll, NoiseModel(p, 1))));
        EXPECT_EQ(count_components(eig_sym(covariance(X5))), 31);
        const auto X6 = standardize(center_and_weigh(build_matrix(6, kAll, NoiseModel(p, 1))));
        EXPECT_EQ(count_components(eig_sym(covariance(X6))), 63);
    }
}
