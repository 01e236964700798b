#include "lowrank/risk.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "json.hpp"
#include "lowrank/oracle.hpp"
#include "test_util.hpp"

namespace {

using lowrank::CustomSpectral;
using lowrank::DegenerateSpectrum;
using lowrank::HardThreshold;
using lowrank::MatrixObs;
using lowrank::ReducedRank;
using lowrank::SoftThreshold;
using lowrank::SpectralEstimator;
using lowrank::ThresholdAtSingularValue;
using lowrank::ZeroSingularValue;

Eigen::VectorXd d21() {
    Eigen::VectorXd d(2);
    d << 2, 1;
    return d;
}

Eigen::VectorXd tied221() {
    Eigen::VectorXd d(3);
    d << 2, 2, 1;
    return d;
}

// Worked example: spectrum (2, 1), square, rank 1:
//   p*r + (d1^2 + d2^2)/(d1^2 - d2^2) = 2 + 5/3 = 11/3.
TEST(ReducedRankDivergence, WorkedExampleSquare) {
    EXPECT_NEAR(lowrank::divergence_reduced_rank(d21(), 2, 2, 1), 11.0 / 3.0, 1e-12);
}

// Same spectrum embedded in a 3 x 2 problem: 3 + 5/3 = 14/3.
TEST(ReducedRankDivergence, WorkedExampleRectangular) {
    EXPECT_NEAR(lowrank::divergence_reduced_rank(d21(), 3, 2, 1), 14.0 / 3.0, 1e-12);
}

TEST(ReducedRankDivergence, MatchesFiniteDifferences) {
    // Analytic formula against the central-difference oracle on the
    // matrices realizing the worked examples.
    Eigen::MatrixXd y22 = Eigen::MatrixXd::Zero(2, 2);
    y22(0, 0) = 2.0;
    y22(1, 1) = 1.0;
    double fd = lowrank::finite_difference_divergence(ReducedRank{1}, MatrixObs(y22, 1.0));
    EXPECT_NEAR(fd, 11.0 / 3.0, 1e-6);

    const Eigen::MatrixXd y32 = testutil::matrix_with_spectrum(3, 2, d21(), 5);
    fd = lowrank::finite_difference_divergence(ReducedRank{1}, MatrixObs(y32, 1.0));
    EXPECT_NEAR(fd, 14.0 / 3.0, 1e-6);
}

TEST(ReducedRankDivergence, ConstantAndIdentityConventions) {
    // Rank 0 and full rank are exact for any spectrum, ties included.
    EXPECT_DOUBLE_EQ(lowrank::divergence_reduced_rank(tied221(), 4, 3, 0), 0.0);
    EXPECT_DOUBLE_EQ(lowrank::divergence_reduced_rank(tied221(), 4, 3, 3), 12.0);
}

TEST(ReducedRankDivergence, TiedSpectrumThrows) {
    try {
        lowrank::divergence_reduced_rank(tied221(), 3, 3, 1);
        FAIL() << "expected DegenerateSpectrum";
    } catch (const DegenerateSpectrum& ex) {
        EXPECT_DOUBLE_EQ(ex.min_relative_gap(), 0.0);
    }
}

TEST(ReducedRankDivergence, ValidatesArguments) {
    EXPECT_THROW(lowrank::divergence_reduced_rank(d21(), 2, 2, -1), std::invalid_argument);
    EXPECT_THROW(lowrank::divergence_reduced_rank(d21(), 2, 2, 3), std::invalid_argument);
    EXPECT_THROW(lowrank::divergence_reduced_rank(d21(), 1, 2, 1), std::invalid_argument);
    EXPECT_THROW(lowrank::divergence_reduced_rank(d21(), 3, 3, 1), std::invalid_argument);
}

TEST(ReducedRankDivergence, AtLeastPTimesRank) {
    // Every cross term (d_k^2 + d_l^2)/(d_k^2 - d_l^2) exceeds 1.
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const int q = 3 + static_cast<int>(seed % 4);
        const int p = q + static_cast<int>(seed % 3);
        const Eigen::VectorXd d = testutil::distinct_spectrum(q, 100 + seed);
        for (int r = 1; r < q; ++r) {
            EXPECT_GE(lowrank::divergence_reduced_rank(d, p, q, r),
                      static_cast<double>(p) * r);
        }
    }
}

TEST(HardDivergence, EqualsReducedRankBetweenSingularValues) {
    const Eigen::VectorXd d = testutil::distinct_spectrum(5, 3);
    for (int r = 1; r < 5; ++r) {
        const double lambda = 0.5 * (d(r - 1) + d(r));
        EXPECT_NEAR(lowrank::divergence_hard_threshold(d, 7, 5, lambda),
                    lowrank::divergence_reduced_rank(d, 7, 5, r), 1e-12);
    }
}

TEST(HardDivergence, WorkedExample) {
    // lambda = 1.5 keeps only d_1 = 2, so this matches rank 1: 11/3.
    EXPECT_NEAR(lowrank::divergence_hard_threshold(d21(), 2, 2, 1.5), 11.0 / 3.0, 1e-12);
}

TEST(HardDivergence, IdentityAndZeroConventions) {
    EXPECT_DOUBLE_EQ(lowrank::divergence_hard_threshold(tied221(), 4, 3, 0.0), 12.0);
    EXPECT_DOUBLE_EQ(lowrank::divergence_hard_threshold(tied221(), 4, 3, 9.0), 0.0);
}

TEST(HardDivergence, ThresholdOnASingularValueThrows) {
    EXPECT_THROW(lowrank::divergence_hard_threshold(d21(), 2, 2, 1.0),
                 ThresholdAtSingularValue);
    EXPECT_THROW(lowrank::divergence_hard_threshold(d21(), 2, 2, 2.0 + 1e-12),
                 ThresholdAtSingularValue);
    EXPECT_THROW(lowrank::divergence_hard_threshold(d21(), 2, 2, -0.5),
                 std::invalid_argument);
}

TEST(HardDivergence, TiedKeptValuesThrow) {
    EXPECT_THROW(lowrank::divergence_hard_threshold(tied221(), 3, 3, 1.5),
                 DegenerateSpectrum);
}

TEST(SoftDivergence, WorkedExampleSquare) {
    // lambda = 0.5 on (2, 1), square: 2 + 2*(1 - 1/6) = 11/3.
    EXPECT_NEAR(lowrank::divergence_soft_threshold(d21(), 2, 2, 0.5), 11.0 / 3.0, 1e-12);
}

TEST(SoftDivergence, MatchesFiniteDifferences) {
    Eigen::MatrixXd y22 = Eigen::MatrixXd::Zero(2, 2);
    y22(0, 0) = 2.0;
    y22(1, 1) = 1.0;
    double fd = lowrank::finite_difference_divergence(SoftThreshold{0.5}, MatrixObs(y22, 1.0));
    EXPECT_NEAR(fd, 11.0 / 3.0, 1e-6);

    // Rectangular case exercises the (p - q) ratio term.
    const Eigen::VectorXd d = testutil::distinct_spectrum(3, 21);
    const Eigen::MatrixXd y43 = testutil::matrix_with_spectrum(4, 3, d, 22);
    const double lambda = 0.5 * (d(1) + d(2));
    fd = lowrank::finite_difference_divergence(SoftThreshold{lambda}, MatrixObs(y43, 1.0));
    EXPECT_NEAR(fd, lowrank::divergence_soft_threshold(d, 4, 3, lambda),
                1e-5 * std::max(1.0, std::abs(fd)));
}

TEST(SoftDivergence, IdentityAndZeroConventions) {
    EXPECT_DOUBLE_EQ(lowrank::divergence_soft_threshold(tied221(), 4, 3, 0.0), 12.0);
    EXPECT_DOUBLE_EQ(lowrank::divergence_soft_threshold(tied221(), 4, 3, 5.0), 0.0);
    EXPECT_THROW(lowrank::divergence_soft_threshold(tied221(), 4, 3, 1.5),
                 DegenerateSpectrum);
}

TEST(GeneralDivergence, IdentityFunctionsGivePQ) {
    const struct {
        int p;
        int q;
    } shapes[] = {{2, 2}, {5, 3}, {6, 6}};
    for (const auto& s : shapes) {
        const Eigen::VectorXd d = testutil::distinct_spectrum(s.q, 7 + s.p);
        const Eigen::VectorXd gp = Eigen::VectorXd::Ones(s.q);
        EXPECT_NEAR(lowrank::divergence_spectral_general(d, s.p, s.q, d, gp),
                    static_cast<double>(s.p) * s.q, 1e-10);
    }
}

TEST(GeneralDivergence, ZeroTailSingularValueUsesDerivative) {
    // f(0) = 0 lets the d -> 0 limit stand in for f(d)/d.
    Eigen::VectorXd d(3);
    d << 2, 1, 0;
    const Eigen::VectorXd gp = Eigen::VectorXd::Ones(3);
    EXPECT_NEAR(lowrank::divergence_spectral_general(d, 4, 3, d, gp), 12.0, 1e-10);
}

TEST(GeneralDivergence, SpecializesToReducedRank) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const int q = 2 + static_cast<int>(seed % 5);
        const int p = q + static_cast<int>(seed % 4);
        const Eigen::VectorXd d = testutil::distinct_spectrum(q, 40 + seed);
        for (int r = 0; r <= q; ++r) {
            Eigen::VectorXd g = Eigen::VectorXd::Zero(q);
            Eigen::VectorXd gp = Eigen::VectorXd::Zero(q);
            for (int k = 0; k < r; ++k) {
                g(k) = d(k);
                gp(k) = 1.0;
            }
            EXPECT_NEAR(lowrank::divergence_spectral_general(d, p, q, g, gp),
                        lowrank::divergence_reduced_rank(d, p, q, r), 1e-10)
                << "seed " << seed << " r " << r;
        }
    }
}

TEST(GeneralDivergence, SpecializesToSoftThreshold) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const int q = 2 + static_cast<int>(seed % 4);
        const int p = q + static_cast<int>(seed % 3);
        const Eigen::VectorXd d = testutil::distinct_spectrum(q, 60 + seed);
        const double lambda = 0.3 + 0.2 * static_cast<double>(seed);
        Eigen::VectorXd g(q);
        Eigen::VectorXd gp(q);
        for (int k = 0; k < q; ++k) {
            g(k) = std::max(0.0, d(k) - lambda);
            gp(k) = d(k) >= lambda ? 1.0 : 0.0;
        }
        if ((d.array() >= lambda).any()) {
            EXPECT_NEAR(lowrank::divergence_spectral_general(d, p, q, g, gp),
                        lowrank::divergence_soft_threshold(d, p, q, lambda), 1e-10)
                << "seed " << seed;
        }
    }
}

TEST(GeneralDivergence, RejectsUndefinedRatioAtZero) {
    Eigen::VectorXd d(3);
    d << 2, 1, 0;
    Eigen::VectorXd g(3);
    g << 2, 1, 0.5;  // g_q != 0 at d_q = 0
    const Eigen::VectorXd gp = Eigen::VectorXd::Ones(3);
    EXPECT_THROW(lowrank::divergence_spectral_general(d, 4, 3, g, gp), ZeroSingularValue);
    // Square problems have no ratio term, so the same inputs are fine.
    EXPECT_NO_THROW(lowrank::divergence_spectral_general(d, 3, 3, g, gp));
}

TEST(GeneralDivergence, ValidatesInputs) {
    const Eigen::VectorXd d = d21();
    Eigen::VectorXd g = d;
    Eigen::VectorXd gp = Eigen::VectorXd::Ones(2);
    EXPECT_THROW(
        lowrank::divergence_spectral_general(d, 2, 2, Eigen::VectorXd::Ones(3), gp),
        std::invalid_argument);
    g(0) = -1.0;
    EXPECT_THROW(lowrank::divergence_spectral_general(d, 2, 2, g, gp), std::domain_error);
    g(0) = std::nan("");
    EXPECT_THROW(lowrank::divergence_spectral_general(d, 2, 2, g, gp), std::domain_error);

    Eigen::VectorXd tied(2);
    tied << 1, 1;
    EXPECT_THROW(lowrank::divergence_spectral_general(tied, 2, 2, Eigen::VectorXd::Zero(2),
                                                      Eigen::VectorXd::Zero(2)),
                 DegenerateSpectrum);
}

TEST(EstimatorDivergence, DispatchMatchesDirectCalls) {
    const Eigen::VectorXd d = testutil::distinct_spectrum(4, 77);
    EXPECT_EQ(lowrank::estimator_divergence(d, 6, 4, ReducedRank{2}),
              lowrank::divergence_reduced_rank(d, 6, 4, 2));
    const double lambda = 0.5 * (d(1) + d(2));
    EXPECT_EQ(lowrank::estimator_divergence(d, 6, 4, HardThreshold{lambda}),
              lowrank::divergence_hard_threshold(d, 6, 4, lambda));
    EXPECT_EQ(lowrank::estimator_divergence(d, 6, 4, SoftThreshold{lambda}),
              lowrank::divergence_soft_threshold(d, 6, 4, lambda));

    CustomSpectral ident;
    for (int k = 0; k < 4; ++k) {
        ident.values.emplace_back([](double x) { return x; });
        ident.derivatives.emplace_back([](double) { return 1.0; });
    }
    EXPECT_EQ(lowrank::estimator_divergence(d, 6, 4, ident),
              lowrank::divergence_spectral_general(d, 6, 4, d, Eigen::VectorXd::Ones(4)));
}

MatrixObs diag21_obs(double sigma2 = 1.0) {
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(2, 2);
    y(0, 0) = 2.0;
    y(1, 1) = 1.0;
    return MatrixObs(y, sigma2);
}

// Worked example: diag(2,1), rank 1, sigma^2 = 1:
//   rss = 1, divergence = 11/3, sure = 1 - 4 + 22/3 = 13/3.
TEST(SureEstimate, WorkedExample) {
    const auto r = lowrank::sure_estimate(diag21_obs(), ReducedRank{1});
    EXPECT_NEAR(r.rss, 1.0, 1e-12);
    EXPECT_NEAR(r.divergence, 11.0 / 3.0, 1e-12);
    EXPECT_NEAR(r.sure, 13.0 / 3.0, 1e-12);
    EXPECT_TRUE(r.stein_valid);
    EXPECT_TRUE(r.distinct);
}

TEST(SureEstimate, HardGivesSameNumbersButInvalidFlag) {
    const auto rr = lowrank::sure_estimate(diag21_obs(), ReducedRank{1});
    const auto hard = lowrank::sure_estimate(diag21_obs(), HardThreshold{1.5});
    EXPECT_NEAR(hard.rss, rr.rss, 1e-12);
    EXPECT_NEAR(hard.divergence, rr.divergence, 1e-12);
    EXPECT_NEAR(hard.sure, rr.sure, 1e-12);
    EXPECT_FALSE(hard.stein_valid);
}

TEST(SureEstimate, RecordIdentityIsBitExact) {
    const Eigen::MatrixXd y = testutil::gaussian_matrix(6, 4, 31);
    const MatrixObs obs(y, 1.7);
    const SpectralEstimator ests[] = {SpectralEstimator(ReducedRank{2}),
                                      SpectralEstimator(SoftThreshold{0.6})};
    for (const auto& est : ests) {
        const auto r = lowrank::sure_estimate(obs, est);
        EXPECT_EQ(r.sure, r.rss - obs.sigma2() * 24.0 + 2.0 * obs.sigma2() * r.divergence);
    }
}

TEST(SureEstimate, IdentityEstimatorOnTiedSpectrum) {
    // soft:0 is the identity: rss = 0 and sure = divergence * 2 - pq = pq,
    // even though the input's spectrum is tied (distinct = false).
    const MatrixObs obs(Eigen::MatrixXd::Identity(2, 2), 1.0);
    const auto r = lowrank::sure_estimate(obs, SoftThreshold{0.0});
    EXPECT_DOUBLE_EQ(r.rss, 0.0);
    EXPECT_DOUBLE_EQ(r.divergence, 4.0);
    EXPECT_DOUBLE_EQ(r.sure, 4.0);
    EXPECT_FALSE(r.distinct);
    // A rank cut through the tie has no usable closed form.
    EXPECT_THROW(lowrank::sure_estimate(obs, ReducedRank{1}), DegenerateSpectrum);
}

TEST(SureEstimate, ZeroEstimatorAndZeroMatrix) {
    const auto rr0 = lowrank::sure_estimate(diag21_obs(), ReducedRank{0});
    EXPECT_NEAR(rr0.rss, 5.0, 1e-12);
    EXPECT_DOUBLE_EQ(rr0.divergence, 0.0);
    EXPECT_NEAR(rr0.sure, 1.0, 1e-12);  // 5 - 4 + 0

    const MatrixObs zero(Eigen::MatrixXd::Zero(3, 2), 1.0);
    const auto r = lowrank::sure_estimate(zero, ReducedRank{0});
    EXPECT_DOUBLE_EQ(r.rss, 0.0);
    EXPECT_DOUBLE_EQ(r.sure, -6.0);
    EXPECT_FALSE(r.distinct);
}

TEST(SurePath, RssMonotoneInRank) {
    const Eigen::MatrixXd y = testutil::gaussian_matrix(5, 3, 44) +
                              3.0 * Eigen::MatrixXd::Identity(5, 3);
    const MatrixObs obs(y, 1.0);
    std::vector<SpectralEstimator> grid;
    for (int r = 0; r <= 3; ++r) grid.push_back(ReducedRank{r});
    const auto path = lowrank::sure_path(obs, grid);
    ASSERT_EQ(path.entries.size(), 4u);
    for (std::size_t i = 0; i < path.entries.size(); ++i) {
        ASSERT_TRUE(path.entries[i].report.has_value()) << path.entries[i].error;
        if (i > 0) {
            EXPECT_LE(path.entries[i].report->rss, path.entries[i - 1].report->rss + 1e-9);
        }
    }
    ASSERT_TRUE(path.best_any.has_value());
    ASSERT_TRUE(path.best_stein_valid.has_value());
    EXPECT_EQ(*path.best_any, *path.best_stein_valid);  // all entries stein-valid
}

TEST(SurePath, RecordsPerEntryErrors) {
    const MatrixObs obs = diag21_obs();
    const lowrank::SvdFactors f = lowrank::svd_decompose(obs);
    std::vector<SpectralEstimator> grid = {SoftThreshold{0.5},
                                           HardThreshold{f.d(1)},  // exactly on a value
                                           ReducedRank{1}};
    const auto path = lowrank::sure_path(obs, grid);
    ASSERT_EQ(path.entries.size(), 3u);
    EXPECT_TRUE(path.entries[0].report.has_value());
    EXPECT_FALSE(path.entries[1].report.has_value());
    EXPECT_FALSE(path.entries[1].error.empty());
    EXPECT_TRUE(path.entries[2].report.has_value());
}

TEST(SurePath, SteinRestrictedArgminSkipsHardEntries) {
    // Mixed grid: the hard entry has the smallest SURE but is not
    // stein-valid, so the restricted argmin must pick another entry.
    const Eigen::MatrixXd y = testutil::gaussian_matrix(6, 4, 45) +
                              4.0 * Eigen::MatrixXd::Identity(6, 4);
    const MatrixObs obs(y, 1.0);
    const lowrank::SvdFactors f = lowrank::svd_decompose(obs);
    const double lambda = 0.5 * (f.d(0) + f.d(1));
    std::vector<SpectralEstimator> grid = {HardThreshold{lambda}, SoftThreshold{0.01}};
    const auto path = lowrank::sure_path(obs, grid);
    ASSERT_TRUE(path.best_any.has_value());
    ASSERT_TRUE(path.best_stein_valid.has_value());
    EXPECT_EQ(*path.best_stein_valid, 1u);
    ASSERT_TRUE(path.entries[0].report.has_value());
    ASSERT_TRUE(path.entries[1].report.has_value());
    if (path.entries[0].report->sure < path.entries[1].report->sure) {
        EXPECT_EQ(*path.best_any, 0u);
    }
}

TEST(SurePath, FirstEntryWinsTies) {
    const MatrixObs obs = diag21_obs();
    std::vector<SpectralEstimator> grid = {ReducedRank{1}, ReducedRank{1}};
    const auto path = lowrank::sure_path(obs, grid);
    EXPECT_EQ(*path.best_any, 0u);
}

TEST(RiskReportJson, FieldOrderAndRoundTrip) {
    const auto r = lowrank::sure_estimate(diag21_obs(), ReducedRank{1});
    const std::string s = lowrank::risk_report_json(ReducedRank{1}, r);

    const auto j = nlohmann::json::parse(s);
    EXPECT_EQ(j["estimator"], "rr:1");
    EXPECT_EQ(j["rss"].get<double>(), r.rss);
    EXPECT_EQ(j["divergence"].get<double>(), r.divergence);
    EXPECT_EQ(j["df"].get<double>(), r.divergence);
    EXPECT_EQ(j["sure"].get<double>(), r.sure);
    EXPECT_EQ(j["stein_valid"].get<bool>(), true);
    EXPECT_EQ(j["distinct"].get<bool>(), true);

    // Keys appear in the documented order.
    const char* keys[] = {"\"estimator\"", "\"rss\"", "\"divergence\"",
                          "\"df\"",        "\"sure\"", "\"stein_valid\"",
                          "\"distinct\""};
    std::size_t pos = 0;
    for (const char* key : keys) {
        const std::size_t at = s.find(key);
        ASSERT_NE(at, std::string::npos) << key;
        EXPECT_GT(at, pos);
        pos = at;
    }
    EXPECT_EQ(s.find('\n'), std::string::npos);
}

}  // namespace
