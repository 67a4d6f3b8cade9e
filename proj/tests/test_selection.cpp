#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numeric>
#include <set>

#include "oms/selection.hpp"

using namespace oms;

namespace {

// Every ordered subset (A_1, ..., A_J) with its probability:
// p_{A_1} times 1 / ((K-1)(K-2)...(K-J+1)) for the uniform tail.
void enumerate_outcomes(const std::vector<double>& p, std::size_t j,
                        const std::function<void(const std::vector<std::uint32_t>&, double)>& visit) {
    const std::size_t k = p.size();
    double tail = 1.0;
    for (std::size_t a = 1; a < j; ++a) tail /= static_cast<double>(k - a);
    std::vector<std::uint32_t> chosen;
    std::function<void()> recurse = [&]() {
        if (chosen.size() == j) {
            visit(chosen, p[chosen.front()] * tail);
            return;
        }
        for (std::uint32_t i = 0; i < k; ++i) {
            if (std::find(chosen.begin(), chosen.end(), i) != chosen.end()) continue;
            chosen.push_back(i);
            recurse();
            chosen.pop_back();
        }
    };
    recurse();
}

}  // namespace

TEST(SubsetSize, Validation) {
    EXPECT_THROW(validate_subset_size(5, 1), std::invalid_argument);
    EXPECT_THROW(validate_subset_size(5, 6), std::invalid_argument);
    EXPECT_THROW(validate_subset_size(1, 1), std::invalid_argument);
    EXPECT_NO_THROW(validate_subset_size(5, 5));
}

TEST(Inclusion, ExactEnumerationMatchesClosedForm) {
    const std::vector<double> p{0.05, 0.4, 0.15, 0.3, 0.1};
    for (std::size_t j = 2; j <= 5; ++j) {
        std::vector<double> mass(p.size(), 0.0);
        double total = 0.0;
        enumerate_outcomes(p, j, [&](const std::vector<std::uint32_t>& a, double prob) {
            total += prob;
            for (auto i : a) mass[i] += prob;
        });
        EXPECT_NEAR(total, 1.0, 1e-14);
        const auto q = inclusion_probabilities(p, j);
        for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(mass[i], q[i], 1e-14) << "J=" << j << " i=" << i;
    }
}

TEST(Inclusion, JEqualsKIsCertain) {
    for (double v : inclusion_probabilities(std::vector<double>{0.2, 0.3, 0.5}, 3)) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(Estimators, ExactExpectationIsUnbiased) {
    const std::vector<double> p{0.1, 0.25, 0.05, 0.35, 0.25};
    const std::vector<double> c{0.3, 0.9, 0.1, 0.5, 0.7};
    const std::vector<std::vector<double>> g{{1, 2}, {-1, 0.5}, {0, 3}, {2, 2}, {-0.5, -1}};
    for (std::size_t j : {2u, 3u}) {
        const auto q = inclusion_probabilities(p, j);
        std::vector<double> mean_c(5, 0.0);
        std::vector<std::vector<double>> mean_g(5, std::vector<double>(2, 0.0));
        enumerate_outcomes(p, j, [&](const std::vector<std::uint32_t>& a, double prob) {
            SamplingOutcome out{a, q};
            std::vector<double> raw;
            std::vector<std::vector<double>> raw_g;
            for (auto i : a) {
                raw.push_back(c[i]);
                raw_g.push_back(g[i]);
            }
            const auto est = estimate_losses(raw, out);
            const auto est_g = estimate_gradients(raw_g, out);
            for (std::size_t i = 0; i < 5; ++i) {
                mean_c[i] += prob * est.values[i];
                if (!est_g.is_zero(i))
                    for (int d = 0; d < 2; ++d) mean_g[i][d] += prob * est_g.values[i][d];
            }
        });
        for (std::size_t i = 0; i < 5; ++i) {
            EXPECT_NEAR(mean_c[i], c[i], 1e-13);
            for (int d = 0; d < 2; ++d) EXPECT_NEAR(mean_g[i][d], g[i][d], 1e-13);
        }
    }
}

TEST(Sampling, DistinctIndicesWithLeadFirst) {
    CounterRng rng(5, StreamPurpose::Sampling);
    const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
    for (int n = 0; n < 1000; ++n) {
        const auto out = sample_subset(p, 3, rng);
        ASSERT_EQ(out.subset_size(), 3u);
        EXPECT_EQ(std::set<std::uint32_t>(out.ordered_indices.begin(), out.ordered_indices.end()).size(), 3u);
        for (auto i : out.ordered_indices) EXPECT_LT(i, 4u);
        EXPECT_EQ(out.inclusion_probs, inclusion_probabilities(p, 3));
    }
}

// Lead index frequencies against p, chi-squared at 0.001 (df = 3: 16.27).
TEST(Sampling, LeadFollowsDistribution) {
    CounterRng rng(6, StreamPurpose::Sampling);
    const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
    const int n = 100000;
    std::vector<int> hits(4, 0);
    for (int t = 0; t < n; ++t) ++hits[sample_subset(p, 2, rng).lead_index()];
    double chi2 = 0.0;
    for (int i = 0; i < 4; ++i) chi2 += std::pow(hits[i] - n * p[i], 2) / (n * p[i]);
    EXPECT_LT(chi2, 16.27);
}

TEST(Sampling, DeterministicPerStream) {
    const std::vector<double> p{0.25, 0.25, 0.5};
    CounterRng a(9, StreamPurpose::Sampling, 1, 2), b(9, StreamPurpose::Sampling, 1, 2);
    for (int n = 0; n < 50; ++n) EXPECT_EQ(sample_subset(p, 2, a).ordered_indices, sample_subset(p, 2, b).ordered_indices);
}

TEST(Estimators, RejectWrongArity) {
    SamplingOutcome out{{0, 2}, {0.5, 0.5, 0.5}};
    EXPECT_THROW(estimate_losses(std::vector<double>{1.0}, out), std::invalid_argument);
    const auto est = estimate_losses(std::vector<double>{1.0, 2.0}, out);
    EXPECT_EQ(est.values, (std::vector<double>{2.0, 0.0, 4.0}));
}
