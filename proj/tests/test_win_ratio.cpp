#include <doctest.h>

#include <cmath>
#include <random>

#include "bmw/errors.hpp"
#include "bmw/win_ratio/win_ratio.hpp"
#include "oracles.hpp"

using namespace bmw;
using namespace bmw::wr;

namespace {

PatientOutcome patient(Arm arm, std::vector<std::uint8_t> x, std::uint8_t t = 0) { return {arm, std::move(x), t}; }

EndpointHierarchy hierarchy(std::size_t k) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < k; ++i) names.push_back("e" + std::to_string(i));
    return EndpointHierarchy(names);
}

// Walks the endpoints directly for every pair.
WltCounts brute_force(const std::vector<PatientOutcome>& t, const std::vector<PatientOutcome>& c) {
    WltCounts out{0, 0, 0, static_cast<std::int64_t>(t.size()), static_cast<std::int64_t>(c.size())};
    for (const auto& a : t)
        for (const auto& b : c) {
            int verdict = 0;
            for (std::size_t k = 0; k < a.x_e.size() && verdict == 0; ++k)
                if (a.x_e[k] != b.x_e[k]) verdict = a.x_e[k] ? 1 : -1;
            (verdict > 0 ? out.n_win : verdict < 0 ? out.n_loss : out.n_tie) += 1;
        }
    return out;
}

std::vector<PatientOutcome> random_cohort(std::mt19937_64& g, Arm arm, std::size_t n, std::size_t k) {
    std::bernoulli_distribution coin(0.45);
    std::vector<PatientOutcome> out;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::uint8_t> x(k);
        for (auto& v : x) v = coin(g);
        out.push_back(patient(arm, x));
    }
    return out;
}

}  // namespace

TEST_CASE("pairwise comparison walks the hierarchy") {
    const auto h = EndpointHierarchy::or_efs3();
    CHECK(compare_pair(patient(Arm::Treatment, {1, 0}), patient(Arm::Control, {0, 1}), h) == PairResult::Win);
    CHECK(compare_pair(patient(Arm::Treatment, {1, 0}), patient(Arm::Control, {1, 1}), h) == PairResult::Loss);
    CHECK(compare_pair(patient(Arm::Treatment, {0, 1}), patient(Arm::Control, {0, 0}), h) == PairResult::Win);
    CHECK(compare_pair(patient(Arm::Treatment, {1, 1}), patient(Arm::Control, {1, 1}), h) == PairResult::Tie);
    CHECK_THROWS_AS(compare_pair(patient(Arm::Treatment, {1}), patient(Arm::Control, {1, 1}), h), ContractError);
    CHECK_THROWS_AS(EndpointHierarchy({}), ContractError);
    CHECK_THROWS_AS(EndpointHierarchy({"a", "a"}), ContractError);
}

TEST_CASE("efficacy codes order outcomes exactly as the hierarchy does") {
    const auto h = hierarchy(3);
    for (std::uint32_t a = 0; a < 8; ++a)
        for (std::uint32_t b = 0; b < 8; ++b) {
            std::vector<std::uint8_t> xa{std::uint8_t(a >> 2 & 1), std::uint8_t(a >> 1 & 1), std::uint8_t(a & 1)};
            std::vector<std::uint8_t> xb{std::uint8_t(b >> 2 & 1), std::uint8_t(b >> 1 & 1), std::uint8_t(b & 1)};
            CHECK(efficacy_code(xa) == a);
            const auto r = compare_pair(patient(Arm::Treatment, xa), patient(Arm::Control, xb), h);
            CHECK(r == (a > b ? PairResult::Win : a < b ? PairResult::Loss : PairResult::Tie));
        }
}

TEST_CASE("count_wlt matches brute force; conservation and label-swap antisymmetry") {
    std::mt19937_64 g(11);
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t k = 1 + rep % 4;
        const auto h = hierarchy(k);
        const auto t = random_cohort(g, Arm::Treatment, 1 + g() % 30, k);
        const auto c = random_cohort(g, Arm::Control, 1 + g() % 30, k);
        const auto w = count_wlt(t, c, h);
        REQUIRE(w == brute_force(t, c));
        REQUIRE(w.n_win + w.n_loss + w.n_tie == w.pairs());
        const auto s = count_wlt(c, t, h);
        REQUIRE(s.n_win == w.n_loss);
        REQUIRE(s.n_loss == w.n_win);
        REQUIRE(s.n_tie == w.n_tie);

        WltTally tally(k);
        for (const auto& p : t) tally.add(Arm::Treatment, efficacy_code(p.x_e));
        for (const auto& p : c) tally.add(Arm::Control, efficacy_code(p.x_e));
        REQUIRE(tally.counts() == w);
    }
    const auto h = hierarchy(1);
    CHECK_THROWS_AS(count_wlt({}, std::vector{patient(Arm::Control, {1})}, h), ContractError);
}

TEST_CASE("win-ratio estimate and Wald statistic") {
    // 20 vs 20: 200 wins, 100 losses, 100 ties
    const WltCounts c{200, 100, 100, 20, 20};
    const auto e = wr_estimate(c, 0.5, 40);
    const double info = 3 * 0.25 * 0.75 * 40 / (4 * 1.25);
    CHECK(e.p_hat_t == doctest::Approx(0.25));
    CHECK(e.wr == doctest::Approx(2.0));
    CHECK(e.info == doctest::Approx(info));
    CHECK(e.z == doctest::Approx(std::log(2.0) * std::sqrt(info)));

    // no losses: Haldane correction on both counts
    const auto h = wr_estimate({30, 0, 70, 10, 10}, 0.5, 20);
    CHECK(h.theta_hat == doctest::Approx(std::log(30.5 / 0.5)));
    const auto ties = wr_estimate({0, 0, 100, 10, 10}, 0.5, 20);
    CHECK(ties.z == 0.0);
    CHECK(ties.info > 0.0);
    CHECK_THROWS_AS(wr_estimate({1, 1, 1, 2, 2}, 0.5, 4), ContractError);
    CHECK_THROWS_AS(wr_estimate(c, 0.5, 41), ContractError);
    CHECK_THROWS_AS(wr_estimate(c, 1.0, 40), DomainError);
    CHECK(treated_at(0.5, 80) == 40);
    CHECK(treated_at(0.6, 120) == 72);
}

TEST_CASE("theoretical win/loss/tie probabilities") {
    const auto h = EndpointHierarchy::or_efs3();
    ScenarioTruth null_s{{0.4, 0.3}, {0.4, 0.3}};
    ScenarioTruth alt_s{{0.4, 0.3}, {0.4, 0.66}};
    const auto n = theoretical_wlt(null_s, h);
    const auto a = theoretical_wlt(alt_s, h);
    // frozen from an independent bivariate-normal evaluation
    CHECK(n.theta == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(n.p_t == doctest::Approx(0.311840).epsilon(2e-6));
    CHECK(a.p_w == doctest::Approx(0.477432).epsilon(2e-6));
    CHECK(a.p_l == doctest::Approx(0.290390).epsilon(2e-6));
    CHECK(a.p_t == doctest::Approx(0.232178).epsilon(2e-6));
    CHECK(a.theta == doctest::Approx(0.497195).epsilon(1e-5));

    // cells by enumeration with the quadrature oracle
    const double k1 = 0.2533471031357997, k2 = -0.41246312944140473;  // quantiles of 0.6 and 0.34
    const double p11 = oracle::bvn_upper(k1, k2, 0.25);
    const auto cells = efficacy_cell_probabilities(0.4, 0.66, 0.25);
    CHECK(cells[3] == doctest::Approx(p11).epsilon(1e-7));
    CHECK(cells[2] == doctest::Approx(0.4 - p11).epsilon(1e-7));
    CHECK(cells[0] + cells[1] + cells[2] + cells[3] == doctest::Approx(1.0));
}

TEST_CASE("theoretical probabilities agree with latent-normal Monte Carlo") {
    const ScenarioTruth s{{0.5, 0.4}, {0.55, 0.68}};
    const auto t = theoretical_wlt(s, EndpointHierarchy::or_efs3());
    std::mt19937_64 g(5);
    std::normal_distribution<double> n01;
    const double k[2][2] = {{0.0, 0.2533471031357997}, {-0.12566134685507402, -0.46769879911450823}};
    // control thresholds: 1-0.5, 1-0.4 ; treatment: 1-0.55, 1-0.68
    const int n = 300000;
    int wins = 0, losses = 0;
    for (int i = 0; i < n; ++i) {
        int x[2][2];
        for (int arm = 0; arm < 2; ++arm) {
            const double w1 = n01(g), w2 = 0.25 * w1 + std::sqrt(1 - 0.0625) * n01(g);
            x[arm][0] = w1 >= k[arm][0];
            x[arm][1] = w2 >= k[arm][1];
        }
        const int code1 = 2 * x[1][0] + x[1][1], code0 = 2 * x[0][0] + x[0][1];
        wins += code1 > code0;
        losses += code1 < code0;
    }
    const double pw = static_cast<double>(wins) / n, pl = static_cast<double>(losses) / n;
    CHECK(std::fabs(pw - t.p_w) < 4 * std::sqrt(pw * (1 - pw) / n));
    CHECK(std::fabs(pl - t.p_l) < 4 * std::sqrt(pl * (1 - pl) / n));
}
