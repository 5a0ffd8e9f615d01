#include <random>
#include <sstream>

#include "cfgame/aggregation.hpp"
#include "cfgame/equilibrium.hpp"
#include "doctest.h"

using namespace cfgame;

TEST_CASE("correctness and participation indices") {
    CHECK(correctness_index(0.5, 0.55, 0.5) == doctest::Approx(0.5909090909).epsilon(1e-9));
    CHECK(correctness_index(0.5, 0.85, 0.5) == doctest::Approx(0.9117647059).epsilon(1e-9));
    CHECK(participation_index(0.5, 0.55, 0.5) == doctest::Approx(0.9090909091).epsilon(1e-9));
    CHECK(participation_index(0.5, 0.85, 0.5) == doctest::Approx(0.5882352941).epsilon(1e-9));

    CHECK_THROWS_AS(correctness_index(0.5, 0.85, 0.9), DomainError);
    CHECK_THROWS_AS(participation_index(0.5, 0.85, 0.1), DomainError);
    // a vanishing prior leaves no moderate price at tau = 0.5
    CHECK_THROWS_AS(correctness_index(1e-9, 0.55, 0.5), DomainError);
}

TEST_CASE("participation = mu + 1 - correctness") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        const double p = 0.51 + 0.48 * u(rng);
        const double mu = 0.02 + 0.96 * u(rng);
        const double lo = posterior(mu, p, Signal::L), hi = posterior(mu, p, Signal::H);
        const double tau = lo + (hi - lo) * (0.01 + 0.98 * u(rng));
        const double c = correctness_index(mu, p, tau);
        const double r = participation_index(mu, p, tau);
        CHECK(std::abs(r - (mu + 1.0 - c)) <= 1e-14);
        CHECK(std::abs((r - mu) - ((1 - p) / p) * ((1 - tau) / tau) * mu) <= 1e-14);
    }
}

TEST_CASE("mixture_rho") {
    CHECK(mixture_rho(0.034, 0.871, 71.0 / 81.0) == doctest::Approx(0.0643).epsilon(0.0005 / 0.0643));
    CHECK(mixture_rho(0.0, 1.0, 1.0) == 0.0);
    CHECK(mixture_rho(0.5, 0.5, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
        CHECK_THROWS_AS(mixture_rho(0.5, 0.5, 0.1), InconsistentMixture);  // rho > 1
    CHECK_THROWS_AS(mixture_rho(0.5, 0.5, 0.9), InconsistentMixture);  // rho < 0
    CHECK_THROWS_AS(mixture_rho(1.0, 0.0, 0.5), InconsistentMixture);  // zero denominator
    CHECK_THROWS_AS(mixture_rho(-0.1, 0.5, 0.5), DomainError);
}

TEST_CASE("conditional_optin") {
    auto c = conditional_optin(0.0643, 0.034, 0.871, 0.55);
    CHECK(std::abs(c.phi_h - 0.882) <= 0.001);
    CHECK(std::abs(c.phi_l - 0.870) <= 0.001);

    for (double p : {0.55, 0.85}) {
        auto sf = conditional_optin(0.0, 0.7, 0.0, p);
        CHECK(sf.phi_h == doctest::Approx(p));
        CHECK(sf.phi_l == doctest::Approx(1 - p));
        auto out = conditional_optin(1.0, 0.0, 0.6, p);
        CHECK(out.phi_h == 0.0);
        CHECK(out.phi_l == 0.0);
    }
    CHECK_THROWS_AS(conditional_optin(0.1, 0.1, 0.1, 0.5), DomainError);
}

TEST_CASE("phi_H >= phi_L over sampled parameters") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        auto c = conditional_optin(u(rng), u(rng), u(rng), 0.5001 + 0.4998 * u(rng));
        CHECK(c.phi_h >= c.phi_l - 1e-15);
        CHECK(c.phi_h <= 1.0);
        CHECK(c.phi_l >= 0.0);
    }
}

TEST_CASE("crowdfunding_correctness") {
    CHECK(std::abs(crowdfunding_correctness(0.882, 0.870, 5, 3, 0.5) - 0.502) <= 0.002);
    for (int n : {1, 5, 25})
        for (int t = 1; t <= n; t += 2) CHECK(crowdfunding_correctness(1.0, 0.0, n, t, 0.5) == 1.0);
    for (double x : {0.1, 0.5, 0.93}) {
        const double t = binomial_tail(7, 4, x);
        CHECK(crowdfunding_correctness(x, x, 7, 4, 0.3) == doctest::Approx(0.3 * t + 0.7 * (1 - t)));
    }
    CHECK_THROWS_AS(crowdfunding_correctness(0.5, 0.5, 5, 0, 0.5), DomainError);
    CHECK_THROWS_AS(crowdfunding_correctness(0.5, 0.5, 5, 6, 0.5), DomainError);
}

TEST_CASE("crowdfunding_correctness monotone in each conditional rate") {
    for (int n : {5, 25})
        for (int t : {1, (n + 1) / 2, n})
            for (int i = 0; i <= 20; ++i)
                for (int j = 0; j < 20; ++j) {
                    const double a = i / 20.0, b = j / 20.0, b2 = (j + 1) / 20.0;
                    CHECK(crowdfunding_correctness(b2, a, n, t, 0.4) >=
                          crowdfunding_correctness(b, a, n, t, 0.4) - 1e-15);
                    CHECK(crowdfunding_correctness(a, b2, n, t, 0.4) <=
                          crowdfunding_correctness(a, b, n, t, 0.4) + 1e-15);
                }
}

TEST_CASE("voting_correctness") {
    CHECK(std::abs(voting_correctness(0.55, 1.0, 5) - 0.593) <= 0.001);
    CHECK(std::abs(voting_correctness(0.85, 1.0, 5) - 0.973) <= 0.001);
    CHECK(std::abs(voting_correctness(0.55, 0.874, 5) - 0.569) <= 0.002);
    CHECK(std::abs(voting_correctness(0.85, 0.874, 5) - 0.907) <= 0.002);
    CHECK_THROWS_AS(voting_correctness(0.55, 1.0, 4), DomainError);
    CHECK_THROWS_AS(voting_correctness(0.55, 1.2, 5), DomainError);

    for (int n = 1; n <= 51; n += 2) CHECK(voting_correctness(0.7, 0.5, n) == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("Condorcet: majority accuracy grows with odd n") {
    for (double p : {0.51, 0.55, 0.7, 0.85}) {
        double prev = 0.0;
        for (int n = 1; n <= 51; n += 2) {
            const double v = voting_correctness(p, 1.0, n);
            CHECK(v >= prev);
            prev = v;
        }
    }
}

TEST_CASE("report reproduces the baseline values") {
    auto r = report(AggregationInputs{});
    CHECK(r.threshold == 3);
    CHECK(std::abs(r.rho - 0.0643) <= 0.0005);
    CHECK(std::abs(r.phi_h - 0.882) <= 0.001);
    CHECK(std::abs(r.phi_l - 0.870) <= 0.001);
    CHECK(std::abs(r.theta_cf - 0.502) <= 0.002);
    CHECK(std::abs(r.theta_voting - 0.593) <= 0.001);

    auto j = report_json(r);
    for (const char* k : {"mu", "p", "tau", "n", "T", "psi", "lambda", "phi", "rho", "phi_H", "phi_L",
                          "theta_cf", "theta_voting"})
        CHECK(j.contains(k));
    CHECK(report_csv_header() == "mu,p,tau,n,T,psi,lambda,phi,rho,phi_H,phi_L,theta_cf,theta_voting");
    std::string row = report_csv_row(r);
    CHECK(std::count(row.begin(), row.end(), ',') == 12);
}
