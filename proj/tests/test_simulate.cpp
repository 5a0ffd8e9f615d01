#include <cmath>
#include <cstring>
#include <sstream>

#include "cfgame/aggregation.hpp"
#include "cfgame/equilibrium.hpp"
#include "cfgame/simulate.hpp"
#include "doctest.h"

using namespace cfgame;

namespace {

bool bit_equal(const SimulationAggregate& a, const SimulationAggregate& b) {
    const double xa[] = {a.correctness_rate, a.correctness_se, a.participation_rate, a.participation_se,
                         a.p_met_given_G, a.p_notmet_given_B, a.p_G_given_met, a.mean_payoff,
                         a.state_g_rate};
    const double xb[] = {b.correctness_rate, b.correctness_se, b.participation_rate, b.participation_se,
                         b.p_met_given_G, b.p_notmet_given_B, b.p_G_given_met, b.mean_payoff,
                         b.state_g_rate};
    return a.replications == b.replications && std::memcmp(xa, xb, sizeof xa) == 0;
}

Scenario make(int n, double p, Mechanism m, double q, Behavior b, std::int64_t reps, std::uint64_t seed,
              double mu = 0.5) {
    return {GameParams(n, p, mu, 0.5, m, q), b, reps, seed, "t"};
}

// Analytic correctness of a scenario whose agents play `s` (odd-n voting or crowdfunding).
double analytic_correctness(const Scenario& sc) {
    const auto s = resolve_strategy(sc);
    const auto k = contribution_kernel(sc.params.p(), s);
    const int t = sc.params.mechanism() == Mechanism::Voting ? (sc.params.n() + 1) / 2 : sc.params.threshold();
    return crowdfunding_correctness(k.c_g, k.c_b, sc.params.n(), t, sc.params.mu());
}

}  // namespace

TEST_CASE("SplitMix64 uniform stays in [0, 1) and is reproducible") {
    SplitMix64 a(123), b(123);
    double sum = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = a.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(u == b.uniform());
        sum += u;
    }
    CHECK(sum / 100000 == doctest::Approx(0.5).epsilon(0.01));
    CHECK(derive_seed(1, 2) != derive_seed(2, 1));
    CHECK(derive_seed(1, 2) == derive_seed(1, 2));
}

TEST_CASE("trial invariants") {
    for (auto mech : {Mechanism::Voting, Mechanism::Crowdfunding})
        for (int n : {1, 4, 5, 25}) {
            auto sc = make(n, 0.7, mech, 0.8, Behavior::mixture(0.2, 0.4), 1, 9);
            const auto strat = resolve_strategy(sc);
            for (std::uint64_t i = 0; i < 500; ++i) {
                const auto t = run_trial(sc, strat, i);
                REQUIRE(t.signals.size() == static_cast<std::size_t>(n));
                REQUIRE(t.actions.size() == static_cast<std::size_t>(n));
                REQUIRE(t.payoffs.size() == static_cast<std::size_t>(n));
                int yes = 0;
                std::int64_t total = 0;
                for (bool a : t.actions) yes += a;
                for (auto p : t.payoffs) total += p;
                const bool g = t.state == WorldState::G;
                if (mech == Mechanism::Crowdfunding) {
                    CHECK(t.threshold_met == (yes >= sc.params.threshold()));
                    CHECK(t.group_correct == (t.threshold_met == g));
                    if (!t.threshold_met) CHECK(total == 0);
                    for (int a = 0; a < n; ++a)
                        if (!t.actions[a]) CHECK(t.payoffs[a] == 0);
                } else {
                    if (2 * yes != n) CHECK(t.threshold_met == (2 * yes > n));
                    CHECK(t.group_correct == (t.threshold_met == g));
                    CHECK(std::abs(total) == 84 * n);
                }
            }
        }
}

TEST_CASE("near-perfect signals make sincere majority voting always correct") {
    auto sc = make(5, 1.0 - 1e-12, Mechanism::Voting, 0.5, Behavior::signal_following(), 20000, 4);
    CHECK(run_scenario(sc).correctness_rate == 1.0);
}

TEST_CASE("nobody contributes: correct exactly when the state is B") {
    auto sc = make(5, 0.55, Mechanism::Crowdfunding, 0.5, Behavior::mixture(1.0, 0.0), 50000, 8, 0.3);
    const auto a = run_scenario(sc);
    CHECK(a.participation_rate == 0.0);
    CHECK(a.p_met_given_G == 0.0);
    CHECK(a.p_notmet_given_B == 1.0);
    CHECK(std::isnan(a.p_G_given_met));
    CHECK(a.correctness_rate == doctest::Approx(1.0 - a.state_g_rate).epsilon(1e-15));
    CHECK(std::abs(a.correctness_rate - 0.7) <= 3 * a.correctness_se);
    CHECK(a.mean_payoff == 0.0);
}

TEST_CASE("determinism and thread-count invariance") {
    auto sc = make(25, 0.55, Mechanism::Crowdfunding, 0.8, Behavior::mixture(0.1, 0.6), 40000, 2024);
    const auto ref = run_scenario(sc, 1);
    CHECK(bit_equal(ref, run_scenario(sc, 1)));
    for (unsigned threads : {2u, 3u, 8u, 0u}) CHECK(bit_equal(ref, run_scenario(sc, threads)));
    sc.seed = 2025;
    CHECK_FALSE(bit_equal(ref, run_scenario(sc, 1)));
}

TEST_CASE("estimates match analytic counterparts") {
    SUBCASE("per-agent mixture") {
        auto sc = make(5, 0.55, Mechanism::Crowdfunding, 0.5, Behavior::mixture(0.034, 0.871), 200000, 1);
        const auto a = run_scenario(sc);
        CHECK(std::abs(a.correctness_rate - analytic_correctness(sc)) <= 3 * a.correctness_se);
        CHECK(std::abs(a.participation_rate - (0.5 * (1 - 0.034) + 0.5 * 0.871)) <= 3 * a.participation_se);
    }
    SUBCASE("two-type mixture reproduces the conditional opt-in rates") {
        const double rho = mixture_rho(0.034, 0.871, 71.0 / 81.0);
        auto sc = make(5, 0.55, Mechanism::Crowdfunding, 0.5, Behavior::type_mixture(rho, 0.034, 0.871),
                       200000, 2);
        const auto k = contribution_kernel(0.55, resolve_strategy(sc));
        const auto c = conditional_optin(rho, 0.034, 0.871, 0.55);
        CHECK(k.c_g == doctest::Approx(c.phi_h).epsilon(1e-14));
        CHECK(k.c_b == doctest::Approx(c.phi_l).epsilon(1e-14));
        const auto a = run_scenario(sc);
        CHECK(std::abs(a.correctness_rate - crowdfunding_correctness(c.phi_h, c.phi_l, 5, 3, 0.5)) <=
              3 * a.correctness_se);
    }
    SUBCASE("sincere voting") {
        auto sc = make(5, 0.85, Mechanism::Voting, 0.5, Behavior::signal_following(), 200000, 3);
        const auto a = run_scenario(sc);
        CHECK(std::abs(a.correctness_rate - voting_correctness(0.85, 1.0, 5)) <= 3 * a.correctness_se);
    }
    SUBCASE("equilibrium play") {
        auto sc = make(5, 0.55, Mechanism::Crowdfunding, 0.5, Behavior::equilibrium(), 200000, 4);
        const auto a = run_scenario(sc);
        CHECK(std::abs(a.correctness_rate - analytic_correctness(sc)) <= 3 * a.correctness_se);
    }
    SUBCASE("even-n voting breaks ties with a fair coin") {
        auto sc = make(4, 0.7, Mechanism::Voting, 0.5, Behavior::signal_following(), 200000, 5);
        const double want = binomial_tail(4, 3, 0.7) + 0.5 * (binomial_tail(4, 2, 0.7) - binomial_tail(4, 3, 0.7));
        const auto a = run_scenario(sc);
        CHECK(std::abs(a.correctness_rate - want) <= 3 * a.correctness_se);
    }
}

TEST_CASE("Monte Carlo consistency across seeds") {
    int within = 0;
    auto sc = make(5, 0.55, Mechanism::Crowdfunding, 0.5, Behavior::mixture(0.1, 0.6), 10000, 0);
    const double want = analytic_correctness(sc);
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        sc.seed = seed;
        const auto a = run_scenario(sc);
        within += std::abs(a.correctness_rate - want) <= 3.5 * a.correctness_se;
    }
    CHECK(within >= 99);
}

TEST_CASE("conditional rates recompose into correctness") {
    for (auto mech : {Mechanism::Voting, Mechanism::Crowdfunding}) {
        auto sc = make(25, 0.85, mech, 0.8, Behavior::equilibrium(), 30000, 6, 0.4);
        const auto a = run_scenario(sc);
        const double recomposed = a.state_g_rate * a.p_met_given_G + (1 - a.state_g_rate) * a.p_notmet_given_B;
        CHECK(a.correctness_rate == doctest::Approx(recomposed).epsilon(1e-12));
        CHECK(std::abs(a.state_g_rate - 0.4) <= 4 * std::sqrt(0.24 / 30000));
        CHECK(a.correctness_se == doctest::Approx(std::sqrt(a.correctness_rate * (1 - a.correctness_rate) / 30000)));
    }
}

TEST_CASE("factorial design grid") {
    const auto grid = paper_grid(1000, 42);
    REQUIRE(grid.size() == 12);
    int voting = 0, cf80 = 0;
    for (const auto& s : grid) {
        voting += s.params.mechanism() == Mechanism::Voting;
        cf80 += s.params.mechanism() == Mechanism::Crowdfunding && s.params.q() == 0.8;
        CHECK(s.params.tau() == 0.5);
        CHECK(s.params.mu() == 0.5);
    }
    CHECK(voting == 4);
    CHECK(cf80 == 4);
    const auto aggs = run_grid(grid);
    CHECK(aggs.size() == 12);
}

TEST_CASE("run_grid composition and decision log") {
    auto sc = make(5, 0.55, Mechanism::Crowdfunding, 0.5, Behavior::mixture(0.1, 0.6), 3000, 77);
    const auto single = run_grid({sc});
    CHECK(bit_equal(single.front(), run_scenario(sc)));

    std::ostringstream log;
    DecisionLogWriter writer(log);
    auto vote = make(25, 0.85, Mechanism::Voting, 0.5, Behavior::signal_following(), 200, 78);
    const auto logged = run_grid({sc, vote}, &writer);
    CHECK(bit_equal(logged.front(), single.front()));
    CHECK(writer.rows() == 3000 * 5 + 200 * 25);

    std::istringstream in(log.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "# schema_version=1");
    std::getline(in, line);
    CHECK(line == "trial_id,agent_id,mechanism,n,p,q,state,signal,action,classification");
    std::getline(in, line);
    CHECK(line.rfind("0,0,crowdfunding,5,0.55,0.5,", 0) == 0);

    CHECK_THROWS_AS(run_grid({}), DomainError);
}

TEST_CASE("scenario JSON config") {
    const auto j = nlohmann::json::parse(R"([
      {"label": "a", "params": {"n": 5, "p": 0.55, "mu": 0.5, "tau": 0.5, "mechanism": "crowdfunding", "q": 0.8},
       "behavior": {"kind": "mixture", "psi": 0.1, "lambda": 0.6}, "replications": 10, "seed": 3},
      {"params": {"n": 25, "p": 0.85, "mu": 0.5, "tau": 0.5, "mechanism": "voting"},
       "behavior": "signal_following"},
      {"params": {"n": 5, "p": 0.55, "mu": 0.5, "tau": 0.5, "mechanism": "crowdfunding"},
       "behavior": {"kind": "type_mixture", "rho": 0.06, "psi": 0.034, "lambda": 0.871}}
    ])");
    const auto d = scenarios_from_json(j);
    REQUIRE(d.size() == 3);
    CHECK(d[0].params.threshold() == 4);
    CHECK(d[0].behavior.kind == BehaviorKind::Mixture);
    CHECK(d[0].replications == 10);
    CHECK(d[1].replications == 100000);
    CHECK(d[1].behavior.kind == BehaviorKind::SignalFollowing);
    CHECK(d[2].behavior.rho == 0.06);

    const auto again = scenarios_from_json(nlohmann::json::array({scenario_to_json(d[0])}));
    CHECK(again[0].params == d[0].params);
    CHECK(again[0].behavior.psi == d[0].behavior.psi);

    auto bad = j;
    bad[1]["params"]["p"] = 0.3;
    try {
        scenarios_from_json(bad);
        FAIL("expected an error");
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()).find("scenarios[1]") != std::string::npos);
    }
    bad = j;
    bad[0]["replications"] = 0;
    CHECK_THROWS_AS(scenarios_from_json(bad), DomainError);
    CHECK_THROWS_AS(scenarios_from_json(nlohmann::json::object()), DomainError);
}

TEST_CASE("aggregate CSV row follows the header") {
    auto sc = make(5, 0.55, Mechanism::Crowdfunding, 0.5, Behavior::equilibrium(), 1000, 1);
    const auto row = aggregate_csv_row(sc, run_scenario(sc));
    const auto header = aggregate_csv_header();
    CHECK(std::count(row.begin(), row.end(), ',') == std::count(header.begin(), header.end(), ','));
    const auto j = aggregate_json(sc, run_scenario(sc));
    CHECK(j["replications"] == 1000);
}
