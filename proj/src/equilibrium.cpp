#include "cfgame/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cfgame {

std::string to_string(EquilibriumRegime r) {
    switch (r) {
        case EquilibriumRegime::MutualInsurance: return "mutual_insurance";
        case EquilibriumRegime::RiskAversion: return "risk_aversion";
        case EquilibriumRegime::PureSignalFollowing: return "pure_signal_following";
        case EquilibriumRegime::TrivialOnly: return "trivial_only";
    }
    return "?";
}

void to_json(nlohmann::json& j, const EquilibriumResult& r) {
    j = nlohmann::json{{"schema_version", 1},
                       {"regime", to_string(r.regime)},
                       {"sigma_h", r.strategy.sigma_h},
                       {"sigma_l", r.strategy.sigma_l},
                       {"residual", r.residual},
                       {"iterations", r.iterations}};
    if (!r.note.empty()) j["note"] = r.note;
}

ContributionKernel contribution_kernel(double p, const BehaviorStrategy& s) {
    return {p * s.sigma_h + (1.0 - p) * s.sigma_l, (1.0 - p) * s.sigma_h + p * s.sigma_l};
}

namespace {

double log_pmf(int n, int k, double log_p, double log_q) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) + k * log_p +
           (n - k) * log_q;
}

// log-sum-exp of pmf(k) for k in [from, to].
double tail_sum(int n, int from, int to, double prob) {
    double log_p = std::log(prob);
    double log_q = std::log1p(-prob);
    double peak = -std::numeric_limits<double>::infinity();
    for (int k = from; k <= to; ++k) peak = std::max(peak, log_pmf(n, k, log_p, log_q));
    double acc = 0.0;
    for (int k = from; k <= to; ++k) acc += std::exp(log_pmf(n, k, log_p, log_q) - peak);
    return std::exp(peak) * acc;
}

}  // namespace

double binomial_tail(int n, int threshold, double prob) {
    if (n < 0) throw DomainError("binomial n must be >= 0");
    if (threshold < 0 || threshold > n)
        throw DomainError("threshold = " + std::to_string(threshold) + " violates 0 <= T <= n = " +
                          std::to_string(n));
    require_unit(prob, "prob");
    if (threshold == 0) return 1.0;
    if (prob == 0.0) return 0.0;
    if (prob == 1.0) return 1.0;
    if (threshold > n * prob) return std::min(1.0, tail_sum(n, threshold, n, prob));
    return std::max(0.0, 1.0 - tail_sum(n, 0, threshold - 1, prob));
}

double contribute_utility(const GameParams& params, const BehaviorStrategy& strategy, Signal s) {
    const double post = posterior(params.mu(), params.p(), s);
    const auto kernel = contribution_kernel(params.p(), strategy);
    // The agent's own contribution counts toward the threshold.
    const int others = params.n() - 1;
    const int needed = params.threshold() - 1;
    const double tail_g = binomial_tail(others, needed, kernel.c_g);
    const double tail_b = binomial_tail(others, needed, kernel.c_b);
    return post * tail_g * (1.0 - params.tau()) - (1.0 - post) * tail_b * params.tau();
}

namespace {

struct Root {
    double x;
    double residual;
    int iterations;
};

template <class F>
Root bisect(F&& f, Bracket b, const SolverOptions& opts) {
    double lo = b.lo, hi = b.hi;
    double f_lo = f(lo);
    int it = 0;
    while (true) {
        double mid = 0.5 * (lo + hi);
        double f_mid = f(mid);
        if (hi - lo < opts.interval_tol && std::abs(f_mid) <= opts.residual_tol)
            return {mid, std::abs(f_mid), it};
        if (it >= opts.max_bisections || mid == lo || mid == hi) {
            if (std::abs(f_mid) <= opts.residual_tol) return {mid, std::abs(f_mid), it};
            throw SolverError("bisection did not converge", lo, hi);
        }
        ++it;
        if ((f_lo > 0.0) == (f_mid > 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
}

}  // namespace

EquilibriumResult solve_equilibrium(const GameParams& params, const SolverOptions& opts) {
    if (params.mechanism() != Mechanism::Crowdfunding)
        throw DomainError("solve_equilibrium requires the crowdfunding mechanism");

    const auto price = classify_price(params);

    if (price.regime == Regime::Low) {
        return {EquilibriumRegime::MutualInsurance, BehaviorStrategy(1.0, 1.0), 0.0, 0,
                "low price: sigma_l = 1 boundary (everyone contributes)"};
    }

    if (price.regime == Regime::Moderate) {
        auto u_low = [&](double lambda) {
            return contribute_utility(params, BehaviorStrategy(1.0, lambda), Signal::L);
        };
        if (u_low(0.0) <= 0.0)
            return {EquilibriumRegime::PureSignalFollowing, BehaviorStrategy(1.0, 0.0), 0.0, 0, ""};
        auto brackets = scan_sign_changes(u_low, 0.0, 1.0, opts.scan_points);
        if (brackets.empty())
            throw SolverError("no sign change of the low-signal indifference function", 0.0, 1.0);
        auto root = bisect(u_low, brackets.front(), opts);
        EquilibriumResult r{EquilibriumRegime::MutualInsurance, BehaviorStrategy(1.0, root.x),
                            root.residual, root.iterations, ""};
        if (brackets.size() > 1)
            r.note = std::to_string(brackets.size()) + " sign changes found; first root returned";
        return r;
    }

    // High price: low-signal agents abstain and high-signal agents may mix.
    const std::string extrapolation = "high-price branch mirrors the moderate-price construction";
    auto u_high = [&](double sigma) {
        return contribute_utility(params, BehaviorStrategy(sigma, 0.0), Signal::H);
    };
    if (u_high(1.0) >= 0.0)
        return {EquilibriumRegime::PureSignalFollowing, BehaviorStrategy(1.0, 0.0), 0.0, 0,
                extrapolation};
    auto brackets = scan_sign_changes(u_high, 0.0, 1.0, opts.scan_points);
    if (brackets.empty())
        return {EquilibriumRegime::TrivialOnly, BehaviorStrategy(0.0, 0.0), 0.0, 0,
                "no non-trivial symmetric equilibrium at this n"};
    auto root = bisect(u_high, brackets.back(), opts);
    return {EquilibriumRegime::RiskAversion, BehaviorStrategy(root.x, 0.0), root.residual,
            root.iterations, extrapolation};
}

double asymptotic_mixing(double p, double q) {
    require_accuracy(p);
    if (!(q > 0.0 && q <= 1.0)) throw DomainError("q violates 0 < q <= 1");
    // 1 - p is inexact in binary; treat q within rounding of it as the kink.
    if (q <= 1.0 - p + 1e-12) return 0.0;
    return (q - (1.0 - p)) / p;
}

}  // namespace cfgame
