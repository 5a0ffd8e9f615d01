#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfgame/model.hpp"

namespace cfgame {

/// Root finder ran out of bisection steps. Carries the last bracket.
class SolverError : public std::runtime_error {
  public:
    SolverError(const std::string& what, double lo, double hi)
        : std::runtime_error(what), lo_(lo), hi_(hi) {}
    double lo() const { return lo_; }
    double hi() const { return hi_; }

  private:
    double lo_;
    double hi_;
};

enum class EquilibriumRegime { MutualInsurance, RiskAversion, PureSignalFollowing, TrivialOnly };
std::string to_string(EquilibriumRegime r);

struct EquilibriumResult {
    EquilibriumRegime regime;
    BehaviorStrategy strategy;
    double residual = 0.0;
    int iterations = 0;
    std::string note;  // boundary / extrapolation remarks, empty otherwise
};

void to_json(nlohmann::json& j, const EquilibriumResult& r);

/// Per-agent contribution probability in each state.
struct ContributionKernel {
    double c_g;
    double c_b;
};

ContributionKernel contribution_kernel(double p, const BehaviorStrategy& s);

struct SolverOptions {
    int scan_points = 1024;
    int max_bisections = 200;
    double interval_tol = 1e-10;
    double residual_tol = 1e-9;
};

/// P(X >= threshold) for X ~ Binomial(n, prob).
///
/// Sums whichever tail is farther from the mean in log space, so neither
/// small tails nor prob near 0 or 1 lose precision to cancellation.
double binomial_tail(int n, int threshold, double prob);

/// Expected utility of contributing with signal `s` when everyone else plays
/// `strategy`, in price-normalized units. Not contributing is worth 0.
double contribute_utility(const GameParams& params, const BehaviorStrategy& strategy, Signal s);

/// Sign-change brackets of f over `points + 1` equally spaced nodes of [lo, hi].
struct Bracket {
    double lo;
    double hi;
};
template <class F>
std::vector<Bracket> scan_sign_changes(F&& f, double lo, double hi, int points) {
    std::vector<Bracket> out;
    double prev_x = lo;
    double prev_f = f(lo);
    for (int i = 1; i <= points; ++i) {
        double x = lo + (hi - lo) * static_cast<double>(i) / points;
        double fx = f(x);
        if ((prev_f > 0.0 && fx <= 0.0) || (prev_f < 0.0 && fx >= 0.0)) out.push_back({prev_x, x});
        prev_x = x;
        prev_f = fx;
    }
    return out;
}

/// Symmetric non-trivial Bayes-Nash equilibrium of a crowdfunding game.
EquilibriumResult solve_equilibrium(const GameParams& params, const SolverOptions& opts = {});

/// Large-population mixing probability of low-signal agents at moderate prices.
double asymptotic_mixing(double p, double q);

}  // namespace cfgame
