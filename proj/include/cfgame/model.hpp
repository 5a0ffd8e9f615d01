#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace cfgame {

// Thrown for any parameter outside its admissible range.
class DomainError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

enum class Mechanism { Voting, Crowdfunding };
enum class WorldState { G, B };  // G: v = 1, B: v = 0
enum class Signal { H, L };

std::string to_string(Mechanism m);
std::string to_string(WorldState s);
std::string to_string(Signal s);
Mechanism mechanism_from_string(const std::string& s);

/// One game instance. Validated on construction; immutable afterwards.
///
/// Voting always uses q = 0.5 regardless of the value passed in.
class GameParams {
  public:
    GameParams(int n, double p, double mu, double tau, Mechanism mechanism, double q = 0.5);

    int n() const { return n_; }
    double p() const { return p_; }
    double mu() const { return mu_; }
    double tau() const { return tau_; }
    Mechanism mechanism() const { return mechanism_; }
    double q() const { return q_; }

    /// Number of contributors needed: ceil(q * n), always in [1, n].
    int threshold() const { return threshold_; }

    bool operator==(const GameParams&) const = default;

  private:
    int n_;
    double p_;
    double mu_;
    double tau_;
    Mechanism mechanism_;
    double q_;
    int threshold_;
};

void to_json(nlohmann::json& j, const GameParams& g);
GameParams game_params_from_json(const nlohmann::json& j);

/// Contribution (or vote-for-G) probability per signal.
struct BehaviorStrategy {
    double sigma_h = 0.0;
    double sigma_l = 0.0;

    BehaviorStrategy() = default;
    BehaviorStrategy(double h, double l);

    bool is_trivial() const { return sigma_h == 0.0 && sigma_l == 0.0; }
    double for_signal(Signal s) const { return s == Signal::H ? sigma_h : sigma_l; }
};

enum class Regime { Low, Moderate, High };
std::string to_string(Regime r);

struct PriceRegime {
    Regime regime;
    double posterior_l;
    double posterior_h;
};

/// Currency in whole clickcoins.
struct PayoffRule {
    std::int64_t stake = 84;
    std::int64_t reward = 168;
    std::int64_t voting_gain = 84;
};

// Checks shared by every module. Messages name the violated bound.
void require_accuracy(double p);
void require_open_unit(double x, const char* name);
void require_unit(double x, const char* name);

/// P(v = 1 | s) by Bayes' rule.
double posterior(double mu, double p, Signal s);

PriceRegime classify_price(double mu, double p, double tau);
PriceRegime classify_price(const GameParams& params);

/// Net payoff of one agent in clickcoins.
///
/// For crowdfunding `correct` means the assigned color is the urn's majority
/// (state G); for voting it means the group decision matched the state.
/// Voting ignores `invested` and `threshold_met`.
std::int64_t payoff(Mechanism mechanism, bool invested, bool threshold_met, bool correct,
                    const PayoffRule& rule = {});

}  // namespace cfgame
