#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfgame/model.hpp"

namespace cfgame {

/// SplitMix64 stream. Used instead of the std distributions so that draws are
/// bit-identical across standard libraries.
class SplitMix64 {
  public:
    using result_type = std::uint64_t;
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()();
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    bool bernoulli(double prob) { return uniform() < prob; }

  private:
    std::uint64_t state_;
};

/// Seed of trial `index` under `master`. Depends only on the pair, so trials
/// can run in any order or on any thread.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Mixture: every agent opts out w.p. psi on H and opts in w.p. lambda on L.
/// TypeMixture: each agent is independently an "expensive" type w.p. rho
/// (opts in w.p. psi on H, never on L) or a "moderate" type (always on H,
/// w.p. lambda on L); its conditional opt-in rates are those of
/// conditional_optin.
enum class BehaviorKind { Equilibrium, SignalFollowing, Mixture, TypeMixture };

struct Behavior {
    BehaviorKind kind = BehaviorKind::Equilibrium;
    double psi = 0.0;
    double lambda = 0.0;
    double rho = 0.0;  // TypeMixture only

    static Behavior equilibrium() { return {}; }
    static Behavior signal_following() { return {BehaviorKind::SignalFollowing, 0.0, 0.0, 0.0}; }
    static Behavior mixture(double psi, double lambda);
    static Behavior type_mixture(double rho, double psi, double lambda);
};

std::string to_string(const Behavior& b);

struct Scenario {
    GameParams params;
    Behavior behavior;
    std::int64_t replications = 100000;
    std::uint64_t seed = 0;
    std::string label;
};

void validate(const Scenario& s);

/// The per-signal action probabilities a scenario's agents play: opt in
/// (crowdfunding) or vote for G (voting).
BehaviorStrategy resolve_strategy(const Scenario& s);

struct GroupTrial {
    WorldState state;
    std::vector<Signal> signals;
    std::vector<bool> actions;  // contributed / voted G
    bool threshold_met;         // voting: the group decided G
    bool group_correct;
    std::vector<std::int64_t> payoffs;
};

GroupTrial run_trial(const Scenario& s, const BehaviorStrategy& strategy, std::uint64_t trial_index);
GroupTrial run_trial(const Scenario& s, std::uint64_t trial_index);

/// Monte Carlo estimates. Conditional rates are NaN when their conditioning
/// event never occurred.
struct SimulationAggregate {
    std::int64_t replications = 0;
    double correctness_rate = 0.0;
    double correctness_se = 0.0;
    double participation_rate = 0.0;
    double participation_se = 0.0;
    double p_met_given_G = 0.0;
    double p_notmet_given_B = 0.0;
    double p_G_given_met = 0.0;
    double mean_payoff = 0.0;
    double state_g_rate = 0.0;

    bool operator==(const SimulationAggregate&) const = default;
};

/// Raw integer tallies; merging is exact, so any split of the trials across
/// threads yields the same totals.
struct TrialCounts {
    std::int64_t trials = 0;
    std::int64_t correct = 0;
    std::int64_t contributions = 0;
    std::int64_t agent_decisions = 0;
    std::int64_t state_g = 0;
    std::int64_t met = 0;
    std::int64_t met_and_g = 0;
    std::int64_t notmet_and_b = 0;
    std::int64_t payoff_total = 0;

    void add(const GroupTrial& t);
    TrialCounts& operator+=(const TrialCounts& o);
    SimulationAggregate finish() const;
};

/// Receives agent-level rows. One row per agent per trial.
class DecisionLogWriter {
  public:
    explicit DecisionLogWriter(std::ostream& out);
    void write(const Scenario& s, std::uint64_t trial_id, const GroupTrial& t);
    std::int64_t rows() const { return rows_; }

  private:
    std::ostream& out_;
    std::int64_t rows_ = 0;
};

/// `threads` = 0 uses the hardware concurrency.
SimulationAggregate run_scenario(const Scenario& s, unsigned threads = 0);

/// One aggregate per scenario. With a log, trials of each scenario are run in
/// index order so that rows come out deterministic too.
std::vector<SimulationAggregate> run_grid(const std::vector<Scenario>& design,
                                          DecisionLogWriter* log = nullptr, unsigned threads = 0);

/// The 2 x 2 x 3 factorial design: accuracy {0.55, 0.85} x group size {5, 25}
/// x {voting, crowdfunding 50%, crowdfunding 80%}, at mu = tau = 0.5.
std::vector<Scenario> paper_grid(std::int64_t replications, std::uint64_t seed,
                                 Behavior behavior = Behavior::equilibrium());

std::vector<Scenario> scenarios_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);

std::string aggregate_csv_header();
std::string aggregate_csv_row(const Scenario& s, const SimulationAggregate& a);
nlohmann::json aggregate_json(const Scenario& s, const SimulationAggregate& a);
nlohmann::json trial_json(const GroupTrial& t);

}  // namespace cfgame
