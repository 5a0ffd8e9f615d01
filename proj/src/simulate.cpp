#include "cfgame/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include "cfgame/equilibrium.hpp"
#include "cfgame/inference.hpp"

namespace cfgame {

namespace {

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace

SplitMix64::result_type SplitMix64::operator()() {
    state_ += kGolden;
    return mix64(state_);
}

double SplitMix64::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return mix64(master ^ mix64(index * kGolden + 1));
}

Behavior Behavior::mixture(double psi, double lambda) {
    require_unit(psi, "psi");
    require_unit(lambda, "lambda");
    return {BehaviorKind::Mixture, psi, lambda, 0.0};
}

Behavior Behavior::type_mixture(double rho, double psi, double lambda) {
    require_unit(rho, "rho");
    require_unit(psi, "psi");
    require_unit(lambda, "lambda");
    return {BehaviorKind::TypeMixture, psi, lambda, rho};
}

std::string to_string(const Behavior& b) {
    switch (b.kind) {
        case BehaviorKind::Equilibrium: return "equilibrium";
        case BehaviorKind::SignalFollowing: return "signal_following";
        case BehaviorKind::Mixture: {
            std::ostringstream os;
            os << "mixture(" << b.psi << ";" << b.lambda << ")";
            return os.str();
        }
        case BehaviorKind::TypeMixture: {
            std::ostringstream os;
            os << "type_mixture(" << b.rho << ";" << b.psi << ";" << b.lambda << ")";
            return os.str();
        }
    }
    return "?";
}

void validate(const Scenario& s) {
    if (s.replications < 1) throw DomainError("replications must be >= 1");
    if (s.behavior.kind == BehaviorKind::Mixture || s.behavior.kind == BehaviorKind::TypeMixture) {
        require_unit(s.behavior.psi, "psi");
        require_unit(s.behavior.lambda, "lambda");
        require_unit(s.behavior.rho, "rho");
    }
}

BehaviorStrategy resolve_strategy(const Scenario& s) {
    validate(s);
    switch (s.behavior.kind) {
        case BehaviorKind::SignalFollowing: return {1.0, 0.0};
        case BehaviorKind::Mixture: return {1.0 - s.behavior.psi, s.behavior.lambda};
        case BehaviorKind::TypeMixture: {
            const auto& b = s.behavior;
            return {(1.0 - b.rho) + b.rho * b.psi, (1.0 - b.rho) * b.lambda};
        }
        case BehaviorKind::Equilibrium:
            if (s.params.mechanism() == Mechanism::Voting) return {1.0, 0.0};
            return solve_equilibrium(s.params).strategy;
    }
    return {};
}

GroupTrial run_trial(const Scenario& s, const BehaviorStrategy& strategy, std::uint64_t trial_index) {
    const auto& g = s.params;
    const int n = g.n();
    SplitMix64 rng(derive_seed(s.seed, trial_index));

    GroupTrial t;
    t.state = rng.bernoulli(g.mu()) ? WorldState::G : WorldState::B;
    t.signals.reserve(n);
    t.actions.reserve(n);
    int yes = 0;
    for (int i = 0; i < n; ++i) {
        const bool accurate = rng.bernoulli(g.p());
        const bool high = (t.state == WorldState::G) == accurate;
        const Signal sig = high ? Signal::H : Signal::L;
        const bool act = rng.bernoulli(strategy.for_signal(sig));
        t.signals.push_back(sig);
        t.actions.push_back(act);
        yes += act ? 1 : 0;
    }

    if (g.mechanism() == Mechanism::Voting) {
        bool decide_g;
        if (2 * yes == n)
            decide_g = rng.bernoulli(0.5);
        else
            decide_g = 2 * yes > n;
        t.threshold_met = decide_g;
        t.group_correct = decide_g == (t.state == WorldState::G);
    } else {
        t.threshold_met = yes >= g.threshold();
        t.group_correct = t.threshold_met == (t.state == WorldState::G);
    }

    const bool payoff_correct =
        g.mechanism() == Mechanism::Voting ? t.group_correct : t.state == WorldState::G;
    t.payoffs.reserve(n);
    for (int i = 0; i < n; ++i)
        t.payoffs.push_back(payoff(g.mechanism(), t.actions[i], t.threshold_met, payoff_correct));
    return t;
}

GroupTrial run_trial(const Scenario& s, std::uint64_t trial_index) {
    return run_trial(s, resolve_strategy(s), trial_index);
}

void TrialCounts::add(const GroupTrial& t) {
    ++trials;
    correct += t.group_correct ? 1 : 0;
    for (bool a : t.actions) contributions += a ? 1 : 0;
    agent_decisions += static_cast<std::int64_t>(t.actions.size());
    const bool g = t.state == WorldState::G;
    state_g += g ? 1 : 0;
    met += t.threshold_met ? 1 : 0;
    met_and_g += (t.threshold_met && g) ? 1 : 0;
    notmet_and_b += (!t.threshold_met && !g) ? 1 : 0;
    for (auto p : t.payoffs) payoff_total += p;
}

TrialCounts& TrialCounts::operator+=(const TrialCounts& o) {
    trials += o.trials;
    correct += o.correct;
    contributions += o.contributions;
    agent_decisions += o.agent_decisions;
    state_g += o.state_g;
    met += o.met;
    met_and_g += o.met_and_g;
    notmet_and_b += o.notmet_and_b;
    payoff_total += o.payoff_total;
    return *this;
}

SimulationAggregate TrialCounts::finish() const {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    auto ratio = [&](std::int64_t a, std::int64_t b) {
        return b > 0 ? static_cast<double>(a) / static_cast<double>(b) : nan;
    };
    auto se = [&](double x) { return std::sqrt(x * (1.0 - x) / static_cast<double>(trials)); };
    SimulationAggregate a;
    a.replications = trials;
    a.correctness_rate = ratio(correct, trials);
    a.correctness_se = se(a.correctness_rate);
    a.participation_rate = ratio(contributions, agent_decisions);
    a.participation_se = se(a.participation_rate);
    a.p_met_given_G = ratio(met_and_g, state_g);
    a.p_notmet_given_B = ratio(notmet_and_b, trials - state_g);
    a.p_G_given_met = ratio(met_and_g, met);
    a.mean_payoff = ratio(payoff_total, agent_decisions);
    a.state_g_rate = ratio(state_g, trials);
    return a;
}

DecisionLogWriter::DecisionLogWriter(std::ostream& out) : out_(out) {
    out_ << "# schema_version=1\n"
         << "trial_id,agent_id,mechanism,n,p,q,state,signal,action,classification\n";
}

void DecisionLogWriter::write(const Scenario& s, std::uint64_t trial_id, const GroupTrial& t) {
    const auto& g = s.params;
    for (std::size_t i = 0; i < t.signals.size(); ++i) {
        out_ << trial_id << ',' << i << ',' << to_string(g.mechanism()) << ',' << g.n() << ','
             << g.p() << ',' << g.q() << ',' << to_string(t.state) << ','
             << to_string(t.signals[i]) << ',' << (t.actions[i] ? 1 : 0) << ','
             << classification_label(t.signals[i], t.actions[i], g.mechanism()) << '\n';
        ++rows_;
    }
    if (!out_) throw std::runtime_error("failed writing decision log");
}

namespace {

TrialCounts run_range(const Scenario& s, const BehaviorStrategy& strat, std::int64_t begin,
                      std::int64_t end) {
    TrialCounts c;
    for (std::int64_t i = begin; i < end; ++i)
        c.add(run_trial(s, strat, static_cast<std::uint64_t>(i)));
    return c;
}

SimulationAggregate run_prepared(const Scenario& s, const BehaviorStrategy& strat, unsigned threads,
                                 DecisionLogWriter* log, std::uint64_t& trial_id) {
    if (log) {
        TrialCounts c;
        for (std::int64_t i = 0; i < s.replications; ++i) {
            auto t = run_trial(s, strat, static_cast<std::uint64_t>(i));
            log->write(s, trial_id++, t);
            c.add(t);
        }
        return c.finish();
    }
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    const auto workers = static_cast<std::int64_t>(
        std::min<std::int64_t>(threads, std::max<std::int64_t>(1, s.replications / 1024)));
    std::vector<TrialCounts> parts(static_cast<std::size_t>(workers));
    {
        std::vector<std::jthread> pool;
        for (std::int64_t w = 0; w < workers; ++w) {
            const std::int64_t begin = s.replications * w / workers;
            const std::int64_t end = s.replications * (w + 1) / workers;
            pool.emplace_back([&, w, begin, end] {
                parts[static_cast<std::size_t>(w)] = run_range(s, strat, begin, end);
            });
        }
    }
    TrialCounts total;
    for (const auto& p : parts) total += p;
    trial_id += static_cast<std::uint64_t>(s.replications);
    return total.finish();
}

}  // namespace

SimulationAggregate run_scenario(const Scenario& s, unsigned threads) {
    std::uint64_t trial_id = 0;
    return run_prepared(s, resolve_strategy(s), threads, nullptr, trial_id);
}

std::vector<SimulationAggregate> run_grid(const std::vector<Scenario>& design,
                                          DecisionLogWriter* log, unsigned threads) {
    if (design.empty()) throw DomainError("design must contain at least one scenario");
    std::vector<SimulationAggregate> out;
    out.reserve(design.size());
    std::uint64_t trial_id = 0;
    for (const auto& s : design) out.push_back(run_prepared(s, resolve_strategy(s), threads, log, trial_id));
    return out;
}

std::vector<Scenario> paper_grid(std::int64_t replications, std::uint64_t seed, Behavior behavior) {
    struct Arm {
        Mechanism mech;
        double q;
        const char* name;
    };
    const Arm arms[] = {{Mechanism::Voting, 0.5, "voting50"},
                        {Mechanism::Crowdfunding, 0.5, "cf50"},
                        {Mechanism::Crowdfunding, 0.8, "cf80"}};
    std::vector<Scenario> out;
    for (double p : {0.55, 0.85})
        for (int n : {5, 25})
            for (const auto& arm : arms) {
                std::ostringstream label;
                label << "p" << std::lround(p * 100) << "_n" << n << "_" << arm.name;
                Scenario s{GameParams(n, p, 0.5, 0.5, arm.mech, arm.q), behavior, replications,
                           derive_seed(seed, out.size()), label.str()};
                out.push_back(std::move(s));
            }
    return out;
}

namespace {

Behavior behavior_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        auto k = j.get<std::string>();
        if (k == "equilibrium") return Behavior::equilibrium();
        if (k == "signal_following") return Behavior::signal_following();
        throw DomainError("behavior must be equilibrium, signal_following or a mixture / type_mixture object");
    }
    if (j.is_object() && j.value("kind", "") == "mixture") {
        if (!j.contains("psi") || !j.contains("lambda"))
            throw DomainError("mixture behavior needs psi and lambda");
        return Behavior::mixture(j.at("psi").get<double>(), j.at("lambda").get<double>());
    }
    if (j.is_object() && j.value("kind", "") == "type_mixture") {
        if (!j.contains("rho") || !j.contains("psi") || !j.contains("lambda"))
            throw DomainError("type_mixture behavior needs rho, psi and lambda");
        return Behavior::type_mixture(j.at("rho").get<double>(), j.at("psi").get<double>(),
                                      j.at("lambda").get<double>());
    }
    if (j.is_object() && j.contains("kind")) return behavior_from_json(j.at("kind"));
    throw DomainError("unrecognized behavior");
}

}  // namespace

std::vector<Scenario> scenarios_from_json(const nlohmann::json& j) {
    const nlohmann::json& arr = j.is_object() && j.contains("scenarios") ? j.at("scenarios") : j;
    if (!arr.is_array()) throw DomainError("scenario config must be an array of scenario objects");
    std::vector<Scenario> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto& e = arr[i];
        const std::string where = "scenarios[" + std::to_string(i) + "]";
        try {
            if (!e.contains("params")) throw DomainError("missing key \"params\"");
            Scenario s{game_params_from_json(e.at("params")),
                       e.contains("behavior") ? behavior_from_json(e.at("behavior"))
                                              : Behavior::equilibrium(),
                       e.value("replications", std::int64_t{100000}),
                       e.value("seed", std::uint64_t{0}), e.value("label", where)};
            validate(s);
            out.push_back(std::move(s));
        } catch (const DomainError& err) {
            throw DomainError(where + ": " + err.what());
        } catch (const nlohmann::json::exception& err) {
            throw DomainError(where + ": " + err.what());
        }
    }
    return out;
}

nlohmann::json scenario_to_json(const Scenario& s) {
    nlohmann::json b;
    if (s.behavior.kind == BehaviorKind::Mixture)
        b = {{"kind", "mixture"}, {"psi", s.behavior.psi}, {"lambda", s.behavior.lambda}};
    else if (s.behavior.kind == BehaviorKind::TypeMixture)
        b = {{"kind", "type_mixture"},
             {"rho", s.behavior.rho},
             {"psi", s.behavior.psi},
             {"lambda", s.behavior.lambda}};
    else
        b = to_string(s.behavior);
    return {{"label", s.label}, {"params", s.params}, {"behavior", b},
            {"replications", s.replications}, {"seed", s.seed}};
}

std::string aggregate_csv_header() {
    return "label,mechanism,n,p,q,T,mu,tau,behavior,seed,correctness_rate,correctness_se,"
           "participation_rate,participation_se,p_met_given_G,p_notmet_given_B,p_G_given_met,"
           "mean_payoff,replications";
}

std::string aggregate_csv_row(const Scenario& s, const SimulationAggregate& a) {
    const auto& g = s.params;
    std::ostringstream os;
    os.precision(10);
    os << s.label << ',' << to_string(g.mechanism()) << ',' << g.n() << ',' << g.p() << ','
       << g.q() << ',' << g.threshold() << ',' << g.mu() << ',' << g.tau() << ','
       << to_string(s.behavior) << ',' << s.seed << ',' << a.correctness_rate << ','
       << a.correctness_se << ',' << a.participation_rate << ',' << a.participation_se << ','
       << a.p_met_given_G << ',' << a.p_notmet_given_B << ',' << a.p_G_given_met << ','
       << a.mean_payoff << ',' << a.replications;
    return os.str();
}

nlohmann::json aggregate_json(const Scenario& s, const SimulationAggregate& a) {
    auto num = [](double x) { return std::isnan(x) ? nlohmann::json(nullptr) : nlohmann::json(x); };
    return {{"scenario", scenario_to_json(s)},
            {"correctness_rate", num(a.correctness_rate)},
            {"correctness_se", num(a.correctness_se)},
            {"participation_rate", num(a.participation_rate)},
            {"participation_se", num(a.participation_se)},
            {"p_met_given_G", num(a.p_met_given_G)},
            {"p_notmet_given_B", num(a.p_notmet_given_B)},
            {"p_G_given_met", num(a.p_G_given_met)},
            {"mean_payoff", num(a.mean_payoff)},
            {"replications", a.replications}};
}

nlohmann::json trial_json(const GroupTrial& t) {
    nlohmann::json signals = nlohmann::json::array(), actions = nlohmann::json::array();
    for (auto s : t.signals) signals.push_back(to_string(s));
    for (bool a : t.actions) actions.push_back(a ? 1 : 0);
    return {{"schema_version", 1},          {"state", to_string(t.state)},
            {"signals", signals},           {"actions", actions},
            {"threshold_met", t.threshold_met}, {"group_correct", t.group_correct},
            {"payoffs", t.payoffs}};
}

}  // namespace cfgame
