#include "cfgame/model.hpp"

#include <cmath>
#include <sstream>

namespace cfgame {

namespace {

std::string fmt_bound(const char* name, double x, const char* bound) {
    std::ostringstream os;
    os << name << " = " << x << " violates " << bound;
    return os.str();
}

}  // namespace

std::string to_string(Mechanism m) { return m == Mechanism::Voting ? "voting" : "crowdfunding"; }
std::string to_string(WorldState s) { return s == WorldState::G ? "G" : "B"; }
std::string to_string(Signal s) { return s == Signal::H ? "H" : "L"; }

std::string to_string(Regime r) {
    switch (r) {
        case Regime::Low: return "low";
        case Regime::Moderate: return "moderate";
        case Regime::High: return "high";
    }
    return "?";
}

Mechanism mechanism_from_string(const std::string& s) {
    if (s == "voting") return Mechanism::Voting;
    if (s == "crowdfunding") return Mechanism::Crowdfunding;
    throw DomainError("mechanism must be \"voting\" or \"crowdfunding\", got \"" + s + "\"");
}

void require_accuracy(double p) {
    if (!(p > 0.5 && p < 1.0)) throw DomainError(fmt_bound("p", p, "0.5 < p < 1"));
}

void require_open_unit(double x, const char* name) {
    if (!(x > 0.0 && x < 1.0)) throw DomainError(fmt_bound(name, x, "0 < x < 1"));
}

void require_unit(double x, const char* name) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError(fmt_bound(name, x, "0 <= x <= 1"));
}

GameParams::GameParams(int n, double p, double mu, double tau, Mechanism mechanism, double q)
    : n_(n), p_(p), mu_(mu), tau_(tau), mechanism_(mechanism),
      q_(mechanism == Mechanism::Voting ? 0.5 : q) {
    if (n < 1) throw DomainError("n = " + std::to_string(n) + " violates n >= 1");
    require_accuracy(p);
    require_open_unit(mu, "mu");
    require_open_unit(tau, "tau");
    if (!(q_ > 0.0 && q_ <= 1.0)) throw DomainError(fmt_bound("q", q_, "0 < q <= 1"));
    // q * n can land a hair above an integer (0.8 * 25 = 20.000000000000004).
    double raw = q_ * n_;
    double rounded = std::round(raw);
    threshold_ = std::abs(raw - rounded) < 1e-9 ? static_cast<int>(rounded)
                                                : static_cast<int>(std::ceil(raw));
    if (threshold_ < 1) threshold_ = 1;
    if (threshold_ > n_) threshold_ = n_;
}

void to_json(nlohmann::json& j, const GameParams& g) {
    j = nlohmann::json{{"n", g.n()},     {"p", g.p()},
                       {"mu", g.mu()},   {"tau", g.tau()},
                       {"mechanism", to_string(g.mechanism())}, {"q", g.q()}};
}

GameParams game_params_from_json(const nlohmann::json& j) {
    auto need = [&](const char* key) -> const nlohmann::json& {
        if (!j.contains(key)) throw DomainError(std::string("missing key \"") + key + "\"");
        return j.at(key);
    };
    try {
        Mechanism m = mechanism_from_string(need("mechanism").get<std::string>());
        double q = j.contains("q") ? j.at("q").get<double>() : 0.5;
        return GameParams(need("n").get<int>(), need("p").get<double>(), need("mu").get<double>(),
                          need("tau").get<double>(), m, q);
    } catch (const nlohmann::json::type_error& e) {
        throw DomainError(std::string("bad game parameter type: ") + e.what());
    }
}

BehaviorStrategy::BehaviorStrategy(double h, double l) : sigma_h(h), sigma_l(l) {
    require_unit(h, "sigma_h");
    require_unit(l, "sigma_l");
}

double posterior(double mu, double p, Signal s) {
    require_open_unit(mu, "mu");
    require_accuracy(p);
    double like_g = s == Signal::H ? p : 1.0 - p;
    double like_b = 1.0 - like_g;
    return mu * like_g / (mu * like_g + (1.0 - mu) * like_b);
}

PriceRegime classify_price(double mu, double p, double tau) {
    require_open_unit(tau, "tau");
    PriceRegime r{Regime::Moderate, posterior(mu, p, Signal::L), posterior(mu, p, Signal::H)};
    if (tau <= r.posterior_l)
        r.regime = Regime::Low;
    else if (tau >= r.posterior_h)
        r.regime = Regime::High;
    return r;
}

PriceRegime classify_price(const GameParams& params) {
    return classify_price(params.mu(), params.p(), params.tau());
}

std::int64_t payoff(Mechanism mechanism, bool invested, bool threshold_met, bool correct,
                    const PayoffRule& rule) {
    if (mechanism == Mechanism::Voting) return correct ? rule.voting_gain : -rule.voting_gain;
    if (!invested || !threshold_met) return 0;
    return correct ? rule.reward - rule.stake : -rule.stake;
}

}  // namespace cfgame
