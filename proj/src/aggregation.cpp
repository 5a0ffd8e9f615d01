#include "cfgame/aggregation.hpp"

#include <sstream>

#include "cfgame/equilibrium.hpp"

namespace cfgame {

namespace {

double error_term(double mu, double p, double tau) {
    if (classify_price(mu, p, tau).regime != Regime::Moderate)
        throw DomainError("closed-form indices require a moderate price");
    return ((1.0 - p) / p) * ((1.0 - tau) / tau) * mu;
}

}  // namespace

double correctness_index(double mu, double p, double tau) { return 1.0 - error_term(mu, p, tau); }

double participation_index(double mu, double p, double tau) {
    return mu + error_term(mu, p, tau);
}

double mixture_rho(double psi, double lambda, double phi) {
    require_unit(psi, "psi");
    require_unit(lambda, "lambda");
    require_unit(phi, "phi");
    const double denom = 1.0 + lambda - psi;
    if (!(denom > 0.0)) throw InconsistentMixture("mixture denominator 1 + lambda - psi <= 0");
    const double rho = (1.0 + lambda - 2.0 * phi) / denom;
    if (rho < 0.0 || rho > 1.0) {
        std::ostringstream os;
        os << "inconsistent mixture: rho = " << rho << " outside [0, 1]";
        throw InconsistentMixture(os.str());
    }
    return rho;
}

ConditionalOptIn conditional_optin(double rho, double psi, double lambda, double p) {
    require_unit(rho, "rho");
    require_unit(psi, "psi");
    require_unit(lambda, "lambda");
    require_accuracy(p);
    return {(1.0 - rho) * (p + (1.0 - p) * lambda) + rho * p * psi,
            (1.0 - rho) * ((1.0 - p) + p * lambda) + rho * (1.0 - p) * psi};
}

double crowdfunding_correctness(double phi_h, double phi_l, int n, int threshold, double mu) {
    require_unit(phi_h, "phi_H");
    require_unit(phi_l, "phi_L");
    require_unit(mu, "mu");
    if (threshold < 1 || threshold > n) throw DomainError("threshold violates 1 <= T <= n");
    return mu * binomial_tail(n, threshold, phi_h) +
           (1.0 - mu) * (1.0 - binomial_tail(n, threshold, phi_l));
}

double voting_correctness(double p, double follow_rate, int n) {
    require_accuracy(p);
    require_unit(follow_rate, "follow_rate");
    if (n < 1 || n % 2 == 0)
        throw DomainError("voting_correctness needs odd n, got " + std::to_string(n));
    const double effective = follow_rate * p + (1.0 - follow_rate) * (1.0 - p);
    return binomial_tail(n, (n + 1) / 2, effective);
}

AggregationReport report(const AggregationInputs& in) {
    // Threshold and voting odd-n checks come from the shared constructors.
    GameParams game(in.n, in.p, in.mu, in.tau, Mechanism::Crowdfunding, in.q);
    AggregationReport r{in, game.threshold(), 0, 0, 0, 0, 0};
    r.rho = mixture_rho(in.psi, in.lambda, in.phi);
    auto opt = conditional_optin(r.rho, in.psi, in.lambda, in.p);
    r.phi_h = opt.phi_h;
    r.phi_l = opt.phi_l;
    r.theta_cf = crowdfunding_correctness(opt.phi_h, opt.phi_l, in.n, r.threshold, in.mu);
    r.theta_voting = voting_correctness(in.p, in.follow_rate, in.n);
    return r;
}

nlohmann::json report_json(const AggregationReport& r) {
    return {{"schema_version", 1}, {"mu", r.in.mu},         {"p", r.in.p},
            {"tau", r.in.tau},     {"n", r.in.n},           {"T", r.threshold},
            {"psi", r.in.psi},     {"lambda", r.in.lambda}, {"phi", r.in.phi},
            {"rho", r.rho},        {"phi_H", r.phi_h},      {"phi_L", r.phi_l},
            {"theta_cf", r.theta_cf}, {"theta_voting", r.theta_voting}};
}

std::string report_csv_header() {
    return "mu,p,tau,n,T,psi,lambda,phi,rho,phi_H,phi_L,theta_cf,theta_voting";
}

std::string report_csv_row(const AggregationReport& r) {
    std::ostringstream os;
    os.precision(10);
    os << r.in.mu << ',' << r.in.p << ',' << r.in.tau << ',' << r.in.n << ',' << r.threshold << ','
       << r.in.psi << ',' << r.in.lambda << ',' << r.in.phi << ',' << r.rho << ',' << r.phi_h
       << ',' << r.phi_l << ',' << r.theta_cf << ',' << r.theta_voting;
    return os.str();
}

}  // namespace cfgame
