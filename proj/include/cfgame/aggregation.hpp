#pragma once

#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "cfgame/model.hpp"

namespace cfgame {

/// (psi, lambda, phi) triple that cannot come from the two-type mixture.
class InconsistentMixture : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// Two-type behavioral mixture. psi: H-typed opt-out rate, lambda: L-typed
/// opt-in rate, phi: overall opt-in rate, rho: share treating the price as
/// expensive.
struct MixtureEstimate {
    double psi;
    double lambda;
    double phi;
    double rho;
};

/// Opt-in probability conditional on the state.
struct ConditionalOptIn {
    double phi_h;  // P(contribute | G)
    double phi_l;  // P(contribute | B)
};

// Closed forms below hold at moderate prices only; other regimes throw.
double correctness_index(double mu, double p, double tau);
double participation_index(double mu, double p, double tau);

double mixture_rho(double psi, double lambda, double phi);

// `p` is the signal accuracy here, not the threshold ratio.
ConditionalOptIn conditional_optin(double rho, double psi, double lambda, double p);

/// Probability the funding outcome matches the state: funded under G, not
/// funded under B.
double crowdfunding_correctness(double phi_h, double phi_l, int n, int threshold, double mu);

/// Strict-majority correctness when each voter follows the signal with
/// probability `follow_rate` and votes against it otherwise. Odd n only.
double voting_correctness(double p, double follow_rate, int n);

struct AggregationInputs {
    double mu = 0.5;
    double p = 0.55;
    double tau = 0.5;
    int n = 5;
    double q = 0.5;
    double psi = 0.034;
    double lambda = 0.871;
    double phi = 71.0 / 81.0;
    double follow_rate = 1.0;
};

/// Every mixture-calculus quantity for one parameter set.
struct AggregationReport {
    AggregationInputs in;
    int threshold;
    double rho;
    double phi_h;
    double phi_l;
    double theta_cf;
    double theta_voting;
};

AggregationReport report(const AggregationInputs& in);
nlohmann::json report_json(const AggregationReport& r);
std::string report_csv_header();
std::string report_csv_row(const AggregationReport& r);

}  // namespace cfgame
