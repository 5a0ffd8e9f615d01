#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "cfgame/aggregation.hpp"
#include "cfgame/model.hpp"

namespace cfgame {

/// Design matrix columns are linearly dependent.
class RankDeficientDesign : public std::invalid_argument {
  public:
    RankDeficientDesign(const std::string& what, std::vector<std::string> columns)
        : std::invalid_argument(what), columns_(std::move(columns)) {}
    const std::vector<std::string>& columns() const { return columns_; }

  private:
    std::vector<std::string> columns_;
};

struct DecisionFlags {
    bool is_true;                 // acted per signal
    std::optional<bool> ra;       // crowdfunding, H signal: opted out
    std::optional<bool> mut_ins;  // crowdfunding, L signal: opted in
};

/// `action` is opt-in for crowdfunding and vote-for-G for voting.
DecisionFlags classify(Signal signal, bool action, Mechanism mechanism);

/// signal_following, risk_aversion, mutual_insurance or against_signal.
std::string classification_label(Signal signal, bool action, Mechanism mechanism);

struct DecisionRecord {
    Mechanism mechanism;
    int ball_ratio;  // 55 or 85 in the experiment
    int group_size;  // 5 or 25
    int threshold;   // 50 or 80 (percent)
    Signal signal;
    bool action;
    DecisionFlags flags;
};

DecisionRecord make_record(Mechanism mechanism, int ball_ratio, int group_size, int threshold,
                           Signal signal, bool action);

/// Reads the simulator's decision-log CSV. Lines starting with '#' are skipped.
std::vector<DecisionRecord> read_decision_log(std::istream& in);

enum class Outcome { IsTrue, RiskAversion, MutualInsurance };
std::string to_string(Outcome o);
Outcome outcome_from_string(const std::string& s);  // "is_true" | "ra" | "mut_ins"

/// Treatment-coded indicators against voting / 55 / 5 / 50.
enum class Predictor { Crowdfunding, BallRatio85, GroupSize25, Threshold80 };
std::string to_string(Predictor p);

/// The predictor sets of the three published models.
std::vector<Predictor> default_predictors(Outcome o);

struct LogisticFit {
    std::vector<std::string> names;  // "(Intercept)" first
    std::vector<double> coefficients;
    std::vector<double> std_errors;
    std::vector<double> odds_ratios;
    std::vector<double> ci_low;
    std::vector<double> ci_high;
    std::vector<double> p_values;
    double log_likelihood = 0.0;
    double null_log_likelihood = 0.0;
    double lr_chi2 = 0.0;
    int df = 0;
    double lr_p_value = 1.0;
    std::int64_t n_obs = 0;
    int iterations = 0;
    bool converged = false;
    std::string diagnostic;
    std::vector<double> ll_trace;  // log-likelihood after each accepted step
};

struct IrlsOptions {
    int max_iterations = 100;
    double score_tol = 1e-8;
    double ll_tol = 1e-10;
    double separation_bound = 15.0;
};

/// Maximum likelihood by IRLS with step halving. `design` includes the
/// intercept column; `names` labels its columns.
LogisticFit fit_logistic(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                         std::vector<std::string> names, const IrlsOptions& opts = {});

/// Filters to the records where `outcome` is defined, builds the design and fits.
LogisticFit fit_logistic(std::span<const DecisionRecord> records, Outcome outcome,
                         std::span<const Predictor> predictors, const IrlsOptions& opts = {});

/// Probability implied by a baseline odds ratio times factor odds ratios.
double predicted_prob(double intercept_or, std::span<const double> factor_ors = {});

MixtureEstimate estimate_mixture(std::span<const DecisionRecord> records);

std::string fit_csv(const LogisticFit& fit);
nlohmann::json fit_json(const LogisticFit& fit);

}  // namespace cfgame
