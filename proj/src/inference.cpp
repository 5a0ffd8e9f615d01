#include "cfgame/inference.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

namespace cfgame {

DecisionFlags classify(Signal signal, bool action, Mechanism mechanism) {
    DecisionFlags f{(signal == Signal::H) == action, std::nullopt, std::nullopt};
    if (mechanism == Mechanism::Crowdfunding) {
        if (signal == Signal::H)
            f.ra = !action;
        else
            f.mut_ins = action;
    }
    return f;
}

std::string classification_label(Signal signal, bool action, Mechanism mechanism) {
    auto f = classify(signal, action, mechanism);
    if (f.is_true) return "signal_following";
    if (f.ra.value_or(false)) return "risk_aversion";
    if (f.mut_ins.value_or(false)) return "mutual_insurance";
    return "against_signal";
}

DecisionRecord make_record(Mechanism mechanism, int ball_ratio, int group_size, int threshold,
                           Signal signal, bool action) {
    return {mechanism, ball_ratio, group_size, threshold, signal, action,
            classify(signal, action, mechanism)};
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

std::vector<DecisionRecord> read_decision_log(std::istream& in) {
    std::string line;
    std::map<std::string, std::size_t> col;
    std::size_t line_no = 0;
    std::vector<DecisionRecord> out;
    auto fail = [&](const std::string& msg) {
        throw DomainError("decision log line " + std::to_string(line_no) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto cells = split_csv(line);
        if (col.empty()) {
            for (std::size_t i = 0; i < cells.size(); ++i) col[cells[i]] = i;
            for (const char* k : {"mechanism", "n", "p", "q", "signal", "action"})
                if (!col.count(k)) fail(std::string("missing column \"") + k + "\"");
            continue;
        }
        if (cells.size() != col.size()) fail("expected " + std::to_string(col.size()) + " cells");
        try {
            auto mech = mechanism_from_string(cells[col["mechanism"]]);
            int n = std::stoi(cells[col["n"]]);
            int ball = static_cast<int>(std::lround(std::stod(cells[col["p"]]) * 100.0));
            int thr = static_cast<int>(std::lround(std::stod(cells[col["q"]]) * 100.0));
            const auto& s = cells[col["signal"]];
            if (s != "H" && s != "L") fail("signal must be H or L");
            const auto& a = cells[col["action"]];
            if (a != "0" && a != "1") fail("action must be 0 or 1");
            out.push_back(make_record(mech, ball, n, thr, s == "H" ? Signal::H : Signal::L, a == "1"));
        } catch (const std::logic_error& e) {
            if (dynamic_cast<const DomainError*>(&e)) throw;
            fail(e.what());
        }
    }
    return out;
}

std::string to_string(Outcome o) {
    switch (o) {
        case Outcome::IsTrue: return "is_true";
        case Outcome::RiskAversion: return "ra";
        case Outcome::MutualInsurance: return "mut_ins";
    }
    return "?";
}

Outcome outcome_from_string(const std::string& s) {
    if (s == "is_true") return Outcome::IsTrue;
    if (s == "ra") return Outcome::RiskAversion;
    if (s == "mut_ins") return Outcome::MutualInsurance;
    throw DomainError("model must be one of is_true, ra, mut_ins; got \"" + s + "\"");
}

std::string to_string(Predictor p) {
    switch (p) {
        case Predictor::Crowdfunding: return "Crowdfunding";
        case Predictor::BallRatio85: return "BallRatio85";
        case Predictor::GroupSize25: return "GroupSize25";
        case Predictor::Threshold80: return "Threshold80";
    }
    return "?";
}

std::vector<Predictor> default_predictors(Outcome o) {
    if (o == Outcome::IsTrue)
        return {Predictor::Crowdfunding, Predictor::BallRatio85, Predictor::GroupSize25};
    return {Predictor::GroupSize25, Predictor::BallRatio85, Predictor::Threshold80};
}

namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double logistic(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

double log_likelihood(const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y[i] * eta[i] - softplus(eta[i]);
    return ll;
}

}  // namespace

LogisticFit fit_logistic(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                         std::vector<std::string> names, const IrlsOptions& opts) {
    const Eigen::Index n = design.rows();
    const Eigen::Index k = design.cols();
    if (static_cast<Eigen::Index>(names.size()) != k)
        throw DomainError("one name per design column required");
    if (y.size() != n) throw DomainError("outcome length differs from design rows");
    if (n == 0) throw DomainError("no observations to fit");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    // The default threshold misses exactly duplicated 0/1 columns by rounding.
    qr.setThreshold(1e-10);
    if (qr.rank() < k) {
        std::vector<std::string> bad;
        for (Eigen::Index j = qr.rank(); j < k; ++j) bad.push_back(names[qr.colsPermutation().indices()[j]]);
        std::string msg = "rank-deficient design; collinear columns:";
        for (const auto& b : bad) msg += " " + b;
        throw RankDeficientDesign(msg, bad);
    }

    LogisticFit fit;
    fit.names = std::move(names);
    fit.n_obs = n;
    fit.df = static_cast<int>(k - 1);

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd eta = design * beta;
    double ll = log_likelihood(eta, y);
    fit.ll_trace.push_back(ll);

    Eigen::MatrixXd info(k, k);
    for (int it = 1; it <= opts.max_iterations; ++it) {
        Eigen::VectorXd mu = eta.unaryExpr(&logistic);
        Eigen::VectorXd w = mu.array() * (1.0 - mu.array());
        Eigen::VectorXd score = design.transpose() * (y - mu);
        info = design.transpose() * w.asDiagonal() * design;
        if (score.cwiseAbs().maxCoeff() < opts.score_tol) {
            fit.converged = true;
            break;
        }
        Eigen::VectorXd step = info.ldlt().solve(score);
        double scale = 1.0;
        Eigen::VectorXd trial = beta + step;
        Eigen::VectorXd trial_eta = design * trial;
        double trial_ll = log_likelihood(trial_eta, y);
        for (int halve = 0; halve < 40 && !(trial_ll >= ll); ++halve) {
            scale *= 0.5;
            trial = beta + scale * step;
            trial_eta = design * trial;
            trial_ll = log_likelihood(trial_eta, y);
        }
        if (!(trial_ll >= ll)) break;  // no ascent possible; keep current estimate
        const double gain = trial_ll - ll;
        beta = trial;
        eta = trial_eta;
        ll = trial_ll;
        fit.ll_trace.push_back(ll);
        fit.iterations = it;
        if (gain < opts.ll_tol) {
            fit.converged = true;
            mu = eta.unaryExpr(&logistic);
            w = mu.array() * (1.0 - mu.array());
            info = design.transpose() * w.asDiagonal() * design;
            break;
        }
    }
    if (!fit.converged) fit.diagnostic = "IRLS did not converge";

    for (Eigen::Index j = 0; j < k; ++j) {
        if (std::abs(beta[j]) > opts.separation_bound) {
            fit.converged = false;
            fit.diagnostic = "possible complete separation: |coefficient(" + fit.names[j] +
                             ")| > " + std::to_string(opts.separation_bound);
        }
    }

    Eigen::MatrixXd cov = info.ldlt().solve(Eigen::MatrixXd::Identity(k, k));
    for (Eigen::Index j = 0; j < k; ++j) {
        const double b = beta[j];
        const double se = std::sqrt(std::max(0.0, cov(j, j)));
        fit.coefficients.push_back(b);
        fit.std_errors.push_back(se);
        fit.odds_ratios.push_back(std::exp(b));
        fit.ci_low.push_back(std::exp(b - 1.96 * se));
        fit.ci_high.push_back(std::exp(b + 1.96 * se));
        fit.p_values.push_back(std::erfc(std::abs(b / se) / std::sqrt(2.0)));
    }

    fit.log_likelihood = ll;
    const double ybar = y.mean();
    fit.null_log_likelihood = (ybar > 0.0 ? n * ybar * std::log(ybar) : 0.0) +
                              (ybar < 1.0 ? n * (1.0 - ybar) * std::log1p(-ybar) : 0.0);
    fit.lr_chi2 = std::max(0.0, 2.0 * (fit.log_likelihood - fit.null_log_likelihood));
    fit.lr_p_value = fit.df > 0 ? boost::math::gamma_q(fit.df / 2.0, fit.lr_chi2 / 2.0) : 1.0;
    return fit;
}

namespace {

bool indicator(const DecisionRecord& r, Predictor p) {
    switch (p) {
        case Predictor::Crowdfunding: return r.mechanism == Mechanism::Crowdfunding;
        case Predictor::BallRatio85: return r.ball_ratio != 55;
        case Predictor::GroupSize25: return r.group_size != 5;
        case Predictor::Threshold80: return r.threshold != 50;
    }
    return false;
}

std::optional<bool> outcome_of(const DecisionRecord& r, Outcome o) {
    switch (o) {
        case Outcome::IsTrue: return r.flags.is_true;
        case Outcome::RiskAversion: return r.flags.ra;
        case Outcome::MutualInsurance: return r.flags.mut_ins;
    }
    return std::nullopt;
}

}  // namespace

LogisticFit fit_logistic(std::span<const DecisionRecord> records, Outcome outcome,
                         std::span<const Predictor> predictors, const IrlsOptions& opts) {
    std::vector<const DecisionRecord*> kept;
    for (const auto& r : records)
        if (outcome_of(r, outcome)) kept.push_back(&r);
    if (kept.empty()) throw DomainError("no records define outcome " + to_string(outcome));

    const auto k = static_cast<Eigen::Index>(predictors.size() + 1);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(kept.size()), k);
    Eigen::VectorXd y(static_cast<Eigen::Index>(kept.size()));
    for (std::size_t i = 0; i < kept.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        x(row, 0) = 1.0;
        for (std::size_t j = 0; j < predictors.size(); ++j)
            x(row, static_cast<Eigen::Index>(j + 1)) = indicator(*kept[i], predictors[j]) ? 1.0 : 0.0;
        y[row] = *outcome_of(*kept[i], outcome) ? 1.0 : 0.0;
    }
    std::vector<std::string> names{"(Intercept)"};
    for (auto p : predictors) names.push_back(to_string(p));
    return fit_logistic(x, y, std::move(names), opts);
}

double predicted_prob(double intercept_or, std::span<const double> factor_ors) {
    if (!(intercept_or > 0.0)) throw DomainError("odds ratios must be > 0");
    double total = intercept_or;
    for (double f : factor_ors) {
        if (!(f > 0.0)) throw DomainError("odds ratios must be > 0");
        total *= f;
    }
    return total / (1.0 + total);
}

MixtureEstimate estimate_mixture(std::span<const DecisionRecord> records) {
    std::int64_t h = 0, h_out = 0, l = 0, l_in = 0;
    for (const auto& r : records) {
        if (r.mechanism != Mechanism::Crowdfunding) continue;
        if (r.signal == Signal::H) {
            ++h;
            h_out += r.action ? 0 : 1;
        } else {
            ++l;
            l_in += r.action ? 1 : 0;
        }
    }
    if (h == 0) throw DomainError("no crowdfunding records with an H signal");
    if (l == 0) throw DomainError("no crowdfunding records with an L signal");
    MixtureEstimate m{};
    m.psi = static_cast<double>(h_out) / h;
    m.lambda = static_cast<double>(l_in) / l;
    m.phi = static_cast<double>(h - h_out + l_in) / (h + l);
    m.rho = mixture_rho(m.psi, m.lambda, m.phi);
    return m;
}

std::string fit_csv(const LogisticFit& fit) {
    std::ostringstream os;
    os.precision(10);
    os << "# schema_version=1\n";
    os << "predictor,coefficient,odds_ratio,ci_low,ci_high,p_value\n";
    for (std::size_t j = 0; j < fit.names.size(); ++j)
        os << fit.names[j] << ',' << fit.coefficients[j] << ',' << fit.odds_ratios[j] << ','
           << fit.ci_low[j] << ',' << fit.ci_high[j] << ',' << fit.p_values[j] << '\n';
    return os.str();
}

nlohmann::json fit_json(const LogisticFit& fit) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t j = 0; j < fit.names.size(); ++j)
        rows.push_back({{"predictor", fit.names[j]},
                        {"coefficient", fit.coefficients[j]},
                        {"std_error", fit.std_errors[j]},
                        {"odds_ratio", fit.odds_ratios[j]},
                        {"ci_low", fit.ci_low[j]},
                        {"ci_high", fit.ci_high[j]},
                        {"p_value", fit.p_values[j]}});
    return {{"schema_version", 1},        {"rows", rows},
            {"n_obs", fit.n_obs},         {"log_likelihood", fit.log_likelihood},
            {"lr_chi2", fit.lr_chi2},     {"df", fit.df},
            {"lr_p_value", fit.lr_p_value}, {"converged", fit.converged},
            {"iterations", fit.iterations}, {"diagnostic", fit.diagnostic}};
}

}  // namespace cfgame
