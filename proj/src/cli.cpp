#include "cfgame/cli.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "CLI11.hpp"
#include "cfgame/aggregation.hpp"
#include "cfgame/equilibrium.hpp"
#include "cfgame/reference.hpp"

namespace cfgame::cli {

namespace fs = std::filesystem;

std::vector<CheckItem> replication_checks(std::optional<double> tolerance_override) {
    const auto& base = reference::kAggregationBaseline;
    std::vector<CheckItem> items;
    auto check = [&](std::string name, double computed, double published, double tol) {
        if (tolerance_override) tol = *tolerance_override;
        items.push_back({std::move(name), computed, published, tol,
                         std::abs(computed - published) <= tol});
    };

    const double rho = mixture_rho(base.psi, base.lambda, base.phi);
    check("rho", rho, base.rho, 0.0005);
    const auto opt = conditional_optin(rho, base.psi, base.lambda, 0.55);
    check("phi_H", opt.phi_h, base.phi_h, 0.001);
    check("phi_L", opt.phi_l, base.phi_l, 0.001);
    check("theta_cf", crowdfunding_correctness(base.phi_h, base.phi_l, 5, 3, 0.5), base.theta_cf, 0.002);
    check("theta_cf (from computed phi)", crowdfunding_correctness(opt.phi_h, opt.phi_l, 5, 3, 0.5),
          base.theta_cf, 0.002);
    check("theta_voting p=0.55", voting_correctness(0.55, 1.0, 5), base.theta_voting_055, 0.001);
    check("theta_voting p=0.85", voting_correctness(0.85, 1.0, 5), base.theta_voting_085, 0.001);
    check("theta_voting p=0.55 follow=0.874", voting_correctness(0.55, base.voting_follow_rate, 5),
          base.theta_voting_055_observed, 0.002);
    check("theta_voting p=0.85 follow=0.874", voting_correctness(0.85, base.voting_follow_rate, 5),
          base.theta_voting_085_observed, 0.002);

    const auto& t1 = reference::kTable1.rows;
    const auto& t2 = reference::kTable2.rows;
    const auto& t3 = reference::kTable3.rows;
    auto prob = [](double base, std::initializer_list<double> f) {
        return predicted_prob(base, std::span<const double>(f.begin(), f.size()));
    };
    check("is_true baseline 6.969 -> 0.874", prob(t1[0].odds_ratio, {}), reference::kIsTrueBaseline,
          0.001);
    check("is_true baseline 6.969 -> 0.872", prob(t1[0].odds_ratio, {}),
          reference::kIsTrueBaselineAlt, 0.003);
    check("is_true crowdfunding 6.969 x 0.139 -> 0.490", prob(t1[0].odds_ratio, {t1[1].odds_ratio}),
          reference::kIsTrueCrowdfunding, 0.005);
    check("ra baseline 0.035 -> 0.034", prob(t2[0].odds_ratio, {}), reference::kRaBaseline, 0.001);
    check("ra ball ratio 85 x 0.414 -> 0.015", prob(t2[0].odds_ratio, {t2[2].odds_ratio}),
          reference::kRaBallRatio85, 0.001);
    check("ra threshold 80 x 3.251 -> 0.102", prob(t2[0].odds_ratio, {t2[3].odds_ratio}),
          reference::kRaThreshold80, 0.001);
    check("mut_ins baseline 6.758 -> 0.871", prob(t3[0].odds_ratio, {}), reference::kMutInsBaseline,
          0.001);
    check("mut_ins ball ratio 85 x 2.532 -> 0.944", prob(t3[0].odds_ratio, {t3[2].odds_ratio}),
          reference::kMutInsBallRatio85, 0.001);
    return items;
}

int cmd_solve(const GameParams& params, std::ostream& out) {
    nlohmann::json j = solve_equilibrium(params);
    j["params"] = params;
    j["price_regime"] = to_string(classify_price(params).regime);
    out << j.dump(2) << '\n';
    return kOk;
}

int cmd_replicate(std::ostream& out, std::optional<double> tolerance_override, bool json) {
    const auto items = replication_checks(tolerance_override);
    bool all = true;
    for (const auto& it : items) all = all && it.pass;
    if (json) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& it : items)
            arr.push_back({{"name", it.name}, {"computed", it.computed}, {"published", it.published},
                           {"tolerance", it.tolerance}, {"diff", it.computed - it.published},
                           {"pass", it.pass}});
        out << nlohmann::json{{"schema_version", 1}, {"checks", arr}, {"all_pass", all}}.dump(2)
            << '\n';
    } else {
        for (const auto& it : items) {
            out << (it.pass ? "PASS " : "FAIL ") << std::left << std::setw(44) << it.name
                << std::right << std::fixed << std::setprecision(6) << " computed " << it.computed
                << "  published " << it.published << "  diff " << std::showpos
                << it.computed - it.published << std::noshowpos << "  tol " << it.tolerance << '\n';
        }
        out << (all ? "all checks passed" : "replication check failed") << '\n';
        out.unsetf(std::ios::fixed);
    }
    return all ? kOk : kReplicationFailed;
}

namespace {

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot open " + p.string() + " for writing");
    return f;
}

}  // namespace

int cmd_simulate(std::vector<Scenario> design, const RunConfig& cfg, std::ostream& out) {
    if (design.empty()) throw DomainError("design must contain at least one scenario");
    if (cfg.replications)
        for (auto& s : design) s.replications = *cfg.replications;
    for (const auto& s : design) validate(s);

    // A single replication is a trial dump rather than an aggregate.
    if (design.size() == 1 && design.front().replications == 1) {
        const auto t = run_trial(design.front(), 0);
        auto j = trial_json(t);
        j["scenario"] = scenario_to_json(design.front());
        out << j.dump(2) << '\n';
        return kOk;
    }

    if (cfg.out_dir) fs::create_directories(*cfg.out_dir);
    std::optional<std::ofstream> log_file;
    std::optional<DecisionLogWriter> log;
    if (cfg.log_path) {
        if (cfg.log_path->has_parent_path()) fs::create_directories(cfg.log_path->parent_path());
        log_file.emplace(open_out(*cfg.log_path));
        log.emplace(*log_file);
    }
    const auto aggs = run_grid(design, log ? &*log : nullptr, cfg.threads);

    std::ostringstream csv;
    csv << "# schema_version=1\n" << aggregate_csv_header() << '\n';
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t i = 0; i < design.size(); ++i) {
        csv << aggregate_csv_row(design[i], aggs[i]) << '\n';
        arr.push_back(aggregate_json(design[i], aggs[i]));
    }
    const nlohmann::json doc{{"schema_version", 1}, {"aggregates", arr}};
    if (cfg.out_dir) {
        open_out(*cfg.out_dir / "aggregates.csv") << csv.str();
        open_out(*cfg.out_dir / "aggregates.json") << doc.dump(2) << '\n';
    }
    out << (cfg.json ? doc.dump(2) + "\n" : csv.str());
    return kOk;
}

int cmd_analyze(const fs::path& log, Outcome model, bool mixture, bool json, std::ostream& out) {
    std::ifstream in(log);
    if (!in) throw DomainError("cannot read decision log " + log.string());
    const auto records = read_decision_log(in);
    const auto preds = default_predictors(model);
    const auto fit = fit_logistic(records, model, preds);
    nlohmann::json doc = fit_json(fit);
    doc["model"] = to_string(model);
    std::optional<MixtureEstimate> m;
    if (mixture) {
        m = estimate_mixture(records);
        doc["mixture"] = {{"psi", m->psi}, {"lambda", m->lambda}, {"phi", m->phi}, {"rho", m->rho}};
    }
    if (json) {
        out << doc.dump(2) << '\n';
    } else {
        out << fit_csv(fit);
        out << "# n_obs=" << fit.n_obs << " lr_chi2=" << fit.lr_chi2 << " df=" << fit.df
            << " lr_p=" << fit.lr_p_value << " converged=" << (fit.converged ? 1 : 0) << '\n';
        if (!fit.diagnostic.empty()) out << "# diagnostic: " << fit.diagnostic << '\n';
        if (m)
            out << "# mixture psi=" << m->psi << " lambda=" << m->lambda << " phi=" << m->phi
                << " rho=" << m->rho << '\n';
    }
    return kOk;
}

namespace {

struct GameFlags {
    int n = 5;
    double p = 0.55;
    double mu = 0.5;
    double tau = 0.5;
    double q = 0.5;
    std::string mechanism = "crowdfunding";
};

void add_game_flags(CLI::App* app, GameFlags& g, bool with_mechanism) {
    app->add_option("--n", g.n, "Population size (>= 1)")->capture_default_str();
    app->add_option("--p", g.p, "Signal accuracy, 0.5 < p < 1")->capture_default_str();
    app->add_option("--mu", g.mu, "Prior probability of the high state")->capture_default_str();
    app->add_option("--tau", g.tau, "Price, 0 < tau < 1")->capture_default_str();
    app->add_option("--q", g.q, "Threshold ratio, 0 < q <= 1 (voting uses 0.5)")
        ->capture_default_str();
    if (with_mechanism)
        app->add_option("--mechanism", g.mechanism, "voting | crowdfunding")->capture_default_str();
}

struct BehaviorFlags {
    std::string kind = "equilibrium";
    double psi = 0.0;
    double lambda = 0.0;
    double rho = 0.0;
};

void add_behavior_flags(CLI::App* app, BehaviorFlags& b) {
    app->add_option("--behavior", b.kind,
                    "equilibrium | signal_following | mixture | type_mixture")
        ->capture_default_str();
    app->add_option("--psi", b.psi,
                    "mixture: H-signal opt-out rate; type_mixture: expensive types' H opt-in rate")
        ->capture_default_str();
    app->add_option("--lambda", b.lambda, "L-signal opt-in rate (moderate types)")
        ->capture_default_str();
    app->add_option("--rho", b.rho, "type_mixture: share of expensive types")->capture_default_str();
}

Behavior to_behavior(const BehaviorFlags& b) {
    if (b.kind == "equilibrium") return Behavior::equilibrium();
    if (b.kind == "signal_following") return Behavior::signal_following();
    if (b.kind == "mixture") return Behavior::mixture(b.psi, b.lambda);
    if (b.kind == "type_mixture") return Behavior::type_mixture(b.rho, b.psi, b.lambda);
    throw DomainError("--behavior must be equilibrium, signal_following, mixture or type_mixture");
}

std::vector<Scenario> load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot read config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw DomainError("config " + path.string() + ": " + e.what());
    }
    return scenarios_from_json(j);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Threshold crowdfunding game laboratory: equilibria, aggregation metrics, "
                 "Monte Carlo simulation and logistic analysis"};
    app.require_subcommand(1);

    GameFlags solve_game;
    auto* solve = app.add_subcommand("solve", "Solve the symmetric crowdfunding equilibrium");
    add_game_flags(solve, solve_game, false);

    double tolerance = -1.0;
    bool replicate_json = false;
    auto* replicate = app.add_subcommand("replicate", "Check computed values against published ones");
    replicate->add_option("--tolerance", tolerance, "Override every check tolerance");
    replicate->add_flag("--json", replicate_json, "Emit JSON instead of text");

    GameFlags sim_game;
    BehaviorFlags sim_behavior;
    RunConfig sim_cfg;
    std::string sim_config;
    std::int64_t sim_reps = 100000;
    std::string sim_out, sim_log;
    auto* simulate = app.add_subcommand("simulate", "Simulate one scenario or a JSON scenario file");
    add_game_flags(simulate, sim_game, true);
    add_behavior_flags(simulate, sim_behavior);
    simulate->add_option("--config", sim_config, "JSON file with an array of scenarios");
    simulate->add_option("--reps", sim_reps, "Replications (1 dumps a single trial)")
        ->capture_default_str();
    simulate->add_option("--seed", sim_cfg.seed, "Master seed")->capture_default_str();
    simulate->add_option("--threads", sim_cfg.threads, "Worker threads (0 = all cores)");
    simulate->add_option("--out", sim_out, "Directory for aggregates.csv / aggregates.json");
    simulate->add_option("--log", sim_log, "Write agent-level decisions to this CSV");
    simulate->add_flag("--json", sim_cfg.json, "Print JSON instead of CSV");

    std::string design = "paper-grid";
    std::string sweep_config;
    BehaviorFlags sweep_behavior;
    RunConfig sweep_cfg;
    std::int64_t sweep_reps = 100000;
    std::string sweep_out, sweep_log;
    auto* sweep = app.add_subcommand("sweep", "Run a design of scenarios");
    sweep->add_option("--design", design, "Built-in design name (paper-grid)")->capture_default_str();
    sweep->add_option("--config", sweep_config, "JSON scenario file instead of a built-in design");
    add_behavior_flags(sweep, sweep_behavior);
    sweep->add_option("--reps", sweep_reps, "Replications per scenario")->capture_default_str();
    sweep->add_option("--seed", sweep_cfg.seed, "Master seed")->capture_default_str();
    sweep->add_option("--threads", sweep_cfg.threads, "Worker threads (0 = all cores)");
    sweep->add_option("--out", sweep_out, "Directory for aggregates.csv / aggregates.json");
    sweep->add_option("--log", sweep_log, "Write agent-level decisions to this CSV");
    sweep->add_flag("--json", sweep_cfg.json, "Print JSON instead of CSV");

    std::string log_path;
    std::string model = "is_true";
    bool mixture = false, analyze_json = false;
    auto* analyze = app.add_subcommand("analyze", "Fit a logistic model to a decision log");
    analyze->add_option("--log", log_path, "Decision-log CSV from simulate/sweep")->required();
    analyze->add_option("--model", model, "is_true | ra | mut_ins")->capture_default_str();
    analyze->add_flag("--mixture", mixture, "Also estimate psi, lambda, phi and rho");
    analyze->add_flag("--json", analyze_json, "Emit JSON instead of CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        if (!app.get_subcommands().empty()) out << app.get_subcommands().front()->help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kInvalidInput;
    }

    auto finish_cfg = [](RunConfig& cfg, const std::string& dir, const std::string& log) {
        if (!dir.empty()) cfg.out_dir = dir;
        if (!log.empty()) cfg.log_path = log;
    };

    try {
        if (*solve) {
            GameParams g(solve_game.n, solve_game.p, solve_game.mu, solve_game.tau,
                         Mechanism::Crowdfunding, solve_game.q);
            return cmd_solve(g, out);
        }
        if (*replicate)
            return cmd_replicate(out, tolerance >= 0 ? std::optional(tolerance) : std::nullopt,
                                 replicate_json);
        if (*simulate) {
            finish_cfg(sim_cfg, sim_out, sim_log);
            std::vector<Scenario> d;
            if (!sim_config.empty()) {
                d = load_config(sim_config);
                if (simulate->count("--reps")) sim_cfg.replications = sim_reps;
            } else {
                GameParams g(sim_game.n, sim_game.p, sim_game.mu, sim_game.tau,
                             mechanism_from_string(sim_game.mechanism), sim_game.q);
                d.push_back({g, to_behavior(sim_behavior), sim_reps, sim_cfg.seed, "cli"});
            }
            return cmd_simulate(std::move(d), sim_cfg, out);
        }
        if (*sweep) {
            finish_cfg(sweep_cfg, sweep_out, sweep_log);
            std::vector<Scenario> d;
            if (!sweep_config.empty()) {
                d = load_config(sweep_config);
                if (sweep->count("--reps")) sweep_cfg.replications = sweep_reps;
            } else if (design == "paper-grid") {
                d = paper_grid(sweep_reps, sweep_cfg.seed, to_behavior(sweep_behavior));
            } else {
                throw DomainError("unknown design \"" + design + "\" (available: paper-grid)");
            }
            return cmd_simulate(std::move(d), sweep_cfg, out);
        }
        if (*analyze)
            return cmd_analyze(log_path, outcome_from_string(model), mixture, analyze_json, out);
    } catch (const DomainError& e) {
        err << "invalid input: " << e.what() << '\n';
        return kInvalidInput;
    } catch (const InconsistentMixture& e) {
        err << "invalid input: " << e.what() << '\n';
        return kInvalidInput;
    } catch (const RankDeficientDesign& e) {
        err << "invalid input: " << e.what() << '\n';
        return kInvalidInput;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kInternalError;
    }
    return kInternalError;
}

}  // namespace cfgame::cli
