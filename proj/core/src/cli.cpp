#include "cbo/cli.hpp"

#include "cbo/campaign.hpp"
#include "cbo/report.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace cbo {

namespace fs = std::filesystem;

int exit_code_for(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::invalid_argument: return exit_usage;
    case ErrorKind::protocol: return exit_protocol;
    case ErrorKind::numeric: return exit_numeric;
    case ErrorKind::io: return exit_io;
    case ErrorKind::invalid_state: return exit_invalid_state;
    case ErrorKind::bounds_violation:
    case ErrorKind::degenerate_data:
    case ErrorKind::data:
    case ErrorKind::parse:
    case ErrorKind::unsupported_version: return exit_data;
    }
    return exit_failure;
}

namespace {

constexpr const char* kStateFile = "state.json";

struct BudgetFlags {
    std::optional<std::size_t> raw_samples;
    std::optional<std::size_t> restarts;
    std::optional<std::size_t> max_iters;
    std::optional<double> tol;

    void attach(CLI::App* app)
    {
        app->add_option("--raw-samples", raw_samples, "Quasi-random batches scored before refinement");
        app->add_option("--restarts", restarts, "Local refinements started from the best raw batches");
        app->add_option("--max-iters", max_iters, "Compass-search sweeps per restart");
        app->add_option("--tol", tol, "Relative improvement below which a move is rejected");
    }

    void apply(OptimizerBudget& b) const
    {
        if (raw_samples)
            b.raw_samples = *raw_samples;
        if (restarts)
            b.restarts = *restarts;
        if (max_iters)
            b.max_iters_per_restart = *max_iters;
        if (tol)
            b.convergence_tol = *tol;
        b.validate();
    }
};

fs::path campaign_dir(const std::optional<std::string>& flag)
{
    if (flag)
        return *flag;
    if (const char* env = std::getenv(kCampaignDirEnv); env != nullptr && *env != '\0')
        return env;
    return fs::current_path();
}

CampaignState load_from(const fs::path& dir)
{
    const fs::path path = dir / kStateFile;
    if (!fs::exists(path))
        throw Error(ErrorKind::invalid_state, "no campaign in '" + dir.string() + "' (run `init` first)");
    return load_state(path);
}

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
    out << text;
}

void print_status(const CampaignState& s, std::ostream& out)
{
    out << "iteration " << s.iteration << ", " << s.dataset.size() << " observations";
    if (s.awaiting_results())
        out << ", " << s.pending.size() << " proposals pending ("
            << proposals_file(".", s.pending_stage).filename().string() << ")";
    out << '\n';
}

void emit_report(const CampaignState& s, const fs::path& dir, std::ostream& out)
{
    if (s.dataset.empty()) {
        out << "no observations yet\n";
        return;
    }
    const ResultTable cumulative = emit_table(s, TraceView::cumulative);
    const ResultTable per_batch = emit_table(s, TraceView::per_batch);
    write_file(dir / "table.csv", table_csv(cumulative));
    write_file(dir / "table_per_batch.csv", table_csv(per_batch));
    out << table_text(cumulative) << '\n' << table_text(per_batch);
    const ProgressTrace trace = best_so_far(s);
    if (!trace.best_row) {
        std::size_t closest = 0;
        for (std::size_t i = 1; i < s.dataset.size(); ++i)
            if (s.dataset[i].v < s.dataset[closest].v)
                closest = i;
        out << "no feasible observation (|v| <= " << s.acq.constraint_threshold
            << "); smallest |v| so far is " << s.dataset[closest].v << " at row " << closest << '\n';
    }
    for (const auto& h : s.history)
        if (h.feasibility_only)
            out << "iteration " << h.iteration << " maximized feasibility only (no incumbent)\n";
}

} // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Constrained batch Bayesian optimization campaigns", "cbo"};
    app.require_subcommand(1);

    std::optional<std::string> dir_flag;
    app.add_option("--dir", dir_flag,
                   std::string("Campaign directory (default: $") + kCampaignDirEnv + " or the working directory)");

    // init
    auto* init_cmd = app.add_subcommand("init", "Create a campaign from a JSON config file");
    std::string config_path;
    bool force = false;
    init_cmd->add_option("--config", config_path, "Campaign config (JSON)")->required();
    init_cmd->add_flag("--force", force, "Replace an existing campaign");

    // propose
    auto* propose_cmd = app.add_subcommand("propose", "Fit surrogates and write the next proposal batch");
    BudgetFlags propose_budget;
    propose_budget.attach(propose_cmd);

    // ingest
    auto* ingest_cmd = app.add_subcommand("ingest", "Add evaluated results for the pending proposals");
    std::string results_path;
    ingest_cmd->add_option("results", results_path, "CSV with header id,k,v_mag")->required();

    // evaluate
    auto* evaluate_cmd =
        app.add_subcommand("evaluate", "Evaluate pending proposals with a built-in function");
    std::string evaluate_with = "proxy";
    evaluate_cmd->add_option("--evaluator", evaluate_with, "proxy | quadratic")
        ->check(CLI::IsMember({"proxy", "quadratic"}));

    // run
    auto* run_cmd = app.add_subcommand("run", "Run an embedded campaign end to end");
    std::string run_evaluator = "proxy";
    std::size_t iters = 3;
    std::optional<std::size_t> doe, q, mc_samples;
    std::optional<std::uint64_t> seed;
    std::optional<double> threshold, beta;
    std::optional<std::string> acq_kind, batch_mode, run_config;
    bool resume = false;
    run_cmd->add_option("--evaluator", run_evaluator, "proxy | quadratic")
        ->check(CLI::IsMember({"proxy", "quadratic"}));
    run_cmd->add_option("--iters", iters, "BO iterations to run")->capture_default_str();
    run_cmd->add_option("--doe", doe, "Initial Latin hypercube size (default 10)");
    run_cmd->add_option("--q", q, "Batch size (default 5)");
    run_cmd->add_option("--seed", seed, "Campaign seed (default 0)");
    run_cmd->add_option("--threshold", threshold, "Constraint threshold on |v|");
    run_cmd->add_option("--mc-samples", mc_samples, "Monte-Carlo samples (default 1024)");
    run_cmd->add_option("--acq", acq_kind, "cei | ucb")->check(CLI::IsMember({"cei", "ucb"}));
    run_cmd->add_option("--beta", beta, "UCB exploration weight");
    run_cmd->add_option("--batch-mode", batch_mode, "joint | sequential")
        ->check(CLI::IsMember({"joint", "sequential"}));
    run_cmd->add_option("--config", run_config, "Start from a config file instead of defaults");
    run_cmd->add_flag("--resume", resume, "Continue the campaign in the directory");
    run_cmd->add_flag("--force", force, "Replace an existing campaign");
    BudgetFlags run_budget;
    run_budget.attach(run_cmd);

    // report
    auto* report_cmd = app.add_subcommand("report", "Write and print the best-so-far tables");

    // slices
    auto* slices_cmd = app.add_subcommand("slices", "Write surrogate slices through the incumbent");
    std::size_t resolution = kDefaultSliceResolution;
    slices_cmd->add_option("--resolution", resolution, "Points per slice")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        const fs::path dir = campaign_dir(dir_flag);
        const fs::path state_path = dir / kStateFile;

        if (init_cmd->parsed()) {
            const CampaignConfig config = load_config(config_path);
            if (fs::exists(state_path) && !force)
                throw Error(ErrorKind::invalid_state,
                            "'" + state_path.string() + "' exists (use --force to replace)");
            fs::create_directories(dir);
            std::optional<EvaluatorFn> fn;
            if (config.evaluator)
                fn = make_evaluator(*config.evaluator);
            const CampaignState s = init_campaign(config, fn ? &*fn : nullptr);
            if (s.awaiting_results())
                out << "wrote " << write_pending(s, dir).string() << '\n';
            save_state(s, state_path);
            print_status(s, out);
        } else if (propose_cmd->parsed()) {
            CampaignState s = load_from(dir);
            propose_budget.apply(s.budget);
            s = step(s, nullptr);
            out << "wrote " << write_pending(s, dir).string() << '\n';
            save_state(s, state_path);
            print_status(s, out);
        } else if (ingest_cmd->parsed()) {
            const CampaignState before = load_from(dir);
            const CampaignState s = ingest_file(before, results_path);
            save_state(s, state_path);
            print_status(s, out);
        } else if (evaluate_cmd->parsed()) {
            const CampaignState s = load_from(dir);
            if (!s.awaiting_results())
                throw Error(ErrorKind::invalid_state, "no proposals are pending");
            const EvaluatorFn fn = make_evaluator(parse_evaluator(evaluate_with));
            std::vector<ResultRow> rows;
            for (const auto& p : s.pending) {
                const Evaluation e = fn(s.space.from_unit(p.u));
                rows.push_back({p.id, e.k, e.v});
            }
            const fs::path path = dir / ("results_iter" + std::to_string(s.pending_stage) + ".csv");
            write_results(path, rows);
            out << "wrote " << path.string() << '\n';
        } else if (run_cmd->parsed()) {
            const BuiltinEvaluator which = parse_evaluator(run_evaluator);
            const EvaluatorFn fn = make_evaluator(which);
            CampaignState s;
            if (resume) {
                s = load_from(dir);
                if (s.awaiting_results())
                    throw Error(ErrorKind::invalid_state, "campaign awaits external results");
                run_budget.apply(s.budget);
            } else {
                if (fs::exists(state_path) && !force)
                    throw Error(ErrorKind::invalid_state,
                                "'" + state_path.string() + "' exists (use --resume or --force)");
                CampaignConfig config;
                if (run_config) {
                    config = load_config(*run_config);
                } else {
                    config.space = default_space(which);
                    config.acq.constraint_threshold = default_threshold(which);
                }
                config.evaluator = which;
                if (doe)
                    config.doe_n = *doe;
                if (q)
                    config.acq.batch_size = *q;
                if (seed)
                    config.seed = *seed;
                if (threshold)
                    config.acq.constraint_threshold = *threshold;
                if (mc_samples)
                    config.acq.mc_samples = *mc_samples;
                if (acq_kind)
                    config.acq.kind = parse_acquisition_kind(*acq_kind);
                if (beta)
                    config.acq.ucb_beta = *beta;
                if (batch_mode)
                    config.acq.batch_mode = parse_batch_mode(*batch_mode);
                run_budget.apply(config.budget);
                fs::create_directories(dir);
                s = init_campaign(config, &fn);
                save_state(s, state_path);
            }
            for (std::size_t i = 0; i < iters; ++i) {
                s = run_embedded(std::move(s), fn, 1);
                save_state(s, state_path);
            }
            print_status(s, out);
            emit_report(s, dir, out);
        } else if (report_cmd->parsed()) {
            const CampaignState s = load_from(dir);
            print_status(s, out);
            emit_report(s, dir, out);
        } else if (slices_cmd->parsed()) {
            const CampaignState s = load_from(dir);
            const SliceReport r = emit_slices(s, resolution);
            for (const auto& p : write_slices(r, s, dir))
                out << "wrote " << p.string() << '\n';
            out << "posterior at x*: mean " << r.at_incumbent.mean << ", std " << r.at_incumbent.std
                << " (prior std " << r.prior_std << ")\n";
        }
    } catch (const Error& e) {
        err << "cbo: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const fs::filesystem_error& e) {
        err << "cbo: " << e.what() << '\n';
        return exit_io;
    } catch (const std::exception& e) {
        err << "cbo: " << e.what() << '\n';
        return exit_failure;
    }
    return exit_ok;
}

} // namespace cbo
