#include "cbo/campaign.hpp"

#include "cbo/errors.hpp"
#include "cbo/qmc.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace cbo {

using nlohmann::json;

namespace {

constexpr std::string_view kStateFormat = "cbo-campaign-state";

enum Stream : std::uint64_t { fit_k = 1, fit_v = 2, proposal = 3, fill = 4 };

std::size_t stage_of(const Observation& obs)
{
    if (obs.tag == "doe" || obs.tag == "manual")
        return 0;
    constexpr std::string_view prefix = "bo_iter_";
    if (obs.tag.starts_with(prefix))
        return std::stoul(obs.tag.substr(prefix.size()));
    return 0;
}

std::optional<std::size_t> feasible_best(const Dataset& data, double threshold,
                                         const std::function<bool(std::size_t)>& include)
{
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!include(i) || !(data[i].v <= threshold))
            continue;
        if (!best || data[i].k > data[*best].k)
            best = i;
    }
    return best;
}

// Replaces candidates that coincide with the dataset or with an earlier candidate
// by fresh quasi-random points.
std::size_t replace_duplicates(const CampaignState& state, std::vector<UnitPoint>& points,
                               std::uint64_t seed)
{
    const std::size_t d = state.space.size();
    std::size_t replaced = 0;
    std::size_t fill_index = 0;
    const Eigen::MatrixXd fill = uniform_points(64 * points.size(), d, seed);
    for (std::size_t j = 0; j < points.size(); ++j) {
        auto clashes = [&](const UnitPoint& u) {
            if (state.dataset.contains_close(state.space, u))
                return true;
            for (std::size_t i = 0; i < j; ++i)
                if ((points[i].coords() - u.coords()).norm() < kDuplicateTolerance)
                    return true;
            return false;
        };
        if (!clashes(points[j]))
            continue;
        do {
            if (fill_index >= static_cast<std::size_t>(fill.rows()))
                throw Error(ErrorKind::numeric, "could not find a non-duplicate candidate");
            points[j] = UnitPoint(fill.row(static_cast<Eigen::Index>(fill_index++)).transpose());
        } while (clashes(points[j]));
        ++replaced;
    }
    return replaced;
}

// JSON helpers ------------------------------------------------------------

std::string_view to_string(LhsPlacement p) { return p == LhsPlacement::random ? "random" : "midpoint"; }

LhsPlacement parse_placement(std::string_view s)
{
    if (s == "random")
        return LhsPlacement::random;
    if (s == "midpoint")
        return LhsPlacement::midpoint;
    throw Error(ErrorKind::invalid_argument, "unknown LHS placement '" + std::string(s) + "'");
}

std::string_view to_string(SamplerKind k) { return k == SamplerKind::sobol ? "sobol" : "uniform"; }

SamplerKind parse_sampler(std::string_view s)
{
    if (s == "sobol")
        return SamplerKind::sobol;
    if (s == "uniform")
        return SamplerKind::uniform;
    throw Error(ErrorKind::invalid_argument, "unknown sampler '" + std::string(s) + "'");
}

json vector_json(const Eigen::VectorXd& v)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out.push_back(v[i]);
    return out;
}

Eigen::VectorXd vector_from(const json& j)
{
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = j.at(i).get<double>();
    return v;
}

json space_json(const ParameterSpace& space)
{
    json out = json::array();
    for (const auto& d : space.dims())
        out.push_back({{"name", d.name}, {"lower", d.lower}, {"upper", d.upper}});
    return out;
}

ParameterSpace space_from(const json& j)
{
    std::vector<Dimension> dims;
    for (const auto& d : j)
        dims.push_back({d.at("name").get<std::string>(), d.at("lower").get<double>(),
                        d.at("upper").get<double>()});
    return ParameterSpace(std::move(dims));
}

json acquisition_json(const AcquisitionConfig& a, std::uint64_t seed)
{
    return {{"kind", to_string(a.kind)},         {"threshold", a.constraint_threshold},
            {"mc_samples", a.mc_samples},        {"q", a.batch_size},
            {"ucb_beta", a.ucb_beta},            {"batch_mode", to_string(a.batch_mode)},
            {"seed", seed}};
}

AcquisitionConfig acquisition_from(const json& j, std::uint64_t& seed)
{
    AcquisitionConfig a;
    a.kind = parse_acquisition_kind(j.value("kind", std::string("cei")));
    a.constraint_threshold = j.value("threshold", a.constraint_threshold);
    a.mc_samples = j.value("mc_samples", a.mc_samples);
    a.batch_size = j.value("q", a.batch_size);
    a.ucb_beta = j.value("ucb_beta", a.ucb_beta);
    a.batch_mode = parse_batch_mode(j.value("batch_mode", std::string("joint")));
    seed = j.value("seed", seed);
    return a;
}

json budget_json(const OptimizerBudget& b)
{
    return {{"raw_samples", b.raw_samples},
            {"restarts", b.restarts},
            {"max_iters", b.max_iters_per_restart},
            {"tol", b.convergence_tol},
            {"raw_sampler", to_string(b.raw_sampler)}};
}

OptimizerBudget budget_from(const json& j)
{
    OptimizerBudget b;
    b.raw_samples = j.value("raw_samples", b.raw_samples);
    b.restarts = j.value("restarts", b.restarts);
    b.max_iters_per_restart = j.value("max_iters", b.max_iters_per_restart);
    b.convergence_tol = j.value("tol", b.convergence_tol);
    b.raw_sampler = parse_sampler(j.value("raw_sampler", std::string("sobol")));
    return b;
}

json hyper_json(const std::optional<GpHyperparameters>& h)
{
    if (!h)
        return nullptr;
    return {{"lengthscales", vector_json(h->lengthscales)},
            {"signal_variance", h->signal_variance},
            {"noise_std", h->noise_std}};
}

std::optional<GpHyperparameters> hyper_from(const json& j)
{
    if (j.is_null())
        return std::nullopt;
    GpHyperparameters h;
    h.lengthscales = vector_from(j.at("lengthscales"));
    h.signal_variance = j.at("signal_variance").get<double>();
    h.noise_std = j.at("noise_std").get<double>();
    return h;
}

template <typename F>
auto parse_guarded(const std::string& what, F&& f)
{
    try {
        return f();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::parse, what + ": " + e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::unsupported_version)
            throw;
        throw Error(ErrorKind::parse, what + ": " + e.what());
    }
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

void CampaignConfig::validate() const
{
    if (doe_n < 2)
        throw Error(ErrorKind::invalid_argument, "DOE needs at least 2 samples");
    if (fit_restarts < 1)
        throw Error(ErrorKind::invalid_argument, "GP fit needs at least one restart");
    acq.validate();
    budget.validate();
    if (evaluator && default_space(*evaluator).size() != space.size())
        throw Error(ErrorKind::invalid_argument, "evaluator dimension does not match the space");
}

FitOptions CampaignState::fit_options() const
{
    FitOptions o;
    o.ard = ard;
    o.restarts = fit_restarts;
    return o;
}

std::uint64_t iteration_seed(std::uint64_t rng_seed, std::size_t iteration) noexcept
{
    return mix_seed(rng_seed, iteration);
}

std::string stage_label(std::size_t stage)
{
    return stage == 0 ? "DoE" : "It" + std::to_string(stage);
}

CampaignState init_campaign(const CampaignConfig& config, const EvaluatorFn* evaluator)
{
    config.validate();
    CampaignState s;
    s.space = config.space;
    s.acq = config.acq;
    s.budget = config.budget;
    s.lhs = config.lhs;
    s.ard = config.ard;
    s.fit_restarts = config.fit_restarts;
    s.doe_n = config.doe_n;
    s.rng_seed = config.seed;
    s.evaluator = config.evaluator;

    const auto design = latin_hypercube(s.space, s.doe_n, iteration_seed(s.rng_seed, 0), s.lhs);
    if (evaluator != nullptr) {
        for (const auto& u : design) {
            Eigen::VectorXd x = s.space.from_unit(u);
            const Evaluation e = (*evaluator)(x);
            s.dataset.append(s.space, {std::move(x), e.k, e.v, iteration_tag(0)});
        }
    } else {
        s.pending_stage = 0;
        for (std::size_t j = 0; j < design.size(); ++j)
            s.pending.push_back({proposal_id(0, j), design[j]});
    }
    return s;
}

FittedModels fit_models(const CampaignState& state, std::uint64_t seed)
{
    const auto inputs = state.dataset.unit_inputs(state.space);
    const auto k = state.dataset.objective_values();
    const auto v = state.dataset.constraint_values();
    const FitOptions options = state.fit_options();
    return {GpModel::fit(inputs, k, Channel::objective, mix_seed(seed, Stream::fit_k), options),
            GpModel::fit(inputs, v, Channel::constraint, mix_seed(seed, Stream::fit_v), options)};
}

CampaignState step(const CampaignState& state, const EvaluatorFn* evaluator)
{
    if (state.awaiting_results())
        throw Error(ErrorKind::invalid_state, "results for " + std::to_string(state.pending.size()) +
                                                  " pending proposals are outstanding");
    if (state.dataset.size() < 2)
        throw Error(ErrorKind::invalid_state, "step needs a completed DOE");

    CampaignState next = state;
    const std::size_t stage = state.iteration + 1;
    const std::uint64_t seed = iteration_seed(state.rng_seed, stage);

    const FittedModels models = fit_models(state, seed);
    ProposedBatch batch = propose_batch(models.k, models.v, state.acq, state.budget,
                                        mix_seed(seed, Stream::proposal));
    const std::size_t replaced = replace_duplicates(state, batch.points, mix_seed(seed, Stream::fill));

    next.hyper_k = models.k.hyperparameters();
    next.hyper_v = models.v.hyperparameters();
    next.history.push_back(
        {stage, batch.value, batch.best_raw_value, batch.feasibility_only, replaced});

    if (evaluator != nullptr) {
        for (const auto& u : batch.points) {
            Eigen::VectorXd x = next.space.from_unit(u);
            const Evaluation e = (*evaluator)(x);
            next.dataset.append(next.space, {std::move(x), e.k, e.v, iteration_tag(stage)});
        }
        next.iteration = stage;
    } else {
        next.pending_stage = stage;
        for (std::size_t j = 0; j < batch.points.size(); ++j)
            next.pending.push_back({proposal_id(stage, j), batch.points[j]});
    }
    return next;
}

CampaignState ingest(const CampaignState& state, std::span<const ResultRow> results)
{
    if (!state.awaiting_results())
        throw Error(ErrorKind::invalid_state, "no proposals are pending");

    std::map<std::string, const ResultRow*> by_id;
    std::vector<std::string> problems;
    for (const auto& r : results) {
        if (!by_id.emplace(r.id, &r).second)
            problems.push_back("duplicated " + r.id);
        if (!std::isfinite(r.k) || !std::isfinite(r.v))
            throw Error(ErrorKind::data, "non-finite result for " + r.id);
    }
    std::set<std::string> pending_ids;
    for (const auto& p : state.pending) {
        pending_ids.insert(p.id);
        if (!by_id.contains(p.id))
            problems.push_back("missing " + p.id);
    }
    for (const auto& [id, row] : by_id)
        if (!pending_ids.contains(id))
            problems.push_back("unexpected " + id);
    if (!problems.empty()) {
        std::string msg = "results do not match pending proposals:";
        for (const auto& p : problems)
            msg += " " + p + ";";
        throw Error(ErrorKind::protocol, msg);
    }

    CampaignState next = state;
    for (const auto& p : state.pending) {
        const ResultRow& r = *by_id.at(p.id);
        next.dataset.append(next.space,
                            {next.space.from_unit(p.u), r.k, r.v, iteration_tag(state.pending_stage)});
    }
    if (state.pending_stage > 0)
        next.iteration = state.pending_stage;
    next.pending.clear();
    next.pending_stage = 0;
    return next;
}

CampaignState ingest_file(const CampaignState& state, const std::filesystem::path& results_csv)
{
    if (!state.awaiting_results())
        throw Error(ErrorKind::invalid_state, "no proposals are pending");
    std::vector<std::string> ids;
    for (const auto& p : state.pending)
        ids.push_back(p.id);
    const auto rows = read_results(results_csv, ids);
    return ingest(state, rows);
}

CampaignState run_embedded(CampaignState state, const EvaluatorFn& evaluator,
                           std::size_t iterations)
{
    auto last_best = [&](const CampaignState& s) -> std::optional<double> {
        const auto inc = s.dataset.empty() ? std::nullopt
                                           : incumbent(s.dataset, s.acq.constraint_threshold);
        return inc ? std::optional<double>(inc->value) : std::nullopt;
    };
    std::optional<double> best = last_best(state);
    for (std::size_t i = 0; i < iterations; ++i) {
        state = step(state, &evaluator);
        const auto now = last_best(state);
        if (best && (!now || *now < *best))
            throw Error(ErrorKind::numeric, "cumulative feasible best decreased");
        best = now;
    }
    return state;
}

ProgressTrace best_so_far(const CampaignState& state)
{
    if (state.dataset.empty())
        throw Error(ErrorKind::invalid_state, "campaign has no observations yet");
    const double t = state.acq.constraint_threshold;
    std::vector<std::size_t> stages(state.dataset.size());
    for (std::size_t i = 0; i < stages.size(); ++i)
        stages[i] = stage_of(state.dataset[i]);

    ProgressTrace trace;
    for (std::size_t stage = 0; stage <= state.iteration; ++stage) {
        trace.cumulative.push_back(
            {stage_label(stage), feasible_best(state.dataset, t, [&](std::size_t i) {
                 return stages[i] <= stage;
             })});
        trace.per_batch.push_back(
            {stage_label(stage), feasible_best(state.dataset, t, [&](std::size_t i) {
                 return stages[i] == stage;
             })});
    }
    trace.best_row = feasible_best(state.dataset, t, [](std::size_t) { return true; });
    return trace;
}

// Persistence -------------------------------------------------------------

std::string config_to_json(const CampaignConfig& c)
{
    json j;
    j["space"] = space_json(c.space);
    j["acquisition"] = acquisition_json(c.acq, c.seed);
    j["budget"] = budget_json(c.budget);
    j["doe"] = {{"n", c.doe_n}, {"placement", to_string(c.lhs)}};
    j["gp"] = {{"ard", c.ard}, {"restarts", c.fit_restarts}};
    j["evaluator"] = c.evaluator ? json(to_string(*c.evaluator)) : json(nullptr);
    return j.dump(2);
}

CampaignConfig config_from_json(const std::string& text)
{
    return parse_guarded("campaign config", [&] {
        const json j = json::parse(text);
        CampaignConfig c;
        if (j.contains("space"))
            c.space = space_from(j.at("space"));
        if (j.contains("acquisition"))
            c.acq = acquisition_from(j.at("acquisition"), c.seed);
        if (j.contains("budget"))
            c.budget = budget_from(j.at("budget"));
        if (j.contains("doe")) {
            c.doe_n = j.at("doe").value("n", c.doe_n);
            c.lhs = parse_placement(j.at("doe").value("placement", std::string("random")));
        }
        if (j.contains("gp")) {
            c.ard = j.at("gp").value("ard", c.ard);
            c.fit_restarts = j.at("gp").value("restarts", c.fit_restarts);
        }
        if (j.contains("evaluator") && !j.at("evaluator").is_null())
            c.evaluator = parse_evaluator(j.at("evaluator").get<std::string>());
        return c;
    });
}

CampaignConfig load_config(const std::filesystem::path& path)
{
    const CampaignConfig c = config_from_json(read_file(path));
    c.validate();
    return c;
}

std::string state_to_json(const CampaignState& s)
{
    json j;
    j["format"] = kStateFormat;
    j["version"] = kStateVersion;
    j["space"] = space_json(s.space);
    j["acquisition"] = acquisition_json(s.acq, s.rng_seed);
    j["budget"] = budget_json(s.budget);
    j["doe"] = {{"n", s.doe_n}, {"placement", to_string(s.lhs)}};
    j["gp"] = {{"kernel", "matern"},
               {"nu", s.kernel_nu},
               {"ard", s.ard},
               {"restarts", s.fit_restarts},
               {"noise_std", kNoiseStd},
               {"hyper_k", hyper_json(s.hyper_k)},
               {"hyper_v", hyper_json(s.hyper_v)}};
    j["evaluator"] = s.evaluator ? json(to_string(*s.evaluator)) : json(nullptr);
    j["iteration"] = s.iteration;

    json rows = json::array();
    for (const auto& o : s.dataset.rows())
        rows.push_back({{"tag", o.tag}, {"x", vector_json(o.x)}, {"k", o.k}, {"v_mag", o.v}});
    j["dataset"] = std::move(rows);

    json pending = json::array();
    for (const auto& p : s.pending)
        pending.push_back({{"id", p.id}, {"u", vector_json(p.u.coords())}});
    j["pending"] = std::move(pending);
    j["pending_stage"] = s.pending_stage;

    json history = json::array();
    for (const auto& h : s.history)
        history.push_back({{"iteration", h.iteration},
                           {"acquisition_value", h.acquisition_value},
                           {"best_raw_value", h.best_raw_value},
                           {"feasibility_only", h.feasibility_only},
                           {"replaced_duplicates", h.replaced_duplicates}});
    j["history"] = std::move(history);
    return j.dump(2);
}

CampaignState state_from_json(const std::string& text)
{
    return parse_guarded("campaign state", [&] {
        const json j = json::parse(text);
        if (j.value("format", std::string()) != kStateFormat)
            throw Error(ErrorKind::parse, "not a campaign state file");
        const int version = j.at("version").get<int>();
        if (version != kStateVersion)
            throw Error(ErrorKind::unsupported_version,
                        "state version " + std::to_string(version) + " (supported: " +
                            std::to_string(kStateVersion) + ")");
        CampaignState s;
        s.space = space_from(j.at("space"));
        s.acq = acquisition_from(j.at("acquisition"), s.rng_seed);
        s.budget = budget_from(j.at("budget"));
        s.doe_n = j.at("doe").at("n").get<std::size_t>();
        s.lhs = parse_placement(j.at("doe").at("placement").get<std::string>());
        const json& gp = j.at("gp");
        s.kernel_nu = gp.at("nu").get<double>();
        if (s.kernel_nu != kMaternNu)
            throw Error(ErrorKind::parse, "only the Matern 5/2 kernel is supported");
        s.ard = gp.at("ard").get<bool>();
        s.fit_restarts = gp.at("restarts").get<std::size_t>();
        s.hyper_k = hyper_from(gp.at("hyper_k"));
        s.hyper_v = hyper_from(gp.at("hyper_v"));
        if (!j.at("evaluator").is_null())
            s.evaluator = parse_evaluator(j.at("evaluator").get<std::string>());
        s.iteration = j.at("iteration").get<std::size_t>();
        for (const auto& r : j.at("dataset"))
            s.dataset.append(s.space, {vector_from(r.at("x")), r.at("k").get<double>(),
                                       r.at("v_mag").get<double>(), r.at("tag").get<std::string>()});
        for (const auto& p : j.at("pending"))
            s.pending.push_back({p.at("id").get<std::string>(), UnitPoint(vector_from(p.at("u")))});
        s.pending_stage = j.at("pending_stage").get<std::size_t>();
        for (const auto& h : j.at("history"))
            s.history.push_back({h.at("iteration").get<std::size_t>(),
                                 h.at("acquisition_value").get<double>(),
                                 h.at("best_raw_value").get<double>(),
                                 h.at("feasibility_only").get<bool>(),
                                 h.at("replaced_duplicates").get<std::size_t>()});
        if (s.pending.empty() && s.dataset.size() != s.doe_n + s.acq.batch_size * s.iteration)
            throw Error(ErrorKind::parse, "dataset size inconsistent with iteration count");
        return s;
    });
}

void save_state(const CampaignState& state, const std::filesystem::path& path)
{
    const std::string text = state_to_json(state);
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error(ErrorKind::io, "cannot write '" + tmp.string() + "'");
        out << text << '\n';
        out.flush();
        if (!out)
            throw Error(ErrorKind::io, "failed writing '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw Error(ErrorKind::io, "cannot replace '" + path.string() + "': " + ec.message());
}

CampaignState load_state(const std::filesystem::path& path)
{
    return state_from_json(read_file(path));
}

std::filesystem::path write_pending(const CampaignState& state, const std::filesystem::path& dir)
{
    if (!state.awaiting_results())
        throw Error(ErrorKind::invalid_state, "no proposals are pending");
    std::vector<Eigen::VectorXd> batch;
    for (const auto& p : state.pending)
        batch.push_back(state.space.from_unit(p.u));
    return write_proposals(dir, state.space, batch, state.pending_stage);
}

} // namespace cbo
