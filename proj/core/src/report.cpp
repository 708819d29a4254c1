#include "cbo/report.hpp"

#include "cbo/errors.hpp"
#include "cbo/qmc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cbo {

namespace {

constexpr std::uint64_t kReportStream = 0x7265706f7274;

std::string fixed2(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
    out << text;
    if (!out)
        throw Error(ErrorKind::io, "failed writing '" + path.string() + "'");
}

} // namespace

ResultTable emit_table(const CampaignState& state, TraceView view)
{
    const ProgressTrace trace = best_so_far(state);
    const auto& stages = view == TraceView::cumulative ? trace.cumulative : trace.per_batch;
    ResultTable table;
    table.view = view;
    table.dims = state.space.names();
    for (const auto& s : stages) {
        TableRow row{s.stage, std::nullopt};
        if (s.row)
            row.best = state.dataset[*s.row];
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::string table_csv(const ResultTable& table)
{
    std::ostringstream out;
    out << "stage,k,v_mag";
    for (const auto& d : table.dims)
        out << ',' << d;
    out << '\n';
    for (const auto& row : table.rows) {
        out << row.stage;
        if (row.best) {
            out << ',' << format_full(row.best->k) << ',' << format_full(row.best->v);
            for (Eigen::Index i = 0; i < row.best->x.size(); ++i)
                out << ',' << format_full(row.best->x[i]);
        } else {
            for (std::size_t i = 0; i < table.dims.size() + 2; ++i)
                out << ',';
        }
        out << '\n';
    }
    return out.str();
}

std::string table_text(const ResultTable& table)
{
    std::vector<std::vector<std::string>> cells;
    std::vector<std::string> header{"", "k", "|v|"};
    header.insert(header.end(), table.dims.begin(), table.dims.end());
    cells.push_back(header);
    for (const auto& row : table.rows) {
        std::vector<std::string> line{row.stage};
        if (row.best) {
            line.push_back(fixed2(row.best->k));
            line.push_back(fixed2(row.best->v));
            for (Eigen::Index i = 0; i < row.best->x.size(); ++i)
                line.push_back(fixed2(row.best->x[i]));
        } else {
            line.resize(header.size(), "-");
        }
        cells.push_back(std::move(line));
    }

    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& line : cells)
        for (std::size_t c = 0; c < line.size(); ++c)
            width[c] = std::max(width[c], line[c].size());

    std::ostringstream out;
    out << (table.view == TraceView::cumulative ? "cumulative feasible best\n"
                                                : "per-batch feasible best\n");
    for (const auto& line : cells) {
        for (std::size_t c = 0; c < line.size(); ++c) {
            if (c == 0)
                out << line[c] << std::string(width[c] - line[c].size(), ' ');
            else
                out << "  " << std::string(width[c] - line[c].size(), ' ') << line[c];
        }
        out << '\n';
    }
    return out.str();
}

GpModel slice_model(const CampaignState& state)
{
    const auto inputs = state.dataset.unit_inputs(state.space);
    const auto k = state.dataset.objective_values();
    return GpModel::fit(inputs, k, Channel::objective,
                        mix_seed(iteration_seed(state.rng_seed, state.iteration), kReportStream),
                        state.fit_options());
}

SliceReport emit_slices(const CampaignState& state, std::size_t resolution)
{
    if (resolution < 2)
        throw Error(ErrorKind::invalid_argument, "slice resolution must be >= 2");
    if (state.dataset.size() < 2)
        throw Error(ErrorKind::invalid_state, "slices need at least 2 observations");
    const auto inc = incumbent(state.dataset, state.acq.constraint_threshold);
    if (!inc)
        throw Error(ErrorKind::invalid_state,
                    "no feasible observation yet; there is no x* to slice through "
                    "(see `report` for the per-stage diagnostics)");

    const GpModel model = slice_model(state);
    SliceReport report;
    report.incumbent = state.dataset[inc->index];
    report.incumbent_x = report.incumbent.x;
    report.hyper = model.hyperparameters();
    report.prior_std = model.standardization().scale * std::sqrt(model.hyperparameters().signal_variance);

    const UnitPoint center = state.space.to_unit(report.incumbent_x);
    report.at_incumbent = model.destandardize(model.posterior(center));

    const std::size_t d = state.space.size();
    for (std::size_t i = 0; i < d; ++i) {
        const auto& dim = state.space.dims()[i];
        SliceGrid mean{dim.name, "mean", {}, {}};
        SliceGrid stdev{dim.name, "std", {}, {}};
        for (std::size_t r = 0; r < resolution; ++r) {
            Eigen::VectorXd u = center.coords();
            u[static_cast<Eigen::Index>(i)] =
                static_cast<double>(r) / static_cast<double>(resolution - 1);
            const UnitPoint p(u);
            const PosteriorGaussian g = model.destandardize(model.posterior(p));
            const double coord = state.space.from_unit(p)[static_cast<Eigen::Index>(i)];
            mean.coords.push_back(coord);
            mean.values.push_back(g.mean);
            stdev.coords.push_back(coord);
            stdev.values.push_back(g.std);
        }
        report.grids.push_back(std::move(mean));
        report.grids.push_back(std::move(stdev));
    }
    return report;
}

std::vector<std::filesystem::path> write_slices(const SliceReport& report,
                                                const CampaignState& state,
                                                const std::filesystem::path& dir)
{
    std::vector<std::filesystem::path> written;
    for (const auto& grid : report.grids) {
        std::ostringstream out;
        out << grid.dim << ",k_" << grid.quantity << '\n';
        for (std::size_t r = 0; r < grid.coords.size(); ++r)
            out << format_full(grid.coords[r]) << ',' << format_full(grid.values[r]) << '\n';
        const auto path = dir / ("slice_" + grid.dim + "_" + grid.quantity + ".csv");
        write_text(path, out.str());
        written.push_back(path);
    }

    std::ostringstream markers;
    markers << "kind";
    for (const auto& name : state.space.names())
        markers << ',' << name;
    markers << ",k,v_mag\n";
    auto emit = [&](std::string_view kind, const Observation& o) {
        markers << kind;
        for (Eigen::Index i = 0; i < o.x.size(); ++i)
            markers << ',' << format_full(o.x[i]);
        markers << ',' << format_full(o.k) << ',' << format_full(o.v) << '\n';
    };
    for (const auto& o : state.dataset.rows())
        emit("train", o);
    emit("incumbent", report.incumbent);
    const auto path = dir / "slice_markers.csv";
    write_text(path, markers.str());
    written.push_back(path);
    return written;
}

} // namespace cbo
