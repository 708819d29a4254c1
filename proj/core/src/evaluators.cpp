#include "cbo/evaluators.hpp"

#include "cbo/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace cbo {

namespace {

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ','))
        out.push_back(cell);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

std::string trim(std::string s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

double parse_number(const std::string& text, std::size_t row, std::string_view column)
{
    const std::string t = trim(text);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
        throw Error(ErrorKind::data, "row " + std::to_string(row) + ": column '" +
                                         std::string(column) + "' is not a number: '" + t + "'");
    if (!std::isfinite(value))
        throw Error(ErrorKind::data, "row " + std::to_string(row) + ": column '" +
                                         std::string(column) + "' is not finite");
    return value;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                               std::vector<std::string>& header)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line))
        throw Error(ErrorKind::data, "'" + path.string() + "' is empty");
    header = split_csv_line(trim(line));
    for (auto& h : header)
        h = trim(h);
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (trim(line).empty())
            continue;
        rows.push_back(split_csv_line(trim(line)));
    }
    return rows;
}

std::string join(const std::vector<std::string>& items)
{
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i)
        out += (i ? ", " : "") + items[i];
    return out;
}

} // namespace

std::string format_full(double value)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::string iteration_tag(std::size_t iteration)
{
    return iteration == 0 ? "doe" : "bo_iter_" + std::to_string(iteration);
}

void Dataset::append(const ParameterSpace& space, Observation obs)
{
    if (!std::isfinite(obs.k) || !std::isfinite(obs.v))
        throw Error(ErrorKind::data, "observation values must be finite");
    const UnitPoint u = space.to_unit(obs.x);
    if (contains_close(space, u))
        throw Error(ErrorKind::degenerate_data, "observation duplicates an existing dataset row");
    rows_.push_back(std::move(obs));
}

bool Dataset::contains_close(const ParameterSpace& space, const UnitPoint& u) const
{
    for (const auto& row : rows_)
        if ((space.to_unit(row.x).coords() - u.coords()).norm() < kDuplicateTolerance)
            return true;
    return false;
}

std::vector<UnitPoint> Dataset::unit_inputs(const ParameterSpace& space) const
{
    std::vector<UnitPoint> out;
    out.reserve(rows_.size());
    for (const auto& row : rows_)
        out.push_back(space.to_unit(row.x));
    return out;
}

std::vector<double> Dataset::objective_values() const
{
    std::vector<double> out;
    out.reserve(rows_.size());
    for (const auto& row : rows_)
        out.push_back(row.k);
    return out;
}

std::vector<double> Dataset::constraint_values() const
{
    std::vector<double> out;
    out.reserve(rows_.size());
    for (const auto& row : rows_)
        out.push_back(row.v);
    return out;
}

Evaluation proxy_prechamber(const Eigen::VectorXd& x)
{
    const UnitPoint u = prechamber_space().to_unit(x);
    const double u1 = u[0], u2 = u[1], u3 = u[2];
    Evaluation e;
    e.k = 60.0 + 220.0 * std::exp(-(u2 - 0.33) * (u2 - 0.33) / 0.08) * (0.4 + 0.6 * u1 * u3);
    e.v = 12.0 + 18.0 * std::exp(-(u2 - 0.25) * (u2 - 0.25) / 0.10) * (0.5 + 0.5 * u1);
    return e;
}

Evaluation benchmark_quadratic(const Eigen::VectorXd& x)
{
    const UnitPoint u = default_space(BuiltinEvaluator::quadratic).to_unit(x);
    const double x1 = u[0], x2 = u[1];
    return {-(x1 - 0.7) * (x1 - 0.7) - (x2 - 0.7) * (x2 - 0.7), x1 + x2};
}

std::string_view to_string(BuiltinEvaluator e)
{
    return e == BuiltinEvaluator::proxy ? "proxy" : "quadratic";
}

BuiltinEvaluator parse_evaluator(std::string_view name)
{
    if (name == "proxy")
        return BuiltinEvaluator::proxy;
    if (name == "quadratic")
        return BuiltinEvaluator::quadratic;
    throw Error(ErrorKind::invalid_argument, "unknown evaluator '" + std::string(name) + "'");
}

EvaluatorFn make_evaluator(BuiltinEvaluator e)
{
    if (e == BuiltinEvaluator::proxy)
        return proxy_prechamber;
    return benchmark_quadratic;
}

ParameterSpace default_space(BuiltinEvaluator e)
{
    if (e == BuiltinEvaluator::proxy)
        return prechamber_space();
    return ParameterSpace({{"x1", 0.0, 1.0}, {"x2", 0.0, 1.0}});
}

double default_threshold(BuiltinEvaluator e)
{
    return e == BuiltinEvaluator::proxy ? 25.0 : 1.0;
}

std::string proposal_id(std::size_t iteration, std::size_t j)
{
    return "iter" + std::to_string(iteration) + "_" + std::to_string(j);
}

std::filesystem::path proposals_file(const std::filesystem::path& dir, std::size_t iteration)
{
    return dir / ("proposals_iter" + std::to_string(iteration) + ".csv");
}

std::filesystem::path write_proposals(const std::filesystem::path& dir,
                                      const ParameterSpace& space,
                                      std::span<const Eigen::VectorXd> batch,
                                      std::size_t iteration)
{
    if (batch.empty())
        throw Error(ErrorKind::invalid_argument, "cannot write an empty proposal batch");
    for (const auto& x : batch)
        space.to_unit(x);  // bounds check

    const auto path = proposals_file(dir, iteration);
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
    out << "id";
    for (const auto& d : space.dims())
        out << ',' << d.name;
    out << '\n';
    for (std::size_t j = 0; j < batch.size(); ++j) {
        out << proposal_id(iteration, j);
        for (Eigen::Index i = 0; i < batch[j].size(); ++i)
            out << ',' << format_full(batch[j][i]);
        out << '\n';
    }
    out.flush();
    if (!out)
        throw Error(ErrorKind::io, "failed writing '" + path.string() + "'");
    return path;
}

std::vector<ProposalRow> read_proposals(const std::filesystem::path& path,
                                        const ParameterSpace& space)
{
    std::vector<std::string> header;
    const auto rows = read_csv(path, header);
    std::vector<std::string> expected{"id"};
    for (const auto& name : space.names())
        expected.push_back(name);
    if (header != expected)
        throw Error(ErrorKind::protocol, "proposal header must be '" + join(expected) + "'");
    std::vector<ProposalRow> out;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != expected.size())
            throw Error(ErrorKind::data, "row " + std::to_string(r + 1) + " has wrong column count");
        ProposalRow p{trim(rows[r][0]), Eigen::VectorXd(static_cast<Eigen::Index>(space.size()))};
        for (std::size_t i = 0; i < space.size(); ++i)
            p.x[static_cast<Eigen::Index>(i)] = parse_number(rows[r][i + 1], r + 1, expected[i + 1]);
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<ResultRow> read_results(const std::filesystem::path& path,
                                    std::span<const std::string> outstanding)
{
    std::vector<std::string> header;
    const auto rows = read_csv(path, header);
    if (header != std::vector<std::string>{"id", "k", "v_mag"})
        throw Error(ErrorKind::protocol, "results header must be 'id,k,v_mag'");

    std::vector<ResultRow> out;
    std::map<std::string, std::size_t> seen;
    std::vector<std::string> duplicates;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != 3)
            throw Error(ErrorKind::data, "row " + std::to_string(r + 1) + " has wrong column count");
        ResultRow row{trim(rows[r][0]), parse_number(rows[r][1], r + 1, "k"),
                      parse_number(rows[r][2], r + 1, "v_mag")};
        if (!seen.emplace(row.id, r).second)
            duplicates.push_back(row.id);
        out.push_back(std::move(row));
    }

    const std::set<std::string> want(outstanding.begin(), outstanding.end());
    std::vector<std::string> missing, extra;
    for (const auto& id : want)
        if (!seen.contains(id))
            missing.push_back(id);
    for (const auto& [id, r] : seen)
        if (!want.contains(id))
            extra.push_back(id);
    if (!missing.empty() || !extra.empty() || !duplicates.empty()) {
        std::string msg = "results do not match outstanding proposals;";
        if (!missing.empty())
            msg += " missing: " + join(missing) + ";";
        if (!extra.empty())
            msg += " unexpected: " + join(extra) + ";";
        if (!duplicates.empty())
            msg += " duplicated: " + join(duplicates) + ";";
        throw Error(ErrorKind::protocol, msg);
    }
    return out;
}

void write_results(const std::filesystem::path& path, std::span<const ResultRow> rows)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
    out << "id,k,v_mag\n";
    for (const auto& r : rows)
        out << r.id << ',' << format_full(r.k) << ',' << format_full(r.v) << '\n';
    out.flush();
    if (!out)
        throw Error(ErrorKind::io, "failed writing '" + path.string() + "'");
}

} // namespace cbo
