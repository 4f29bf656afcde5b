#include "ena/trajectory_io.hpp"

#include <fmt/format.h>
#include <fmt/os.h>

#include <charconv>
#include <fstream>
#include <string>
#include <vector>

namespace ena {

namespace {

std::vector<std::string_view> split(std::string_view line)
{
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        fields.push_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

double parse_double(std::string_view s, Index line_no)
{
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw Error{ErrorKind::io, fmt::format("trajectory csv line {}: bad number '{}'", line_no, s)};
    return v;
}

}  // namespace

void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path)
{
    const Index n_i = traj.inputs.cols();
    const Index n_o = traj.outputs.cols();
    const Index n_r = traj.initial_state.size();
    const bool targets = traj.has_targets();
    try {
        auto out = fmt::output_file(path.string());
        out.print("step");
        for (Index j = 1; j <= n_i; ++j) out.print(",u_{}", j);
        if (targets)
            for (Index j = 1; j <= n_o; ++j) out.print(",y_{}", j);
        for (Index j = 1; j <= n_o; ++j) out.print(",z_{}", j);
        for (Index j = 1; j <= n_r; ++j) out.print(",x_{}", j);
        out.print("\n");

        auto row = [&](Index step, auto&& u, auto&& y, auto&& z, auto&& x) {
            out.print("{}", step);
            for (Index j = 0; j < n_i; ++j) out.print(",{}", u(j));
            if (targets)
                for (Index j = 0; j < n_o; ++j) out.print(",{}", y(j));
            for (Index j = 0; j < n_o; ++j) out.print(",{}", z(j));
            for (Index j = 0; j < n_r; ++j) out.print(",{}", x(j));
            out.print("\n");
        };
        const Vector zero_i = Vector::Zero(n_i);
        const Vector zero_o = Vector::Zero(n_o);
        row(0, zero_i, zero_o, zero_o, traj.initial_state);
        for (Index k = 0; k < traj.length(); ++k) {
            auto y = [&](Index j) { return traj.targets(k, j); };
            row(k + 1, traj.inputs.row(k), y, traj.outputs.row(k), traj.states.row(k));
        }
    } catch (const std::system_error& e) {
        throw Error{ErrorKind::io, fmt::format("cannot write {}: {}", path.string(), e.what())};
    }
}

Trajectory read_trajectory_csv(const std::filesystem::path& path)
{
    std::ifstream in{path};
    if (!in) throw Error{ErrorKind::io, fmt::format("cannot read {}", path.string())};
    std::string line;
    if (!std::getline(in, line)) throw Error{ErrorKind::io, fmt::format("{}: empty file", path.string())};

    Index n_i = 0, n_y = 0, n_z = 0, n_r = 0;
    const auto header = split(line);
    if (header.empty() || header[0] != "step") throw Error{ErrorKind::io, "trajectory csv must start with 'step'"};
    for (std::size_t c = 1; c < header.size(); ++c) {
        auto h = header[c];
        if (h.starts_with("u_")) ++n_i;
        else if (h.starts_with("y_")) ++n_y;
        else if (h.starts_with("z_")) ++n_z;
        else if (h.starts_with("x_")) ++n_r;
        else throw Error{ErrorKind::io, fmt::format("unknown trajectory column '{}'", h)};
    }
    const Index width = 1 + n_i + n_y + n_z + n_r;

    std::vector<std::vector<double>> rows;
    Index line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = split(line);
        if (static_cast<Index>(fields.size()) != width)
            throw Error{ErrorKind::io, fmt::format("trajectory csv line {}: {} fields, expected {}", line_no,
                                                   fields.size(), width)};
        std::vector<double> values;
        values.reserve(fields.size());
        for (auto f : fields) values.push_back(parse_double(f, line_no));
        rows.push_back(std::move(values));
    }
    if (rows.empty()) throw Error{ErrorKind::io, "trajectory csv has no initial-state row"};

    const Index steps = static_cast<Index>(rows.size()) - 1;
    Trajectory traj;
    traj.initial_state.resize(n_r);
    traj.inputs.resize(steps, n_i);
    traj.targets.resize(n_y > 0 ? steps : 0, n_y);
    traj.outputs.resize(steps, n_z);
    traj.states.resize(steps, n_r);
    for (Index j = 0; j < n_r; ++j) traj.initial_state(j) = rows[0][1 + n_i + n_y + n_z + j];
    for (Index k = 0; k < steps; ++k) {
        const auto& r = rows[k + 1];
        Index c = 1;
        for (Index j = 0; j < n_i; ++j) traj.inputs(k, j) = r[c++];
        for (Index j = 0; j < n_y; ++j) traj.targets(k, j) = r[c++];
        for (Index j = 0; j < n_z; ++j) traj.outputs(k, j) = r[c++];
        for (Index j = 0; j < n_r; ++j) traj.states(k, j) = r[c++];
    }
    return traj;
}

}  // namespace ena
