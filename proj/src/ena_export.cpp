#include "ena/ena_export.hpp"

#include <fmt/format.h>

#include <fstream>

namespace ena {

namespace {

std::vector<double> as_list(const Vector& v)
{
    return {v.data(), v.data() + v.size()};
}

Vector as_vector(const nlohmann::json& j)
{
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

std::string output_label(const Vector& out)
{
    std::string s = "(";
    for (Index j = 0; j < out.size(); ++j) s += fmt::format("{}{:.2f}", j ? ", " : "", out(j));
    return s + ")";
}

}  // namespace

const char* to_string(EdgeClass c)
{
    switch (c) {
    case EdgeClass::unlabelled: return "unlabelled";
    case EdgeClass::desired: return "desired";
    case EdgeClass::undesired: return "undesired";
    }
    return "unknown";
}

std::string to_dot(const EnaGraph& graph)
{
    std::string s = "digraph ena {\n  node [shape=circle];\n";
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        const auto& n = graph.nodes[i];
        s += fmt::format("  n{} [label=\"{}\"{}];\n", i, output_label(n.output),
                         n.spurious ? ", style=dashed" : "");
    }
    for (const auto& e : graph.edges) {
        s += fmt::format("  n{} -> n{} [label=\"δ={:.3f}, ν={:.3f}, β={:.3f}\"{}];\n", e.from, e.to, e.threshold,
                         e.volume_ratio, e.beta, e.classification == EdgeClass::undesired ? ", style=dashed" : "");
    }
    return s + "}\n";
}

nlohmann::json graph_to_json(const EnaGraph& graph)
{
    nlohmann::json doc;
    doc["format"] = "ena-graph";
    doc["grid"] = {{"dim", graph.grid.dim},
                   {"edge_length", graph.grid.edge_length},
                   {"points_per_edge", graph.grid.points_per_edge},
                   {"spacing", graph.grid.spacing()}};
    auto& nodes = doc["nodes"] = nlohmann::json::array();
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        const auto& n = graph.nodes[i];
        nodes.push_back({{"id", i},
                         {"location", as_list(n.point.location)},
                         {"output", as_list(n.output)},
                         {"energy", n.point.energy},
                         {"discovered", n.discovered},
                         {"spurious", n.spurious},
                         {"labelable", n.labelable},
                         {"pattern", as_list(n.pattern)},
                         {"lss_dim", n.lss_dim},
                         {"grid_total", n.grid_total},
                         {"grid_home", n.grid_home},
                         {"grid_unresolved", n.grid_unresolved}});
    }
    auto& edges = doc["edges"] = nlohmann::json::array();
    for (const auto& e : graph.edges) {
        const auto& a = graph.nodes[static_cast<std::size_t>(e.from)];
        const auto& b = graph.nodes[static_cast<std::size_t>(e.to)];
        nlohmann::json j{{"from", e.from},
                         {"to", e.to},
                         {"count", e.count},
                         {"threshold", e.threshold},
                         {"volume_ratio", e.volume_ratio},
                         {"beta", e.beta},
                         {"classification", to_string(e.classification)},
                         {"spurious", a.spurious || b.spurious},
                         {"argmin", as_list(e.argmin)}};
        j["delta_th"] = e.delta_th ? nlohmann::json(*e.delta_th) : nlohmann::json(nullptr);
        edges.push_back(std::move(j));
    }
    doc["warnings"] = graph.warnings;
    return doc;
}

EnaGraph graph_from_json(const nlohmann::json& doc)
{
    try {
        EnaGraph g;
        const auto& grid = doc.at("grid");
        g.grid.dim = grid.at("dim").get<Index>();
        g.grid.edge_length = grid.at("edge_length").get<double>();
        g.grid.points_per_edge = grid.at("points_per_edge").get<Index>();
        for (const auto& j : doc.at("nodes")) {
            EnaNode n;
            n.point.location = as_vector(j.at("location"));
            n.point.energy = j.value("energy", 0.0);
            n.output = as_vector(j.at("output"));
            n.discovered = j.value("discovered", false);
            n.spurious = j.value("spurious", false);
            n.labelable = j.value("labelable", false);
            if (j.contains("pattern")) n.pattern = as_vector(j.at("pattern"));
            n.lss_dim = j.value("lss_dim", Index{0});
            n.grid_total = j.value("grid_total", Index{0});
            n.grid_home = j.value("grid_home", Index{0});
            n.grid_unresolved = j.value("grid_unresolved", Index{0});
            g.nodes.push_back(std::move(n));
        }
        for (const auto& j : doc.at("edges")) {
            EnaEdge e;
            e.from = j.at("from").get<Index>();
            e.to = j.at("to").get<Index>();
            e.count = j.value("count", Index{0});
            e.threshold = j.at("threshold").get<double>();
            e.volume_ratio = j.at("volume_ratio").get<double>();
            e.beta = j.at("beta").get<double>();
            const auto c = j.value("classification", std::string{"unlabelled"});
            e.classification = c == "desired" ? EdgeClass::desired
                             : c == "undesired" ? EdgeClass::undesired
                                                : EdgeClass::unlabelled;
            if (j.contains("argmin")) e.argmin = as_vector(j.at("argmin"));
            if (j.contains("delta_th") && !j.at("delta_th").is_null()) e.delta_th = j.at("delta_th").get<double>();
            if (e.from < 0 || e.to < 0 || e.from >= static_cast<Index>(g.nodes.size()) ||
                e.to >= static_cast<Index>(g.nodes.size()))
                throw Error{ErrorKind::io, "graph edge refers to a missing node"};
            g.edges.push_back(std::move(e));
        }
        if (doc.contains("warnings")) g.warnings = doc.at("warnings").get<std::vector<std::string>>();
        return g;
    } catch (const nlohmann::json::exception& e) {
        throw Error{ErrorKind::io, fmt::format("malformed graph document: {}", e.what())};
    }
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out{path, std::ios::binary};
    if (!out) throw Error{ErrorKind::io, fmt::format("cannot write {}", path.string())};
    out << text;
    if (!out) throw Error{ErrorKind::io, fmt::format("write to {} failed", path.string())};
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc)
{
    write_text(path, doc.dump(1) + "\n");
}

nlohmann::json read_json(const std::filesystem::path& path)
{
    std::ifstream in{path};
    if (!in) throw Error{ErrorKind::io, fmt::format("cannot read {}", path.string())};
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error{ErrorKind::io, fmt::format("{}: {}", path.string(), e.what())};
    }
}

}  // namespace ena
