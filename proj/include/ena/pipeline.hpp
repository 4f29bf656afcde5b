#pragma once

// End-to-end run: model -> trajectory -> fixed points -> ENA -> artifact files.

#include "ena/ena_extract.hpp"
#include "ena/flipflop.hpp"
#include "ena/trainer.hpp"

#include <filesystem>
#include <string>

namespace ena {

struct ModelSource {
    std::string kind = "random";  ///< random, design2d, design2k or file
    double b = 0.2;
    double s = 2.0;
    double omega_in = 0.0;  ///< 0 picks the design default
    double coupling = 0.0;
    std::string path;
};

struct RunConfig {
    ModelSource model;
    TaskConfig task;
    EsnBuildParams esn;
    TrainConfig train;
    Index sim_length = 10000;  ///< analysed trajectory length for non-trained sources
    double sim_noise = 0.0;
    FinderConfig finder;
    AggregateConfig aggregate;
    ExtractConfig extraction;
    ThresholdProbeConfig probe;
    std::uint64_t seed = 0;  ///< base for streams not given their own seed
};

nlohmann::json config_to_json(const RunConfig& c);
/// Missing keys keep their defaults.
RunConfig config_from_json(const nlohmann::json& doc);

enum class Stage { config = 2, load = 3, train = 4, simulate = 5, fixed_points = 6, extract = 7, write = 8 };

const char* stage_name(Stage s);

class PipelineError : public Error {
public:
    PipelineError(Stage stage, ErrorKind kind, const std::string& what)
        : Error(kind, std::string{stage_name(stage)} + ": " + what), stage_(stage)
    {
    }
    Stage stage() const noexcept { return stage_; }
    int exit_code() const noexcept { return static_cast<int>(stage_); }

private:
    Stage stage_;
};

struct PipelineSummary {
    EsnModel model;
    Trajectory trajectory;
    std::vector<FixedPoint> fixed_points;
    EnaGraph graph;
    nlohmann::json metrics;
};

/// Writes model.json, traj.csv, fixed_points.json, ena.dot, ena.json and metrics.json into out_dir.
PipelineSummary run_pipeline(const RunConfig& config, const std::filesystem::path& out_dir);

}  // namespace ena
