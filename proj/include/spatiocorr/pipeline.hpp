#pragma once

#include "spatiocorr/error.hpp"
#include "spatiocorr/export.hpp"
#include "spatiocorr/ingest.hpp"
#include "spatiocorr/market_effect.hpp"
#include "spatiocorr/seriation.hpp"
#include "spatiocorr/spectra.hpp"
#include "spatiocorr/tracking.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace spatiocorr {

inline constexpr const char* kVersion = "0.1.0";

/// Failure inside one pipeline stage; `window` is empty for panel-level stages.
class StageError : public Error {
public:
    StageError(std::string stage, std::string window, const std::string& message);
    const std::string& stage() const noexcept { return stage_; }
    const std::string& window() const noexcept { return window_; }

private:
    std::string stage_;
    std::string window_;
};

struct RunConfig {
    std::string input;                   // price panel CSV
    std::optional<std::string> national; // national index levels CSV (quarter,value)
    std::optional<std::string> schema;   // CSV schema config file
    std::optional<std::string> cluster_map; // entity,cluster CSV for cluster-sampled absorption
    std::size_t window_size = 60;
    std::size_t null_rounds = 1000;
    NullCriterion null_criterion = NullCriterion::Pooled;
    AnnealSchedule schedule;
    std::size_t restarts = 200;
    int max_consensus_iterations = 10;
    double regime_threshold = 0.25;
    Estimator regime_estimator = Estimator::Ols;
    double v_threshold = 0.05;
    std::optional<double> min_gain;      // box threshold on P; default: critical partial correlation
    double affinity_min_gain = 0.5;
    double alpha = 0.05;
    std::size_t absorption_resamples = 1000;
    TrackingOptions tracking;
    std::optional<std::uint64_t> seed;
    std::string output_dir = "runs";
    bool timestamped = true;             // write into output_dir/run-<UTC timestamp>
    std::size_t threads = 0;             // 0 = hardware concurrency
    bool write_matrices = true;
    bool dump_null = false;
    std::size_t leading_vectors = 5;

    /// Throws InvalidArgument naming the offending field.
    void validate() const;
    Json to_json() const;
    /// Fields absent from `j` keep their current values; unknown keys are an error.
    void merge_json(const Json& j);
    static RunConfig from_file(const std::string& path);
};

enum Stage : unsigned {
    kStageIngest = 1u,
    kStageAnalyze = 2u,
    kStageRegimes = 4u,
    kStageCluster = 8u,
    kStageAll = 15u,
};

std::string stage_list(unsigned stages);

struct RunManifest {
    std::filesystem::path directory;
    Json document;                    // the manifest.json contents
    std::vector<std::string> files;   // relative to directory, sorted
};

/// Runs the selected stages and writes artifacts plus manifest.json.
/// Stage failures are rethrown as StageError.
RunManifest run_pipeline(const RunConfig& config, unsigned stages = kStageAll);

/// Reads manifest.json of a finished run.
RunManifest load_manifest(const std::filesystem::path& run_dir);

/// Writes the plot-ready summary tables under report/ and lists them in the
/// manifest. Throws Error when the run lacks a required stage or file.
std::vector<std::string> report(const std::filesystem::path& run_dir);

} // namespace spatiocorr
