#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cae/fusion.hpp"
#include "cae/metrics.hpp"
#include "cae/semantic_space.hpp"
#include "cae/transport.hpp"

namespace cae {

enum class Mode { cae, image_only, noun_only, caption_only, concat, sum, softmax_cae };

std::string_view to_string(Mode m);
Mode mode_from_string(std::string_view s);
bool mode_needs_nouns(Mode m);
bool mode_needs_captions(Mode m);

struct PipelineConfig {
    std::filesystem::path images;
    std::filesystem::path nouns;
    std::filesystem::path captions;
    std::filesystem::path labels;
    /// Final cluster count. Defaults to the number of distinct labels when labels are given.
    std::optional<std::size_t> clusters;
    std::size_t topk = 10;
    std::size_t centers_divisor = 300;
    double epsilon = 0.05;
    double gamma = kDefaultGamma;
    double softmax_temperature = 1.0;
    std::uint64_t seed = 42;
    Mode mode = Mode::cae;
    bool normalize_counterparts = true;
    bool renormalize_fused = true;
    std::size_t threads = 1;
    std::size_t kmeans_restarts = 10;
    std::size_t kmeans_max_iter = 300;
    double kmeans_tol = 1e-4;
    std::size_t sinkhorn_max_iter = 1000;
    double marginal_tol = 1e-6;
    NmiNormalization nmi_normalization = NmiNormalization::arithmetic;
    /// Wall-clock timings make reports non-reproducible, so they are opt-in.
    bool record_timings = false;
    std::filesystem::path out;

    void validate() const;
};

/// Applies one "key = value" setting; keys match the CLI long options with '-' or '_'.
void apply_setting(PipelineConfig& cfg, std::string_view key, std::string_view value);

/// Flat key-value file. Relative paths resolve against the file's directory.
PipelineConfig load_config(const std::filesystem::path& path);

nlohmann::ordered_json config_to_json(const PipelineConfig& cfg);
PipelineConfig config_from_json(const nlohmann::json& j);

/// In-memory inputs; the text banks are optional depending on the mode.
struct PipelineInputs {
    EmbeddingMatrix images;
    std::optional<EmbeddingMatrix> nouns;
    std::optional<EmbeddingMatrix> captions;
    std::optional<LabelVector> labels;
};

PipelineInputs load_inputs(const PipelineConfig& cfg);

struct TextDiagnostics {
    std::size_t selected = 0;
    double marginal_error = 0.0;
    std::size_t iterations = 0;
};

struct Diagnostics {
    std::size_t clusters = 0;
    std::size_t semantic_centers = 0;
    std::optional<TextDiagnostics> noun;
    std::optional<TextDiagnostics> caption;
    std::optional<std::array<double, kNumModalities>> mean_beta;
    double inertia = 0.0;
};

struct ClusteringResult {
    LabelVector assignments;
    std::optional<MetricReport> metrics;
    PipelineConfig config;
    std::vector<std::pair<std::string, double>> timings;
    Diagnostics diagnostics;

    // Intermediate products, kept for the optional exports.
    std::optional<EmbeddingMatrix> features;
    std::optional<FusionWeights> weights;
    std::optional<EmbeddingMatrix> centers;
    std::optional<TextSelection> noun_selection;
    std::optional<TextSelection> caption_selection;
    std::optional<TransportPlan> noun_plan;
    std::optional<TransportPlan> caption_plan;
};

/// Loads the configured files and runs run_on_data.
ClusteringResult run_pipeline(const PipelineConfig& cfg);

/// normalize -> semantic space -> transport + counterparts -> fusion per mode -> k-means -> metrics.
/// Errors carry a "[stage]" prefix.
ClusteringResult run_on_data(const PipelineInputs& inputs, const PipelineConfig& cfg);

/// Writes the JSON report at path and the assignments as LBL1 beside it ("<stem>.assignments.lbl").
void write_report(const ClusteringResult& result, const std::filesystem::path& path);

nlohmann::ordered_json report_to_json(const ClusteringResult& result, const std::string& assignments_path);

/// Writes report.json, its assignments, and any exports the flags ask for into cfg.out.
struct ExportOptions {
    bool fused = false;
    bool beta = false;
    bool plans = false;
    bool space = false;
};
void write_outputs(const ClusteringResult& result, const std::filesystem::path& dir, const ExportOptions& exports);

/// Sweep axes in file order; the grid is their cartesian product, first axis outermost.
struct SweepGrid {
    std::vector<Mode> modes;
    std::vector<std::pair<std::string, std::vector<std::string>>> axes;
};

/// "key = v1, v2, ..." per line. A "mode" line lists the modes to run.
SweepGrid load_sweep(const std::filesystem::path& path);
SweepGrid parse_sweep(std::string_view text);

struct AblationRow {
    Mode mode = Mode::cae;
    std::vector<std::string> values;
    std::optional<MetricReport> metrics;
    double seconds = 0.0;
    std::string error;
};

struct AblationTable {
    std::vector<std::string> axes;
    std::vector<AblationRow> rows;
};

/// Every (mode x grid point) run. Failures are recorded per row. Inputs load once per distinct path.
AblationTable run_ablation_suite(const PipelineConfig& base, const SweepGrid& grid);

/// Same, on preloaded data; path-valued axes are not allowed here.
AblationTable run_ablation_suite(const PipelineInputs& inputs, const PipelineConfig& base, const SweepGrid& grid);

void write_ablation_csv(const AblationTable& table, const std::filesystem::path& path);

}  // namespace cae
