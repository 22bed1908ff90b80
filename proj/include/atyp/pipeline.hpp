#pragma once

// End-to-end orchestration: ingest -> score -> features -> fits -> matching
// -> report bundle. Each stage writes the documented file formats so stages
// can also be run one at a time from the command line.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "atyp/corpus.hpp"
#include "atyp/features.hpp"
#include "atyp/glm.hpp"
#include "atyp/matching.hpp"
#include "atyp/metrics.hpp"

namespace atyp {

struct StageError : std::runtime_error {
    StageError(std::string stage, const std::string& what)
        : std::runtime_error("[" + stage + "] " + what), stage(std::move(stage)) {}
    std::string stage;
};

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ModelRun {
    std::string name;
    FeatureSpec features;
    ModelSpec model;
};

struct MatchingConfig {
    bool enabled = true;
    std::vector<CitationWindow> windows = {CitationWindow::Y3, CitationWindow::Y5, CitationWindow::Y10};
    CountMatchOptions count;
};

struct PipelineConfig {
    std::filesystem::path corpus_dir;
    std::filesystem::path out_dir;
    std::vector<ScoreMode> modes = {ScoreMode::Dataset, ScoreMode::Topic, ScoreMode::PaperNovelty};
    std::vector<ModelRun> models;
    MatchingConfig matching;
    std::optional<std::uint64_t> seed;
    ScoringOptions scoring;
    std::optional<int> recompute_impact_year;

    // Throws ConfigError (missing paths, matching without a seed, ...).
    void check() const;
};

inline constexpr double kDefaultAlpha = 1.0;
inline constexpr double kTopicAlpha = 0.25;

// The three headline citation models: data combination, dataset
// atypicality, topic atypicality. Without `alpha` the topic model uses
// kTopicAlpha and the others kDefaultAlpha.
std::vector<ModelRun> default_models(std::optional<double> alpha = std::nullopt,
                                     CitationWindow window = CitationWindow::Y3);

// Model entry of a spec file, see README for the schema.
ModelRun model_from_json(const nlohmann::json& j, std::optional<double> default_alpha, CitationWindow default_window);

// Reads a spec file into `config` (models, modes, matching, seed, scoring).
void apply_spec_file(PipelineConfig& config, const std::filesystem::path& spec_path, std::optional<double> default_alpha,
                     CitationWindow default_window);

struct ScoreBundle {
    std::optional<ScoreSet> dataset;
    std::optional<ScoreSet> topic;
    std::optional<ScoreSet> novelty;
    std::vector<std::string> warnings;

    ScoreInputs inputs() const;
};

ScoreBundle compute_scores(const Corpus& corpus, const std::vector<ScoreMode>& modes, const ScoringOptions& opts);

// Normalizes over the multi-entity population when possible; otherwise the
// normalized column stays empty and a warning is returned.
std::string scores_to_csv(const ScoreSet& set, std::vector<std::string>* warnings = nullptr);

struct ModelOutcome {
    std::string name;
    FeatureTable table;
    FitResult fit;
};

ModelOutcome run_model(const Corpus& corpus, const ScoreBundle& scores, const ModelRun& run);

nlohmann::ordered_json validation_to_json(const ValidationReport& r);
nlohmann::ordered_json evaluation_to_json(const PairEvaluation& ev);

struct PipelineResult {
    std::vector<std::string> files;  // relative to out_dir, sorted
    std::vector<std::pair<std::string, bool>> models;  // name, converged
};

// Writes the full report bundle and manifest.json under config.out_dir.
PipelineResult run_pipeline(const PipelineConfig& config);

}  // namespace atyp
