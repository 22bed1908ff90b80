#pragma once

// Control variables and design matrices for the citation / team models.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "atyp/corpus.hpp"
#include "atyp/metrics.hpp"

namespace atyp {

// Column labels shared by builders, fits and reports.
namespace col {
inline constexpr const char* kIntercept = "Intercept";
inline constexpr const char* kMultiDataset = "binary_UsingMultipleDataset";
inline constexpr const char* kAtypicality = "Atypicality_of_datasets";
inline constexpr const char* kTopicAtypicality = "Topic_atypicality";
inline constexpr const char* kPaperNovelty = "Paper_novelty";
inline constexpr const char* kNumDatasetsLog = "NumDatasets_log";
inline constexpr const char* kDataUseFrequencyLog = "Data_use_frequency_log";
inline constexpr const char* kNumAuthorLog = "NumAuthor_log";
inline constexpr const char* kAuthorExperienceLog = "AuthorExperience_log";
inline constexpr const char* kImpactFactorLog = "ImpactFactor_log";
// Dataset atypicality z-scored over the multi-dataset rows, 0 on
// single-dataset rows.
inline constexpr const char* kAtypicalityMulti = "Atypicality_x_multi";
}  // namespace col

inline constexpr double kRecognitionOffset = 0.01;
inline constexpr double kImpactOffset = 0.01;

// Right-closed year bins (lower, u0], (u0, u1], ... The first bin is the
// reference category and gets no dummy.
struct YearBinEdges {
    int lower = 1930;
    std::vector<int> uppers = {1974, 1979, 1984, 1989, 1994, 1999, 2004, 2009, 2014, 2019};

    std::size_t dummy_count() const { return uppers.empty() ? 0 : uppers.size() - 1; }
    std::string label(std::size_t dummy) const;  // "Year_bin[T.(1974, 1979]]"
};

struct YearOutOfRangeError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

// One 0/1 entry per non-reference bin. Throws YearOutOfRangeError.
std::vector<double> year_bins(int year, const YearBinEdges& edges = {});

struct PercentileUndefinedError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline constexpr std::size_t kMinHitPopulation = 20;

// 1 iff the 3-year citation count strictly exceeds the nearest-rank 95th
// percentile over all papers that have one. Papers without a 3-year count are
// absent from the map.
std::map<std::string, int> hit_flag(const Corpus& corpus);

// Number of papers using each dataset.
std::map<std::string, std::size_t> dataset_use_counts(const Corpus& corpus);

enum class ModelSelector {
    DataComb,             // citations ~ multi-dataset flag + controls (all papers)
    Atypicality,          // citations ~ dataset atypicality + novelty + controls (>= 2 datasets)
    Topic,                // adds topic atypicality (>= 2 datasets, >= 2 topics)
    Hit,                  // top-5% hit flag, atypicality covariates (>= 2 datasets)
    Altmetric,            // altmetric mentions, atypicality covariates (>= 2 datasets, post-2010)
    TeamSizeLogit,        // multi-dataset flag ~ team size
    TeamExperienceLogit,  // multi-dataset flag ~ team experience
    TeamSizeOls,          // dataset atypicality ~ team size (>= 2 datasets)
    TeamExperienceOls,    // dataset atypicality ~ team experience (>= 2 datasets)
    Custom,               // caller-chosen covariates and outcome
};

const char* selector_name(ModelSelector s);
ModelSelector selector_from_name(const std::string& name);

struct FeatureSpec {
    ModelSelector selector = ModelSelector::DataComb;
    CitationWindow window = CitationWindow::Y3;
    AltmetricChannel channel = AltmetricChannel::Wikipedia;
    // Optional publication-year filter [from, to).
    std::optional<int> year_from;
    std::optional<int> year_to;
    YearBinEdges year_edges;
    int altmetric_after = 2010;  // Altmetric rows need year > this
    bool include_year_bins = true;
    bool include_disciplines = true;
    // Constant non-intercept columns are collinear with the intercept.
    bool drop_constant_columns = true;

    // Custom selector only.
    std::vector<std::string> covariates;
    std::string outcome = "citations";  // citations | hit | multi_dataset | atypicality | altmetric
    std::size_t min_datasets = 1;
};

struct FeatureMetadata {
    std::string selector;
    std::string population;
    std::size_t population_count = 0;
    std::size_t dropped_count = 0;
    std::map<std::string, std::size_t> drop_reasons;
    std::vector<std::string> reference_categories;
    std::vector<std::string> dropped_constant_columns;
    std::map<std::string, std::string> transforms;
};

struct EmptyPopulationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct FeatureTable {
    std::vector<std::string> row_ids;
    std::string outcome_name;
    std::vector<double> outcome;
    std::vector<std::string> column_names;
    std::vector<std::vector<double>> columns;  // column-major, each row_ids.size() long
    FeatureMetadata meta;

    std::size_t rows() const { return row_ids.size(); }
    std::optional<std::size_t> column_index(const std::string& name) const;
    const std::vector<double>& column(const std::string& name) const;
};

// Raw scores keyed by paper; any of them may be null when the selector does
// not need it.
struct ScoreInputs {
    const ScoreSet* dataset = nullptr;
    const ScoreSet* topic = nullptr;
    const ScoreSet* novelty = nullptr;
};

FeatureTable build_features(const Corpus& corpus, const ScoreInputs& scores, const FeatureSpec& spec);

void write_feature_table(const FeatureTable& table, const std::filesystem::path& csv_path,
                         const std::filesystem::path& meta_path);

}  // namespace atyp
