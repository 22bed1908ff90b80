#pragma once

// Rao-Stirling style atypicality scores:
//
//   score = 1 - sum_{i,j} D_ij * P_i * P_j
//
// D is the cosine co-usage similarity of two entities and P the share of the
// entity in the paper. Datasets and topics are weighted uniformly (1/N);
// referenced journals by their share of the paper's references.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "atyp/corpus.hpp"
#include "atyp/simengine.hpp"

namespace atyp {

enum class ScoreMode { Dataset, Topic, PaperNovelty };

const char* score_mode_name(ScoreMode m);
EntityMode entity_mode_for(ScoreMode m);

// Which (i, j) pairs enter the sum.
enum class PairConvention {
    OrderedWithDiagonal,  // all N^2 ordered pairs (default)
    OrderedOffDiagonal,   // i != j
    Unordered,            // i < j
};

const char* convention_name(PairConvention c);
PairConvention convention_from_name(const std::string& name);

struct AtypicalityScore {
    std::string paper_id;
    ScoreMode mode = ScoreMode::Dataset;
    double raw = 0.0;
    std::optional<double> normalized;
    std::size_t n_entities = 0;

    // Single-entity scores are 0 by construction and excluded from
    // atypicality populations.
    bool degenerate() const { return n_entities < 2; }
};

struct MetricOptions {
    PairConvention convention = PairConvention::OrderedWithDiagonal;
};

struct EmptyTopicUnionError : std::invalid_argument {
    explicit EmptyTopicUnionError(const std::string& paper)
        : std::invalid_argument("paper \"" + paper + "\": none of its datasets carries a topic tag") {}
};

struct NoReferencesError : std::invalid_argument {
    explicit NoReferencesError(const std::string& paper)
        : std::invalid_argument("paper \"" + paper + "\" has no journal references") {}
};

struct DegeneratePopulationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// 1 - sum over pairs of D * w_i * w_j. `focal` is the paper's own article,
// used only when the provider runs leave-one-out.
double rao_stirling(SimilarityProvider& sim, std::span<const EntityIndex> entities, std::span<const double> weights,
                    std::optional<ArticleIndex> focal = std::nullopt, PairConvention convention = {});

// Sorted union of the topic tags of the paper's datasets.
std::vector<std::string> topic_union(const PaperRecord& paper, const Corpus& corpus);

// `sim` must be built over the matching entity mode. Unknown ids throw
// UnknownEntityError.
AtypicalityScore dataset_atypicality(const PaperRecord& paper, SimilarityProvider& sim,
                                     std::optional<ArticleIndex> focal = std::nullopt, const MetricOptions& opts = {});
AtypicalityScore topic_atypicality(const PaperRecord& paper, const Corpus& corpus, SimilarityProvider& sim,
                                   std::optional<ArticleIndex> focal = std::nullopt, const MetricOptions& opts = {});
AtypicalityScore paper_novelty(const PaperRecord& paper, SimilarityProvider& sim,
                               std::optional<ArticleIndex> focal = std::nullopt, const MetricOptions& opts = {});

using PopulationSelector = std::function<bool(const AtypicalityScore&)>;

// Selects the non-degenerate scores (two or more entities).
bool multi_entity_population(const AtypicalityScore& s);

// Sets `normalized` = (raw - mean) / sd (sample sd, n - 1) for members of the
// population and clears it for everyone else. Throws
// DegeneratePopulationError with fewer than two members or zero variance.
std::vector<AtypicalityScore> zscore(std::vector<AtypicalityScore> scores,
                                     const PopulationSelector& population = multi_entity_population);

struct ScoreSet {
    ScoreMode mode = ScoreMode::Dataset;
    std::vector<AtypicalityScore> scores;                       // canonical paper order
    std::vector<std::pair<std::string, std::string>> skipped;  // paper id, reason

    const AtypicalityScore* find(const std::string& paper_id) const;
};

struct ScoringOptions {
    MetricOptions metric;
    bool leave_one_out = false;
};

// Scores every paper for which the mode is defined; the rest are listed in
// `skipped`. Normalization is left to the caller.
ScoreSet score_corpus(const Corpus& corpus, const IncidenceIndex& index, ScoreMode mode,
                      const ScoringOptions& opts = {});

}  // namespace atyp
