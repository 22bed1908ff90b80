#pragma once

// Sparse binary incidence indexes (entity x article usage) and cosine
// similarity between entity usage vectors.
//
// Every column is a strictly increasing list of article indices, where the
// article index is the paper's position in the corpus' canonical order.
// Cosine of two binary columns is |A n B| / sqrt(|A| |B|), computed with a
// sorted merge. Columns with no articles are similar to nothing (0), not even
// to themselves.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "atyp/corpus.hpp"

namespace atyp {

enum class EntityMode { Dataset, Topic, Journal };

const char* mode_name(EntityMode m);
EntityMode mode_from_name(const std::string& name);

struct UnknownEntityError : std::out_of_range {
    explicit UnknownEntityError(const std::string& id) : std::out_of_range("unknown entity \"" + id + "\""), id(id) {}
    std::string id;
};

using ArticleIndex = std::uint32_t;
using EntityIndex = std::uint32_t;

class IncidenceIndex {
public:
    IncidenceIndex() = default;
    IncidenceIndex(EntityMode mode, std::vector<std::string> entity_ids,
                   std::vector<std::vector<ArticleIndex>> columns, std::size_t article_count);

    EntityMode mode() const { return mode_; }
    std::size_t entity_count() const { return entity_ids_.size(); }
    std::size_t article_count() const { return article_count_; }
    const std::vector<std::string>& entity_ids() const { return entity_ids_; }

    std::optional<EntityIndex> find(const std::string& id) const;
    // Throws UnknownEntityError.
    EntityIndex require(const std::string& id) const;
    std::span<const ArticleIndex> column(EntityIndex e) const { return columns_[e]; }
    std::span<const ArticleIndex> column(const std::string& id) const { return columns_[require(id)]; }

    // Entities with an empty column.
    std::vector<std::string> empty_entities() const;

    friend bool operator==(const IncidenceIndex& a, const IncidenceIndex& b) {
        return a.mode_ == b.mode_ && a.article_count_ == b.article_count_ && a.entity_ids_ == b.entity_ids_ &&
               a.columns_ == b.columns_;
    }

private:
    EntityMode mode_ = EntityMode::Dataset;
    std::vector<std::string> entity_ids_;
    std::vector<std::vector<ArticleIndex>> columns_;
    std::unordered_map<std::string, EntityIndex> lookup_;
    std::size_t article_count_ = 0;
};

// Dataset: article j is in column a iff paper j uses dataset a.
// Topic:   article j is in column t iff some dataset used by paper j carries t.
// Journal: article j is in column e iff paper j references journal e.
// Entities are all datasets / all topics / all referenced journals in the
// corpus, in sorted id order.
IncidenceIndex build_incidence(const Corpus& corpus, EntityMode mode);

// Size of the intersection of two sorted columns.
std::size_t intersection_size(std::span<const ArticleIndex> a, std::span<const ArticleIndex> b);

double cosine(const IncidenceIndex& index, const std::string& a, const std::string& b);
double cosine(const IncidenceIndex& index, EntityIndex a, EntityIndex b);

// Memoizing similarity lookups over one index. Not thread-safe; give each
// worker its own provider (results do not depend on memo state).
class SimilarityProvider {
public:
    struct Options {
        // Drop the focal article from both columns before computing the
        // similarity (sensitivity analysis).
        bool leave_one_out = false;
    };

    explicit SimilarityProvider(const IncidenceIndex& index) : SimilarityProvider(index, Options{}) {}
    SimilarityProvider(const IncidenceIndex& index, Options options);

    const IncidenceIndex& index() const { return *index_; }
    const Options& options() const { return options_; }

    double similarity(EntityIndex a, EntityIndex b);
    double similarity(const std::string& a, const std::string& b);
    // Similarity with `focal` removed from both columns when leave_one_out is
    // on; identical to similarity() otherwise.
    double similarity_for(EntityIndex a, EntityIndex b, std::optional<ArticleIndex> focal);

    std::size_t memo_size() const { return memo_.size(); }

private:
    const IncidenceIndex* index_;
    Options options_;
    std::unordered_map<std::uint64_t, double> memo_;
};

// Dense symmetric block of pairwise cosines, row-major, size ids.size()^2.
// Throws UnknownEntityError and std::invalid_argument on duplicate ids.
std::vector<double> pairwise_similarity(const IncidenceIndex& index, const std::vector<std::string>& ids);

// Versioned on-disk cache of an index keyed by the corpus content hash.
void save_index(const IncidenceIndex& index, std::uint64_t corpus_hash, const std::filesystem::path& path);
// Returns nullopt if the file is missing, has another version, or was built
// from a different corpus.
std::optional<IncidenceIndex> load_index(const std::filesystem::path& path, std::uint64_t corpus_hash);

}  // namespace atyp
