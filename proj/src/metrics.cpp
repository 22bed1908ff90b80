#include "atyp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace atyp {

const char* score_mode_name(ScoreMode m) {
    switch (m) {
        case ScoreMode::Dataset: return "dataset";
        case ScoreMode::Topic: return "topic";
        case ScoreMode::PaperNovelty: return "journal";
    }
    return "?";
}

EntityMode entity_mode_for(ScoreMode m) {
    switch (m) {
        case ScoreMode::Dataset: return EntityMode::Dataset;
        case ScoreMode::Topic: return EntityMode::Topic;
        case ScoreMode::PaperNovelty: return EntityMode::Journal;
    }
    return EntityMode::Dataset;
}

const char* convention_name(PairConvention c) {
    switch (c) {
        case PairConvention::OrderedWithDiagonal: return "ordered_with_diagonal";
        case PairConvention::OrderedOffDiagonal: return "ordered_off_diagonal";
        case PairConvention::Unordered: return "unordered";
    }
    return "?";
}

PairConvention convention_from_name(const std::string& name) {
    for (auto c : {PairConvention::OrderedWithDiagonal, PairConvention::OrderedOffDiagonal, PairConvention::Unordered})
        if (name == convention_name(c)) return c;
    throw std::invalid_argument("unknown pair convention \"" + name + "\"");
}

double rao_stirling(SimilarityProvider& sim, std::span<const EntityIndex> entities, std::span<const double> weights,
                    std::optional<ArticleIndex> focal, PairConvention convention) {
    if (entities.size() != weights.size()) throw std::invalid_argument("rao_stirling: entity/weight size mismatch");
    const std::size_t n = entities.size();
    double diag = 0.0;
    double off = 0.0;  // sum over i < j
    for (std::size_t i = 0; i < n; ++i) {
        diag += sim.similarity_for(entities[i], entities[i], focal) * weights[i] * weights[i];
        for (std::size_t j = i + 1; j < n; ++j)
            off += sim.similarity_for(entities[i], entities[j], focal) * weights[i] * weights[j];
    }
    // D <= 1 and the weights sum to 1, so anything below zero is rounding
    double v = 0.0;
    switch (convention) {
        case PairConvention::OrderedWithDiagonal: v = 1.0 - (diag + 2.0 * off); break;
        case PairConvention::OrderedOffDiagonal: v = 1.0 - 2.0 * off; break;
        case PairConvention::Unordered: v = 1.0 - off; break;
    }
    return std::max(0.0, v);
}

namespace {

AtypicalityScore uniform_score(const std::string& paper_id, ScoreMode mode, const std::vector<std::string>& ids,
                               SimilarityProvider& sim, std::optional<ArticleIndex> focal, const MetricOptions& opts) {
    std::vector<EntityIndex> idx;
    idx.reserve(ids.size());
    for (const auto& id : ids) idx.push_back(sim.index().require(id));
    AtypicalityScore s;
    s.paper_id = paper_id;
    s.mode = mode;
    s.n_entities = ids.size();
    if (ids.empty()) return s;
    const std::vector<double> w(ids.size(), 1.0 / static_cast<double>(ids.size()));
    s.raw = rao_stirling(sim, idx, w, focal, opts.convention);
    return s;
}

}  // namespace

std::vector<std::string> topic_union(const PaperRecord& paper, const Corpus& corpus) {
    std::set<std::string> topics;
    for (const auto& d : paper.dataset_ids) {
        const DatasetRecord* rec = corpus.find_dataset(d);
        if (!rec) throw UnknownEntityError(d);
        topics.insert(rec->topics.begin(), rec->topics.end());
    }
    return {topics.begin(), topics.end()};
}

AtypicalityScore dataset_atypicality(const PaperRecord& paper, SimilarityProvider& sim,
                                     std::optional<ArticleIndex> focal, const MetricOptions& opts) {
    return uniform_score(paper.id, ScoreMode::Dataset, paper.dataset_ids, sim, focal, opts);
}

AtypicalityScore topic_atypicality(const PaperRecord& paper, const Corpus& corpus, SimilarityProvider& sim,
                                   std::optional<ArticleIndex> focal, const MetricOptions& opts) {
    auto topics = topic_union(paper, corpus);
    if (topics.empty()) throw EmptyTopicUnionError(paper.id);
    return uniform_score(paper.id, ScoreMode::Topic, topics, sim, focal, opts);
}

AtypicalityScore paper_novelty(const PaperRecord& paper, SimilarityProvider& sim, std::optional<ArticleIndex> focal,
                               const MetricOptions& opts) {
    const std::int64_t total = paper.total_references();
    if (total <= 0) throw NoReferencesError(paper.id);
    std::vector<EntityIndex> idx;
    std::vector<double> w;
    for (const auto& [journal, count] : paper.referenced_journal_counts) {
        idx.push_back(sim.index().require(journal));
        w.push_back(static_cast<double>(count) / static_cast<double>(total));
    }
    AtypicalityScore s;
    s.paper_id = paper.id;
    s.mode = ScoreMode::PaperNovelty;
    s.n_entities = idx.size();
    s.raw = rao_stirling(sim, idx, w, focal, opts.convention);
    return s;
}

bool multi_entity_population(const AtypicalityScore& s) { return !s.degenerate(); }

std::vector<AtypicalityScore> zscore(std::vector<AtypicalityScore> scores, const PopulationSelector& population) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : scores) {
        if (population(s)) {
            sum += s.raw;
            ++n;
        }
    }
    if (n < 2) throw DegeneratePopulationError("z-score population has fewer than two members");
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& s : scores)
        if (population(s)) ss += (s.raw - mean) * (s.raw - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0)) throw DegeneratePopulationError("z-score population has zero variance");
    for (auto& s : scores) {
        if (population(s)) {
            s.normalized = (s.raw - mean) / sd;
        } else {
            s.normalized.reset();
        }
    }
    return scores;
}

const AtypicalityScore* ScoreSet::find(const std::string& paper_id) const {
    auto it = std::lower_bound(scores.begin(), scores.end(), paper_id,
                               [](const AtypicalityScore& s, const std::string& id) { return s.paper_id < id; });
    if (it == scores.end() || it->paper_id != paper_id) return nullptr;
    return &*it;
}

ScoreSet score_corpus(const Corpus& corpus, const IncidenceIndex& index, ScoreMode mode, const ScoringOptions& opts) {
    if (index.mode() != entity_mode_for(mode))
        throw std::invalid_argument(std::string("score_corpus: index mode ") + mode_name(index.mode()) +
                                    " does not match score mode " + score_mode_name(mode));
    SimilarityProvider sim(index, {opts.leave_one_out});
    ScoreSet out;
    out.mode = mode;
    const auto& papers = corpus.papers();
    out.scores.reserve(papers.size());
    for (std::size_t j = 0; j < papers.size(); ++j) {
        const auto& p = papers[j];
        const auto focal = static_cast<ArticleIndex>(j);
        switch (mode) {
            case ScoreMode::Dataset:
                if (p.dataset_ids.empty()) {
                    out.skipped.emplace_back(p.id, "no datasets");
                    continue;
                }
                out.scores.push_back(dataset_atypicality(p, sim, focal, opts.metric));
                break;
            case ScoreMode::Topic:
                if (topic_union(p, corpus).empty()) {
                    out.skipped.emplace_back(p.id, "no topic tags on any dataset");
                    continue;
                }
                out.scores.push_back(topic_atypicality(p, corpus, sim, focal, opts.metric));
                break;
            case ScoreMode::PaperNovelty:
                if (p.total_references() <= 0) {
                    out.skipped.emplace_back(p.id, "no journal references");
                    continue;
                }
                out.scores.push_back(paper_novelty(p, sim, focal, opts.metric));
                break;
        }
    }
    return out;
}

}  // namespace atyp
