#include "atyp/simengine.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>

namespace atyp {

namespace {

constexpr char kCacheMagic[8] = {'A', 'T', 'Y', 'P', 'I', 'D', 'X', '\0'};
constexpr std::uint32_t kCacheVersion = 1;

double cosine_from_counts(std::size_t inter, std::size_t na, std::size_t nb) {
    if (na == 0 || nb == 0) return 0.0;
    double v = static_cast<double>(inter) / std::sqrt(static_cast<double>(na) * static_cast<double>(nb));
    return std::min(v, 1.0);
}

bool contains(std::span<const ArticleIndex> col, ArticleIndex a) {
    return std::binary_search(col.begin(), col.end(), a);
}

std::uint64_t pair_key(EntityIndex a, EntityIndex b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | b;
}

template <class T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
bool get(std::istream& in, T& v) {
    return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof v));
}

}  // namespace

const char* mode_name(EntityMode m) {
    switch (m) {
        case EntityMode::Dataset: return "dataset";
        case EntityMode::Topic: return "topic";
        case EntityMode::Journal: return "journal";
    }
    return "?";
}

EntityMode mode_from_name(const std::string& name) {
    if (name == "dataset") return EntityMode::Dataset;
    if (name == "topic") return EntityMode::Topic;
    if (name == "journal") return EntityMode::Journal;
    throw std::invalid_argument("unknown mode \"" + name + "\" (expected dataset, topic or journal)");
}

IncidenceIndex::IncidenceIndex(EntityMode mode, std::vector<std::string> entity_ids,
                               std::vector<std::vector<ArticleIndex>> columns, std::size_t article_count)
    : mode_(mode), entity_ids_(std::move(entity_ids)), columns_(std::move(columns)), article_count_(article_count) {
    if (entity_ids_.size() != columns_.size()) throw std::invalid_argument("entity/column count mismatch");
    lookup_.reserve(entity_ids_.size());
    for (std::size_t i = 0; i < entity_ids_.size(); ++i) {
        const auto& col = columns_[i];
        for (std::size_t k = 1; k < col.size(); ++k)
            if (col[k - 1] >= col[k]) throw std::invalid_argument("column not strictly sorted: " + entity_ids_[i]);
        if (!col.empty() && col.back() >= article_count_)
            throw std::invalid_argument("article index out of range in column " + entity_ids_[i]);
        if (!lookup_.emplace(entity_ids_[i], static_cast<EntityIndex>(i)).second)
            throw std::invalid_argument("duplicate entity id " + entity_ids_[i]);
    }
}

std::optional<EntityIndex> IncidenceIndex::find(const std::string& id) const {
    auto it = lookup_.find(id);
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
}

EntityIndex IncidenceIndex::require(const std::string& id) const {
    auto it = lookup_.find(id);
    if (it == lookup_.end()) throw UnknownEntityError(id);
    return it->second;
}

std::vector<std::string> IncidenceIndex::empty_entities() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < columns_.size(); ++i)
        if (columns_[i].empty()) out.push_back(entity_ids_[i]);
    return out;
}

IncidenceIndex build_incidence(const Corpus& corpus, EntityMode mode) {
    const auto& papers = corpus.papers();
    std::vector<std::string> ids;
    switch (mode) {
        case EntityMode::Dataset:
            for (const auto& d : corpus.datasets()) ids.push_back(d.id);
            break;
        case EntityMode::Topic: {
            std::set<std::string> topics;
            for (const auto& d : corpus.datasets()) topics.insert(d.topics.begin(), d.topics.end());
            ids.assign(topics.begin(), topics.end());
            break;
        }
        case EntityMode::Journal: {
            std::set<std::string> journals;
            for (const auto& p : papers)
                for (const auto& [j, _] : p.referenced_journal_counts) journals.insert(j);
            ids.assign(journals.begin(), journals.end());
            break;
        }
    }
    std::unordered_map<std::string, EntityIndex> pos;
    pos.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) pos.emplace(ids[i], static_cast<EntityIndex>(i));

    // Topic mode maps each dataset to its topic entity indices once.
    std::unordered_map<std::string, std::vector<EntityIndex>> dataset_topics;
    if (mode == EntityMode::Topic) {
        for (const auto& d : corpus.datasets()) {
            auto& v = dataset_topics[d.id];
            for (const auto& t : d.topics) v.push_back(pos.at(t));
        }
    }

    std::vector<std::vector<ArticleIndex>> columns(ids.size());
    std::vector<EntityIndex> scratch;
    // Articles are visited in increasing order, so each column is appended in
    // sorted order; the per-article scratch set removes duplicates.
    for (std::size_t j = 0; j < papers.size(); ++j) {
        const auto& p = papers[j];
        scratch.clear();
        switch (mode) {
            case EntityMode::Dataset:
                for (const auto& d : p.dataset_ids)
                    if (auto it = pos.find(d); it != pos.end()) scratch.push_back(it->second);
                break;
            case EntityMode::Topic:
                for (const auto& d : p.dataset_ids)
                    if (auto it = dataset_topics.find(d); it != dataset_topics.end())
                        scratch.insert(scratch.end(), it->second.begin(), it->second.end());
                break;
            case EntityMode::Journal:
                for (const auto& [e, _] : p.referenced_journal_counts) scratch.push_back(pos.at(e));
                break;
        }
        std::sort(scratch.begin(), scratch.end());
        scratch.erase(std::unique(scratch.begin(), scratch.end()), scratch.end());
        for (EntityIndex e : scratch) columns[e].push_back(static_cast<ArticleIndex>(j));
    }
    return IncidenceIndex(mode, std::move(ids), std::move(columns), papers.size());
}

std::size_t intersection_size(std::span<const ArticleIndex> a, std::span<const ArticleIndex> b) {
    if (a.size() > b.size()) std::swap(a, b);
    if (a.empty()) return 0;
    // Galloping pays off when one column is much shorter than the other.
    if (a.size() * 16 < b.size()) {
        std::size_t n = 0;
        auto lo = b.begin();
        for (ArticleIndex x : a) {
            lo = std::lower_bound(lo, b.end(), x);
            if (lo == b.end()) break;
            if (*lo == x) ++n;
        }
        return n;
    }
    std::size_t n = 0;
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i < *j) {
            ++i;
        } else if (*j < *i) {
            ++j;
        } else {
            ++n;
            ++i;
            ++j;
        }
    }
    return n;
}

double cosine(const IncidenceIndex& index, EntityIndex a, EntityIndex b) {
    auto ca = index.column(a);
    auto cb = index.column(b);
    if (a == b) return ca.empty() ? 0.0 : 1.0;
    return cosine_from_counts(intersection_size(ca, cb), ca.size(), cb.size());
}

double cosine(const IncidenceIndex& index, const std::string& a, const std::string& b) {
    return cosine(index, index.require(a), index.require(b));
}

SimilarityProvider::SimilarityProvider(const IncidenceIndex& index, Options options)
    : index_(&index), options_(options) {}

double SimilarityProvider::similarity(EntityIndex a, EntityIndex b) {
    if (a == b) return index_->column(a).empty() ? 0.0 : 1.0;
    auto key = pair_key(a, b);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    double v = cosine(*index_, a, b);
    memo_.emplace(key, v);
    return v;
}

double SimilarityProvider::similarity(const std::string& a, const std::string& b) {
    return similarity(index_->require(a), index_->require(b));
}

double SimilarityProvider::similarity_for(EntityIndex a, EntityIndex b, std::optional<ArticleIndex> focal) {
    if (!options_.leave_one_out || !focal) return similarity(a, b);
    auto ca = index_->column(a);
    auto cb = index_->column(b);
    const bool in_a = contains(ca, *focal);
    const bool in_b = contains(cb, *focal);
    const std::size_t na = ca.size() - (in_a ? 1 : 0);
    const std::size_t nb = cb.size() - (in_b ? 1 : 0);
    if (a == b) return na == 0 ? 0.0 : 1.0;
    std::size_t inter = intersection_size(ca, cb) - ((in_a && in_b) ? 1 : 0);
    return cosine_from_counts(inter, na, nb);
}

std::vector<double> pairwise_similarity(const IncidenceIndex& index, const std::vector<std::string>& ids) {
    std::vector<EntityIndex> idx;
    idx.reserve(ids.size());
    for (const auto& id : ids) idx.push_back(index.require(id));
    {
        auto sorted = idx;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw std::invalid_argument("pairwise_similarity: duplicate entity ids");
    }
    const std::size_t n = ids.size();
    std::vector<double> block(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        block[i * n + i] = cosine(index, idx[i], idx[i]);
        for (std::size_t j = i + 1; j < n; ++j) {
            double v = cosine(index, idx[i], idx[j]);
            block[i * n + j] = v;
            block[j * n + i] = v;
        }
    }
    return block;
}

void save_index(const IncidenceIndex& index, std::uint64_t corpus_hash, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write index cache: " + path.string());
    out.write(kCacheMagic, sizeof kCacheMagic);
    put(out, kCacheVersion);
    put(out, corpus_hash);
    put(out, static_cast<std::uint32_t>(index.mode()));
    put(out, static_cast<std::uint64_t>(index.article_count()));
    put(out, static_cast<std::uint64_t>(index.entity_count()));
    for (EntityIndex e = 0; e < index.entity_count(); ++e) {
        const auto& id = index.entity_ids()[e];
        put(out, static_cast<std::uint32_t>(id.size()));
        out.write(id.data(), static_cast<std::streamsize>(id.size()));
        auto col = index.column(e);
        put(out, static_cast<std::uint64_t>(col.size()));
        out.write(reinterpret_cast<const char*>(col.data()), static_cast<std::streamsize>(col.size_bytes()));
    }
    if (!out) throw std::runtime_error("index cache write failed: " + path.string());
}

std::optional<IncidenceIndex> load_index(const std::filesystem::path& path, std::uint64_t corpus_hash) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    char magic[sizeof kCacheMagic];
    std::uint32_t version = 0, mode = 0;
    std::uint64_t hash = 0, articles = 0, entities = 0;
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kCacheMagic, sizeof magic) != 0) return std::nullopt;
    if (!get(in, version) || version != kCacheVersion) return std::nullopt;
    if (!get(in, hash) || hash != corpus_hash) return std::nullopt;
    if (!get(in, mode) || mode > 2 || !get(in, articles) || !get(in, entities)) return std::nullopt;
    std::vector<std::string> ids(entities);
    std::vector<std::vector<ArticleIndex>> columns(entities);
    for (std::uint64_t e = 0; e < entities; ++e) {
        std::uint32_t len = 0;
        if (!get(in, len)) return std::nullopt;
        ids[e].resize(len);
        if (!in.read(ids[e].data(), len)) return std::nullopt;
        std::uint64_t n = 0;
        if (!get(in, n)) return std::nullopt;
        columns[e].resize(n);
        if (!in.read(reinterpret_cast<char*>(columns[e].data()), static_cast<std::streamsize>(n * sizeof(ArticleIndex))))
            return std::nullopt;
    }
    return IncidenceIndex(static_cast<EntityMode>(mode), std::move(ids), std::move(columns), articles);
}

}  // namespace atyp
