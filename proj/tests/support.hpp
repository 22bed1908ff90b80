#pragma once

// Fixture builders and independent oracles shared by the unit tests and the
// acceptance binary. The oracles work on dense 0/1 vectors built straight
// from the records and never touch IncidenceIndex or SimilarityProvider.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "atyp/corpus.hpp"

namespace testsupport {

inline atyp::DatasetRecord dataset(std::string id, std::vector<std::string> topics = {}) {
    atyp::DatasetRecord d;
    d.id = std::move(id);
    d.title = "title of " + d.id;
    d.topics = std::move(topics);
    return d;
}

inline atyp::PaperRecord paper(std::string id, int year, std::vector<std::string> datasets,
                               std::map<std::string, std::int64_t> refs = {{"J1", 1}}) {
    atyp::PaperRecord p;
    p.id = std::move(id);
    p.year = year;
    p.dataset_ids = std::move(datasets);
    p.journal_id = "J1";
    p.referenced_journal_counts = std::move(refs);
    p.author_ids = {"A1"};
    p.author_mean_citations = 1.0;
    p.discipline_weights = {{"Economics", 1.0}};
    p.cites.y3 = 1;
    p.cites.y5 = 2;
    p.cites.y10 = 3;
    return p;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("atyp_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// ---- dense oracle -------------------------------------------------------

// Entity -> dense 0/1 vector over papers, for the three membership rules.
using Dense = std::map<std::string, std::vector<int>>;

inline Dense dense_dataset_vectors(const atyp::Corpus& c) {
    Dense v;
    const auto& ps = c.papers();
    for (const auto& d : c.datasets()) v[d.id].assign(ps.size(), 0);
    for (std::size_t j = 0; j < ps.size(); ++j)
        for (const auto& d : ps[j].dataset_ids) v[d][j] = 1;
    return v;
}

inline std::set<std::string> topics_of(const atyp::PaperRecord& p, const atyp::Corpus& c) {
    std::set<std::string> out;
    for (const auto& d : p.dataset_ids)
        for (const auto& t : c.find_dataset(d)->topics) out.insert(t);
    return out;
}

inline Dense dense_topic_vectors(const atyp::Corpus& c) {
    Dense v;
    const auto& ps = c.papers();
    for (const auto& d : c.datasets())
        for (const auto& t : d.topics) v[t].assign(ps.size(), 0);
    for (std::size_t j = 0; j < ps.size(); ++j)
        for (const auto& t : topics_of(ps[j], c)) v[t][j] = 1;
    return v;
}

inline Dense dense_journal_vectors(const atyp::Corpus& c) {
    Dense v;
    const auto& ps = c.papers();
    for (const auto& p : ps)
        for (const auto& [j, n] : p.referenced_journal_counts) v[j].assign(ps.size(), 0);
    for (std::size_t j = 0; j < ps.size(); ++j)
        for (const auto& [e, n] : ps[j].referenced_journal_counts) v[e][j] = 1;
    return v;
}

inline double dense_cosine(const std::vector<int>& a, const std::vector<int>& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        dot += a[k] * b[k];
        na += a[k] * a[k];
        nb += b[k] * b[k];
    }
    if (na == 0 || nb == 0) return 0.0;
    return dot / std::sqrt(na * nb);
}

// 1 - sum_i sum_j D_ij w_i w_j over all ordered pairs, diagonal included.
inline double dense_rao_stirling(const Dense& vecs, const std::vector<std::string>& ents,
                                 const std::vector<double>& w) {
    double s = 0.0;
    for (std::size_t i = 0; i < ents.size(); ++i)
        for (std::size_t j = 0; j < ents.size(); ++j)
            s += dense_cosine(vecs.at(ents[i]), vecs.at(ents[j])) * w[i] * w[j];
    return 1.0 - s;
}

inline double oracle_dataset(const atyp::PaperRecord& p, const Dense& vecs) {
    std::vector<double> w(p.dataset_ids.size(), 1.0 / static_cast<double>(p.dataset_ids.size()));
    return dense_rao_stirling(vecs, p.dataset_ids, w);
}

inline double oracle_topic(const atyp::PaperRecord& p, const atyp::Corpus& c, const Dense& vecs) {
    auto ts = topics_of(p, c);
    std::vector<std::string> ents(ts.begin(), ts.end());
    std::vector<double> w(ents.size(), 1.0 / static_cast<double>(ents.size()));
    return dense_rao_stirling(vecs, ents, w);
}

inline double oracle_novelty(const atyp::PaperRecord& p, const Dense& vecs) {
    std::vector<std::string> ents;
    std::vector<double> w;
    double total = 0;
    for (const auto& [j, n] : p.referenced_journal_counts) total += static_cast<double>(n);
    for (const auto& [j, n] : p.referenced_journal_counts) {
        ents.push_back(j);
        w.push_back(static_cast<double>(n) / total);
    }
    return dense_rao_stirling(vecs, ents, w);
}

// Random micro-corpus: <= max_papers papers, <= max_entities datasets,
// topics and journals. Every paper has >= 1 dataset and >= 1 reference.
inline atyp::Corpus random_micro_corpus(std::mt19937_64& rng, std::size_t max_papers = 20,
                                        std::size_t max_entities = 8) {
    std::uniform_int_distribution<std::size_t> n_pap(1, max_papers), n_ent(1, max_entities);
    const std::size_t np = n_pap(rng), nd = n_ent(rng), nt = n_ent(rng), nj = n_ent(rng);
    std::bernoulli_distribution coin(0.35);
    std::uniform_int_distribution<int> refcount(1, 5);

    std::vector<atyp::DatasetRecord> ds;
    for (std::size_t d = 0; d < nd; ++d) {
        std::vector<std::string> topics;
        for (std::size_t t = 0; t < nt; ++t)
            if (coin(rng)) topics.push_back("T" + std::to_string(t));
        ds.push_back(dataset("D" + std::to_string(d), topics));
    }
    std::vector<atyp::PaperRecord> ps;
    std::uniform_int_distribution<std::size_t> pick_d(0, nd - 1), pick_j(0, nj - 1);
    for (std::size_t i = 0; i < np; ++i) {
        std::set<std::string> used = {"D" + std::to_string(pick_d(rng))};
        for (std::size_t d = 0; d < nd; ++d)
            if (coin(rng)) used.insert("D" + std::to_string(d));
        std::map<std::string, std::int64_t> refs = {{"J" + std::to_string(pick_j(rng)), refcount(rng)}};
        for (std::size_t j = 0; j < nj; ++j)
            if (coin(rng)) refs["J" + std::to_string(j)] = refcount(rng);
        ps.push_back(paper("P" + std::to_string(i), 2000, {used.begin(), used.end()}, refs));
    }
    std::map<std::string, double> impact;
    for (std::size_t j = 0; j < nj; ++j) impact["J" + std::to_string(j)] = 1.0;
    impact["J1"] = 1.0;
    return atyp::Corpus(ds, ps, impact);
}

// ---- hand-built 10-paper matching fixture --------------------------------
//
//   P01 {A,B} 2005 y3=4     P06 {C}   1998 y3=5
//   P02 {A}   2004 y3=2     P07 {D}   2002 y3=5
//   P03 {B}   2010 y3=0     P08 {A,B,C} 2006 y3=1
//   P04 {A,B} 2012 y3=6     P09 {D,E} 2015 y3=3 (y5 null)
//   P05 {C,D} 2000 y3=5     P10 {E,G} 2003 y3=2
//
// Count matching (single-dataset candidates):
//   P01 -> P02 (A, gap 1); P04 -> P03 (B, gap 2); P05 -> P06 or P07 (gap 2,
//   seeded tie); P09 -> P07 (D, gap 13); P10 has no candidate.
// Hand scores for atypicality matching (two-dataset group of 5, top
// ceil(5/10) = 1 with ties): P01 .3, P04 .2, P05 .4, P09 .9, P10 .9.
//   P09 -> P05 (D); P10's only neighbour P09 is not lower: filtered.
inline atyp::Corpus matching_fixture() {
    auto mk = [](const char* id, int year, std::vector<std::string> ds, std::int64_t y3) {
        auto p = paper(id, year, std::move(ds));
        p.cites.y3 = y3;
        return p;
    };
    std::vector<atyp::PaperRecord> ps = {
        mk("P01", 2005, {"A", "B"}, 4), mk("P02", 2004, {"A"}, 2),      mk("P03", 2010, {"B"}, 0),
        mk("P04", 2012, {"A", "B"}, 6), mk("P05", 2000, {"C", "D"}, 5), mk("P06", 1998, {"C"}, 5),
        mk("P07", 2002, {"D"}, 5),      mk("P08", 2006, {"A", "B", "C"}, 1), mk("P09", 2015, {"D", "E"}, 3),
        mk("P10", 2003, {"E", "G"}, 2),
    };
    ps[8].cites.y5.reset();
    std::vector<atyp::DatasetRecord> ds;
    for (const char* d : {"A", "B", "C", "D", "E", "G"}) ds.push_back(dataset(d, {"T1"}));
    return atyp::Corpus(ds, ps, {{"J1", 1.0}});
}

// Exact two-sided binomial(n, 1/2) tail by direct summation of C(n,k)/2^n.
inline double direct_sign_p(std::size_t pos, std::size_t neg) {
    const std::size_t n = pos + neg;
    if (n == 0) return 1.0;
    const std::size_t k = std::min(pos, neg);
    std::vector<double> row(n + 1, 0.0);  // Pascal row scaled by 2^-n
    row[0] = 1.0;
    for (std::size_t r = 1; r <= n; ++r) {
        for (std::size_t c = r; c >= 1; --c) row[c] = 0.5 * (row[c] + row[c - 1]);
        row[0] *= 0.5;
    }
    double tail = 0.0;
    for (std::size_t i = 0; i <= k; ++i) tail += row[i];
    return std::min(1.0, 2.0 * tail);
}

}  // namespace testsupport
