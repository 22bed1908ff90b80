#include "atyp/matching.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <random>

#include "atyp/textio.hpp"

namespace atyp {

namespace {

template <class T>
const T& pick(const std::vector<T>& ties, std::mt19937_64& rng) {
    if (ties.size() == 1) return ties.front();
    std::uniform_int_distribution<std::size_t> dist(0, ties.size() - 1);
    return ties[dist(rng)];
}

std::string first_shared(const PaperRecord& a, const PaperRecord& b) {
    for (const auto& d : a.dataset_ids)
        if (std::binary_search(b.dataset_ids.begin(), b.dataset_ids.end(), d)) return d;
    return {};
}

std::string opt_to_string(const std::optional<std::int64_t>& v) { return v ? std::to_string(*v) : ""; }

}  // namespace

MatchReport match_by_count(const Corpus& corpus, std::uint64_t seed, const CountMatchOptions& opts) {
    std::mt19937_64 rng(seed);
    const auto& papers = corpus.papers();

    // dataset -> candidate papers that use it, in canonical order
    std::map<std::string, std::vector<std::size_t>> by_dataset;
    for (std::size_t i = 0; i < papers.size(); ++i) {
        const auto& p = papers[i];
        if (opts.single_dataset_candidates && p.n_datasets() != 1) continue;
        for (const auto& d : p.dataset_ids) by_dataset[d].push_back(i);
    }

    MatchReport report;
    for (std::size_t f = 0; f < papers.size(); ++f) {
        const auto& focal = papers[f];
        if (focal.n_datasets() != 2) continue;
        ++report.focal_count;
        const auto& a = focal.dataset_ids[0];
        const auto& b = focal.dataset_ids[1];

        std::vector<std::size_t> candidates;
        for (const auto& d : {a, b}) {
            auto it = by_dataset.find(d);
            if (it == by_dataset.end()) continue;
            for (std::size_t c : it->second) {
                if (c == f) continue;
                const auto& cand = papers[c];
                const bool has_a = std::binary_search(cand.dataset_ids.begin(), cand.dataset_ids.end(), a);
                const bool has_b = std::binary_search(cand.dataset_ids.begin(), cand.dataset_ids.end(), b);
                if (has_a == has_b) continue;  // must use exactly one of the two
                candidates.push_back(c);
            }
        }
        std::sort(candidates.begin(), candidates.end());
        candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
        if (candidates.empty()) {
            ++report.no_candidate;
            continue;
        }
        int best = std::numeric_limits<int>::max();
        for (std::size_t c : candidates) best = std::min(best, std::abs(papers[c].year - focal.year));
        std::vector<std::size_t> ties;
        for (std::size_t c : candidates)
            if (std::abs(papers[c].year - focal.year) == best) ties.push_back(c);
        const auto& match = papers[pick(ties, rng)];

        MatchedPair pair;
        pair.focal_id = focal.id;
        pair.matched_id = match.id;
        pair.shared_dataset = first_shared(focal, match);
        pair.year_gap = best;
        pair.focal_cites = focal.cites;
        pair.matched_cites = match.cites;
        report.pairs.push_back(std::move(pair));
    }
    return report;
}

MatchReport match_by_atypicality(const Corpus& corpus, const ScoreSet& scores, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const auto& papers = corpus.papers();

    struct Member {
        std::size_t paper;
        double raw;
    };
    std::vector<Member> group;
    for (std::size_t i = 0; i < papers.size(); ++i) {
        if (papers[i].n_datasets() != 2) continue;
        if (const auto* s = scores.find(papers[i].id)) group.push_back({i, s->raw});
    }
    MatchReport report;
    if (group.empty()) return report;

    // Top decile: the ceil(n/10) highest scores, ties at the cutoff included.
    std::vector<double> sorted;
    for (const auto& m : group) sorted.push_back(m.raw);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const std::size_t top = (sorted.size() + 9) / 10;
    const double cutoff = sorted[top - 1];

    std::map<std::string, std::vector<std::size_t>> by_dataset;  // dataset -> group positions
    for (std::size_t g = 0; g < group.size(); ++g)
        for (const auto& d : papers[group[g].paper].dataset_ids) by_dataset[d].push_back(g);

    for (std::size_t g = 0; g < group.size(); ++g) {
        if (group[g].raw < cutoff) continue;
        ++report.focal_count;
        const auto& focal = papers[group[g].paper];

        std::vector<std::size_t> candidates;
        for (const auto& d : focal.dataset_ids)
            for (std::size_t c : by_dataset[d])
                if (c != g) candidates.push_back(c);
        std::sort(candidates.begin(), candidates.end());
        candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
        if (candidates.empty()) {
            ++report.no_candidate;
            continue;
        }
        double lowest = std::numeric_limits<double>::infinity();
        for (std::size_t c : candidates) lowest = std::min(lowest, group[c].raw);
        if (!(lowest < group[g].raw)) {
            ++report.filtered;
            continue;
        }
        std::vector<std::size_t> ties;
        for (std::size_t c : candidates)
            if (group[c].raw == lowest) ties.push_back(c);
        const std::size_t m = pick(ties, rng);
        const auto& match = papers[group[m].paper];

        MatchedPair pair;
        pair.focal_id = focal.id;
        pair.matched_id = match.id;
        pair.shared_dataset = first_shared(focal, match);
        pair.year_gap = std::abs(focal.year - match.year);
        pair.focal_cites = focal.cites;
        pair.matched_cites = match.cites;
        pair.focal_score = group[g].raw;
        pair.matched_score = group[m].raw;
        report.pairs.push_back(std::move(pair));
    }
    return report;
}

PairEvaluation evaluate_pairs(const std::vector<MatchedPair>& pairs, CitationWindow window) {
    PairEvaluation ev;
    ev.window = window;
    std::vector<double> focal, matched;
    for (const auto& p : pairs) {
        const auto& f = p.focal_cites.at(window);
        const auto& m = p.matched_cites.at(window);
        if (!f || !m) {
            ++ev.missing_outcome;
            continue;
        }
        focal.push_back(static_cast<double>(*f));
        matched.push_back(static_cast<double>(*m));
    }
    ev.usable_pairs = focal.size();
    if (ev.usable_pairs < 2)
        throw std::invalid_argument("evaluate_pairs: fewer than 2 pairs with " +
                                    std::to_string(static_cast<int>(window)) + "-year citations for both papers");

    ev.paired_t = paired_t_test(focal, matched);

    std::vector<double> all_ratios;
    std::size_t positive = 0, negative = 0;
    for (std::size_t i = 0; i < focal.size(); ++i) {
        const double f = focal[i];
        const double m = matched[i];
        if (f > m) ++positive;
        if (f < m) ++negative;
        if (m == 0.0) {
            ++ev.zero_denominator;
            all_ratios.push_back(f == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
        } else {
            ev.finite_ratios.push_back(f / m);
            all_ratios.push_back(f / m);
        }
    }
    std::sort(all_ratios.begin(), all_ratios.end());
    const std::size_t n = all_ratios.size();
    ev.ratio_median = n % 2 ? all_ratios[n / 2] : 0.5 * (all_ratios[n / 2 - 1] + all_ratios[n / 2]);

    if (!ev.finite_ratios.empty()) {
        double sum = 0.0;
        for (double r : ev.finite_ratios) sum += r;
        ev.ratio_mean = sum / static_cast<double>(ev.finite_ratios.size());
    } else {
        ev.ratio_mean = std::numeric_limits<double>::quiet_NaN();
    }
    if (ev.finite_ratios.size() >= 2) {
        ev.mean_t = one_sample_t_test(ev.finite_ratios, 1.0);
        ev.mean_t->excluded = ev.zero_denominator;
    }
    ev.sign = sign_test(positive, negative);
    ev.sign.excluded = n - positive - negative;
    return ev;
}

std::string pairs_to_csv(const std::vector<MatchedPair>& pairs) {
    std::string out = csv_row({"focal_id", "matched_id", "shared_dataset", "year_gap", "focal_score", "matched_score",
                               "focal_y3", "matched_y3", "focal_y5", "matched_y5", "focal_y10", "matched_y10"});
    for (const auto& p : pairs) {
        out += csv_row({p.focal_id, p.matched_id, p.shared_dataset, std::to_string(p.year_gap),
                        p.focal_score ? format_double(*p.focal_score) : "",
                        p.matched_score ? format_double(*p.matched_score) : "", opt_to_string(p.focal_cites.y3),
                        opt_to_string(p.matched_cites.y3), opt_to_string(p.focal_cites.y5),
                        opt_to_string(p.matched_cites.y5), opt_to_string(p.focal_cites.y10),
                        opt_to_string(p.matched_cites.y10)});
    }
    return out;
}

}  // namespace atyp
