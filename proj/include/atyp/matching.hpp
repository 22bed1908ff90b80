#pragma once

// Matching-based robustness checks.
//
// Count matching pairs every paper that uses exactly two datasets with a
// single-dataset paper using one of them, published as close in time as
// possible. Atypicality matching pairs the top decile (by dataset
// atypicality) of two-dataset papers with the least atypical two-dataset
// paper sharing a dataset, keeping only pairs where the match is strictly
// less atypical.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "atyp/corpus.hpp"
#include "atyp/metrics.hpp"
#include "atyp/stats.hpp"

namespace atyp {

struct MatchedPair {
    std::string focal_id;
    std::string matched_id;
    std::string shared_dataset;
    int year_gap = 0;
    Citations focal_cites;
    Citations matched_cites;
    std::optional<double> focal_score;
    std::optional<double> matched_score;
};

struct MatchReport {
    std::vector<MatchedPair> pairs;
    std::size_t focal_count = 0;
    std::size_t no_candidate = 0;
    std::size_t filtered = 0;  // atypicality matching: match not strictly lower
};

struct CountMatchOptions {
    // true: candidates use exactly one dataset, one of the focal's two.
    // false: candidates use one of the two but not both, plus anything else.
    bool single_dataset_candidates = true;
};

MatchReport match_by_count(const Corpus& corpus, std::uint64_t seed, const CountMatchOptions& opts = {});

// `scores` must hold dataset atypicality for the two-dataset papers.
MatchReport match_by_atypicality(const Corpus& corpus, const ScoreSet& scores, std::uint64_t seed);

struct PairEvaluation {
    CitationWindow window = CitationWindow::Y3;
    std::size_t usable_pairs = 0;
    std::size_t missing_outcome = 0;
    TestResult paired_t;
    std::optional<TestResult> mean_t;  // needs two finite ratios
    TestResult sign;
    double ratio_mean = 0.0;    // over pairs with a nonzero matched count
    double ratio_median = 0.0;  // over all usable pairs (x/0 = inf, 0/0 = 1)
    std::size_t zero_denominator = 0;
    std::vector<double> finite_ratios;
};

// Throws std::invalid_argument with fewer than two pairs carrying both
// outcomes for the window.
PairEvaluation evaluate_pairs(const std::vector<MatchedPair>& pairs, CitationWindow window);

std::string pairs_to_csv(const std::vector<MatchedPair>& pairs);

}  // namespace atyp
