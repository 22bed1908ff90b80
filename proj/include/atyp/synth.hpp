#pragma once

// Synthetic corpora with planted negative-binomial citation effects.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "atyp/corpus.hpp"

namespace atyp {

struct SynthConfig {
    std::size_t papers = 5000;
    std::size_t datasets = 400;
    std::size_t topics = 40;
    std::size_t journals = 60;

    double popularity_exponent = 1.1;   // dataset popularity ~ rank^-s
    double multi_dataset_prob = 0.3;    // P(paper uses >= 2 datasets)
    double extra_dataset_prob = 0.35;   // geometric continuation beyond 2
    std::size_t max_datasets = 6;
    std::size_t max_topics_per_dataset = 3;
    double untagged_dataset_prob = 0.0;  // datasets without topic tags

    int year_min = 1975;
    int year_max = 2019;
    int horizon = 2022;  // last year with observed citations

    // log-mean of 3-year citations = sum beta_k x_k. Keys are feature column
    // names understood by build_features (plus "Intercept").
    std::map<std::string, double> beta = {
        {"Intercept", 0.8},
        {"binary_UsingMultipleDataset", 0.15},
        {"Atypicality_x_multi", 0.17},
        {"NumAuthor_log", 0.3},
        {"ImpactFactor_log", 0.4},
    };
    double alpha = 1.0;
    std::uint64_t seed = 1;

    // Throws std::invalid_argument on an infeasible configuration.
    void check() const;
};

struct GroundTruth {
    std::uint64_t seed = 0;
    double alpha = 0.0;
    std::vector<std::string> covariates;  // in design order, intercept first
    std::vector<double> beta;
    std::string outcome = "citations_3y";
    std::size_t multi_dataset_papers = 0;

    nlohmann::ordered_json to_json() const;
};

struct SynthOutput {
    Corpus corpus;
    GroundTruth truth;
};

SynthOutput generate_corpus(const SynthConfig& config);

// Writes datasets.jsonl, papers.jsonl, journals.jsonl and ground_truth.json.
void write_synth(const SynthOutput& out, const std::filesystem::path& dir);

}  // namespace atyp
