#include <doctest.h>

#include <cmath>

#include "atyp/features.hpp"
#include "atyp/glm.hpp"
#include "atyp/synth.hpp"
#include "support.hpp"

using namespace atyp;
namespace ts = testsupport;

TEST_CASE("intercept-only planted mean is recovered by the sample mean") {
    SynthConfig cfg;
    cfg.papers = 10000;
    cfg.beta = {{"Intercept", std::log(5.0)}};
    cfg.alpha = 1.0;
    cfg.year_max = 2015;  // every paper has a 3-year count
    cfg.seed = 2024;
    auto out = generate_corpus(cfg);
    double sum = 0;
    std::size_t n = 0;
    for (const auto& p : out.corpus.papers()) {
        REQUIRE(p.cites.y3);
        sum += static_cast<double>(*p.cites.y3);
        ++n;
    }
    CHECK(n == 10000);
    CHECK(std::abs(sum / static_cast<double>(n) - 5.0) < 0.25);
}

TEST_CASE("no multi-dataset papers leaves the atypicality population empty") {
    SynthConfig cfg;
    cfg.papers = 500;
    cfg.datasets = 50;
    cfg.multi_dataset_prob = 0.0;
    cfg.seed = 4;
    auto out = generate_corpus(cfg);
    for (const auto& p : out.corpus.papers()) CHECK(p.n_datasets() == 1);
    CHECK(out.truth.multi_dataset_papers == 0);
    auto ix = build_incidence(out.corpus, EntityMode::Dataset);
    auto s = score_corpus(out.corpus, ix, ScoreMode::Dataset);
    CHECK_THROWS_AS(zscore(s.scores), DegeneratePopulationError);
}

TEST_CASE("generation is deterministic in the seed") {
    SynthConfig cfg;
    cfg.papers = 700;
    cfg.datasets = 70;
    cfg.seed = 12;
    auto a = generate_corpus(cfg), b = generate_corpus(cfg);
    CHECK(content_hash(a.corpus) == content_hash(b.corpus));
    CHECK(a.truth.to_json() == b.truth.to_json());
    cfg.seed = 13;
    CHECK(content_hash(generate_corpus(cfg).corpus) != content_hash(a.corpus));
}

TEST_CASE("infeasible configurations are rejected") {
    SynthConfig cfg;
    cfg.datasets = 1;
    CHECK_THROWS_AS(generate_corpus(cfg), std::invalid_argument);
    cfg = {};
    cfg.multi_dataset_prob = 1.5;
    CHECK_THROWS_AS(generate_corpus(cfg), std::invalid_argument);
    cfg = {};
    cfg.max_datasets = 1;
    CHECK_THROWS_AS(generate_corpus(cfg), std::invalid_argument);
    cfg = {};
    cfg.beta = {{"binary_UsingMultipleDataset", 0.1}};
    CHECK_THROWS_AS(generate_corpus(cfg), std::invalid_argument);
}

TEST_CASE("ground truth and files") {
    SynthConfig cfg;
    cfg.papers = 300;
    cfg.datasets = 40;
    auto out = generate_corpus(cfg);
    CHECK(out.truth.covariates.front() == "Intercept");
    CHECK(out.truth.covariates.size() == cfg.beta.size());
    auto dir = ts::scratch_dir("synth_files");
    write_synth(out, dir);
    for (const char* f : {"datasets.jsonl", "papers.jsonl", "journals.jsonl", "ground_truth.json"})
        CHECK(std::filesystem::exists(dir / f));
}

TEST_CASE("one planted corpus is fitted close to the truth") {
    SynthConfig cfg;
    cfg.seed = 77;
    auto out = generate_corpus(cfg);
    auto ix = build_incidence(out.corpus, EntityMode::Dataset);
    auto s = score_corpus(out.corpus, ix, ScoreMode::Dataset);
    FeatureSpec spec;
    spec.selector = ModelSelector::Custom;
    spec.covariates = {out.truth.covariates.begin() + 1, out.truth.covariates.end()};
    auto t = build_features(out.corpus, {&s, nullptr, nullptr}, spec);
    ModelSpec ms;
    ms.alpha = cfg.alpha;
    ms.covariates = out.truth.covariates;
    auto fit = fit_negbin(t, ms);
    REQUIRE(fit.converged);
    for (std::size_t k = 0; k < out.truth.covariates.size(); ++k) {
        const auto& c = fit.at(out.truth.covariates[k]);
        CHECK(std::abs(c.coef - out.truth.beta[k]) < 4 * c.std_err);
    }
}
