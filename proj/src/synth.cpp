#include "atyp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "atyp/features.hpp"
#include "atyp/metrics.hpp"
#include "atyp/simengine.hpp"
#include "atyp/textio.hpp"

namespace atyp {

namespace {

const std::vector<std::string> kDisciplines = {"Economics", "Medicine", "Political_science", "Psychology",
                                               "Sociology"};

std::string padded(const char* prefix, std::size_t i, std::size_t total) {
    std::string n = std::to_string(i);
    const std::size_t width = std::to_string(total).size();
    return prefix + std::string(width > n.size() ? width - n.size() : 0, '0') + n;
}

std::int64_t draw_negbin(double mu, double alpha, std::mt19937_64& rng) {
    if (mu <= 0.0) return 0;
    const double r = 1.0 / alpha;
    std::gamma_distribution<double> gamma(r, mu / r);
    const double lambda = gamma(rng);
    if (lambda <= 0.0) return 0;
    std::poisson_distribution<std::int64_t> pois(lambda);
    return pois(rng);
}

std::vector<double> power_law_weights(std::size_t n, double s) {
    std::vector<double> w(n);
    for (std::size_t k = 0; k < n; ++k) w[k] = std::pow(static_cast<double>(k + 1), -s);
    return w;
}

// Distinct draws from a weighted discrete distribution.
std::vector<std::size_t> draw_distinct(std::discrete_distribution<std::size_t>& dist, std::size_t count,
                                       std::mt19937_64& rng) {
    std::set<std::size_t> out;
    while (out.size() < count) out.insert(dist(rng));
    return {out.begin(), out.end()};
}

}  // namespace

void SynthConfig::check() const {
    if (papers < 2 || datasets < 2 || topics < 2 || journals < 2)
        throw std::invalid_argument("synth: paper, dataset, topic and journal counts must be >= 2");
    for (double p : {multi_dataset_prob, extra_dataset_prob, untagged_dataset_prob})
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("synth: probabilities must lie in [0, 1]");
    if (multi_dataset_prob > 0.0 && max_datasets < 2)
        throw std::invalid_argument("synth: multi-dataset papers need max_datasets >= 2");
    if (max_datasets > datasets)
        throw std::invalid_argument("synth: max_datasets exceeds the number of datasets");
    if (max_topics_per_dataset < 1 || max_topics_per_dataset > topics)
        throw std::invalid_argument("synth: max_topics_per_dataset must be in [1, topics]");
    if (year_min > year_max) throw std::invalid_argument("synth: year_min > year_max");
    if (!(alpha > 0.0)) throw std::invalid_argument("synth: dispersion must be positive");
    if (!(popularity_exponent >= 0.0)) throw std::invalid_argument("synth: popularity exponent must be >= 0");
    if (!beta.count(col::kIntercept)) throw std::invalid_argument("synth: beta needs an Intercept");
}

nlohmann::ordered_json GroundTruth::to_json() const {
    nlohmann::ordered_json j;
    j["seed"] = seed;
    j["alpha"] = alpha;
    j["outcome"] = outcome;
    j["multi_dataset_papers"] = multi_dataset_papers;
    j["beta"] = nlohmann::ordered_json::object();
    for (std::size_t k = 0; k < covariates.size(); ++k) j["beta"][covariates[k]] = beta[k];
    return j;
}

SynthOutput generate_corpus(const SynthConfig& cfg) {
    cfg.check();
    std::mt19937_64 rng(cfg.seed);

    std::vector<std::string> topic_ids(cfg.topics);
    for (std::size_t t = 0; t < cfg.topics; ++t) topic_ids[t] = padded("T", t + 1, cfg.topics);
    const auto topic_pop = power_law_weights(cfg.topics, 0.8);
    std::discrete_distribution<std::size_t> topic_dist(topic_pop.begin(), topic_pop.end());

    std::vector<DatasetRecord> datasets(cfg.datasets);
    std::bernoulli_distribution untagged(cfg.untagged_dataset_prob);
    std::uniform_int_distribution<std::size_t> n_topics(1, cfg.max_topics_per_dataset);
    for (std::size_t d = 0; d < cfg.datasets; ++d) {
        auto& rec = datasets[d];
        rec.id = padded("D", d + 1, cfg.datasets);
        rec.title = "Synthetic study " + std::to_string(d + 1);
        if (untagged(rng)) continue;
        for (std::size_t t : draw_distinct(topic_dist, n_topics(rng), rng)) rec.topics.push_back(topic_ids[t]);
    }

    std::vector<std::string> journal_ids(cfg.journals);
    std::map<std::string, double> impact;
    std::lognormal_distribution<double> impact_dist(0.5, 0.8);
    for (std::size_t j = 0; j < cfg.journals; ++j) {
        journal_ids[j] = padded("J", j + 1, cfg.journals);
        impact[journal_ids[j]] = std::round(impact_dist(rng) * 1000.0) / 1000.0;
    }

    auto pop = power_law_weights(cfg.datasets, cfg.popularity_exponent);
    std::discrete_distribution<std::size_t> dataset_dist(pop.begin(), pop.end());
    auto jpop = power_law_weights(cfg.journals, 0.9);
    std::discrete_distribution<std::size_t> journal_dist(jpop.begin(), jpop.end());
    std::bernoulli_distribution multi(cfg.multi_dataset_prob);
    std::bernoulli_distribution extra(cfg.extra_dataset_prob);
    std::uniform_int_distribution<int> year_dist(cfg.year_min, cfg.year_max);
    std::poisson_distribution<int> extra_authors(1.8);
    std::lognormal_distribution<double> recognition(3.0, 1.2);
    std::uniform_int_distribution<std::size_t> n_ref_journals(1, std::min<std::size_t>(8, cfg.journals));
    std::poisson_distribution<int> ref_extra(2.0);
    std::uniform_int_distribution<std::size_t> discipline_pick(0, kDisciplines.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<PaperRecord> papers(cfg.papers);
    std::size_t multi_count = 0;
    for (std::size_t i = 0; i < cfg.papers; ++i) {
        auto& p = papers[i];
        p.id = padded("P", i + 1, cfg.papers);
        p.year = year_dist(rng);
        std::size_t k = 1;
        if (multi(rng)) {
            k = 2;
            while (k < cfg.max_datasets && extra(rng)) ++k;
            ++multi_count;
        }
        for (std::size_t d : draw_distinct(dataset_dist, k, rng)) p.dataset_ids.push_back(datasets[d].id);
        p.journal_id = journal_ids[journal_dist(rng)];
        for (std::size_t j : draw_distinct(journal_dist, n_ref_journals(rng), rng))
            p.referenced_journal_counts[journal_ids[j]] = 1 + ref_extra(rng);
        const int n_authors = 1 + extra_authors(rng);
        for (int a = 0; a < n_authors; ++a) p.author_ids.push_back("A" + std::to_string(i + 1) + "_" + std::to_string(a + 1));
        p.author_mean_citations = std::round(recognition(rng) * 100.0) / 100.0;
        const std::string primary = kDisciplines[discipline_pick(rng)];
        const double w = std::round((0.5 + 0.5 * unit(rng)) * 1000.0) / 1000.0;
        p.discipline_weights[primary] = w;
        const std::string secondary = kDisciplines[discipline_pick(rng)];
        if (secondary != primary) p.discipline_weights[secondary] = std::round((1.0 - w) * unit(rng) * 1000.0) / 1000.0;
    }

    // Outcomes depend on corpus-level features (co-usage atypicality, use
    // frequency), so they are drawn after the structure exists, from the
    // same feature builder the analysis uses.
    Corpus skeleton(datasets, papers, impact);
    GroundTruth truth;
    truth.seed = cfg.seed;
    truth.alpha = cfg.alpha;
    truth.multi_dataset_papers = multi_count;
    truth.covariates.push_back(col::kIntercept);
    truth.beta.push_back(cfg.beta.at(col::kIntercept));

    FeatureSpec spec;
    spec.selector = ModelSelector::Custom;
    spec.outcome = "multi_dataset";
    spec.drop_constant_columns = false;
    for (const auto& [name, b] : cfg.beta) {
        if (name == col::kIntercept) continue;
        spec.covariates.push_back(name);
        truth.covariates.push_back(name);
        truth.beta.push_back(b);
    }
    const IncidenceIndex index = build_incidence(skeleton, EntityMode::Dataset);
    const ScoreSet scores = score_corpus(skeleton, index, ScoreMode::Dataset);
    const FeatureTable table = build_features(skeleton, {&scores, nullptr, nullptr}, spec);
    if (table.rows() != skeleton.papers().size()) throw std::logic_error("synth: feature rows dropped");

    std::vector<double> mu(table.rows(), 0.0);
    for (std::size_t k = 0; k < truth.covariates.size(); ++k) {
        const auto& c = table.column(truth.covariates[k]);
        for (std::size_t i = 0; i < mu.size(); ++i) mu[i] += truth.beta[k] * c[i];
    }
    for (auto& m : mu) m = std::exp(m);

    // Rows follow canonical order, which equals generation order (ids are
    // zero-padded).
    for (std::size_t i = 0; i < papers.size(); ++i) {
        auto& p = papers[i];
        const std::int64_t y3 = draw_negbin(mu[i], cfg.alpha, rng);
        const std::int64_t y5 = y3 + draw_negbin(0.6 * mu[i], cfg.alpha, rng);
        const std::int64_t y10 = y5 + draw_negbin(1.0 * mu[i], cfg.alpha, rng);
        if (p.year + 3 <= cfg.horizon) p.cites.y3 = y3;
        if (p.year + 5 <= cfg.horizon) p.cites.y5 = y5;
        if (p.year + 10 <= cfg.horizon) p.cites.y10 = y10;
        if (p.year > 2010) {
            Altmetric a;
            a.twitter = draw_negbin(2.0 * mu[i], cfg.alpha, rng);
            a.wikipedia = draw_negbin(0.05 * mu[i], cfg.alpha, rng);
            a.policy = draw_negbin(0.1 * mu[i], cfg.alpha, rng);
            a.news = draw_negbin(0.2 * mu[i], cfg.alpha, rng);
            p.altmetric = a;
        }
    }
    return {Corpus(std::move(datasets), std::move(papers), std::move(impact)), std::move(truth)};
}

void write_synth(const SynthOutput& out, const std::filesystem::path& dir) {
    write_corpus(out.corpus, CorpusPaths::in_directory(dir));
    write_text_file(dir / "ground_truth.json", out.truth.to_json().dump(2) + "\n");
}

}  // namespace atyp
