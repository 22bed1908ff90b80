#include "atyp/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "atyp/textio.hpp"

namespace atyp {

std::string YearBinEdges::label(std::size_t dummy) const {
    return "Year_bin[T.(" + std::to_string(uppers.at(dummy)) + ", " + std::to_string(uppers.at(dummy + 1)) + "]]";
}

std::vector<double> year_bins(int year, const YearBinEdges& edges) {
    if (edges.uppers.empty() || year <= edges.lower || year > edges.uppers.back())
        throw YearOutOfRangeError("year " + std::to_string(year) + " outside binned range (" +
                                  std::to_string(edges.lower) + ", " +
                                  std::to_string(edges.uppers.empty() ? edges.lower : edges.uppers.back()) + "]");
    std::vector<double> out(edges.dummy_count(), 0.0);
    for (std::size_t k = 1; k < edges.uppers.size(); ++k) {
        if (year > edges.uppers[k - 1] && year <= edges.uppers[k]) {
            out[k - 1] = 1.0;
            break;
        }
    }
    return out;
}

std::map<std::string, int> hit_flag(const Corpus& corpus) {
    std::vector<std::int64_t> values;
    for (const auto& p : corpus.papers())
        if (p.cites.y3) values.push_back(*p.cites.y3);
    if (values.size() < kMinHitPopulation)
        throw PercentileUndefinedError("hit flag needs at least " + std::to_string(kMinHitPopulation) +
                                       " papers with 3-year citations, got " + std::to_string(values.size()));
    std::sort(values.begin(), values.end());
    // Nearest rank: ceil(0.95 n), computed in integers.
    const std::size_t rank = (95 * values.size() + 99) / 100;
    const std::int64_t threshold = values[rank - 1];
    std::map<std::string, int> out;
    for (const auto& p : corpus.papers())
        if (p.cites.y3) out[p.id] = *p.cites.y3 > threshold ? 1 : 0;
    return out;
}

std::map<std::string, std::size_t> dataset_use_counts(const Corpus& corpus) {
    std::map<std::string, std::size_t> counts;
    for (const auto& d : corpus.datasets()) counts[d.id] = 0;
    for (const auto& p : corpus.papers())
        for (const auto& d : p.dataset_ids) ++counts[d];
    return counts;
}

namespace {

struct SelectorName {
    ModelSelector selector;
    const char* name;
};

constexpr SelectorName kSelectorNames[] = {
    {ModelSelector::DataComb, "datacomb"},
    {ModelSelector::Atypicality, "atypicality"},
    {ModelSelector::Topic, "topic"},
    {ModelSelector::Hit, "hit"},
    {ModelSelector::Altmetric, "altmetric"},
    {ModelSelector::TeamSizeLogit, "teamsize_logit"},
    {ModelSelector::TeamExperienceLogit, "teamexp_logit"},
    {ModelSelector::TeamSizeOls, "teamsize_ols"},
    {ModelSelector::TeamExperienceOls, "teamexp_ols"},
    {ModelSelector::Custom, "custom"},
};

constexpr const char* kYearBinsToken = "year_bins";
constexpr const char* kDisciplinesToken = "disciplines";

enum class Outcome { Citations, Hit, MultiDataset, Atypicality, Altmetric };

Outcome outcome_from_name(const std::string& s) {
    if (s == "citations") return Outcome::Citations;
    if (s == "hit") return Outcome::Hit;
    if (s == "multi_dataset") return Outcome::MultiDataset;
    if (s == "atypicality") return Outcome::Atypicality;
    if (s == "altmetric") return Outcome::Altmetric;
    throw std::invalid_argument("unknown outcome \"" + s + "\"");
}

struct Plan {
    Outcome outcome = Outcome::Citations;
    std::size_t min_datasets = 1;
    std::size_t min_topics = 0;
    bool altmetric_era = false;
    std::vector<std::string> covariates;  // may contain the expansion tokens
    std::string population;
};

std::vector<std::string> with_controls(std::vector<std::string> main) {
    std::vector<std::string> out = {kYearBinsToken};
    out.insert(out.end(), main.begin(), main.end());
    for (const char* c : {col::kDataUseFrequencyLog, col::kNumAuthorLog, col::kAuthorExperienceLog, col::kImpactFactorLog})
        out.emplace_back(c);
    out.emplace_back(kDisciplinesToken);
    return out;
}

Plan make_plan(const FeatureSpec& spec) {
    Plan plan;
    const std::vector<std::string> atyp_main = {col::kAtypicality, col::kNumDatasetsLog, col::kPaperNovelty};
    switch (spec.selector) {
        case ModelSelector::DataComb:
            plan.covariates = with_controls({col::kMultiDataset});
            plan.population = "all papers";
            break;
        case ModelSelector::Atypicality:
            plan.covariates = with_controls(atyp_main);
            plan.min_datasets = 2;
            plan.population = "papers using >= 2 datasets";
            break;
        case ModelSelector::Topic:
            plan.covariates =
                with_controls({col::kAtypicality, col::kTopicAtypicality, col::kNumDatasetsLog, col::kPaperNovelty});
            plan.min_datasets = 2;
            plan.min_topics = 2;
            plan.population = "papers using >= 2 datasets with >= 2 topic tags";
            break;
        case ModelSelector::Hit:
            plan.outcome = Outcome::Hit;
            plan.covariates = with_controls(atyp_main);
            plan.min_datasets = 2;
            plan.population = "papers using >= 2 datasets";
            break;
        case ModelSelector::Altmetric:
            plan.outcome = Outcome::Altmetric;
            plan.covariates = with_controls(atyp_main);
            plan.min_datasets = 2;
            plan.altmetric_era = true;
            plan.population = "papers using >= 2 datasets published after " + std::to_string(spec.altmetric_after);
            break;
        case ModelSelector::TeamSizeLogit:
            plan.outcome = Outcome::MultiDataset;
            plan.covariates = {col::kNumAuthorLog, col::kDataUseFrequencyLog, col::kImpactFactorLog};
            plan.population = "all papers";
            break;
        case ModelSelector::TeamExperienceLogit:
            plan.outcome = Outcome::MultiDataset;
            plan.covariates = {col::kAuthorExperienceLog, col::kDataUseFrequencyLog, col::kImpactFactorLog};
            plan.population = "all papers";
            break;
        case ModelSelector::TeamSizeOls:
            plan.outcome = Outcome::Atypicality;
            plan.covariates = {col::kNumAuthorLog, col::kNumDatasetsLog, col::kDataUseFrequencyLog, col::kImpactFactorLog};
            plan.min_datasets = 2;
            plan.population = "papers using >= 2 datasets";
            break;
        case ModelSelector::TeamExperienceOls:
            plan.outcome = Outcome::Atypicality;
            plan.covariates = {col::kAuthorExperienceLog, col::kNumDatasetsLog, col::kDataUseFrequencyLog,
                               col::kImpactFactorLog};
            plan.min_datasets = 2;
            plan.population = "papers using >= 2 datasets";
            break;
        case ModelSelector::Custom:
            plan.outcome = outcome_from_name(spec.outcome);
            plan.covariates = spec.covariates;
            plan.min_datasets = std::max<std::size_t>(1, spec.min_datasets);
            plan.altmetric_era = plan.outcome == Outcome::Altmetric;
            plan.population = "papers using >= " + std::to_string(plan.min_datasets) + " dataset(s)";
            break;
    }
    if (spec.year_from || spec.year_to) {
        plan.population += ", published in [" + (spec.year_from ? std::to_string(*spec.year_from) : "-inf") + ", " +
                           (spec.year_to ? std::to_string(*spec.year_to) : "inf") + ")";
    }
    return plan;
}

bool needs(const Plan& plan, const char* name) {
    return std::find(plan.covariates.begin(), plan.covariates.end(), name) != plan.covariates.end();
}

std::string outcome_label(Outcome o, const FeatureSpec& spec) {
    switch (o) {
        case Outcome::Citations: return "citations_" + std::to_string(static_cast<int>(spec.window)) + "y";
        case Outcome::Hit: return "hit_top5";
        case Outcome::MultiDataset: return "multi_dataset";
        case Outcome::Atypicality: return "atypicality_of_datasets_z";
        case Outcome::Altmetric: return std::string("altmetric_") + channel_name(spec.channel);
    }
    return "?";
}

// z-scores `raws` in place through the shared normalization routine.
void zscore_values(std::vector<double>& raws, const std::vector<bool>& member) {
    std::vector<AtypicalityScore> tmp(raws.size());
    for (std::size_t i = 0; i < raws.size(); ++i) {
        tmp[i].raw = raws[i];
        tmp[i].n_entities = member[i] ? 2 : 1;
    }
    tmp = zscore(std::move(tmp));
    for (std::size_t i = 0; i < raws.size(); ++i) raws[i] = tmp[i].normalized.value_or(0.0);
}

}  // namespace

const char* selector_name(ModelSelector s) {
    for (const auto& e : kSelectorNames)
        if (e.selector == s) return e.name;
    return "?";
}

ModelSelector selector_from_name(const std::string& name) {
    for (const auto& e : kSelectorNames)
        if (name == e.name) return e.selector;
    throw std::invalid_argument("unknown model selector \"" + name + "\"");
}

std::optional<std::size_t> FeatureTable::column_index(const std::string& name) const {
    auto it = std::find(column_names.begin(), column_names.end(), name);
    if (it == column_names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - column_names.begin());
}

const std::vector<double>& FeatureTable::column(const std::string& name) const {
    auto i = column_index(name);
    if (!i) throw std::out_of_range("feature table has no column \"" + name + "\"");
    return columns[*i];
}

FeatureTable build_features(const Corpus& corpus, const ScoreInputs& scores, const FeatureSpec& spec) {
    const Plan plan = make_plan(spec);
    const bool want_bins = spec.include_year_bins && needs(plan, kYearBinsToken);
    const bool want_disc = spec.include_disciplines && needs(plan, kDisciplinesToken);
    const bool want_atyp = needs(plan, col::kAtypicality) || needs(plan, col::kAtypicalityMulti) ||
                           plan.outcome == Outcome::Atypicality;
    const bool want_topic = needs(plan, col::kTopicAtypicality);
    const bool want_novelty = needs(plan, col::kPaperNovelty);
    const bool want_impact = needs(plan, col::kImpactFactorLog);
    const bool want_authors = needs(plan, col::kNumAuthorLog);

    for (const auto& c : plan.covariates) {
        static const std::set<std::string> known = {
            kYearBinsToken,        kDisciplinesToken,     col::kMultiDataset,         col::kAtypicality,
            col::kTopicAtypicality, col::kPaperNovelty,   col::kNumDatasetsLog,       col::kDataUseFrequencyLog,
            col::kNumAuthorLog,    col::kAuthorExperienceLog, col::kImpactFactorLog, col::kAtypicalityMulti};
        if (!known.count(c)) throw std::invalid_argument("unknown covariate \"" + c + "\"");
    }
    if (want_atyp && !scores.dataset) throw std::invalid_argument("dataset atypicality scores required");
    if (want_topic && !scores.topic) throw std::invalid_argument("topic atypicality scores required");
    if (want_novelty && !scores.novelty) throw std::invalid_argument("paper novelty scores required");

    std::map<std::string, int> hits;
    if (plan.outcome == Outcome::Hit) hits = hit_flag(corpus);
    const auto use_counts = dataset_use_counts(corpus);

    FeatureTable t;
    t.outcome_name = outcome_label(plan.outcome, spec);
    t.meta.selector = selector_name(spec.selector);
    t.meta.population = plan.population;

    // Pass 1: population filter and required-field checks.
    std::vector<const PaperRecord*> rows;
    auto drop = [&](const char* reason) {
        ++t.meta.dropped_count;
        ++t.meta.drop_reasons[reason];
    };
    for (const auto& p : corpus.papers()) {
        if (p.n_datasets() < plan.min_datasets) continue;
        if (spec.year_from && p.year < *spec.year_from) continue;
        if (spec.year_to && p.year >= *spec.year_to) continue;
        if (plan.altmetric_era && p.year <= spec.altmetric_after) continue;
        if (plan.min_topics > 0 && topic_union(p, corpus).size() < plan.min_topics) continue;
        ++t.meta.population_count;

        switch (plan.outcome) {
            case Outcome::Citations:
                if (!p.cites.at(spec.window)) { drop("missing citation window"); continue; }
                break;
            case Outcome::Hit:
                if (!hits.count(p.id)) { drop("missing 3-year citations"); continue; }
                break;
            case Outcome::Altmetric:
                if (!p.altmetric) { drop("missing altmetric record"); continue; }
                break;
            case Outcome::MultiDataset:
            case Outcome::Atypicality:
                break;
        }
        if (want_bins) {
            if (p.year <= spec.year_edges.lower || p.year > spec.year_edges.uppers.back()) {
                drop("year outside binned range");
                continue;
            }
        }
        if (want_impact && !corpus.impact_of(p)) { drop("missing journal impact"); continue; }
        if (want_authors && p.author_ids.empty()) { drop("no authors"); continue; }
        if (want_atyp && !scores.dataset->find(p.id)) { drop("missing dataset atypicality"); continue; }
        if (want_topic && !scores.topic->find(p.id)) { drop("missing topic atypicality"); continue; }
        if (want_novelty && !scores.novelty->find(p.id)) { drop("missing paper novelty"); continue; }
        rows.push_back(&p);
    }
    if (rows.empty()) throw EmptyPopulationError(std::string("model ") + t.meta.selector + ": no rows after filtering (" +
                                                 plan.population + ")");

    const std::size_t n = rows.size();
    for (const auto* p : rows) t.row_ids.push_back(p->id);

    std::set<std::string> disciplines;
    if (want_disc)
        for (const auto* p : rows)
            for (const auto& [name, _] : p->discipline_weights) disciplines.insert(name);

    auto add = [&](std::string name, std::vector<double> values) {
        t.column_names.push_back(std::move(name));
        t.columns.push_back(std::move(values));
    };
    auto per_row = [&](auto&& f) {
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = f(*rows[i]);
        return v;
    };
    auto zscored = [&](const ScoreSet& set, bool multi_only) {
        std::vector<double> v(n, 0.0);
        std::vector<bool> member(n, true);
        for (std::size_t i = 0; i < n; ++i) {
            v[i] = set.find(rows[i]->id)->raw;
            if (multi_only) member[i] = rows[i]->n_datasets() >= 2;
        }
        if (multi_only && std::none_of(member.begin(), member.end(), [](bool b) { return b; }))
            return std::vector<double>(n, 0.0);
        zscore_values(v, member);
        return v;
    };

    add(col::kIntercept, std::vector<double>(n, 1.0));
    for (const auto& c : plan.covariates) {
        if (c == kYearBinsToken) {
            if (!want_bins) continue;
            std::vector<std::vector<double>> dummies(spec.year_edges.dummy_count(), std::vector<double>(n, 0.0));
            for (std::size_t i = 0; i < n; ++i) {
                auto b = year_bins(rows[i]->year, spec.year_edges);
                for (std::size_t k = 0; k < b.size(); ++k) dummies[k][i] = b[k];
            }
            // A period subset may leave the reference bin empty; the lowest
            // occupied bin then takes its place.
            std::size_t ref = dummies.size();
            std::string ref_label = "Year_bin[(" + std::to_string(spec.year_edges.lower) + ", " +
                                    std::to_string(spec.year_edges.uppers.front()) + "]]";
            const bool ref_empty = std::all_of(rows.begin(), rows.end(), [&](const PaperRecord* p) {
                return p->year > spec.year_edges.uppers.front();
            });
            if (ref_empty && spec.drop_constant_columns) {
                for (std::size_t k = 0; k < dummies.size() && ref == dummies.size(); ++k)
                    if (std::any_of(dummies[k].begin(), dummies[k].end(), [](double x) { return x != 0.0; })) ref = k;
                if (ref < dummies.size()) ref_label = "Year_bin[" + spec.year_edges.label(ref).substr(11);
            }
            for (std::size_t k = 0; k < dummies.size(); ++k)
                if (k != ref) add(spec.year_edges.label(k), std::move(dummies[k]));
            t.meta.reference_categories.push_back(ref_label);
        } else if (c == kDisciplinesToken) {
            for (const auto& d : disciplines) {
                add(d, per_row([&](const PaperRecord& p) {
                        auto it = p.discipline_weights.find(d);
                        return it == p.discipline_weights.end() ? 0.0 : it->second;
                    }));
            }
        } else if (c == col::kMultiDataset) {
            add(c, per_row([](const PaperRecord& p) { return p.n_datasets() >= 2 ? 1.0 : 0.0; }));
        } else if (c == col::kAtypicality) {
            add(c, zscored(*scores.dataset, false));
        } else if (c == col::kAtypicalityMulti) {
            add(c, zscored(*scores.dataset, true));
        } else if (c == col::kTopicAtypicality) {
            add(c, zscored(*scores.topic, false));
        } else if (c == col::kPaperNovelty) {
            add(c, zscored(*scores.novelty, false));
        } else if (c == col::kNumDatasetsLog) {
            add(c, per_row([](const PaperRecord& p) { return std::log(static_cast<double>(p.n_datasets())); }));
        } else if (c == col::kDataUseFrequencyLog) {
            add(c, per_row([&](const PaperRecord& p) {
                    double sum = 0.0;
                    for (const auto& d : p.dataset_ids) sum += static_cast<double>(use_counts.at(d));
                    return std::log(sum / static_cast<double>(p.n_datasets()));
                }));
        } else if (c == col::kNumAuthorLog) {
            add(c, per_row([](const PaperRecord& p) { return std::log(static_cast<double>(p.author_ids.size())); }));
        } else if (c == col::kAuthorExperienceLog) {
            add(c, per_row([](const PaperRecord& p) { return std::log(p.author_mean_citations + kRecognitionOffset); }));
        } else if (c == col::kImpactFactorLog) {
            add(c, per_row([&](const PaperRecord& p) { return std::log(*corpus.impact_of(p) + kImpactOffset); }));
        }
    }

    // e.g. a year bin or discipline nobody in the population falls into
    for (std::size_t k = spec.drop_constant_columns ? t.columns.size() : 0; k-- > 1;) {
        const auto& v = t.columns[k];
        if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); })) {
            t.meta.dropped_constant_columns.push_back(t.column_names[k]);
            t.columns.erase(t.columns.begin() + static_cast<std::ptrdiff_t>(k));
            t.column_names.erase(t.column_names.begin() + static_cast<std::ptrdiff_t>(k));
        }
    }
    std::reverse(t.meta.dropped_constant_columns.begin(), t.meta.dropped_constant_columns.end());

    t.outcome.resize(n);
    std::vector<double> atyp_outcome;
    if (plan.outcome == Outcome::Atypicality) atyp_outcome = zscored(*scores.dataset, false);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = *rows[i];
        switch (plan.outcome) {
            case Outcome::Citations: t.outcome[i] = static_cast<double>(*p.cites.at(spec.window)); break;
            case Outcome::Hit: t.outcome[i] = hits.at(p.id); break;
            case Outcome::MultiDataset: t.outcome[i] = p.n_datasets() >= 2 ? 1.0 : 0.0; break;
            case Outcome::Atypicality: t.outcome[i] = atyp_outcome[i]; break;
            case Outcome::Altmetric: t.outcome[i] = static_cast<double>(p.altmetric->at(spec.channel)); break;
        }
    }

    t.meta.transforms = {
        {"log", "natural logarithm"},
        {col::kAuthorExperienceLog, "ln(author mean citations + 0.01)"},
        {col::kImpactFactorLog, "ln(journal impact + 0.01)"},
        {col::kNumAuthorLog, "ln(author count), no offset"},
        {col::kNumDatasetsLog, "ln(dataset count), no offset"},
        {col::kDataUseFrequencyLog, "ln(mean papers per used dataset), no offset"},
        {"zscore", "atypicality/novelty columns z-scored over the model rows, sample sd (n-1)"},
    };
    return t;
}

void write_feature_table(const FeatureTable& table, const std::filesystem::path& csv_path,
                         const std::filesystem::path& meta_path) {
    std::string out;
    std::vector<std::string> header = {"row_id", table.outcome_name};
    header.insert(header.end(), table.column_names.begin(), table.column_names.end());
    out += csv_row(header);
    for (std::size_t i = 0; i < table.rows(); ++i) {
        std::vector<std::string> row = {table.row_ids[i], format_double(table.outcome[i])};
        for (const auto& c : table.columns) row.push_back(format_double(c[i]));
        out += csv_row(row);
    }
    write_text_file(csv_path, out);

    nlohmann::ordered_json j;
    j["selector"] = table.meta.selector;
    j["outcome"] = table.outcome_name;
    j["population"] = table.meta.population;
    j["population_count"] = table.meta.population_count;
    j["rows"] = table.rows();
    j["dropped_count"] = table.meta.dropped_count;
    j["drop_reasons"] = table.meta.drop_reasons;
    j["reference_categories"] = table.meta.reference_categories;
    j["dropped_constant_columns"] = table.meta.dropped_constant_columns;
    j["transforms"] = table.meta.transforms;
    write_text_file(meta_path, j.dump(2) + "\n");
}

}  // namespace atyp
