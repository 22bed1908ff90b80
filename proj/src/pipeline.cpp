#include "atyp/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "atyp/simengine.hpp"
#include "atyp/textio.hpp"

namespace atyp {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

struct Period {
    const char* label;
    std::optional<int> from;
    std::optional<int> to;
};

const std::vector<Period> kPeriods = {
    {"before 1990", std::nullopt, 1990},
    {"1990-2000", 1990, 2000},
    {"2000-2010", 2000, 2010},
    {"2010-2020", 2010, 2020},
};

Family default_family(ModelSelector s) {
    switch (s) {
        case ModelSelector::Hit:
        case ModelSelector::TeamSizeLogit:
        case ModelSelector::TeamExperienceLogit: return Family::Logistic;
        case ModelSelector::TeamSizeOls:
        case ModelSelector::TeamExperienceOls: return Family::Ols;
        default: return Family::NegativeBinomial;
    }
}

// Variables reported in the plot series of a model.
std::vector<std::string> key_variables(const ModelRun& run) {
    switch (run.features.selector) {
        case ModelSelector::DataComb: return {col::kMultiDataset};
        case ModelSelector::Atypicality:
        case ModelSelector::Hit:
        case ModelSelector::Altmetric: return {col::kAtypicality};
        case ModelSelector::Topic: return {col::kAtypicality, col::kTopicAtypicality};
        case ModelSelector::TeamSizeLogit:
        case ModelSelector::TeamSizeOls: return {col::kNumAuthorLog};
        case ModelSelector::TeamExperienceLogit:
        case ModelSelector::TeamExperienceOls: return {col::kAuthorExperienceLog};
        case ModelSelector::Custom: return run.features.covariates;
    }
    return {};
}

bool citation_outcome(const ModelRun& run) {
    const auto s = run.features.selector;
    return s == ModelSelector::DataComb || s == ModelSelector::Atypicality || s == ModelSelector::Topic ||
           (s == ModelSelector::Custom && run.features.outcome == "citations");
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// JSON has no infinities.
ojson json_number(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

ojson test_to_json(const TestResult& t) {
    ojson j;
    j["test"] = t.test;
    j["statistic"] = json_number(t.statistic);
    j["p_value"] = json_number(t.p_value);
    j["n"] = t.n;
    j["excluded"] = t.excluded;
    return j;
}

template <class F>
auto in_stage(const std::string& stage, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

class BundleWriter {
public:
    explicit BundleWriter(fs::path root) : root_(std::move(root)) {}

    void write(const std::string& rel, const std::string& content) {
        write_text_file(root_ / rel, content);
        files_.push_back(rel);
    }
    // for files written by another module's writer
    void record(const std::string& rel) { files_.push_back(rel); }
    std::vector<std::string> files() const {
        auto f = files_;
        std::sort(f.begin(), f.end());
        return f;
    }

private:
    fs::path root_;
    std::vector<std::string> files_;
};

std::string series_header() {
    return csv_row({"panel", "model", "variable", "outcome", "window", "period", "family", "n_obs", "coef", "std_err",
                    "ci_low", "ci_high", "effect_pct", "effect_ci_low_pct", "effect_ci_high_pct", "converged",
                    "note"});
}

struct SeriesVariant {
    std::string panel;
    std::string period = "all";
    ModelRun run;
};

std::vector<SeriesVariant> series_variants(const ModelRun& base) {
    std::vector<SeriesVariant> out;
    if (citation_outcome(base)) {
        for (auto w : {CitationWindow::Y3, CitationWindow::Y5, CitationWindow::Y10}) {
            SeriesVariant v{"window", "all", base};
            v.run.features.window = w;
            out.push_back(std::move(v));
        }
    } else {
        out.push_back({"window", "all", base});
    }
    if (base.features.selector != ModelSelector::Altmetric &&
        !(base.features.selector == ModelSelector::Custom && base.features.outcome == "altmetric")) {
        for (const auto& p : kPeriods) {
            SeriesVariant v{"period", p.label, base};
            v.run.features.year_from = p.from;
            v.run.features.year_to = p.to;
            out.push_back(std::move(v));
        }
    }
    if (base.features.selector == ModelSelector::Atypicality) {
        for (auto c : kAltmetricChannels) {
            SeriesVariant v{"altmetric", "all", base};
            v.run.features.selector = ModelSelector::Altmetric;
            v.run.features.channel = c;
            out.push_back(std::move(v));
        }
    }
    return out;
}

void append_series_rows(std::string& csv, const SeriesVariant& v, const std::vector<std::string>& vars,
                        const std::optional<ModelOutcome>& res, const std::string& note) {
    const std::string window = std::to_string(static_cast<int>(v.run.features.window));
    const std::string fam = family_name(v.run.model.family);
    for (const auto& name : vars) {
        std::vector<std::string> row = {v.panel, v.run.name, name};
        if (!res) {
            row.insert(row.end(), {"", window, v.period, fam, "", "", "", "", "", "", "", "", "false", note});
            csv += csv_row(row);
            continue;
        }
        const auto& fit = res->fit;
        auto it = std::find_if(fit.coefficients.begin(), fit.coefficients.end(),
                               [&](const Coefficient& c) { return c.name == name; });
        if (it == fit.coefficients.end()) {
            row.insert(row.end(), {fit.outcome, window, v.period, fam, std::to_string(fit.n_obs), "", "", "", "", "",
                                   "", "", fit.converged ? "true" : "false", "variable dropped"});
            csv += csv_row(row);
            continue;
        }
        const bool ratio = fit.family != Family::Ols;
        row.insert(row.end(),
                   {fit.outcome, window, v.period, fam, std::to_string(fit.n_obs), format_double(it->coef),
                    format_double(it->std_err), format_double(it->ci_low), format_double(it->ci_high),
                    ratio ? format_double(effect_pct(it->coef).percent) : "",
                    ratio ? format_double(effect_pct(it->ci_low).percent) : "",
                    ratio ? format_double(effect_pct(it->ci_high).percent) : "", fit.converged ? "true" : "false",
                    note});
        csv += csv_row(row);
    }
}

ojson design_decisions(const PipelineConfig& c) {
    ojson d;
    d["pair_convention"] = convention_name(c.scoring.metric.convention);
    d["leave_one_out"] = c.scoring.leave_one_out;
    d["similarity_population"] = "all loaded papers";
    d["cosine_empty_column"] = "similarity 0 with every entity, itself included";
    d["entity_weights"] = "datasets and topics 1/N; journals by reference share";
    d["zscore"] = "sample sd (n-1) over the model rows with >= 2 entities";
    d["atypicality_x_multi"] = "z-scored over multi-dataset rows, 0 elsewhere";
    d["hit_threshold"] = "3-year citations strictly above the nearest-rank 95th percentile";
    d["year_bins"] = "right-closed 5-year bins, reference (1930, 1974]";
    d["period_filter"] = "[from, to)";
    d["altmetric_population"] = "year > 2010";
    d["recognition_offset"] = kRecognitionOffset;
    d["impact_offset"] = kImpactOffset;
    d["drop_constant_columns"] = true;
    d["nb_dispersion"] = "fixed per model";
    d["standard_errors"] = "inverse observed information";
    d["confidence_interval"] = "Wald, z = 1.959963984540054 (OLS: Student t)";
    d["convergence"] = "relative log-likelihood change < 1e-10 and |grad| <= 1e-8 (1 + |beta|), at most 100 iterations";
    d["count_match_candidates"] =
        c.matching.count.single_dataset_candidates ? "single-dataset papers using one of the two datasets"
                                                   : "papers using exactly one of the two datasets";
    d["atypicality_match_focals"] = "two-dataset papers among the ceil(n/10) highest scores, ties at the cutoff included";
    d["atypicality_match_candidates"] = "other two-dataset papers sharing a dataset, strictly lower score";
    d["match_tie_break"] = "seeded uniform choice";
    d["ratio_mean"] = "pairs with a nonzero matched count";
    d["ratio_median"] = "all pairs, x/0 = inf, 0/0 = 1";
    d["sign_test"] = "exact two-sided binomial, ties dropped";
    d["impact_factor"] = c.recompute_impact_year ? "recomputed from corpus citations" : "as supplied";
    return d;
}

}  // namespace

void PipelineConfig::check() const {
    if (corpus_dir.empty()) throw ConfigError("no corpus directory given");
    const auto paths = CorpusPaths::in_directory(corpus_dir);
    for (const auto& p : {paths.datasets, paths.papers, paths.journals})
        if (!fs::is_regular_file(p)) throw ConfigError("corpus file not found: " + p.string());
    if (out_dir.empty()) throw ConfigError("no output directory given");
    if (matching.enabled && !seed) throw ConfigError("matching is enabled but no seed is set");
    if (matching.enabled && matching.windows.empty()) throw ConfigError("matching needs at least one window");
    std::set<std::string> names;
    for (const auto& m : models) {
        if (m.name.empty()) throw ConfigError("model without a name");
        if (!names.insert(m.name).second) throw ConfigError("duplicate model name \"" + m.name + "\"");
        if (m.model.family == Family::NegativeBinomial && !(m.model.alpha > 0.0))
            throw ConfigError("model \"" + m.name + "\": dispersion must be positive");
    }
}

std::vector<ModelRun> default_models(std::optional<double> alpha, CitationWindow window) {
    std::vector<ModelRun> out;
    auto add = [&](const char* name, ModelSelector s, double a) {
        ModelRun r;
        r.name = name;
        r.features.selector = s;
        r.features.window = window;
        r.model.family = default_family(s);
        r.model.alpha = a;
        out.push_back(std::move(r));
    };
    add("datacomb", ModelSelector::DataComb, alpha.value_or(kDefaultAlpha));
    add("atypicality", ModelSelector::Atypicality, alpha.value_or(kDefaultAlpha));
    add("topic", ModelSelector::Topic, alpha.value_or(kTopicAlpha));
    return out;
}

ModelRun model_from_json(const nlohmann::json& j, std::optional<double> default_alpha, CitationWindow default_window) {
    ModelRun r;
    r.name = j.at("name").get<std::string>();
    r.features.selector = selector_from_name(j.value("selector", std::string("custom")));
    r.features.window = j.contains("window") ? window_from_years(j.at("window").get<int>()) : default_window;
    if (j.contains("channel")) r.features.channel = channel_from_name(j.at("channel").get<std::string>());
    if (j.contains("period")) {
        const auto& p = j.at("period");
        if (!p.is_array() || p.size() != 2) throw ConfigError("model \"" + r.name + "\": period must be [from, to]");
        if (!p[0].is_null()) r.features.year_from = p[0].get<int>();
        if (!p[1].is_null()) r.features.year_to = p[1].get<int>();
    }
    r.features.include_year_bins = j.value("year_bins", true);
    r.features.include_disciplines = j.value("disciplines", true);
    if (j.contains("covariates")) r.features.covariates = j.at("covariates").get<std::vector<std::string>>();
    r.features.outcome = j.value("outcome", std::string("citations"));
    r.features.min_datasets = j.value("min_datasets", std::size_t{1});
    r.model.family = j.contains("family") ? family_from_name(j.at("family").get<std::string>())
                                          : default_family(r.features.selector);
    r.model.alpha = j.value(
        "alpha", default_alpha.value_or(r.features.selector == ModelSelector::Topic ? kTopicAlpha : kDefaultAlpha));
    if (j.contains("information")) {
        const auto info = j.at("information").get<std::string>();
        if (info == "observed") r.model.options.information = Information::Observed;
        else if (info == "expected") r.model.options.information = Information::Expected;
        else throw ConfigError("model \"" + r.name + "\": information must be observed or expected");
    }
    return r;
}

void apply_spec_file(PipelineConfig& config, const fs::path& spec_path, std::optional<double> default_alpha,
                     CitationWindow default_window) {
    if (!fs::is_regular_file(spec_path)) throw ConfigError("spec file not found: " + spec_path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(spec_path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(spec_path.string() + ": " + e.what());
    }
    try {
        if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("modes")) {
            config.modes.clear();
            for (const auto& m : j.at("modes")) {
                const auto em = mode_from_name(m.get<std::string>());
                config.modes.push_back(em == EntityMode::Dataset ? ScoreMode::Dataset
                                       : em == EntityMode::Topic ? ScoreMode::Topic
                                                                 : ScoreMode::PaperNovelty);
            }
        }
        if (j.contains("pair_convention"))
            config.scoring.metric.convention = convention_from_name(j.at("pair_convention").get<std::string>());
        config.scoring.leave_one_out = j.value("leave_one_out", config.scoring.leave_one_out);
        if (j.contains("recompute_impact_year")) config.recompute_impact_year = j.at("recompute_impact_year").get<int>();
        if (j.contains("models")) {
            config.models.clear();
            for (const auto& m : j.at("models")) config.models.push_back(model_from_json(m, default_alpha, default_window));
        }
        if (j.contains("matching")) {
            const auto& m = j.at("matching");
            config.matching.enabled = m.value("enabled", config.matching.enabled);
            config.matching.count.single_dataset_candidates =
                m.value("single_dataset_candidates", config.matching.count.single_dataset_candidates);
            if (m.contains("windows")) {
                config.matching.windows.clear();
                for (const auto& w : m.at("windows")) config.matching.windows.push_back(window_from_years(w.get<int>()));
            }
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(spec_path.string() + ": " + e.what());
    }
}

ScoreInputs ScoreBundle::inputs() const {
    return {dataset ? &*dataset : nullptr, topic ? &*topic : nullptr, novelty ? &*novelty : nullptr};
}

ScoreBundle compute_scores(const Corpus& corpus, const std::vector<ScoreMode>& modes, const ScoringOptions& opts) {
    ScoreBundle b;
    for (auto m : modes) {
        const IncidenceIndex index = build_incidence(corpus, entity_mode_for(m));
        const auto empty = index.empty_entities();
        if (!empty.empty())
            b.warnings.push_back(std::string(score_mode_name(m)) + ": " + std::to_string(empty.size()) +
                                 " entities with no usage (similarity 0)");
        ScoreSet s = score_corpus(corpus, index, m, opts);
        if (!s.skipped.empty())
            b.warnings.push_back(std::string(score_mode_name(m)) + ": " + std::to_string(s.skipped.size()) +
                                 " papers not scored");
        switch (m) {
            case ScoreMode::Dataset: b.dataset = std::move(s); break;
            case ScoreMode::Topic: b.topic = std::move(s); break;
            case ScoreMode::PaperNovelty: b.novelty = std::move(s); break;
        }
    }
    return b;
}

std::string scores_to_csv(const ScoreSet& set, std::vector<std::string>* warnings) {
    std::vector<AtypicalityScore> scores = set.scores;
    try {
        scores = zscore(std::move(scores));
    } catch (const DegeneratePopulationError& e) {
        scores = set.scores;
        for (auto& s : scores) s.normalized.reset();
        if (warnings) warnings->push_back(std::string(score_mode_name(set.mode)) + ": not normalized: " + e.what());
    }
    std::string out = csv_row({"paper_id", "mode", "raw", "normalized", "n_entities"});
    for (const auto& s : scores)
        out += csv_row({s.paper_id, score_mode_name(s.mode), format_double(s.raw),
                        s.normalized ? format_double(*s.normalized) : "", std::to_string(s.n_entities)});
    return out;
}

ModelOutcome run_model(const Corpus& corpus, const ScoreBundle& scores, const ModelRun& run) {
    ModelOutcome out;
    out.name = run.name;
    out.table = build_features(corpus, scores.inputs(), run.features);
    out.fit = fit_model(out.table, run.model);
    return out;
}

ojson validation_to_json(const ValidationReport& r) {
    ojson j;
    j["ok"] = r.ok();
    j["papers"] = r.papers;
    j["datasets"] = r.datasets;
    j["single_dataset_papers"] = r.single_dataset_papers;
    j["multi_dataset_papers"] = r.multi_dataset_papers;
    auto list = [](const std::vector<Violation>& v) {
        ojson a = ojson::array();
        for (const auto& x : v) a.push_back({{"record", x.record_id}, {"message", x.message}});
        return a;
    };
    j["errors"] = list(r.errors);
    j["warnings"] = list(r.warnings);
    return j;
}

ojson evaluation_to_json(const PairEvaluation& ev) {
    ojson j;
    j["window"] = static_cast<int>(ev.window);
    j["usable_pairs"] = ev.usable_pairs;
    j["missing_outcome"] = ev.missing_outcome;
    j["paired_t"] = test_to_json(ev.paired_t);
    j["ratio_mean"] = json_number(ev.ratio_mean);
    j["ratio_mean_t"] = ev.mean_t ? test_to_json(*ev.mean_t) : ojson(nullptr);
    j["ratio_median"] = json_number(ev.ratio_median);
    j["zero_denominator"] = ev.zero_denominator;
    j["sign"] = test_to_json(ev.sign);
    return j;
}

PipelineResult run_pipeline(const PipelineConfig& config) {
    in_stage("config", [&] { config.check(); });
    BundleWriter out(config.out_dir);
    ojson manifest;
    manifest["tool"] = "atyp";
    manifest["schema"] = kSchemaVersion;
    manifest["seed"] = config.seed ? ojson(*config.seed) : ojson(nullptr);
    std::vector<std::string> warnings;

    // ingest
    Corpus corpus = in_stage("ingest", [&] { return load_corpus(CorpusPaths::in_directory(config.corpus_dir)); });
    const ValidationReport report = validate(corpus);
    out.write("validation.json", validation_to_json(report).dump(2) + "\n");
    if (!report.ok()) {
        const auto& e = report.errors.front();
        throw StageError("ingest", std::to_string(report.errors.size()) + " validation error(s), first: " +
                                       e.record_id + ": " + e.message);
    }
    if (config.recompute_impact_year) {
        auto impact = recompute_journal_impact(corpus, *config.recompute_impact_year);
        corpus = Corpus(corpus.datasets(), corpus.papers(), std::move(impact));
    }
    manifest["corpus"] = {{"content_hash", hex64(content_hash(corpus))},
                          {"papers", report.papers},
                          {"datasets", report.datasets},
                          {"validation_warnings", report.warnings.size()}};
    manifest["design_decisions"] = design_decisions(config);

    // score
    std::vector<ScoreMode> needed = config.modes;
    if (!config.models.empty() || config.matching.enabled)
        for (auto m : {ScoreMode::Dataset, ScoreMode::Topic, ScoreMode::PaperNovelty})
            if (std::find(needed.begin(), needed.end(), m) == needed.end()) needed.push_back(m);
    std::sort(needed.begin(), needed.end());
    const ScoreBundle scores = in_stage("score", [&] { return compute_scores(corpus, needed, config.scoring); });
    warnings.insert(warnings.end(), scores.warnings.begin(), scores.warnings.end());
    ojson score_meta = ojson::object();
    for (auto m : config.modes) {
        const ScoreSet* s = m == ScoreMode::Dataset ? &*scores.dataset
                            : m == ScoreMode::Topic ? &*scores.topic
                                                    : &*scores.novelty;
        out.write(std::string("scores/") + score_mode_name(m) + ".csv", scores_to_csv(*s, &warnings));
        score_meta[score_mode_name(m)] = {{"scored", s->scores.size()}, {"skipped", s->skipped.size()}};
    }
    manifest["scores"] = score_meta;

    // fit
    ojson models = ojson::array();
    PipelineResult result;
    std::string series = series_header();
    std::size_t series_fits = 0;
    for (const auto& run : config.models) {
        const ModelOutcome mo = in_stage("fit model \"" + run.name + "\"", [&] { return run_model(corpus, scores, run); });
        write_feature_table(mo.table, config.out_dir / ("features/" + run.name + ".csv"),
                            config.out_dir / ("features/" + run.name + ".meta.json"));
        out.record("features/" + run.name + ".csv");
        out.record("features/" + run.name + ".meta.json");
        out.write("models/" + run.name + ".csv", fit_to_csv(mo.fit));
        out.write("models/" + run.name + ".json", fit_to_json(mo.fit).dump(2) + "\n");
        ojson m;
        m["name"] = run.name;
        m["selector"] = selector_name(run.features.selector);
        m["family"] = family_name(run.model.family);
        if (run.model.family == Family::NegativeBinomial) m["alpha"] = run.model.alpha;
        m["outcome"] = mo.fit.outcome;
        m["n_obs"] = mo.fit.n_obs;
        m["converged"] = mo.fit.converged;
        m["iterations"] = mo.fit.iterations;
        m["log_likelihood"] = mo.fit.log_likelihood;
        m["dropped_rows"] = mo.table.meta.dropped_count;
        m["dropped_constant_columns"] = mo.table.meta.dropped_constant_columns;
        models.push_back(m);
        result.models.emplace_back(run.name, mo.fit.converged);

        // report series: refits over windows, periods and channels; a
        // variant that cannot be fitted is recorded, not fatal
        const auto vars = key_variables(run);
        for (const auto& v : series_variants(run)) {
            std::optional<ModelOutcome> res;
            std::string note;
            try {
                res = run_model(corpus, scores, v.run);
                ++series_fits;
            } catch (const std::exception& e) {
                note = e.what();
            }
            append_series_rows(series, v, vars, res, note);
        }
    }
    manifest["models"] = models;
    if (!config.models.empty()) out.write("report/effects.csv", series);
    manifest["report_series_fits"] = series_fits;

    // match
    if (config.matching.enabled) {
        ojson mj;
        auto evaluate = [&](const char* kind, const MatchReport& rep) {
            out.write(std::string("matching/") + kind + "_pairs.csv", pairs_to_csv(rep.pairs));
            ojson s;
            s["method"] = kind;
            s["focal_papers"] = rep.focal_count;
            s["pairs"] = rep.pairs.size();
            s["no_candidate"] = rep.no_candidate;
            s["filtered"] = rep.filtered;
            ojson evs = ojson::array();
            for (auto w : config.matching.windows) {
                try {
                    evs.push_back(evaluation_to_json(evaluate_pairs(rep.pairs, w)));
                } catch (const std::invalid_argument& e) {
                    evs.push_back({{"window", static_cast<int>(w)}, {"error", e.what()}});
                }
            }
            s["evaluations"] = evs;
            out.write(std::string("matching/") + kind + "_summary.json", s.dump(2) + "\n");
            mj[kind] = {{"pairs", rep.pairs.size()}, {"filtered", rep.filtered}};
        };
        const auto by_count = in_stage("match", [&] { return match_by_count(corpus, *config.seed, config.matching.count); });
        evaluate("count", by_count);
        const auto by_atyp =
            in_stage("match", [&] { return match_by_atypicality(corpus, *scores.dataset, *config.seed); });
        evaluate("atypicality", by_atyp);
        manifest["matching"] = mj;
    }

    manifest["warnings"] = warnings;
    result.files = out.files();
    manifest["files"] = result.files;
    write_text_file(config.out_dir / "manifest.json", manifest.dump(2) + "\n");
    return result;
}

}  // namespace atyp
