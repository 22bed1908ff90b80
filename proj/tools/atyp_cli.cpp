// atyp: command-line front end. Every subcommand is a slice of the full
// pipeline, so `report` output is the union of the others.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "atyp/pipeline.hpp"
#include "atyp/synth.hpp"

namespace {

struct Common {
    std::string corpus_dir;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<double> alpha;
    std::optional<int> window;
    std::string spec;
    std::vector<std::string> modes;
    bool leave_one_out = false;
    std::string convention = "ordered_with_diagonal";
    bool loose_candidates = false;
};

void add_corpus(CLI::App* cmd, Common& c) {
    cmd->add_option("--corpus-dir", c.corpus_dir, "directory holding datasets/papers/journals .jsonl")->required();
    cmd->add_option("--out", c.out, "output directory")->required();
}

void add_scoring(CLI::App* cmd, Common& c) {
    cmd->add_option("--mode", c.modes, "dataset, topic or journal (repeatable; default all)")
        ->check(CLI::IsMember({"dataset", "topic", "journal"}));
    cmd->add_flag("--leave-one-out", c.leave_one_out, "exclude the focal paper from co-usage vectors");
    cmd->add_option("--pair-convention", c.convention, "ordered_with_diagonal, ordered_off_diagonal or unordered");
}

void add_models(CLI::App* cmd, Common& c) {
    cmd->add_option("--spec", c.spec, "JSON model/pipeline spec");
    cmd->add_option("--alpha", c.alpha, "NB dispersion for models that do not set one")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--window", c.window, "citation window in years")->check(CLI::IsMember({3, 5, 10}));
}

atyp::PipelineConfig base_config(const Common& c) {
    atyp::PipelineConfig cfg;
    cfg.corpus_dir = c.corpus_dir;
    cfg.out_dir = c.out;
    cfg.seed = c.seed;
    cfg.scoring.leave_one_out = c.leave_one_out;
    cfg.scoring.metric.convention = atyp::convention_from_name(c.convention);
    cfg.matching.count.single_dataset_candidates = !c.loose_candidates;
    if (!c.modes.empty()) {
        cfg.modes.clear();
        for (const auto& m : c.modes) {
            const auto em = atyp::mode_from_name(m);
            cfg.modes.push_back(em == atyp::EntityMode::Dataset ? atyp::ScoreMode::Dataset
                                : em == atyp::EntityMode::Topic ? atyp::ScoreMode::Topic
                                                                : atyp::ScoreMode::PaperNovelty);
        }
    }
    return cfg;
}

void load_models(atyp::PipelineConfig& cfg, const Common& c) {
    const auto window = c.window ? atyp::window_from_years(*c.window) : atyp::CitationWindow::Y3;
    cfg.models = atyp::default_models(c.alpha, window);
    if (!c.spec.empty()) {
        const auto seed = cfg.seed;
        atyp::apply_spec_file(cfg, c.spec, c.alpha, window);
        if (seed) cfg.seed = seed;  // command line wins
    }
    if (c.window && !c.spec.empty()) {
        for (auto& m : cfg.models) m.features.window = window;
    }
}

void print_result(const atyp::PipelineResult& r, const std::string& out) {
    for (const auto& [name, converged] : r.models)
        std::cout << "model " << name << (converged ? " converged\n" : " did NOT converge\n");
    std::cout << r.files.size() << " files written to " << out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Atypical dataset combination analysis"};
    app.require_subcommand(1);
    Common c;

    auto* ingest = app.add_subcommand("ingest", "load and validate a corpus");
    add_corpus(ingest, c);

    auto* score = app.add_subcommand("score", "per-paper atypicality scores");
    add_corpus(score, c);
    add_scoring(score, c);

    auto* fit = app.add_subcommand("fit", "feature tables and regression fits");
    add_corpus(fit, c);
    add_models(fit, c);

    auto* match = app.add_subcommand("match", "matched-pair robustness checks");
    add_corpus(match, c);
    match->add_option("--seed", c.seed, "tie-break seed")->required();
    match->add_option("--window", c.window, "evaluate one citation window only")->check(CLI::IsMember({3, 5, 10}));
    match->add_flag("--loose-candidates", c.loose_candidates,
                    "count matching: allow candidates with other datasets besides one of the two");

    auto* report = app.add_subcommand("report", "full pipeline and plot-ready series");
    add_corpus(report, c);
    add_scoring(report, c);
    add_models(report, c);
    report->add_option("--seed", c.seed, "tie-break seed for matching");
    bool no_matching = false;
    report->add_flag("--no-matching", no_matching, "skip the matching stage");
    report->add_flag("--loose-candidates", c.loose_candidates,
                     "count matching: allow candidates with other datasets besides one of the two");

    auto* synth = app.add_subcommand("synth", "generate a synthetic corpus with planted effects");
    atyp::SynthConfig sc;
    synth->add_option("--out", c.out, "output directory")->required();
    synth->add_option("--seed", sc.seed, "generator seed");
    synth->add_option("--papers", sc.papers);
    synth->add_option("--datasets", sc.datasets);
    synth->add_option("--topics", sc.topics);
    synth->add_option("--journals", sc.journals);
    synth->add_option("--multi-prob", sc.multi_dataset_prob, "probability of using >= 2 datasets");
    synth->add_option("--popularity-exponent", sc.popularity_exponent);
    synth->add_option("--alpha", sc.alpha, "NB dispersion of the planted outcome")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            const auto out = atyp::generate_corpus(sc);
            atyp::write_synth(out, c.out);
            std::cout << out.corpus.papers().size() << " papers, " << out.corpus.datasets().size()
                      << " datasets written to " << c.out << "\n";
            return 0;
        }

        auto cfg = base_config(c);
        cfg.matching.enabled = false;
        if (ingest->parsed()) {
            cfg.modes.clear();
        } else if (score->parsed()) {
            // modes only
        } else if (fit->parsed()) {
            cfg.modes.clear();
            load_models(cfg, c);
        } else if (match->parsed()) {
            cfg.modes.clear();
            cfg.matching.enabled = true;
            if (c.window) cfg.matching.windows = {atyp::window_from_years(*c.window)};
        } else if (report->parsed()) {
            cfg.matching.enabled = !no_matching;
            load_models(cfg, c);
        }
        const auto r = atyp::run_pipeline(cfg);
        print_result(r, c.out);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
