#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "atyp/features.hpp"
#include "atyp/synth.hpp"
#include "support.hpp"

using namespace atyp;
namespace ts = testsupport;

TEST_CASE("year bins are right-closed with a reference bin") {
    YearBinEdges e;
    auto b1977 = year_bins(1977);
    CHECK(b1977.size() == e.dummy_count());
    CHECK(b1977[0] == 1.0);
    CHECK(e.label(0) == "Year_bin[T.(1974, 1979]]");
    CHECK(std::count(b1977.begin(), b1977.end(), 1.0) == 1);

    auto b1984 = year_bins(1984);
    CHECK(b1984[1] == 1.0);
    CHECK(e.label(1) == "Year_bin[T.(1979, 1984]]");

    auto b1974 = year_bins(1974);
    CHECK(std::all_of(b1974.begin(), b1974.end(), [](double x) { return x == 0.0; }));

    auto b2019 = year_bins(2019);
    CHECK(b2019.back() == 1.0);
    CHECK(e.label(e.dummy_count() - 1) == "Year_bin[T.(2014, 2019]]");

    auto b1975 = year_bins(1975);
    CHECK(b1975[0] == 1.0);
    CHECK_THROWS_AS(year_bins(2020), YearOutOfRangeError);
    CHECK_THROWS_AS(year_bins(1930), YearOutOfRangeError);
}

TEST_CASE("hit flag uses strict exceedance of the nearest-rank 95th percentile") {
    auto make = [](const std::vector<std::int64_t>& cites) {
        std::vector<PaperRecord> ps;
        for (std::size_t i = 0; i < cites.size(); ++i) {
            char id[16];
            std::snprintf(id, sizeof id, "P%03zu", i);
            auto p = ts::paper(id, 2000, {"A"});
            p.cites.y3 = cites[i];
            ps.push_back(p);
        }
        return Corpus({ts::dataset("A", {"T"})}, ps, {{"J1", 1}});
    };
    std::vector<std::int64_t> seq(100);
    for (int i = 0; i < 100; ++i) seq[i] = i + 1;
    auto flags = hit_flag(make(seq));
    std::vector<std::int64_t> flagged;
    auto c = make(seq);
    for (const auto& p : c.papers())
        if (flags.at(p.id)) flagged.push_back(*p.cites.y3);
    std::sort(flagged.begin(), flagged.end());
    CHECK(flagged == std::vector<std::int64_t>{96, 97, 98, 99, 100});

    auto equal = hit_flag(make(std::vector<std::int64_t>(30, 7)));
    CHECK(std::all_of(equal.begin(), equal.end(), [](const auto& kv) { return kv.second == 0; }));

    std::vector<std::int64_t> outlier(20, 0);
    outlier[13] = 1000;
    auto oc = make(outlier);
    auto of = hit_flag(oc);
    int n = 0;
    for (const auto& [id, f] : of) n += f;
    CHECK(n == 1);
    CHECK(of.at(oc.papers()[13].id) == 1);

    CHECK_THROWS_AS(hit_flag(make(std::vector<std::int64_t>(19, 1))), PercentileUndefinedError);
}

TEST_CASE("use frequency is the log mean usage of the paper's datasets") {
    // dataset A used by 10 papers, B by 20; the focal paper uses both
    std::vector<PaperRecord> ps;
    ps.push_back(ts::paper("F", 2000, {"A", "B"}));
    for (int i = 0; i < 9; ++i) ps.push_back(ts::paper("a" + std::to_string(i), 2000, {"A"}));
    for (int i = 0; i < 19; ++i) ps.push_back(ts::paper("b" + std::to_string(i), 2000, {"B"}));
    Corpus c({ts::dataset("A", {"T"}), ts::dataset("B", {"T"})}, ps, {{"J1", 2.0}});
    auto uses = dataset_use_counts(c);
    CHECK(uses.at("A") == 10);
    CHECK(uses.at("B") == 20);

    FeatureSpec spec;
    spec.selector = ModelSelector::DataComb;
    spec.drop_constant_columns = false;
    auto t = build_features(c, {}, spec);
    const auto row = static_cast<std::size_t>(
        std::find(t.row_ids.begin(), t.row_ids.end(), "F") - t.row_ids.begin());
    CHECK(t.column(col::kDataUseFrequencyLog)[row] == doctest::Approx(std::log(15.0)).epsilon(1e-15));
    CHECK(t.column(col::kMultiDataset)[row] == 1.0);
    CHECK(t.column(col::kImpactFactorLog)[row] == doctest::Approx(std::log(2.01)));
    CHECK(t.column(col::kAuthorExperienceLog)[row] == doctest::Approx(std::log(1.01)));
    CHECK(t.column(col::kNumAuthorLog)[row] == 0.0);
    const auto other = row == 0 ? 1 : 0;
    CHECK(t.column(col::kMultiDataset)[other] == 0.0);
}

namespace {

SynthOutput small_synth(std::uint64_t seed) {
    SynthConfig cfg;
    cfg.papers = 1500;
    cfg.datasets = 150;
    cfg.seed = seed;
    return generate_corpus(cfg);
}

ScoreSet scores_for(const Corpus& c, ScoreMode m) {
    auto ix = build_incidence(c, entity_mode_for(m));
    return score_corpus(c, ix, m);
}

}  // namespace

TEST_CASE("table invariants for every selector") {
    auto out = small_synth(5);
    const auto& c = out.corpus;
    auto ds = scores_for(c, ScoreMode::Dataset), tp = scores_for(c, ScoreMode::Topic),
         nv = scores_for(c, ScoreMode::PaperNovelty);
    for (auto sel : {ModelSelector::DataComb, ModelSelector::Atypicality, ModelSelector::Topic, ModelSelector::Hit,
                     ModelSelector::Altmetric, ModelSelector::TeamSizeLogit, ModelSelector::TeamExperienceLogit,
                     ModelSelector::TeamSizeOls, ModelSelector::TeamExperienceOls}) {
        CAPTURE(selector_name(sel));
        FeatureSpec spec;
        spec.selector = sel;
        auto t = build_features(c, {&ds, &tp, &nv}, spec);
        CHECK(t.rows() + t.meta.dropped_count == t.meta.population_count);
        CHECK(t.outcome.size() == t.rows());
        for (const auto& v : t.columns) {
            REQUIRE(v.size() == t.rows());
            CHECK(std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); }));
        }
        // year dummies sum to at most 1
        for (std::size_t i = 0; i < t.rows(); ++i) {
            double s = 0;
            for (std::size_t k = 0; k < t.columns.size(); ++k)
                if (t.column_names[k].rfind("Year_bin", 0) == 0) s += t.columns[k][i];
            CHECK(s <= 1.0);
        }
        if (sel == ModelSelector::Atypicality) {
            const auto& z = t.column(col::kAtypicality);
            double m = 0;
            for (double x : z) m += x;
            CHECK(std::abs(m / static_cast<double>(z.size())) < 1e-10);
        }
    }
}

TEST_CASE("period subsets promote the lowest occupied bin to reference") {
    auto out = small_synth(6);
    auto ds = scores_for(out.corpus, ScoreMode::Dataset);
    FeatureSpec spec;
    spec.year_from = 1990;
    spec.year_to = 2000;
    auto t = build_features(out.corpus, {&ds, nullptr, nullptr}, spec);
    CHECK(t.meta.reference_categories.front() == "Year_bin[(1989, 1994]]");
    CHECK_FALSE(t.column_index("Year_bin[T.(1989, 1994]]"));
    CHECK(t.column_index("Year_bin[T.(1994, 1999]]"));
    for (const auto& id : t.row_ids) {
        const int y = out.corpus.find_paper(id)->year;
        CHECK(y >= 1990);
        CHECK(y < 2000);
    }
}

TEST_CASE("missing required fields drop rows and are counted") {
    std::vector<PaperRecord> ps;
    for (int i = 0; i < 6; ++i) ps.push_back(ts::paper("P" + std::to_string(i), 2000 + i, {"A"}));
    ps[1].cites.y3.reset();
    ps[2].journal_id.reset();
    Corpus c({ts::dataset("A", {"T"})}, ps, {{"J1", 1.0}});
    FeatureSpec spec;
    auto t = build_features(c, {}, spec);
    CHECK(t.rows() == 4);
    CHECK(t.meta.dropped_count == 2);
    CHECK(t.meta.drop_reasons.at("missing citation window") == 1);
    CHECK(t.meta.drop_reasons.at("missing journal impact") == 1);

    spec.year_from = 2050;
    CHECK_THROWS_AS(build_features(c, {}, spec), EmptyPopulationError);
}

TEST_CASE("a permuted corpus gives the same table") {
    auto out = small_synth(7);
    auto papers = out.corpus.papers();
    std::mt19937_64 rng(1);
    std::shuffle(papers.begin(), papers.end(), rng);
    Corpus shuffled(out.corpus.datasets(), papers, out.corpus.journal_impact());
    auto a = scores_for(out.corpus, ScoreMode::Dataset), b = scores_for(shuffled, ScoreMode::Dataset);
    auto na = scores_for(out.corpus, ScoreMode::PaperNovelty), nb = scores_for(shuffled, ScoreMode::PaperNovelty);
    FeatureSpec spec;
    spec.selector = ModelSelector::Atypicality;
    auto ta = build_features(out.corpus, {&a, nullptr, &na}, spec);
    auto tb = build_features(shuffled, {&b, nullptr, &nb}, spec);
    CHECK(ta.row_ids == tb.row_ids);
    CHECK(ta.column_names == tb.column_names);
    CHECK(ta.columns == tb.columns);
    CHECK(ta.outcome == tb.outcome);
}

TEST_CASE("feature table CSV and sidecar") {
    auto out = small_synth(8);
    FeatureSpec spec;
    auto t = build_features(out.corpus, {}, spec);
    auto dir = ts::scratch_dir("features_csv");
    write_feature_table(t, dir / "t.csv", dir / "t.meta.json");
    CHECK(std::filesystem::exists(dir / "t.csv"));
    CHECK(std::filesystem::exists(dir / "t.meta.json"));
}
