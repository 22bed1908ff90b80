#include "atyp/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "atyp/textio.hpp"

namespace atyp {

using nlohmann::json;

namespace {

// Thrown by the per-line parsers; load_corpus attaches file and line.
struct LineError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

const json& require(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) throw LineError(std::string("missing field \"") + key + "\"");
    return *it;
}

std::string require_string(const json& obj, const char* key) {
    const json& v = require(obj, key);
    if (!v.is_string()) throw LineError(std::string("field \"") + key + "\" must be a string");
    return v.get<std::string>();
}

std::vector<std::string> string_set(const json& v, const char* key) {
    if (!v.is_array()) throw LineError(std::string("field \"") + key + "\" must be an array");
    std::vector<std::string> out;
    for (const auto& e : v) {
        if (!e.is_string()) throw LineError(std::string("field \"") + key + "\" must hold strings");
        out.push_back(e.get<std::string>());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::optional<std::int64_t> optional_count(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return std::nullopt;
    if (!it->is_number_integer()) throw LineError(std::string("citation field \"") + key + "\" must be an integer or null");
    return it->get<std::int64_t>();
}

std::int64_t require_count(const json& obj, const char* key) {
    const json& v = require(obj, key);
    if (!v.is_number_integer()) throw LineError(std::string("field \"") + key + "\" must be an integer");
    return v.get<std::int64_t>();
}

json parse_object(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw LineError(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw LineError("record must be a JSON object");
    if (auto it = j.find("schema"); it != j.end()) {
        if (!it->is_number_integer() || it->get<int>() != kSchemaVersion)
            throw LineError("unsupported schema version");
    }
    return j;
}

json optional_int_json(const std::optional<std::int64_t>& v) { return v ? json(*v) : json(nullptr); }

bool is_blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

template <class F>
void for_each_line(const std::filesystem::path& path, F&& f) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open corpus file: " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (is_blank(line)) continue;
        try {
            f(line);
        } catch (const LineError& e) {
            throw ParseError(path.string(), lineno, e.what());
        }
    }
}

}  // namespace

CitationWindow window_from_years(int years) {
    switch (years) {
        case 3: return CitationWindow::Y3;
        case 5: return CitationWindow::Y5;
        case 10: return CitationWindow::Y10;
    }
    throw std::invalid_argument("citation window must be 3, 5 or 10 years, got " + std::to_string(years));
}

const char* channel_name(AltmetricChannel c) {
    switch (c) {
        case AltmetricChannel::Twitter: return "twitter";
        case AltmetricChannel::Wikipedia: return "wikipedia";
        case AltmetricChannel::Policy: return "policy";
        case AltmetricChannel::News: return "news";
    }
    return "?";
}

AltmetricChannel channel_from_name(const std::string& name) {
    for (auto c : kAltmetricChannels)
        if (name == channel_name(c)) return c;
    throw std::invalid_argument("unknown altmetric channel: " + name);
}

const std::optional<std::int64_t>& Citations::at(CitationWindow w) const {
    switch (w) {
        case CitationWindow::Y3: return y3;
        case CitationWindow::Y5: return y5;
        case CitationWindow::Y10: return y10;
    }
    return y3;
}

std::int64_t Altmetric::at(AltmetricChannel c) const {
    switch (c) {
        case AltmetricChannel::Twitter: return twitter;
        case AltmetricChannel::Wikipedia: return wikipedia;
        case AltmetricChannel::Policy: return policy;
        case AltmetricChannel::News: return news;
    }
    return 0;
}

std::int64_t PaperRecord::total_references() const {
    std::int64_t total = 0;
    for (const auto& [_, n] : referenced_journal_counts) total += n;
    return total;
}

Corpus::Corpus(std::vector<DatasetRecord> datasets, std::vector<PaperRecord> papers,
               std::map<std::string, double> journal_impact)
    : datasets_(std::move(datasets)), papers_(std::move(papers)), journal_impact_(std::move(journal_impact)) {
    std::sort(datasets_.begin(), datasets_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    std::sort(papers_.begin(), papers_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    for (auto& d : datasets_) {
        std::sort(d.topics.begin(), d.topics.end());
        d.topics.erase(std::unique(d.topics.begin(), d.topics.end()), d.topics.end());
    }
    for (auto& p : papers_) {
        std::sort(p.dataset_ids.begin(), p.dataset_ids.end());
        p.dataset_ids.erase(std::unique(p.dataset_ids.begin(), p.dataset_ids.end()), p.dataset_ids.end());
    }
    dataset_pos_.reserve(datasets_.size());
    for (std::size_t i = 0; i < datasets_.size(); ++i) dataset_pos_.emplace(datasets_[i].id, i);
    paper_pos_.reserve(papers_.size());
    for (std::size_t i = 0; i < papers_.size(); ++i) paper_pos_.emplace(papers_[i].id, i);
}

const DatasetRecord* Corpus::find_dataset(const std::string& id) const {
    auto it = dataset_pos_.find(id);
    return it == dataset_pos_.end() ? nullptr : &datasets_[it->second];
}

const PaperRecord* Corpus::find_paper(const std::string& id) const {
    auto it = paper_pos_.find(id);
    return it == paper_pos_.end() ? nullptr : &papers_[it->second];
}

std::optional<std::size_t> Corpus::paper_index(const std::string& id) const {
    auto it = paper_pos_.find(id);
    if (it == paper_pos_.end()) return std::nullopt;
    return it->second;
}

std::optional<double> Corpus::impact_of(const PaperRecord& p) const {
    if (!p.journal_id) return std::nullopt;
    auto it = journal_impact_.find(*p.journal_id);
    if (it == journal_impact_.end()) return std::nullopt;
    return it->second;
}

CorpusPaths CorpusPaths::in_directory(const std::filesystem::path& dir) {
    return {dir / "datasets.jsonl", dir / "papers.jsonl", dir / "journals.jsonl"};
}

DatasetRecord parse_dataset_line(const std::string& line) {
    json j = parse_object(line);
    DatasetRecord d;
    d.id = require_string(j, "id");
    if (auto it = j.find("title"); it != j.end() && it->is_string()) d.title = it->get<std::string>();
    d.topics = j.contains("topics") ? string_set(j["topics"], "topics") : std::vector<std::string>{};
    return d;
}

PaperRecord parse_paper_line(const std::string& line) {
    json j = parse_object(line);
    PaperRecord p;
    p.id = require_string(j, "id");
    const json& year = require(j, "year");
    if (!year.is_number_integer()) throw LineError("field \"year\" must be an integer");
    p.year = year.get<int>();
    p.dataset_ids = string_set(require(j, "datasets"), "datasets");

    if (auto it = j.find("journal"); it != j.end() && !it->is_null()) {
        if (!it->is_string()) throw LineError("field \"journal\" must be a string or null");
        p.journal_id = it->get<std::string>();
    }
    if (auto it = j.find("ref_journals"); it != j.end() && !it->is_null()) {
        if (!it->is_object()) throw LineError("field \"ref_journals\" must be an object");
        for (const auto& [k, v] : it->items()) {
            if (!v.is_number_integer()) throw LineError("reference count for \"" + k + "\" must be an integer");
            p.referenced_journal_counts[k] = v.get<std::int64_t>();
        }
    }
    if (auto it = j.find("authors"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) throw LineError("field \"authors\" must be an array");
        for (const auto& a : *it) {
            if (!a.is_string()) throw LineError("author ids must be strings");
            p.author_ids.push_back(a.get<std::string>());
        }
    }
    if (auto it = j.find("author_mean_cites"); it != j.end() && !it->is_null()) {
        if (!it->is_number()) throw LineError("field \"author_mean_cites\" must be numeric");
        p.author_mean_citations = it->get<double>();
    }
    if (auto it = j.find("disciplines"); it != j.end() && !it->is_null()) {
        if (!it->is_object()) throw LineError("field \"disciplines\" must be an object");
        for (const auto& [k, v] : it->items()) {
            if (!v.is_number()) throw LineError("discipline weight for \"" + k + "\" must be numeric");
            p.discipline_weights[k] = v.get<double>();
        }
    }
    if (auto it = j.find("cites"); it != j.end() && !it->is_null()) {
        if (!it->is_object()) throw LineError("field \"cites\" must be an object");
        p.cites.y3 = optional_count(*it, "y3");
        p.cites.y5 = optional_count(*it, "y5");
        p.cites.y10 = optional_count(*it, "y10");
    }
    if (auto it = j.find("altmetric"); it != j.end() && !it->is_null()) {
        if (!it->is_object()) throw LineError("field \"altmetric\" must be an object or null");
        Altmetric a;
        a.twitter = require_count(*it, "twitter");
        a.wikipedia = require_count(*it, "wikipedia");
        a.policy = require_count(*it, "policy");
        a.news = require_count(*it, "news");
        p.altmetric = a;
    }
    return p;
}

std::pair<std::string, double> parse_journal_line(const std::string& line) {
    json j = parse_object(line);
    std::string id = require_string(j, "id");
    const json& impact = require(j, "impact");
    if (!impact.is_number()) throw LineError("field \"impact\" must be numeric");
    return {id, impact.get<double>()};
}

std::string dataset_to_line(const DatasetRecord& d) {
    json j;
    j["schema"] = kSchemaVersion;
    j["id"] = d.id;
    j["title"] = d.title;
    j["topics"] = d.topics;
    return j.dump();
}

std::string paper_to_line(const PaperRecord& p) {
    json j;
    j["schema"] = kSchemaVersion;
    j["id"] = p.id;
    j["year"] = p.year;
    j["datasets"] = p.dataset_ids;
    j["journal"] = p.journal_id ? json(*p.journal_id) : json(nullptr);
    j["ref_journals"] = json::object();
    for (const auto& [k, v] : p.referenced_journal_counts) j["ref_journals"][k] = v;
    j["authors"] = p.author_ids;
    j["author_mean_cites"] = p.author_mean_citations;
    j["disciplines"] = json::object();
    for (const auto& [k, v] : p.discipline_weights) j["disciplines"][k] = v;
    j["cites"] = {{"y3", optional_int_json(p.cites.y3)},
                  {"y5", optional_int_json(p.cites.y5)},
                  {"y10", optional_int_json(p.cites.y10)}};
    if (p.altmetric) {
        j["altmetric"] = {{"twitter", p.altmetric->twitter},
                          {"wikipedia", p.altmetric->wikipedia},
                          {"policy", p.altmetric->policy},
                          {"news", p.altmetric->news}};
    } else {
        j["altmetric"] = nullptr;
    }
    return j.dump();
}

std::string journal_to_line(const std::string& id, double impact) {
    json j;
    j["schema"] = kSchemaVersion;
    j["id"] = id;
    j["impact"] = impact;
    return j.dump();
}

Corpus load_corpus(const CorpusPaths& paths) {
    std::vector<DatasetRecord> datasets;
    std::vector<PaperRecord> papers;
    std::map<std::string, double> impact;

    std::set<std::string> dataset_ids;
    for_each_line(paths.datasets, [&](const std::string& line) {
        datasets.push_back(parse_dataset_line(line));
        if (!dataset_ids.insert(datasets.back().id).second)
            throw LineError("duplicate dataset id \"" + datasets.back().id + "\"");
    });
    for_each_line(paths.papers, [&](const std::string& line) { papers.push_back(parse_paper_line(line)); });
    for_each_line(paths.journals, [&](const std::string& line) {
        auto [id, value] = parse_journal_line(line);
        if (!impact.emplace(id, value).second) throw LineError("duplicate journal id \"" + id + "\"");
    });

    for (const auto& p : papers) {
        for (const auto& d : p.dataset_ids) {
            if (!dataset_ids.count(d))
                throw IntegrityError("paper \"" + p.id + "\" references unknown dataset \"" + d + "\"");
        }
    }
    return Corpus(std::move(datasets), std::move(papers), std::move(impact));
}

void write_corpus(const Corpus& corpus, const CorpusPaths& paths) {
    std::string out;
    for (const auto& d : corpus.datasets()) out += dataset_to_line(d) + "\n";
    write_text_file(paths.datasets, out);
    out.clear();
    for (const auto& p : corpus.papers()) out += paper_to_line(p) + "\n";
    write_text_file(paths.papers, out);
    out.clear();
    for (const auto& [id, v] : corpus.journal_impact()) out += journal_to_line(id, v) + "\n";
    write_text_file(paths.journals, out);
}

ValidationReport validate(const Corpus& corpus) {
    ValidationReport r;
    r.papers = corpus.papers().size();
    r.datasets = corpus.datasets().size();

    std::set<std::string> seen;
    for (const auto& d : corpus.datasets()) {
        if (!seen.insert(d.id).second) r.errors.push_back({d.id, "duplicate dataset id"});
        if (d.topics.empty()) r.warnings.push_back({d.id, "dataset has no topic tags"});
    }
    seen.clear();
    for (const auto& p : corpus.papers()) {
        if (!seen.insert(p.id).second) r.errors.push_back({p.id, "duplicate paper id"});
        if (p.dataset_ids.empty()) {
            r.errors.push_back({p.id, "paper uses no datasets"});
        } else if (p.dataset_ids.size() == 1) {
            ++r.single_dataset_papers;
        } else {
            ++r.multi_dataset_papers;
        }
        for (const auto& d : p.dataset_ids)
            if (!corpus.find_dataset(d)) r.errors.push_back({p.id, "unknown dataset \"" + d + "\""});
        for (const auto& [j, n] : p.referenced_journal_counts)
            if (n < 1) r.errors.push_back({p.id, "reference count for journal \"" + j + "\" is below 1"});
        for (const auto& [name, w] : p.discipline_weights)
            if (!(w >= 0.0 && w <= 1.0)) r.errors.push_back({p.id, "discipline weight \"" + name + "\" outside [0,1]"});
        if (p.author_mean_citations < 0.0) r.errors.push_back({p.id, "negative author recognition"});
        for (auto w : {CitationWindow::Y3, CitationWindow::Y5, CitationWindow::Y10}) {
            const auto& c = p.cites.at(w);
            if (c && *c < 0) r.errors.push_back({p.id, "negative citation count"});
        }
        if (p.altmetric) {
            for (auto c : kAltmetricChannels)
                if (p.altmetric->at(c) < 0) r.errors.push_back({p.id, "negative altmetric count"});
        }
        if (!p.journal_id) {
            r.warnings.push_back({p.id, "paper has no journal; excluded from models using impact factor"});
        } else if (!corpus.journal_impact().count(*p.journal_id)) {
            r.errors.push_back({p.id, "journal \"" + *p.journal_id + "\" has no impact entry"});
        }
        if (p.referenced_journal_counts.empty()) r.warnings.push_back({p.id, "paper has no journal references"});
    }
    for (const auto& [id, v] : corpus.journal_impact())
        if (!(v >= 0.0)) r.errors.push_back({id, "negative journal impact"});
    return r;
}

std::map<std::string, double> recompute_journal_impact(const Corpus& corpus, int year, CitationWindow window) {
    std::map<std::string, std::pair<double, std::size_t>> acc;
    for (const auto& [id, _] : corpus.journal_impact()) acc[id] = {0.0, 0};
    for (const auto& p : corpus.papers()) {
        if (!p.journal_id) continue;
        auto& slot = acc[*p.journal_id];
        const auto& c = p.cites.at(window);
        if (p.year == year && c) {
            slot.first += static_cast<double>(*c);
            ++slot.second;
        }
    }
    std::map<std::string, double> out;
    for (const auto& [id, s] : acc) out[id] = s.second ? s.first / static_cast<double>(s.second) : 0.0;
    return out;
}

std::uint64_t content_hash(const Corpus& corpus) {
    std::uint64_t h = fnv1a("atyp-corpus-v1");
    for (const auto& d : corpus.datasets()) h = fnv1a(dataset_to_line(d) + "\n", h);
    for (const auto& p : corpus.papers()) h = fnv1a(paper_to_line(p) + "\n", h);
    for (const auto& [id, v] : corpus.journal_impact()) h = fnv1a(journal_to_line(id, v) + "\n", h);
    return h;
}

}  // namespace atyp
