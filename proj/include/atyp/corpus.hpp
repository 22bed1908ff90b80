#pragma once

// Bibliographic corpus data model: datasets, papers, journals.
//
// Records are read from three line-delimited JSON files (datasets.jsonl,
// papers.jsonl, journals.jsonl). After loading, datasets and papers are held
// in canonical (id-sorted) order so that every downstream computation is
// independent of input line order.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace atyp {

inline constexpr int kSchemaVersion = 1;

struct ParseError : std::runtime_error {
    ParseError(const std::string& file, std::size_t line, const std::string& what)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + what), file(file), line(line) {}
    std::string file;
    std::size_t line;
};

struct IntegrityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class CitationWindow { Y3 = 3, Y5 = 5, Y10 = 10 };

CitationWindow window_from_years(int years);

enum class AltmetricChannel { Twitter, Wikipedia, Policy, News };

inline constexpr std::array<AltmetricChannel, 4> kAltmetricChannels = {
    AltmetricChannel::Twitter, AltmetricChannel::Wikipedia, AltmetricChannel::Policy, AltmetricChannel::News};

const char* channel_name(AltmetricChannel c);
AltmetricChannel channel_from_name(const std::string& name);

struct DatasetRecord {
    std::string id;
    std::string title;
    std::vector<std::string> topics;  // sorted, unique
};

struct Citations {
    std::optional<std::int64_t> y3;
    std::optional<std::int64_t> y5;
    std::optional<std::int64_t> y10;

    const std::optional<std::int64_t>& at(CitationWindow w) const;
};

struct Altmetric {
    std::int64_t twitter = 0;
    std::int64_t wikipedia = 0;
    std::int64_t policy = 0;
    std::int64_t news = 0;

    std::int64_t at(AltmetricChannel c) const;
};

struct PaperRecord {
    std::string id;
    int year = 0;
    std::vector<std::string> dataset_ids;  // sorted, unique
    std::optional<std::string> journal_id;
    std::map<std::string, std::int64_t> referenced_journal_counts;
    std::vector<std::string> author_ids;
    double author_mean_citations = 0.0;
    std::map<std::string, double> discipline_weights;
    Citations cites;
    std::optional<Altmetric> altmetric;  // absent for papers outside the tracking era

    std::size_t n_datasets() const { return dataset_ids.size(); }
    std::int64_t total_references() const;
};

// Immutable after construction; safe to share between reader threads.
class Corpus {
public:
    Corpus() = default;
    // Sorts records by id and builds lookups. Does not check invariants;
    // see validate().
    Corpus(std::vector<DatasetRecord> datasets, std::vector<PaperRecord> papers,
           std::map<std::string, double> journal_impact);

    const std::vector<DatasetRecord>& datasets() const { return datasets_; }
    const std::vector<PaperRecord>& papers() const { return papers_; }
    const std::map<std::string, double>& journal_impact() const { return journal_impact_; }

    const DatasetRecord* find_dataset(const std::string& id) const;
    const PaperRecord* find_paper(const std::string& id) const;
    std::optional<std::size_t> paper_index(const std::string& id) const;
    std::optional<double> impact_of(const PaperRecord& p) const;

private:
    std::vector<DatasetRecord> datasets_;
    std::vector<PaperRecord> papers_;
    std::map<std::string, double> journal_impact_;
    std::unordered_map<std::string, std::size_t> dataset_pos_;
    std::unordered_map<std::string, std::size_t> paper_pos_;
};

struct CorpusPaths {
    std::filesystem::path datasets;
    std::filesystem::path papers;
    std::filesystem::path journals;

    static CorpusPaths in_directory(const std::filesystem::path& dir);
};

// Throws ParseError on a malformed line and IntegrityError when a paper
// references a dataset that is not defined.
Corpus load_corpus(const CorpusPaths& paths);

void write_corpus(const Corpus& corpus, const CorpusPaths& paths);

// Per-line parsers, exposed for tests and streaming callers.
DatasetRecord parse_dataset_line(const std::string& line);
PaperRecord parse_paper_line(const std::string& line);
std::pair<std::string, double> parse_journal_line(const std::string& line);

std::string dataset_to_line(const DatasetRecord& d);
std::string paper_to_line(const PaperRecord& p);
std::string journal_to_line(const std::string& id, double impact);

struct Violation {
    std::string record_id;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> errors;
    std::vector<Violation> warnings;
    std::size_t papers = 0;
    std::size_t datasets = 0;
    std::size_t single_dataset_papers = 0;
    std::size_t multi_dataset_papers = 0;

    bool ok() const { return errors.empty(); }
};

ValidationReport validate(const Corpus& corpus);

// Proxy impact factor: mean `window` citation count of the papers published
// in each journal during `year`. Journals with no such papers get 0.
std::map<std::string, double> recompute_journal_impact(const Corpus& corpus, int year,
                                                       CitationWindow window = CitationWindow::Y3);

// Stable 64-bit content hash of the canonical serialization.
std::uint64_t content_hash(const Corpus& corpus);

}  // namespace atyp
