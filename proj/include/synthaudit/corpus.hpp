#pragma once

#include <cstddef>
#include <filesystem>
#include <initializer_list>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace synthaudit {

/// Annotated entity mention. Offsets are code point offsets into the
/// document text, half-open.
struct EntitySpan {
    std::string surface;
    std::string category;
    std::size_t start = 0;
    std::size_t end = 0;

    bool operator==(const EntitySpan&) const = default;
};

struct Document {
    std::string id;
    std::string text;
    std::vector<std::string> labels;
    std::map<std::string, std::string> groups;
    std::vector<EntitySpan> entities;

    bool operator==(const Document&) const = default;
};

enum class PunctuationMode { Split, Drop };

struct TokenizerConfig {
    bool lowercase = true;
    PunctuationMode punctuation = PunctuationMode::Split;

    bool operator==(const TokenizerConfig&) const = default;
};

nlohmann::json to_json(const TokenizerConfig& config);
TokenizerConfig tokenizer_config_from_json(const nlohmann::json& j);

struct TokenSequence {
    std::vector<std::string> tokens;
    /// Code point offsets, half-open, strictly increasing.
    std::vector<std::pair<std::size_t, std::size_t>> offsets;

    std::size_t size() const { return tokens.size(); }
    bool empty() const { return tokens.empty(); }
};

/// Rule-based tokenizer: split on Unicode whitespace, isolate (or drop)
/// punctuation code points, optionally lowercase. Deterministic.
TokenSequence tokenize(std::string_view text, const TokenizerConfig& config = {});

/// Tokens of `text` joined by single spaces; the normalized key used for
/// entity matching and counting.
std::string normalized_key(std::string_view text, const TokenizerConfig& config = {});

/// Ordered, immutable-after-load collection of documents with unique ids.
class Corpus {
public:
    Corpus() = default;
    /// Validates invariants (unique ids, non-blank text, entity bounds and
    /// surfaces). Text is expected to already be NFC.
    explicit Corpus(std::vector<Document> docs, std::string name = {});

    const std::vector<Document>& documents() const { return docs_; }
    std::size_t size() const { return docs_.size(); }
    bool empty() const { return docs_.empty(); }
    const Document& operator[](std::size_t i) const { return docs_[i]; }
    const Document* find(const std::string& id) const;
    const std::string& name() const { return name_; }

    auto begin() const { return docs_.begin(); }
    auto end() const { return docs_.end(); }

    /// Stable content hash over ids, texts and labels (hex, 16 chars).
    std::string fingerprint() const;

    bool operator==(const Corpus& other) const { return docs_ == other.docs_; }

private:
    std::vector<Document> docs_;
    std::unordered_map<std::string, std::size_t> index_;
    std::string name_;
};

enum class CorpusFormat { Jsonl, Csv };

CorpusFormat parse_corpus_format(const std::string& s);

/// Loads a corpus file. NFC is applied to text and entity surfaces; entity
/// offsets are checked against the raw text and remapped if NFC changed it.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format);

/// Accepts either a corpus directory (written by `save_corpus_dir`) or a
/// single file whose format is inferred from its extension.
Corpus load_corpus_path(const std::filesystem::path& path);

Corpus parse_corpus_jsonl(std::istream& in, const std::string& source_name = "<stream>");
Corpus parse_corpus_csv(std::istream& in, const std::string& source_name = "<stream>");

nlohmann::json to_json(const Document& doc);
void write_corpus_jsonl(const Corpus& corpus, std::ostream& out);
void save_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path);

/// Writes `documents.jsonl` plus a `manifest.json` into `dir`.
void save_corpus_dir(const Corpus& corpus, const std::filesystem::path& dir,
                     const nlohmann::json& extra_manifest = nlohmann::json::object());

struct ValidationWarning {
    std::string kind;
    std::string message;
    std::vector<std::string> ids;
};

struct ValidationReport {
    std::size_t documents = 0;
    std::size_t labeled_documents = 0;
    std::size_t entity_documents = 0;
    std::size_t entity_mentions = 0;
    std::vector<ValidationWarning> warnings;
};

ValidationReport validate_corpus(const Corpus& corpus);
nlohmann::json to_json(const ValidationReport& report);

/// Ordered field -> values map rendered as a generation prefix, e.g.
/// "ICD9_CODE: 4019, 42731 Gender: Female".
class ControlCodeRecord {
public:
    ControlCodeRecord() = default;
    ControlCodeRecord(std::initializer_list<std::pair<std::string, std::vector<std::string>>> fields);

    void add(std::string field, std::vector<std::string> values);
    const std::vector<std::pair<std::string, std::vector<std::string>>>& fields() const {
        return fields_;
    }
    bool empty() const { return fields_.empty(); }

private:
    std::vector<std::pair<std::string, std::vector<std::string>>> fields_;
};

std::string format_control_code(const ControlCodeRecord& record);

} // namespace synthaudit
