#include "synthaudit/corpus.hpp"

#include "hash.hpp"
#include "synthaudit/error.hpp"
#include "synthaudit/unicode.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace synthaudit {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Tokenizer

json to_json(const TokenizerConfig& config) {
    return {{"name", "rule-based"},
            {"lowercase", config.lowercase},
            {"punctuation", config.punctuation == PunctuationMode::Split ? "split" : "drop"},
            {"whitespace", "unicode"}};
}

TokenizerConfig tokenizer_config_from_json(const json& j) {
    TokenizerConfig config;
    for (const auto& [key, value] : j.items()) {
        if (key == "lowercase") {
            config.lowercase = value.get<bool>();
        } else if (key == "punctuation") {
            const auto mode = value.get<std::string>();
            if (mode == "split") {
                config.punctuation = PunctuationMode::Split;
            } else if (mode == "drop") {
                config.punctuation = PunctuationMode::Drop;
            } else {
                throw InputError("tokenizer.punctuation must be \"split\" or \"drop\", got \"" + mode + "\"");
            }
        } else {
            throw InputError("unknown tokenizer key: " + key);
        }
    }
    return config;
}

TokenSequence tokenize(std::string_view text, const TokenizerConfig& config) {
    const std::u32string cps = unicode::decode(text);
    TokenSequence seq;
    std::string current;
    std::size_t current_start = 0;
    bool in_word = false;

    auto flush = [&](std::size_t end) {
        if (in_word) {
            seq.tokens.push_back(std::move(current));
            seq.offsets.emplace_back(current_start, end);
            current.clear();
            in_word = false;
        }
    };

    for (std::size_t i = 0; i < cps.size(); ++i) {
        const char32_t cp = cps[i];
        if (unicode::is_space(cp)) {
            flush(i);
        } else if (unicode::is_punct(cp)) {
            flush(i);
            if (config.punctuation == PunctuationMode::Split) {
                std::string tok;
                unicode::append_utf8(tok, config.lowercase ? unicode::to_lower(cp) : cp);
                seq.tokens.push_back(std::move(tok));
                seq.offsets.emplace_back(i, i + 1);
            }
        } else {
            if (!in_word) {
                in_word = true;
                current_start = i;
            }
            unicode::append_utf8(current, config.lowercase ? unicode::to_lower(cp) : cp);
        }
    }
    flush(cps.size());
    return seq;
}

std::string normalized_key(std::string_view text, const TokenizerConfig& config) {
    const TokenSequence seq = tokenize(unicode::nfc(text), config);
    std::string key;
    for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
        if (i) key.push_back(' ');
        key += seq.tokens[i];
    }
    return key;
}

// ---------------------------------------------------------------------------
// Corpus

namespace {

bool is_blank(std::string_view text) {
    for (char32_t cp : unicode::decode(text)) {
        if (!unicode::is_space(cp)) return false;
    }
    return true;
}

void check_entities(const Document& doc) {
    const std::u32string cps = unicode::decode(doc.text);
    for (const auto& e : doc.entities) {
        if (e.start >= e.end || e.end > cps.size()) {
            std::ostringstream msg;
            msg << "document '" << doc.id << "': entity span [" << e.start << ", " << e.end
                << ") out of bounds (text length " << cps.size() << ")";
            throw InputError(msg.str());
        }
        const std::string actual =
            unicode::encode(std::u32string_view(cps).substr(e.start, e.end - e.start));
        if (actual != e.surface) {
            std::ostringstream msg;
            msg << "document '" << doc.id << "': entity surface '" << e.surface
                << "' does not match text at offset " << e.start << " ('" << actual << "')";
            throw InputError(msg.str());
        }
    }
}

} // namespace

Corpus::Corpus(std::vector<Document> docs, std::string name)
    : docs_(std::move(docs)), name_(std::move(name)) {
    index_.reserve(docs_.size());
    for (std::size_t i = 0; i < docs_.size(); ++i) {
        const Document& d = docs_[i];
        if (d.id.empty()) throw InputError("document at position " + std::to_string(i) + " has an empty id");
        if (!index_.emplace(d.id, i).second) throw InputError("duplicate document id '" + d.id + "'");
        if (is_blank(d.text)) throw InputError("document '" + d.id + "' has empty text");
        for (const auto& [attr, value] : d.groups) {
            if (attr.empty() || value.empty()) {
                throw InputError("document '" + d.id + "' has an empty group attribute or value");
            }
        }
        check_entities(d);
    }
}

const Document* Corpus::find(const std::string& id) const {
    const auto it = index_.find(id);
    return it == index_.end() ? nullptr : &docs_[it->second];
}

std::string Corpus::fingerprint() const {
    detail::Fnv1a h;
    for (const auto& d : docs_) {
        h.update(d.id);
        h.separator();
        h.update(d.text);
        h.separator();
        for (const auto& l : d.labels) {
            h.update(l);
            h.separator();
        }
        h.update("\x1e");
    }
    return h.hex();
}

CorpusFormat parse_corpus_format(const std::string& s) {
    if (s == "jsonl") return CorpusFormat::Jsonl;
    if (s == "csv") return CorpusFormat::Csv;
    throw InputError("unknown corpus format '" + s + "' (expected jsonl or csv)");
}

namespace {

// NFC-normalizes text and surfaces. Offsets are validated against the raw
// text first, then remapped by normalizing the prefix and the span.
Document normalize_document(Document doc) {
    check_entities(doc);
    std::string normalized = unicode::nfc(doc.text);
    if (normalized != doc.text) {
        const std::u32string cps = unicode::decode(doc.text);
        for (auto& e : doc.entities) {
            const auto prefix = unicode::nfc(unicode::encode(std::u32string_view(cps).substr(0, e.start)));
            const auto span = unicode::nfc(e.surface);
            e.start = unicode::length(prefix);
            e.end = e.start + unicode::length(span);
            e.surface = span;
        }
        doc.text = std::move(normalized);
    } else {
        for (auto& e : doc.entities) e.surface = unicode::nfc(e.surface);
    }
    for (auto& l : doc.labels) l = unicode::nfc(l);
    return doc;
}

Document document_from_json(const json& j) {
    if (!j.is_object()) throw InputError("record is not a JSON object");
    Document d;
    if (!j.contains("id") || !j["id"].is_string()) throw InputError("missing string field 'id'");
    if (!j.contains("text") || !j["text"].is_string()) throw InputError("missing string field 'text'");
    d.id = j["id"].get<std::string>();
    d.text = j["text"].get<std::string>();
    if (auto it = j.find("labels"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) throw InputError("'labels' must be an array of strings");
        for (const auto& l : *it) {
            if (!l.is_string()) throw InputError("'labels' must be an array of strings");
            d.labels.push_back(l.get<std::string>());
        }
    }
    if (auto it = j.find("groups"); it != j.end() && !it->is_null()) {
        if (!it->is_object()) throw InputError("'groups' must be an object of strings");
        for (const auto& [k, v] : it->items()) {
            if (!v.is_string()) throw InputError("group '" + k + "' must be a string");
            d.groups[k] = v.get<std::string>();
        }
    }
    if (auto it = j.find("entities"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) throw InputError("'entities' must be an array");
        for (const auto& e : *it) {
            if (!e.is_object() || !e.contains("surface") || !e.contains("start") || !e.contains("end")) {
                throw InputError("entity requires 'surface', 'start' and 'end'");
            }
            EntitySpan span;
            span.surface = e.at("surface").get<std::string>();
            span.category = e.value("category", std::string{});
            const auto start = e.at("start").get<long long>();
            const auto end = e.at("end").get<long long>();
            if (start < 0 || end < 0) {
                throw InputError("document '" + d.id + "': negative entity offset " +
                                 std::to_string(std::min(start, end)));
            }
            span.start = static_cast<std::size_t>(start);
            span.end = static_cast<std::size_t>(end);
            d.entities.push_back(std::move(span));
        }
    }
    return d;
}

[[noreturn]] void rethrow_at(const std::string& source, std::size_t line, const std::exception& e) {
    throw InputError(source + ":" + std::to_string(line) + ": " + e.what());
}

// RFC 4180 reader. Returns false at end of input. `line` is advanced past
// every newline consumed, including those inside quoted fields.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line) {
    fields.clear();
    int c = in.peek();
    if (c == EOF) return false;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    while (true) {
        c = in.get();
        if (c == EOF) {
            if (quoted) throw InputError("unterminated quoted field");
            fields.push_back(std::move(field));
            ++line;
            return true;
        }
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get();
                    field.push_back('"');
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(static_cast<char>(c));
            }
            continue;
        }
        if (c == '"' && !field_started) {
            quoted = true;
            field_started = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
            field_started = false;
        } else if (c == '\r') {
            // tolerate CRLF
        } else if (c == '\n') {
            fields.push_back(std::move(field));
            ++line;
            return true;
        } else {
            field.push_back(static_cast<char>(c));
            field_started = true;
        }
    }
}

std::vector<std::string> split_labels(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == '|') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

} // namespace

Corpus parse_corpus_jsonl(std::istream& in, const std::string& source_name) {
    std::vector<Document> docs;
    std::unordered_map<std::string, std::size_t> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
        try {
            Document d = normalize_document(document_from_json(json::parse(line)));
            if (is_blank(d.text)) throw InputError("document '" + d.id + "' has empty text");
            if (auto [it, inserted] = seen.emplace(d.id, line_no); !inserted) {
                throw InputError("duplicate document id '" + d.id + "' (first seen on line " +
                                 std::to_string(it->second) + ")");
            }
            docs.push_back(std::move(d));
        } catch (const json::exception& e) {
            rethrow_at(source_name, line_no, e);
        } catch (const InputError& e) {
            rethrow_at(source_name, line_no, e);
        }
    }
    return Corpus(std::move(docs), source_name);
}

Corpus parse_corpus_csv(std::istream& in, const std::string& source_name) {
    std::vector<std::string> header;
    std::size_t line = 0;
    try {
        if (!read_csv_record(in, header, line)) return Corpus({}, source_name);
    } catch (const InputError& e) {
        rethrow_at(source_name, 1, e);
    }
    int id_col = -1, text_col = -1, labels_col = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "id") id_col = static_cast<int>(i);
        else if (header[i] == "text") text_col = static_cast<int>(i);
        else if (header[i] == "labels") labels_col = static_cast<int>(i);
    }
    if (id_col < 0 || text_col < 0) {
        throw InputError(source_name + ":1: CSV header must contain 'id' and 'text' columns");
    }
    std::vector<Document> docs;
    std::unordered_map<std::string, std::size_t> seen;
    std::vector<std::string> fields;
    while (true) {
        const std::size_t record_line = line + 1;
        try {
            if (!read_csv_record(in, fields, line)) break;
            if (fields.size() == 1 && fields[0].empty()) continue;
            if (fields.size() != header.size()) {
                throw InputError("expected " + std::to_string(header.size()) + " fields, got " +
                                 std::to_string(fields.size()));
            }
            Document d;
            d.id = fields[id_col];
            d.text = fields[text_col];
            if (labels_col >= 0) d.labels = split_labels(fields[labels_col]);
            for (std::size_t i = 0; i < header.size(); ++i) {
                if (static_cast<int>(i) == id_col || static_cast<int>(i) == text_col ||
                    static_cast<int>(i) == labels_col || fields[i].empty()) {
                    continue;
                }
                std::string attr = header[i];
                if (attr.rfind("group:", 0) == 0) attr = attr.substr(6);
                d.groups[attr] = fields[i];
            }
            d = normalize_document(std::move(d));
            if (d.id.empty()) throw InputError("empty id");
            if (is_blank(d.text)) throw InputError("document '" + d.id + "' has empty text");
            if (auto [it, inserted] = seen.emplace(d.id, record_line); !inserted) {
                throw InputError("duplicate document id '" + d.id + "' (first seen on line " +
                                 std::to_string(it->second) + ")");
            }
            docs.push_back(std::move(d));
        } catch (const InputError& e) {
            rethrow_at(source_name, record_line, e);
        }
    }
    return Corpus(std::move(docs), source_name);
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open corpus file " + path.string());
    return format == CorpusFormat::Jsonl ? parse_corpus_jsonl(in, path.string())
                                         : parse_corpus_csv(in, path.string());
}

Corpus load_corpus_path(const std::filesystem::path& path) {
    namespace fs = std::filesystem;
    if (fs::is_directory(path)) {
        const auto docs = path / "documents.jsonl";
        if (!fs::exists(docs)) throw IoError("corpus directory " + path.string() + " has no documents.jsonl");
        return load_corpus(docs, CorpusFormat::Jsonl);
    }
    if (!fs::exists(path)) throw IoError("corpus path does not exist: " + path.string());
    return load_corpus(path, path.extension() == ".csv" ? CorpusFormat::Csv : CorpusFormat::Jsonl);
}

json to_json(const Document& doc) {
    json j = {{"id", doc.id}, {"text", doc.text}};
    if (!doc.labels.empty()) j["labels"] = doc.labels;
    if (!doc.groups.empty()) j["groups"] = doc.groups;
    if (!doc.entities.empty()) {
        json ents = json::array();
        for (const auto& e : doc.entities) {
            ents.push_back({{"surface", e.surface}, {"category", e.category}, {"start", e.start}, {"end", e.end}});
        }
        j["entities"] = std::move(ents);
    }
    return j;
}

void write_corpus_jsonl(const Corpus& corpus, std::ostream& out) {
    for (const auto& d : corpus) out << to_json(d).dump() << '\n';
}

void save_corpus_jsonl(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    write_corpus_jsonl(corpus, out);
    if (!out) throw IoError("write failed: " + path.string());
}

void save_corpus_dir(const Corpus& corpus, const std::filesystem::path& dir, const json& extra_manifest) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
    save_corpus_jsonl(corpus, dir / "documents.jsonl");
    json manifest = {{"format", "synthaudit-corpus"},
                     {"version", 1},
                     {"documents", corpus.size()},
                     {"fingerprint", corpus.fingerprint()},
                     {"normalization", "NFC"}};
    for (const auto& [k, v] : extra_manifest.items()) manifest[k] = v;
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    if (!out) throw IoError("cannot write manifest in " + dir.string());
    out << manifest.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Validation

ValidationReport validate_corpus(const Corpus& corpus) {
    ValidationReport r;
    r.documents = corpus.size();
    std::map<std::string, std::vector<std::string>> by_text;
    for (const auto& d : corpus) {
        if (!d.labels.empty()) ++r.labeled_documents;
        if (!d.entities.empty()) ++r.entity_documents;
        r.entity_mentions += d.entities.size();
        by_text[normalized_key(d.text)].push_back(d.id);
    }
    for (auto& [text, ids] : by_text) {
        if (ids.size() > 1) {
            r.warnings.push_back({"duplicate-text",
                                  std::to_string(ids.size()) + " documents share identical text",
                                  std::move(ids)});
        }
    }
    if (r.labeled_documents > 0 && r.labeled_documents < r.documents) {
        std::vector<std::string> unlabeled;
        for (const auto& d : corpus) {
            if (d.labels.empty()) unlabeled.push_back(d.id);
        }
        r.warnings.push_back({"partial-labels",
                              std::to_string(unlabeled.size()) + " documents have no labels",
                              std::move(unlabeled)});
    }
    return r;
}

json to_json(const ValidationReport& report) {
    json warnings = json::array();
    for (const auto& w : report.warnings) {
        warnings.push_back({{"kind", w.kind}, {"message", w.message}, {"ids", w.ids}});
    }
    return {{"documents", report.documents},
            {"labeled_documents", report.labeled_documents},
            {"entity_documents", report.entity_documents},
            {"entity_mentions", report.entity_mentions},
            {"warnings", std::move(warnings)}};
}

// ---------------------------------------------------------------------------
// Control codes

ControlCodeRecord::ControlCodeRecord(
    std::initializer_list<std::pair<std::string, std::vector<std::string>>> fields) {
    for (const auto& [name, values] : fields) add(name, values);
}

void ControlCodeRecord::add(std::string field, std::vector<std::string> values) {
    if (field.empty()) throw InputError("control code field name must be non-empty");
    fields_.emplace_back(std::move(field), std::move(values));
}

std::string format_control_code(const ControlCodeRecord& record) {
    if (record.empty()) throw InputError("control code record is empty");
    std::string out;
    for (const auto& [name, values] : record.fields()) {
        if (!out.empty()) out.push_back(' ');
        out += name;
        out += ':';
        for (std::size_t i = 0; i < values.size(); ++i) {
            out += i ? ", " : " ";
            out += values[i];
        }
    }
    return out;
}

} // namespace synthaudit
