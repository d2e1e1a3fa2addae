#include "synthaudit/error.hpp"
#include "synthaudit/review.hpp"

#include <zlib.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include <fcntl.h>
#include <unistd.h>

namespace synthaudit {

using nlohmann::json;
namespace fs = std::filesystem;

json to_json(const Annotation& a) {
    json j = {{"id", a.id},     {"doc_id", a.doc_id},         {"author", a.author},
              {"body", a.body}, {"created_at", a.created_at}, {"linked_doc_id", nullptr}};
    if (a.linked_doc_id) j["linked_doc_id"] = *a.linked_doc_id;
    return j;
}

Annotation annotation_from_json(const json& j) {
    if (!j.is_object()) throw InputError("annotation: expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (key != "id" && key != "doc_id" && key != "author" && key != "body" && key != "created_at" &&
            key != "linked_doc_id") {
            throw InputError("annotation: unknown field '" + key + "'");
        }
    }
    auto str = [&](const char* key) -> std::string {
        if (!j.contains(key) || j.at(key).is_null()) return {};
        if (!j.at(key).is_string()) throw InputError(std::string("annotation: field '") + key + "' must be a string");
        return j.at(key).get<std::string>();
    };
    Annotation a;
    a.id = str("id");
    a.doc_id = str("doc_id");
    a.author = str("author");
    a.body = str("body");
    a.created_at = str("created_at");
    if (j.contains("linked_doc_id") && !j.at("linked_doc_id").is_null()) a.linked_doc_id = str("linked_doc_id");
    return a;
}

namespace {

std::uint32_t checksum(const std::string& s) {
    return static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size())));
}

std::string now_iso8601() {
    const auto now = std::chrono::system_clock::now();
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[96];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                  tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
    return buf;
}

std::uint64_t sequence_of(const std::string& id) {
    if (id.rfind("ann-", 0) != 0) return 0;
    try {
        return std::stoull(id.substr(4));
    } catch (...) {
        return 0;
    }
}

std::string format_id(std::uint64_t seq) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "ann-%06llu", static_cast<unsigned long long>(seq));
    return buf;
}

void append_durably(const fs::path& path, const std::string& data) {
    const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd < 0) throw IoError("annotations: cannot open journal " + path.string());
    std::size_t written = 0;
    while (written < data.size()) {
        const ssize_t n = ::write(fd, data.data() + written, data.size() - written);
        if (n < 0) {
            ::close(fd);
            throw IoError("annotations: write to " + path.string() + " failed");
        }
        written += static_cast<std::size_t>(n);
    }
    const bool synced = ::fsync(fd) == 0;
    ::close(fd);
    if (!synced) throw IoError("annotations: fsync of " + path.string() + " failed");
}

void rewrite_durably(const fs::path& path, const std::string& data) {
    fs::path tmp = path;
    tmp += ".compact";
    std::error_code ec;
    fs::remove(tmp, ec);
    append_durably(tmp, data);
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("annotations: cannot replace journal " + path.string() + ": " + ec.message());
}

} // namespace

std::string journal_line(const Annotation& a) {
    const std::string payload = to_json(a).dump();
    char crc[16];
    std::snprintf(crc, sizeof crc, "%08x", checksum(payload));
    return std::string(crc) + "\t" + payload;
}

std::optional<Annotation> parse_journal_line(const std::string& line) {
    if (line.size() < 10 || line[8] != '\t') return std::nullopt;
    const std::string payload = line.substr(9);
    unsigned long expected = 0;
    try {
        std::size_t used = 0;
        expected = std::stoul(line.substr(0, 8), &used, 16);
        if (used != 8) return std::nullopt;
    } catch (...) {
        return std::nullopt;
    }
    if (checksum(payload) != expected) return std::nullopt;
    try {
        Annotation a = annotation_from_json(json::parse(payload));
        if (a.id.empty() || a.doc_id.empty() || a.body.empty()) return std::nullopt;
        return a;
    } catch (...) {
        return std::nullopt;
    }
}

AnnotationStore::AnnotationStore(fs::path journal, DocCheck doc_exists)
    : path_(std::move(journal)), doc_exists_(std::move(doc_exists)) {
    auto records = std::make_shared<Snapshot>();
    if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
    bool had_file = fs::exists(path_);
    if (had_file) {
        std::ifstream in(path_, std::ios::binary);
        if (!in) throw IoError("annotations: cannot read journal " + path_.string());
        std::string line;
        std::string compacted;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto a = parse_journal_line(line);
            if (!a) {
                ++dropped_;
                continue;
            }
            next_seq_ = std::max(next_seq_, sequence_of(a->id) + 1);
            compacted += line + "\n";
            records->push_back(std::move(*a));
        }
        if (dropped_ > 0) rewrite_durably(path_, compacted);
    }
    std::atomic_store(&snapshot_, std::shared_ptr<const Snapshot>(std::move(records)));
}

Annotation AnnotationStore::save(Annotation draft) {
    if (draft.doc_id.empty()) throw InputError("annotation: doc_id is required");
    const bool blank = std::all_of(draft.body.begin(), draft.body.end(),
                                   [](unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; });
    if (blank) throw InputError("annotation: body must not be empty");
    if (doc_exists_ && !doc_exists_(draft.doc_id)) {
        throw InputError("annotation: unknown document '" + draft.doc_id + "'");
    }
    if (draft.linked_doc_id && draft.linked_doc_id->empty()) draft.linked_doc_id.reset();
    if (draft.linked_doc_id && doc_exists_ && !doc_exists_(*draft.linked_doc_id)) {
        throw InputError("annotation: unknown linked document '" + *draft.linked_doc_id + "'");
    }

    std::lock_guard<std::mutex> lock(writer_);
    draft.id = format_id(next_seq_);
    draft.created_at = now_iso8601();
    append_durably(path_, journal_line(draft) + "\n");
    ++next_seq_;

    auto current = std::atomic_load(&snapshot_);
    auto next = std::make_shared<Snapshot>(*current);
    next->push_back(draft);
    std::atomic_store(&snapshot_, std::shared_ptr<const Snapshot>(std::move(next)));
    return draft;
}

std::vector<Annotation> AnnotationStore::list(const std::optional<std::string>& doc_id) const {
    const auto snap = std::atomic_load(&snapshot_);
    std::vector<Annotation> out;
    for (auto it = snap->rbegin(); it != snap->rend(); ++it) {
        if (!doc_id || it->doc_id == *doc_id) out.push_back(*it);
    }
    return out;
}

std::size_t AnnotationStore::size() const { return std::atomic_load(&snapshot_)->size(); }

} // namespace synthaudit
