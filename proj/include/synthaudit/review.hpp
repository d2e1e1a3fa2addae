#pragma once

#include "synthaudit/corpus.hpp"
#include "synthaudit/quality.hpp"

#include <Eigen/Dense>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace synthaudit {

/// Exact cosine index over unit-normalized real-document embeddings.
struct NeighborIndex {
    std::vector<std::string> ids;
    Eigen::MatrixXd unit; // rows aligned with ids, L2 norm 1

    std::size_t size() const { return ids.size(); }
    Eigen::Index dim() const { return unit.cols(); }
};

/// Rows follow corpus order. Every corpus document needs an embedding;
/// extra embedding rows are ignored.
NeighborIndex build_index(const Corpus& real, const EmbeddingMatrix& embeddings);

struct Neighbor {
    std::string id;
    double score = 0.0;
};

/// Top-k by cosine, descending; equal scores by id ascending. k larger than
/// the index returns everything.
std::vector<Neighbor> neighbors(const NeighborIndex& index, const Eigen::VectorXd& query, int k);

struct EntityHit {
    std::string doc_id;
    std::vector<std::pair<std::size_t, std::size_t>> offsets; // code points, end exclusive
};

/// Documents containing `entity`, using the privacy module's matcher.
std::vector<EntityHit> docs_containing_entity(const Corpus& corpus, const std::string& entity,
                                              const TokenizerConfig& tokenizer = {});

// ---------------------------------------------------------------------------
// annotations

struct Annotation {
    std::string id;
    std::string doc_id;
    std::string author;
    std::string body;
    std::string created_at; // ISO 8601 UTC, millisecond precision
    std::optional<std::string> linked_doc_id;

    bool operator==(const Annotation&) const = default;
};

nlohmann::json to_json(const Annotation& a);
Annotation annotation_from_json(const nlohmann::json& j);

/// Append-only JSONL journal, one "<crc32 hex>\t<json>" record per line.
/// Opening the store drops lines that fail their checksum (a torn final
/// write, for instance) and rewrites the journal without them. Writes are
/// serialized and synced before `save` returns; `list` reads an immutable
/// snapshot and never waits on a writer.
class AnnotationStore {
public:
    using DocCheck = std::function<bool(const std::string&)>;

    explicit AnnotationStore(std::filesystem::path journal, DocCheck doc_exists = {});
    AnnotationStore(const AnnotationStore&) = delete;
    AnnotationStore& operator=(const AnnotationStore&) = delete;

    /// Validates and persists a draft; fills id and created_at.
    Annotation save(Annotation draft);

    /// Newest first; optionally only those on one document.
    std::vector<Annotation> list(const std::optional<std::string>& doc_id = std::nullopt) const;

    std::size_t size() const;
    std::size_t dropped_on_open() const { return dropped_; }
    const std::filesystem::path& journal() const { return path_; }

private:
    using Snapshot = std::vector<Annotation>;

    std::filesystem::path path_;
    DocCheck doc_exists_;
    std::mutex writer_;
    std::shared_ptr<const Snapshot> snapshot_;
    std::uint64_t next_seq_ = 1;
    std::size_t dropped_ = 0;
};

/// Checksummed journal line (without the newline) and its inverse.
std::string journal_line(const Annotation& a);
std::optional<Annotation> parse_journal_line(const std::string& line);

// ---------------------------------------------------------------------------
// HTTP service

struct ReviewData {
    Corpus real;
    Corpus synth;
    EmbeddingMatrix synth_embeddings;
    NeighborIndex index;
    TokenizerConfig tokenizer;
};

/// Loads corpora and embeddings and builds the neighbor index.
ReviewData load_review_data(const std::filesystem::path& real, const std::filesystem::path& synth,
                            const std::filesystem::path& real_embeddings,
                            const std::filesystem::path& synth_embeddings, const TokenizerConfig& tokenizer = {});

struct ReviewServerOptions {
    std::optional<std::filesystem::path> static_dir; // UI bundle
    int default_k = 5;
    int page_size = 50;
};

class ReviewServer {
public:
    ReviewServer(const ReviewData& data, AnnotationStore& store, ReviewServerOptions options = {});
    ~ReviewServer();
    ReviewServer(const ReviewServer&) = delete;
    ReviewServer& operator=(const ReviewServer&) = delete;

    /// Binds and serves until stop(). Returns false if binding failed.
    bool listen(const std::string& host, int port);
    /// Binds to a free port and returns it (-1 on failure); then call serve().
    int bind_any_port(const std::string& host);
    bool serve();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace synthaudit
