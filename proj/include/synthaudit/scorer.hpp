#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace synthaudit {

/// Per-text token log-probabilities (natural log, each <= 0 and finite).
class ScoreSet {
public:
    ScoreSet() = default;
    explicit ScoreSet(std::string provenance) : provenance_(std::move(provenance)) {}

    /// Validates and inserts; throws on duplicate key or invalid value.
    void add(const std::string& key, std::vector<double> logprobs);

    const std::vector<double>* find(const std::string& key) const;
    bool contains(const std::string& key) const { return find(key) != nullptr; }
    std::size_t size() const { return scores_.size(); }
    bool empty() const { return scores_.empty(); }

    const std::map<std::string, std::vector<double>>& entries() const { return scores_; }
    const std::string& provenance() const { return provenance_; }
    void set_provenance(std::string p) { provenance_ = std::move(p); }

    bool operator==(const ScoreSet& other) const { return scores_ == other.scores_; }

private:
    std::map<std::string, std::vector<double>> scores_;
    std::string provenance_;
};

/// JSONL lines {"key": str, "logprobs": [real]}.
ScoreSet parse_scores(std::istream& in, const std::string& source_name = "<stream>");
ScoreSet load_scores(const std::filesystem::path& path);
void write_scores(const ScoreSet& scores, std::ostream& out);
void save_scores(const ScoreSet& scores, const std::filesystem::path& path);

struct RemoteScorerOptions {
    std::size_t batch_size = 16;
    std::chrono::milliseconds timeout{30000};
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{200};
    std::size_t max_concurrency = 4;
};

/// Scores `texts` against a service implementing POST /score
/// ({"texts": [...]} -> {"results": [{"text_index": i, "logprobs": [...]}]}).
/// Keys of the result are the texts themselves; duplicates are scored once.
ScoreSet score_remote(const std::vector<std::string>& texts, const std::string& endpoint,
                      const RemoteScorerOptions& options = {});

} // namespace synthaudit
