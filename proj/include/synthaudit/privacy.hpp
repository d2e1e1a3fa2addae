#pragma once

#include "synthaudit/corpus.hpp"
#include "synthaudit/scorer.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace synthaudit {

struct LeakageResult {
    double percentage = 0.0;          // 100 * leaked_count / total
    std::vector<std::string> leaked;  // normalized entity keys, sorted, unique
    std::size_t leaked_count = 0;     // unique entities, or occurrences for context leakage
    std::size_t total = 0;
    std::optional<int> k;
};

/// Unique-entity leakage: an entity leaks if its normalized token sequence
/// occurs contiguously in at least one synthetic document.
LeakageResult entity_leakage(const std::vector<std::string>& train_entities, const Corpus& synth,
                             const TokenizerConfig& tokenizer = {});

/// Same, with the entity set taken from the training corpus annotations.
LeakageResult entity_leakage(const Corpus& train, const Corpus& synth, const TokenizerConfig& tokenizer = {});

/// Entity leakage split by annotation category.
std::map<std::string, LeakageResult> entity_leakage_by_category(const Corpus& train, const Corpus& synth,
                                                                const TokenizerConfig& tokenizer = {});

struct ContextOptions {
    /// true: k tokens on each side of the entity. false: k tokens in total,
    /// floor(k/2) before and the rest after.
    bool per_side = true;
    TokenizerConfig tokenizer;
};

/// Occurrence-level leakage of an entity together with its k-token context.
/// The entity part of a window is the run of document tokens overlapping the
/// annotated span; windows are truncated at document boundaries.
LeakageResult context_leakage(const Corpus& train, const Corpus& synth, int k, const ContextOptions& options = {});

/// context_leakage at each k (ascending).
std::vector<std::pair<int, double>> leakage_curve(const Corpus& train, const Corpus& synth,
                                                  const std::vector<int>& ks, const ContextOptions& options = {});

/// Token windows (one per entity occurrence) that context_leakage matches,
/// in corpus order. Exposed for oracle testing.
struct ContextWindow {
    std::string doc_id;
    std::string entity_key;
    std::vector<std::string> tokens;
};
std::vector<ContextWindow> context_windows(const Corpus& train, int k, const ContextOptions& options = {});

struct CanaryRecord {
    std::string canary;
    std::vector<std::string> candidates; // contains the canary exactly once
    int insertions = 0;
};

/// Validates a record. A candidate list that omits the canary gets it added.
CanaryRecord make_canary_record(std::string canary, std::vector<std::string> candidates, int insertions);

/// JSONL lines {"canary": str, "candidates": [str], "insertions": int}.
std::vector<CanaryRecord> parse_canaries(std::istream& in, const std::string& source_name = "<stream>");
std::vector<CanaryRecord> load_canaries(const std::filesystem::path& path);

struct CanaryResult {
    std::size_t rank = 0;
    double perplexity = 0.0;
    std::size_t candidate_count = 0;
};

/// Rank of the canary among its candidates by ascending perplexity (scores
/// keyed by candidate text). Ties go to the lexicographically smaller text.
CanaryResult canary_metrics(const CanaryRecord& record, const ScoreSet& scores);

} // namespace synthaudit
