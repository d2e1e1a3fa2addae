#pragma once

#include "synthaudit/corpus.hpp"

#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace synthaudit {

/// Aho-Corasick automaton over token ids: finds every occurrence of a set of
/// token-sequence patterns in one left-to-right pass.
class TokenPatternIndex {
public:
    /// Adds a pattern and returns its id; identical patterns share an id.
    /// Empty patterns are rejected.
    std::size_t add(const std::vector<std::string>& tokens);

    /// Computes failure links. Must be called after the last `add` and
    /// before `scan`.
    void build();

    std::size_t pattern_count() const { return pattern_lengths_.size(); }
    std::size_t pattern_length(std::size_t id) const { return pattern_lengths_[id]; }

    /// Calls `on_match(pattern_id, first_token, last_token_exclusive)` for
    /// every occurrence, in order of end position.
    template <class F>
    void scan(const std::vector<std::string>& tokens, F&& on_match) const {
        int state = 0;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            const auto v = vocab_.find(tokens[i]);
            if (v == vocab_.end()) {
                state = 0;
                continue;
            }
            state = step(state, v->second);
            for (int node = nodes_[state].pattern >= 0 ? state : nodes_[state].output; node > 0;
                 node = nodes_[node].output) {
                const auto pid = static_cast<std::size_t>(nodes_[node].pattern);
                on_match(pid, i + 1 - pattern_lengths_[pid], i + 1);
            }
        }
    }

private:
    struct Node {
        std::unordered_map<int, int> next;
        int fail = 0;
        int output = 0; // nearest proper suffix node carrying a pattern, 0 if none
        int pattern = -1;
    };

    int step(int state, int token) const;

    std::unordered_map<std::string, int> vocab_;
    std::vector<Node> nodes_{Node{}};
    std::vector<std::size_t> pattern_lengths_;
    bool built_ = false;
};

/// Token-level entity matcher shared by the privacy metrics and the review
/// service. Entities and documents are NFC-normalized and tokenized with the
/// same configuration; a match is a contiguous token subsequence.
class EntityMatcher {
public:
    struct Match {
        std::size_t entity = 0;      // index into keys()
        std::size_t first_token = 0; // token range within the scanned text
        std::size_t last_token = 0;  // exclusive
        std::size_t start = 0;       // code point offsets within the text
        std::size_t end = 0;
    };

    explicit EntityMatcher(const std::vector<std::string>& surfaces, const TokenizerConfig& tokenizer = {});

    /// Unique normalized entity keys (tokens joined by one space), sorted.
    const std::vector<std::string>& keys() const { return keys_; }
    const TokenizerConfig& tokenizer() const { return tokenizer_; }

    std::vector<Match> find_all(std::string_view text) const;
    std::vector<Match> find_all(const TokenSequence& tokens) const;

    /// Per key: whether it occurs in at least one of the documents.
    std::vector<bool> occurs_in(const Corpus& corpus) const;

private:
    TokenizerConfig tokenizer_;
    std::vector<std::string> keys_;
    std::vector<std::size_t> key_for_pattern_;
    TokenPatternIndex index_;
};

} // namespace synthaudit
