#include "synthaudit/matcher.hpp"

#include "synthaudit/error.hpp"
#include "synthaudit/parallel.hpp"
#include "synthaudit/unicode.hpp"

#include <algorithm>
#include <deque>
#include <map>

namespace synthaudit {

std::size_t TokenPatternIndex::add(const std::vector<std::string>& tokens) {
    if (tokens.empty()) throw InputError("pattern must contain at least one token");
    if (built_) throw Error("TokenPatternIndex::add called after build");
    int state = 0;
    for (const auto& t : tokens) {
        const int id = vocab_.emplace(t, static_cast<int>(vocab_.size())).first->second;
        auto it = nodes_[state].next.find(id);
        if (it == nodes_[state].next.end()) {
            nodes_.emplace_back();
            const int child = static_cast<int>(nodes_.size()) - 1;
            nodes_[state].next.emplace(id, child);
            state = child;
        } else {
            state = it->second;
        }
    }
    if (nodes_[state].pattern < 0) {
        nodes_[state].pattern = static_cast<int>(pattern_lengths_.size());
        pattern_lengths_.push_back(tokens.size());
    }
    return static_cast<std::size_t>(nodes_[state].pattern);
}

void TokenPatternIndex::build() {
    std::deque<int> queue;
    for (const auto& [token, child] : nodes_[0].next) {
        nodes_[child].fail = 0;
        nodes_[child].output = 0;
        queue.push_back(child);
    }
    while (!queue.empty()) {
        const int node = queue.front();
        queue.pop_front();
        for (const auto& [token, child] : nodes_[node].next) {
            int f = nodes_[node].fail;
            while (f != 0 && !nodes_[f].next.count(token)) f = nodes_[f].fail;
            const auto it = nodes_[f].next.find(token);
            nodes_[child].fail = (it != nodes_[f].next.end() && it->second != child) ? it->second : 0;
            const int fail = nodes_[child].fail;
            nodes_[child].output = nodes_[fail].pattern >= 0 ? fail : nodes_[fail].output;
            queue.push_back(child);
        }
    }
    built_ = true;
}

int TokenPatternIndex::step(int state, int token) const {
    while (true) {
        const auto& next = nodes_[state].next;
        const auto it = next.find(token);
        if (it != next.end()) return it->second;
        if (state == 0) return 0;
        state = nodes_[state].fail;
    }
}

EntityMatcher::EntityMatcher(const std::vector<std::string>& surfaces, const TokenizerConfig& tokenizer)
    : tokenizer_(tokenizer) {
    std::map<std::string, std::vector<std::string>> unique;
    for (const auto& s : surfaces) {
        TokenSequence seq = tokenize(unicode::nfc(s), tokenizer_);
        if (seq.empty()) continue;
        std::string key;
        for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
            if (i) key.push_back(' ');
            key += seq.tokens[i];
        }
        unique.emplace(std::move(key), std::move(seq.tokens));
    }
    for (auto& [key, tokens] : unique) {
        const std::size_t pid = index_.add(tokens);
        if (pid >= key_for_pattern_.size()) key_for_pattern_.resize(pid + 1);
        key_for_pattern_[pid] = keys_.size();
        keys_.push_back(key);
    }
    index_.build();
}

std::vector<EntityMatcher::Match> EntityMatcher::find_all(const TokenSequence& seq) const {
    std::vector<Match> out;
    index_.scan(seq.tokens, [&](std::size_t pid, std::size_t first, std::size_t last) {
        out.push_back({key_for_pattern_[pid], first, last, seq.offsets[first].first, seq.offsets[last - 1].second});
    });
    std::sort(out.begin(), out.end(), [](const Match& a, const Match& b) {
        if (a.first_token != b.first_token) return a.first_token < b.first_token;
        return a.last_token < b.last_token;
    });
    return out;
}

std::vector<EntityMatcher::Match> EntityMatcher::find_all(std::string_view text) const {
    return find_all(tokenize(unicode::nfc(text), tokenizer_));
}

std::vector<bool> EntityMatcher::occurs_in(const Corpus& corpus) const {
    const std::size_t chunks = chunk_count(corpus.size());
    std::vector<std::vector<char>> partial(chunks, std::vector<char>(keys_.size(), 0));
    parallel_for(corpus.size(), [&](std::size_t begin, std::size_t end, std::size_t chunk) {
        auto& seen = partial[chunk];
        for (std::size_t d = begin; d < end; ++d) {
            const TokenSequence seq = tokenize(corpus[d].text, tokenizer_);
            index_.scan(seq.tokens, [&](std::size_t pid, std::size_t, std::size_t) { seen[key_for_pattern_[pid]] = 1; });
        }
    });
    std::vector<bool> out(keys_.size(), false);
    for (const auto& seen : partial) {
        for (std::size_t i = 0; i < seen.size(); ++i) {
            if (seen[i]) out[i] = true;
        }
    }
    return out;
}

} // namespace synthaudit
