#include "synthaudit/privacy.hpp"

#include "synthaudit/error.hpp"
#include "synthaudit/matcher.hpp"
#include "synthaudit/parallel.hpp"
#include "synthaudit/quality.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <set>

namespace synthaudit {

namespace {

double percent(std::size_t part, std::size_t total) {
    return total == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(total);
}

std::vector<std::string> entity_surfaces(const Corpus& train) {
    std::vector<std::string> out;
    for (const auto& d : train) {
        for (const auto& e : d.entities) out.push_back(e.surface);
    }
    return out;
}

} // namespace

LeakageResult entity_leakage(const std::vector<std::string>& train_entities, const Corpus& synth,
                             const TokenizerConfig& tokenizer) {
    if (train_entities.empty()) throw InputError("entity_leakage: training entity set is empty");
    const EntityMatcher matcher(train_entities, tokenizer);
    if (matcher.keys().empty()) throw InputError("entity_leakage: no entity has a non-empty token sequence");
    const std::vector<bool> found = matcher.occurs_in(synth);
    LeakageResult r;
    r.total = matcher.keys().size();
    for (std::size_t i = 0; i < found.size(); ++i) {
        if (found[i]) r.leaked.push_back(matcher.keys()[i]);
    }
    r.leaked_count = r.leaked.size();
    r.percentage = percent(r.leaked_count, r.total);
    return r;
}

LeakageResult entity_leakage(const Corpus& train, const Corpus& synth, const TokenizerConfig& tokenizer) {
    return entity_leakage(entity_surfaces(train), synth, tokenizer);
}

std::map<std::string, LeakageResult> entity_leakage_by_category(const Corpus& train, const Corpus& synth,
                                                                const TokenizerConfig& tokenizer) {
    std::map<std::string, std::vector<std::string>> by_category;
    for (const auto& d : train) {
        for (const auto& e : d.entities) by_category[e.category.empty() ? "UNSPECIFIED" : e.category].push_back(e.surface);
    }
    std::map<std::string, LeakageResult> out;
    for (const auto& [category, surfaces] : by_category) out.emplace(category, entity_leakage(surfaces, synth, tokenizer));
    return out;
}

// ---------------------------------------------------------------------------
// Context windows

namespace {

std::pair<std::size_t, std::size_t> window_sides(int k, bool per_side) {
    const auto uk = static_cast<std::size_t>(k);
    if (per_side) return {uk, uk};
    return {uk / 2, uk - uk / 2};
}

} // namespace

std::vector<ContextWindow> context_windows(const Corpus& train, int k, const ContextOptions& options) {
    if (k < 0) throw InputError("context window k must be >= 0");
    const auto [left, right] = window_sides(k, options.per_side);
    std::vector<ContextWindow> out;
    for (const auto& d : train) {
        if (d.entities.empty()) continue;
        const TokenSequence seq = tokenize(d.text, options.tokenizer);
        for (const auto& e : d.entities) {
            // Tokens overlapping [start, end).
            std::size_t first = seq.size(), last = 0;
            for (std::size_t i = 0; i < seq.size(); ++i) {
                if (seq.offsets[i].first < e.end && seq.offsets[i].second > e.start) {
                    first = std::min(first, i);
                    last = i + 1;
                }
            }
            if (first >= last) continue; // span holds no tokens under this tokenizer
            const std::size_t lo = first >= left ? first - left : 0;
            const std::size_t hi = std::min(seq.size(), last + right);
            ContextWindow w;
            w.doc_id = d.id;
            w.entity_key = normalized_key(e.surface, options.tokenizer);
            w.tokens.assign(seq.tokens.begin() + static_cast<std::ptrdiff_t>(lo),
                            seq.tokens.begin() + static_cast<std::ptrdiff_t>(hi));
            out.push_back(std::move(w));
        }
    }
    return out;
}

namespace {

struct WindowSet {
    std::vector<ContextWindow> windows;
    std::vector<std::size_t> pattern_of; // window -> pattern id
    TokenPatternIndex index;
};

// Marks which patterns occur in at least one synthetic document.
std::vector<char> scan_synthetic(const TokenPatternIndex& index, const std::vector<TokenSequence>& synth_tokens) {
    const std::size_t chunks = chunk_count(synth_tokens.size());
    std::vector<std::vector<char>> partial(chunks, std::vector<char>(index.pattern_count(), 0));
    parallel_for(synth_tokens.size(), [&](std::size_t begin, std::size_t end, std::size_t chunk) {
        auto& seen = partial[chunk];
        for (std::size_t d = begin; d < end; ++d) {
            index.scan(synth_tokens[d].tokens, [&](std::size_t pid, std::size_t, std::size_t) { seen[pid] = 1; });
        }
    });
    std::vector<char> out(index.pattern_count(), 0);
    for (const auto& seen : partial) {
        for (std::size_t i = 0; i < seen.size(); ++i) out[i] |= seen[i];
    }
    return out;
}

LeakageResult context_leakage_tokens(const Corpus& train, const std::vector<TokenSequence>& synth_tokens, int k,
                                     const ContextOptions& options) {
    WindowSet ws;
    ws.windows = context_windows(train, k, options);
    if (ws.windows.empty()) throw InputError("context_leakage: training corpus has no entity occurrences");
    ws.pattern_of.reserve(ws.windows.size());
    for (const auto& w : ws.windows) ws.pattern_of.push_back(ws.index.add(w.tokens));
    ws.index.build();
    const std::vector<char> hit = scan_synthetic(ws.index, synth_tokens);

    LeakageResult r;
    r.k = k;
    r.total = ws.windows.size();
    std::set<std::string> leaked;
    for (std::size_t i = 0; i < ws.windows.size(); ++i) {
        if (hit[ws.pattern_of[i]]) {
            ++r.leaked_count;
            leaked.insert(ws.windows[i].entity_key);
        }
    }
    r.leaked.assign(leaked.begin(), leaked.end());
    r.percentage = percent(r.leaked_count, r.total);
    return r;
}

std::vector<TokenSequence> tokenize_corpus(const Corpus& c, const TokenizerConfig& tokenizer) {
    std::vector<TokenSequence> out(c.size());
    parallel_for(c.size(), [&](std::size_t begin, std::size_t end, std::size_t) {
        for (std::size_t i = begin; i < end; ++i) out[i] = tokenize(c[i].text, tokenizer);
    });
    return out;
}

} // namespace

LeakageResult context_leakage(const Corpus& train, const Corpus& synth, int k, const ContextOptions& options) {
    if (k < 0) throw InputError("context_leakage: k must be >= 0");
    return context_leakage_tokens(train, tokenize_corpus(synth, options.tokenizer), k, options);
}

std::vector<std::pair<int, double>> leakage_curve(const Corpus& train, const Corpus& synth,
                                                  const std::vector<int>& ks, const ContextOptions& options) {
    if (ks.empty()) throw InputError("leakage_curve: k list is empty");
    if (!std::is_sorted(ks.begin(), ks.end())) throw InputError("leakage_curve: k list must be sorted ascending");
    if (ks.front() < 0) throw InputError("leakage_curve: k must be >= 0");
    const auto synth_tokens = tokenize_corpus(synth, options.tokenizer);
    std::vector<std::pair<int, double>> out;
    out.reserve(ks.size());
    for (int k : ks) out.emplace_back(k, context_leakage_tokens(train, synth_tokens, k, options).percentage);
    return out;
}

// ---------------------------------------------------------------------------
// Canaries

CanaryRecord make_canary_record(std::string canary, std::vector<std::string> candidates, int insertions) {
    if (canary.empty()) throw InputError("canary text is empty");
    if (insertions < 0) throw InputError("canary insertions must be >= 0");
    std::set<std::string> seen;
    for (const auto& c : candidates) {
        if (!seen.insert(c).second) throw InputError("duplicate canary candidate '" + c + "'");
    }
    if (!seen.count(canary)) candidates.push_back(canary);
    return CanaryRecord{std::move(canary), std::move(candidates), insertions};
}

std::vector<CanaryRecord> parse_canaries(std::istream& in, const std::string& source_name) {
    std::vector<CanaryRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            if (!j.is_object() || !j.contains("canary") || !j["canary"].is_string()) {
                throw InputError("record requires a string 'canary'");
            }
            std::vector<std::string> candidates;
            if (j.contains("candidates")) candidates = j["candidates"].get<std::vector<std::string>>();
            out.push_back(make_canary_record(j["canary"].get<std::string>(), std::move(candidates),
                                             j.value("insertions", 0)));
        } catch (const nlohmann::json::exception& e) {
            throw InputError(source_name + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const InputError& e) {
            throw InputError(source_name + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<CanaryRecord> load_canaries(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open canary file " + path.string());
    return parse_canaries(in, path.string());
}

CanaryResult canary_metrics(const CanaryRecord& record, const ScoreSet& scores) {
    if (record.candidates.empty()) throw InputError("canary_metrics: empty candidate set");
    std::vector<std::string> missing;
    for (const auto& c : record.candidates) {
        if (!scores.contains(c)) missing.push_back(c);
    }
    if (!missing.empty()) {
        std::string msg = "canary_metrics: missing scores for " + std::to_string(missing.size()) + " candidate(s):";
        for (std::size_t i = 0; i < missing.size() && i < 5; ++i) msg += " '" + missing[i] + "'";
        throw InputError(msg);
    }
    if (std::count(record.candidates.begin(), record.candidates.end(), record.canary) != 1) {
        throw InputError("canary_metrics: canary must appear exactly once among candidates");
    }
    CanaryResult r;
    r.candidate_count = record.candidates.size();
    r.perplexity = perplexity(scores, record.canary);
    r.rank = 1;
    for (const auto& c : record.candidates) {
        if (c == record.canary) continue;
        const double p = perplexity(scores, c);
        if (p < r.perplexity || (p == r.perplexity && c < record.canary)) ++r.rank;
    }
    return r;
}

} // namespace synthaudit
