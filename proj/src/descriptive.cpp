#include "synthaudit/descriptive.hpp"

#include "synthaudit/error.hpp"
#include "synthaudit/unicode.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace synthaudit {

namespace {

RankedCounts rank(const std::unordered_map<std::string, std::size_t>& counts, std::size_t top_k,
                  FrequencyOrder order) {
    RankedCounts out(counts.begin(), counts.end());
    std::sort(out.begin(), out.end(), [order](const auto& a, const auto& b) {
        if (a.second != b.second) {
            return order == FrequencyOrder::Most ? a.second > b.second : a.second < b.second;
        }
        return a.first < b.first;
    });
    if (out.size() > top_k) out.resize(top_k);
    return out;
}

void require_non_empty(const Corpus& c, const char* what) {
    if (c.empty()) throw InputError(std::string(what) + ": corpus is empty");
}

} // namespace

SummaryStats corpus_summary(const Corpus& corpus, const TokenizerConfig& tokenizer) {
    require_non_empty(corpus, "corpus_summary");
    SummaryStats s;
    s.doc_count = corpus.size();
    s.min_length = static_cast<std::size_t>(-1);
    double total_tokens = 0.0, total_unique = 0.0, total_chars = 0.0;
    for (const auto& d : corpus) {
        const TokenSequence seq = tokenize(d.text, tokenizer);
        const std::unordered_set<std::string> unique(seq.tokens.begin(), seq.tokens.end());
        total_tokens += static_cast<double>(seq.size());
        total_unique += static_cast<double>(unique.size());
        total_chars += static_cast<double>(unicode::length(d.text));
        s.min_length = std::min(s.min_length, seq.size());
        s.max_length = std::max(s.max_length, seq.size());
    }
    const auto n = static_cast<double>(corpus.size());
    s.avg_length_tokens = total_tokens / n;
    s.avg_unique_words = total_unique / n;
    s.avg_length_chars = total_chars / n;
    return s;
}

RankedCounts ngram_frequencies(const Corpus& corpus, int n, std::size_t top_k,
                               const TokenizerConfig& tokenizer) {
    if (n < 1) throw InputError("ngram_frequencies: n must be >= 1");
    if (top_k < 1) throw InputError("ngram_frequencies: top_k must be >= 1");
    std::unordered_map<std::string, std::size_t> counts;
    const auto width = static_cast<std::size_t>(n);
    for (const auto& d : corpus) {
        const TokenSequence seq = tokenize(d.text, tokenizer);
        if (seq.size() < width) continue;
        for (std::size_t i = 0; i + width <= seq.size(); ++i) {
            std::string gram = seq.tokens[i];
            for (std::size_t j = 1; j < width; ++j) {
                gram.push_back(' ');
                gram += seq.tokens[i + j];
            }
            ++counts[gram];
        }
    }
    return rank(counts, top_k, FrequencyOrder::Most);
}

std::size_t DocTermMatrix::index_of(const std::string& term) const {
    const auto it = std::lower_bound(vocabulary.begin(), vocabulary.end(), term);
    if (it == vocabulary.end() || *it != term) return static_cast<std::size_t>(-1);
    return static_cast<std::size_t>(it - vocabulary.begin());
}

DocTermMatrix count_matrix(const Corpus& corpus, const TokenizerConfig& tokenizer) {
    std::vector<std::map<std::string, std::size_t>> per_doc;
    per_doc.reserve(corpus.size());
    std::set<std::string> vocab;
    for (const auto& d : corpus) {
        auto& counts = per_doc.emplace_back();
        for (auto& t : tokenize(d.text, tokenizer).tokens) {
            ++counts[t];
            vocab.insert(std::move(t));
        }
    }
    DocTermMatrix m;
    m.weighting = Weighting::Count;
    m.vocabulary.assign(vocab.begin(), vocab.end());
    m.rows.reserve(per_doc.size());
    for (const auto& counts : per_doc) {
        auto& row = m.rows.emplace_back();
        row.reserve(counts.size());
        for (const auto& [term, c] : counts) row.emplace_back(m.index_of(term), static_cast<double>(c));
    }
    return m;
}

DocTermMatrix tfidf_matrix(const Corpus& corpus, const TokenizerConfig& tokenizer) {
    require_non_empty(corpus, "tfidf_matrix");
    DocTermMatrix m = count_matrix(corpus, tokenizer);
    std::vector<double> df(m.vocabulary.size(), 0.0);
    for (const auto& row : m.rows) {
        for (const auto& [j, w] : row) df[j] += 1.0;
    }
    const auto n_docs = static_cast<double>(corpus.size());
    m.idf.resize(df.size());
    for (std::size_t j = 0; j < df.size(); ++j) m.idf[j] = std::log((1.0 + n_docs) / (1.0 + df[j])) + 1.0;
    for (auto& row : m.rows) {
        double norm2 = 0.0;
        for (auto& [j, w] : row) {
            w *= m.idf[j];
            norm2 += w * w;
        }
        if (norm2 > 0.0) {
            const double inv = 1.0 / std::sqrt(norm2);
            for (auto& [j, w] : row) w *= inv;
        }
    }
    m.weighting = Weighting::TfIdf;
    return m;
}

namespace {

std::set<std::string> vocabulary_of(const Corpus& c, const TokenizerConfig& tokenizer) {
    std::set<std::string> v;
    for (const auto& d : c) {
        for (auto& t : tokenize(d.text, tokenizer).tokens) v.insert(std::move(t));
    }
    return v;
}

} // namespace

double jaccard_similarity(const Corpus& a, const Corpus& b, const TokenizerConfig& tokenizer) {
    require_non_empty(a, "jaccard_similarity");
    require_non_empty(b, "jaccard_similarity");
    const auto va = vocabulary_of(a, tokenizer);
    const auto vb = vocabulary_of(b, tokenizer);
    std::size_t inter = 0;
    for (const auto& t : va) inter += vb.count(t);
    const std::size_t uni = va.size() + vb.size() - inter;
    if (uni == 0) throw InputError("jaccard_similarity: both vocabularies are empty");
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double cosine_similarity(const Corpus& a, const Corpus& b, const TokenizerConfig& tokenizer) {
    require_non_empty(a, "cosine_similarity");
    require_non_empty(b, "cosine_similarity");
    // Ids may collide across corpora; only the texts matter for the joint fit.
    std::vector<Document> joint;
    joint.reserve(a.size() + b.size());
    std::size_t i = 0;
    for (const auto* c : {&a, &b}) {
        for (const auto& d : *c) joint.push_back(Document{std::to_string(i++), d.text, {}, {}, {}});
    }
    const DocTermMatrix m = tfidf_matrix(Corpus(std::move(joint)), tokenizer);
    std::vector<double> ca(m.vocabulary.size(), 0.0), cb(m.vocabulary.size(), 0.0);
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
        auto& target = r < a.size() ? ca : cb;
        for (const auto& [j, w] : m.rows[r]) target[j] += w;
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    const double sa = 1.0 / static_cast<double>(a.size());
    const double sb = 1.0 / static_cast<double>(b.size());
    for (std::size_t j = 0; j < ca.size(); ++j) {
        const double x = ca[j] * sa, y = cb[j] * sb;
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if (na == 0.0 || nb == 0.0) throw InputError("cosine_similarity: zero centroid vector");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

RankedCounts entity_frequency(const Corpus& corpus, std::size_t top_k, FrequencyOrder order,
                              const TokenizerConfig& tokenizer) {
    std::unordered_map<std::string, std::size_t> counts;
    for (const auto& d : corpus) {
        for (const auto& e : d.entities) {
            std::string key = normalized_key(e.surface, tokenizer);
            if (!key.empty()) ++counts[std::move(key)];
        }
    }
    if (counts.empty()) throw InputError("entity_frequency: corpus has no entity annotations");
    return rank(counts, top_k, order);
}

} // namespace synthaudit
