#pragma once

#include "synthaudit/corpus.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace synthaudit {

struct SummaryStats {
    double avg_length_tokens = 0.0;
    double avg_length_chars = 0.0;
    double avg_unique_words = 0.0;
    std::size_t min_length = 0;
    std::size_t max_length = 0;
    std::size_t doc_count = 0;
};

SummaryStats corpus_summary(const Corpus& corpus, const TokenizerConfig& tokenizer = {});

using RankedCounts = std::vector<std::pair<std::string, std::size_t>>;

/// Top-k n-grams (tokens joined by a single space), count descending with
/// lexicographic tie-break.
RankedCounts ngram_frequencies(const Corpus& corpus, int n, std::size_t top_k,
                               const TokenizerConfig& tokenizer = {});

enum class Weighting { Count, TfIdf };

/// Sparse document-term matrix over a lexicographically sorted vocabulary.
struct DocTermMatrix {
    std::vector<std::string> vocabulary;
    std::vector<std::vector<std::pair<std::size_t, double>>> rows;
    std::vector<double> idf; // empty for Weighting::Count
    Weighting weighting = Weighting::Count;

    std::size_t index_of(const std::string& term) const; // npos if absent
};

DocTermMatrix count_matrix(const Corpus& corpus, const TokenizerConfig& tokenizer = {});

/// tf = raw count, idf = ln((1 + N) / (1 + df)) + 1, rows L2-normalized.
DocTermMatrix tfidf_matrix(const Corpus& corpus, const TokenizerConfig& tokenizer = {});

/// |Va ∩ Vb| / |Va ∪ Vb| over unique-token vocabularies.
double jaccard_similarity(const Corpus& a, const Corpus& b, const TokenizerConfig& tokenizer = {});

/// Cosine between the per-corpus mean TF-IDF rows, with TF-IDF fitted on the
/// union of both corpora.
double cosine_similarity(const Corpus& a, const Corpus& b, const TokenizerConfig& tokenizer = {});

enum class FrequencyOrder { Most, Least };

/// Counts normalized entity surfaces. Least order sorts ascending by count,
/// still lexicographic on ties.
RankedCounts entity_frequency(const Corpus& corpus, std::size_t top_k, FrequencyOrder order,
                              const TokenizerConfig& tokenizer = {});

// ---------------------------------------------------------------------------
// LDA

struct LdaConfig {
    int topics = 10;
    double alpha = -1.0; // <= 0 means 50 / topics
    double beta = 0.01;
    int iterations = 500;
    std::uint64_t seed = 0;
    TokenizerConfig tokenizer;
};

struct TopicModel {
    int topics = 0;
    double alpha = 0.0;
    double beta = 0.0;
    std::uint64_t seed = 0;
    int iterations = 0;
    std::vector<std::string> vocabulary;
    std::vector<std::string> doc_ids;
    std::vector<std::vector<double>> phi;   // topics x vocabulary
    std::vector<std::vector<double>> theta; // documents x topics
    /// (iteration, collapsed joint log-likelihood), sampled at iteration 0
    /// and every 10 sweeps, plus the final sweep.
    std::vector<std::pair<int, double>> log_likelihood;
};

/// Collapsed Gibbs sampling with symmetric Dirichlet priors.
TopicModel lda_fit(const Corpus& corpus, const LdaConfig& config);

std::vector<std::string> lda_top_words(const TopicModel& model, int topic, std::size_t k);

} // namespace synthaudit
