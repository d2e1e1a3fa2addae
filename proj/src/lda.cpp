#include "synthaudit/descriptive.hpp"

#include "random.hpp"
#include "synthaudit/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace synthaudit {

namespace {

struct GibbsState {
    int topics = 0;
    std::size_t vocab = 0;
    double alpha = 0.0;
    double beta = 0.0;
    std::vector<std::vector<std::size_t>> words; // doc -> word ids
    std::vector<std::vector<int>> z;             // doc -> topic per token
    std::vector<std::vector<int>> doc_topic;     // D x K
    std::vector<std::vector<int>> topic_word;    // K x V
    std::vector<int> topic_total;                // K

    double log_likelihood() const {
        const double vbeta = static_cast<double>(vocab) * beta;
        const double kalpha = topics * alpha;
        double ll = 0.0;
        for (int k = 0; k < topics; ++k) {
            ll += std::lgamma(vbeta) - static_cast<double>(vocab) * std::lgamma(beta);
            for (std::size_t w = 0; w < vocab; ++w) ll += std::lgamma(topic_word[k][w] + beta);
            ll -= std::lgamma(topic_total[k] + vbeta);
        }
        for (std::size_t d = 0; d < words.size(); ++d) {
            ll += std::lgamma(kalpha) - topics * std::lgamma(alpha);
            for (int k = 0; k < topics; ++k) ll += std::lgamma(doc_topic[d][k] + alpha);
            ll -= std::lgamma(static_cast<double>(words[d].size()) + kalpha);
        }
        return ll;
    }
};

} // namespace

TopicModel lda_fit(const Corpus& corpus, const LdaConfig& config) {
    if (config.topics < 1) throw InputError("lda_fit: topic count must be >= 1");
    if (config.iterations < 1) throw InputError("lda_fit: iterations must be >= 1");
    if (config.beta <= 0.0) throw InputError("lda_fit: beta must be > 0");
    if (corpus.empty()) throw InputError("lda_fit: corpus is empty");

    GibbsState s;
    s.topics = config.topics;
    s.alpha = config.alpha > 0.0 ? config.alpha : 50.0 / config.topics;
    s.beta = config.beta;

    std::map<std::string, std::size_t> vocab_index;
    std::vector<std::vector<std::string>> docs_tokens;
    docs_tokens.reserve(corpus.size());
    for (const auto& d : corpus) {
        docs_tokens.push_back(tokenize(d.text, config.tokenizer).tokens);
        for (const auto& t : docs_tokens.back()) vocab_index.emplace(t, 0);
    }
    if (vocab_index.empty()) throw InputError("lda_fit: vocabulary is empty after tokenization");
    std::vector<std::string> vocabulary;
    vocabulary.reserve(vocab_index.size());
    for (auto& [term, id] : vocab_index) {
        id = vocabulary.size();
        vocabulary.push_back(term);
    }
    s.vocab = vocabulary.size();

    const auto K = static_cast<std::size_t>(s.topics);
    s.topic_word.assign(K, std::vector<int>(s.vocab, 0));
    s.topic_total.assign(K, 0);
    s.doc_topic.assign(corpus.size(), std::vector<int>(K, 0));
    s.words.resize(corpus.size());
    s.z.resize(corpus.size());

    detail::Rng rng(config.seed);
    for (std::size_t d = 0; d < corpus.size(); ++d) {
        for (const auto& t : docs_tokens[d]) {
            const std::size_t w = vocab_index.at(t);
            const auto k = static_cast<int>(rng.below(K));
            s.words[d].push_back(w);
            s.z[d].push_back(k);
            ++s.doc_topic[d][k];
            ++s.topic_word[k][w];
            ++s.topic_total[k];
        }
    }

    TopicModel m;
    m.log_likelihood.emplace_back(0, s.log_likelihood());

    const double vbeta = static_cast<double>(s.vocab) * s.beta;
    std::vector<double> cumulative(K);
    for (int it = 1; it <= config.iterations; ++it) {
        for (std::size_t d = 0; d < s.words.size(); ++d) {
            auto& dt = s.doc_topic[d];
            for (std::size_t i = 0; i < s.words[d].size(); ++i) {
                const std::size_t w = s.words[d][i];
                int k = s.z[d][i];
                --dt[k];
                --s.topic_word[k][w];
                --s.topic_total[k];

                double total = 0.0;
                for (std::size_t j = 0; j < K; ++j) {
                    total += (dt[j] + s.alpha) * (s.topic_word[j][w] + s.beta) / (s.topic_total[j] + vbeta);
                    cumulative[j] = total;
                }
                const double u = rng.uniform() * total;
                k = static_cast<int>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
                if (k >= s.topics) k = s.topics - 1;

                s.z[d][i] = k;
                ++dt[k];
                ++s.topic_word[k][w];
                ++s.topic_total[k];
            }
        }
        if (it % 10 == 0 || it == config.iterations) m.log_likelihood.emplace_back(it, s.log_likelihood());
    }

    m.topics = s.topics;
    m.alpha = s.alpha;
    m.beta = s.beta;
    m.seed = config.seed;
    m.iterations = config.iterations;
    m.vocabulary = std::move(vocabulary);
    m.doc_ids.reserve(corpus.size());
    for (const auto& d : corpus) m.doc_ids.push_back(d.id);

    m.phi.assign(K, std::vector<double>(s.vocab));
    for (std::size_t k = 0; k < K; ++k) {
        const double denom = s.topic_total[k] + vbeta;
        for (std::size_t w = 0; w < s.vocab; ++w) m.phi[k][w] = (s.topic_word[k][w] + s.beta) / denom;
    }
    const double kalpha = s.topics * s.alpha;
    m.theta.assign(corpus.size(), std::vector<double>(K));
    for (std::size_t d = 0; d < corpus.size(); ++d) {
        const double denom = static_cast<double>(s.words[d].size()) + kalpha;
        for (std::size_t k = 0; k < K; ++k) m.theta[d][k] = (s.doc_topic[d][k] + s.alpha) / denom;
    }
    return m;
}

std::vector<std::string> lda_top_words(const TopicModel& model, int topic, std::size_t k) {
    if (topic < 0 || topic >= model.topics) {
        throw InputError("lda_top_words: topic " + std::to_string(topic) + " out of range [0, " +
                         std::to_string(model.topics) + ")");
    }
    const auto& row = model.phi[static_cast<std::size_t>(topic)];
    std::vector<std::size_t> order(row.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (row[a] != row[b]) return row[a] > row[b];
        return model.vocabulary[a] < model.vocabulary[b];
    });
    if (order.size() > k) order.resize(k);
    std::vector<std::string> out;
    out.reserve(order.size());
    for (auto i : order) out.push_back(model.vocabulary[i]);
    return out;
}

} // namespace synthaudit
