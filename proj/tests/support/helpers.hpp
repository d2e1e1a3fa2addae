#pragma once

#include "synthaudit/corpus.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace testing {

inline synthaudit::Document doc(std::string id, std::string text, std::vector<std::string> labels = {},
                                std::map<std::string, std::string> groups = {}) {
    synthaudit::Document d;
    d.id = std::move(id);
    d.text = std::move(text);
    d.labels = std::move(labels);
    d.groups = std::move(groups);
    return d;
}

/// Corpus with ids "<prefix>0", "<prefix>1", ...
inline synthaudit::Corpus texts(const std::vector<std::string>& ts, const std::string& prefix = "d") {
    std::vector<synthaudit::Document> docs;
    for (std::size_t i = 0; i < ts.size(); ++i) docs.push_back(doc(prefix + std::to_string(i), ts[i]));
    return synthaudit::Corpus(std::move(docs));
}

/// Adds an entity annotation for the first occurrence of `surface` in the
/// (ASCII) document text.
inline void annotate(synthaudit::Document& d, const std::string& surface, const std::string& category = "PERSON") {
    const auto pos = d.text.find(surface);
    if (pos == std::string::npos) throw std::logic_error("fixture: surface not in text: " + surface);
    d.entities.push_back({surface, category, pos, pos + surface.size()});
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    static std::random_device rd;
    auto p = std::filesystem::temp_directory_path() / ("synthaudit-test-" + name + "-" + std::to_string(rd()));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

/// n x d matrix of independent N(mean, sd^2) draws.
inline Eigen::MatrixXd gaussian(Eigen::Index n, Eigen::Index d, double mean, double sd, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(mean, sd);
    Eigen::MatrixXd m(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) m(i, j) = dist(rng);
    return m;
}

/// Documents drawn from one of two disjoint 8-word vocabularies, 30 tokens
/// each. `truth` receives the source vocabulary per document.
inline synthaudit::Corpus two_topic_corpus(std::size_t n, std::uint64_t seed, std::vector<int>& truth) {
    static const std::vector<std::string> t0 = {"heart", "valve", "pulse", "artery", "cardiac", "beat", "rhythm", "aorta"};
    static const std::vector<std::string> t1 = {"lung", "breath", "cough", "airway", "asthma", "oxygen", "chest", "wheeze"};
    std::mt19937_64 rng(seed);
    std::vector<std::string> out;
    truth.clear();
    for (std::size_t i = 0; i < n; ++i) {
        const int topic = int(rng() % 2);
        truth.push_back(topic);
        const auto& words = topic == 0 ? t0 : t1;
        std::string text;
        for (int w = 0; w < 30; ++w) text += (w ? " " : "") + words[rng() % words.size()];
        out.push_back(text);
    }
    return texts(out);
}

} // namespace testing

namespace testing {

/// Linearly separable two-class sentiment toy set. Each document draws six
/// words from its class vocabulary.
inline synthaudit::Corpus separable(std::size_t n, std::uint64_t seed, const std::string& prefix = "d") {
    static const std::vector<std::string> pos = {"excellent", "good", "great", "superb", "fine", "wonderful"};
    static const std::vector<std::string> neg = {"awful", "bad", "poor", "terrible", "dreadful", "horrid"};
    std::mt19937_64 rng(seed);
    std::vector<synthaudit::Document> docs;
    for (std::size_t i = 0; i < n; ++i) {
        const bool positive = i % 2 == 0;
        const auto& words = positive ? pos : neg;
        std::string text;
        for (int w = 0; w < 6; ++w) text += (w ? " " : "") + words[rng() % words.size()];
        docs.push_back(doc(prefix + std::to_string(i), text, {positive ? "pos" : "neg"}));
    }
    return synthaudit::Corpus(std::move(docs));
}

/// Flips the label of exactly round(fraction * n) documents chosen by a
/// seeded shuffle (binary pos/neg corpora).
inline synthaudit::Corpus flip_labels(const synthaudit::Corpus& c, double fraction, std::uint64_t seed) {
    std::vector<synthaudit::Document> docs(c.begin(), c.end());
    std::vector<std::size_t> order(docs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const auto count = static_cast<std::size_t>(std::llround(fraction * double(docs.size())));
    for (std::size_t i = 0; i < count; ++i) {
        auto& labels = docs[order[i]].labels;
        labels = {labels.at(0) == "pos" ? "neg" : "pos"};
    }
    return synthaudit::Corpus(std::move(docs));
}

} // namespace testing
