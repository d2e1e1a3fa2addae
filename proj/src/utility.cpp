#include "synthaudit/utility.hpp"

#include "random.hpp"
#include "synthaudit/descriptive.hpp"
#include "synthaudit/error.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>

namespace synthaudit {

using nlohmann::json;
using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

json to_json(const ClassifierConfig& c) {
    return {{"model", "linear-tfidf"},
            {"mode", c.mode == ClassifierMode::Multiclass ? "multiclass" : "multilabel"},
            {"learning_rate", c.learning_rate},
            {"epochs", c.epochs},
            {"l2", c.l2},
            {"threshold", c.threshold},
            {"seed", c.seed},
            {"tokenizer", to_json(c.tokenizer)}};
}

namespace {

std::vector<const Document*> by_id(const Corpus& c) {
    std::vector<const Document*> docs;
    docs.reserve(c.size());
    for (const auto& d : c) docs.push_back(&d);
    std::sort(docs.begin(), docs.end(), [](const Document* a, const Document* b) { return a->id < b->id; });
    return docs;
}

SparseRows features(const std::vector<const Document*>& docs, const std::vector<std::string>& vocabulary,
                    const std::vector<double>& idf, const TokenizerConfig& tokenizer) {
    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t r = 0; r < docs.size(); ++r) {
        std::map<std::size_t, double> counts;
        for (const auto& t : tokenize(docs[r]->text, tokenizer).tokens) {
            const auto it = std::lower_bound(vocabulary.begin(), vocabulary.end(), t);
            if (it != vocabulary.end() && *it == t) counts[static_cast<std::size_t>(it - vocabulary.begin())] += 1.0;
        }
        double norm2 = 0.0;
        for (auto& [j, w] : counts) {
            w *= idf[j];
            norm2 += w * w;
        }
        const double inv = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 0.0;
        for (const auto& [j, w] : counts) {
            triplets.emplace_back(static_cast<int>(r), static_cast<int>(j), w * inv);
        }
    }
    SparseRows x(static_cast<Eigen::Index>(docs.size()), static_cast<Eigen::Index>(vocabulary.size()));
    x.setFromTriplets(triplets.begin(), triplets.end());
    return x;
}

// Row-wise softmax or sigmoid of the logits.
Eigen::MatrixXd activate(const Eigen::MatrixXd& logits, ClassifierMode mode) {
    if (mode == ClassifierMode::Multilabel) {
        return logits.unaryExpr([](double z) { return 1.0 / (1.0 + std::exp(-z)); });
    }
    Eigen::MatrixXd p = logits;
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        const double mx = p.row(i).maxCoeff();
        p.row(i) = (p.row(i).array() - mx).exp();
        p.row(i) /= p.row(i).sum();
    }
    return p;
}

double loss(const Eigen::MatrixXd& probs, const Eigen::MatrixXd& targets, const Eigen::MatrixXd& weights,
            double l2, ClassifierMode mode) {
    constexpr double eps = 1e-12;
    double total = 0.0;
    if (mode == ClassifierMode::Multiclass) {
        for (Eigen::Index i = 0; i < probs.rows(); ++i) {
            for (Eigen::Index j = 0; j < probs.cols(); ++j) {
                if (targets(i, j) > 0.0) total -= std::log(std::max(probs(i, j), eps));
            }
        }
    } else {
        for (Eigen::Index i = 0; i < probs.rows(); ++i) {
            for (Eigen::Index j = 0; j < probs.cols(); ++j) {
                const double p = std::clamp(probs(i, j), eps, 1.0 - eps);
                total -= targets(i, j) > 0.0 ? std::log(p) : std::log(1.0 - p);
            }
        }
    }
    return total / static_cast<double>(probs.rows()) + 0.5 * l2 * weights.squaredNorm();
}

std::set<std::string> labels_of(const Corpus& c) {
    std::set<std::string> out;
    for (const auto& d : c) out.insert(d.labels.begin(), d.labels.end());
    return out;
}

std::string identity(const Corpus& c) {
    const std::string name = std::filesystem::path(c.name()).filename().string();
    return (name.empty() ? std::string("<memory>") : name) + "#" + std::to_string(c.size()) + "@" +
           c.fingerprint();
}

} // namespace

ClassifierModel train_classifier(const Corpus& train, const ClassifierConfig& config,
                                 const std::set<std::string>& universe) {
    if (config.epochs < 1) throw InputError("train_classifier: epochs must be >= 1");
    if (!(config.learning_rate > 0.0)) throw InputError("train_classifier: learning rate must be > 0");
    if (config.l2 < 0.0) throw InputError("train_classifier: L2 penalty must be >= 0");
    std::vector<std::string> unlabeled;
    for (const auto& d : train) {
        if (d.labels.empty()) unlabeled.push_back(d.id);
        if (config.mode == ClassifierMode::Multiclass && d.labels.size() > 1) {
            throw InputError("train_classifier: document '" + d.id +
                             "' has several labels; use multilabel mode");
        }
    }
    if (!unlabeled.empty()) {
        std::string msg = "train_classifier: " + std::to_string(unlabeled.size()) + " unlabeled document(s):";
        for (std::size_t i = 0; i < unlabeled.size() && i < 20; ++i) msg += " " + unlabeled[i];
        throw InputError(msg);
    }
    const std::set<std::string> present = labels_of(train);
    if (present.size() < 2) {
        throw InputError("train_classifier: training set needs at least 2 distinct labels (found " +
                         std::to_string(present.size()) + ")");
    }

    ClassifierModel m;
    m.config = config;
    std::set<std::string> all = present;
    all.insert(universe.begin(), universe.end());
    m.labels.assign(all.begin(), all.end());
    m.train_identity = identity(train);

    const DocTermMatrix tfidf = tfidf_matrix(train, config.tokenizer);
    m.vocabulary = tfidf.vocabulary;
    m.idf = tfidf.idf;

    const auto docs = by_id(train);
    const SparseRows x = features(docs, m.vocabulary, m.idf, config.tokenizer);
    const auto n = static_cast<Eigen::Index>(docs.size());
    const auto v = static_cast<Eigen::Index>(m.vocabulary.size());
    const auto l = static_cast<Eigen::Index>(m.labels.size());
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, l);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (const auto& lab : docs[static_cast<std::size_t>(i)]->labels) {
            const auto it = std::lower_bound(m.labels.begin(), m.labels.end(), lab);
            y(i, it - m.labels.begin()) = 1.0;
        }
    }

    detail::Rng rng(config.seed);
    m.weights.resize(v, l);
    for (Eigen::Index j = 0; j < l; ++j) {
        for (Eigen::Index i = 0; i < v; ++i) m.weights(i, j) = 0.01 * rng.normal();
    }
    m.bias = Eigen::VectorXd::Zero(l);

    const double inv_n = 1.0 / static_cast<double>(n);
    for (int epoch = 0; epoch <= config.epochs; ++epoch) {
        Eigen::MatrixXd logits = x * m.weights;
        logits.rowwise() += m.bias.transpose();
        const Eigen::MatrixXd probs = activate(logits, config.mode);
        m.loss_history.push_back(loss(probs, y, m.weights, config.l2, config.mode));
        if (epoch == config.epochs) break;
        const Eigen::MatrixXd residual = (probs - y) * inv_n;
        const Eigen::MatrixXd grad_w = Eigen::MatrixXd(x.transpose() * residual) + config.l2 * m.weights;
        const Eigen::VectorXd grad_b = residual.colwise().sum().transpose();
        m.weights -= config.learning_rate * grad_w;
        m.bias -= config.learning_rate * grad_b;
    }
    return m;
}

std::vector<std::set<std::string>> predict(const ClassifierModel& model, const Corpus& docs) {
    std::vector<const Document*> order;
    order.reserve(docs.size());
    for (const auto& d : docs) order.push_back(&d);
    const SparseRows x = features(order, model.vocabulary, model.idf, model.config.tokenizer);
    Eigen::MatrixXd logits = x * model.weights;
    logits.rowwise() += model.bias.transpose();
    const Eigen::MatrixXd probs = activate(logits, model.config.mode);
    std::vector<std::set<std::string>> out(order.size());
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        auto& labels = out[static_cast<std::size_t>(i)];
        if (model.config.mode == ClassifierMode::Multiclass) {
            Eigen::Index best = 0;
            probs.row(i).maxCoeff(&best);
            labels.insert(model.labels[static_cast<std::size_t>(best)]);
        } else {
            for (Eigen::Index j = 0; j < probs.cols(); ++j) {
                if (probs(i, j) >= model.config.threshold) labels.insert(model.labels[static_cast<std::size_t>(j)]);
            }
        }
    }
    return out;
}

UtilityReport evaluate_predictions(const std::vector<std::set<std::string>>& gold,
                                   const std::vector<std::set<std::string>>& predicted,
                                   const std::set<std::string>& universe) {
    if (gold.size() != predicted.size()) throw InputError("evaluate: gold and prediction counts differ");
    if (gold.empty()) throw InputError("evaluate: no documents");
    UtilityReport r;
    r.documents = gold.size();
    for (const auto& l : universe) r.per_label[l];
    std::size_t exact = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        for (const auto* set : {&gold[i], &predicted[i]}) {
            for (const auto& l : *set) {
                if (!universe.count(l)) throw InputError("evaluate: label '" + l + "' outside the model's label universe");
            }
        }
        if (gold[i] == predicted[i]) ++exact;
        for (const auto& l : gold[i]) {
            auto& s = r.per_label[l];
            ++s.support;
            if (predicted[i].count(l)) ++s.tp;
            else ++s.fn;
        }
        for (const auto& l : predicted[i]) {
            if (!gold[i].count(l)) ++r.per_label[l].fp;
        }
    }
    auto f1 = [](long long tp, long long fp, long long fn) {
        if (tp + fp + fn == 0) return 1.0;
        return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
    };
    long long tp = 0, fp = 0, fn = 0;
    double macro = 0.0;
    std::size_t active = 0;
    for (auto& [label, s] : r.per_label) {
        tp += s.tp;
        fp += s.fp;
        fn += s.fn;
        s.precision = s.tp + s.fp ? static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp) : 0.0;
        s.recall = s.tp + s.fn ? static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fn) : 0.0;
        s.f1 = s.tp + s.fp + s.fn ? f1(s.tp, s.fp, s.fn) : 0.0;
        if (s.tp + s.fp + s.fn > 0) {
            macro += s.f1;
            ++active;
        }
    }
    r.f1_micro = f1(tp, fp, fn);
    r.f1_macro = active ? macro / static_cast<double>(active) : 1.0;
    r.accuracy = static_cast<double>(exact) / static_cast<double>(gold.size());
    return r;
}

UtilityReport evaluate_predictions(const std::vector<PredictionRecord>& records) {
    std::vector<std::set<std::string>> gold, pred;
    gold.reserve(records.size());
    pred.reserve(records.size());
    for (const auto& r : records) {
        gold.push_back(r.gold);
        pred.push_back(r.predicted);
    }
    return evaluate_predictions(gold, pred, label_universe(records));
}

UtilityReport evaluate_classifier(const ClassifierModel& model, const Corpus& test) {
    const std::set<std::string> universe(model.labels.begin(), model.labels.end());
    std::vector<std::set<std::string>> gold;
    gold.reserve(test.size());
    for (const auto& d : test) {
        if (d.labels.empty()) throw InputError("evaluate_classifier: test document '" + d.id + "' is unlabeled");
        for (const auto& l : d.labels) {
            if (!universe.count(l)) {
                throw InputError("evaluate_classifier: test label '" + l + "' (document '" + d.id +
                                 "') is outside the model's label universe");
            }
        }
        gold.emplace_back(d.labels.begin(), d.labels.end());
    }
    UtilityReport r = evaluate_predictions(gold, predict(model, test), universe);
    r.train_identity = model.train_identity;
    r.test_identity = identity(test);
    return r;
}

json to_json(const UtilityReport& r) {
    json per_label = json::object();
    for (const auto& [l, s] : r.per_label) {
        per_label[l] = {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}, {"support", s.support}};
    }
    return {{"f1_micro", r.f1_micro},
            {"f1_macro", r.f1_macro},
            {"accuracy", r.accuracy},
            {"accuracy_definition", "exact match"},
            {"documents", r.documents},
            {"per_label", std::move(per_label)},
            {"train", r.train_identity},
            {"test", r.test_identity}};
}

CrossProtocolResult cross_protocol(const Corpus& real_train, const Corpus& synth_train, const Corpus& real_test,
                                   const ClassifierConfig& config) {
    const auto real_labels = labels_of(real_train);
    const auto synth_labels = labels_of(synth_train);
    bool overlap = false;
    for (const auto& l : real_labels) overlap = overlap || synth_labels.count(l);
    if (!overlap) throw InputError("cross_protocol: real and synthetic training sets share no labels");
    std::set<std::string> universe = real_labels;
    universe.insert(synth_labels.begin(), synth_labels.end());

    CrossProtocolResult out;
    out.labels.assign(universe.begin(), universe.end());
    const ClassifierModel real_model = train_classifier(real_train, config, universe);
    const ClassifierModel synth_model = train_classifier(synth_train, config, universe);
    out.real = evaluate_classifier(real_model, real_test);
    out.synthetic = evaluate_classifier(synth_model, real_test);
    out.deltas = {{"f1_micro", out.synthetic.f1_micro - out.real.f1_micro},
                  {"f1_macro", out.synthetic.f1_macro - out.real.f1_macro},
                  {"accuracy", out.synthetic.accuracy - out.real.accuracy}};
    return out;
}

json to_json(const CrossProtocolResult& r) {
    return {{"real", to_json(r.real)}, {"synthetic", to_json(r.synthetic)}, {"deltas", r.deltas}, {"labels", r.labels}};
}

std::vector<PredictionRecord> export_predictions(const ClassifierModel& model, const Corpus& test) {
    const auto predicted = predict(model, test);
    std::vector<PredictionRecord> out;
    out.reserve(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
        const auto& d = test[i];
        out.push_back({d.id, std::set<std::string>(d.labels.begin(), d.labels.end()), predicted[i], d.groups});
    }
    return out;
}

} // namespace synthaudit
