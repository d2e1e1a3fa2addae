#pragma once

#include "synthaudit/corpus.hpp"
#include "synthaudit/fairness.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace synthaudit {

enum class ClassifierMode { Multiclass, Multilabel };

struct ClassifierConfig {
    ClassifierMode mode = ClassifierMode::Multiclass;
    double learning_rate = 0.1;
    int epochs = 200;
    double l2 = 1e-4;
    double threshold = 0.5; // multilabel decision threshold
    std::uint64_t seed = 0;
    TokenizerConfig tokenizer;
};

nlohmann::json to_json(const ClassifierConfig& config);

/// Linear model over L2-normalized TF-IDF features: softmax for multiclass,
/// one-vs-rest logistic for multilabel.
struct ClassifierModel {
    ClassifierConfig config;
    std::vector<std::string> labels;     // sorted universe
    std::vector<std::string> vocabulary; // sorted, frozen at training
    std::vector<double> idf;
    Eigen::MatrixXd weights; // vocabulary x labels
    Eigen::VectorXd bias;    // labels
    std::vector<double> loss_history; // index 0 = before the first update
    std::string train_identity;
};

/// Full-batch gradient descent with L2 regularization. Documents are
/// processed in id order, so the result does not depend on input order.
/// `universe` extends the label set beyond those present in `train`.
ClassifierModel train_classifier(const Corpus& train, const ClassifierConfig& config,
                                 const std::set<std::string>& universe = {});

std::vector<std::set<std::string>> predict(const ClassifierModel& model, const Corpus& docs);

struct LabelScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    long long support = 0;
    long long tp = 0, fp = 0, fn = 0;
};

struct UtilityReport {
    double f1_micro = 0.0;
    double f1_macro = 0.0;
    double accuracy = 0.0; // exact-match accuracy
    std::map<std::string, LabelScores> per_label;
    std::size_t documents = 0;
    std::string train_identity;
    std::string test_identity;
};

/// Scores predicted label sets against gold sets. Macro F1 averages over
/// labels that occur in gold or predictions.
UtilityReport evaluate_predictions(const std::vector<std::set<std::string>>& gold,
                                   const std::vector<std::set<std::string>>& predicted,
                                   const std::set<std::string>& universe);

/// Same, straight from an imported predictions file.
UtilityReport evaluate_predictions(const std::vector<PredictionRecord>& records);

UtilityReport evaluate_classifier(const ClassifierModel& model, const Corpus& test);

nlohmann::json to_json(const UtilityReport& report);

struct CrossProtocolResult {
    UtilityReport real;
    UtilityReport synthetic;
    /// synthetic minus real, for f1_micro, f1_macro, accuracy.
    std::map<std::string, double> deltas;
    std::vector<std::string> labels;
};

/// Train-on-real vs train-on-synthetic, both evaluated on the real test set.
CrossProtocolResult cross_protocol(const Corpus& real_train, const Corpus& synth_train, const Corpus& real_test,
                                   const ClassifierConfig& config);

nlohmann::json to_json(const CrossProtocolResult& result);

/// Predictions in the fairness module's record format.
std::vector<PredictionRecord> export_predictions(const ClassifierModel& model, const Corpus& test);

} // namespace synthaudit
