#include "helpers.hpp"

#include "synthaudit/error.hpp"
#include "synthaudit/fairness.hpp"
#include "synthaudit/utility.hpp"

#include <doctest.h>

#include <cmath>

using namespace synthaudit;

TEST_SUITE("utility") {

TEST_CASE("separable data is learned") {
    const Corpus train = testing::separable(20, 1);
    const Corpus test = testing::separable(40, 2, "t");
    const auto model = train_classifier(train, {});
    CHECK(evaluate_classifier(model, train).accuracy == 1.0);
    CHECK(evaluate_classifier(model, test).f1_micro >= 0.95);
    CHECK(model.loss_history.back() < model.loss_history.front());
}

TEST_CASE("training preconditions and determinism") {
    CHECK_THROWS_AS(train_classifier(Corpus({testing::doc("a", "x y", {"only"}), testing::doc("b", "z", {"only"})}), {}),
                    InputError);
    CHECK_THROWS_AS(train_classifier(testing::texts({"no labels", "here"}), {}), InputError);

    const Corpus train = testing::separable(20, 3);
    ClassifierConfig cfg;
    cfg.seed = 42;
    const auto a = train_classifier(train, cfg);
    const auto b = train_classifier(train, cfg);
    CHECK(a.weights == b.weights);
    CHECK(a.bias == b.bias);

    // input order does not matter
    std::vector<Document> reversed(train.begin(), train.end());
    std::reverse(reversed.begin(), reversed.end());
    const auto c = train_classifier(Corpus(reversed), cfg);
    CHECK(c.weights == a.weights);
}

TEST_CASE("hand-checked evaluation") {
    using L = std::set<std::string>;
    const std::vector<L> gold = {{"pos"}, {"pos"}, {"neg"}, {"neg"}};
    const std::vector<L> pred = {{"pos"}, {"pos"}, {"neg"}, {"pos"}};
    const auto r = evaluate_predictions(gold, pred, {"pos", "neg"});
    CHECK(r.accuracy == 0.75);
    CHECK(r.f1_micro == doctest::Approx(0.75));
    CHECK(r.f1_macro == doctest::Approx((0.8 + 2.0 / 3.0) / 2));
    CHECK(r.per_label.at("pos").tp == 2);
    CHECK(r.per_label.at("pos").fp == 1);
    CHECK(r.per_label.at("neg").fn == 1);

    const auto perfect = evaluate_predictions(gold, gold, {"pos", "neg"});
    CHECK(perfect.f1_micro == 1.0);
    CHECK(perfect.accuracy == 1.0);

    const std::vector<L> multi = {{"a", "b"}, {"b"}};
    const auto none = evaluate_predictions(multi, {{}, {}}, {"a", "b"});
    CHECK(none.f1_micro == 0.0);
}

TEST_CASE("multilabel mode") {
    std::vector<Document> docs;
    for (int i = 0; i < 12; ++i) {
        std::vector<std::string> labels;
        std::string text;
        if (i % 2 == 0) {
            labels.push_back("red");
            text += "crimson scarlet ";
        }
        if (i % 3 == 0) {
            labels.push_back("blue");
            text += "navy azure ";
        }
        if (labels.empty()) {
            labels.push_back("green");
            text += "lime olive ";
        }
        text += "thing";
        docs.push_back(testing::doc("m" + std::to_string(i), text, labels));
    }
    const Corpus c(docs);
    ClassifierConfig cfg;
    cfg.mode = ClassifierMode::Multilabel;
    cfg.epochs = 400;
    cfg.learning_rate = 0.5;
    const auto model = train_classifier(c, cfg);
    CHECK(evaluate_classifier(model, c).f1_micro == doctest::Approx(1.0));

    CHECK_THROWS_AS(train_classifier(c, ClassifierConfig{}), InputError); // multi-label docs in multiclass mode
}

TEST_CASE("cross protocol") {
    const Corpus train = testing::separable(20, 4);
    const Corpus test = testing::separable(30, 5, "t");
    const auto same = cross_protocol(train, train, test, {});
    for (const auto& [k, v] : same.deltas) CHECK(std::abs(v) < 1e-9);

    const auto flipped = cross_protocol(train, testing::flip_labels(train, 0.5, 1), test, {});
    CHECK(flipped.deltas.at("f1_micro") < 0);

    Corpus other({testing::doc("x", "aa", {"p"}), testing::doc("y", "bb", {"q"})});
    CHECK_THROWS_AS(cross_protocol(train, other, test, {}), InputError);
}

TEST_CASE("exported predictions feed the fairness module") {
    std::vector<Document> tests;
    const Corpus base = testing::separable(8, 6, "t");
    for (std::size_t i = 0; i < base.size(); ++i) {
        Document d = base[i];
        d.groups["g"] = i % 4 < 2 ? "A" : "B";
        tests.push_back(d);
    }
    const auto model = train_classifier(testing::separable(20, 7), {});
    const auto preds = export_predictions(model, Corpus(tests));
    REQUIRE(preds.size() == 8);
    CHECK(preds[0].groups.at("g") == "A");
    CHECK_NOTHROW(group_confusion(preds, "g", label_universe(preds)));

    const auto single = export_predictions(model, Corpus({testing::doc("z", "good great", {"pos"})}));
    REQUIRE(single.size() == 1);
    CHECK(single[0].groups.empty());
    CHECK(to_json(single[0]).at("groups").is_object());
}

} // TEST_SUITE
