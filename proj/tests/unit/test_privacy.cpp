#include "helpers.hpp"
#include "oracles.hpp"

#include "synthaudit/error.hpp"
#include "synthaudit/matcher.hpp"
#include "synthaudit/privacy.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace synthaudit;

namespace {

Corpus entity_train() {
    auto d1 = testing::doc("t1", "John Smith visited Acme Corp in Paris");
    testing::annotate(d1, "John Smith");
    testing::annotate(d1, "Acme Corp", "ORG");
    testing::annotate(d1, "Paris", "LOC");
    auto d2 = testing::doc("t2", "Dr Lee signed the note");
    testing::annotate(d2, "Dr Lee");
    return Corpus({d1, d2});
}

ScoreSet ppl_scores(const std::vector<std::pair<std::string, double>>& ppl) {
    ScoreSet s;
    for (const auto& [k, p] : ppl) s.add(k, {-std::log(p)});
    return s;
}

} // namespace

TEST_SUITE("privacy") {

TEST_CASE("entity leakage") {
    const Corpus train = entity_train();
    const Corpus synth = testing::texts({"we met john smith yesterday", "the trip to PARIS was long"});
    const auto r = entity_leakage(train, synth);
    CHECK(r.percentage == 50.0);
    CHECK(r.leaked == std::vector<std::string>{"john smith", "paris"});
    CHECK(r.total == 4);

    CHECK(entity_leakage(train, Corpus{}).percentage == 0.0);
    CHECK(entity_leakage(train, train).percentage == 100.0);

    // token-level: no hit inside a longer word
    CHECK(entity_leakage(std::vector<std::string>{"paris"}, testing::texts({"a comparison"})).percentage == 0.0);

    const auto oracle = oracle::entity_leakage(train, synth);
    CHECK(oracle.keys == std::set<std::string>(r.leaked.begin(), r.leaked.end()));

    const auto cats = entity_leakage_by_category(train, synth);
    CHECK(cats.at("PERSON").percentage == 50.0);
    CHECK(cats.at("LOC").percentage == 100.0);
    CHECK(cats.at("ORG").percentage == 0.0);
}

TEST_CASE("context leakage") {
    auto t = testing::doc("t", "the patient john smith was admitted");
    testing::annotate(t, "john smith");
    const Corpus train({t});

    const Corpus same = testing::texts({"the patient john smith was admitted"});
    CHECK(context_leakage(train, same, 2).percentage == 100.0);

    const Corpus other = testing::texts({"mr john smith went home"});
    CHECK(context_leakage(train, other, 2).percentage == 0.0);
    CHECK(entity_leakage(train, other).percentage == 100.0);
    CHECK(context_leakage(train, other, 0).percentage == 100.0);

    // windows are truncated at document edges
    const auto w = context_windows(train, 8);
    REQUIRE(w.size() == 1);
    CHECK(w[0].tokens.size() == 6);

    ContextOptions total;
    total.per_side = false;
    const auto w3 = context_windows(train, 3, total);
    CHECK(w3[0].tokens == std::vector<std::string>{"patient", "john", "smith", "was", "admitted"});
}

TEST_CASE("leakage curve") {
    const Corpus train = entity_train();
    const Corpus synth = testing::texts({"john smith visited acme corp", "dr lee", "in paris today"});
    const auto curve = leakage_curve(train, synth, {0, 2, 4});
    REQUIRE(curve.size() == 3);
    for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].second <= curve[i - 1].second);

    for (const auto& [k, p] : leakage_curve(train, train, {0, 1, 2, 4, 8})) CHECK(p == 100.0);
    for (const auto& [k, p] : leakage_curve(train, testing::texts({"nothing shared here"}), {0, 2, 4})) CHECK(p == 0.0);
    CHECK_THROWS_AS(leakage_curve(train, synth, {4, 2}), InputError);
}

TEST_CASE("random corpora agree with the brute-force scanner") {
    for (std::uint64_t seed = 1000; seed < 1020; ++seed) {
        const auto pair = oracle::random_pair(seed, 40, 20);
        const auto r = entity_leakage(pair.train, pair.synth);
        const auto o = oracle::entity_leakage(pair.train, pair.synth);
        CHECK(r.leaked_count == o.leaked);
        CHECK(r.total == o.total);
        for (int k : {0, 1, 2, 4, 8}) {
            const auto c = context_leakage(pair.train, pair.synth, k);
            const auto oc = oracle::context_leakage(pair.train, pair.synth, k);
            CHECK(c.leaked_count == oc.leaked);
            CHECK(c.total == oc.total);
        }
    }
}

TEST_CASE("aho-corasick matches a naive scan") {
    std::mt19937_64 rng(5);
    const std::vector<std::string> alphabet = {"a", "b", "c"};
    for (int trial = 0; trial < 50; ++trial) {
        TokenPatternIndex idx;
        std::vector<std::vector<std::string>> patterns;
        for (int p = 0; p < 6; ++p) {
            std::vector<std::string> pat;
            for (std::size_t n = 1 + rng() % 4; n > 0; --n) pat.push_back(alphabet[rng() % 3]);
            const auto id = idx.add(pat);
            if (id == patterns.size()) patterns.push_back(pat);
        }
        idx.build();
        std::vector<std::string> text;
        for (int i = 0; i < 30; ++i) text.push_back(rng() % 10 == 0 ? "z" : alphabet[rng() % 3]);
        std::multiset<std::tuple<std::size_t, std::size_t, std::size_t>> got, want;
        idx.scan(text, [&](std::size_t pid, std::size_t a, std::size_t b) { got.insert({pid, a, b}); });
        for (std::size_t pid = 0; pid < patterns.size(); ++pid) {
            const auto& pat = patterns[pid];
            for (std::size_t i = 0; i + pat.size() <= text.size(); ++i) {
                if (std::equal(pat.begin(), pat.end(), text.begin() + long(i))) want.insert({pid, i, i + pat.size()});
            }
        }
        CHECK(got == want);
    }
}

TEST_CASE("canary ranks") {
    auto rec1 = make_canary_record("canary", {"canary", "other one", "other two"}, 1);
    CHECK(canary_metrics(rec1, ppl_scores({{"canary", 3.0}, {"other one", 5.0}, {"other two", 9.0}})).rank == 1);

    auto rec2 = make_canary_record("c", {"c", "x", "y", "z"}, 1);
    const auto r2 = canary_metrics(rec2, ppl_scores({{"c", 50.0}, {"x", 2.0}, {"y", 3.0}, {"z", 4.0}}));
    CHECK(r2.rank == 4);
    CHECK(r2.candidate_count == 4);

    auto rec3 = make_canary_record("solo", {"solo"}, 1);
    CHECK(canary_metrics(rec3, ppl_scores({{"solo", 7.0}})).rank == 1);

    // candidates without the canary get it added
    CHECK(make_canary_record("c", {"x"}, 1).candidates.size() == 2);
    CHECK_THROWS_AS(make_canary_record("c", {"x", "x"}, 1), InputError);
    CHECK_THROWS_AS(canary_metrics(rec1, ppl_scores({{"canary", 3.0}})), InputError);

    std::istringstream in(R"({"canary": "a", "candidates": ["a", "b"], "insertions": 3})");
    const auto parsed = parse_canaries(in);
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0].insertions == 3);
}

TEST_CASE("entity matcher offsets") {
    const EntityMatcher m({"John Smith", "smith"});
    CHECK(m.keys() == std::vector<std::string>{"john smith", "smith"});
    const auto hits = m.find_all("Dr. JOHN SMITH and Smith");
    REQUIRE(hits.size() == 3);
    CHECK(hits[0].start == 4);
    CHECK(hits[0].end == 14);
}

} // TEST_SUITE
