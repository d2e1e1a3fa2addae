#include "helpers.hpp"

#include "synthaudit/corpus.hpp"
#include "synthaudit/error.hpp"

#include <doctest.h>

#include <sstream>

using namespace synthaudit;

TEST_SUITE("corpus") {

TEST_CASE("jsonl loading keeps order and reports bad lines") {
    std::istringstream empty("");
    CHECK(parse_corpus_jsonl(empty).size() == 0);

    std::istringstream two(R"({"id": "a", "text": "first"}
{"id": "b", "text": "second", "labels": ["x"], "groups": {"race": "A"}})");
    const Corpus c = parse_corpus_jsonl(two);
    REQUIRE(c.size() == 2);
    CHECK(c[0].id == "a");
    CHECK(c[1].id == "b");
    CHECK(c[1].labels == std::vector<std::string>{"x"});
    CHECK(c[1].groups.at("race") == "A");

    std::istringstream bad_span(R"({"id": "a", "text": "abc", "entities": [{"surface": "abcd", "category": "X", "start": 0, "end": 4}]})");
    try {
        parse_corpus_jsonl(bad_span, "f.jsonl");
        FAIL("expected an error");
    } catch (const InputError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("f.jsonl:1") != std::string::npos);
        CHECK(msg.find("a") != std::string::npos);
        CHECK(msg.find("4") != std::string::npos);
    }

    std::istringstream dup("{\"id\": \"a\", \"text\": \"x\"}\n{\"id\": \"a\", \"text\": \"y\"}\n");
    CHECK_THROWS_AS(parse_corpus_jsonl(dup), InputError);

    std::istringstream malformed("{\"id\": \"a\", \"text\": \"x\"}\n{not json\n");
    try {
        parse_corpus_jsonl(malformed, "m.jsonl");
        FAIL("expected an error");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("m.jsonl:2") != std::string::npos);
    }
}

TEST_CASE("text is NFC-normalized and entity offsets follow") {
    // "José went" has a combining accent; NFC folds it into one code point.
    std::istringstream in(R"({"id": "a", "text": "Jose\u0301 went to Paris", "entities": [{"surface": "Paris", "category": "LOC", "start": 14, "end": 19}]})");
    const Corpus c = parse_corpus_jsonl(in);
    CHECK(c[0].text == "Jos\u00e9 went to Paris");
    REQUIRE(c[0].entities.size() == 1);
    CHECK(c[0].entities[0].start == 13);
    CHECK(c[0].entities[0].end == 18);
}

TEST_CASE("csv loading") {
    std::istringstream in("id,text,labels,group:race\n"
                          "1,\"hello, world\",a|b,A\n"
                          "2,\"say \"\"hi\"\"\",,B\n");
    const Corpus c = parse_corpus_csv(in);
    REQUIRE(c.size() == 2);
    CHECK(c[0].text == "hello, world");
    CHECK(c[0].labels == std::vector<std::string>{"a", "b"});
    CHECK(c[0].groups.at("race") == "A");
    CHECK(c[1].text == "say \"hi\"");
    CHECK(c[1].labels.empty());
}

TEST_CASE("tokenizer") {
    CHECK(tokenize("").empty());
    CHECK(tokenize("John Smith, admitted.").tokens ==
          std::vector<std::string>{"john", "smith", ",", "admitted", "."});

    const auto ab = tokenize("a  b");
    CHECK(ab.tokens == std::vector<std::string>{"a", "b"});
    CHECK(ab.offsets == std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}, {3, 4}});

    TokenizerConfig drop{false, PunctuationMode::Drop};
    CHECK(tokenize("Hi, Bob!", drop).tokens == std::vector<std::string>{"Hi", "Bob"});

    // offsets are code points, not bytes
    const auto accented = tokenize("\u00e9t\u00e9 ok");
    CHECK(accented.offsets[1] == std::pair<std::size_t, std::size_t>{4, 6});

    CHECK(normalized_key("  JOHN\tSmith ") == "john smith");
}

TEST_CASE("control codes") {
    ControlCodeRecord r{{"Long_Title", {"Unspecified essential hypertension", "Atrial fibrillation"}},
                        {"ICD9_CODE", {"4019", "42731"}},
                        {"Gender", {"Female"}},
                        {"Ethnicity", {"WHITE"}}};
    CHECK(format_control_code(r) ==
          "Long_Title: Unspecified essential hypertension, Atrial fibrillation ICD9_CODE: 4019, 42731 Gender: "
          "Female Ethnicity: WHITE");
    CHECK(format_control_code(ControlCodeRecord{{"Country", {"France"}}, {"Year", {"2004"}}}) ==
          "Country: France Year: 2004");
    CHECK_THROWS_AS(format_control_code(ControlCodeRecord{}), InputError);
}

TEST_CASE("validation report") {
    const auto empty = validate_corpus(Corpus{});
    CHECK(empty.documents == 0);
    CHECK(empty.labeled_documents == 0);
    CHECK(empty.entity_documents == 0);

    const Corpus dup = testing::texts({"same text", "other", "same text"});
    const auto r = validate_corpus(dup);
    bool found = false;
    for (const auto& w : r.warnings) {
        if (w.kind == "duplicate-text") {
            found = true;
            CHECK(w.ids == std::vector<std::string>{"d0", "d2"});
        }
    }
    CHECK(found);

    auto d = testing::doc("a", "John Smith lives here", {"x"});
    testing::annotate(d, "John Smith");
    const auto clean = validate_corpus(Corpus({d}));
    CHECK(clean.warnings.empty());
    CHECK(clean.labeled_documents == 1);
    CHECK(clean.entity_documents == 1);
    CHECK(clean.entity_mentions == 1);
}

TEST_CASE("corpus invariants") {
    CHECK_THROWS_AS(Corpus({testing::doc("a", "x"), testing::doc("a", "y")}), InputError);
    CHECK_THROWS_AS(Corpus({testing::doc("a", "   ")}), InputError);
    auto d = testing::doc("a", "abc");
    d.entities.push_back({"bc", "X", 1, 3});
    CHECK_NOTHROW(Corpus({d}));
    d.entities[0].surface = "zz";
    CHECK_THROWS_AS(Corpus({d}), InputError);
}

TEST_CASE("save and reload round trip") {
    auto d = testing::doc("a", "Ana met Bob", {"l1"}, {{"race", "B"}});
    testing::annotate(d, "Bob");
    const Corpus c({d, testing::doc("b", "second")});
    const auto dir = testing::temp_dir("corpus");
    save_corpus_dir(c, dir);
    CHECK(std::filesystem::exists(dir / "manifest.json"));
    CHECK(load_corpus_path(dir) == c);
    std::filesystem::remove_all(dir);
}

} // TEST_SUITE
