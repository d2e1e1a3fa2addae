// Acceptance suite: one PASS/FAIL line per criterion; exits 1 if any fail.

#include "helpers.hpp"
#include "oracles.hpp"

#include "synthaudit/descriptive.hpp"
#include "synthaudit/fairness.hpp"
#include "synthaudit/matcher.hpp"
#include "synthaudit/privacy.hpp"
#include "synthaudit/quality.hpp"
#include "synthaudit/review.hpp"
#include "synthaudit/utility.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

using namespace synthaudit;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class Criterion {
public:
    explicit Criterion(std::string name) : name_(std::move(name)) {}

    void expect(bool ok, const std::string& what) {
        if (!ok && failures_.size() < 5) failures_.push_back(what);
        if (!ok) ++failed_;
    }
    bool ok() const { return failed_ == 0; }
    const std::string& name() const { return name_; }
    std::string detail() const {
        std::string s;
        for (const auto& f : failures_) s += (s.empty() ? "" : "; ") + f;
        if (failed_ > failures_.size()) s += "; +" + std::to_string(failed_ - failures_.size()) + " more";
        return s;
    }

private:
    std::string name_;
    std::vector<std::string> failures_;
    std::size_t failed_ = 0;
};

std::string fmt(double v) {
    std::ostringstream o;
    o.precision(10);
    o << v;
    return o.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int failed_total = 0;

void run(const std::string& name, const std::function<void(Criterion&)>& body) {
    Criterion c(name);
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = seconds_since(t0);
    std::cout << (c.ok() ? "PASS " : "FAIL ") << c.name() << " (" << fmt(std::round(secs * 1000) / 1000) << " s)";
    if (!c.ok()) {
        std::cout << ": " << c.detail();
        ++failed_total;
    }
    std::cout << std::endl;
}

// ---------------------------------------------------------------------------

void privacy_oracle(Criterion& c) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<int> ks = {0, 1, 2, 4, 8};
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const auto pair = oracle::random_pair(seed);
        const std::string tag = "seed " + std::to_string(seed);
        const auto e = entity_leakage(pair.train, pair.synth);
        const auto oe = oracle::entity_leakage(pair.train, pair.synth);
        c.expect(e.leaked_count == oe.leaked && e.total == oe.total, tag + " entity leakage differs");
        c.expect(e.percentage == oe.percentage(), tag + " entity percentage differs");
        for (int k : ks) {
            const auto r = context_leakage(pair.train, pair.synth, k);
            const auto o = oracle::context_leakage(pair.train, pair.synth, k);
            c.expect(r.leaked_count == o.leaked && r.total == o.total,
                     tag + " context k=" + std::to_string(k) + " differs");
        }
        const auto curve = leakage_curve(pair.train, pair.synth, ks);
        for (std::size_t i = 1; i < curve.size(); ++i) {
            c.expect(curve[i].second <= curve[i - 1].second, tag + " curve increases");
        }
    }
    const double secs = seconds_since(t0);
    c.expect(secs < 60.0, "runtime " + fmt(secs) + " s >= 60 s");
}

void leakage_formulas(Criterion& c) {
    auto d1 = testing::doc("t1", "John Smith visited Acme Corp in Paris");
    testing::annotate(d1, "John Smith");
    testing::annotate(d1, "Acme Corp", "ORG");
    testing::annotate(d1, "Paris", "LOC");
    auto d2 = testing::doc("t2", "Dr Lee signed the note");
    testing::annotate(d2, "Dr Lee");
    const Corpus train({d1, d2});

    const auto half = entity_leakage(train, testing::texts({"we met john smith yesterday", "the trip to PARIS was long"}));
    c.expect(half.total == 4 && half.percentage == 50.0, "4-entity fixture gave " + fmt(half.percentage));

    const std::vector<int> ks = {0, 1, 2, 4, 8};
    c.expect(entity_leakage(train, train).percentage == 100.0, "synth=train entity leakage != 100");
    for (const auto& [k, p] : leakage_curve(train, train, ks)) {
        c.expect(p == 100.0, "synth=train context k=" + std::to_string(k) + " gave " + fmt(p));
    }
    const Corpus disjoint = testing::texts({"completely unrelated words", "nothing in common here"});
    c.expect(entity_leakage(train, disjoint).percentage == 0.0, "disjoint entity leakage != 0");
    for (const auto& [k, p] : leakage_curve(train, disjoint, ks)) {
        c.expect(p == 0.0, "disjoint context k=" + std::to_string(k) + " gave " + fmt(p));
    }
}

void add_records(std::vector<PredictionRecord>& out, const std::string& group, int n, bool gold, bool pred) {
    for (int i = 0; i < n; ++i) {
        PredictionRecord r;
        r.doc_id = group + std::to_string(out.size());
        if (gold) r.gold.insert("y");
        if (pred) r.predicted.insert("y");
        r.groups["g"] = group;
        out.push_back(r);
    }
}

void fairness_formulas(Criterion& c) {
    // A: TP 9, FN 1, FP 2, TN 8.  B: TP 7, FN 3, FP 1, TN 3.
    std::vector<PredictionRecord> r;
    add_records(r, "A", 9, true, true);
    add_records(r, "A", 1, true, false);
    add_records(r, "A", 2, false, true);
    add_records(r, "A", 8, false, false);
    add_records(r, "B", 7, true, true);
    add_records(r, "B", 3, true, false);
    add_records(r, "B", 1, false, true);
    add_records(r, "B", 3, false, false);
    const auto conf = group_confusion(r, "g", label_universe(r));
    const double eo = equalized_odds(conf);
    const double fped = equality_difference(conf, EqualityDifference::FPED);
    const double fned = equality_difference(conf, EqualityDifference::FNED);
    c.expect(std::abs(eo - 0.20) < 1e-12, "EO " + fmt(eo));
    c.expect(std::abs(fped - 0.05) <= 1e-4, "FPED " + fmt(fped));
    c.expect(std::abs(fned - 0.20) <= 1e-4, "FNED " + fmt(fned));

    std::vector<PredictionRecord> same;
    for (const char* g : {"A", "B"}) {
        add_records(same, g, 5, true, true);
        add_records(same, g, 2, true, false);
        add_records(same, g, 3, false, true);
        add_records(same, g, 6, false, false);
    }
    const auto sc = group_confusion(same, "g", label_universe(same));
    c.expect(equalized_odds(sc) == 0.0, "identical EO " + fmt(equalized_odds(sc)));
    for (auto [m, name] : {std::pair{EqualityDifference::FPED, "FPED"}, std::pair{EqualityDifference::FNED, "FNED"},
                           std::pair{EqualityDifference::TPED, "TPED"}, std::pair{EqualityDifference::TNED, "TNED"}}) {
        const double v = equality_difference(sc, m);
        c.expect(v == 0.0, std::string("identical ") + name + " " + fmt(v));
    }
}

void fid_properties(Criterion& c) {
    const Eigen::MatrixXd a = testing::gaussian(200, 8, 0, 1, 21);
    const double self = fid(a, a).value;
    c.expect(self <= 1e-6, "fid(A,A) = " + fmt(self));

    Eigen::VectorXd delta(8);
    delta << 1, -2, 0.5, 0, 3, -1, 0.25, 2;
    const Eigen::MatrixXd shifted = a.rowwise() + delta.transpose();
    const double shift = fid(a, shifted).value;
    c.expect(std::abs(shift - delta.squaredNorm()) <= 1e-6,
             "mean shift " + fmt(shift) + " vs " + fmt(delta.squaredNorm()));

    // N(0,1) vs N(1,4): (0-1)^2 + 1 + 4 - 2*sqrt(4) = 2
    const Eigen::MatrixXd p = testing::gaussian(10000, 1, 0, 1, 31);
    const Eigen::MatrixXd q = testing::gaussian(10000, 1, 1, 2, 32);
    const double pop = fid(p, q).value;
    c.expect(std::abs(pop - 2.0) <= 0.15, "1-D population case " + fmt(pop));
}

void mauve_properties(Criterion& c) {
    const auto t0 = std::chrono::steady_clock::now();
    MauveOptions opts;
    opts.seed = 4;
    const Eigen::MatrixXd a = testing::gaussian(500, 8, 0, 1, 41);
    const double same = mauve(a, a, opts).score;
    c.expect(same >= 0.99, "identical inputs " + fmt(same));

    const auto pt = divergence_point({1.0, 0.0}, {0.0, 1.0}, 0.5, 5.0);
    c.expect(std::abs(pt.first - 0.03125) <= 1e-9 && std::abs(pt.second - 0.03125) <= 1e-9,
             "hand point (" + fmt(pt.first) + ", " + fmt(pt.second) + ")");

    Eigen::MatrixXd left = testing::gaussian(500, 8, 0, 0.1, 42);
    left.array() -= 10.0;
    Eigen::MatrixXd right = testing::gaussian(500, 8, 0, 0.1, 43);
    right.array() += 10.0;
    const double sep = mauve(left, right, opts).score;
    c.expect(sep < 0.1, "separated clouds " + fmt(sep));

    const double secs = seconds_since(t0);
    c.expect(secs < 30.0, "runtime " + fmt(secs) + " s >= 30 s");
}

ScoreSet ppl_scores(const std::vector<std::pair<std::string, double>>& ppl) {
    ScoreSet s;
    for (const auto& [k, p] : ppl) s.add(k, {-std::log(p)});
    return s;
}

void perplexity_and_canaries(Criterion& c) {
    const double two = perplexity(std::vector<double>(13, -std::log(2.0)));
    c.expect(two == 2.0, "uniform -ln2 gave " + fmt(two));
    const double e2 = perplexity(std::vector<double>{-1.0, -3.0});
    c.expect(std::abs(e2 - std::exp(2.0)) <= 1e-9, "[-1,-3] gave " + fmt(e2));

    const auto r1 = canary_metrics(make_canary_record("canary", {"canary", "other one", "other two"}, 1),
                                   ppl_scores({{"canary", 3.0}, {"other one", 5.0}, {"other two", 9.0}}));
    const auto r2 = canary_metrics(make_canary_record("c", {"c", "x", "y", "z"}, 1),
                                   ppl_scores({{"c", 50.0}, {"x", 2.0}, {"y", 3.0}, {"z", 4.0}}));
    const auto r3 = canary_metrics(make_canary_record("solo", {"solo"}, 1), ppl_scores({{"solo", 7.0}}));
    c.expect(r1.rank == 1 && r2.rank == 4 && r3.rank == 1,
             "ranks {" + std::to_string(r1.rank) + ", " + std::to_string(r2.rank) + ", " + std::to_string(r3.rank) +
                 "}");
}

void lda_properties(Criterion& c) {
    const auto t0 = std::chrono::steady_clock::now();
    LdaConfig one;
    one.topics = 1;
    one.iterations = 50;
    std::vector<int> truth;
    const auto m1 = lda_fit(testing::two_topic_corpus(50, 2, truth), one);
    for (const auto& row : m1.theta) c.expect(row == std::vector<double>{1.0}, "K=1 theta row is not [1.0]");

    const Corpus corpus = testing::two_topic_corpus(200, 11, truth);
    LdaConfig cfg;
    cfg.topics = 2;
    cfg.iterations = 200;
    cfg.seed = 3;
    const auto m = lda_fit(corpus, cfg);
    std::map<std::pair<int, int>, int> table;
    for (std::size_t d = 0; d < truth.size(); ++d) ++table[{m.theta[d][0] >= m.theta[d][1] ? 0 : 1, truth[d]}];
    int hits = 0;
    for (int k = 0; k < 2; ++k) hits += std::max(table[{k, 0}], table[{k, 1}]);
    const double purity = double(hits) / double(truth.size());
    c.expect(purity >= 0.9, "purity " + fmt(purity));

    auto rows_sum_to_one = [&c](const std::vector<std::vector<double>>& rows, const std::string& what) {
        for (const auto& row : rows) {
            double s = 0;
            for (double v : row) s += v;
            c.expect(std::abs(s - 1.0) <= 1e-9, what + " row sums to " + fmt(s));
        }
    };
    rows_sum_to_one(m.phi, "phi");
    rows_sum_to_one(m.theta, "theta");
    rows_sum_to_one(m1.phi, "K=1 phi");

    const double secs = seconds_since(t0);
    c.expect(secs < 30.0, "runtime " + fmt(secs) + " s >= 30 s");
}

void utility_protocol(Criterion& c) {
    const Corpus train = testing::separable(40, 1);
    const Corpus test = testing::separable(60, 2, "t");
    const auto model = train_classifier(train, {});
    const double train_acc = evaluate_classifier(model, train).accuracy;
    const double test_f1 = evaluate_classifier(model, test).f1_micro;
    c.expect(train_acc == 1.0, "train accuracy " + fmt(train_acc));
    c.expect(test_f1 >= 0.95, "test F1 " + fmt(test_f1));

    for (const auto& [name, d] : cross_protocol(train, train, test, {}).deltas) {
        c.expect(d == 0.0, "synth=real delta " + name + " " + fmt(d));
    }
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto r = cross_protocol(train, testing::flip_labels(train, 0.5, seed), test, {});
        const double d = r.deltas.at("f1_micro");
        c.expect(d < 0.0, "flip seed " + std::to_string(seed) + " delta " + fmt(d));
    }
}

fs::path copy_fixtures(const std::string& name) {
    const fs::path dir = testing::temp_dir(name);
    fs::copy(fs::path(SYNTHAUDIT_FIXTURE_DIR) / "audit", dir / "audit", fs::copy_options::recursive);
    return dir / "audit";
}

void determinism(Criterion& c) {
    const fs::path a = copy_fixtures("det-a");
    const fs::path b = copy_fixtures("det-b");
    for (const auto& dir : {a, b}) {
        const std::string cmd = std::string("\"") + SYNTHAUDIT_CLI + "\" audit --config \"" +
                                (dir / "audit.json").string() + "\" --output-dir \"" + (dir / "out").string() +
                                "\" > \"" + (dir / "cli.log").string() + "\" 2>&1";
        const int status = std::system(cmd.c_str());
        c.expect(status == 0, "audit exited with status " + std::to_string(status) + " in " + dir.string());
    }
    const std::string ra = testing::read_file(a / "out" / "report.json");
    const std::string rb = testing::read_file(b / "out" / "report.json");
    c.expect(!ra.empty(), "empty report");
    c.expect(ra == rb, "report.json differs between runs");
    const json doc = json::parse(ra);
    for (const auto& [m, s] : doc.at("sections").items()) c.expect(s.at("status") == "ok", m + " failed");
    c.expect(doc.at("sections").size() == 5, "expected five sections");
    fs::remove_all(a.parent_path());
    fs::remove_all(b.parent_path());
}

struct Served {
    ReviewServer server;
    int port;
    std::thread thread;

    Served(const ReviewData& data, AnnotationStore& store)
        : server(data, store), port(server.bind_any_port("127.0.0.1")), thread([this] { server.serve(); }) {
        server.wait_until_ready();
    }
    ~Served() {
        server.stop();
        thread.join();
    }
};

json get_json(httplib::Client& cli, const std::string& path, int expect_status = 200) {
    auto res = cli.Get(path);
    if (!res) throw std::runtime_error("GET " + path + " failed");
    if (res->status != expect_status) {
        throw std::runtime_error("GET " + path + " returned " + std::to_string(res->status));
    }
    return json::parse(res->body);
}

void review_service(Criterion& c) {
    const fs::path dir = testing::temp_dir("review-acceptance");
    const auto pair = oracle::random_pair(77, 1000, 50);
    const Eigen::Index dim = 24;

    ReviewData data;
    std::vector<Document> real_docs(pair.train.begin(), pair.train.end());
    for (std::size_t i = real_docs.size(); i < 1000; ++i) {
        real_docs.push_back(testing::doc("pad" + std::to_string(i), "routine follow up visit " + std::to_string(i)));
    }
    data.real = Corpus(std::move(real_docs));
    data.synth = pair.synth;
    std::vector<std::string> real_ids;
    for (const auto& d : data.real) real_ids.push_back(d.id);
    const Eigen::MatrixXd real_vecs = testing::gaussian(Eigen::Index(real_ids.size()), dim, 0, 1, 501);
    data.index = build_index(data.real, EmbeddingMatrix(real_ids, real_vecs));
    std::vector<std::string> synth_ids;
    for (const auto& d : data.synth) synth_ids.push_back(d.id);
    const Eigen::MatrixXd synth_vecs = testing::gaussian(Eigen::Index(synth_ids.size()), dim, 0, 1, 502);
    data.synth_embeddings = EmbeddingMatrix(synth_ids, synth_vecs);
    c.expect(real_ids.size() == 1000, "expected 1000 indexed vectors, got " + std::to_string(real_ids.size()));

    auto exists = [&data](const std::string& id) {
        return data.real.find(id) != nullptr || data.synth.find(id) != nullptr;
    };
    const fs::path journal = dir / "annotations.jsonl";
    std::vector<std::string> saved_ids;
    {
        AnnotationStore store(journal, exists);
        Served served(data, store);
        httplib::Client cli("127.0.0.1", served.port);

        const std::size_t queries = std::min<std::size_t>(synth_ids.size(), 25);
        for (std::size_t qi = 0; qi < queries; ++qi) {
            const Eigen::VectorXd q = synth_vecs.row(Eigen::Index(qi));
            for (int k : {1, 5, 100}) {
                const json body = get_json(cli, "/api/docs/" + synth_ids[qi] + "/neighbors?k=" + std::to_string(k));
                const auto want = oracle::cosine_rank(real_ids, real_vecs, q, std::size_t(k));
                const auto& got = body.at("neighbors");
                bool same = got.size() == want.size();
                for (std::size_t i = 0; same && i < want.size(); ++i) {
                    same = got[i].at("id") == want[i].first &&
                           std::abs(got[i].at("score").get<double>() - want[i].second) <= 1e-9;
                }
                c.expect(same, "neighbors of " + synth_ids[qi] + " k=" + std::to_string(k) + " differ");
            }
        }

        for (int i = 0; i < 40; ++i) {
            const json draft = {{"doc_id", synth_ids[std::size_t(i) % synth_ids.size()]},
                                {"author", "reviewer"},
                                {"body", "note " + std::to_string(i)},
                                {"linked_doc_id", real_ids[std::size_t(i)]}};
            auto res = cli.Post("/api/annotations", draft.dump(), "application/json");
            c.expect(res && res->status == 201, "annotation save " + std::to_string(i) + " failed");
            if (res && res->status == 201) saved_ids.push_back(json::parse(res->body).at("id"));
        }

        std::set<std::string> entities;
        for (const auto& d : data.real)
            for (const auto& e : d.entities) entities.insert(e.surface);
        const EntityMatcher all({entities.begin(), entities.end()});
        std::size_t checked = 0;
        for (const auto& surface : entities) {
            if (++checked > 30) break;
            const EntityMatcher one({surface});
            std::set<std::string> want;
            for (const auto& d : data.real) {
                if (!one.find_all(d.text).empty()) want.insert(d.id);
            }
            const json body = get_json(cli, "/api/entities/" + httplib::detail::encode_url(surface) + "/docs");
            std::set<std::string> got;
            for (const auto& d : body.at("docs")) got.insert(d.at("id").get<std::string>());
            c.expect(got == want, "entity '" + surface + "' document set differs");
            c.expect(!got.empty(), "entity '" + surface + "' matched no source document");
        }
    }

    {
        AnnotationStore store(journal, exists);
        Served served(data, store);
        httplib::Client cli("127.0.0.1", served.port);
        const json body = get_json(cli, "/api/annotations");
        std::vector<std::string> listed;
        for (const auto& a : body.at("annotations")) listed.push_back(a.at("id"));
        std::reverse(listed.begin(), listed.end());
        c.expect(listed == saved_ids, "annotations after restart: " + std::to_string(listed.size()) + " of " +
                                          std::to_string(saved_ids.size()));
        c.expect(store.dropped_on_open() == 0, "journal lines dropped on restart");
    }
    fs::remove_all(dir);
}

} // namespace

int main() {
    run("privacy oracle equivalence on 100 random corpora", privacy_oracle);
    run("entity and context leakage fixtures", leakage_formulas);
    run("fairness fixtures", fairness_formulas);
    run("FID properties", fid_properties);
    run("MAUVE properties", mauve_properties);
    run("perplexity and canary ranks", perplexity_and_canaries);
    run("LDA properties", lda_properties);
    run("utility protocol", utility_protocol);
    run("audit determinism", determinism);
    run("review service", review_service);
    std::cout << (failed_total == 0 ? "all criteria passed" : std::to_string(failed_total) + " criteria failed")
              << std::endl;
    return failed_total == 0 ? 0 : 1;
}
