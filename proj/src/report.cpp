#include "synthaudit/report.hpp"

#include "synthaudit/descriptive.hpp"
#include "synthaudit/error.hpp"
#include "synthaudit/fairness.hpp"
#include "synthaudit/privacy.hpp"
#include "synthaudit/quality.hpp"
#include "synthaudit/utility.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

namespace synthaudit {

using nlohmann::json;
namespace fs = std::filesystem;

bool AuditConfig::enabled(const std::string& module) const {
    return std::find(modules.begin(), modules.end(), module) != modules.end();
}

bool AuditReport::failed() const {
    return std::any_of(outcomes.begin(), outcomes.end(), [](const ModuleOutcome& o) { return !o.ok; });
}

// ---------------------------------------------------------------------------
// config parsing

namespace {

[[noreturn]] void config_error(const std::string& where, const std::string& msg) {
    throw InputError("audit config: " + where + ": " + msg);
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) config_error(where, "expected an object");
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) config_error(where.empty() ? key : where + "." + key, "unknown key");
    }
}

std::string field(const std::string& where, const std::string& key) { return where.empty() ? key : where + "." + key; }

template <typename T>
void read_number(const json& obj, const std::string& where, const char* key, T& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) config_error(field(where, key), "expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
            if (v.get<long long>() < 0 && !v.is_number_unsigned()) config_error(field(where, key), "must be >= 0");
        }
    } else {
        if (!v.is_number()) config_error(field(where, key), "expected a number");
    }
    out = v.get<T>();
}

void read_bool(const json& obj, const std::string& where, const char* key, bool& out) {
    if (!obj.contains(key)) return;
    if (!obj.at(key).is_boolean()) config_error(field(where, key), "expected true or false");
    out = obj.at(key).get<bool>();
}

void read_string(const json& obj, const std::string& where, const char* key, std::string& out) {
    if (!obj.contains(key)) return;
    if (!obj.at(key).is_string()) config_error(field(where, key), "expected a string");
    out = obj.at(key).get<std::string>();
}

void read_path(const json& obj, const std::string& where, const char* key, const fs::path& base,
               std::optional<fs::path>& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (v.is_null()) return;
    if (!v.is_string() || v.get<std::string>().empty()) config_error(field(where, key), "expected a path string");
    fs::path p = v.get<std::string>();
    out = p.is_absolute() ? p : base / p;
}

void read_path_list(const json& obj, const std::string& where, const char* key, const fs::path& base,
                    std::vector<fs::path>& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (v.is_string()) {
        std::optional<fs::path> one;
        read_path(obj, where, key, base, one);
        out.push_back(*one);
        return;
    }
    if (!v.is_array()) config_error(field(where, key), "expected a path or list of paths");
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_string() || v[i].get<std::string>().empty()) {
            config_error(field(where, key) + "[" + std::to_string(i) + "]", "expected a path string");
        }
        fs::path p = v[i].get<std::string>();
        out.push_back(p.is_absolute() ? p : base / p);
    }
}

template <typename T>
void read_list(const json& obj, const std::string& where, const char* key, std::vector<T>& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_array()) config_error(field(where, key), "expected a list");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string at = field(where, key) + "[" + std::to_string(i) + "]";
        if constexpr (std::is_same_v<T, std::string>) {
            if (!v[i].is_string()) config_error(at, "expected a string");
        } else {
            if (!v[i].is_number_integer()) config_error(at, "expected an integer");
        }
        out.push_back(v[i].get<T>());
    }
}

} // namespace

AuditConfig parse_audit_config(const json& doc, const fs::path& base_dir) {
    check_keys(doc, "", {"seed", "modules", "tokenizer", "real", "synthetic", "output_dir", "descriptive", "quality",
                         "privacy", "fairness", "utility"});
    AuditConfig c;
    c.source = doc;
    read_number(doc, "", "seed", c.seed);

    if (!doc.contains("modules")) config_error("modules", "missing field");
    read_list(doc, "", "modules", c.modules);
    if (c.modules.empty()) config_error("modules", "enable at least one module");
    {
        std::set<std::string> seen;
        for (const auto& m : c.modules) {
            const auto& known = known_modules();
            if (std::find(known.begin(), known.end(), m) == known.end()) {
                config_error("modules", "unknown module '" + m + "' (known: descriptive, quality, privacy, fairness, utility)");
            }
            if (!seen.insert(m).second) config_error("modules", "module '" + m + "' listed twice");
        }
    }

    if (doc.contains("tokenizer")) {
        try {
            c.tokenizer = tokenizer_config_from_json(doc.at("tokenizer"));
        } catch (const std::exception& e) {
            config_error("tokenizer", e.what());
        }
    }

    if (doc.contains("output_dir")) {
        std::optional<fs::path> out;
        read_path(doc, "", "output_dir", base_dir, out);
        if (out) c.output_dir = *out;
    } else {
        c.output_dir = base_dir;
    }

    if (doc.contains("real")) {
        const auto& r = doc.at("real");
        check_keys(r, "real", {"train", "test", "embeddings", "scores", "predictions"});
        read_path(r, "real", "train", base_dir, c.real.train);
        read_path(r, "real", "test", base_dir, c.real.test);
        read_path(r, "real", "embeddings", base_dir, c.real.embeddings);
        read_path(r, "real", "scores", base_dir, c.real.scores);
        read_path_list(r, "real", "predictions", base_dir, c.real.predictions);
    }

    if (!doc.contains("synthetic")) config_error("synthetic", "missing field");
    const auto& synth = doc.at("synthetic");
    if (!synth.is_array() || synth.empty()) config_error("synthetic", "expected a non-empty list of synthetic sets");
    std::set<std::string> names{"real"};
    for (std::size_t i = 0; i < synth.size(); ++i) {
        const std::string where = "synthetic[" + std::to_string(i) + "]";
        const auto& s = synth[i];
        check_keys(s, where,
                   {"name", "path", "embeddings", "scores", "canary_scores", "predictions", "label_provenance"});
        SyntheticSet set;
        if (!s.contains("name")) config_error(where + ".name", "missing field");
        read_string(s, where, "name", set.name);
        if (set.name.empty()) config_error(where + ".name", "must be non-empty");
        if (!names.insert(set.name).second) config_error(where + ".name", "duplicate or reserved name '" + set.name + "'");
        read_path(s, where, "path", base_dir, set.path);
        read_path(s, where, "embeddings", base_dir, set.embeddings);
        read_path(s, where, "scores", base_dir, set.scores);
        read_path(s, where, "canary_scores", base_dir, set.canary_scores);
        read_path_list(s, where, "predictions", base_dir, set.predictions);
        read_string(s, where, "label_provenance", set.label_provenance);
        c.synthetic.push_back(std::move(set));
    }

    if (doc.contains("descriptive")) {
        const auto& d = doc.at("descriptive");
        check_keys(d, "descriptive",
                   {"ngram_orders", "top_k", "entity_top_k", "lda_topics", "lda_iterations", "lda_alpha", "lda_beta",
                    "lda_top_words"});
        read_list(d, "descriptive", "ngram_orders", c.descriptive.ngram_orders);
        read_number(d, "descriptive", "top_k", c.descriptive.top_k);
        read_number(d, "descriptive", "entity_top_k", c.descriptive.entity_top_k);
        read_number(d, "descriptive", "lda_topics", c.descriptive.lda_topics);
        read_number(d, "descriptive", "lda_iterations", c.descriptive.lda_iterations);
        read_number(d, "descriptive", "lda_alpha", c.descriptive.lda_alpha);
        read_number(d, "descriptive", "lda_beta", c.descriptive.lda_beta);
        read_number(d, "descriptive", "lda_top_words", c.descriptive.lda_top_words);
        for (int n : c.descriptive.ngram_orders) {
            if (n < 1) config_error("descriptive.ngram_orders", "n-gram orders must be >= 1");
        }
        if (c.descriptive.top_k < 1) config_error("descriptive.top_k", "must be >= 1");
        if (c.descriptive.entity_top_k < 1) config_error("descriptive.entity_top_k", "must be >= 1");
        if (c.descriptive.lda_topics < 0) config_error("descriptive.lda_topics", "must be >= 0");
        if (c.descriptive.lda_iterations < 1) config_error("descriptive.lda_iterations", "must be >= 1");
        if (!(c.descriptive.lda_beta > 0.0)) config_error("descriptive.lda_beta", "must be > 0");
    }

    if (doc.contains("quality")) {
        const auto& q = doc.at("quality");
        check_keys(q, "quality", {"clusters", "scaling", "grid_size", "embedder"});
        read_number(q, "quality", "clusters", c.quality.clusters);
        read_number(q, "quality", "scaling", c.quality.scaling);
        read_number(q, "quality", "grid_size", c.quality.grid_size);
        read_string(q, "quality", "embedder", c.quality.embedder);
        if (c.quality.clusters < 0) config_error("quality.clusters", "must be >= 0 (0 selects the default)");
        if (!(c.quality.scaling > 0.0)) config_error("quality.scaling", "must be > 0");
        if (c.quality.grid_size < 3) config_error("quality.grid_size", "must be >= 3");
    }

    if (doc.contains("privacy")) {
        const auto& p = doc.at("privacy");
        check_keys(p, "privacy", {"k_list", "per_side", "canaries"});
        read_list(p, "privacy", "k_list", c.privacy.k_list);
        read_bool(p, "privacy", "per_side", c.privacy.per_side);
        read_path(p, "privacy", "canaries", base_dir, c.privacy.canaries);
        if (c.privacy.k_list.empty()) config_error("privacy.k_list", "must be non-empty");
        for (int k : c.privacy.k_list) {
            if (k < 0) config_error("privacy.k_list", "k must be >= 0");
        }
        std::sort(c.privacy.k_list.begin(), c.privacy.k_list.end());
        c.privacy.k_list.erase(std::unique(c.privacy.k_list.begin(), c.privacy.k_list.end()), c.privacy.k_list.end());
    }

    if (doc.contains("fairness")) {
        const auto& f = doc.at("fairness");
        check_keys(f, "fairness", {"attributes", "intersectional", "aggregation", "skip_degenerate"});
        read_list(f, "fairness", "attributes", c.fairness.attributes);
        read_bool(f, "fairness", "intersectional", c.fairness.intersectional);
        read_string(f, "fairness", "aggregation", c.fairness.aggregation);
        read_bool(f, "fairness", "skip_degenerate", c.fairness.skip_degenerate);
        if (c.fairness.aggregation != "micro" && c.fairness.aggregation != "macro") {
            config_error("fairness.aggregation", "expected \"micro\" or \"macro\"");
        }
    }

    if (doc.contains("utility")) {
        const auto& u = doc.at("utility");
        check_keys(u, "utility", {"multilabel", "learning_rate", "epochs", "l2", "threshold"});
        read_bool(u, "utility", "multilabel", c.utility.multilabel);
        read_number(u, "utility", "learning_rate", c.utility.learning_rate);
        read_number(u, "utility", "epochs", c.utility.epochs);
        read_number(u, "utility", "l2", c.utility.l2);
        read_number(u, "utility", "threshold", c.utility.threshold);
        if (!(c.utility.learning_rate > 0.0)) config_error("utility.learning_rate", "must be > 0");
        if (c.utility.epochs < 1) config_error("utility.epochs", "must be >= 1");
        if (c.utility.l2 < 0.0) config_error("utility.l2", "must be >= 0");
        if (!(c.utility.threshold > 0.0 && c.utility.threshold < 1.0)) {
            config_error("utility.threshold", "must be in (0, 1)");
        }
    }

    validate_audit_config(c);
    return c;
}

AuditConfig load_audit_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open audit config " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError("audit config " + path.string() + ": invalid JSON: " + e.what());
    }
    return parse_audit_config(doc, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

namespace {

void require(bool present, const std::string& module, const std::string& field_name, const std::string& why = {}) {
    if (!present) {
        throw InputError("audit config: " + module + " is enabled but field '" + field_name + "' is missing" +
                         (why.empty() ? "" : " (" + why + ")"));
    }
}

void require_exists(const std::optional<fs::path>& p, const std::string& field_name) {
    if (p && !fs::exists(*p)) throw InputError("audit config: " + field_name + ": path does not exist: " + p->string());
}

void require_exists(const std::vector<fs::path>& ps, const std::string& field_name) {
    for (const auto& p : ps) {
        if (!fs::exists(p)) throw InputError("audit config: " + field_name + ": path does not exist: " + p.string());
    }
}

} // namespace

void validate_audit_config(const AuditConfig& c) {
    if (c.synthetic.empty()) throw InputError("audit config: synthetic: at least one synthetic set is required");
    for (std::size_t i = 0; i < c.synthetic.size(); ++i) {
        const auto& s = c.synthetic[i];
        const std::string at = "synthetic[" + std::to_string(i) + "]";
        if (c.enabled("descriptive")) {
            require(c.real.train.has_value(), "descriptive", "real.train");
            require(s.path.has_value(), "descriptive", at + ".path");
        }
        if (c.enabled("quality")) {
            require(c.real.embeddings.has_value(), "quality", "real.embeddings");
            require(s.embeddings.has_value(), "quality", at + ".embeddings");
        }
        if (c.enabled("privacy")) {
            require(c.real.train.has_value(), "privacy", "real.train");
            require(s.path.has_value(), "privacy", at + ".path");
        }
        if (c.enabled("fairness")) {
            if (s.predictions.empty()) {
                require(s.path.has_value(), "fairness", at + ".path",
                        "or give " + at + ".predictions to bypass the built-in classifier");
                require(c.real.test.has_value(), "fairness", "real.test", "the built-in classifier is scored on it");
            }
        }
        if (c.enabled("utility")) {
            if (s.predictions.empty()) {
                require(s.path.has_value(), "utility", at + ".path",
                        "or give " + at + ".predictions to bypass the built-in classifier");
                require(c.real.test.has_value(), "utility", "real.test");
            }
        }
        require_exists(s.path, at + ".path");
        require_exists(s.embeddings, at + ".embeddings");
        require_exists(s.scores, at + ".scores");
        require_exists(s.canary_scores, at + ".canary_scores");
        require_exists(s.predictions, at + ".predictions");
    }
    if (c.enabled("fairness")) require(!c.fairness.attributes.empty(), "fairness", "fairness.attributes");
    if (c.enabled("utility")) {
        require(!c.real.predictions.empty() || (c.real.train && c.real.test), "utility", "real.train",
                "the real-data baseline needs real.train and real.test, or real.predictions");
    }
    if (c.enabled("privacy") && c.privacy.canaries) {
        const bool any = std::any_of(c.synthetic.begin(), c.synthetic.end(),
                                     [](const SyntheticSet& s) { return s.canary_scores.has_value(); });
        require(any, "privacy", "synthetic[].canary_scores", "privacy.canaries needs scored candidates");
    }
    require_exists(c.real.train, "real.train");
    require_exists(c.real.test, "real.test");
    require_exists(c.real.embeddings, "real.embeddings");
    require_exists(c.real.scores, "real.scores");
    require_exists(c.real.predictions, "real.predictions");
    require_exists(c.privacy.canaries, "privacy.canaries");
}

// ---------------------------------------------------------------------------
// module runners

namespace {

class InputCache {
public:
    const Corpus& corpus(const fs::path& p) {
        auto it = corpora_.find(p.string());
        if (it == corpora_.end()) it = corpora_.emplace(p.string(), load_corpus_path(p)).first;
        return it->second;
    }
    const EmbeddingMatrix& embeddings(const fs::path& p) {
        auto it = embeddings_.find(p.string());
        if (it == embeddings_.end()) it = embeddings_.emplace(p.string(), load_embeddings(p)).first;
        return it->second;
    }
    const ScoreSet& scores(const fs::path& p) {
        auto it = scores_.find(p.string());
        if (it == scores_.end()) it = scores_.emplace(p.string(), load_scores(p)).first;
        return it->second;
    }

private:
    std::map<std::string, Corpus> corpora_;
    std::map<std::string, EmbeddingMatrix> embeddings_;
    std::map<std::string, ScoreSet> scores_;
};

json ranked_json(const RankedCounts& rc) {
    json out = json::array();
    for (const auto& [item, count] : rc) out.push_back({{"item", item}, {"count", count}});
    return out;
}

bool has_entities(const Corpus& c) {
    return std::any_of(c.begin(), c.end(), [](const Document& d) { return !d.entities.empty(); });
}

json describe_one(const Corpus& c, const AuditConfig& cfg) {
    const auto& p = cfg.descriptive;
    const SummaryStats s = corpus_summary(c, cfg.tokenizer);
    json out;
    out["summary"] = {{"documents", s.doc_count},
                      {"avg_length_tokens", s.avg_length_tokens},
                      {"avg_length_chars", s.avg_length_chars},
                      {"avg_unique_words", s.avg_unique_words},
                      {"min_length_tokens", s.min_length},
                      {"max_length_tokens", s.max_length}};
    json ngrams = json::object();
    for (int n : p.ngram_orders) ngrams[std::to_string(n)] = ranked_json(ngram_frequencies(c, n, p.top_k, cfg.tokenizer));
    out["ngrams"] = std::move(ngrams);
    if (has_entities(c)) {
        out["entities"] = {
            {"most", ranked_json(entity_frequency(c, p.entity_top_k, FrequencyOrder::Most, cfg.tokenizer))},
            {"least", ranked_json(entity_frequency(c, p.entity_top_k, FrequencyOrder::Least, cfg.tokenizer))}};
    }
    if (p.lda_topics > 0) {
        LdaConfig lc;
        lc.topics = p.lda_topics;
        lc.alpha = p.lda_alpha;
        lc.beta = p.lda_beta;
        lc.iterations = p.lda_iterations;
        lc.seed = cfg.seed;
        lc.tokenizer = cfg.tokenizer;
        const TopicModel m = lda_fit(c, lc);
        json topics = json::array();
        for (int k = 0; k < m.topics; ++k) topics.push_back(lda_top_words(m, k, p.lda_top_words));
        json trace = json::array();
        for (const auto& [it, ll] : m.log_likelihood) trace.push_back({it, ll});
        out["topics"] = {{"k", m.topics},         {"alpha", m.alpha}, {"beta", m.beta},
                         {"iterations", m.iterations}, {"seed", m.seed}, {"top_words", std::move(topics)},
                         {"log_likelihood", std::move(trace)}};
    }
    return out;
}

json run_descriptive(const AuditConfig& cfg, InputCache& cache) {
    const Corpus& real = cache.corpus(*cfg.real.train);
    json sets = json::object();
    sets["real"] = describe_one(real, cfg);
    for (const auto& s : cfg.synthetic) {
        const Corpus& synth = cache.corpus(*s.path);
        json one = describe_one(synth, cfg);
        one["jaccard_vs_real"] = jaccard_similarity(real, synth, cfg.tokenizer);
        one["cosine_vs_real"] = cosine_similarity(real, synth, cfg.tokenizer);
        sets[s.name] = std::move(one);
    }
    return {{"sets", std::move(sets)}};
}

json perplexity_json(const CorpusPerplexity& p) {
    return {{"mean", p.mean}, {"median", p.median}, {"documents", p.per_document.size()}};
}

json run_quality(const AuditConfig& cfg, InputCache& cache) {
    const EmbeddingMatrix& real = cache.embeddings(*cfg.real.embeddings);
    json out;
    out["embedder"] = cfg.quality.embedder;
    if (cfg.real.scores) {
        const ScoreSet& sc = cache.scores(*cfg.real.scores);
        const auto p = cfg.real.train ? corpus_perplexity(sc, cache.corpus(*cfg.real.train)) : score_set_perplexity(sc);
        out["real"] = {{"perplexity", perplexity_json(p)}};
    }
    json sets = json::object();
    for (const auto& s : cfg.synthetic) {
        const EmbeddingMatrix& synth = cache.embeddings(*s.embeddings);
        json one;
        const FidResult f = fid(real, synth);
        one["fid"] = {{"value", f.value},       {"mean_term", f.mean_term}, {"trace_term", f.trace_term},
                      {"low_sample_mode", f.low_sample_mode}, {"n_real", f.n_real}, {"n_synth", f.n_synth},
                      {"dim", f.dim}};
        MauveOptions mo;
        mo.clusters = cfg.quality.clusters;
        mo.scaling = cfg.quality.scaling;
        mo.grid_size = cfg.quality.grid_size;
        mo.seed = cfg.seed;
        const MauveResult m = mauve(real, synth, mo);
        json curve = json::array();
        for (const auto& [x, y] : m.curve) curve.push_back({x, y});
        one["mauve"] = {{"score", m.score},
                        {"clusters", m.clusters},
                        {"scaling", m.scaling},
                        {"grid_size", cfg.quality.grid_size},
                        {"curve", std::move(curve)}};
        if (s.scores) {
            const ScoreSet& sc = cache.scores(*s.scores);
            const auto p = s.path ? corpus_perplexity(sc, cache.corpus(*s.path)) : score_set_perplexity(sc);
            one["perplexity"] = perplexity_json(p);
        }
        sets[s.name] = std::move(one);
    }
    out["sets"] = std::move(sets);
    return out;
}

json leakage_json(const LeakageResult& r, bool with_items) {
    json out = {{"percentage", r.percentage}, {"leaked_count", r.leaked_count}, {"total", r.total}};
    if (with_items) out["leaked"] = r.leaked;
    return out;
}

json run_privacy(const AuditConfig& cfg, InputCache& cache) {
    const Corpus& train = cache.corpus(*cfg.real.train);
    std::vector<CanaryRecord> canaries;
    if (cfg.privacy.canaries) canaries = load_canaries(*cfg.privacy.canaries);
    ContextOptions co;
    co.per_side = cfg.privacy.per_side;
    co.tokenizer = cfg.tokenizer;

    json sets = json::object();
    for (const auto& s : cfg.synthetic) {
        const Corpus& synth = cache.corpus(*s.path);
        json one;
        one["entity_leakage"] = leakage_json(entity_leakage(train, synth, cfg.tokenizer), true);
        json cats = json::object();
        for (const auto& [cat, r] : entity_leakage_by_category(train, synth, cfg.tokenizer)) {
            cats[cat] = leakage_json(r, false);
        }
        one["by_category"] = std::move(cats);
        json curve = json::array();
        for (const auto& [k, pct] : leakage_curve(train, synth, cfg.privacy.k_list, co)) {
            curve.push_back({{"k", k}, {"percentage", pct}});
        }
        one["context_leakage"] = std::move(curve);
        if (!canaries.empty() && s.canary_scores) {
            const ScoreSet& sc = cache.scores(*s.canary_scores);
            json rows = json::array();
            for (const auto& rec : canaries) {
                const CanaryResult r = canary_metrics(rec, sc);
                rows.push_back({{"canary", rec.canary},
                                {"insertions", rec.insertions},
                                {"rank", r.rank},
                                {"perplexity", r.perplexity},
                                {"candidates", r.candidate_count}});
            }
            one["canaries"] = std::move(rows);
        }
        sets[s.name] = std::move(one);
    }
    return {{"sets", std::move(sets)},
            {"k_list", cfg.privacy.k_list},
            {"per_side", cfg.privacy.per_side},
            {"matching", "token-level on the normalized token stream"}};
}

ClassifierConfig classifier_config(const AuditConfig& cfg) {
    ClassifierConfig cc;
    cc.mode = cfg.utility.multilabel ? ClassifierMode::Multilabel : ClassifierMode::Multiclass;
    cc.learning_rate = cfg.utility.learning_rate;
    cc.epochs = cfg.utility.epochs;
    cc.l2 = cfg.utility.l2;
    cc.threshold = cfg.utility.threshold;
    cc.seed = cfg.seed;
    cc.tokenizer = cfg.tokenizer;
    return cc;
}

std::set<std::string> corpus_labels(const Corpus& c) {
    std::set<std::string> out;
    for (const auto& d : c) out.insert(d.labels.begin(), d.labels.end());
    return out;
}

/// Label universe shared by every built-in model of one audit.
std::set<std::string> audit_universe(const AuditConfig& cfg, InputCache& cache) {
    std::set<std::string> u;
    auto add = [&](const std::optional<fs::path>& p) {
        if (!p) return;
        const auto l = corpus_labels(cache.corpus(*p));
        u.insert(l.begin(), l.end());
    };
    add(cfg.real.train);
    add(cfg.real.test);
    for (const auto& s : cfg.synthetic) {
        if (s.predictions.empty()) add(s.path);
    }
    return u;
}

std::vector<PredictionRecord> builtin_predictions(const fs::path& train, const AuditConfig& cfg, InputCache& cache) {
    const ClassifierModel model = train_classifier(cache.corpus(train), classifier_config(cfg), audit_universe(cfg, cache));
    return export_predictions(model, cache.corpus(*cfg.real.test));
}

json fairness_block(const std::vector<std::vector<PredictionRecord>>& runs, const AuditConfig& cfg) {
    FairnessOptions fo;
    fo.aggregation = cfg.fairness.aggregation == "macro" ? Aggregation::Macro : Aggregation::Micro;
    fo.skip_degenerate = cfg.fairness.skip_degenerate;

    std::vector<std::vector<std::string>> groupings;
    if (cfg.fairness.intersectional) {
        groupings.push_back(cfg.fairness.attributes);
    } else {
        for (const auto& a : cfg.fairness.attributes) groupings.push_back({a});
    }
    json attrs = json::object();
    for (const auto& g : groupings) {
        std::vector<FairnessReport> reports;
        json per_run = json::array();
        for (const auto& records : runs) {
            const GroupConfusion conf = group_confusion(records, g, label_universe(records));
            reports.push_back(fairness_report(conf, fo));
            per_run.push_back(to_json(reports.back()));
        }
        const FairnessSummary sum = summarize_fairness(reports);
        json metrics = json::object();
        for (const auto& [name, ms] : sum.metrics) metrics[name] = {{"mean", ms.first}, {"stdev", ms.second}};
        attrs[reports.front().attribute] = {{"runs", sum.runs}, {"metrics", std::move(metrics)}, {"reports", std::move(per_run)}};
    }
    return attrs;
}

json run_fairness(const AuditConfig& cfg, InputCache& cache) {
    json sets = json::object();
    auto collect = [&](const std::vector<fs::path>& files, const std::optional<fs::path>& train, json& source) {
        std::vector<std::vector<PredictionRecord>> runs;
        if (!files.empty()) {
            for (const auto& f : files) runs.push_back(load_predictions(f));
            source = "predictions";
        } else {
            runs.push_back(builtin_predictions(*train, cfg, cache));
            source = "built-in classifier";
        }
        return runs;
    };
    if (!cfg.real.predictions.empty() || (cfg.real.train && cfg.real.test)) {
        json source;
        const auto runs = collect(cfg.real.predictions, cfg.real.train, source);
        sets["real"] = {{"source", source}, {"attributes", fairness_block(runs, cfg)}};
    }
    for (const auto& s : cfg.synthetic) {
        json source;
        const auto runs = collect(s.predictions, s.path, source);
        sets[s.name] = {{"source", source}, {"attributes", fairness_block(runs, cfg)}};
    }
    return {{"sets", std::move(sets)},
            {"aggregation", cfg.fairness.aggregation},
            {"intersectional", cfg.fairness.intersectional},
            {"lower_is_better", true}};
}

/// Mean report over imported prediction files, or a built-in model's report.
UtilityReport utility_arm(const std::vector<fs::path>& files, const std::optional<fs::path>& train,
                          const AuditConfig& cfg, InputCache& cache) {
    if (files.empty()) {
        const ClassifierModel model =
            train_classifier(cache.corpus(*train), classifier_config(cfg), audit_universe(cfg, cache));
        return evaluate_classifier(model, cache.corpus(*cfg.real.test));
    }
    UtilityReport mean;
    for (std::size_t i = 0; i < files.size(); ++i) {
        const UtilityReport r = evaluate_predictions(load_predictions(files[i]));
        if (i == 0) {
            mean = r;
            mean.train_identity = "imported:" + files[i].filename().string();
            continue;
        }
        mean.f1_micro += r.f1_micro;
        mean.f1_macro += r.f1_macro;
        mean.accuracy += r.accuracy;
        mean.train_identity += "," + files[i].filename().string();
    }
    const double n = static_cast<double>(files.size());
    mean.f1_micro /= n;
    mean.f1_macro /= n;
    mean.accuracy /= n;
    if (files.size() > 1) mean.per_label.clear(); // per-label detail is per run only
    return mean;
}

json run_utility(const AuditConfig& cfg, InputCache& cache) {
    const UtilityReport real = utility_arm(cfg.real.predictions, cfg.real.train, cfg, cache);
    json sets = json::object();
    for (const auto& s : cfg.synthetic) {
        const UtilityReport r = utility_arm(s.predictions, s.path, cfg, cache);
        json one = to_json(r);
        one["deltas"] = {{"f1_micro", r.f1_micro - real.f1_micro},
                         {"f1_macro", r.f1_macro - real.f1_macro},
                         {"accuracy", r.accuracy - real.accuracy}};
        one["source"] = s.predictions.empty() ? "built-in classifier" : "predictions";
        one["label_provenance"] = s.label_provenance;
        sets[s.name] = std::move(one);
    }
    json real_json = to_json(real);
    real_json["source"] = cfg.real.predictions.empty() ? "built-in classifier" : "predictions";
    return {{"real", std::move(real_json)}, {"sets", std::move(sets)}, {"classifier", to_json(classifier_config(cfg))}};
}

json definitions() {
    return {
        {"avg_length_tokens", "mean token count per document under the recorded tokenizer"},
        {"avg_length_chars", "mean Unicode code point count per document after NFC normalization"},
        {"avg_unique_words", "mean count of distinct tokens per document"},
        {"jaccard_vs_real", "|V_real intersect V_synth| / |V_real union V_synth| over unique-token vocabularies"},
        {"cosine_vs_real", "cosine between mean TF-IDF vectors, TF-IDF fitted on both corpora together"},
        {"fid", "||m - m_w||^2 + Tr(C + C_w - 2 (C^1/2 C_w C^1/2)^1/2) over Gaussian fits of embeddings"},
        {"mauve", "area under the divergence curve of k-means cluster histograms"},
        {"perplexity",
         "exp of the negative mean token log-probability; reported without a quality direction, since "
         "predictability under the scorer is not by itself a coherence judgement"},
        {"entity_leakage", "percentage of unique training entities whose normalized tokens occur in the synthetic set"},
        {"context_leakage", "percentage of entity occurrences whose k-token context window occurs in the synthetic set"},
        {"canary_rank", "1 + number of candidates with lower perplexity than the canary"},
        {"fairness", "equalized odds and equality differences over groups; lower is better"},
        {"utility", "micro/macro F1 and exact-match accuracy on the real test set; deltas are synthetic minus real"}};
}

} // namespace

AuditReport run_audit(const AuditConfig& config) {
    validate_audit_config(config);
    AuditReport report;
    InputCache cache;

    json synth_names = json::array();
    for (const auto& s : config.synthetic) synth_names.push_back(s.name);
    json meta = {{"engine", {{"name", kEngineName}, {"version", engine_version()}}},
                 {"schema_version", kSchemaVersion},
                 {"seed", config.seed},
                 {"tokenizer", to_json(config.tokenizer)},
                 {"modules", config.modules},
                 {"synthetic_sets", std::move(synth_names)},
                 {"config", config.source},
                 {"definitions", definitions()}};

    json sections = json::object();
    for (const auto& module : config.modules) {
        ModuleOutcome outcome;
        outcome.module = module;
        const auto started = std::chrono::steady_clock::now();
        try {
            json result;
            if (module == "descriptive") result = run_descriptive(config, cache);
            else if (module == "quality") result = run_quality(config, cache);
            else if (module == "privacy") result = run_privacy(config, cache);
            else if (module == "fairness") result = run_fairness(config, cache);
            else if (module == "utility") result = run_utility(config, cache);
            sections[module] = {{"status", "ok"}, {"result", std::move(result)}};
            outcome.ok = true;
        } catch (const std::exception& e) {
            outcome.error = e.what();
            sections[module] = {{"status", "failed"}, {"error", outcome.error}};
        }
        outcome.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        report.outcomes.push_back(std::move(outcome));
    }
    report.document = {{"metadata", std::move(meta)}, {"sections", std::move(sections)}};
    return report;
}

// ---------------------------------------------------------------------------
// rendering

std::string render_json(const AuditReport& report) { return canonical_dump(report.document); }

namespace {

std::string num(const json& v, int decimals = 4) {
    if (v.is_null()) return "n/a";
    if (v.is_number_integer() || v.is_number_unsigned()) return std::to_string(v.get<long long>());
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v.get<double>());
    return buf;
}

std::string signed_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%+.4f", v);
    return buf;
}

std::string cell(const json& obj, const std::vector<std::string>& path, int decimals = 4) {
    const json* cur = &obj;
    for (const auto& p : path) {
        if (!cur->is_object() || !cur->contains(p)) return "n/a";
        cur = &cur->at(p);
    }
    return num(*cur, decimals);
}

std::string escape_cell(std::string s) {
    std::string out;
    for (char ch : s) {
        if (ch == '|') out += "\\|";
        else if (ch == '\n') out += ' ';
        else out += ch;
    }
    return out;
}

void table(std::ostringstream& md, const std::vector<std::string>& header,
           const std::vector<std::vector<std::string>>& rows) {
    md << '|';
    for (const auto& h : header) md << ' ' << h << " |";
    md << "\n|";
    for (std::size_t i = 0; i < header.size(); ++i) md << (i == 0 ? " --- |" : " ---: |");
    md << '\n';
    for (const auto& r : rows) {
        md << '|';
        for (const auto& c : r) md << ' ' << escape_cell(c) << " |";
        md << '\n';
    }
    md << '\n';
}

std::vector<std::string> set_order(const json& meta) {
    std::vector<std::string> names{"real"};
    for (const auto& n : meta.at("synthetic_sets")) names.push_back(n.get<std::string>());
    return names;
}

void md_descriptive(std::ostringstream& md, const json& r, const std::vector<std::string>& order) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& name : order) {
        if (!r.at("sets").contains(name)) continue;
        const auto& s = r.at("sets").at(name);
        rows.push_back({name, cell(s, {"summary", "avg_length_tokens"}, 2), cell(s, {"summary", "avg_length_chars"}, 2),
                        cell(s, {"summary", "avg_unique_words"}, 2), cell(s, {"summary", "min_length_tokens"}),
                        cell(s, {"summary", "max_length_tokens"}),
                        name == "real" ? "-" : cell(s, {"jaccard_vs_real"}),
                        name == "real" ? "-" : cell(s, {"cosine_vs_real"})});
    }
    table(md,
          {"Dataset", "Avg Length (tokens)", "Avg Length (chars)", "Avg Unique Words", "Min Length (tokens)",
           "Max Length (tokens)", "Jaccard vs real", "Cosine vs real"},
          rows);
}

void md_quality(std::ostringstream& md, const json& r, const std::vector<std::string>& order) {
    std::vector<std::vector<std::string>> rows;
    if (r.contains("real")) rows.push_back({"real", "-", "-", cell(r.at("real"), {"perplexity", "mean"}, 3)});
    for (const auto& name : order) {
        if (name == "real" || !r.at("sets").contains(name)) continue;
        const auto& s = r.at("sets").at(name);
        rows.push_back({name, cell(s, {"fid", "value"}), cell(s, {"mauve", "score"}), cell(s, {"perplexity", "mean"}, 3)});
    }
    table(md, {"Dataset", "FID", "MAUVE", "Avg. Perplexity"}, rows);
}

void md_privacy(std::ostringstream& md, const json& r, const std::vector<std::string>& order) {
    std::vector<std::string> header{"Dataset", "Entity leakage (%)"};
    for (const auto& k : r.at("k_list")) header.push_back("Context k=" + std::to_string(k.get<int>()) + " (%)");
    std::vector<std::vector<std::string>> rows;
    for (const auto& name : order) {
        if (name == "real" || !r.at("sets").contains(name)) continue;
        const auto& s = r.at("sets").at(name);
        std::vector<std::string> row{name, cell(s, {"entity_leakage", "percentage"}, 2)};
        for (const auto& point : s.at("context_leakage")) row.push_back(num(point.at("percentage"), 2));
        rows.push_back(std::move(row));
    }
    table(md, header, rows);
}

void md_fairness(std::ostringstream& md, const json& r, const std::vector<std::string>& order) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& name : order) {
        if (!r.at("sets").contains(name)) continue;
        for (const auto& [attr, block] : r.at("sets").at(name).at("attributes").items()) {
            std::vector<std::string> row{name, attr};
            const bool repeated = block.at("runs").get<long long>() > 1;
            for (const char* m : {"equalized_odds", "fped", "fned", "tped", "tned"}) {
                std::string c = cell(block, {"metrics", m, "mean"});
                if (repeated) c += " ± " + cell(block, {"metrics", m, "stdev"});
                row.push_back(c);
            }
            rows.push_back(std::move(row));
        }
    }
    table(md, {"Dataset", "Attribute", "EO", "FPED", "FNED", "TPED", "TNED"}, rows);
}

void md_utility(std::ostringstream& md, const json& r, const std::vector<std::string>& order) {
    std::vector<std::vector<std::string>> rows;
    const auto& real = r.at("real");
    rows.push_back({"real", num(real.at("f1_micro")), num(real.at("f1_macro")), num(real.at("accuracy"))});
    for (const auto& name : order) {
        if (name == "real" || !r.at("sets").contains(name)) continue;
        const auto& s = r.at("sets").at(name);
        const auto& d = s.at("deltas");
        auto with_delta = [&](const char* key) {
            const json& dv = d.at(key);
            return num(s.at(key)) + " (" + (dv.is_null() ? std::string("n/a") : signed_num(dv.get<double>())) + ")";
        };
        rows.push_back({name, with_delta("f1_micro"), with_delta("f1_macro"), with_delta("accuracy")});
    }
    table(md, {"Training data", "F1 micro", "F1 macro", "Accuracy"}, rows);
}

const char* module_title(const std::string& m) {
    if (m == "descriptive") return "Descriptive statistics";
    if (m == "quality") return "Text quality";
    if (m == "privacy") return "Privacy";
    if (m == "fairness") return "Fairness";
    return "Downstream utility";
}

} // namespace

std::string render_markdown(const AuditReport& report) {
    // Rendered from the canonical values so the two outputs agree.
    const json doc = canonicalize(report.document);
    const auto& meta = doc.at("metadata");
    const auto order = set_order(meta);
    std::ostringstream md;
    md << "# Synthetic text audit\n\n";
    md << "Engine " << meta.at("engine").at("name").get<std::string>() << ' '
       << meta.at("engine").at("version").get<std::string>() << ", schema " << meta.at("schema_version").get<std::string>()
       << ", seed " << meta.at("seed").dump() << ".\n";
    md << "Tokenizer: " << meta.at("tokenizer").dump() << ".\n\n";
    for (const auto& m : meta.at("modules")) {
        const std::string module = m.get<std::string>();
        const auto& section = doc.at("sections").at(module);
        md << "## " << module_title(module) << "\n\n";
        if (section.at("status") != "ok") {
            table(md, {"Status", "Error"}, {{"failed", section.at("error").get<std::string>()}});
            continue;
        }
        const auto& r = section.at("result");
        if (module == "descriptive") md_descriptive(md, r, order);
        else if (module == "quality") md_quality(md, r, order);
        else if (module == "privacy") md_privacy(md, r, order);
        else if (module == "fairness") md_fairness(md, r, order);
        else md_utility(md, r, order);

        if (module == "quality") {
            md << "Perplexity is reported without a quality direction. Embedder: "
               << r.at("embedder").get<std::string>() << ".\n\n";
        } else if (module == "fairness") {
            md << "Lower is better for every fairness metric. Aggregation: " << r.at("aggregation").get<std::string>()
               << ".\n\n";
        } else if (module == "utility") {
            md << "Parenthesized values are synthetic minus real, evaluated on the real test set.\n\n";
        } else if (module == "privacy") {
            md << "Matching is token-level on the normalized token stream.\n\n";
        }
    }
    return md.str();
}

void render_report(const AuditReport& report, ReportFormat format, const fs::path& path) {
    const std::string text = format == ReportFormat::Json ? render_json(report) : render_markdown(report);
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write report to " + path.string());
    out << text;
    out.flush();
    if (!out) throw IoError("failed writing report to " + path.string());
}

} // namespace synthaudit
