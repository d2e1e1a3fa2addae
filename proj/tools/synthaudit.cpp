// synthaudit command line: full audits from a config file, single-module
// runs, remote scoring and the review service.

#include "synthaudit/corpus.hpp"
#include "synthaudit/error.hpp"
#include "synthaudit/report.hpp"
#include "synthaudit/review.hpp"
#include "synthaudit/scorer.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <csignal>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace synthaudit;

namespace {

constexpr int kExitModuleFailure = 1;
constexpr int kExitUsage = 2;

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json tokenizer_json(bool keep_case, const std::string& punctuation) {
    return {{"lowercase", !keep_case}, {"punctuation", punctuation}};
}

/// Runs an audit and writes <json>, an optional markdown file and a
/// "<json>.run.json" sidecar with wall-clock timings.
int execute(const AuditConfig& config, const fs::path& json_out, const std::optional<fs::path>& markdown_out) {
    const std::string started = utc_now();
    const AuditReport report = run_audit(config);
    render_report(report, ReportFormat::Json, json_out);
    if (markdown_out) render_report(report, ReportFormat::Markdown, *markdown_out);

    json modules = json::array();
    for (const auto& o : report.outcomes) {
        json m = {{"module", o.module}, {"status", o.ok ? "ok" : "failed"}, {"seconds", o.seconds}};
        if (!o.ok) m["error"] = o.error;
        modules.push_back(std::move(m));
        if (!o.ok) std::cerr << "synthaudit: module " << o.module << " failed: " << o.error << '\n';
    }
    fs::path sidecar = json_out;
    sidecar += ".run.json";
    std::ofstream(sidecar) << json{{"started_at", started}, {"finished_at", utc_now()}, {"modules", modules}}.dump(2)
                           << '\n';
    return report.failed() ? kExitModuleFailure : 0;
}

int run_single(json doc, const fs::path& out, const std::optional<fs::path>& markdown) {
    const AuditConfig config = parse_audit_config(doc, fs::current_path());
    return execute(config, out, markdown);
}

std::vector<std::string> read_lines(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot open " + p.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

bool looks_like_corpus(const fs::path& p) {
    const std::string ext = p.extension().string();
    return fs::is_directory(p) || ext == ".jsonl" || ext == ".csv";
}

volatile std::sig_atomic_t g_stop = 0;
ReviewServer* g_server = nullptr;

void on_signal(int) {
    g_stop = 1;
    if (g_server) g_server->stop();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Audit synthetic text corpora against a real reference corpus"};
    app.require_subcommand(0, 1);
    bool show_version = false;
    app.add_flag("--version", show_version, "Print engine and report schema versions");

    // shared options
    bool keep_case = false;
    std::string punctuation = "split";
    std::uint64_t seed = 0;
    std::string markdown;
    auto add_common = [&](CLI::App* sub) {
        sub->add_flag("--keep-case", keep_case, "Do not lowercase tokens");
        sub->add_option("--punctuation", punctuation, "Punctuation handling")
            ->check(CLI::IsMember({"split", "drop"}));
        sub->add_option("--seed", seed, "Random seed");
        sub->add_option("--markdown", markdown, "Also write a markdown report here");
    };

    // audit
    auto* audit = app.add_subcommand("audit", "Run a full audit from a JSON config");
    std::string config_path;
    audit->add_option("--config", config_path, "Audit config file")->required()->check(CLI::ExistingFile);
    std::string audit_out;
    audit->add_option("--output-dir", audit_out, "Overrides output_dir from the config");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Validate a corpus and store it in canonical form");
    std::string ingest_input, ingest_format = "jsonl", ingest_out;
    ingest->add_option("--input", ingest_input, "Corpus file")->required()->check(CLI::ExistingPath);
    ingest->add_option("--format", ingest_format, "Input format")->check(CLI::IsMember({"jsonl", "csv"}));
    ingest->add_option("--out", ingest_out, "Output corpus directory")->required();

    // describe
    auto* describe = app.add_subcommand("describe", "Descriptive statistics");
    std::string d_real, d_synth, d_name = "synthetic", out_path = "report.json";
    int lda_k = 0, lda_iterations = 500, top_k = 10;
    describe->add_option("--real", d_real, "Real corpus")->required()->check(CLI::ExistingPath);
    describe->add_option("--synth", d_synth, "Synthetic corpus")->required()->check(CLI::ExistingPath);
    describe->add_option("--name", d_name, "Display name of the synthetic set");
    describe->add_option("--lda-k", lda_k, "Fit an LDA topic model with K topics")->check(CLI::NonNegativeNumber);
    describe->add_option("--lda-iterations", lda_iterations, "Gibbs sweeps")->check(CLI::PositiveNumber);
    describe->add_option("--top-k", top_k, "Top n-grams and entities to list")->check(CLI::PositiveNumber);
    describe->add_option("--out", out_path, "Report path");
    add_common(describe);

    // quality
    auto* quality = app.add_subcommand("quality", "FID, MAUVE and perplexity");
    std::string q_real_emb, q_synth_emb, q_scores, q_real_scores, q_synth, q_embedder = "unspecified";
    int q_clusters = 0;
    double q_scaling = 5.0;
    quality->add_option("--real-emb", q_real_emb, "Real embeddings")->required()->check(CLI::ExistingFile);
    quality->add_option("--synth-emb", q_synth_emb, "Synthetic embeddings")->required()->check(CLI::ExistingFile);
    quality->add_option("--scores", q_scores, "Synthetic token log-probabilities")->check(CLI::ExistingFile);
    quality->add_option("--real-scores", q_real_scores, "Real token log-probabilities")->check(CLI::ExistingFile);
    quality->add_option("--synth", q_synth, "Synthetic corpus (restricts perplexity to its ids)")
        ->check(CLI::ExistingPath);
    quality->add_option("--clusters", q_clusters, "MAUVE clusters (0 = default)")->check(CLI::NonNegativeNumber);
    quality->add_option("--scaling", q_scaling, "MAUVE scaling constant");
    quality->add_option("--embedder", q_embedder, "Embedder name recorded in the report");
    quality->add_option("--name", d_name, "Display name of the synthetic set");
    quality->add_option("--out", out_path, "Report path");
    add_common(quality);

    // privacy
    auto* privacy = app.add_subcommand("privacy", "Entity and context leakage, canary exposure");
    std::string p_train, p_synth, p_canaries, p_scores;
    std::vector<int> k_list{0, 1, 2, 4, 8};
    bool total_window = false;
    privacy->add_option("--train", p_train, "Real training corpus with entities")->required()->check(CLI::ExistingPath);
    privacy->add_option("--synth", p_synth, "Synthetic corpus")->required()->check(CLI::ExistingPath);
    privacy->add_option("--k-list", k_list, "Context sizes")->delimiter(',');
    privacy->add_flag("--total-window", total_window, "k counts context tokens in total, not per side");
    privacy->add_option("--canaries", p_canaries, "Canary file")->check(CLI::ExistingFile);
    privacy->add_option("--scores", p_scores, "Log-probabilities of canary candidates")->check(CLI::ExistingFile);
    privacy->add_option("--name", d_name, "Display name of the synthetic set");
    privacy->add_option("--out", out_path, "Report path");
    add_common(privacy);

    // fairness
    auto* fairness = app.add_subcommand("fairness", "Equalized odds and equality differences");
    std::vector<std::string> f_preds, f_attributes;
    bool f_macro = false, f_skip = false, f_intersectional = false;
    fairness->add_option("--preds", f_preds, "Prediction files (repeat for mean and stdev)")
        ->required()
        ->check(CLI::ExistingFile);
    fairness->add_option("--attribute", f_attributes, "Group attribute (repeatable)")->required();
    fairness->add_flag("--macro", f_macro, "Average per-label metrics instead of pooling counts");
    fairness->add_flag("--skip-degenerate", f_skip, "Drop groups with undefined rates");
    fairness->add_flag("--intersectional", f_intersectional, "Group by the combination of all attributes");
    fairness->add_option("--name", d_name, "Display name of the prediction set");
    fairness->add_option("--out", out_path, "Report path");
    add_common(fairness);

    // utility
    auto* utility = app.add_subcommand("utility", "Train-on-real vs train-on-synthetic classification");
    std::string u_real_train, u_synth_train, u_real_test, u_import, u_real_preds, u_provenance = "declared";
    bool u_multilabel = false;
    int u_epochs = 200;
    utility->add_option("--real-train", u_real_train, "Real training corpus")->check(CLI::ExistingPath);
    utility->add_option("--synth-train", u_synth_train, "Synthetic training corpus")->check(CLI::ExistingPath);
    utility->add_option("--real-test", u_real_test, "Real test corpus")->check(CLI::ExistingPath);
    utility->add_flag("--multilabel", u_multilabel, "One-vs-rest multilabel classifier");
    utility->add_option("--epochs", u_epochs, "Training epochs")->check(CLI::PositiveNumber);
    utility->add_option("--import-preds", u_import, "Predictions of an external model trained on synthetic data")
        ->check(CLI::ExistingFile);
    utility->add_option("--real-preds", u_real_preds, "Predictions of an external model trained on real data")
        ->check(CLI::ExistingFile);
    utility->add_option("--label-provenance", u_provenance, "How the synthetic labels were produced");
    utility->add_option("--name", d_name, "Display name of the synthetic set");
    utility->add_option("--out", out_path, "Report path");
    add_common(utility);

    // score
    auto* score = app.add_subcommand("score", "Collect token log-probabilities from a scoring service");
    std::string s_endpoint, s_input, s_out = "scores.jsonl";
    RemoteScorerOptions s_opts;
    int s_timeout = 30, s_batch = 16, s_attempts = 3, s_concurrency = 4;
    score->add_option("--endpoint", s_endpoint, "Base URL, e.g. http://localhost:9000")->required();
    score->add_option("--input", s_input, "Corpus (ids become keys) or plain text file, one text per line")
        ->required()
        ->check(CLI::ExistingPath);
    score->add_option("--out", s_out, "Output score file");
    score->add_option("--batch-size", s_batch, "Texts per request")->check(CLI::PositiveNumber);
    score->add_option("--timeout", s_timeout, "Per-request timeout in seconds")->check(CLI::PositiveNumber);
    score->add_option("--attempts", s_attempts, "Attempts per batch")->check(CLI::PositiveNumber);
    score->add_option("--concurrency", s_concurrency, "Requests in flight")->check(CLI::PositiveNumber);

    // serve
    auto* serve = app.add_subcommand("serve", "Review service");
    std::string v_real, v_synth, v_real_emb, v_synth_emb, v_annotations = "annotations.jsonl", v_host = "127.0.0.1",
                                                          v_static;
    int v_port = 8080;
    serve->add_option("--real", v_real, "Real corpus")->required()->check(CLI::ExistingPath);
    serve->add_option("--synth", v_synth, "Synthetic corpus")->required()->check(CLI::ExistingPath);
    serve->add_option("--real-emb", v_real_emb, "Real embeddings")->required()->check(CLI::ExistingFile);
    serve->add_option("--synth-emb", v_synth_emb, "Synthetic embeddings")->required()->check(CLI::ExistingFile);
    serve->add_option("--annotations", v_annotations, "Annotation journal");
    serve->add_option("--host", v_host, "Bind address");
    serve->add_option("--port", v_port, "Port")->check(CLI::Range(0, 65535));
    serve->add_option("--static", v_static, "Directory with the UI bundle")->check(CLI::ExistingDirectory);
    serve->add_flag("--keep-case", keep_case, "Do not lowercase tokens");
    serve->add_option("--punctuation", punctuation, "Punctuation handling")->check(CLI::IsMember({"split", "drop"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    if (show_version) {
        std::cout << kEngineName << ' ' << engine_version() << " (report schema " << kSchemaVersion << ")\n";
        return 0;
    }
    if (app.get_subcommands().empty()) {
        std::cout << app.help();
        return kExitUsage;
    }

    const std::optional<fs::path> md = markdown.empty() ? std::nullopt : std::optional<fs::path>(markdown);
    const json tok = tokenizer_json(keep_case, punctuation);
    try {
        if (*audit) {
            AuditConfig config = load_audit_config(config_path);
            if (!audit_out.empty()) config.output_dir = audit_out;
            return execute(config, config.output_dir / "report.json", config.output_dir / "report.md");
        }
        if (*ingest) {
            const Corpus c = load_corpus(ingest_input, parse_corpus_format(ingest_format));
            const ValidationReport v = validate_corpus(c);
            save_corpus_dir(c, ingest_out, {{"source", ingest_input}, {"validation", to_json(v)}});
            std::cout << to_json(v).dump(2) << '\n';
            return 0;
        }
        if (*describe) {
            json doc = {{"seed", seed},
                        {"modules", {"descriptive"}},
                        {"tokenizer", tok},
                        {"real", {{"train", d_real}}},
                        {"synthetic", {{{"name", d_name}, {"path", d_synth}}}},
                        {"descriptive",
                         {{"lda_topics", lda_k},
                          {"lda_iterations", lda_iterations},
                          {"top_k", top_k},
                          {"entity_top_k", top_k}}}};
            return run_single(doc, out_path, md);
        }
        if (*quality) {
            json synth = {{"name", d_name}, {"embeddings", q_synth_emb}};
            if (!q_scores.empty()) synth["scores"] = q_scores;
            if (!q_synth.empty()) synth["path"] = q_synth;
            json real = {{"embeddings", q_real_emb}};
            if (!q_real_scores.empty()) real["scores"] = q_real_scores;
            json doc = {{"seed", seed},
                        {"modules", {"quality"}},
                        {"tokenizer", tok},
                        {"real", real},
                        {"synthetic", {synth}},
                        {"quality", {{"clusters", q_clusters}, {"scaling", q_scaling}, {"embedder", q_embedder}}}};
            return run_single(doc, out_path, md);
        }
        if (*privacy) {
            json synth = {{"name", d_name}, {"path", p_synth}};
            json params = {{"k_list", k_list}, {"per_side", !total_window}};
            if (!p_canaries.empty()) {
                if (p_scores.empty()) throw InputError("--canaries needs --scores with candidate log-probabilities");
                params["canaries"] = p_canaries;
                synth["canary_scores"] = p_scores;
            }
            json doc = {{"seed", seed},          {"modules", {"privacy"}}, {"tokenizer", tok},
                        {"real", {{"train", p_train}}}, {"synthetic", {synth}},   {"privacy", params}};
            return run_single(doc, out_path, md);
        }
        if (*fairness) {
            json doc = {{"seed", seed},
                        {"modules", {"fairness"}},
                        {"tokenizer", tok},
                        {"synthetic", {{{"name", d_name}, {"predictions", f_preds}}}},
                        {"fairness",
                         {{"attributes", f_attributes},
                          {"aggregation", f_macro ? "macro" : "micro"},
                          {"skip_degenerate", f_skip},
                          {"intersectional", f_intersectional}}}};
            return run_single(doc, out_path, md);
        }
        if (*utility) {
            json real = json::object();
            if (!u_real_train.empty()) real["train"] = u_real_train;
            if (!u_real_test.empty()) real["test"] = u_real_test;
            if (!u_real_preds.empty()) real["predictions"] = json::array({u_real_preds});
            json synth = {{"name", d_name}, {"label_provenance", u_provenance}};
            if (!u_synth_train.empty()) synth["path"] = u_synth_train;
            if (!u_import.empty()) synth["predictions"] = json::array({u_import});
            json doc = {{"seed", seed},
                        {"modules", {"utility"}},
                        {"tokenizer", tok},
                        {"real", real},
                        {"synthetic", {synth}},
                        {"utility", {{"multilabel", u_multilabel}, {"epochs", u_epochs}}}};
            return run_single(doc, out_path, md);
        }
        if (*score) {
            s_opts.batch_size = static_cast<std::size_t>(s_batch);
            s_opts.timeout = std::chrono::seconds(s_timeout);
            s_opts.attempts = s_attempts;
            s_opts.max_concurrency = static_cast<std::size_t>(s_concurrency);
            const fs::path input = s_input;
            ScoreSet out("remote:" + s_endpoint);
            if (looks_like_corpus(input)) {
                const Corpus c = load_corpus_path(input);
                std::vector<std::string> texts;
                for (const auto& d : c) texts.push_back(d.text);
                const ScoreSet by_text = score_remote(texts, s_endpoint, s_opts);
                for (const auto& d : c) out.add(d.id, *by_text.find(d.text));
            } else {
                out = score_remote(read_lines(input), s_endpoint, s_opts);
            }
            save_scores(out, s_out);
            std::cerr << "scored " << out.size() << " texts\n";
            return 0;
        }
        if (*serve) {
            const ReviewData data = load_review_data(v_real, v_synth, v_real_emb, v_synth_emb,
                                                     tokenizer_config_from_json(tok));
            AnnotationStore store(v_annotations, [&data](const std::string& id) { return data.synth.find(id) != nullptr; });
            if (store.dropped_on_open() > 0) {
                std::cerr << "annotations: dropped " << store.dropped_on_open() << " corrupt journal line(s)\n";
            }
            ReviewServerOptions options;
            if (!v_static.empty()) options.static_dir = fs::path(v_static);
            ReviewServer server(data, store, options);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cerr << "serving on http://" << v_host << ':' << v_port << '\n';
            if (!server.listen(v_host, v_port) && !g_stop) {
                std::cerr << "synthaudit: cannot listen on " << v_host << ':' << v_port << '\n';
                return kExitModuleFailure;
            }
            g_server = nullptr;
            return 0;
        }
    } catch (const InputError& e) {
        std::cerr << "synthaudit: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "synthaudit: " << e.what() << '\n';
        return kExitModuleFailure;
    }
    return 0;
}
