#pragma once

#include "synthaudit/corpus.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace synthaudit {

inline constexpr const char* kEngineName = "synthaudit";
inline constexpr const char* kSchemaVersion = "1";

std::string engine_version();

/// Rounds every floating-point value to 6 significant digits and maps
/// non-finite values to null. Integers, strings and structure are untouched.
nlohmann::json canonicalize(const nlohmann::json& value);

/// Canonical text: canonicalized values, keys sorted, two-space indent,
/// trailing newline.
std::string canonical_dump(const nlohmann::json& value);

inline const std::vector<std::string>& known_modules() {
    static const std::vector<std::string> names{"descriptive", "quality", "privacy", "fairness", "utility"};
    return names;
}

struct SyntheticSet {
    std::string name;
    std::optional<std::filesystem::path> path;
    std::optional<std::filesystem::path> embeddings;
    std::optional<std::filesystem::path> scores;
    std::optional<std::filesystem::path> canary_scores;
    std::vector<std::filesystem::path> predictions;
    std::string label_provenance = "declared";
};

struct RealSet {
    std::optional<std::filesystem::path> train;
    std::optional<std::filesystem::path> test;
    std::optional<std::filesystem::path> embeddings;
    std::optional<std::filesystem::path> scores;
    std::vector<std::filesystem::path> predictions;
};

struct DescriptiveParams {
    std::vector<int> ngram_orders{1, 2};
    std::size_t top_k = 10;
    std::size_t entity_top_k = 10;
    int lda_topics = 0; // 0 disables topic modelling
    int lda_iterations = 500;
    double lda_alpha = -1.0;
    double lda_beta = 0.01;
    std::size_t lda_top_words = 10;
};

struct QualityParams {
    int clusters = 0;
    double scaling = 5.0;
    int grid_size = 25;
    std::string embedder = "unspecified";
};

struct PrivacyParams {
    std::vector<int> k_list{0, 1, 2, 4, 8};
    bool per_side = true;
    std::optional<std::filesystem::path> canaries;
};

struct FairnessParams {
    std::vector<std::string> attributes;
    bool intersectional = false;
    std::string aggregation = "micro";
    bool skip_degenerate = false;
};

struct UtilityParams {
    bool multilabel = false;
    double learning_rate = 0.1;
    int epochs = 200;
    double l2 = 1e-4;
    double threshold = 0.5;
};

struct AuditConfig {
    std::uint64_t seed = 0;
    std::vector<std::string> modules;
    TokenizerConfig tokenizer;
    RealSet real;
    std::vector<SyntheticSet> synthetic;
    std::filesystem::path output_dir = ".";
    DescriptiveParams descriptive;
    QualityParams quality;
    PrivacyParams privacy;
    FairnessParams fairness;
    UtilityParams utility;
    /// The config document as written, embedded in the report.
    nlohmann::json source = nlohmann::json::object();

    bool enabled(const std::string& module) const;
};

/// Parses and validates a config document. Relative paths resolve against
/// `base_dir`. Unknown keys anywhere are rejected. Throws InputError.
AuditConfig parse_audit_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
AuditConfig load_audit_config(const std::filesystem::path& path);

/// Pre-flight checks that need the filesystem or cross-field knowledge:
/// required inputs per enabled module and existence of every path.
void validate_audit_config(const AuditConfig& config);

struct ModuleOutcome {
    std::string module;
    bool ok = false;
    std::string error;
    double seconds = 0.0;
};

struct AuditReport {
    nlohmann::json document; // canonical content: metadata + sections
    std::vector<ModuleOutcome> outcomes;

    bool failed() const;
};

/// Runs the enabled modules. A failing module is recorded in its section and
/// does not stop the others. Throws InputError only for invalid configs.
AuditReport run_audit(const AuditConfig& config);

enum class ReportFormat { Json, Markdown };

std::string render_json(const AuditReport& report);
std::string render_markdown(const AuditReport& report);
void render_report(const AuditReport& report, ReportFormat format, const std::filesystem::path& path);

} // namespace synthaudit
