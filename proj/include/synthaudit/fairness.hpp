#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace synthaudit {

struct PredictionRecord {
    std::string doc_id;
    std::set<std::string> gold;
    std::set<std::string> predicted;
    std::map<std::string, std::string> groups;

    bool operator==(const PredictionRecord&) const = default;
};

/// JSONL lines {"id": str, "gold": [str], "pred": [str], "groups": {str: str}}.
std::vector<PredictionRecord> parse_predictions(std::istream& in, const std::string& source_name = "<stream>");
std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path);
nlohmann::json to_json(const PredictionRecord& record);
void write_predictions(const std::vector<PredictionRecord>& records, std::ostream& out);

/// Union of all gold and predicted labels.
std::set<std::string> label_universe(const std::vector<PredictionRecord>& records);

struct Confusion {
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;
    long long tn = 0;

    Confusion& operator+=(const Confusion& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
        return *this;
    }
    bool operator==(const Confusion&) const = default;
};

struct GroupConfusion {
    std::string attribute;
    std::vector<std::string> labels;                              // sorted universe
    std::map<std::string, std::map<std::string, Confusion>> per_label; // group -> label -> counts
    std::map<std::string, Confusion> pooled;                      // group -> micro-summed counts
    std::map<std::string, long long> group_sizes;                 // documents per group
};

/// Per-group binary confusion counts for every label. `attributes` with more
/// than one entry form an intersectional group key joined by "×".
GroupConfusion group_confusion(const std::vector<PredictionRecord>& records,
                               const std::vector<std::string>& attributes,
                               const std::set<std::string>& universe);
GroupConfusion group_confusion(const std::vector<PredictionRecord>& records, const std::string& attribute,
                               const std::set<std::string>& universe);

enum class Aggregation { Micro, Macro };
enum class RateKind { FPR, FNR, TPR, TNR };
enum class EqualityDifference { FPED, FNED, TPED, TNED };

struct FairnessOptions {
    Aggregation aggregation = Aggregation::Micro;
    /// Drop groups whose rates are undefined instead of failing.
    bool skip_degenerate = false;
};

/// max(max TPR - min TPR, max FPR - min FPR) over groups.
double equalized_odds(const GroupConfusion& conf, const FairnessOptions& options = {});

/// Sum over groups of |overall rate - group rate|.
double equality_difference(const GroupConfusion& conf, EqualityDifference kind, const FairnessOptions& options = {});

struct GroupRates {
    long long documents = 0;
    Confusion counts;
    double tpr = 0.0, fpr = 0.0, fnr = 0.0, tnr = 0.0;
};

struct FairnessReport {
    std::string attribute;
    Aggregation aggregation = Aggregation::Micro;
    double eo = 0.0;
    double fped = 0.0, fned = 0.0, tped = 0.0, tned = 0.0;
    std::map<std::string, GroupRates> groups; // pooled counts and rates
    std::vector<std::string> skipped_groups;
};

FairnessReport fairness_report(const GroupConfusion& conf, const FairnessOptions& options = {});
nlohmann::json to_json(const FairnessReport& report);

/// Mean and sample standard deviation of each metric over repeated runs.
struct FairnessSummary {
    std::size_t runs = 0;
    std::map<std::string, std::pair<double, double>> metrics; // name -> (mean, stdev)
};
FairnessSummary summarize_fairness(const std::vector<FairnessReport>& reports);

} // namespace synthaudit
