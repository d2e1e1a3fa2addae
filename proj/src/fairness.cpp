#include "synthaudit/fairness.hpp"

#include "synthaudit/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <set>

namespace synthaudit {

using nlohmann::json;

std::vector<PredictionRecord> parse_predictions(std::istream& in, const std::string& source_name) {
    std::vector<PredictionRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(line);
            if (!j.is_object() || !j.contains("id") || !j["id"].is_string()) {
                throw InputError("record requires a string 'id'");
            }
            PredictionRecord r;
            r.doc_id = j["id"].get<std::string>();
            auto labels = [&j](const char* key, std::set<std::string>& into) {
                if (!j.contains(key) || j[key].is_null()) return;
                if (!j[key].is_array()) throw InputError(std::string("'") + key + "' must be a list of labels");
                for (const auto& l : j[key]) into.insert(l.get<std::string>());
            };
            labels("gold", r.gold);
            labels("pred", r.predicted);
            if (j.contains("groups") && !j["groups"].is_null()) {
                for (const auto& [k, v] : j["groups"].items()) r.groups[k] = v.get<std::string>();
            }
            out.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw InputError(source_name + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const InputError& e) {
            throw InputError(source_name + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open predictions file " + path.string());
    return parse_predictions(in, path.string());
}

json to_json(const PredictionRecord& r) {
    return {{"id", r.doc_id},
            {"gold", r.gold},
            {"pred", r.predicted},
            {"groups", r.groups.empty() ? json::object() : json(r.groups)}};
}

void write_predictions(const std::vector<PredictionRecord>& records, std::ostream& out) {
    for (const auto& r : records) out << to_json(r).dump() << '\n';
}

std::set<std::string> label_universe(const std::vector<PredictionRecord>& records) {
    std::set<std::string> u;
    for (const auto& r : records) {
        u.insert(r.gold.begin(), r.gold.end());
        u.insert(r.predicted.begin(), r.predicted.end());
    }
    return u;
}

GroupConfusion group_confusion(const std::vector<PredictionRecord>& records,
                               const std::vector<std::string>& attributes, const std::set<std::string>& universe) {
    if (records.empty()) throw InputError("group_confusion: no prediction records");
    if (universe.empty()) throw InputError("group_confusion: label universe is empty");
    if (attributes.empty()) throw InputError("group_confusion: no group attribute given");

    GroupConfusion gc;
    for (std::size_t i = 0; i < attributes.size(); ++i) gc.attribute += (i ? "×" : "") + attributes[i];
    gc.labels.assign(universe.begin(), universe.end());

    std::vector<std::string> missing;
    for (const auto& r : records) {
        for (const auto& a : attributes) {
            const auto it = r.groups.find(a);
            if (it == r.groups.end() || it->second.empty()) {
                missing.push_back(r.doc_id);
                break;
            }
        }
    }
    if (!missing.empty()) {
        std::string msg = "group_confusion: " + std::to_string(missing.size()) + " record(s) lack attribute '" +
                          gc.attribute + "':";
        for (std::size_t i = 0; i < missing.size() && i < 20; ++i) msg += " " + missing[i];
        if (missing.size() > 20) msg += " ...";
        throw InputError(msg);
    }

    for (const auto& r : records) {
        for (const auto* labels : {&r.gold, &r.predicted}) {
            for (const auto& l : *labels) {
                if (!universe.count(l)) {
                    throw InputError("group_confusion: record '" + r.doc_id + "' uses unknown label '" + l + "'");
                }
            }
        }
        std::string group;
        for (std::size_t i = 0; i < attributes.size(); ++i) group += (i ? "×" : "") + r.groups.at(attributes[i]);
        ++gc.group_sizes[group];
        auto& per_label = gc.per_label[group];
        for (const auto& l : gc.labels) {
            const bool g = r.gold.count(l) > 0;
            const bool p = r.predicted.count(l) > 0;
            Confusion& c = per_label[l];
            if (g && p) ++c.tp;
            else if (!g && p) ++c.fp;
            else if (g && !p) ++c.fn;
            else ++c.tn;
        }
    }
    for (const auto& [group, per_label] : gc.per_label) {
        Confusion pooled;
        for (const auto& [label, c] : per_label) pooled += c;
        gc.pooled[group] = pooled;
    }
    return gc;
}

GroupConfusion group_confusion(const std::vector<PredictionRecord>& records, const std::string& attribute,
                               const std::set<std::string>& universe) {
    return group_confusion(records, std::vector<std::string>{attribute}, universe);
}

namespace {

std::optional<double> ratio(long long num, long long den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

struct Rates {
    std::optional<double> tpr, fpr, fnr, tnr;
};

Rates rates_of(const Confusion& c) {
    return {ratio(c.tp, c.tp + c.fn), ratio(c.fp, c.fp + c.tn), ratio(c.fn, c.tp + c.fn), ratio(c.tn, c.fp + c.tn)};
}

double pick(const Rates& r, EqualityDifference kind) {
    switch (kind) {
    case EqualityDifference::FPED: return *r.fpr;
    case EqualityDifference::FNED: return *r.fnr;
    case EqualityDifference::TPED: return *r.tpr;
    case EqualityDifference::TNED: return *r.tnr;
    }
    return 0.0;
}

struct MetricSet {
    double eo = 0.0;
    double ed[4] = {0.0, 0.0, 0.0, 0.0}; // FPED, FNED, TPED, TNED
    std::vector<std::string> skipped;
    bool usable = false;
};

// Applies the formulas to one set of per-group counts. `context` names the
// label in macro mode for error messages.
MetricSet compute(const std::map<std::string, Confusion>& groups, const FairnessOptions& options,
                  const std::string& context) {
    MetricSet m;
    Confusion overall_counts;
    std::vector<std::pair<std::string, Rates>> usable;
    for (const auto& [group, c] : groups) {
        overall_counts += c;
        Rates r = rates_of(c);
        if (!r.tpr || !r.fpr) {
            if (!options.skip_degenerate) {
                throw InputError("fairness: group '" + group + "'" + context + " has " +
                                 (!r.tpr ? "no positive" : "no negative") +
                                 " instances, so its TPR/FPR is undefined (use skip-degenerate to drop it)");
            }
            m.skipped.push_back(group);
            continue;
        }
        usable.emplace_back(group, r);
    }
    if (usable.size() < 2) {
        if (options.skip_degenerate) return m;
        throw InputError("fairness: at least 2 groups with defined rates are required" + context + " (found " +
                         std::to_string(usable.size()) + ")");
    }
    double tpr_min = 1.0, tpr_max = 0.0, fpr_min = 1.0, fpr_max = 0.0;
    for (const auto& [g, r] : usable) {
        tpr_min = std::min(tpr_min, *r.tpr);
        tpr_max = std::max(tpr_max, *r.tpr);
        fpr_min = std::min(fpr_min, *r.fpr);
        fpr_max = std::max(fpr_max, *r.fpr);
    }
    m.eo = std::max(tpr_max - tpr_min, fpr_max - fpr_min);
    const Rates overall = rates_of(overall_counts);
    for (int k = 0; k < 4; ++k) {
        const auto kind = static_cast<EqualityDifference>(k);
        double sum = 0.0;
        for (const auto& [g, r] : usable) sum += std::abs(pick(overall, kind) - pick(r, kind));
        m.ed[k] = sum;
    }
    m.usable = true;
    return m;
}

MetricSet compute_all(const GroupConfusion& conf, const FairnessOptions& options) {
    if (conf.pooled.size() < 2) {
        throw InputError("fairness: attribute '" + conf.attribute + "' has " + std::to_string(conf.pooled.size()) +
                         " group(s); at least 2 are required");
    }
    if (options.aggregation == Aggregation::Micro) {
        MetricSet m = compute(conf.pooled, options, "");
        if (!m.usable) {
            throw InputError("fairness: fewer than 2 groups with defined rates remain after skipping degenerate groups");
        }
        return m;
    }

    MetricSet avg;
    std::size_t used = 0;
    std::set<std::string> skipped;
    for (const auto& label : conf.labels) {
        std::map<std::string, Confusion> groups;
        for (const auto& [group, per_label] : conf.per_label) groups[group] = per_label.at(label);
        const MetricSet m = compute(groups, options, " for label '" + label + "'");
        skipped.insert(m.skipped.begin(), m.skipped.end());
        if (!m.usable) continue;
        avg.eo += m.eo;
        for (int k = 0; k < 4; ++k) avg.ed[k] += m.ed[k];
        ++used;
    }
    if (used == 0) throw InputError("fairness: no label has at least 2 groups with defined rates");
    avg.eo /= static_cast<double>(used);
    for (double& v : avg.ed) v /= static_cast<double>(used);
    avg.skipped.assign(skipped.begin(), skipped.end());
    avg.usable = true;
    return avg;
}

} // namespace

double equalized_odds(const GroupConfusion& conf, const FairnessOptions& options) {
    return compute_all(conf, options).eo;
}

double equality_difference(const GroupConfusion& conf, EqualityDifference kind, const FairnessOptions& options) {
    return compute_all(conf, options).ed[static_cast<int>(kind)];
}

FairnessReport fairness_report(const GroupConfusion& conf, const FairnessOptions& options) {
    const MetricSet m = compute_all(conf, options);
    FairnessReport r;
    r.attribute = conf.attribute;
    r.aggregation = options.aggregation;
    r.eo = m.eo;
    r.fped = m.ed[0];
    r.fned = m.ed[1];
    r.tped = m.ed[2];
    r.tned = m.ed[3];
    r.skipped_groups = m.skipped;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& [group, c] : conf.pooled) {
        const Rates rates = rates_of(c);
        GroupRates g;
        g.documents = conf.group_sizes.at(group);
        g.counts = c;
        g.tpr = rates.tpr.value_or(nan);
        g.fpr = rates.fpr.value_or(nan);
        g.fnr = rates.fnr.value_or(nan);
        g.tnr = rates.tnr.value_or(nan);
        r.groups.emplace(group, g);
    }
    return r;
}

json to_json(const FairnessReport& r) {
    json groups = json::object();
    for (const auto& [name, g] : r.groups) {
        groups[name] = {{"documents", g.documents},
                        {"tp", g.counts.tp},
                        {"fp", g.counts.fp},
                        {"fn", g.counts.fn},
                        {"tn", g.counts.tn},
                        {"tpr", g.tpr},
                        {"fpr", g.fpr},
                        {"fnr", g.fnr},
                        {"tnr", g.tnr}};
    }
    return {{"attribute", r.attribute},
            {"aggregation", r.aggregation == Aggregation::Micro ? "micro" : "macro"},
            {"lower_is_better", true},
            {"equalized_odds", r.eo},
            {"fped", r.fped},
            {"fned", r.fned},
            {"tped", r.tped},
            {"tned", r.tned},
            {"groups", std::move(groups)},
            {"skipped_groups", r.skipped_groups}};
}

FairnessSummary summarize_fairness(const std::vector<FairnessReport>& reports) {
    FairnessSummary s;
    s.runs = reports.size();
    if (reports.empty()) return s;
    const std::vector<std::pair<std::string, double FairnessReport::*>> fields = {
        {"equalized_odds", &FairnessReport::eo}, {"fped", &FairnessReport::fped}, {"fned", &FairnessReport::fned},
        {"tped", &FairnessReport::tped},         {"tned", &FairnessReport::tned}};
    for (const auto& [name, field] : fields) {
        double mean = 0.0;
        for (const auto& r : reports) mean += r.*field;
        mean /= static_cast<double>(reports.size());
        double var = 0.0;
        for (const auto& r : reports) var += (r.*field - mean) * (r.*field - mean);
        const double stdev = reports.size() > 1 ? std::sqrt(var / static_cast<double>(reports.size() - 1)) : 0.0;
        s.metrics[name] = {mean, stdev};
    }
    return s;
}

} // namespace synthaudit
