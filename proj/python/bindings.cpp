#include "synthaudit/corpus.hpp"
#include "synthaudit/error.hpp"
#include "synthaudit/fairness.hpp"
#include "synthaudit/privacy.hpp"
#include "synthaudit/quality.hpp"
#include "synthaudit/report.hpp"
#include "synthaudit/utility.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace synthaudit;
using nlohmann::json;

namespace {

TokenizerConfig tokenizer(bool lowercase, const std::string& punctuation) {
    return tokenizer_config_from_json({{"lowercase", lowercase}, {"punctuation", punctuation}});
}

py::dict leakage_dict(const LeakageResult& r) {
    py::dict d;
    d["percentage"] = r.percentage;
    d["leaked"] = r.leaked;
    d["leaked_count"] = r.leaked_count;
    d["total"] = r.total;
    if (r.k) d["k"] = *r.k;
    return d;
}

std::vector<PredictionRecord> records_from_jsonl(const std::string& text) {
    std::istringstream in(text);
    return parse_predictions(in, "<python>");
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Native core of the synthaudit toolkit";
    m.attr("__version__") = engine_version();
    m.attr("SCHEMA_VERSION") = std::string(kSchemaVersion);

    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    py::class_<Corpus>(m, "Corpus")
        .def("__len__", &Corpus::size)
        .def_property_readonly("name", &Corpus::name)
        .def_property_readonly("ids",
                               [](const Corpus& c) {
                                   std::vector<std::string> ids;
                                   for (const auto& d : c) ids.push_back(d.id);
                                   return ids;
                               })
        .def("fingerprint", &Corpus::fingerprint)
        .def("to_jsonl", [](const Corpus& c) {
            std::ostringstream out;
            write_corpus_jsonl(c, out);
            return out.str();
        });

    m.def("load_corpus", &load_corpus_path, py::arg("path"));
    m.def(
        "parse_corpus_jsonl",
        [](const std::string& text, const std::string& name) {
            std::istringstream in(text);
            return parse_corpus_jsonl(in, name);
        },
        py::arg("text"), py::arg("name") = "<python>");

    m.def(
        "tokenize",
        [](const std::string& text, bool lowercase, const std::string& punctuation) {
            return tokenize(text, tokenizer(lowercase, punctuation)).tokens;
        },
        py::arg("text"), py::arg("lowercase") = true, py::arg("punctuation") = "split");

    m.def(
        "entity_leakage",
        [](const Corpus& train, const Corpus& synth) { return leakage_dict(entity_leakage(train, synth)); },
        py::arg("train"), py::arg("synth"));
    m.def(
        "context_leakage",
        [](const Corpus& train, const Corpus& synth, int k, bool per_side) {
            ContextOptions o;
            o.per_side = per_side;
            return leakage_dict(context_leakage(train, synth, k, o));
        },
        py::arg("train"), py::arg("synth"), py::arg("k"), py::arg("per_side") = true);
    m.def(
        "leakage_curve",
        [](const Corpus& train, const Corpus& synth, const std::vector<int>& ks) {
            return leakage_curve(train, synth, ks);
        },
        py::arg("train"), py::arg("synth"), py::arg("k_list") = std::vector<int>{0, 1, 2, 4, 8});

    m.def(
        "fid",
        [](const Eigen::MatrixXd& real, const Eigen::MatrixXd& synth) { return fid(real, synth).value; },
        py::arg("real"), py::arg("synth"));
    m.def(
        "mauve",
        [](const Eigen::MatrixXd& real, const Eigen::MatrixXd& synth, int clusters, double scaling, int grid_size,
           std::uint64_t seed) {
            MauveOptions o;
            o.clusters = clusters;
            o.scaling = scaling;
            o.grid_size = grid_size;
            o.seed = seed;
            const auto r = mauve(real, synth, o);
            py::dict d;
            d["score"] = r.score;
            d["clusters"] = r.clusters;
            d["curve"] = r.curve;
            return d;
        },
        py::arg("real"), py::arg("synth"), py::arg("clusters") = 0, py::arg("scaling") = 5.0,
        py::arg("grid_size") = 25, py::arg("seed") = 0);
    m.def("perplexity", py::overload_cast<const std::vector<double>&>(&perplexity), py::arg("logprobs"));

    m.def(
        "_fairness_jsonl",
        [](const std::string& jsonl, const std::string& attribute, bool macro) {
            const auto records = records_from_jsonl(jsonl);
            FairnessOptions o;
            if (macro) o.aggregation = Aggregation::Macro;
            return to_json(fairness_report(group_confusion(records, attribute, label_universe(records)), o)).dump();
        },
        py::arg("jsonl"), py::arg("attribute"), py::arg("macro") = false);
    m.def(
        "_utility_jsonl",
        [](const std::string& jsonl) { return to_json(evaluate_predictions(records_from_jsonl(jsonl))).dump(); },
        py::arg("jsonl"));

    m.def(
        "_run_audit",
        [](const std::filesystem::path& config) {
            const auto report = run_audit(load_audit_config(config));
            return py::make_tuple(render_json(report), render_markdown(report), report.failed());
        },
        py::arg("config"));
}
