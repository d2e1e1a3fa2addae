#include "synthaudit/review.hpp"

#include "synthaudit/error.hpp"
#include "synthaudit/matcher.hpp"
#include "synthaudit/report.hpp"
#include "synthaudit/unicode.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace synthaudit {

using nlohmann::json;

NeighborIndex build_index(const Corpus& real, const EmbeddingMatrix& embeddings) {
    if (real.empty()) throw InputError("build_index: real corpus is empty");
    std::vector<std::string> missing;
    for (const auto& d : real) {
        if (embeddings.find(d.id) < 0) missing.push_back(d.id);
    }
    if (!missing.empty()) {
        std::string msg = "build_index: no embedding for " + std::to_string(missing.size()) + " document(s):";
        for (std::size_t i = 0; i < missing.size() && i < 20; ++i) msg += " " + missing[i];
        if (missing.size() > 20) msg += " ...";
        throw InputError(msg);
    }
    NeighborIndex idx;
    idx.unit.resize(static_cast<Eigen::Index>(real.size()), embeddings.dim());
    Eigen::Index row = 0;
    for (const auto& d : real) {
        const Eigen::VectorXd v = embeddings.vectors().row(embeddings.find(d.id));
        const double norm = v.norm();
        if (!(norm > 0.0)) throw InputError("build_index: zero embedding for document '" + d.id + "' cannot be normalized");
        idx.unit.row(row++) = v / norm;
        idx.ids.push_back(d.id);
    }
    return idx;
}

std::vector<Neighbor> neighbors(const NeighborIndex& index, const Eigen::VectorXd& query, int k) {
    if (k < 1) throw InputError("neighbors: k must be >= 1");
    if (query.size() != index.dim()) {
        throw InputError("neighbors: query dimension " + std::to_string(query.size()) + " != index dimension " +
                         std::to_string(index.dim()));
    }
    const double norm = query.norm();
    if (!(norm > 0.0)) throw InputError("neighbors: zero query vector");
    const Eigen::VectorXd scores = index.unit * (query / norm);

    std::vector<std::size_t> order(index.size());
    std::iota(order.begin(), order.end(), 0);
    auto better = [&](std::size_t a, std::size_t b) {
        const double sa = scores(static_cast<Eigen::Index>(a));
        const double sb = scores(static_cast<Eigen::Index>(b));
        if (sa != sb) return sa > sb;
        return index.ids[a] < index.ids[b];
    };
    const std::size_t take = std::min(order.size(), static_cast<std::size_t>(k));
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(), better);
    std::vector<Neighbor> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        out.push_back({index.ids[order[i]], scores(static_cast<Eigen::Index>(order[i]))});
    }
    return out;
}

std::vector<EntityHit> docs_containing_entity(const Corpus& corpus, const std::string& entity,
                                              const TokenizerConfig& tokenizer) {
    if (entity.empty()) throw InputError("docs_containing_entity: entity must be non-empty");
    const EntityMatcher matcher({entity}, tokenizer);
    std::vector<EntityHit> out;
    if (matcher.keys().empty()) return out;
    for (const auto& d : corpus) {
        const auto matches = matcher.find_all(d.text);
        if (matches.empty()) continue;
        EntityHit hit{d.id, {}};
        for (const auto& m : matches) hit.offsets.emplace_back(m.start, m.end);
        out.push_back(std::move(hit));
    }
    return out;
}

ReviewData load_review_data(const std::filesystem::path& real, const std::filesystem::path& synth,
                            const std::filesystem::path& real_embeddings,
                            const std::filesystem::path& synth_embeddings, const TokenizerConfig& tokenizer) {
    ReviewData d;
    d.real = load_corpus_path(real);
    d.synth = load_corpus_path(synth);
    d.synth_embeddings = load_embeddings(synth_embeddings);
    d.index = build_index(d.real, load_embeddings(real_embeddings));
    if (d.synth_embeddings.dim() != d.index.dim()) {
        throw InputError("review: synthetic embedding dimension " + std::to_string(d.synth_embeddings.dim()) +
                         " != real embedding dimension " + std::to_string(d.index.dim()));
    }
    d.tokenizer = tokenizer;
    return d;
}

// ---------------------------------------------------------------------------
// HTTP

struct ReviewServer::Impl {
    const ReviewData& data;
    AnnotationStore& store;
    ReviewServerOptions options;
    httplib::Server server;

    Impl(const ReviewData& d, AnnotationStore& s, ReviewServerOptions o) : data(d), store(s), options(std::move(o)) {
        routes();
    }

    static void reply(httplib::Response& res, int status, const json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    static void fail(httplib::Response& res, int status, const std::string& msg) {
        reply(res, status, {{"error", msg}});
    }

    static bool parse_positive(const std::string& s, int& out) {
        try {
            std::size_t used = 0;
            const long v = std::stol(s, &used);
            if (used != s.size() || v < 1 || v > 1000000) return false;
            out = static_cast<int>(v);
            return true;
        } catch (...) {
            return false;
        }
    }

    static json summary(const Document& d) {
        const std::size_t len = unicode::length(d.text);
        std::string preview = unicode::substr(d.text, 0, std::min<std::size_t>(len, 200));
        return {{"id", d.id}, {"preview", preview}, {"labels", d.labels}, {"length", len}};
    }

    json document(const Document& d, const char* set) const {
        json j = to_json(d);
        j["set"] = set;
        return j;
    }

    void routes() {
        server.Get("/api/health", [this](const httplib::Request&, httplib::Response& res) {
            reply(res, 200,
                  {{"status", "ok"},
                   {"version", engine_version()},
                   {"real_documents", data.real.size()},
                   {"synthetic_documents", data.synth.size()},
                   {"annotations", store.size()}});
        });

        server.Get("/api/docs", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string set = req.has_param("set") ? req.get_param_value("set") : "synth";
            if (set != "real" && set != "synth") return fail(res, 400, "set must be 'real' or 'synth'");
            int page = 1, page_size = options.page_size;
            if (req.has_param("page") && !parse_positive(req.get_param_value("page"), page)) {
                return fail(res, 400, "page must be a positive integer");
            }
            if (req.has_param("page_size") && !parse_positive(req.get_param_value("page_size"), page_size)) {
                return fail(res, 400, "page_size must be a positive integer");
            }
            const Corpus& c = set == "real" ? data.real : data.synth;
            json docs = json::array();
            const std::size_t begin = static_cast<std::size_t>(page - 1) * static_cast<std::size_t>(page_size);
            for (std::size_t i = begin; i < c.size() && i < begin + static_cast<std::size_t>(page_size); ++i) {
                docs.push_back(summary(c[i]));
            }
            reply(res, 200,
                  {{"set", set}, {"page", page}, {"page_size", page_size}, {"total", c.size()}, {"docs", docs}});
        });

        server.Get(R"(/api/docs/([^/]+)/neighbors)", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            int k = options.default_k;
            if (req.has_param("k") && !parse_positive(req.get_param_value("k"), k)) {
                return fail(res, 400, "k must be a positive integer");
            }
            const Eigen::Index row = data.synth_embeddings.find(id);
            if (!data.synth.find(id) || row < 0) return fail(res, 404, "no synthetic document with embedding '" + id + "'");
            try {
                const Eigen::VectorXd q = data.synth_embeddings.vectors().row(row);
                json items = json::array();
                for (const auto& n : neighbors(data.index, q, k)) {
                    const Document* d = data.real.find(n.id);
                    items.push_back({{"id", n.id}, {"score", n.score}, {"text", d ? d->text : ""}});
                }
                reply(res, 200, {{"doc_id", id}, {"k", k}, {"neighbors", items}});
            } catch (const std::exception& e) {
                fail(res, 400, e.what());
            }
        });

        server.Get(R"(/api/docs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            const std::string set = req.has_param("set") ? req.get_param_value("set") : "";
            if (set != "real") {
                if (const Document* d = data.synth.find(id)) return reply(res, 200, document(*d, "synth"));
            }
            if (set != "synth") {
                if (const Document* d = data.real.find(id)) return reply(res, 200, document(*d, "real"));
            }
            fail(res, 404, "no document '" + id + "'");
        });

        server.Get(R"(/api/entities/(.+)/docs)", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string surface = req.matches[1];
            try {
                json docs = json::array();
                for (const auto& hit : docs_containing_entity(data.real, surface, data.tokenizer)) {
                    json offsets = json::array();
                    for (const auto& [s, e] : hit.offsets) offsets.push_back({s, e});
                    docs.push_back({{"id", hit.doc_id}, {"offsets", offsets}});
                }
                reply(res, 200, {{"entity", surface}, {"docs", docs}});
            } catch (const std::exception& e) {
                fail(res, 400, e.what());
            }
        });

        server.Post("/api/annotations", [this](const httplib::Request& req, httplib::Response& res) {
            json body;
            try {
                body = json::parse(req.body);
            } catch (const std::exception&) {
                return fail(res, 400, "request body is not valid JSON");
            }
            try {
                Annotation draft = annotation_from_json(body);
                if (!draft.id.empty() || !draft.created_at.empty()) {
                    return fail(res, 400, "id and created_at are assigned by the server");
                }
                reply(res, 201, to_json(store.save(std::move(draft))));
            } catch (const InputError& e) {
                fail(res, 400, e.what());
            } catch (const std::exception& e) {
                fail(res, 500, e.what());
            }
        });

        server.Get("/api/annotations", [this](const httplib::Request& req, httplib::Response& res) {
            std::optional<std::string> filter;
            if (req.has_param("doc_id")) filter = req.get_param_value("doc_id");
            json items = json::array();
            for (const auto& a : store.list(filter)) items.push_back(to_json(a));
            reply(res, 200, {{"annotations", items}});
        });

        if (options.static_dir) server.set_mount_point("/", options.static_dir->string());
    }
};

ReviewServer::ReviewServer(const ReviewData& data, AnnotationStore& store, ReviewServerOptions options)
    : impl_(std::make_unique<Impl>(data, store, std::move(options))) {}

ReviewServer::~ReviewServer() { stop(); }

bool ReviewServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int ReviewServer::bind_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool ReviewServer::serve() { return impl_->server.listen_after_bind(); }

void ReviewServer::stop() {
    if (impl_) impl_->server.stop();
}

void ReviewServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

} // namespace synthaudit
