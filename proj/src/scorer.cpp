#include "synthaudit/scorer.hpp"

#include "synthaudit/error.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>

namespace synthaudit {

using nlohmann::json;

namespace {

void validate_logprobs(const std::string& key, const std::vector<double>& logprobs) {
    for (std::size_t i = 0; i < logprobs.size(); ++i) {
        const double v = logprobs[i];
        if (!std::isfinite(v)) {
            throw InputError("scores for '" + key + "': non-finite log-probability at index " + std::to_string(i));
        }
        if (v > 0.0) {
            throw InputError("scores for '" + key + "': positive log-probability " + std::to_string(v) +
                             " at index " + std::to_string(i) + " (natural-log probabilities must be <= 0)");
        }
    }
}

std::vector<double> logprobs_from_json(const json& j) {
    if (!j.is_array()) throw InputError("'logprobs' must be an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& v : j) {
        if (v.is_number()) {
            out.push_back(v.get<double>());
        } else if (v.is_string()) {
            // JSON has no literal for NaN/Inf; tolerate the common spellings so they can be rejected by validation.
            const auto s = v.get<std::string>();
            if (s == "NaN" || s == "nan") out.push_back(std::nan(""));
            else if (s == "Infinity" || s == "inf") out.push_back(INFINITY);
            else if (s == "-Infinity" || s == "-inf") out.push_back(-INFINITY);
            else throw InputError("'logprobs' contains a non-numeric value");
        } else {
            throw InputError("'logprobs' contains a non-numeric value");
        }
    }
    return out;
}

} // namespace

void ScoreSet::add(const std::string& key, std::vector<double> logprobs) {
    validate_logprobs(key, logprobs);
    if (!scores_.emplace(key, std::move(logprobs)).second) throw InputError("duplicate score key '" + key + "'");
}

const std::vector<double>* ScoreSet::find(const std::string& key) const {
    const auto it = scores_.find(key);
    return it == scores_.end() ? nullptr : &it->second;
}

ScoreSet parse_scores(std::istream& in, const std::string& source_name) {
    ScoreSet set(source_name);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(line);
            if (!j.is_object() || !j.contains("key") || !j["key"].is_string()) {
                throw InputError("record requires a string 'key'");
            }
            if (!j.contains("logprobs")) throw InputError("record requires 'logprobs'");
            set.add(j["key"].get<std::string>(), logprobs_from_json(j["logprobs"]));
        } catch (const json::exception& e) {
            throw InputError(source_name + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const InputError& e) {
            throw InputError(source_name + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return set;
}

ScoreSet load_scores(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open scores file " + path.string());
    return parse_scores(in, path.string());
}

void write_scores(const ScoreSet& scores, std::ostream& out) {
    for (const auto& [key, logprobs] : scores.entries()) {
        out << json{{"key", key}, {"logprobs", logprobs}}.dump() << '\n';
    }
}

void save_scores(const ScoreSet& scores, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    write_scores(scores, out);
}

// ---------------------------------------------------------------------------
// Remote scoring

namespace {

struct Endpoint {
    std::string base; // scheme://host[:port]
    std::string path; // request path, defaults to /score
};

Endpoint parse_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw InputError("scorer endpoint must be an http:// URL: " + url);
    const std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http") throw InputError("unsupported scorer endpoint scheme '" + scheme + "' (only http)");
    const auto path_start = url.find('/', scheme_end + 3);
    Endpoint e;
    e.base = url.substr(0, path_start);
    e.path = path_start == std::string::npos ? "" : url.substr(path_start);
    if (e.path.empty() || e.path == "/") e.path = "/score";
    return e;
}

std::string snippet(const std::string& body) {
    constexpr std::size_t kMax = 200;
    return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

std::vector<std::vector<double>> parse_score_response(const std::string& body, std::size_t expected) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception&) {
        throw ProtocolError("scorer response is not valid JSON: " + snippet(body));
    }
    if (!j.is_object() || !j.contains("results") || !j["results"].is_array()) {
        throw ProtocolError("scorer response lacks a 'results' array: " + snippet(body));
    }
    std::vector<std::vector<double>> out(expected);
    std::vector<bool> seen(expected, false);
    for (const auto& r : j["results"]) {
        if (!r.is_object() || !r.contains("text_index") || !r["text_index"].is_number_integer() ||
            !r.contains("logprobs")) {
            throw ProtocolError("malformed scorer result entry: " + snippet(body));
        }
        const auto idx = r["text_index"].get<long long>();
        if (idx < 0 || static_cast<std::size_t>(idx) >= expected || seen[idx]) {
            throw ProtocolError("scorer returned invalid or repeated text_index " + std::to_string(idx) + ": " +
                                snippet(body));
        }
        seen[idx] = true;
        try {
            out[idx] = logprobs_from_json(r["logprobs"]);
        } catch (const InputError&) {
            throw ProtocolError("scorer returned non-numeric logprobs: " + snippet(body));
        }
    }
    for (std::size_t i = 0; i < expected; ++i) {
        if (!seen[i]) throw ProtocolError("scorer response missing text_index " + std::to_string(i) + ": " + snippet(body));
    }
    return out;
}

std::vector<std::vector<double>> score_batch(const Endpoint& endpoint, const std::vector<std::string>& texts,
                                             const RemoteScorerOptions& options) {
    const std::string body = json{{"texts", texts}}.dump();
    std::string last_error;
    auto backoff = options.initial_backoff;
    for (int attempt = 1; attempt <= std::max(1, options.attempts); ++attempt) {
        httplib::Client client(endpoint.base);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options.timeout);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options.timeout - secs);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());
        client.set_write_timeout(secs.count(), usecs.count());
        auto res = client.Post(endpoint.path, body, "application/json");
        if (res) {
            if (res->status == 200) return parse_score_response(res->body, texts.size());
            last_error = "HTTP " + std::to_string(res->status) + ": " + snippet(res->body);
            // Client errors will not improve on retry.
            if (res->status >= 400 && res->status < 500) {
                throw ProtocolError("scorer rejected request with " + last_error);
            }
        } else {
            last_error = httplib::to_string(res.error());
        }
        if (attempt < options.attempts) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    throw NetworkError("scorer " + endpoint.base + endpoint.path + " unreachable after " +
                       std::to_string(options.attempts) + " attempts: " + last_error);
}

} // namespace

ScoreSet score_remote(const std::vector<std::string>& texts, const std::string& endpoint_url,
                      const RemoteScorerOptions& options) {
    ScoreSet result("remote:" + endpoint_url);
    if (texts.empty()) return result;
    if (options.batch_size == 0) throw InputError("score_remote: batch size must be >= 1");
    const Endpoint endpoint = parse_endpoint(endpoint_url);

    std::vector<std::string> unique;
    {
        std::vector<std::string> sorted = texts;
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        unique = std::move(sorted);
    }

    const std::size_t batches = (unique.size() + options.batch_size - 1) / options.batch_size;
    std::vector<std::vector<std::vector<double>>> results(batches);
    std::vector<std::exception_ptr> errors(batches);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t b = next++; b < batches; b = next++) {
            const std::size_t begin = b * options.batch_size;
            const std::size_t end = std::min(unique.size(), begin + options.batch_size);
            std::vector<std::string> batch(unique.begin() + static_cast<std::ptrdiff_t>(begin),
                                           unique.begin() + static_cast<std::ptrdiff_t>(end));
            try {
                results[b] = score_batch(endpoint, batch, options);
            } catch (...) {
                errors[b] = std::current_exception();
            }
        }
    };
    const std::size_t n_workers = std::clamp<std::size_t>(options.max_concurrency, 1, batches);
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i + 1 < n_workers; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    for (std::size_t b = 0; b < batches; ++b) {
        const std::size_t begin = b * options.batch_size;
        for (std::size_t i = 0; i < results[b].size(); ++i) {
            try {
                result.add(unique[begin + i], std::move(results[b][i]));
            } catch (const InputError& e) {
                throw ProtocolError(std::string("scorer returned invalid scores: ") + e.what());
            }
        }
    }
    return result;
}

} // namespace synthaudit
