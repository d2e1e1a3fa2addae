#include "synthaudit/quality.hpp"

#include "random.hpp"
#include "synthaudit/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace synthaudit {

// ---------------------------------------------------------------------------
// k-means

namespace {

std::size_t distinct_rows(const Eigen::MatrixXd& points, std::size_t stop_at) {
    std::set<std::vector<double>> seen;
    for (Eigen::Index i = 0; i < points.rows() && seen.size() < stop_at; ++i) {
        std::vector<double> row(static_cast<std::size_t>(points.cols()));
        for (Eigen::Index j = 0; j < points.cols(); ++j) row[static_cast<std::size_t>(j)] = points(i, j);
        seen.insert(std::move(row));
    }
    return seen.size();
}

} // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed, int max_iterations) {
    const Eigen::Index n = points.rows();
    if (k < 1) throw InputError("kmeans: k must be >= 1");
    if (n < k) throw InputError("kmeans: k = " + std::to_string(k) + " exceeds row count " + std::to_string(n));
    if (distinct_rows(points, static_cast<std::size_t>(k)) < static_cast<std::size_t>(k)) {
        throw InputError("kmeans: fewer than k = " + std::to_string(k) +
                         " distinct embeddings; cannot form k clusters, use a smaller k");
    }

    detail::Rng rng(seed);
    KMeansResult r;
    r.centroids.resize(k, points.cols());

    // k-means++ seeding
    std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    std::size_t first = rng.below(static_cast<std::size_t>(n));
    r.centroids.row(0) = points.row(static_cast<Eigen::Index>(first));
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double dist = (points.row(i) - r.centroids.row(c - 1)).squaredNorm();
            auto& slot = d2[static_cast<std::size_t>(i)];
            slot = std::min(slot, dist);
            total += slot;
        }
        Eigen::Index chosen = 0;
        if (total > 0.0) {
            const double u = rng.uniform() * total;
            double acc = 0.0;
            chosen = -1;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += d2[static_cast<std::size_t>(i)];
                if (u < acc && d2[static_cast<std::size_t>(i)] > 0.0) {
                    chosen = i;
                    break;
                }
            }
            if (chosen < 0) {
                for (Eigen::Index i = n - 1; i >= 0; --i) {
                    if (d2[static_cast<std::size_t>(i)] > 0.0) {
                        chosen = i;
                        break;
                    }
                }
            }
        }
        r.centroids.row(c) = points.row(chosen);
    }

    r.assignment.assign(static_cast<std::size_t>(n), -1);
    std::vector<double> best_dist(static_cast<std::size_t>(n));
    for (int it = 1; it <= max_iterations; ++it) {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double dist = (points.row(i) - r.centroids.row(c)).squaredNorm();
                if (dist < best_d) {
                    best_d = dist;
                    best = c;
                }
            }
            auto& slot = r.assignment[static_cast<std::size_t>(i)];
            if (slot != best) {
                slot = best;
                changed = true;
            }
            best_dist[static_cast<std::size_t>(i)] = best_d;
        }
        r.iterations = it;
        if (!changed && it > 1) break;

        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
        std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int c = r.assignment[static_cast<std::size_t>(i)];
            sums.row(c) += points.row(i);
            ++counts[static_cast<std::size_t>(c)];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                r.centroids.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
                continue;
            }
            // Empty cluster: re-seed at the point farthest from its centroid
            // among clusters that can spare a member.
            Eigen::Index far = -1;
            double far_d = -1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const int owner = r.assignment[static_cast<std::size_t>(i)];
                if (counts[static_cast<std::size_t>(owner)] > 1 && best_dist[static_cast<std::size_t>(i)] > far_d) {
                    far_d = best_dist[static_cast<std::size_t>(i)];
                    far = i;
                }
            }
            if (far >= 0) {
                --counts[static_cast<std::size_t>(r.assignment[static_cast<std::size_t>(far)])];
                r.assignment[static_cast<std::size_t>(far)] = c;
                counts[static_cast<std::size_t>(c)] = 1;
                best_dist[static_cast<std::size_t>(far)] = 0.0;
                r.centroids.row(c) = points.row(far);
            }
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// MAUVE

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw InputError("kl_divergence: size mismatch");
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        if (q[i] <= 0.0) return std::numeric_limits<double>::infinity();
        kl += p[i] * std::log(p[i] / q[i]);
    }
    return std::max(0.0, kl);
}

std::pair<double, double> divergence_point(const std::vector<double>& p, const std::vector<double>& q,
                                           double lambda, double scaling) {
    if (p.size() != q.size()) throw InputError("divergence_point: histogram size mismatch");
    std::vector<double> r(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) r[i] = lambda * p[i] + (1.0 - lambda) * q[i];
    return {std::exp(-scaling * kl_divergence(q, r)), std::exp(-scaling * kl_divergence(p, r))};
}

MauveResult mauve_from_histograms(const std::vector<double>& p, const std::vector<double>& q, double scaling,
                                  int grid_size) {
    if (p.size() != q.size() || p.empty()) throw InputError("mauve: histograms must be non-empty and equal length");
    if (!(scaling > 0.0)) throw InputError("mauve: scaling constant c must be > 0");
    if (grid_size < 3) throw InputError("mauve: grid size must be >= 3");
    MauveResult r;
    r.scaling = scaling;
    r.clusters = static_cast<int>(p.size());
    r.p_histogram = p;
    r.q_histogram = q;
    r.curve.reserve(static_cast<std::size_t>(grid_size) + 2);
    r.curve.emplace_back(0.0, 1.0);
    r.curve.emplace_back(1.0, 0.0);
    for (int i = 1; i <= grid_size; ++i) {
        const double lambda = static_cast<double>(i) / (grid_size + 1);
        r.lambda_grid.push_back(lambda);
        r.curve.push_back(divergence_point(p, q, lambda, scaling));
    }
    std::sort(r.curve.begin(), r.curve.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second > b.second;
    });
    double area = 0.0;
    for (std::size_t i = 1; i < r.curve.size(); ++i) {
        const auto& [x0, y0] = r.curve[i - 1];
        const auto& [x1, y1] = r.curve[i];
        area += (x1 - x0) * (y0 + y1) * 0.5;
    }
    r.score = std::clamp(area, 0.0, 1.0);
    return r;
}

int default_mauve_clusters(Eigen::Index total_rows) {
    return static_cast<int>(std::max<Eigen::Index>(2, std::min<Eigen::Index>(total_rows / 10, 500)));
}

MauveResult mauve(const Eigen::MatrixXd& real, const Eigen::MatrixXd& synth, const MauveOptions& options) {
    if (real.cols() != synth.cols()) throw InputError("mauve: dimension mismatch");
    if (real.rows() < 1 || synth.rows() < 1) throw InputError("mauve: both sides need at least one row");
    const Eigen::Index total = real.rows() + synth.rows();
    const int k = options.clusters > 0 ? options.clusters : default_mauve_clusters(total);
    if (k < 2) throw InputError("mauve: cluster count must be >= 2");
    if (k > total) {
        throw InputError("mauve: cluster count " + std::to_string(k) + " exceeds total rows " + std::to_string(total));
    }
    if (!(options.scaling > 0.0)) throw InputError("mauve: scaling constant c must be > 0");
    if (options.grid_size < 3) throw InputError("mauve: grid size must be >= 3");

    Eigen::MatrixXd joint(total, real.cols());
    joint.topRows(real.rows()) = real;
    joint.bottomRows(synth.rows()) = synth;
    const KMeansResult km = kmeans(joint, k, options.seed, options.kmeans_iterations);

    std::vector<double> p(static_cast<std::size_t>(k), 0.0), q(static_cast<std::size_t>(k), 0.0);
    for (Eigen::Index i = 0; i < total; ++i) {
        auto& hist = i < real.rows() ? p : q;
        hist[static_cast<std::size_t>(km.assignment[static_cast<std::size_t>(i)])] += 1.0;
    }
    auto smooth = [&](std::vector<double>& h, double count) {
        double sum = 0.0;
        for (auto& v : h) {
            v = v / count + options.smoothing;
            sum += v;
        }
        for (auto& v : h) v /= sum;
    };
    smooth(p, static_cast<double>(real.rows()));
    smooth(q, static_cast<double>(synth.rows()));
    MauveResult r = mauve_from_histograms(p, q, options.scaling, options.grid_size);
    r.clusters = k;
    return r;
}

MauveResult mauve(const EmbeddingMatrix& real, const EmbeddingMatrix& synth, const MauveOptions& options) {
    return mauve(real.vectors(), synth.vectors(), options);
}

// ---------------------------------------------------------------------------
// Perplexity

double perplexity(const std::vector<double>& logprobs) {
    if (logprobs.empty()) throw InputError("perplexity: empty token list");
    long double sum = 0.0L;
    for (double v : logprobs) {
        if (!std::isfinite(v)) throw InputError("perplexity: non-finite log-probability");
        if (v > 0.0) throw InputError("perplexity: positive log-probability " + std::to_string(v));
        sum += v;
    }
    const auto mean = static_cast<double>(sum / static_cast<long double>(logprobs.size()));
    return std::exp(-mean);
}

double perplexity(const ScoreSet& scores, const std::string& key) {
    const auto* lp = scores.find(key);
    if (!lp) throw InputError("perplexity: no scores for '" + key + "'");
    if (lp->empty()) throw InputError("perplexity: empty token list for '" + key + "'");
    return perplexity(*lp);
}

namespace {

CorpusPerplexity aggregate_perplexity(const ScoreSet& scores, const std::vector<std::string>& keys) {
    CorpusPerplexity r;
    std::vector<double> values;
    values.reserve(keys.size());
    long double sum = 0.0L;
    for (const auto& key : keys) {
        const double ppl = perplexity(scores, key);
        r.per_document.emplace_back(key, ppl);
        values.push_back(ppl);
        sum += ppl;
    }
    r.mean = static_cast<double>(sum / static_cast<long double>(values.size()));
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    r.median = values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
    return r;
}

} // namespace

CorpusPerplexity corpus_perplexity(const ScoreSet& scores, const Corpus& corpus) {
    if (corpus.empty()) throw InputError("corpus_perplexity: corpus is empty");
    std::vector<std::string> keys, missing;
    for (const auto& d : corpus) {
        keys.push_back(d.id);
        if (!scores.contains(d.id)) missing.push_back(d.id);
    }
    if (!missing.empty()) {
        std::string msg = "corpus_perplexity: " + std::to_string(missing.size()) + " unscored document(s):";
        for (std::size_t i = 0; i < missing.size() && i < 20; ++i) msg += " " + missing[i];
        if (missing.size() > 20) msg += " ...";
        throw InputError(msg);
    }
    return aggregate_perplexity(scores, keys);
}

CorpusPerplexity score_set_perplexity(const ScoreSet& scores) {
    if (scores.empty()) throw InputError("score_set_perplexity: score set is empty");
    std::vector<std::string> keys;
    for (const auto& [key, lp] : scores.entries()) keys.push_back(key);
    return aggregate_perplexity(scores, keys);
}

} // namespace synthaudit
