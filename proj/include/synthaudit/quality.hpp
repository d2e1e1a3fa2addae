#pragma once

#include "synthaudit/corpus.hpp"
#include "synthaudit/scorer.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace synthaudit {

/// Row-aligned document embeddings. Rows are finite; dimension >= 1.
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;
    EmbeddingMatrix(std::vector<std::string> ids, Eigen::MatrixXd vectors, std::string provenance = {});

    const std::vector<std::string>& ids() const { return ids_; }
    const Eigen::MatrixXd& vectors() const { return vectors_; }
    Eigen::Index rows() const { return vectors_.rows(); }
    Eigen::Index dim() const { return vectors_.cols(); }
    const std::string& provenance() const { return provenance_; }
    void set_provenance(std::string p) { provenance_ = std::move(p); }

    /// Row index of `id`, or -1.
    Eigen::Index find(const std::string& id) const;

private:
    std::vector<std::string> ids_;
    Eigen::MatrixXd vectors_;
    std::string provenance_;
};

// Text format: "synthaudit-emb v1 <n> <d>" then "<id> <f1> ... <fd>" per line.
// Binary format: 8-byte magic "SAEMB\x01\0\0", uint32 n, uint32 d (little
// endian), n*d little-endian float32 row-major, then n ids as uint32 length +
// UTF-8 bytes. `load_embeddings` detects the format from the magic bytes.
EmbeddingMatrix parse_embeddings_text(std::istream& in, const std::string& source_name = "<stream>");
EmbeddingMatrix parse_embeddings_binary(std::istream& in, const std::string& source_name = "<stream>");
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);
void write_embeddings_text(const EmbeddingMatrix& m, std::ostream& out);
void write_embeddings_binary(const EmbeddingMatrix& m, std::ostream& out);
void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path, bool binary = false);

struct GaussianSummary {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

/// Sample mean and 1/(n-1) covariance; adds `shrinkage` to the diagonal.
GaussianSummary fit_gaussian(const Eigen::MatrixXd& samples, double shrinkage = 0.0);

/// Square root of a symmetric positive semi-definite matrix via symmetric
/// eigendecomposition. Small negative eigenvalues (>= -1e-8 relative to the
/// spectral radius) are clamped to zero; larger ones are an error.
Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& m);

struct FidResult {
    double value = 0.0;
    double mean_term = 0.0;  // ||m - m_w||^2
    double trace_term = 0.0; // Tr(C + C_w - 2 (C^1/2 C_w C^1/2)^1/2)
    bool low_sample_mode = false;
    Eigen::Index n_real = 0;
    Eigen::Index n_synth = 0;
    Eigen::Index dim = 0;
};

inline constexpr double kLowSampleShrinkage = 1e-6;

/// Frechet distance between Gaussian fits of two embedding clouds.
FidResult fid(const Eigen::MatrixXd& real, const Eigen::MatrixXd& synth);
FidResult fid(const EmbeddingMatrix& real, const EmbeddingMatrix& synth);

/// Frechet distance between two Gaussians, symmetric-product form.
double frechet_distance(const GaussianSummary& a, const GaussianSummary& b);

struct KMeansResult {
    Eigen::MatrixXd centroids;       // k x d
    std::vector<int> assignment;     // per row
    int iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed, int max_iterations = 100);

struct MauveOptions {
    int clusters = 0; // 0 means min(floor(n_total / 10), 500), at least 2
    double scaling = 5.0;
    int grid_size = 25;
    std::uint64_t seed = 0;
    int kmeans_iterations = 100;
    double smoothing = 1e-6;
};

struct MauveResult {
    double score = 0.0;
    std::vector<std::pair<double, double>> curve; // sorted, with endpoints
    double scaling = 0.0;
    int clusters = 0;
    std::vector<double> lambda_grid;
    std::vector<double> p_histogram; // reference (real)
    std::vector<double> q_histogram; // synthetic
};

/// KL(p || q) in nats; terms with p_i = 0 contribute zero.
double kl_divergence(const std::vector<double>& p, const std::vector<double>& q);

/// One divergence-curve point (exp(-c KL(Q||R)), exp(-c KL(P||R))) with
/// R = lambda P + (1 - lambda) Q.
std::pair<double, double> divergence_point(const std::vector<double>& p, const std::vector<double>& q,
                                           double lambda, double scaling);

/// Divergence curve and area from already-quantized histograms.
MauveResult mauve_from_histograms(const std::vector<double>& p, const std::vector<double>& q, double scaling,
                                  int grid_size);

MauveResult mauve(const Eigen::MatrixXd& real, const Eigen::MatrixXd& synth, const MauveOptions& options);
MauveResult mauve(const EmbeddingMatrix& real, const EmbeddingMatrix& synth, const MauveOptions& options);

int default_mauve_clusters(Eigen::Index total_rows);

/// exp(-mean token log-prob) for one scored key.
double perplexity(const ScoreSet& scores, const std::string& key);
double perplexity(const std::vector<double>& logprobs);

struct CorpusPerplexity {
    double mean = 0.0;
    double median = 0.0;
    std::vector<std::pair<std::string, double>> per_document;
};

CorpusPerplexity corpus_perplexity(const ScoreSet& scores, const Corpus& corpus);

/// Aggregate over every key in the score set (no corpus to cover).
CorpusPerplexity score_set_perplexity(const ScoreSet& scores);

} // namespace synthaudit
