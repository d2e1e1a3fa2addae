#include "synthaudit/error.hpp"
#include "synthaudit/quality.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace synthaudit {

namespace {

constexpr double kSymmetryTolerance = 1e-9;
constexpr double kNegativeEigenTolerance = 1e-8;

} // namespace

Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw InputError("matrix_sqrt_psd: matrix is not square");
    if (m.size() == 0) return m;
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > kSymmetryTolerance * scale) {
        std::ostringstream msg;
        msg << "matrix_sqrt_psd: matrix is not symmetric (max |M - M^T| = " << asym << ")";
        throw InputError(msg.str());
    }
    const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    if (solver.info() != Eigen::Success) throw Error("matrix_sqrt_psd: eigendecomposition failed");
    Eigen::VectorXd values = solver.eigenvalues();
    const double radius = std::max(1.0, values.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (values(i) < 0.0) {
            if (values(i) < -kNegativeEigenTolerance * radius) {
                std::ostringstream msg;
                msg << "matrix_sqrt_psd: matrix is indefinite (eigenvalue " << values(i) << ")";
                throw InputError(msg.str());
            }
            values(i) = 0.0;
        }
    }
    const Eigen::MatrixXd& v = solver.eigenvectors();
    return v * values.cwiseSqrt().asDiagonal() * v.transpose();
}

GaussianSummary fit_gaussian(const Eigen::MatrixXd& samples, double shrinkage) {
    if (samples.rows() < 2) throw InputError("fit_gaussian: need at least 2 samples");
    GaussianSummary g;
    g.mean = samples.colwise().mean().transpose();
    const Eigen::MatrixXd centered = samples.rowwise() - g.mean.transpose();
    g.covariance = (centered.transpose() * centered) / static_cast<double>(samples.rows() - 1);
    g.covariance = 0.5 * (g.covariance + g.covariance.transpose());
    if (shrinkage > 0.0) g.covariance.diagonal().array() += shrinkage;
    return g;
}

namespace {

// Tr(C_a + C_b - 2 (C_a^1/2 C_b C_a^1/2)^1/2)
double covariance_trace_term(const Eigen::MatrixXd& ca, const Eigen::MatrixXd& cb) {
    const Eigen::MatrixXd root_a = matrix_sqrt_psd(ca);
    Eigen::MatrixXd inner = root_a * cb * root_a;
    inner = 0.5 * (inner + inner.transpose());
    return ca.trace() + cb.trace() - 2.0 * matrix_sqrt_psd(inner).trace();
}

} // namespace

double frechet_distance(const GaussianSummary& a, const GaussianSummary& b) {
    if (a.mean.size() != b.mean.size()) throw InputError("frechet_distance: dimension mismatch");
    const double mean_term = (a.mean - b.mean).squaredNorm();
    return std::max(0.0, mean_term + covariance_trace_term(a.covariance, b.covariance));
}

FidResult fid(const Eigen::MatrixXd& real, const Eigen::MatrixXd& synth) {
    if (real.cols() != synth.cols()) {
        throw InputError("fid: dimension mismatch (" + std::to_string(real.cols()) + " vs " +
                         std::to_string(synth.cols()) + ")");
    }
    if (real.rows() < 2 || synth.rows() < 2) throw InputError("fid: each side needs at least 2 rows");
    FidResult r;
    r.n_real = real.rows();
    r.n_synth = synth.rows();
    r.dim = real.cols();
    const bool low_real = real.rows() <= real.cols();
    const bool low_synth = synth.rows() <= synth.cols();
    r.low_sample_mode = low_real || low_synth;
    const GaussianSummary a = fit_gaussian(real, low_real ? kLowSampleShrinkage : 0.0);
    const GaussianSummary b = fit_gaussian(synth, low_synth ? kLowSampleShrinkage : 0.0);
    r.mean_term = (a.mean - b.mean).squaredNorm();
    r.trace_term = covariance_trace_term(a.covariance, b.covariance);
    r.value = std::max(0.0, r.mean_term + r.trace_term);
    return r;
}

FidResult fid(const EmbeddingMatrix& real, const EmbeddingMatrix& synth) {
    return fid(real.vectors(), synth.vectors());
}

} // namespace synthaudit
