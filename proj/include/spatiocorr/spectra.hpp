#pragma once

#include "spatiocorr/corrlab.hpp"
#include "spatiocorr/ingest.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <vector>

namespace spatiocorr {

enum class SignConvention {
    ComponentSum,      // every eigenvector has a nonnegative component sum
    ContinuityAligned, // additionally flipped to agree with the previous window
};

/// Eigenvalues in descending order; column n-1 of `eigenvectors` is u_n.
struct SpectralDecomposition {
    WindowSpec window;
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;
    SignConvention sign_convention = SignConvention::ComponentSum;

    std::size_t size() const noexcept { return static_cast<std::size_t>(eigenvalues.size()); }
    /// 1-based access to u_n.
    Eigen::VectorXd vector(std::size_t n) const;
};

/// Marchenko-Pastur support for aspect ratio Q = T/N >= 1.
struct MPBounds {
    double q_ratio = 1.0;
    double lambda_min = 0.0;
    double lambda_max = 4.0;
};

enum class NullCriterion {
    Pooled,       // 95th percentile of all pooled eigenvalues
    LargestEigen, // 95th percentile of the per-round largest eigenvalue
};

/// Eigenvalues of correlation matrices computed from independently shuffled series.
struct NullSpectrum {
    std::vector<double> pooled;    // rounds x N, round-major
    std::vector<double> round_max; // largest eigenvalue of each round
    double lambda_5pct = 0.0;
    NullCriterion criterion = NullCriterion::Pooled;
    double significance = 0.05;
    std::size_t rounds = 0;
    std::uint64_t seed = 0;
};

struct NullOptions {
    std::size_t rounds = 1000;
    std::uint64_t seed = 0;
    NullCriterion criterion = NullCriterion::Pooled;
    double significance = 0.05;
    std::size_t threads = 1;
};

/// 1-based eigen-indices passing each test, ascending.
struct DeviatingEigenvalues {
    std::vector<std::size_t> above_mp;
    std::vector<std::size_t> above_null;
};

/// Symmetric eigendecomposition with the sign convention applied. When
/// `previous` is given (same N), each u_n is flipped if that increases its dot
/// product with the predecessor's u_n.
SpectralDecomposition eigendecompose(const Eigen::Ref<const Eigen::MatrixXd>& c,
                                     const SpectralDecomposition* previous = nullptr);
SpectralDecomposition eigendecompose(const CorrelationMatrix& c, const SpectralDecomposition* previous = nullptr);

/// Applies continuity alignment to `current` against `previous` in place.
void align_to(SpectralDecomposition& current, const SpectralDecomposition& previous);

MPBounds mp_bounds(double q_ratio);
double mp_density(double lambda, double q_ratio);

/// Linear-interpolation (type 7) quantile of `samples`, p in [0, 1].
double quantile(std::vector<double> samples, double p);

NullSpectrum null_spectrum(const ReturnPanel& panel, const WindowSpec& window, const NullOptions& options);

/// Shuffled-null spectrum of an entity x time block.
NullSpectrum null_spectrum(const Eigen::Ref<const Eigen::MatrixXd>& block, const NullOptions& options);

DeviatingEigenvalues deviating_eigenvalues(const SpectralDecomposition& spec, const MPBounds& bounds,
                                           const NullSpectrum& null);

/// E_n = (lambda_1 + ... + lambda_n) / N.
double absorption_ratio(const SpectralDecomposition& spec, std::size_t n);

/// Sum of squared negative components.
double negative_weight_V(const Eigen::Ref<const Eigen::VectorXd>& u);

/// Mean eigenvalue curves of small correlation matrices built from one entity
/// drawn at random from each cluster.
struct ClusterSampledAbsorption {
    std::vector<Quarter> window_ends;
    Eigen::MatrixXd mean_eigenvalues; // window x cluster count, descending per row
    Eigen::MatrixXd absorption;       // window x cluster count, E_n of the mean eigenvalues
    std::size_t resamples = 0;
    std::size_t window_size = 0;
};

ClusterSampledAbsorption cluster_sampled_absorption(const ReturnPanel& panel,
                                                    const std::vector<std::vector<std::size_t>>& clusters,
                                                    std::size_t window_size, std::size_t resamples, std::uint64_t seed);

} // namespace spatiocorr
