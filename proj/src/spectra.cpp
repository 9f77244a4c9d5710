#include "spatiocorr/spectra.hpp"

#include "spatiocorr/error.hpp"
#include "spatiocorr/random.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace spatiocorr {

namespace {

constexpr double kSymmetryTolerance = 1e-12;

Eigen::VectorXd descending_eigenvalues(const Eigen::MatrixXd& c) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(c, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw DegenerateInput("eigensolver failed to converge");
    return solver.eigenvalues().reverse();
}

} // namespace

Eigen::VectorXd SpectralDecomposition::vector(std::size_t n) const {
    if (n < 1 || n > size()) throw InvalidArgument("eigen-index " + std::to_string(n) + " out of range");
    return eigenvectors.col(static_cast<Eigen::Index>(n - 1));
}

SpectralDecomposition eigendecompose(const Eigen::Ref<const Eigen::MatrixXd>& c, const SpectralDecomposition* previous) {
    const Eigen::Index n = c.rows();
    if (n == 0 || c.cols() != n) throw InvalidArgument("eigendecompose: matrix must be square and nonempty");
    if (!c.allFinite()) throw InvalidArgument("eigendecompose: non-finite entries");
    const double asym = (c - c.transpose()).cwiseAbs().maxCoeff();
    if (asym > kSymmetryTolerance * std::max(1.0, c.cwiseAbs().maxCoeff()))
        throw InvalidArgument("eigendecompose: matrix is not symmetric (max asymmetry " + std::to_string(asym) + ")");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(c);
    if (solver.info() != Eigen::Success) throw DegenerateInput("eigensolver failed to converge");

    SpectralDecomposition out;
    out.eigenvalues = solver.eigenvalues().reverse();
    out.eigenvectors = solver.eigenvectors().rowwise().reverse();
    for (Eigen::Index k = 0; k < n; ++k)
        if (out.eigenvectors.col(k).sum() < 0.0) out.eigenvectors.col(k) *= -1.0;
    if (previous) align_to(out, *previous);
    return out;
}

SpectralDecomposition eigendecompose(const CorrelationMatrix& c, const SpectralDecomposition* previous) {
    SpectralDecomposition out = eigendecompose(c.values, previous);
    out.window = c.window;
    return out;
}

void align_to(SpectralDecomposition& current, const SpectralDecomposition& previous) {
    if (previous.size() != current.size()) throw InvalidArgument("align_to: dimension mismatch");
    for (Eigen::Index k = 0; k < current.eigenvectors.cols(); ++k)
        if (current.eigenvectors.col(k).dot(previous.eigenvectors.col(k)) < 0.0) current.eigenvectors.col(k) *= -1.0;
    current.sign_convention = SignConvention::ContinuityAligned;
}

MPBounds mp_bounds(double q_ratio) {
    if (!(q_ratio >= 1.0) || !std::isfinite(q_ratio)) throw InvalidArgument("Marchenko-Pastur ratio Q = T/N must be >= 1");
    const double inv = 1.0 / q_ratio;
    const double root = 2.0 * std::sqrt(inv);
    return MPBounds{q_ratio, std::max(0.0, 1.0 + inv - root), 1.0 + inv + root};
}

double mp_density(double lambda, double q_ratio) {
    const MPBounds b = mp_bounds(q_ratio);
    if (lambda <= b.lambda_min || lambda >= b.lambda_max || lambda <= 0.0) return 0.0;
    return q_ratio / (2.0 * std::numbers::pi) * std::sqrt((b.lambda_max - lambda) * (lambda - b.lambda_min)) / lambda;
}

double quantile(std::vector<double> samples, double p) {
    if (samples.empty()) throw InvalidArgument("quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("quantile level must lie in [0, 1]");
    std::sort(samples.begin(), samples.end());
    const double h = p * static_cast<double>(samples.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, samples.size() - 1);
    return samples[lo] + (h - static_cast<double>(lo)) * (samples[hi] - samples[lo]);
}

NullSpectrum null_spectrum(const Eigen::Ref<const Eigen::MatrixXd>& block, const NullOptions& options) {
    if (options.rounds == 0) throw InvalidArgument("null spectrum needs at least one round");
    if (!(options.significance > 0.0 && options.significance < 1.0))
        throw InvalidArgument("null significance must lie in (0, 1)");
    const auto n = static_cast<std::size_t>(block.rows());
    const Eigen::MatrixXd source = block;

    NullSpectrum out;
    out.rounds = options.rounds;
    out.seed = options.seed;
    out.criterion = options.criterion;
    out.significance = options.significance;
    out.pooled.assign(options.rounds * n, 0.0);
    out.round_max.assign(options.rounds, 0.0);

    parallel_for(options.rounds, options.threads, [&](std::size_t round) {
        Rng rng(derive_seed(options.seed, {round}));
        Eigen::MatrixXd shuffled = source;
        for (Eigen::Index i = 0; i < shuffled.rows(); ++i) {
            Eigen::VectorXd row = shuffled.row(i).transpose();
            std::shuffle(row.data(), row.data() + row.size(), rng);
            shuffled.row(i) = row.transpose();
        }
        const Eigen::VectorXd eig = descending_eigenvalues(correlation_of_rows(shuffled));
        std::copy(eig.data(), eig.data() + eig.size(), out.pooled.begin() + static_cast<std::ptrdiff_t>(round * n));
        out.round_max[round] = eig(0);
    });

    const double level = 1.0 - options.significance;
    out.lambda_5pct = options.criterion == NullCriterion::Pooled ? quantile(out.pooled, level)
                                                                 : quantile(out.round_max, level);
    return out;
}

NullSpectrum null_spectrum(const ReturnPanel& panel, const WindowSpec& window, const NullOptions& options) {
    return null_spectrum(window_block(panel, window), options);
}

DeviatingEigenvalues deviating_eigenvalues(const SpectralDecomposition& spec, const MPBounds& bounds,
                                           const NullSpectrum& null) {
    if (!null.pooled.empty() && null.rounds > 0 && null.pooled.size() != null.rounds * spec.size())
        throw InvalidArgument("null spectrum was computed for a different entity count");
    DeviatingEigenvalues out;
    for (std::size_t n = 1; n <= spec.size(); ++n) {
        const double lambda = spec.eigenvalues(static_cast<Eigen::Index>(n - 1));
        if (lambda > bounds.lambda_max) out.above_mp.push_back(n);
        if (lambda > null.lambda_5pct) out.above_null.push_back(n);
    }
    return out;
}

double absorption_ratio(const SpectralDecomposition& spec, std::size_t n) {
    if (n < 1 || n > spec.size())
        throw InvalidArgument("absorption ratio index " + std::to_string(n) + " outside [1, " +
                              std::to_string(spec.size()) + "]");
    return spec.eigenvalues.head(static_cast<Eigen::Index>(n)).sum() / static_cast<double>(spec.size());
}

double negative_weight_V(const Eigen::Ref<const Eigen::VectorXd>& u) {
    double v = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i)
        if (u(i) < 0.0) v += u(i) * u(i);
    return v;
}

ClusterSampledAbsorption cluster_sampled_absorption(const ReturnPanel& panel,
                                                    const std::vector<std::vector<std::size_t>>& clusters,
                                                    std::size_t window_size, std::size_t resamples,
                                                    std::uint64_t seed) {
    const std::size_t k = clusters.size();
    if (k == 0) throw InvalidArgument("cluster-sampled absorption needs at least one cluster");
    for (std::size_t c = 0; c < k; ++c) {
        if (clusters[c].empty()) throw InvalidArgument("cluster " + std::to_string(c + 1) + " is empty");
        for (auto e : clusters[c])
            if (e >= panel.entity_count()) throw InvalidArgument("cluster member index out of range");
    }
    if (window_size < k)
        throw InvalidArgument("window of " + std::to_string(window_size) + " quarters is shorter than the cluster count " +
                              std::to_string(k));
    if (resamples == 0) throw InvalidArgument("resamples must be >= 1");
    if (panel.quarter_count() < window_size) throw InvalidArgument("panel shorter than the sampling window");

    const std::size_t nwin = panel.quarter_count() - window_size + 1;
    ClusterSampledAbsorption out;
    out.resamples = resamples;
    out.window_size = window_size;
    out.mean_eigenvalues = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nwin), static_cast<Eigen::Index>(k));
    for (std::size_t w = 0; w < nwin; ++w) out.window_ends.push_back(panel.quarters[w + window_size - 1]);

    Eigen::MatrixXd picked(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(panel.quarter_count()));
    for (std::size_t r = 0; r < resamples; ++r) {
        Rng rng(derive_seed(seed, {r}));
        std::vector<std::string> labels;
        for (std::size_t c = 0; c < k; ++c) {
            std::uniform_int_distribution<std::size_t> pick(0, clusters[c].size() - 1);
            const std::size_t e = clusters[c][pick(rng)];
            picked.row(static_cast<Eigen::Index>(c)) = panel.returns.row(static_cast<Eigen::Index>(e));
            labels.push_back(panel.entities[e]);
        }
        for (std::size_t w = 0; w < nwin; ++w) {
            const Eigen::MatrixXd block =
                picked.middleCols(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(window_size));
            out.mean_eigenvalues.row(static_cast<Eigen::Index>(w)) +=
                descending_eigenvalues(correlation_of_rows(block, labels)).transpose();
        }
    }
    out.mean_eigenvalues /= static_cast<double>(resamples);

    out.absorption.resizeLike(out.mean_eigenvalues);
    for (Eigen::Index w = 0; w < out.mean_eigenvalues.rows(); ++w) {
        double acc = 0.0;
        for (Eigen::Index n = 0; n < out.mean_eigenvalues.cols(); ++n) {
            acc += out.mean_eigenvalues(w, n);
            out.absorption(w, n) = acc / static_cast<double>(k);
        }
    }
    return out;
}

} // namespace spatiocorr
