#pragma once

#include "spatiocorr/ingest.hpp"
#include "spatiocorr/spectra.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <vector>

namespace spatiocorr {

/// Number of leading eigen-indices whose market effect is tracked.
inline constexpr std::size_t kTrackedEigen = 4;

/// R_n(t') = u_n . r(t') over the window.
Eigen::VectorXd eigenportfolio_returns(const Eigen::Ref<const Eigen::VectorXd>& u, const ReturnPanel& panel,
                                       const WindowSpec& window);

/// Slope of the no-intercept least-squares fit of standardized Rn on standardized R.
double ols_k(const Eigen::Ref<const Eigen::VectorXd>& rn, const Eigen::Ref<const Eigen::VectorXd>& r);

struct RobustFit {
    double k = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct RobustOptions {
    double tuning = 4.685;
    double tolerance = 1e-8;
    int max_iterations = 50;
};

/// Bisquare IRLS slope on the standardized series, started from the OLS slope.
/// Residual scale is the normalized median absolute deviation of the current
/// residuals. Non-convergence is reported in the result, never thrown.
RobustFit robust_k(const Eigen::Ref<const Eigen::VectorXd>& rn, const Eigen::Ref<const Eigen::VectorXd>& r,
                   const RobustOptions& options = {});

struct MarketEffectSeries {
    std::vector<Quarter> window_ends;
    Eigen::MatrixXd k_ols;    // window x tracked eigen-index
    Eigen::MatrixXd k_robust; // window x tracked eigen-index
    std::vector<std::array<bool, kTrackedEigen>> robust_converged;

    std::size_t window_count() const noexcept { return window_ends.size(); }
    std::size_t tracked() const noexcept { return static_cast<std::size_t>(k_ols.cols()); }
};

/// Market effect from precomputed (continuity-aligned) decompositions, one per window.
MarketEffectSeries market_effect_series(const ReturnPanel& panel, const Series& market,
                                        const std::vector<SpectralDecomposition>& decompositions,
                                        std::size_t threads = 1);

/// Computes all windows of size `size_s`, aligning eigenvector signs across windows.
MarketEffectSeries market_effect_series(const ReturnPanel& panel, const Series& market, std::size_t size_s,
                                        std::size_t threads = 1);

/// Decompositions of every window, continuity-aligned in time order.
std::vector<SpectralDecomposition> rolling_decompositions(const ReturnPanel& panel,
                                                          const std::vector<WindowSpec>& windows,
                                                          std::size_t threads = 1);

enum class Estimator { Ols, Robust };

struct RegimeOptions {
    double threshold = 0.25;
    Estimator estimator = Estimator::Ols;
};

struct ShiftFlag {
    std::size_t eigen_index = 0; // 1-based
    double magnitude = 0.0;      // |k_n(t) - k_n(t-1)|
};

/// A flagged boundary between consecutive windows `before` and `after`.
struct ShiftPoint {
    Quarter before;
    Quarter after;
    std::vector<ShiftFlag> flags;
};

struct Regime {
    Quarter start;
    Quarter end;
};

struct RegimeTimeline {
    double threshold = 0.25;
    Estimator estimator = Estimator::Ols;
    std::vector<ShiftPoint> shifts;
    std::vector<Regime> regimes;
};

RegimeTimeline detect_regime_shifts(const MarketEffectSeries& series, const RegimeOptions& options = {});

} // namespace spatiocorr
