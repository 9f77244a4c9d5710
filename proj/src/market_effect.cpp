#include "spatiocorr/market_effect.hpp"

#include "spatiocorr/corrlab.hpp"
#include "spatiocorr/error.hpp"
#include "spatiocorr/random.hpp"

#include <algorithm>
#include <cmath>

namespace spatiocorr {

namespace {

Eigen::VectorXd standardize(const Eigen::Ref<const Eigen::VectorXd>& x, const char* what) {
    if (x.size() < 2) throw InvalidArgument(std::string(what) + ": series needs at least two observations");
    Eigen::VectorXd c = x.array() - x.mean();
    const double sd = c.norm() / std::sqrt(static_cast<double>(x.size()));
    const double scale = x.cwiseAbs().maxCoeff();
    if (!(sd > 1e-13 * scale) || scale == 0.0) throw DegenerateInput(std::string(what) + ": zero variance");
    return c / sd;
}

double median(Eigen::VectorXd v) {
    const auto n = static_cast<std::size_t>(v.size());
    std::sort(v.data(), v.data() + v.size());
    return n % 2 == 1 ? v(static_cast<Eigen::Index>(n / 2))
                      : 0.5 * (v(static_cast<Eigen::Index>(n / 2 - 1)) + v(static_cast<Eigen::Index>(n / 2)));
}

} // namespace

Eigen::VectorXd eigenportfolio_returns(const Eigen::Ref<const Eigen::VectorXd>& u, const ReturnPanel& panel,
                                       const WindowSpec& window) {
    if (static_cast<std::size_t>(u.size()) != panel.entity_count())
        throw InvalidArgument("eigenportfolio: weight dimension " + std::to_string(u.size()) +
                              " does not match entity count " + std::to_string(panel.entity_count()));
    if (std::abs(u.norm() - 1.0) > 1e-6) throw InvalidArgument("eigenportfolio: weights must form a unit vector");
    return window_block(panel, window).transpose() * u;
}

double ols_k(const Eigen::Ref<const Eigen::VectorXd>& rn, const Eigen::Ref<const Eigen::VectorXd>& r) {
    if (rn.size() != r.size()) throw InvalidArgument("ols_k: series lengths differ");
    const Eigen::VectorXd y = standardize(rn, "ols_k");
    const Eigen::VectorXd x = standardize(r, "ols_k");
    return std::clamp(x.dot(y) / x.squaredNorm(), -1.0, 1.0);
}

RobustFit robust_k(const Eigen::Ref<const Eigen::VectorXd>& rn, const Eigen::Ref<const Eigen::VectorXd>& r,
                   const RobustOptions& options) {
    if (rn.size() != r.size()) throw InvalidArgument("robust_k: series lengths differ");
    const Eigen::VectorXd y = standardize(rn, "robust_k");
    const Eigen::VectorXd x = standardize(r, "robust_k");

    RobustFit fit;
    fit.k = x.dot(y) / x.squaredNorm();
    for (int it = 1; it <= options.max_iterations; ++it) {
        fit.iterations = it;
        const Eigen::VectorXd resid = y - fit.k * x;
        const double mad = median((resid.array() - median(resid)).abs().matrix());
        const double scale = mad / 0.6744897501960817;
        if (!(scale > 1e-12)) { // exact fit on at least half the points
            fit.converged = true;
            return fit;
        }
        const Eigen::ArrayXd u = resid.array() / (options.tuning * scale);
        const Eigen::ArrayXd w = (u.abs() < 1.0).select((1.0 - u.square()).square(), 0.0);
        const double denom = (w * x.array().square()).sum();
        if (!(denom > 0.0)) return fit;
        const double next = (w * x.array() * y.array()).sum() / denom;
        const bool done = std::abs(next - fit.k) < options.tolerance;
        fit.k = next;
        if (done) {
            fit.converged = true;
            return fit;
        }
    }
    return fit;
}

std::vector<SpectralDecomposition> rolling_decompositions(const ReturnPanel& panel,
                                                          const std::vector<WindowSpec>& windows,
                                                          std::size_t threads) {
    std::vector<SpectralDecomposition> out(windows.size());
    parallel_for(windows.size(), threads,
                 [&](std::size_t w) { out[w] = eigendecompose(pearson_matrix(panel, windows[w])); });
    for (std::size_t w = 1; w < out.size(); ++w) align_to(out[w], out[w - 1]);
    return out;
}

MarketEffectSeries market_effect_series(const ReturnPanel& panel, const Series& market,
                                        const std::vector<SpectralDecomposition>& decompositions,
                                        std::size_t threads) {
    if (decompositions.empty()) throw InvalidArgument("market effect needs at least one window");
    const std::size_t tracked = std::min(kTrackedEigen, panel.entity_count());
    const auto rows = static_cast<Eigen::Index>(decompositions.size());
    const auto cols = static_cast<Eigen::Index>(tracked);

    MarketEffectSeries out;
    out.k_ols = Eigen::MatrixXd::Zero(rows, cols);
    out.k_robust = Eigen::MatrixXd::Zero(rows, cols);
    out.robust_converged.assign(decompositions.size(), {});
    for (const auto& d : decompositions) out.window_ends.push_back(d.window.end);

    parallel_for(decompositions.size(), threads, [&](std::size_t w) {
        const auto& d = decompositions[w];
        const Eigen::VectorXd m = window_slice(market, panel, d.window);
        for (std::size_t n = 1; n <= tracked; ++n) {
            const Eigen::VectorXd rn = eigenportfolio_returns(d.vector(n), panel, d.window);
            const auto row = static_cast<Eigen::Index>(w);
            const auto col = static_cast<Eigen::Index>(n - 1);
            try {
                out.k_ols(row, col) = ols_k(rn, m);
                const RobustFit fit = robust_k(rn, m);
                out.k_robust(row, col) = fit.k;
                out.robust_converged[w][n - 1] = fit.converged;
            } catch (const DegenerateInput& e) {
                throw DegenerateInput(std::string(e.what()) + " (eigen-index " + std::to_string(n) +
                                      ", window ending " + d.window.end.to_string() + ")");
            }
        }
    });
    return out;
}

MarketEffectSeries market_effect_series(const ReturnPanel& panel, const Series& market, std::size_t size_s,
                                        std::size_t threads) {
    return market_effect_series(panel, market, rolling_decompositions(panel, windows(panel, size_s), threads), threads);
}

RegimeTimeline detect_regime_shifts(const MarketEffectSeries& series, const RegimeOptions& options) {
    if (series.window_ends.empty()) throw InvalidArgument("regime detection needs at least one window");
    if (!(options.threshold >= 0.0)) throw InvalidArgument("regime threshold must be nonnegative");
    const Eigen::MatrixXd& k = options.estimator == Estimator::Ols ? series.k_ols : series.k_robust;

    RegimeTimeline out;
    out.threshold = options.threshold;
    out.estimator = options.estimator;
    Quarter start = series.window_ends.front();
    for (Eigen::Index w = 1; w < k.rows(); ++w) {
        ShiftPoint sp;
        sp.before = series.window_ends[static_cast<std::size_t>(w - 1)];
        sp.after = series.window_ends[static_cast<std::size_t>(w)];
        for (Eigen::Index n = 0; n < k.cols(); ++n) {
            const double delta = std::abs(k(w, n) - k(w - 1, n));
            if (delta > options.threshold) sp.flags.push_back({static_cast<std::size_t>(n + 1), delta});
        }
        if (!sp.flags.empty()) {
            out.regimes.push_back({start, sp.before});
            start = sp.after;
            out.shifts.push_back(std::move(sp));
        }
    }
    out.regimes.push_back({start, series.window_ends.back()});
    return out;
}

} // namespace spatiocorr
