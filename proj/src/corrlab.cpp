#include "spatiocorr/corrlab.hpp"

#include "spatiocorr/error.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>

namespace spatiocorr {

namespace {

// A centered sample whose spread is below this fraction of its magnitude is
// treated as constant; rounding in the mean leaves ~1e-17 residue otherwise.
constexpr double kRelativeVarianceFloor = 1e-13;

std::string row_label(const std::vector<std::string>& labels, Eigen::Index i) {
    const auto k = static_cast<std::size_t>(i);
    return k < labels.size() ? "'" + labels[k] + "'" : "row " + std::to_string(k);
}

bool is_constant(const Eigen::Ref<const Eigen::VectorXd>& centered, const Eigen::Ref<const Eigen::VectorXd>& raw) {
    const double spread = centered.norm() / std::sqrt(static_cast<double>(centered.size()));
    const double scale = raw.cwiseAbs().maxCoeff();
    return !(spread > kRelativeVarianceFloor * scale) || scale == 0.0;
}

void finish_correlation(Eigen::MatrixXd& c) {
    c = 0.5 * (c + c.transpose()).eval();
    c = c.cwiseMax(-1.0).cwiseMin(1.0);
    c.diagonal().setOnes();
}

} // namespace

double pearson(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
    if (a.size() != b.size() || a.size() < 2) throw InvalidArgument("pearson: samples must have equal length >= 2");
    const Eigen::VectorXd ca = a.array() - a.mean();
    const Eigen::VectorXd cb = b.array() - b.mean();
    if (is_constant(ca, a) || is_constant(cb, b)) throw DegenerateInput("pearson: constant sample");
    const double r = ca.dot(cb) / (ca.norm() * cb.norm());
    return std::clamp(r, -1.0, 1.0);
}

Eigen::MatrixXd correlation_of_rows(const Eigen::Ref<const Eigen::MatrixXd>& block,
                                    const std::vector<std::string>& labels) {
    if (block.cols() < 2) throw InvalidArgument("correlation needs at least two observations");
    const Eigen::VectorXd means = block.rowwise().mean();
    Eigen::MatrixXd centered = block.colwise() - means;
    const double s = static_cast<double>(block.cols());
    Eigen::VectorXd sd(block.rows());
    for (Eigen::Index i = 0; i < block.rows(); ++i) {
        if (is_constant(centered.row(i).transpose(), block.row(i).transpose()))
            throw DegenerateInput("zero variance for " + row_label(labels, i));
        sd(i) = centered.row(i).norm() / std::sqrt(s);
    }
    Eigen::MatrixXd c = (centered * centered.transpose()) / s;
    c = sd.cwiseInverse().asDiagonal() * c * sd.cwiseInverse().asDiagonal();
    finish_correlation(c);
    return c;
}

CorrelationMatrix pearson_matrix(const ReturnPanel& panel, const WindowSpec& window) {
    CorrelationMatrix out;
    out.window = window;
    out.entities = panel.entities;
    try {
        out.values = correlation_of_rows(window_block(panel, window), panel.entities);
    } catch (const DegenerateInput& e) {
        throw DegenerateInput(std::string(e.what()) + " in window ending " + window.end.to_string());
    }
    return out;
}

MeanCorrelation mean_correlation(const Eigen::Ref<const Eigen::MatrixXd>& c) {
    const Eigen::Index n = c.rows();
    if (n < 2 || c.cols() != n) throw InvalidArgument("mean_correlation needs a square matrix with N >= 2");
    double sum = 0.0;
    double sum_sq = 0.0;
    const double count = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
    for (Eigen::Index j = 1; j < n; ++j)
        for (Eigen::Index i = 0; i < j; ++i) sum += c(i, j);
    const double mean = sum / count;
    for (Eigen::Index j = 1; j < n; ++j)
        for (Eigen::Index i = 0; i < j; ++i) sum_sq += (c(i, j) - mean) * (c(i, j) - mean);
    return MeanCorrelation{mean, std::sqrt(sum_sq / count)};
}

double corr_critical_value(std::size_t size_s, double alpha, std::size_t conditioning) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("significance level must lie in (0, 1)");
    if (size_s < 3 + conditioning) throw InvalidArgument("window too short for a critical correlation");
    const double df = static_cast<double>(size_s - 2 - conditioning);
    const boost::math::students_t dist(df);
    const double t = boost::math::quantile(dist, 1.0 - alpha / 2.0);
    return t / std::sqrt(t * t + df);
}

Eigen::MatrixXd partial_from_correlations(const Eigen::Ref<const Eigen::MatrixXd>& c,
                                          const Eigen::Ref<const Eigen::VectorXd>& c_market,
                                          const std::vector<std::string>& labels) {
    const Eigen::Index n = c.rows();
    if (c.cols() != n || c_market.size() != n) throw InvalidArgument("partial correlation: dimension mismatch");
    Eigen::VectorXd resid(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double r2 = c_market(i) * c_market(i);
        if (!(r2 < 1.0 - 1e-12))
            throw DegenerateInput("degenerate conditioning: " + row_label(labels, i) +
                                  " is perfectly correlated with the market series");
        resid(i) = std::sqrt(1.0 - r2);
    }
    Eigen::MatrixXd p = (c - c_market * c_market.transpose()).cwiseQuotient(resid * resid.transpose());
    if (!p.allFinite()) throw DegenerateInput("partial correlation produced non-finite entries");
    finish_correlation(p);
    return p;
}

PartialCorrelationMatrix partial_correlation_matrix(const ReturnPanel& panel, const WindowSpec& window,
                                                    const Series& market) {
    const Eigen::MatrixXd block = window_block(panel, window);
    const Eigen::VectorXd m = window_slice(market, panel, window);

    PartialCorrelationMatrix out;
    out.window = window;
    out.entities = panel.entities;
    out.conditioning = market.name;

    Eigen::MatrixXd c;
    Eigen::VectorXd cm(block.rows());
    try {
        c = correlation_of_rows(block, panel.entities);
        for (Eigen::Index i = 0; i < block.rows(); ++i) cm(i) = pearson(block.row(i).transpose(), m);
        out.values = partial_from_correlations(c, cm, panel.entities);
    } catch (const DegenerateInput& e) {
        throw DegenerateInput(std::string(e.what()) + " in window ending " + window.end.to_string());
    }
    return out;
}

} // namespace spatiocorr
