#pragma once

#include "spatiocorr/ingest.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace spatiocorr {

/// Pearson correlation matrix of one window: symmetric, unit diagonal, entries in [-1, 1].
struct CorrelationMatrix {
    WindowSpec window;
    std::vector<std::string> entities;
    Eigen::MatrixXd values;
};

/// Correlations conditioned on a single market series.
struct PartialCorrelationMatrix {
    WindowSpec window;
    std::vector<std::string> entities;
    std::string conditioning;
    Eigen::MatrixXd values;
};

struct MeanCorrelation {
    double mean = 0.0;
    double stddev = 0.0;
};

/// Pearson correlation of two equal-length samples. Uses the same (population)
/// normalization in numerator and denominator. Throws DegenerateInput when
/// either sample is constant.
double pearson(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b);

/// Correlation matrix of the rows of `block` (entity x time).
/// `labels` name rows in error messages and may be empty.
Eigen::MatrixXd correlation_of_rows(const Eigen::Ref<const Eigen::MatrixXd>& block,
                                    const std::vector<std::string>& labels = {});

CorrelationMatrix pearson_matrix(const ReturnPanel& panel, const WindowSpec& window);

/// Mean and standard deviation of the strictly upper triangle.
MeanCorrelation mean_correlation(const Eigen::Ref<const Eigen::MatrixXd>& c);
inline MeanCorrelation mean_correlation(const CorrelationMatrix& c) { return mean_correlation(c.values); }

/// Two-sided critical |r| under independence: r = t / sqrt(t^2 + df) with
/// df = size_s - 2 - conditioning and t the (1 - alpha/2) Student-t quantile.
/// `conditioning` = 1 gives the critical value of a first-order partial correlation.
double corr_critical_value(std::size_t size_s, double alpha, std::size_t conditioning = 0);

/// P_ij = (C_ij - C_i,m C_j,m) / sqrt((1 - C_i,m^2)(1 - C_j,m^2)) against market `market`.
PartialCorrelationMatrix partial_correlation_matrix(const ReturnPanel& panel, const WindowSpec& window,
                                                    const Series& market);

/// Same formula from a correlation matrix and the per-entity correlations with the market.
Eigen::MatrixXd partial_from_correlations(const Eigen::Ref<const Eigen::MatrixXd>& c,
                                          const Eigen::Ref<const Eigen::VectorXd>& c_market,
                                          const std::vector<std::string>& labels = {});

} // namespace spatiocorr
