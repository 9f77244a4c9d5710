#pragma once

#include "spatiocorr/clustering.hpp"
#include "spatiocorr/ingest.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace spatiocorr {

/// r_i(t) = scale * (beta_i m(t) + gamma_i f_c(i)(t) + sigma eps_i(t)) with
/// independent unit-variance shocks. Entities with cluster -1 carry no cluster factor.
struct FactorModelSpec {
    std::size_t entity_count = 0;
    std::size_t quarter_count = 0; // number of returns; the price panel has one more quarter
    std::vector<double> betas;     // market loading per entity
    std::vector<int> clusters;     // cluster id per entity (-1 = none)
    std::vector<double> gammas;    // cluster-factor loading per entity
    double noise = 1.0;
    double return_scale = 0.01;
    /// Student-t degrees of freedom for all shocks (rescaled to unit variance); nullopt = Gaussian.
    std::optional<double> student_t_dof;
    Quarter start{1975, 1};
    std::uint64_t seed = 0;

    void validate() const;

    /// Equal-size contiguous clusters with uniform loadings.
    static FactorModelSpec blocks(std::size_t entity_count, std::size_t quarter_count, std::size_t cluster_count,
                                  double beta, double gamma, double noise, std::uint64_t seed);
};

struct SyntheticPanel {
    PricePanel prices;
    Partition planted;
    Series market;                      // planted market returns, aligned with the return panel
    std::vector<Series> cluster_factors; // scaled like the returns
};

SyntheticPanel generate_factor_panel(const FactorModelSpec& spec);

/// Correlation implied by the model, for convergence checks.
Eigen::MatrixXd model_correlation(const FactorModelSpec& spec);

} // namespace spatiocorr
