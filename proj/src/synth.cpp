#include "spatiocorr/synth.hpp"

#include "spatiocorr/error.hpp"
#include "spatiocorr/random.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <cstdio>

namespace spatiocorr {

namespace {

class Shock {
public:
    Shock(std::optional<double> dof, std::uint64_t seed) : rng_(seed) {
        if (dof) {
            student_.emplace(*dof);
            scale_ = *dof > 2.0 ? std::sqrt((*dof - 2.0) / *dof) : 1.0;
        }
    }

    double operator()() { return student_ ? scale_ * (*student_)(rng_) : normal_(rng_); }

private:
    Rng rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::optional<std::student_t_distribution<double>> student_;
    double scale_ = 1.0;
};

int cluster_count(const std::vector<int>& clusters) {
    int k = 0;
    for (int c : clusters) k = std::max(k, c + 1);
    return k;
}

} // namespace

void FactorModelSpec::validate() const {
    if (entity_count == 0 || quarter_count == 0) throw InvalidArgument("factor model needs entities and quarters");
    if (betas.size() != entity_count || clusters.size() != entity_count || gammas.size() != entity_count)
        throw InvalidArgument("factor model: one beta, cluster id and gamma per entity required");
    for (std::size_t i = 0; i < entity_count; ++i) {
        if (!std::isfinite(betas[i]) || !std::isfinite(gammas[i])) throw InvalidArgument("factor loadings must be finite");
        if (clusters[i] < -1) throw InvalidArgument("cluster ids must be >= -1");
    }
    if (!(noise >= 0.0) || !std::isfinite(noise)) throw InvalidArgument("noise scale must be >= 0");
    if (!(return_scale > 0.0)) throw InvalidArgument("return scale must be > 0");
    if (student_t_dof && !(*student_t_dof > 0.0)) throw InvalidArgument("Student-t degrees of freedom must be > 0");
    const int k = cluster_count(clusters);
    for (int c = 0; c < k; ++c)
        if (std::count(clusters.begin(), clusters.end(), c) < 2)
            throw InvalidArgument("cluster " + std::to_string(c) + " has fewer than two members");
}

FactorModelSpec FactorModelSpec::blocks(std::size_t entity_count, std::size_t quarter_count, std::size_t cluster_count,
                                        double beta, double gamma, double noise, std::uint64_t seed) {
    FactorModelSpec s;
    s.entity_count = entity_count;
    s.quarter_count = quarter_count;
    s.betas.assign(entity_count, beta);
    s.gammas.assign(entity_count, cluster_count == 0 ? 0.0 : gamma);
    s.clusters.assign(entity_count, -1);
    if (cluster_count > 0)
        for (std::size_t i = 0; i < entity_count; ++i)
            s.clusters[i] = static_cast<int>(i * cluster_count / entity_count);
    s.noise = noise;
    s.seed = seed;
    return s;
}

SyntheticPanel generate_factor_panel(const FactorModelSpec& spec) {
    spec.validate();
    const std::size_t n = spec.entity_count;
    const std::size_t T = spec.quarter_count;
    const int k = cluster_count(spec.clusters);

    Shock shock(spec.student_t_dof, derive_seed(spec.seed, {hash_tag("factor-panel")}));
    Eigen::MatrixXd r(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(T));
    Eigen::VectorXd market(static_cast<Eigen::Index>(T));
    Eigen::MatrixXd factors = Eigen::MatrixXd::Zero(std::max(k, 0), static_cast<Eigen::Index>(T));
    for (std::size_t t = 0; t < T; ++t) {
        const auto tt = static_cast<Eigen::Index>(t);
        market(tt) = shock();
        for (int c = 0; c < k; ++c) factors(c, tt) = shock();
        for (std::size_t i = 0; i < n; ++i) {
            double v = spec.betas[i] * market(tt) + spec.noise * shock();
            if (spec.clusters[i] >= 0) v += spec.gammas[i] * factors(spec.clusters[i], tt);
            r(static_cast<Eigen::Index>(i), tt) = spec.return_scale * v;
        }
    }

    SyntheticPanel out;
    PricePanel& p = out.prices;
    for (std::size_t i = 0; i < n; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "E%02zu", i + 1);
        p.entities.emplace_back(name);
    }
    for (std::size_t t = 0; t <= T; ++t) p.quarters.push_back(spec.start.plus(static_cast<int>(t)));
    p.levels.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(T + 1));
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        double log_level = std::log(100.0);
        p.levels(ii, 0) = 100.0;
        for (std::size_t t = 0; t < T; ++t) {
            log_level += r(ii, static_cast<Eigen::Index>(t));
            p.levels(ii, static_cast<Eigen::Index>(t + 1)) = std::exp(log_level);
        }
    }

    out.planted = Partition::from_membership(spec.clusters);
    out.planted.provenance = Provenance::Planted;

    const std::vector<Quarter> return_quarters(p.quarters.begin() + 1, p.quarters.end());
    out.market = Series{"planted_market", return_quarters, spec.return_scale * market};
    for (int c = 0; c < k; ++c)
        out.cluster_factors.push_back(Series{"planted_factor_" + std::to_string(c + 1), return_quarters,
                                             spec.return_scale * factors.row(c).transpose()});
    return out;
}

Eigen::MatrixXd model_correlation(const FactorModelSpec& spec) {
    spec.validate();
    const auto n = static_cast<Eigen::Index>(spec.entity_count);
    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto a = static_cast<std::size_t>(i);
            const auto b = static_cast<std::size_t>(j);
            double v = spec.betas[a] * spec.betas[b];
            if (spec.clusters[a] >= 0 && spec.clusters[a] == spec.clusters[b]) v += spec.gammas[a] * spec.gammas[b];
            if (i == j) v += spec.noise * spec.noise;
            cov(i, j) = v;
        }
    const Eigen::VectorXd inv_sd = cov.diagonal().cwiseSqrt().cwiseInverse();
    return inv_sd.asDiagonal() * cov * inv_sd.asDiagonal();
}

} // namespace spatiocorr
