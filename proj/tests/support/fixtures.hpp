#pragma once

#include "spatiocorr/ingest.hpp"
#include "spatiocorr/random.hpp"

#include <Eigen/Dense>

#include <random>
#include <string>

namespace fixture {

inline spatiocorr::ReturnPanel gaussian_panel(std::size_t n, std::size_t t, std::uint64_t seed) {
    spatiocorr::Rng rng(seed);
    std::normal_distribution<double> z;
    spatiocorr::ReturnPanel p;
    for (std::size_t i = 0; i < n; ++i) p.entities.push_back("S" + std::to_string(i));
    for (std::size_t k = 0; k < t; ++k) p.quarters.push_back(spatiocorr::Quarter{1975, 1}.plus(static_cast<int>(k)));
    p.returns.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(t));
    for (Eigen::Index i = 0; i < p.returns.rows(); ++i)
        for (Eigen::Index k = 0; k < p.returns.cols(); ++k) p.returns(i, k) = z(rng);
    return p;
}

inline spatiocorr::Series series_of(const spatiocorr::ReturnPanel& p, const Eigen::VectorXd& v, std::string name) {
    return spatiocorr::Series{std::move(name), p.quarters, v};
}

// Symmetric matrix with unit diagonal and uniform off-diagonal entries in [lo, hi].
inline Eigen::MatrixXd random_symmetric(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    spatiocorr::Rng rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    const auto N = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(N, N);
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = i + 1; j < N; ++j) m(i, j) = m(j, i) = u(rng);
    return m;
}

// Block matrix: `within` inside blocks given by `block_of`, `between` elsewhere,
// plus symmetric Gaussian noise of scale `noise`; unit diagonal.
inline Eigen::MatrixXd block_matrix(const std::vector<int>& block_of, double within, double between, double noise,
                                    std::uint64_t seed) {
    spatiocorr::Rng rng(seed);
    std::normal_distribution<double> z(0.0, noise > 0 ? noise : 1.0);
    const auto N = static_cast<Eigen::Index>(block_of.size());
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(N, N);
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = i + 1; j < N; ++j) {
            const bool same = block_of[static_cast<std::size_t>(i)] >= 0 &&
                              block_of[static_cast<std::size_t>(i)] == block_of[static_cast<std::size_t>(j)];
            double v = same ? within : between;
            if (noise > 0) v += z(rng);
            m(i, j) = m(j, i) = v;
        }
    return m;
}

} // namespace fixture
