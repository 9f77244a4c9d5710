#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <vector>

namespace spatiocorr {

/// Simulated-annealing schedule. T_k = T_0 * cooling^k; each temperature
/// proposes round(moves_per_entity * N) moves drawn uniformly from adjacent
/// transposition, pair swap and segment reversal. The run stops after
/// `stall_temperatures` consecutive temperatures without an accepted
/// cost-changing move, or after `max_temperatures`.
struct AnnealSchedule {
    double initial_temperature = 0.0; // <= 0: std of the cost change over `probe_moves` random moves
    double cooling = 0.95;
    double moves_per_entity = 20.0;
    int stall_temperatures = 5;
    int max_temperatures = 5000;
    int probe_moves = 100;
};

/// A seriation result. `permutation[p]` is the entity placed at position p.
struct Ordering {
    std::vector<std::size_t> permutation;
    double cost = 0.0;
    std::uint64_t seed = 0;
    AnnealSchedule schedule;
    std::size_t restarts = 0;
};

/// Throws InvalidArgument unless `order` is a permutation of 0..n-1.
void check_permutation(const std::vector<std::size_t>& order, std::size_t n);

/// Q = sum over ordered position pairs (a, b) of |a - b| * P[order[a], order[b]].
double seriation_cost(const Eigen::Ref<const Eigen::MatrixXd>& p, const std::vector<std::size_t>& order);

/// Reverses `order` when its first entity has a larger index than its last.
void canonical_orientation(std::vector<std::size_t>& order);

/// Exhaustive global minimizer for N <= 9, one representative per reversal
/// pair. Ties go to the lexicographically smallest permutation.
Ordering brute_force_order(const Eigen::Ref<const Eigen::MatrixXd>& p);

/// Best of `restarts` annealing runs, each starting from the input order with
/// seed derive_seed(seed, {restart}). Ties go to the lowest restart index.
Ordering anneal_order(const Eigen::Ref<const Eigen::MatrixXd>& p, const AnnealSchedule& schedule,
                      std::size_t restarts, std::uint64_t seed, std::size_t threads = 1);

} // namespace spatiocorr
