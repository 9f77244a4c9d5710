#pragma once

#include "spatiocorr/quarter.hpp"
#include "spatiocorr/seriation.hpp"
#include "spatiocorr/spectra.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spatiocorr {

enum class Provenance { Direct, Consensus, Planted };

/// Disjoint clusters (each >= 2 members) plus isolated entities, covering 0..entity_count-1.
struct Partition {
    std::optional<Quarter> window;
    std::size_t entity_count = 0;
    std::vector<std::vector<std::size_t>> clusters;
    std::vector<std::size_t> isolated;
    Provenance provenance = Provenance::Direct;
    bool stable = true;

    /// Throws InvalidArgument when the partition invariants are violated.
    void validate() const;

    /// Sorts members, orders clusters by smallest member, sorts isolated.
    void canonicalize();

    /// Cluster id per entity (0-based cluster index), -1 for isolated.
    std::vector<int> membership() const;

    /// Same clusters and isolated set, ignoring order and metadata.
    bool same_grouping(const Partition& other) const;

    static Partition from_membership(const std::vector<int>& membership);
};

/// Co-cluster frequencies over restarts.
struct AffinityMatrix {
    Eigen::MatrixXd values;
    std::size_t restarts = 0;
};

/// Walks the seriated diagonal: a box starts at the first unassigned position
/// and absorbs the next entity while its mean P to the current box members
/// exceeds `min_gain`. Single-entity boxes become isolated entities.
Partition greedy_box_partition(const Eigen::Ref<const Eigen::MatrixXd>& p, const std::vector<std::size_t>& order,
                               double min_gain);

struct ConsensusOptions {
    std::size_t restarts = 200;
    std::uint64_t seed = 0;
    AnnealSchedule schedule;
    double min_gain = 0.0;          // box threshold on P
    double affinity_min_gain = 0.5; // box threshold on co-cluster frequencies
    int max_iterations = 10;
    std::size_t threads = 1;
};

struct ConsensusResult {
    Partition partition;
    AffinityMatrix affinity;         // frequencies of the restarts on P
    std::vector<std::size_t> order;  // seriation of the final affinity matrix
    double order_cost = 0.0;
    int iterations = 0;
};

/// Runs `restarts` seeded seriation + box partitions of P, accumulates the
/// affinity matrix, then repeats the procedure on the affinity matrix until two
/// consecutive partitions agree or max_iterations elapse (partition.stable =
/// false). Entities are processed in label order, so the result does not
/// depend on the input entity order.
ConsensusResult consensus_partition(const Eigen::Ref<const Eigen::MatrixXd>& p, const std::vector<std::string>& labels,
                                    const ConsensusOptions& options);

/// Newman-Girvan modularity on w_ij = max(P_ij, 0), i != j. Isolated entities
/// are singleton communities. Zero total weight gives 0.
double modularity(const Eigen::Ref<const Eigen::MatrixXd>& p, const Partition& partition);

/// lambda_n u_n u_n^T.
Eigen::MatrixXd component_matrix(const SpectralDecomposition& spec, std::size_t n);

/// G(lambda_n, cluster) for every n = 1..N, diagonal terms included. nullopt
/// when the cluster's correlation mass is zero.
std::optional<Eigen::VectorXd> information_ratio(const Eigen::Ref<const Eigen::MatrixXd>& c,
                                                 const SpectralDecomposition& spec,
                                                 const std::vector<std::size_t>& cluster);

enum class Symbol { Circle, Square, Diamond, Triangle };

std::string_view symbol_name(Symbol s) noexcept;

struct ClusterAttribution {
    std::vector<double> g;    // G(lambda_n) for n = 1..min(4, N)
    std::size_t winner = 0;   // 1-based eigen-index
    Symbol symbol = Symbol::Circle;
    bool lambda1_excluded = false;
};

/// Winner = argmax of G over n in 1..4, lowest index on ties. lambda_1 is
/// ineligible when V < v_threshold.
ClusterAttribution assign_symbol(const Eigen::Ref<const Eigen::VectorXd>& g, double v, double v_threshold = 0.05);

std::vector<ClusterAttribution> assign_symbols(const std::vector<Eigen::VectorXd>& g_per_cluster, double v,
                                               double v_threshold = 0.05);

} // namespace spatiocorr
