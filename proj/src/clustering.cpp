#include "spatiocorr/clustering.hpp"

#include "spatiocorr/error.hpp"
#include "spatiocorr/random.hpp"

#include <algorithm>
#include <numeric>

namespace spatiocorr {

namespace {

using Index = Eigen::Index;

Index ix(std::size_t i) { return static_cast<Index>(i); }

Eigen::MatrixXd co_cluster_frequency(const std::vector<Partition>& parts, std::size_t n) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(ix(n), ix(n));
    for (const auto& part : parts)
        for (const auto& cl : part.clusters)
            for (auto i : cl)
                for (auto j : cl) a(ix(i), ix(j)) += 1.0;
    a /= static_cast<double>(parts.size());
    a.diagonal().setOnes();
    return a;
}

// When every entry is 0 or 1 and "co-clustered" is transitive, the matrix is
// already a partition and seriation + boxes can only reproduce it.
std::optional<Partition> exact_blocks(const Eigen::MatrixXd& a) {
    const auto n = static_cast<std::size_t>(a.rows());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            if (a(i, j) != 0.0 && a(i, j) != 1.0) return std::nullopt;
    std::vector<int> member(n, -2);
    int next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (member[i] != -2) continue;
        std::vector<std::size_t> group;
        for (std::size_t j = 0; j < n; ++j)
            if (a(ix(i), ix(j)) == 1.0) group.push_back(j);
        for (auto g : group)
            for (auto h : group)
                if (a(ix(g), ix(h)) != 1.0) return std::nullopt;
        const int id = group.size() >= 2 ? next++ : -1;
        for (auto g : group) {
            if (member[g] != -2 && member[g] != id) return std::nullopt;
            member[g] = id;
        }
    }
    return Partition::from_membership(member);
}

struct RoundResult {
    Eigen::MatrixXd affinity;
    std::vector<Partition> partitions;
};

RoundResult consensus_round(const Eigen::MatrixXd& m, double gain, const ConsensusOptions& opt, std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(m.rows());
    RoundResult out;
    out.partitions.resize(opt.restarts);
    parallel_for(opt.restarts, opt.threads, [&](std::size_t r) {
        const Ordering ord = anneal_order(m, opt.schedule, 1, derive_seed(seed, {r}));
        out.partitions[r] = greedy_box_partition(m, ord.permutation, gain);
    });
    out.affinity = co_cluster_frequency(out.partitions, n);
    return out;
}

Partition remap(const Partition& part, const std::vector<std::size_t>& to_original) {
    Partition out = part;
    for (auto& cl : out.clusters)
        for (auto& e : cl) e = to_original[e];
    for (auto& e : out.isolated) e = to_original[e];
    out.canonicalize();
    return out;
}

} // namespace

void Partition::validate() const {
    std::vector<int> seen(entity_count, 0);
    auto mark = [&](std::size_t e) {
        if (e >= entity_count) throw InvalidArgument("partition member index out of range");
        if (seen[e]++) throw InvalidArgument("partition assigns entity " + std::to_string(e) + " twice");
    };
    for (const auto& cl : clusters) {
        if (cl.size() < 2) throw InvalidArgument("partition cluster with fewer than two members");
        for (auto e : cl) mark(e);
    }
    for (auto e : isolated) mark(e);
    for (std::size_t e = 0; e < entity_count; ++e)
        if (!seen[e]) throw InvalidArgument("partition does not cover entity " + std::to_string(e));
}

void Partition::canonicalize() {
    for (auto& cl : clusters) std::sort(cl.begin(), cl.end());
    std::sort(clusters.begin(), clusters.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
    std::sort(isolated.begin(), isolated.end());
}

std::vector<int> Partition::membership() const {
    std::vector<int> m(entity_count, -1);
    for (std::size_t c = 0; c < clusters.size(); ++c)
        for (auto e : clusters[c]) m[e] = static_cast<int>(c);
    return m;
}

bool Partition::same_grouping(const Partition& other) const {
    if (entity_count != other.entity_count) return false;
    Partition a = *this;
    Partition b = other;
    a.canonicalize();
    b.canonicalize();
    return a.clusters == b.clusters && a.isolated == b.isolated;
}

Partition Partition::from_membership(const std::vector<int>& membership) {
    Partition p;
    p.entity_count = membership.size();
    std::vector<std::vector<std::size_t>> groups;
    std::vector<int> remap;
    for (std::size_t e = 0; e < membership.size(); ++e) {
        const int id = membership[e];
        if (id < 0) continue;
        auto it = std::find(remap.begin(), remap.end(), id);
        if (it == remap.end()) {
            remap.push_back(id);
            groups.emplace_back();
            it = remap.end() - 1;
        }
        groups[static_cast<std::size_t>(it - remap.begin())].push_back(e);
    }
    for (auto& g : groups) {
        if (g.size() >= 2) p.clusters.push_back(std::move(g));
        else p.isolated.push_back(g.front());
    }
    for (std::size_t e = 0; e < membership.size(); ++e)
        if (membership[e] < 0) p.isolated.push_back(e);
    p.canonicalize();
    return p;
}

Partition greedy_box_partition(const Eigen::Ref<const Eigen::MatrixXd>& p, const std::vector<std::size_t>& order,
                               double min_gain) {
    const auto n = static_cast<std::size_t>(p.rows());
    if (p.cols() != p.rows()) throw InvalidArgument("box partition needs a square matrix");
    check_permutation(order, n);

    Partition out;
    out.entity_count = n;
    std::size_t pos = 0;
    while (pos < n) {
        std::vector<std::size_t> box{order[pos]};
        std::size_t next = pos + 1;
        for (; next < n; ++next) {
            const std::size_t cand = order[next];
            double sum = 0.0;
            for (auto b : box) sum += p(ix(cand), ix(b));
            if (!(sum / static_cast<double>(box.size()) > min_gain)) break;
            box.push_back(cand);
        }
        if (box.size() >= 2) out.clusters.push_back(std::move(box));
        else out.isolated.push_back(box.front());
        pos = next;
    }
    out.canonicalize();
    return out;
}

ConsensusResult consensus_partition(const Eigen::Ref<const Eigen::MatrixXd>& p, const std::vector<std::string>& labels,
                                    const ConsensusOptions& options) {
    const auto n = static_cast<std::size_t>(p.rows());
    if (p.cols() != p.rows() || n < 2) throw InvalidArgument("consensus clustering needs a square matrix with N >= 2");
    if (labels.size() != n) throw InvalidArgument("consensus clustering needs one label per entity");
    if (options.restarts == 0) throw InvalidArgument("consensus clustering needs at least one restart");
    if (options.max_iterations < 1) throw InvalidArgument("consensus clustering needs at least one iteration");

    // Canonical (label-sorted) processing order.
    std::vector<std::size_t> to_original(n);
    std::iota(to_original.begin(), to_original.end(), std::size_t{0});
    std::stable_sort(to_original.begin(), to_original.end(),
                     [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });
    Eigen::MatrixXd pc(ix(n), ix(n));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) pc(ix(a), ix(b)) = p(ix(to_original[a]), ix(to_original[b]));

    const std::uint64_t base = derive_seed(options.seed, {hash_tag("consensus")});
    RoundResult first = consensus_round(pc, options.min_gain, options, derive_seed(base, {0}));

    ConsensusResult result;
    result.affinity.restarts = options.restarts;
    result.affinity.values.resize(ix(n), ix(n));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            result.affinity.values(ix(to_original[a]), ix(to_original[b])) = first.affinity(ix(a), ix(b));

    Eigen::MatrixXd current = first.affinity;
    std::optional<Partition> previous;
    Partition part;
    bool stable = false;
    int it = 1;
    for (; it <= options.max_iterations; ++it) {
        if (auto blocks = exact_blocks(current)) {
            part = *blocks;
            stable = true;
            break;
        }
        const std::uint64_t iter_seed = derive_seed(base, {static_cast<std::uint64_t>(it)});
        const Ordering ord = anneal_order(current, options.schedule, 1, derive_seed(iter_seed, {hash_tag("order")}));
        part = greedy_box_partition(current, ord.permutation, options.affinity_min_gain);
        if (previous && previous->same_grouping(part)) {
            stable = true;
            break;
        }
        RoundResult round = consensus_round(current, options.affinity_min_gain, options, iter_seed);
        if (round.affinity == current) {
            stable = true;
            break;
        }
        previous = part;
        current = std::move(round.affinity);
    }

    const Ordering display = anneal_order(current, options.schedule, 1, derive_seed(base, {hash_tag("display")}));
    result.order.reserve(n);
    for (auto pos : display.permutation) result.order.push_back(to_original[pos]);
    result.order_cost = display.cost;
    result.iterations = std::min(it, options.max_iterations);
    result.partition = remap(part, to_original);
    result.partition.provenance = Provenance::Consensus;
    result.partition.stable = stable;
    return result;
}

double modularity(const Eigen::Ref<const Eigen::MatrixXd>& p, const Partition& partition) {
    const auto n = static_cast<std::size_t>(p.rows());
    if (p.cols() != p.rows() || partition.entity_count != n) throw InvalidArgument("modularity: partition size mismatch");
    partition.validate();

    Eigen::MatrixXd w = p.cwiseMax(0.0);
    w.diagonal().setZero();
    const double total = w.sum() / 2.0; // each undirected edge once
    if (!(total > 0.0)) return 0.0;

    const Eigen::VectorXd degree = w.rowwise().sum();
    auto community_term = [&](const std::vector<std::size_t>& members) {
        double inside = 0.0;
        double deg = 0.0;
        for (auto i : members) {
            deg += degree(ix(i));
            for (auto j : members)
                if (i < j) inside += w(ix(i), ix(j));
        }
        const double frac = deg / (2.0 * total);
        return inside / total - frac * frac;
    };
    double m = 0.0;
    for (const auto& cl : partition.clusters) m += community_term(cl);
    for (auto e : partition.isolated) m += community_term({e});
    return m;
}

Eigen::MatrixXd component_matrix(const SpectralDecomposition& spec, std::size_t n) {
    const Eigen::VectorXd u = spec.vector(n);
    return spec.eigenvalues(ix(n - 1)) * u * u.transpose();
}

std::optional<Eigen::VectorXd> information_ratio(const Eigen::Ref<const Eigen::MatrixXd>& c,
                                                 const SpectralDecomposition& spec,
                                                 const std::vector<std::size_t>& cluster) {
    const auto n = spec.size();
    if (cluster.empty()) throw InvalidArgument("information ratio needs a nonempty cluster");
    if (static_cast<std::size_t>(c.rows()) != n || c.cols() != c.rows())
        throw InvalidArgument("information ratio: matrix and decomposition disagree in size");
    double denom = 0.0;
    for (auto i : cluster) {
        if (i >= n) throw InvalidArgument("information ratio: cluster member out of range");
        for (auto j : cluster) denom += c(ix(i), ix(j));
    }
    if (std::abs(denom) < 1e-12) return std::nullopt;

    Eigen::VectorXd g(ix(n));
    for (std::size_t k = 0; k < n; ++k) {
        double s = 0.0;
        for (auto i : cluster) s += spec.eigenvectors(ix(i), ix(k));
        g(ix(k)) = spec.eigenvalues(ix(k)) * s * s / denom;
    }
    return g;
}

std::string_view symbol_name(Symbol s) noexcept {
    switch (s) {
    case Symbol::Circle: return "circle";
    case Symbol::Square: return "square";
    case Symbol::Diamond: return "diamond";
    case Symbol::Triangle: return "triangle";
    }
    return "unknown";
}

ClusterAttribution assign_symbol(const Eigen::Ref<const Eigen::VectorXd>& g, double v, double v_threshold) {
    if (g.size() < 1) throw InvalidArgument("symbol assignment needs at least one G value");
    const Index tracked = std::min<Index>(4, g.size());
    ClusterAttribution out;
    out.g.assign(g.data(), g.data() + tracked);
    out.lambda1_excluded = v < v_threshold && tracked > 1;
    Index best = out.lambda1_excluded ? 1 : 0;
    for (Index k = best + 1; k < tracked; ++k)
        if (g(k) > g(best)) best = k;
    out.winner = static_cast<std::size_t>(best + 1);
    out.symbol = static_cast<Symbol>(best);
    return out;
}

std::vector<ClusterAttribution> assign_symbols(const std::vector<Eigen::VectorXd>& g_per_cluster, double v,
                                               double v_threshold) {
    std::vector<ClusterAttribution> out;
    out.reserve(g_per_cluster.size());
    for (const auto& g : g_per_cluster) out.push_back(assign_symbol(g, v, v_threshold));
    return out;
}

} // namespace spatiocorr
