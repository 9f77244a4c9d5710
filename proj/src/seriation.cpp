#include "spatiocorr/seriation.hpp"

#include "spatiocorr/error.hpp"
#include "spatiocorr/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace spatiocorr {

namespace {

enum class Move { Adjacent, Swap, Reverse };

struct Proposal {
    Move move;
    std::size_t i;
    std::size_t j; // i < j
};

class Annealer {
public:
    Annealer(const Eigen::MatrixXd& p, Rng& rng) : p_(p), n_(static_cast<std::size_t>(p.rows())), rng_(rng) {
        order_.resize(n_);
        std::iota(order_.begin(), order_.end(), std::size_t{0});
    }

    Proposal propose() {
        std::uniform_int_distribution<int> kind(0, 2);
        switch (kind(rng_)) {
        case 0: {
            std::uniform_int_distribution<std::size_t> pos(0, n_ - 2);
            const std::size_t i = pos(rng_);
            return {Move::Adjacent, i, i + 1};
        }
        case 1: {
            auto [i, j] = distinct_pair();
            return {Move::Swap, i, j};
        }
        default: {
            auto [i, j] = distinct_pair();
            return {Move::Reverse, i, j};
        }
        }
    }

    double delta(const Proposal& m) const {
        return m.move == Move::Reverse ? delta_reverse(m.i, m.j) : delta_swap(m.i, m.j);
    }

    void apply(const Proposal& m) {
        if (m.move == Move::Reverse)
            std::reverse(order_.begin() + static_cast<std::ptrdiff_t>(m.i),
                         order_.begin() + static_cast<std::ptrdiff_t>(m.j) + 1);
        else
            std::swap(order_[m.i], order_[m.j]);
    }

    const std::vector<std::size_t>& order() const { return order_; }

private:
    double at(std::size_t a, std::size_t b) const {
        return p_(static_cast<Eigen::Index>(order_[a]), static_cast<Eigen::Index>(order_[b]));
    }

    std::pair<std::size_t, std::size_t> distinct_pair() {
        std::uniform_int_distribution<std::size_t> first(0, n_ - 1);
        std::uniform_int_distribution<std::size_t> second(0, n_ - 2);
        const std::size_t a = first(rng_);
        std::size_t b = second(rng_);
        if (b >= a) ++b;
        return {std::min(a, b), std::max(a, b)};
    }

    // Only pairs involving positions p or q change distance.
    double delta_swap(std::size_t p, std::size_t q) const {
        double d = 0.0;
        const auto ip = static_cast<long>(p);
        const auto iq = static_cast<long>(q);
        for (std::size_t k = 0; k < n_; ++k) {
            if (k == p || k == q) continue;
            const auto ik = static_cast<long>(k);
            const double w = static_cast<double>(std::labs(ip - ik) - std::labs(iq - ik));
            d += w * (at(q, k) - at(p, k));
        }
        return 2.0 * d;
    }

    // Distances inside the segment are preserved; an element at position a
    // moves to i + j - a, which shifts its distance to everything left of the
    // segment by (i + j - 2a) and to everything right of it by the negative.
    double delta_reverse(std::size_t i, std::size_t j) const {
        double d = 0.0;
        for (std::size_t a = i; a <= j; ++a) {
            double left = 0.0;
            double right = 0.0;
            for (std::size_t k = 0; k < i; ++k) left += at(a, k);
            for (std::size_t k = j + 1; k < n_; ++k) right += at(a, k);
            d += (static_cast<double>(i + j) - 2.0 * static_cast<double>(a)) * (left - right);
        }
        return 2.0 * d;
    }

    const Eigen::MatrixXd& p_;
    std::size_t n_;
    Rng& rng_;
    std::vector<std::size_t> order_;
};

struct RunResult {
    std::vector<std::size_t> order;
    double cost;
};

RunResult anneal_once(const Eigen::MatrixXd& p, const AnnealSchedule& schedule, std::uint64_t seed) {
    const std::size_t n = static_cast<std::size_t>(p.rows());
    std::vector<std::size_t> identity(n);
    std::iota(identity.begin(), identity.end(), std::size_t{0});
    if (n < 3) return {identity, seriation_cost(p, identity)}; // N = 2: both orders cost the same

    Rng rng(seed);
    Annealer sa(p, rng);
    double cost = seriation_cost(p, identity);
    const double eps = 1e-12 * (1.0 + p.cwiseAbs().sum() * static_cast<double>(n));

    double temperature = schedule.initial_temperature;
    if (!(temperature > 0.0)) {
        double sum = 0.0;
        double sum_sq = 0.0;
        const int probes = std::max(2, schedule.probe_moves);
        for (int k = 0; k < probes; ++k) {
            const double d = sa.delta(sa.propose());
            sum += d;
            sum_sq += d * d;
        }
        const double mean = sum / probes;
        temperature = std::sqrt(std::max(0.0, sum_sq / probes - mean * mean));
        if (!(temperature > 0.0)) temperature = eps;
    }

    const auto moves = static_cast<std::size_t>(std::max(1.0, std::round(schedule.moves_per_entity * static_cast<double>(n))));
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<std::size_t> best = sa.order();
    double best_cost = cost;
    int stall = 0;
    for (int step = 0; step < schedule.max_temperatures; ++step) {
        std::size_t changed = 0;
        for (std::size_t m = 0; m < moves; ++m) {
            const Proposal prop = sa.propose();
            const double d = sa.delta(prop);
            if (d <= 0.0 || unit(rng) < std::exp(-d / temperature)) {
                sa.apply(prop);
                cost += d;
                if (std::abs(d) > eps) ++changed;
                if (cost < best_cost - eps) {
                    best_cost = cost;
                    best = sa.order();
                }
            }
        }
        stall = changed == 0 ? stall + 1 : 0;
        if (stall >= schedule.stall_temperatures) break;
        temperature *= schedule.cooling;
    }
    return {best, seriation_cost(p, best)};
}

} // namespace

void check_permutation(const std::vector<std::size_t>& order, std::size_t n) {
    if (order.size() != n)
        throw InvalidArgument("ordering has " + std::to_string(order.size()) + " entries, expected " + std::to_string(n));
    std::vector<bool> seen(n, false);
    for (auto v : order) {
        if (v >= n || seen[v]) throw InvalidArgument("ordering is not a permutation");
        seen[v] = true;
    }
}

double seriation_cost(const Eigen::Ref<const Eigen::MatrixXd>& p, const std::vector<std::size_t>& order) {
    const auto n = static_cast<std::size_t>(p.rows());
    if (p.cols() != p.rows()) throw InvalidArgument("seriation cost needs a square matrix");
    check_permutation(order, n);
    double q = 0.0;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            q += static_cast<double>(a > b ? a - b : b - a) *
                 p(static_cast<Eigen::Index>(order[a]), static_cast<Eigen::Index>(order[b]));
    return q;
}

void canonical_orientation(std::vector<std::size_t>& order) {
    if (order.size() > 1 && order.front() > order.back()) std::reverse(order.begin(), order.end());
}

Ordering brute_force_order(const Eigen::Ref<const Eigen::MatrixXd>& p) {
    const auto n = static_cast<std::size_t>(p.rows());
    if (p.cols() != p.rows()) throw InvalidArgument("brute force seriation needs a square matrix");
    if (n > 9) throw InvalidArgument("brute force seriation supports N <= 9, got " + std::to_string(n));
    if (n == 0) throw InvalidArgument("brute force seriation needs N >= 1");

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Ordering best;
    best.permutation = perm;
    best.cost = seriation_cost(p, perm);
    const double eps = 1e-12 * (1.0 + p.cwiseAbs().sum() * static_cast<double>(n));
    while (std::next_permutation(perm.begin(), perm.end())) {
        if (perm.front() > perm.back()) continue; // mirror image of one already visited
        const double q = seriation_cost(p, perm);
        if (q < best.cost - eps) {
            best.cost = q;
            best.permutation = perm;
        }
    }
    return best;
}

Ordering anneal_order(const Eigen::Ref<const Eigen::MatrixXd>& p, const AnnealSchedule& schedule,
                      std::size_t restarts, std::uint64_t seed, std::size_t threads) {
    const auto n = static_cast<std::size_t>(p.rows());
    if (p.cols() != p.rows() || n < 2) throw InvalidArgument("annealing needs a square matrix with N >= 2");
    if (restarts == 0) throw InvalidArgument("annealing needs at least one restart");
    if (!(schedule.cooling > 0.0 && schedule.cooling < 1.0)) throw InvalidArgument("cooling factor must lie in (0, 1)");
    if (!(schedule.moves_per_entity > 0.0) || schedule.stall_temperatures < 1 || schedule.max_temperatures < 1)
        throw InvalidArgument("invalid annealing schedule");

    const Eigen::MatrixXd pm = p;
    std::vector<RunResult> runs(restarts);
    parallel_for(restarts, threads, [&](std::size_t r) { runs[r] = anneal_once(pm, schedule, derive_seed(seed, {r})); });

    std::vector<std::size_t> identity(n);
    std::iota(identity.begin(), identity.end(), std::size_t{0});
    RunResult best{identity, seriation_cost(pm, identity)};
    for (auto& run : runs)
        if (run.cost < best.cost) best = run;

    Ordering out;
    out.permutation = best.order;
    canonical_orientation(out.permutation);
    out.cost = seriation_cost(pm, out.permutation);
    out.seed = seed;
    out.schedule = schedule;
    out.restarts = restarts;
    return out;
}

} // namespace spatiocorr
