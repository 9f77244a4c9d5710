#pragma once

// Reference computations used by the tests. Each one takes a route that is
// independent of the library code it checks.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <numeric>
#include <vector>

namespace oracle {

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    long double sa = 0, sb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sa += a[i];
        sb += b[i];
    }
    const long double ma = sa / n, mb = sb / n;
    long double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return static_cast<double>(sab / std::sqrt(saa * sbb));
}

inline std::vector<double> row(const Eigen::MatrixXd& m, Eigen::Index i) {
    std::vector<double> out(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index t = 0; t < m.cols(); ++t) out[static_cast<std::size_t>(t)] = m(i, t);
    return out;
}

// Residuals of y after least squares on [1, x].
inline std::vector<double> residuals(const std::vector<double>& y, const std::vector<double>& x) {
    const std::size_t n = y.size();
    Eigen::MatrixXd X(static_cast<Eigen::Index>(n), 2);
    Eigen::VectorXd Y(static_cast<Eigen::Index>(n));
    for (std::size_t t = 0; t < n; ++t) {
        X(static_cast<Eigen::Index>(t), 0) = 1.0;
        X(static_cast<Eigen::Index>(t), 1) = x[t];
        Y(static_cast<Eigen::Index>(t)) = y[t];
    }
    const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(Y);
    const Eigen::VectorXd r = Y - X * beta;
    return std::vector<double>(r.data(), r.data() + r.size());
}

inline double partial_by_regression(const std::vector<double>& a, const std::vector<double>& b,
                                    const std::vector<double>& m) {
    return pearson(residuals(a, m), residuals(b, m));
}

// Composite Simpson on [lo, hi].
inline double simpson(const std::function<double(double)>& f, double lo, double hi, int intervals) {
    if (intervals % 2) ++intervals;
    const double h = (hi - lo) / intervals;
    double s = f(lo) + f(hi);
    for (int k = 1; k < intervals; ++k) s += f(lo + k * h) * (k % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

// Marchenko-Pastur edges written as (1 +- 1/sqrt(Q))^2.
inline std::pair<double, double> mp_edges(double q) {
    const double r = 1.0 / std::sqrt(q);
    return {(1.0 - r) * (1.0 - r), (1.0 + r) * (1.0 + r)};
}

// MP density integrated with lambda = a + (b - a)(1 - cos theta)/2, which
// removes the square-root endpoint singularities.
inline double mp_cdf(double x, double q) {
    const auto [a, b] = mp_edges(q);
    if (x <= a) return 0.0;
    if (x >= b) return 1.0;
    auto f = [&](double theta) {
        const double lam = a + (b - a) * (1.0 - std::cos(theta)) / 2.0;
        const double dl = (b - a) * std::sin(theta) / 2.0;
        const double dens = q / (2.0 * M_PI) * std::sqrt(std::max(0.0, (b - lam) * (lam - a))) / lam;
        return dens * dl;
    };
    const double theta = std::acos(1.0 - 2.0 * (x - a) / (b - a));
    return simpson(f, 0.0, theta, 4000);
}

// Two-sided critical |r| under independence, by integrating the t density and
// bisecting for the upper quantile.
inline double critical_r(double df, double alpha) {
    const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * M_PI);
    auto dens = [&](double t) { return c * std::pow(1.0 + t * t / df, -(df + 1) / 2); };
    auto upper_tail = [&](double t) {
        // P(T > t) = 0.5 - integral_0^t
        return 0.5 - simpson(dens, 0.0, t, 20000);
    };
    double lo = 0.0, hi = 50.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (upper_tail(mid) > alpha / 2 ? lo : hi) = mid;
    }
    const double t = 0.5 * (lo + hi);
    return t / std::sqrt(t * t + df);
}

inline double seriation_cost(const Eigen::MatrixXd& p, const std::vector<std::size_t>& order) {
    double q = 0.0;
    for (std::size_t a = 0; a < order.size(); ++a)
        for (std::size_t b = 0; b < order.size(); ++b)
            q += std::abs(static_cast<double>(a) - static_cast<double>(b)) * p(static_cast<Eigen::Index>(order[a]),
                                                                              static_cast<Eigen::Index>(order[b]));
    return q;
}

// Minimum over all N! orders, no reversal shortcut.
inline double min_seriation_cost(const Eigen::MatrixXd& p) {
    std::vector<std::size_t> order(static_cast<std::size_t>(p.rows()));
    std::iota(order.begin(), order.end(), std::size_t{0});
    double best = seriation_cost(p, order);
    while (std::next_permutation(order.begin(), order.end())) best = std::min(best, seriation_cost(p, order));
    return best;
}

// Hubert-Arabie adjusted Rand index; -1 marks isolated entities, each its own class.
inline double adjusted_rand(std::vector<int> a, std::vector<int> b) {
    const std::size_t n = a.size();
    int next = 1000000;
    for (auto& x : a)
        if (x < 0) x = next++;
    for (auto& x : b)
        if (x < 0) x = next++;
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> ra, rb;
    for (std::size_t i = 0; i < n; ++i) {
        joint[{a[i], b[i]}] += 1;
        ra[a[i]] += 1;
        rb[b[i]] += 1;
    }
    auto c2 = [](double x) { return x * (x - 1) / 2; };
    double sj = 0, sa = 0, sb = 0;
    for (auto& [k, v] : joint) sj += c2(v);
    for (auto& [k, v] : ra) sa += c2(v);
    for (auto& [k, v] : rb) sb += c2(v);
    const double expected = sa * sb / c2(static_cast<double>(n));
    const double maxi = 0.5 * (sa + sb);
    if (maxi == expected) return 1.0;
    return (sj - expected) / (maxi - expected);
}

inline double kolmogorov_smirnov(std::vector<double> samples, const std::function<double(double)>& cdf) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max({d, std::abs(f - i / n), std::abs((i + 1) / n - f)});
    }
    return d;
}

// Cluster-identity agreement written out from its definition.
inline double agreement(const std::vector<int>& a, const std::vector<int>& b) {
    int both = 0, same = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0 || b[i] == 0) continue;
        ++both;
        if (a[i] == b[i]) ++same;
    }
    return both == 0 ? 0.0 : static_cast<double>(same) / both;
}

// Largest summed agreement against `later` over every injective labeling of the
// clusters in `membership` (-1 = isolated), drawing labels from those present in
// `later` plus enough fresh ones.
inline double best_label_sum(const std::vector<int>& membership, const std::vector<std::vector<int>>& later) {
    int k = 0;
    for (int c : membership) k = std::max(k, c + 1);
    std::vector<int> pool;
    int top = 0;
    for (const auto& l : later)
        for (int x : l)
            if (x > 0 && std::find(pool.begin(), pool.end(), x) == pool.end()) {
                pool.push_back(x);
                top = std::max(top, x);
            }
    for (int c = 0; c < k; ++c) pool.push_back(top + 1 + c);
    std::vector<int> pick(static_cast<std::size_t>(k));
    std::vector<bool> used(pool.size(), false);
    double best = -1.0;
    std::function<void(int)> rec = [&](int c) {
        if (c == k) {
            std::vector<int> labels(membership.size(), 0);
            for (std::size_t i = 0; i < membership.size(); ++i)
                if (membership[i] >= 0) labels[i] = pick[static_cast<std::size_t>(membership[i])];
            double s = 0.0;
            for (const auto& l : later) s += agreement(labels, l);
            best = std::max(best, s);
            return;
        }
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (used[i]) continue;
            used[i] = true;
            pick[static_cast<std::size_t>(c)] = pool[i];
            rec(c + 1);
            used[i] = false;
        }
    };
    rec(0);
    return best;
}

} // namespace oracle
