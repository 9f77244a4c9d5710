#include "spatiocorr/tracking.hpp"

#include "spatiocorr/error.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <limits>
#include <numeric>
#include <set>

namespace spatiocorr {

namespace {

constexpr double kTie = 1e-12;

// Cluster indices by descending size, then smallest member.
std::vector<std::size_t> size_order(const Partition& p) {
    std::vector<std::size_t> idx(p.clusters.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const auto& ca = p.clusters[a];
        const auto& cb = p.clusters[b];
        if (ca.size() != cb.size()) return ca.size() > cb.size();
        return *std::min_element(ca.begin(), ca.end()) < *std::min_element(cb.begin(), cb.end());
    });
    return idx;
}

struct Choice {
    std::vector<int> labels; // per cluster in size order; 0 = fresh
    double score = -1.0;
    std::size_t fresh = 0;
};

bool better(const Choice& cand, const Choice& best) {
    if (cand.score > best.score + kTie) return true;
    if (cand.score < best.score - kTie) return false;
    if (cand.fresh != best.fresh) return cand.fresh > best.fresh;
    // Fresh sorts after every existing label.
    auto key = [](int l) { return l == 0 ? std::numeric_limits<int>::max() : l; };
    return std::lexicographical_compare(cand.labels.begin(), cand.labels.end(), best.labels.begin(), best.labels.end(),
                                        [&](int a, int b) { return key(a) < key(b); });
}

// score[c][k]: contribution of giving ordered cluster c the candidate label k.
Choice exhaustive(const std::vector<std::vector<double>>& score, const std::vector<int>& candidates) {
    const std::size_t k = score.size();
    Choice best;
    Choice cur;
    cur.labels.assign(k, 0);
    std::vector<bool> used(candidates.size(), false);
    std::function<void(std::size_t, double, std::size_t)> dfs = [&](std::size_t c, double s, std::size_t fresh) {
        if (c == k) {
            cur.score = s;
            cur.fresh = fresh;
            if (best.score < 0.0 || better(cur, best)) best = cur;
            return;
        }
        for (std::size_t l = 0; l < candidates.size(); ++l) {
            if (used[l]) continue;
            used[l] = true;
            cur.labels[c] = candidates[l];
            dfs(c + 1, s + score[c][l], fresh);
            used[l] = false;
        }
        cur.labels[c] = 0;
        dfs(c + 1, s, fresh + 1);
    };
    dfs(0, 0.0, 0);
    return best;
}

Choice greedy(const std::vector<std::vector<double>>& score, const std::vector<int>& candidates) {
    const std::size_t k = score.size();
    Choice out;
    out.labels.assign(k, 0);
    out.score = 0.0;
    std::vector<bool> cluster_done(k, false);
    std::vector<bool> label_used(candidates.size(), false);
    for (;;) {
        double best = kTie;
        std::size_t bc = k;
        std::size_t bl = 0;
        for (std::size_t c = 0; c < k; ++c) {
            if (cluster_done[c]) continue;
            for (std::size_t l = 0; l < candidates.size(); ++l)
                if (!label_used[l] && score[c][l] > best + kTie) {
                    best = score[c][l];
                    bc = c;
                    bl = l;
                }
        }
        if (bc == k) break;
        cluster_done[bc] = true;
        label_used[bl] = true;
        out.labels[bc] = candidates[bl];
        out.score += best;
    }
    out.fresh = static_cast<std::size_t>(std::count(out.labels.begin(), out.labels.end(), 0));
    return out;
}

} // namespace

void ColorConfiguration::validate(const Partition& partition) const {
    if (labels.size() != partition.entity_count) throw InvalidArgument("color configuration size mismatch");
    std::set<int> seen;
    for (const auto& cl : partition.clusters) {
        const int l = labels[cl.front()];
        if (l <= 0) throw InvalidArgument("clustered entity carries label 0");
        for (auto e : cl)
            if (labels[e] != l) throw InvalidArgument("members of one cluster carry different labels");
        if (!seen.insert(l).second) throw InvalidArgument("two clusters share label " + std::to_string(l));
    }
    for (auto e : partition.isolated)
        if (labels[e] != 0) throw InvalidArgument("isolated entity carries a nonzero label");
}

double similarity_J(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw InvalidArgument("similarity J: configurations cover different entity sets");
    std::size_t agree = 0;
    std::size_t both = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0 || b[i] == 0) continue;
        ++both;
        if (a[i] == b[i]) ++agree;
    }
    return both == 0 ? 0.0 : static_cast<double>(agree) / static_cast<double>(both);
}

double similarity_J(const ColorConfiguration& a, const ColorConfiguration& b) {
    return similarity_J(a.labels, b.labels);
}

std::string palette_color(int label) {
    static constexpr std::array<const char*, 12> names{"yellow", "green", "red",    "blue",  "orange", "purple",
                                                       "cyan",   "magenta", "brown", "gray", "olive",  "navy"};
    if (label <= 0) return "none";
    const auto k = static_cast<std::size_t>(label - 1);
    std::string name = names[k % names.size()];
    if (k >= names.size()) name += "-" + std::to_string(k / names.size() + 1);
    return name;
}

std::vector<int> labels_from(const Partition& partition, const std::vector<int>& cluster_labels) {
    if (cluster_labels.size() != partition.clusters.size()) throw InvalidArgument("one label per cluster required");
    std::vector<int> labels(partition.entity_count, 0);
    for (std::size_t c = 0; c < partition.clusters.size(); ++c)
        for (auto e : partition.clusters[c]) labels[e] = cluster_labels[c];
    return labels;
}

std::vector<ColorConfiguration> color_timeline(const std::vector<Partition>& partitions,
                                               const TrackingOptions& options) {
    if (partitions.empty()) throw InvalidArgument("color timeline needs at least one partition");
    const std::size_t n = partitions.front().entity_count;
    for (std::size_t t = 0; t < partitions.size(); ++t) {
        if (partitions[t].entity_count != n) throw InvalidArgument("partitions cover different entity counts");
        partitions[t].validate();
        if (t > 0 && partitions[t].window && partitions[t - 1].window &&
            !(*partitions[t - 1].window < *partitions[t].window))
            throw InvalidArgument("partitions must be ordered by window end");
    }

    const std::size_t W = partitions.size();
    std::vector<ColorConfiguration> out(W);
    int next_label = 1;

    auto finish = [&](std::size_t t, const std::vector<int>& cluster_labels) {
        out[t].window = partitions[t].window;
        out[t].labels = labels_from(partitions[t], cluster_labels);
        for (int l : cluster_labels) {
            out[t].palette.emplace(l, palette_color(l));
            next_label = std::max(next_label, l + 1);
        }
    };

    {
        const Partition& last = partitions.back();
        std::vector<int> cl(last.clusters.size());
        const auto order = size_order(last);
        for (std::size_t r = 0; r < order.size(); ++r) cl[order[r]] = static_cast<int>(r + 1);
        finish(W - 1, cl);
    }

    for (std::size_t t = W - 1; t-- > 0;) {
        const Partition& part = partitions[t];

        std::vector<std::size_t> targets;
        const bool early = options.interval_split && part.window && *part.window < *options.interval_split;
        if (early) {
            for (std::size_t u = t + 1; u < W; ++u)
                if (partitions[u].window && *partitions[u].window >= options.reference_start &&
                    *partitions[u].window <= options.reference_end)
                    targets.push_back(u);
        }
        if (targets.empty())
            for (std::size_t u = t + 1; u <= std::min(W - 1, t + options.horizon); ++u) targets.push_back(u);

        std::set<int> cand_set;
        for (auto u : targets)
            for (int l : out[u].labels)
                if (l > 0) cand_set.insert(l);
        const std::vector<int> candidates(cand_set.begin(), cand_set.end());

        std::vector<bool> clustered(n, false);
        for (const auto& cl : part.clusters)
            for (auto e : cl) clustered[e] = true;

        // J is additive over clusters: the denominator depends only on which
        // entities are clustered, not on the labels chosen.
        const auto order = size_order(part);
        std::vector<std::vector<double>> score(order.size(), std::vector<double>(candidates.size(), 0.0));
        for (auto u : targets) {
            std::size_t denom = 0;
            for (std::size_t i = 0; i < n; ++i)
                if (clustered[i] && out[u].labels[i] != 0) ++denom;
            if (denom == 0) continue;
            for (std::size_t r = 0; r < order.size(); ++r)
                for (std::size_t l = 0; l < candidates.size(); ++l) {
                    std::size_t agree = 0;
                    for (auto e : part.clusters[order[r]])
                        if (out[u].labels[e] == candidates[l]) ++agree;
                    score[r][l] += static_cast<double>(agree) / static_cast<double>(denom);
                }
        }

        const Choice choice = order.size() <= options.exhaustive_limit ? exhaustive(score, candidates)
                                                                       : greedy(score, candidates);
        std::vector<int> cl(part.clusters.size());
        int fresh = next_label;
        for (std::size_t r = 0; r < order.size(); ++r) cl[order[r]] = choice.labels[r] == 0 ? fresh++ : choice.labels[r];
        finish(t, cl);
    }
    return out;
}

} // namespace spatiocorr
