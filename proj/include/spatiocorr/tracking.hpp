#pragma once

#include "spatiocorr/clustering.hpp"
#include "spatiocorr/quarter.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace spatiocorr {

/// Per-entity cluster identities for one window. 0 marks an isolated entity.
struct ColorConfiguration {
    std::optional<Quarter> window;
    std::vector<int> labels;
    std::map<int, std::string> palette;

    /// Throws InvalidArgument unless members of one cluster share a positive
    /// label, distinct clusters carry distinct labels and isolated entities are 0.
    void validate(const Partition& partition) const;
};

/// Agreement on cluster identity over entities clustered in both configurations:
/// #{i : a_i = b_i != 0} / #{i : a_i != 0 and b_i != 0}; 0 when nothing is clustered in both.
double similarity_J(const std::vector<int>& a, const std::vector<int>& b);
double similarity_J(const ColorConfiguration& a, const ColorConfiguration& b);

struct TrackingOptions {
    /// Windows ending before this quarter are labeled against the reference range.
    std::optional<Quarter> interval_split = Quarter{1996, 2};
    Quarter reference_start{1997, 1};
    Quarter reference_end{1998, 3};
    std::size_t horizon = 6;
    std::size_t exhaustive_limit = 5;
};

/// Display color for a positive label; cycles a fixed palette.
std::string palette_color(int label);

/// Assigns labels in reverse time. The last window's clusters get 1..k by
/// descending size; each earlier window takes the injective labeling (existing
/// or fresh labels) that maximizes the summed J against the next `horizon`
/// windows, or against the reference range for windows before the split.
/// Windows with no determined reference window in range fall back to the
/// horizon rule. Ties prefer fresh labels, then lower labels.
std::vector<ColorConfiguration> color_timeline(const std::vector<Partition>& partitions,
                                               const TrackingOptions& options = {});

/// Configuration giving partition.clusters[c] the label cluster_labels[c].
std::vector<int> labels_from(const Partition& partition, const std::vector<int>& cluster_labels);

} // namespace spatiocorr
