#pragma once

#include "spatiocorr/clustering.hpp"
#include "spatiocorr/corrlab.hpp"
#include "spatiocorr/market_effect.hpp"
#include "spatiocorr/seriation.hpp"
#include "spatiocorr/spectra.hpp"
#include "spatiocorr/tracking.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace spatiocorr {

using Json = nlohmann::ordered_json;

/// Labeled square matrix: header row "entity,<labels...>", one row per entity.
void write_matrix_csv(std::ostream& out, const std::vector<std::string>& labels, const Eigen::MatrixXd& m);

/// Row-major nested arrays.
Json matrix_json(const Eigen::MatrixXd& m);
Json vector_json(const Eigen::VectorXd& v);

/// {"entities": [...], "values": [[...]]} for C or P.
Json to_json(const CorrelationMatrix& c);
Json to_json(const PartialCorrelationMatrix& p);

/// Per-window spectrum record: eigenvalues, MP bounds, null critical value,
/// deviating index sets, E_1..E_5 and V.
Json spectrum_json(const SpectralDecomposition& spec, const MPBounds& bounds, const NullSpectrum& null,
                   const DeviatingEigenvalues& deviating, std::size_t leading_vectors);

Json to_json(const Ordering& ordering, const std::vector<std::string>& labels);

/// Clusters and isolated entities as label arrays.
Json to_json(const Partition& partition, const std::vector<std::string>& labels);

Json to_json(const ClusterAttribution& a);

Json to_json(const RegimeTimeline& timeline);

/// market effect rows: window,n,k_ols,k_robust,robust_converged
void write_market_effect_csv(std::ostream& out, const MarketEffectSeries& series);

/// Timeline JSON: entities, palette and one label vector per window.
Json timeline_json(const std::vector<ColorConfiguration>& timeline, const std::vector<std::string>& entities);

/// Pooled null eigenvalues, one per line with its round index.
void write_null_csv(std::ostream& out, const NullSpectrum& null, std::size_t entity_count);

std::string format_number(double v);

} // namespace spatiocorr
