#include "spatiocorr/export.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>

namespace spatiocorr {

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_matrix_csv(std::ostream& out, const std::vector<std::string>& labels, const Eigen::MatrixXd& m) {
    out << "entity";
    for (const auto& l : labels) out << ',' << l;
    out << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out << labels[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << format_number(m(i, j));
        out << '\n';
    }
}

Json matrix_json(const Eigen::MatrixXd& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Json vector_json(const Eigen::VectorXd& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Json to_json(const CorrelationMatrix& c) {
    return Json{{"window", c.window.end.to_string()}, {"entities", c.entities}, {"values", matrix_json(c.values)}};
}

Json to_json(const PartialCorrelationMatrix& p) {
    return Json{{"window", p.window.end.to_string()},
                {"conditioning", p.conditioning},
                {"entities", p.entities},
                {"values", matrix_json(p.values)}};
}

Json spectrum_json(const SpectralDecomposition& spec, const MPBounds& bounds, const NullSpectrum& null,
                   const DeviatingEigenvalues& deviating, std::size_t leading_vectors) {
    Json j;
    j["window"] = spec.window.end.to_string();
    j["window_size"] = spec.window.size;
    j["eigenvalues"] = vector_json(spec.eigenvalues);
    j["mp"] = Json{{"q", bounds.q_ratio}, {"lambda_min", bounds.lambda_min}, {"lambda_max", bounds.lambda_max}};
    j["null"] = Json{{"criterion", null.criterion == NullCriterion::Pooled ? "pooled" : "largest"},
                     {"rounds", null.rounds},
                     {"significance", null.significance},
                     {"seed", null.seed},
                     {"lambda_5pct", null.lambda_5pct}};
    j["deviating"] = Json{{"above_mp", deviating.above_mp}, {"above_null", deviating.above_null}};
    Json absorption = Json::array();
    for (std::size_t n = 1; n <= std::min<std::size_t>(5, spec.size()); ++n)
        absorption.push_back(absorption_ratio(spec, n));
    j["absorption"] = absorption;
    j["V"] = negative_weight_V(spec.vector(1));
    Json vectors = Json::array();
    for (std::size_t n = 1; n <= std::min(leading_vectors, spec.size()); ++n) vectors.push_back(vector_json(spec.vector(n)));
    j["eigenvectors"] = vectors;
    return j;
}

Json to_json(const Ordering& ordering, const std::vector<std::string>& labels) {
    Json names = Json::array();
    for (auto e : ordering.permutation) names.push_back(labels[e]);
    return Json{{"order", names},
                {"cost", ordering.cost},
                {"seed", ordering.seed},
                {"restarts", ordering.restarts},
                {"schedule",
                 {{"initial_temperature", ordering.schedule.initial_temperature},
                  {"cooling", ordering.schedule.cooling},
                  {"moves_per_entity", ordering.schedule.moves_per_entity},
                  {"stall_temperatures", ordering.schedule.stall_temperatures},
                  {"max_temperatures", ordering.schedule.max_temperatures}}}};
}

Json to_json(const Partition& partition, const std::vector<std::string>& labels) {
    Json clusters = Json::array();
    for (const auto& cl : partition.clusters) {
        Json names = Json::array();
        for (auto e : cl) names.push_back(labels[e]);
        clusters.push_back(std::move(names));
    }
    Json isolated = Json::array();
    for (auto e : partition.isolated) isolated.push_back(labels[e]);
    const char* prov = partition.provenance == Provenance::Consensus ? "consensus"
                       : partition.provenance == Provenance::Planted ? "planted"
                                                                     : "direct";
    Json j{{"clusters", clusters}, {"isolated", isolated}, {"provenance", prov}, {"stable", partition.stable}};
    if (partition.window) j["window"] = partition.window->to_string();
    return j;
}

Json to_json(const ClusterAttribution& a) {
    return Json{{"G", a.g},
                {"winner", a.winner},
                {"symbol", std::string(symbol_name(a.symbol))},
                {"lambda1_excluded", a.lambda1_excluded}};
}

Json to_json(const RegimeTimeline& timeline) {
    Json shifts = Json::array();
    for (const auto& s : timeline.shifts) {
        Json flags = Json::array();
        for (const auto& f : s.flags) flags.push_back(Json{{"n", f.eigen_index}, {"magnitude", f.magnitude}});
        shifts.push_back(Json{{"before", s.before.to_string()}, {"after", s.after.to_string()}, {"flags", flags}});
    }
    Json regimes = Json::array();
    for (const auto& r : timeline.regimes)
        regimes.push_back(Json{{"start", r.start.to_string()}, {"end", r.end.to_string()}});
    return Json{{"threshold", timeline.threshold},
                {"estimator", timeline.estimator == Estimator::Ols ? "ols" : "robust"},
                {"shifts", shifts},
                {"regimes", regimes}};
}

void write_market_effect_csv(std::ostream& out, const MarketEffectSeries& series) {
    out << "window,n,k_ols,k_robust,robust_converged\n";
    for (std::size_t w = 0; w < series.window_count(); ++w)
        for (std::size_t n = 0; n < series.tracked(); ++n) {
            const auto ww = static_cast<Eigen::Index>(w);
            const auto nn = static_cast<Eigen::Index>(n);
            out << series.window_ends[w].to_string() << ',' << n + 1 << ',' << format_number(series.k_ols(ww, nn)) << ','
                << format_number(series.k_robust(ww, nn)) << ',' << (series.robust_converged[w][n] ? 1 : 0) << '\n';
        }
}

Json timeline_json(const std::vector<ColorConfiguration>& timeline, const std::vector<std::string>& entities) {
    std::map<int, std::string> palette;
    Json windows = Json::array();
    for (const auto& c : timeline) {
        palette.insert(c.palette.begin(), c.palette.end());
        windows.push_back(Json{{"window", c.window ? c.window->to_string() : std::string()}, {"labels", c.labels}});
    }
    Json pal = Json::object();
    for (const auto& [label, color] : palette) pal[std::to_string(label)] = color;
    return Json{{"entities", entities}, {"palette", pal}, {"windows", windows}};
}

void write_null_csv(std::ostream& out, const NullSpectrum& null, std::size_t entity_count) {
    out << "round,eigenvalue\n";
    for (std::size_t i = 0; i < null.pooled.size(); ++i)
        out << i / entity_count << ',' << format_number(null.pooled[i]) << '\n';
}

} // namespace spatiocorr
