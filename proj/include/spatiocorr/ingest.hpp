#pragma once

#include "spatiocorr/quarter.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace spatiocorr {

/// Index levels, one row per entity and one column per quarter.
struct PricePanel {
    std::vector<std::string> entities;
    std::vector<Quarter> quarters;
    Eigen::MatrixXd levels; // entity x quarter, strictly positive

    std::size_t entity_count() const noexcept { return entities.size(); }
    std::size_t quarter_count() const noexcept { return quarters.size(); }

    /// Throws InvalidArgument when any panel invariant is broken.
    void validate() const;

    bool operator==(const PricePanel& other) const;
};

/// Log returns. quarters[t] labels the later quarter of each differenced pair.
struct ReturnPanel {
    std::vector<std::string> entities;
    std::vector<Quarter> quarters;
    Eigen::MatrixXd returns; // entity x quarter

    std::size_t entity_count() const noexcept { return entities.size(); }
    std::size_t quarter_count() const noexcept { return quarters.size(); }

    void validate() const;

    /// Column index of `q`, or nullopt when the panel does not contain it.
    std::optional<std::size_t> index_of(Quarter q) const;
};

/// A single aligned time series (national index returns, planted factors, ...).
struct Series {
    std::string name;
    std::vector<Quarter> quarters;
    Eigen::VectorXd values;
};

/// Moving window [end - size + 1, end] over a ReturnPanel.
struct WindowSpec {
    Quarter end;
    std::size_t size = 0;
    std::size_t end_index = 0; // column of `end` in the return panel

    std::size_t first_index() const noexcept { return end_index + 1 - size; }

    bool operator==(const WindowSpec&) const = default;
};

/// How columns of a delimited file map onto (entity, quarter, value).
struct CsvSchema {
    enum class Layout { Long, Wide };

    Layout layout = Layout::Long;
    char delimiter = ',';
    std::string entity_column = "entity";
    std::string quarter_column = "quarter";
    std::string value_column = "value";
    /// When quarter_column is absent from the header, year and period columns are combined.
    std::string year_column = "year";
    std::string period_column = "period";

    /// Reads flat `key = value` lines; `#` starts a comment. Unknown keys are an error.
    static CsvSchema from_config_file(const std::string& path);
    static CsvSchema from_config_stream(std::istream& in);
};

PricePanel parse_price_csv(std::istream& source, const CsvSchema& schema = {});
PricePanel read_price_csv(const std::string& path, const CsvSchema& schema = {});

/// Writes `panel` so that parse_price_csv with the same schema reproduces it exactly.
void write_price_csv(std::ostream& out, const PricePanel& panel, const CsvSchema& schema = {});

/// Parses a single index-level series (quarter and value columns of `schema`).
Series parse_level_series(std::istream& source, const CsvSchema& schema, const std::string& name);

ReturnPanel log_returns(const PricePanel& panel);

/// Log returns of a level series.
Series log_returns(const Series& levels);

/// Market return used for regressions and partial correlations: the override
/// restricted to the panel's quarters when given, else the equal-weight
/// cross-entity mean return per quarter.
Series national_return_series(const ReturnPanel& panel, const std::optional<Series>& override_series = std::nullopt);

/// One window per quarter from the size_s-th return quarter to the last.
std::vector<WindowSpec> windows(const ReturnPanel& panel, std::size_t size_s);

/// The window of `size_s` ending at `end`.
WindowSpec window_ending(const ReturnPanel& panel, Quarter end, std::size_t size_s);

/// Window spanning the whole panel.
WindowSpec full_window(const ReturnPanel& panel);

/// returns[:, window], entity x size.
Eigen::MatrixXd window_block(const ReturnPanel& panel, const WindowSpec& window);

/// Slice of a series aligned to `panel` quarters (throws on misalignment).
Eigen::VectorXd window_slice(const Series& series, const ReturnPanel& panel, const WindowSpec& window);

} // namespace spatiocorr
