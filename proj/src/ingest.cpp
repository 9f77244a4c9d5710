#include "spatiocorr/ingest.hpp"

#include "spatiocorr/error.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace spatiocorr {

namespace {

std::string trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return std::string(s);
}

// Splits one record. Double quotes group fields and "" escapes a quote.
std::vector<std::string> split_record(const std::string& line, char delim, std::size_t row) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
            was_quoted = true;
        } else if (c == delim) {
            fields.push_back(was_quoted ? cur : trim(cur));
            cur.clear();
            was_quoted = false;
        } else {
            cur.push_back(c);
        }
    }
    if (quoted) throw ParseError(row, "unterminated quoted field");
    fields.push_back(was_quoted ? cur : trim(cur));
    return fields;
}

double parse_value(const std::string& text, std::size_t row, const std::string& column) {
    if (text.empty()) throw ParseError(row, "missing value in column '" + column + "'");
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || errno == ERANGE || !std::isfinite(v))
        throw ParseError(row, "non-numeric value '" + text + "' in column '" + column + "'");
    if (v <= 0.0) throw ParseError(row, "non-positive index value " + text + " in column '" + column + "'");
    return v;
}

Quarter parse_quarter_cell(const std::string& text, std::size_t row) {
    if (text.empty()) throw ParseError(row, "missing quarter");
    try {
        return Quarter::parse(text);
    } catch (const InvalidArgument& e) {
        throw ParseError(row, e.what());
    }
}

struct Header {
    std::vector<std::string> names;
    std::optional<std::size_t> find(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return i;
        return std::nullopt;
    }
};

// Reads the header and locates the quarter (or year + period) columns.
struct QuarterColumns {
    std::optional<std::size_t> quarter;
    std::optional<std::size_t> year;
    std::optional<std::size_t> period;

    Quarter read(const std::vector<std::string>& f, std::size_t row) const {
        if (quarter) return parse_quarter_cell(f[*quarter], row);
        const std::string& y = f[*year];
        const std::string& p = f[*period];
        if (y.empty() || p.empty()) throw ParseError(row, "missing year or period");
        return parse_quarter_cell(y + "Q" + p, row);
    }

    bool covers(std::size_t col) const { return col == quarter || col == year || col == period; }
};

QuarterColumns locate_quarter(const Header& h, const CsvSchema& schema) {
    QuarterColumns qc;
    qc.quarter = h.find(schema.quarter_column);
    if (!qc.quarter) {
        qc.year = h.find(schema.year_column);
        qc.period = h.find(schema.period_column);
        if (!qc.year || !qc.period)
            throw ParseError(1, "header lacks quarter column '" + schema.quarter_column + "' (or '" +
                                    schema.year_column + "' + '" + schema.period_column + "')");
    }
    return qc;
}

void check_gap_free(const std::vector<Quarter>& qs) {
    for (std::size_t t = 1; t < qs.size(); ++t)
        if (qs[t] != qs[t - 1].next())
            throw InvalidArgument("quarters not gap-free: " + qs[t - 1].to_string() + " followed by " +
                                  qs[t].to_string());
}

PricePanel parse_long(std::istream& in, const CsvSchema& schema, const Header& header) {
    const auto ent = header.find(schema.entity_column);
    const auto val = header.find(schema.value_column);
    if (!ent) throw ParseError(1, "header lacks entity column '" + schema.entity_column + "'");
    if (!val) throw ParseError(1, "header lacks value column '" + schema.value_column + "'");
    const QuarterColumns qc = locate_quarter(header, schema);

    std::vector<std::string> order;
    std::unordered_map<std::string, std::map<Quarter, double>> cells;
    std::map<Quarter, std::size_t> first_row; // for error messages

    std::string line;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto f = split_record(line, schema.delimiter, row);
        if (f.size() != header.names.size())
            throw ParseError(row, "expected " + std::to_string(header.names.size()) + " fields, found " +
                                      std::to_string(f.size()));
        const std::string& entity = f[*ent];
        if (entity.empty()) throw ParseError(row, "missing entity");
        const Quarter q = qc.read(f, row);
        const double v = parse_value(f[*val], row, schema.value_column);

        auto [it, fresh] = cells.try_emplace(entity);
        if (fresh) order.push_back(entity);
        if (!it->second.emplace(q, v).second)
            throw ParseError(row, "duplicate row for (" + entity + ", " + q.to_string() + ")");
        first_row.try_emplace(q, row);
    }
    if (order.empty()) throw ParseError(row, "no data rows");

    std::vector<Quarter> quarters;
    for (const auto& [q, r] : first_row) quarters.push_back(q);
    check_gap_free(quarters);

    PricePanel panel;
    panel.entities = order;
    panel.quarters = quarters;
    panel.levels.resize(static_cast<Eigen::Index>(order.size()), static_cast<Eigen::Index>(quarters.size()));
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto& m = cells[order[i]];
        for (std::size_t t = 0; t < quarters.size(); ++t) {
            auto hit = m.find(quarters[t]);
            if (hit == m.end())
                throw ParseError(first_row[quarters[t]], "ragged panel: entity '" + order[i] + "' has no value for " +
                                                             quarters[t].to_string());
            panel.levels(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = hit->second;
        }
    }
    return panel;
}

PricePanel parse_wide(std::istream& in, const CsvSchema& schema, const Header& header) {
    const QuarterColumns qc = locate_quarter(header, schema);
    std::vector<std::size_t> entity_cols;
    std::vector<std::string> entities;
    for (std::size_t c = 0; c < header.names.size(); ++c) {
        if (qc.covers(c)) continue;
        if (header.names[c].empty()) throw ParseError(1, "empty entity name in header column " + std::to_string(c + 1));
        if (std::find(entities.begin(), entities.end(), header.names[c]) != entities.end())
            throw ParseError(1, "duplicate entity column '" + header.names[c] + "'");
        entity_cols.push_back(c);
        entities.push_back(header.names[c]);
    }
    if (entities.empty()) throw ParseError(1, "no entity columns");

    std::map<Quarter, std::pair<std::size_t, std::vector<double>>> rows;
    std::string line;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto f = split_record(line, schema.delimiter, row);
        if (f.size() != header.names.size())
            throw ParseError(row, "expected " + std::to_string(header.names.size()) + " fields, found " +
                                      std::to_string(f.size()));
        const Quarter q = qc.read(f, row);
        std::vector<double> values;
        values.reserve(entity_cols.size());
        for (std::size_t k = 0; k < entity_cols.size(); ++k)
            values.push_back(parse_value(f[entity_cols[k]], row, entities[k]));
        if (!rows.emplace(q, std::make_pair(row, std::move(values))).second)
            throw ParseError(row, "duplicate row for quarter " + q.to_string());
    }
    if (rows.empty()) throw ParseError(row, "no data rows");

    PricePanel panel;
    panel.entities = entities;
    for (const auto& [q, r] : rows) panel.quarters.push_back(q);
    check_gap_free(panel.quarters);
    panel.levels.resize(static_cast<Eigen::Index>(entities.size()), static_cast<Eigen::Index>(rows.size()));
    Eigen::Index t = 0;
    for (const auto& [q, r] : rows) {
        for (std::size_t i = 0; i < entities.size(); ++i) panel.levels(static_cast<Eigen::Index>(i), t) = r.second[i];
        ++t;
    }
    return panel;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

void PricePanel::validate() const {
    if (entities.empty() || quarters.empty()) throw InvalidArgument("price panel is empty");
    if (static_cast<std::size_t>(levels.rows()) != entities.size() ||
        static_cast<std::size_t>(levels.cols()) != quarters.size())
        throw InvalidArgument("price panel shape does not match its labels");
    check_gap_free(quarters);
    for (Eigen::Index i = 0; i < levels.rows(); ++i)
        for (Eigen::Index t = 0; t < levels.cols(); ++t)
            if (!(levels(i, t) > 0.0) || !std::isfinite(levels(i, t)))
                throw InvalidArgument("non-positive level for '" + entities[static_cast<std::size_t>(i)] + "' at " +
                                      quarters[static_cast<std::size_t>(t)].to_string());
}

bool PricePanel::operator==(const PricePanel& other) const {
    return entities == other.entities && quarters == other.quarters && levels.rows() == other.levels.rows() &&
           levels.cols() == other.levels.cols() && levels == other.levels;
}

void ReturnPanel::validate() const {
    if (entities.empty() || quarters.empty()) throw InvalidArgument("return panel is empty");
    if (static_cast<std::size_t>(returns.rows()) != entities.size() ||
        static_cast<std::size_t>(returns.cols()) != quarters.size())
        throw InvalidArgument("return panel shape does not match its labels");
    check_gap_free(quarters);
    if (!returns.allFinite()) throw InvalidArgument("return panel contains non-finite values");
}

std::optional<std::size_t> ReturnPanel::index_of(Quarter q) const {
    if (quarters.empty()) return std::nullopt;
    const int off = quarters_between(quarters.front(), q);
    if (off < 0 || static_cast<std::size_t>(off) >= quarters.size()) return std::nullopt;
    return static_cast<std::size_t>(off);
}

CsvSchema CsvSchema::from_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open schema config '" + path + "'");
    return from_config_stream(in);
}

CsvSchema CsvSchema::from_config_stream(std::istream& in) {
    CsvSchema s;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(row, "expected key=value");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key == "layout") {
            if (value == "long") s.layout = Layout::Long;
            else if (value == "wide") s.layout = Layout::Wide;
            else throw ParseError(row, "layout must be 'long' or 'wide'");
        } else if (key == "delimiter") {
            if (value == "tab" || value == "\\t") s.delimiter = '\t';
            else if (value.size() == 1) s.delimiter = value[0];
            else throw ParseError(row, "delimiter must be a single character or 'tab'");
        } else if (key == "entity_column") {
            s.entity_column = value;
        } else if (key == "quarter_column") {
            s.quarter_column = value;
        } else if (key == "value_column") {
            s.value_column = value;
        } else if (key == "year_column") {
            s.year_column = value;
        } else if (key == "period_column") {
            s.period_column = value;
        } else {
            throw ParseError(row, "unknown schema key '" + key + "'");
        }
    }
    return s;
}

PricePanel parse_price_csv(std::istream& source, const CsvSchema& schema) {
    std::string line;
    if (!std::getline(source, line)) throw ParseError(1, "empty input");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const Header header{split_record(line, schema.delimiter, 1)};
    PricePanel panel = schema.layout == CsvSchema::Layout::Long ? parse_long(source, schema, header)
                                                                : parse_wide(source, schema, header);
    panel.validate();
    return panel;
}

PricePanel read_price_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open '" + path + "'");
    return parse_price_csv(in, schema);
}

void write_price_csv(std::ostream& out, const PricePanel& panel, const CsvSchema& schema) {
    const char d = schema.delimiter;
    if (schema.layout == CsvSchema::Layout::Long) {
        out << schema.entity_column << d << schema.quarter_column << d << schema.value_column << '\n';
        for (std::size_t i = 0; i < panel.entities.size(); ++i)
            for (std::size_t t = 0; t < panel.quarters.size(); ++t)
                out << panel.entities[i] << d << panel.quarters[t].to_string() << d
                    << format_double(panel.levels(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t))) << '\n';
        return;
    }
    out << schema.quarter_column;
    for (const auto& e : panel.entities) out << d << e;
    out << '\n';
    for (std::size_t t = 0; t < panel.quarters.size(); ++t) {
        out << panel.quarters[t].to_string();
        for (std::size_t i = 0; i < panel.entities.size(); ++i)
            out << d << format_double(panel.levels(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)));
        out << '\n';
    }
}

Series parse_level_series(std::istream& source, const CsvSchema& schema, const std::string& name) {
    std::string line;
    if (!std::getline(source, line)) throw ParseError(1, "empty input");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const Header header{split_record(line, schema.delimiter, 1)};
    const QuarterColumns qc = locate_quarter(header, schema);
    const auto val = header.find(schema.value_column);
    if (!val) throw ParseError(1, "header lacks value column '" + schema.value_column + "'");

    std::map<Quarter, double> values;
    std::size_t row = 1;
    while (std::getline(source, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto f = split_record(line, schema.delimiter, row);
        if (f.size() != header.names.size())
            throw ParseError(row, "expected " + std::to_string(header.names.size()) + " fields, found " +
                                      std::to_string(f.size()));
        const Quarter q = qc.read(f, row);
        if (!values.emplace(q, parse_value(f[*val], row, schema.value_column)).second)
            throw ParseError(row, "duplicate row for quarter " + q.to_string());
    }
    if (values.empty()) throw ParseError(row, "no data rows");

    Series s;
    s.name = name;
    s.values.resize(static_cast<Eigen::Index>(values.size()));
    Eigen::Index k = 0;
    for (const auto& [q, v] : values) {
        s.quarters.push_back(q);
        s.values(k++) = v;
    }
    check_gap_free(s.quarters);
    return s;
}

ReturnPanel log_returns(const PricePanel& panel) {
    panel.validate();
    if (panel.quarter_count() < 2) throw InvalidArgument("need at least two quarters to form returns");
    ReturnPanel r;
    r.entities = panel.entities;
    r.quarters.assign(panel.quarters.begin() + 1, panel.quarters.end());
    const Eigen::MatrixXd logs = panel.levels.array().log().matrix();
    const Eigen::Index T = logs.cols();
    r.returns = logs.rightCols(T - 1) - logs.leftCols(T - 1);
    r.validate();
    return r;
}

Series log_returns(const Series& levels) {
    if (levels.values.size() < 2) throw InvalidArgument("need at least two levels to form returns");
    if ((levels.values.array() <= 0.0).any()) throw InvalidArgument("series '" + levels.name + "' has non-positive levels");
    Series r;
    r.name = levels.name;
    r.quarters.assign(levels.quarters.begin() + 1, levels.quarters.end());
    const Eigen::VectorXd logs = levels.values.array().log().matrix();
    const Eigen::Index T = logs.size();
    r.values = logs.tail(T - 1) - logs.head(T - 1);
    return r;
}

Series national_return_series(const ReturnPanel& panel, const std::optional<Series>& override_series) {
    Series out;
    if (!override_series) {
        out.name = "equal_weight_mean";
        out.quarters = panel.quarters;
        out.values = panel.returns.colwise().mean().transpose();
        return out;
    }
    const Series& o = *override_series;
    if (static_cast<std::size_t>(o.values.size()) != o.quarters.size())
        throw InvalidArgument("override series '" + o.name + "' has mismatched labels and values");
    std::map<Quarter, double> lookup;
    for (std::size_t k = 0; k < o.quarters.size(); ++k) lookup[o.quarters[k]] = o.values(static_cast<Eigen::Index>(k));
    out.name = o.name;
    out.quarters = panel.quarters;
    out.values.resize(static_cast<Eigen::Index>(panel.quarters.size()));
    for (std::size_t t = 0; t < panel.quarters.size(); ++t) {
        auto it = lookup.find(panel.quarters[t]);
        if (it == lookup.end())
            throw InvalidArgument("override series '" + o.name + "' does not cover quarter " +
                                  panel.quarters[t].to_string());
        out.values(static_cast<Eigen::Index>(t)) = it->second;
    }
    return out;
}

std::vector<WindowSpec> windows(const ReturnPanel& panel, std::size_t size_s) {
    const std::size_t n = panel.entity_count();
    if (size_s < n)
        throw InvalidArgument("window size " + std::to_string(size_s) + " is below the entity count " +
                              std::to_string(n) + "; the correlation matrix would be singular");
    if (size_s == 0 || panel.quarter_count() < size_s)
        throw InvalidArgument("panel has " + std::to_string(panel.quarter_count()) +
                              " return quarters, fewer than the window size " + std::to_string(size_s));
    std::vector<WindowSpec> out;
    for (std::size_t end = size_s - 1; end < panel.quarter_count(); ++end)
        out.push_back(WindowSpec{panel.quarters[end], size_s, end});
    return out;
}

WindowSpec window_ending(const ReturnPanel& panel, Quarter end, std::size_t size_s) {
    const auto idx = panel.index_of(end);
    if (!idx) throw InvalidArgument("quarter " + end.to_string() + " is outside the return panel");
    if (size_s == 0 || *idx + 1 < size_s)
        throw InvalidArgument("window of size " + std::to_string(size_s) + " ending " + end.to_string() +
                              " does not fit in the panel");
    return WindowSpec{end, size_s, *idx};
}

WindowSpec full_window(const ReturnPanel& panel) {
    if (panel.quarters.empty()) throw InvalidArgument("return panel is empty");
    return WindowSpec{panel.quarters.back(), panel.quarter_count(), panel.quarter_count() - 1};
}

Eigen::MatrixXd window_block(const ReturnPanel& panel, const WindowSpec& window) {
    if (window.size == 0 || window.end_index >= panel.quarter_count() || window.end_index + 1 < window.size)
        throw InvalidArgument("window ending " + window.end.to_string() + " is not contained in the panel");
    return panel.returns.middleCols(static_cast<Eigen::Index>(window.first_index()),
                                    static_cast<Eigen::Index>(window.size));
}

Eigen::VectorXd window_slice(const Series& series, const ReturnPanel& panel, const WindowSpec& window) {
    if (series.quarters.size() != panel.quarters.size() || series.quarters != panel.quarters)
        throw InvalidArgument("series '" + series.name + "' is not aligned with the return panel");
    return series.values.segment(static_cast<Eigen::Index>(window.first_index()),
                                 static_cast<Eigen::Index>(window.size));
}

} // namespace spatiocorr
