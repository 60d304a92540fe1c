#include "qleak/baseline.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <unordered_set>

#include "qleak/csv.hpp"

namespace qleak::baseline {

namespace {

const csv::Row kHeader = {"name", "sim_latency_s", "qc_latency_s", "sim_required", "qc_required"};

std::optional<double> parse_optional(const std::string& field) {
    if (field.find_first_not_of(" \t") == std::string::npos) return std::nullopt;
    return csv::parse_double(field);
}

std::string format_optional(const std::optional<double>& v) { return v ? csv::format(*v) : std::string(); }

constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

}  // namespace

Backend parse_backend(const std::string& text) {
    if (text == "sim" || text == "simulator") return Backend::simulator;
    if (text == "qc" || text == "hardware") return Backend::hardware;
    throw std::invalid_argument("unknown backend '" + text + "' (expected sim or qc)");
}

const char* to_string(Backend b) { return b == Backend::simulator ? "sim" : "qc"; }

std::size_t BaselineTable::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < entries.size(); ++i)
        if (entries[i].name == name) return i;
    throw TableError("no circuit named '" + name + "' in baseline table");
}

stats::TimingDistribution BaselineTable::model(std::size_t i, Backend b) const {
    return {entries.at(i).latency(b), variance(b)};
}

void BaselineTable::validate() const {
    if (entries.empty()) throw TableError("baseline table has no entries");
    if (!(sim_variance > 0.0) || !(qc_variance > 0.0)) throw TableError("backend variances must be positive");
    std::unordered_set<std::string> seen;
    for (const auto& e : entries) {
        if (e.name.empty()) throw TableError("entry with empty name");
        if (!seen.insert(e.name).second) throw TableError("duplicate circuit name '" + e.name + "'");
        for (double lat : {e.sim_latency, e.qc_latency})
            if (!std::isfinite(lat) || !(lat > 0.0))
                throw TableError("non-positive latency for '" + e.name + "'");
        for (const auto& req : {e.sim_required, e.qc_required})
            if (req && !(*req >= 1.0)) throw TableError("required count below 1 for '" + e.name + "'");
    }
}

BaselineTable load_table(std::istream& in) {
    std::vector<csv::Row> rows;
    try {
        rows = csv::read(in);
    } catch (const csv::ParseError& e) {
        throw TableError(e.what());
    }
    if (rows.empty()) throw TableError("baseline CSV is empty");
    if (rows.front() != kHeader) throw TableError("baseline CSV header must be: name,sim_latency_s,qc_latency_s,sim_required,qc_required");

    BaselineTable table;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::string where = "baseline CSV line " + std::to_string(r + 1) + ": ";
        if (row.size() != kHeader.size())
            throw TableError(where + "expected 5 fields, found " + std::to_string(row.size()));
        try {
            table.entries.push_back({row[0], csv::parse_double(row[1]), csv::parse_double(row[2]),
                                     parse_optional(row[3]), parse_optional(row[4])});
        } catch (const csv::ParseError& e) {
            throw TableError(where + e.what());
        }
    }
    table.validate();
    return table;
}

BaselineTable load_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw TableError("cannot open baseline table " + path.string());
    return load_table(in);
}

void save_table(const BaselineTable& table, std::ostream& out) {
    csv::write_row(out, kHeader);
    for (const auto& e : table.entries)
        csv::write_row(out, {e.name, csv::format(e.sim_latency), csv::format(e.qc_latency),
                             format_optional(e.sim_required), format_optional(e.qc_required)});
}

void save_table(const BaselineTable& table, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw TableError("cannot write baseline table " + path.string());
    save_table(table, out);
}

Matrix required_matrix(const std::vector<std::string>& labels,
                       const std::vector<stats::TimingDistribution>& models, const stats::PowerSpec& spec) {
    const std::size_t k = models.size();
    if (labels.size() != k) throw std::invalid_argument("required_matrix: label/model count mismatch");
    Matrix m{labels, std::vector<double>(k * k, kUndefined)};
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            const double n = stats::required_sample_size(stats::effect_size(models[i], models[j]), spec);
            m.at(i, j) = n;
            m.at(j, i) = n;
        }
    }
    return m;
}

Matrix ovl_matrix(const std::vector<std::string>& labels,
                  const std::vector<stats::TimingDistribution>& models) {
    const std::size_t k = models.size();
    if (labels.size() != k) throw std::invalid_argument("ovl_matrix: label/model count mismatch");
    Matrix m{labels, std::vector<double>(k * k, 1.0)};
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            const double v = stats::ovl(models[i], models[j]);
            m.at(i, j) = v;
            m.at(j, i) = v;
        }
    }
    return m;
}

Matrix pairwise_matrix(const BaselineTable& table, Backend backend, const stats::PowerSpec& spec) {
    if (table.entries.size() < 2) throw TableError("pairwise matrix needs at least two circuits");
    std::vector<std::string> labels;
    std::vector<stats::TimingDistribution> models;
    for (std::size_t i = 0; i < table.entries.size(); ++i) {
        labels.push_back(table.entries[i].name);
        models.push_back(table.model(i, backend));
    }
    return required_matrix(labels, models, spec);
}

NeighborRequirement nearest_neighbor_requirement(const BaselineTable& table, const std::string& name,
                                                 Backend backend, const stats::PowerSpec& spec) {
    if (table.entries.size() < 2) throw TableError("nearest neighbor needs at least two circuits");
    const std::size_t self = table.index_of(name);
    const double mu = table.entries[self].latency(backend);
    std::size_t best = self;
    double best_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < table.entries.size(); ++i) {
        if (i == self) continue;
        const double gap = std::fabs(table.entries[i].latency(backend) - mu);
        if (gap < best_gap) {
            best_gap = gap;
            best = i;
        }
    }
    const double d = best_gap / std::sqrt(table.variance(backend));
    return {table.entries[best].name, std::max(1.0, stats::required_sample_size(d, spec))};
}

void write_matrix_csv(std::ostream& out, const Matrix& m) {
    csv::Row header{""};
    header.insert(header.end(), m.labels.begin(), m.labels.end());
    csv::write_row(out, header);
    for (std::size_t i = 0; i < m.size(); ++i) {
        csv::Row row{m.labels[i]};
        for (std::size_t j = 0; j < m.size(); ++j) {
            const double v = m.at(i, j);
            row.push_back(std::isnan(v) ? std::string() : csv::format(v));
        }
        csv::write_row(out, row);
    }
}

void write_long_form_csv(std::ostream& out, const Matrix& ovl, const Matrix& required) {
    if (ovl.size() != required.size()) throw std::invalid_argument("long form: matrix size mismatch");
    csv::write_row(out, {"i", "j", "ovl", "required_n"});
    for (std::size_t i = 0; i < ovl.size(); ++i) {
        for (std::size_t j = 0; j < ovl.size(); ++j) {
            const double n = required.at(i, j);
            csv::write_row(out, {std::to_string(i + 1), std::to_string(j + 1), csv::format(ovl.at(i, j)),
                                 std::isnan(n) ? std::string() : csv::format(n)});
        }
    }
}

double tolerance_for(double printed) {
    if (printed == 1.0) return 0.0;
    return printed >= 100.0 ? 0.02 : 0.15;
}

std::vector<RowCheck> reproduce(const BaselineTable& table, Backend backend, const stats::PowerSpec& spec) {
    table.validate();
    std::vector<RowCheck> rows;
    for (const auto& e : table.entries) {
        const auto nn = nearest_neighbor_requirement(table, e.name, backend, spec);
        RowCheck r;
        r.name = e.name;
        r.neighbor = nn.neighbor;
        r.recomputed = nn.n;
        r.printed = e.required(backend);
        if (r.printed) {
            r.tolerance = tolerance_for(*r.printed);
            r.rel_error = std::fabs(r.recomputed - *r.printed) / *r.printed;
            r.pass = r.tolerance == 0.0 ? r.recomputed == *r.printed : r.rel_error <= r.tolerance;
        } else {
            r.rel_error = std::numeric_limits<double>::quiet_NaN();
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_reproduction_csv(std::ostream& out, const std::vector<RowCheck>& rows, Backend backend) {
    csv::write_row(out, {"name", "backend", "neighbor", "printed", "recomputed", "rel_error", "tolerance", "pass"});
    for (const auto& r : rows)
        csv::write_row(out, {r.name, to_string(backend), r.neighbor, r.printed ? csv::format(*r.printed) : "",
                             csv::format(r.recomputed), std::isnan(r.rel_error) ? "" : csv::format(r.rel_error),
                             csv::format(r.tolerance), r.pass ? "1" : "0"});
}

std::string GroverVariant::label() const { return "i" + std::to_string(iterations) + "-k" + key; }

std::vector<GroverVariant> grover_catalog(const GroverCalibration& cal) {
    if (!(cal.base_latency > 0.0) || !(cal.per_iteration > 0.0) || !(cal.variance > 0.0))
        throw std::invalid_argument("grover_catalog: latencies and variance must be positive");
    if (!(cal.per_oracle_spread >= 0.0) || !(cal.per_oracle_spread < cal.per_iteration))
        throw std::invalid_argument("grover_catalog: oracle spread must lie in [0, per_iteration)");

    std::vector<GroverVariant> out;
    out.reserve(24);
    for (int it = 1; it <= 3; ++it) {
        for (int k = 0; k < 8; ++k) {
            std::string key;
            for (int bit = 2; bit >= 0; --bit) key.push_back(((k >> bit) & 1) ? '1' : '0');
            const double offset = cal.per_oracle_spread * (k / 7.0 - 0.5);
            const double mean = cal.base_latency + it * cal.per_iteration + offset;
            out.push_back({key, it, 8 * (it - 1) + k + 1, {mean, cal.variance}});
        }
    }
    return out;
}

}  // namespace qleak::baseline
