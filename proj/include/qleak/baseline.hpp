#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qleak/stats.hpp"

namespace qleak::baseline {

class TableError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Backend { simulator, hardware };

Backend parse_backend(const std::string& text);  // "sim"/"simulator", "qc"/"hardware"
const char* to_string(Backend b);

// One benchmark circuit with its mean latency on each backend and, when
// known, the per-group measurement count needed to tell it apart from its
// closest neighbor.
struct BaselineEntry {
    std::string name;
    double sim_latency = 0.0;  // seconds
    double qc_latency = 0.0;   // seconds
    std::optional<double> sim_required;
    std::optional<double> qc_required;

    double latency(Backend b) const { return b == Backend::simulator ? sim_latency : qc_latency; }
    std::optional<double> required(Backend b) const {
        return b == Backend::simulator ? sim_required : qc_required;
    }
    friend bool operator==(const BaselineEntry&, const BaselineEntry&) = default;
};

// All circuits share one variance per backend.
struct BaselineTable {
    std::vector<BaselineEntry> entries;
    double sim_variance = 0.003;  // seconds^2
    double qc_variance = 0.3;     // seconds^2

    double variance(Backend b) const { return b == Backend::simulator ? sim_variance : qc_variance; }
    std::size_t index_of(const std::string& name) const;
    const BaselineEntry& find(const std::string& name) const { return entries[index_of(name)]; }
    stats::TimingDistribution model(std::size_t i, Backend b) const;

    void validate() const;
    friend bool operator==(const BaselineTable&, const BaselineTable&) = default;
};

// CSV schema: name,sim_latency_s,qc_latency_s,sim_required,qc_required
// Required columns may be left empty.
BaselineTable load_table(std::istream& in);
BaselineTable load_table(const std::filesystem::path& path);
void save_table(const BaselineTable& table, std::ostream& out);
void save_table(const BaselineTable& table, const std::filesystem::path& path);

// Square matrix with row/column labels. Diagonal cells hold NaN (undefined);
// pairs with identical means hold +infinity (indistinguishable).
struct Matrix {
    std::vector<std::string> labels;
    std::vector<double> cells;

    std::size_t size() const { return labels.size(); }
    double at(std::size_t i, std::size_t j) const { return cells[i * size() + j]; }
    double& at(std::size_t i, std::size_t j) { return cells[i * size() + j]; }
};

// Per-group n for every pair of models, from the pairwise effect size.
Matrix required_matrix(const std::vector<std::string>& labels,
                       const std::vector<stats::TimingDistribution>& models, const stats::PowerSpec& spec);
// Overlapping coefficient for every pair; unit diagonal.
Matrix ovl_matrix(const std::vector<std::string>& labels,
                  const std::vector<stats::TimingDistribution>& models);

Matrix pairwise_matrix(const BaselineTable& table, Backend backend, const stats::PowerSpec& spec = {});

struct NeighborRequirement {
    std::string neighbor;
    double n = 0.0;
};

// Measurements needed to separate `name` from its closest-mean neighbor on
// the backend, floored at 1.
NeighborRequirement nearest_neighbor_requirement(const BaselineTable& table, const std::string& name,
                                                 Backend backend, const stats::PowerSpec& spec = {});

// Matrix with header row and column of labels; undefined cells left empty.
void write_matrix_csv(std::ostream& out, const Matrix& m);
// Long form `i,j,ovl,required_n` with 1-based indices, for plotting.
void write_long_form_csv(std::ostream& out, const Matrix& ovl, const Matrix& required);

// ---------------------------------------------------------------------------
// Regression of the printed requirement columns
// ---------------------------------------------------------------------------

struct RowCheck {
    std::string name;
    std::string neighbor;
    std::optional<double> printed;
    double recomputed = 0.0;
    double rel_error = 0.0;  // NaN when nothing is printed
    double tolerance = 0.0;  // 0 means exact match
    bool pass = true;
};

// Exact for printed 1, 2% for printed >= 100, 15% otherwise.
double tolerance_for(double printed);

std::vector<RowCheck> reproduce(const BaselineTable& table, Backend backend, const stats::PowerSpec& spec = {});

// name,backend,neighbor,printed,recomputed,rel_error,tolerance,pass
void write_reproduction_csv(std::ostream& out, const std::vector<RowCheck>& rows, Backend backend);

// ---------------------------------------------------------------------------
// Grover oracle catalog
// ---------------------------------------------------------------------------

struct GroverVariant {
    std::string key;     // three-bit hidden key, "000".."111"
    int iterations = 0;  // 1..3
    int index = 0;       // 1..24: 8 * (iterations - 1) + key + 1
    stats::TimingDistribution timing;

    std::string label() const;  // e.g. "i2-k101"
};

// Mean latency = base + iterations * per_iteration + key offset, with key
// offsets evenly spaced over [-spread/2, +spread/2] in key order.
struct GroverCalibration {
    double base_latency = 0.16;        // seconds
    double per_iteration = 0.010;      // seconds
    double per_oracle_spread = 3.6e-4; // seconds
    double variance = 0.003;           // seconds^2
};

std::vector<GroverVariant> grover_catalog(const GroverCalibration& cal = {});

}  // namespace qleak::baseline
