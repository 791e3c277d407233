#pragma once

// Scenario driver: builds the configured system and clock, runs the audit
// suites and collects their checks, data sections and plot tables.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "eptime/config.hpp"
#include "eptime/linalg.hpp"
#include "eptime/quantum.hpp"

namespace eptime::scenario {

using Json = nlohmann::json;

enum class Relation { less, less_equal, greater, greater_equal, equal };

std::string to_string(Relation r);

struct CheckRecord {
    std::string id;
    std::string digest;   ///< FNV-1a of the canonical config and the id
    double measured = 0.0;
    double threshold = 0.0;
    Relation relation = Relation::less;
    bool satisfied = false;     ///< measured `relation` threshold
    bool expected_fail = false; ///< recorded as passing when not satisfied
    std::string note;

    bool passed() const noexcept { return satisfied != expected_fail; }
};

class AuditReport {
  public:
    AuditReport(std::string scenario, std::string config_text, std::uint64_t seed);

    /// Records a check. Throws InvalidInput on a duplicate id.
    const CheckRecord &check(const std::string &id, double measured,
                             Relation relation, double threshold,
                             bool expected_fail = false, std::string note = {});

    void set_data(const std::string &section, Json value);

    const std::string &scenario() const noexcept { return scenario_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const std::vector<CheckRecord> &checks() const noexcept { return checks_; }
    const std::map<std::string, Json> &data() const noexcept { return data_; }
    bool passed() const;

    /// Full report. The timestamp is the only run-dependent field and is
    /// omitted when `with_timestamp` is false.
    Json to_json(bool with_timestamp = true) const;
    /// One row per check: id,digest,measured,relation,threshold,passed,expected_fail.
    std::string to_csv() const;

  private:
    std::string scenario_;
    std::string config_text_;
    std::uint64_t seed_;
    std::vector<CheckRecord> checks_;
    std::map<std::string, Json> data_;
};

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(const std::string &text);

/// Numeric CSV table; doubles written with 17 significant digits.
struct PlotTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

/// Writes the table; an empty table produces a header-only file. IO failures
/// raise Error naming the path.
void emit_plotdata(const PlotTable &table, const std::filesystem::path &path);

struct ScenarioResult {
    AuditReport report;
    std::map<std::string, PlotTable> plots; ///< file stem -> table
    std::map<std::string, Json> artifacts;  ///< file stem -> JSON document
};

/// Runs `suites` (all configured or applicable suites when empty). Module
/// errors propagate with the scenario and suite prepended to the message.
ScenarioResult run_scenario(const config::ScenarioConfig &cfg,
                            const std::vector<std::string> &suites = {});

/// Suites run for a config when none are requested explicitly.
std::vector<std::string> default_suites(const config::ScenarioConfig &cfg);

enum class Format { json, csv };

/// Writes report.{json,csv}, every plot table and artifact into `dir`.
void write_outputs(const ScenarioResult &result, const std::filesystem::path &dir,
                   Format format);

// Builders shared with the tests -------------------------------------------

/// System Hamiltonian described by `spec`; the clock is needed for grid-relative
/// gaps and snapping. Randomness for random-hermitian comes from `rng`.
CMatrix build_system_matrix(const config::SystemSpec &spec,
                            const quantum::ClockSpace &clock, std::mt19937_64 &rng);

/// Rounds each eigenvalue of `h` to the nearest multiple of the clock's
/// frequency step, keeping the eigenvectors.
CMatrix snap_to_grid(const CMatrix &h, const quantum::ClockSpace &clock);

/// Truncated ladder-operator matrices in the number basis.
CMatrix position_matrix(int levels, double omega);
CMatrix momentum_matrix(int levels, double omega);

/// Projector onto the eigenvectors of the truncated position matrix with
/// eigenvalue in [a, b].
CMatrix position_projector(int levels, double omega, double a, double b);

quantum::ClockSpace build_clock(const config::ClockSpec &spec, quantum::Sign sign);

} // namespace eptime::scenario
