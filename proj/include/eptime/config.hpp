#pragma once

// Scenario configuration files.
//
// Grammar: one `key = value` per line, dotted keys (`clock.M = 64`), `#`
// starts a comment. Values are JSON literals (numbers, "strings", true/false,
// arrays) or bare words such as `oscillator`. Unknown keys are rejected and
// every violation in a file is reported together.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "eptime/errors.hpp"

namespace eptime::config {

enum class SystemKind {
    oscillator,
    qubit,
    free_particle,
    quartic,
    random_hermitian,
    explicit_matrix,
};

std::string to_string(SystemKind kind);

struct SystemSpec {
    SystemKind kind = SystemKind::qubit;
    int levels = 8;                     ///< truncation for oscillator-like kinds
    double omega = 1.0;                 ///< oscillator frequency
    std::optional<double> gap;          ///< qubit gap (energy units)
    std::optional<double> gap_bins;     ///< qubit gap in frequency-grid steps
    double scale = 1.0;                 ///< random-hermitian entry scale
    std::vector<std::vector<double>> matrix; ///< explicit-matrix (real)
    bool snap_to_grid = false;

    bool operator==(const SystemSpec &) const = default;
};

struct ClockSpec {
    int m = 64;
    double delta_t = 0.25;
    double t0 = 0.0;
    int sigma = 1;
    bool paired = false; ///< run both sign conventions side by side

    bool operator==(const ClockSpec &) const = default;
};

struct ToleranceSpec {
    std::optional<double> eps_match;      ///< absolute
    std::optional<double> eps_match_bins; ///< in units of the frequency step
    double classical_constraint = 1e-8;   ///< max |H_ex| at dtheta = 1e-3
    double equivalence = 1e-9;

    bool operator==(const ToleranceSpec &) const = default;
};

struct ClassicalSpec {
    double dt = 1e-3;
    double t_end = 6.283185307179586;
    double t0 = 0.0;
    std::vector<double> q0{1.0};
    std::vector<double> p0{0.0};

    bool operator==(const ClassicalSpec &) const = default;
};

struct QuantumSpec {
    int random_states = 50;
    int random_thetas = 10;
    int covariance_bins = 5;

    bool operator==(const QuantumSpec &) const = default;
};

struct EventSpec {
    std::optional<std::vector<double>> position; ///< [a, b] for oscillators
    std::optional<std::string> system;           ///< "plus" or "ground"
    std::vector<int> window;                     ///< clock bins; empty = all

    bool operator==(const EventSpec &) const = default;
};

struct ScenarioConfig {
    std::string name;
    std::string description;
    std::vector<std::string> suites;
    SystemSpec system;
    ClockSpec clock;
    ToleranceSpec tolerances;
    ClassicalSpec classical;
    QuantumSpec quantum;
    EventSpec event;
    bool expect_deficient_subspace = false;
    std::uint64_t seed = 20240601;
    std::string output_dir = "out";

    bool operator==(const ScenarioConfig &) const = default;
};

/// Names accepted in `scenario.suites` and as CLI subcommands.
const std::vector<std::string> &suite_names();

/// Thrown with every syntax and semantic violation found in a document.
class ConfigError : public InvalidInput {
  public:
    explicit ConfigError(std::vector<std::string> problems);
    const std::vector<std::string> &problems() const noexcept { return problems_; }

  private:
    std::vector<std::string> problems_;
};

ScenarioConfig parse_config(std::string_view text);
ScenarioConfig load_config(const std::string &path);

/// Canonical text form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const ScenarioConfig &cfg);

} // namespace eptime::config
