#include "eptime/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

namespace eptime::config {

namespace {

using Json = nlohmann::json;

struct Problems {
    std::vector<std::string> list;
    void add(int line, const std::string &key, const std::string &msg) {
        std::ostringstream os;
        if (line > 0) os << "line " << line << ": ";
        if (!key.empty()) os << key << ": ";
        os << msg;
        list.push_back(os.str());
    }
};

struct Entry {
    Json value;
    int line = 0;
};

const std::map<std::string, SystemKind> &kind_table() {
    static const std::map<std::string, SystemKind> table{
        {"oscillator", SystemKind::oscillator},
        {"qubit", SystemKind::qubit},
        {"free-particle", SystemKind::free_particle},
        {"quartic", SystemKind::quartic},
        {"random-hermitian", SystemKind::random_hermitian},
        {"explicit-matrix", SystemKind::explicit_matrix},
    };
    return table;
}

bool is_bare_word(std::string_view s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
               c == '-' || c == '+' || c == '.';
    });
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

// Strips a trailing `#` comment that is not inside a double-quoted string.
std::string_view strip_comment(std::string_view line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (c == '\\' && quoted) { ++i; continue; }
        if (c == '"') quoted = !quoted;
        if (c == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

// Typed accessors; each records a problem and returns nullopt on mismatch.
class Reader {
  public:
    Reader(const std::string &key, const Entry &e, Problems &p)
        : key_(key), e_(e), p_(p) {}

    std::optional<double> number(double lo = -HUGE_VAL, double hi = HUGE_VAL,
                                 bool open_lo = false) {
        if (!e_.value.is_number()) return fail("expected a number");
        const double v = e_.value.get<double>();
        if (!std::isfinite(v) || v < lo || v > hi || (open_lo && v <= lo)) {
            std::ostringstream os;
            os << "value " << v << " outside " << (open_lo ? "(" : "[") << lo
               << ", " << hi << "]";
            return fail(os.str());
        }
        return v;
    }

    std::optional<long long> integer(long long lo, long long hi) {
        if (!e_.value.is_number_integer()) return fail("expected an integer");
        const auto v = e_.value.get<long long>();
        if (v < lo || v > hi) {
            return fail("value " + std::to_string(v) + " outside [" +
                        std::to_string(lo) + ", " + std::to_string(hi) + "]");
        }
        return v;
    }

    std::optional<bool> boolean() {
        if (!e_.value.is_boolean()) return fail("expected true or false");
        return e_.value.get<bool>();
    }

    std::optional<std::string> string() {
        if (!e_.value.is_string()) return fail("expected a string");
        return e_.value.get<std::string>();
    }

    std::optional<std::vector<double>> numbers() {
        if (!e_.value.is_array()) return fail("expected an array of numbers");
        std::vector<double> out;
        for (const auto &v : e_.value) {
            if (!v.is_number() || !std::isfinite(v.get<double>())) {
                return fail("expected an array of finite numbers");
            }
            out.push_back(v.get<double>());
        }
        return out;
    }

    std::optional<std::vector<std::string>> strings() {
        if (!e_.value.is_array()) return fail("expected an array of strings");
        std::vector<std::string> out;
        for (const auto &v : e_.value) {
            if (!v.is_string()) return fail("expected an array of strings");
            out.push_back(v.get<std::string>());
        }
        return out;
    }

    std::optional<std::vector<std::vector<double>>> matrix() {
        if (!e_.value.is_array()) return fail("expected an array of rows");
        std::vector<std::vector<double>> out;
        for (const auto &row : e_.value) {
            if (!row.is_array()) return fail("expected an array of rows");
            std::vector<double> r;
            for (const auto &v : row) {
                if (!v.is_number()) return fail("matrix entries must be numbers");
                r.push_back(v.get<double>());
            }
            out.push_back(std::move(r));
        }
        return out;
    }

    std::nullopt_t fail(const std::string &msg) {
        p_.add(e_.line, key_, msg);
        return std::nullopt;
    }

  private:
    const std::string &key_;
    const Entry &e_;
    Problems &p_;
};

using Handler = std::function<void(Reader &, ScenarioConfig &)>;

const std::map<std::string, Handler> &handlers() {
    static const std::map<std::string, Handler> table{
        {"scenario.name", [](Reader &r, ScenarioConfig &c) {
             if (auto v = r.string()) {
                 if (v->empty()) r.fail("must not be empty");
                 else c.name = *v;
             }
         }},
        {"scenario.description", [](Reader &r, ScenarioConfig &c) {
             if (auto v = r.string()) c.description = *v;
         }},
        {"scenario.suites", [](Reader &r, ScenarioConfig &c) {
             if (auto v = r.strings()) {
                 for (const auto &s : *v) {
                     const auto &names = suite_names();
                     if (std::find(names.begin(), names.end(), s) == names.end()) {
                         r.fail("unknown suite '" + s + "'");
                         return;
                     }
                 }
                 c.suites = *v;
             }
         }},
        {"system.kind", [](Reader &r, ScenarioConfig &c) {
             if (auto v = r.string()) {
                 auto it = kind_table().find(*v);
                 if (it == kind_table().end()) r.fail("unknown system kind '" + *v + "'");
                 else c.system.kind = it->second;
             }
         }},
        {"system.levels", [](Reader &r, ScenarioConfig &c) {
             if (auto v = r.integer(1, 64)) c.system.levels = static_cast<int>(*v);
         }},
        {"system.omega", [](Reader &r, ScenarioConfig &c) {
             if (auto v = r.number(0.0, 1e6, true)) c.system.omega = *v;
         }},
        {"system.gap", [](Reader &r, ScenarioConfig &c) {
             if (auto v = r.number(-1e6, 1e6)) c.system.gap = *v;
         }},
        {"system.gap_bins", [](Reader &r, ScenarioConfig &c) {
             if (auto v = r.number(-1e4, 1e4)) c.system.gap_bins = *v;
         }},
        {"system.scale", [](Reader &r, ScenarioConfig &c) {
             if (auto v = r.number(0.0, 1e6, true)) c.system.scale = *v;
         }},
        {"system.matrix", [](Reader &r, ScenarioConfig &c) {
             if (auto v = r.matrix()) c.system.matrix = *v;
         }},
        {"system.snap_to_grid", [](Reader &r, ScenarioConfig &c) {
             if (auto v = r.boolean()) c.system.snap_to_grid = *v;
         }},
        {"clock.M", [](Reader &r, ScenarioConfig &c) {
             if (auto v = r.integer(8, 1024)) {
                 if (*v % 2 != 0) r.fail("must be even");
                 else c.clock.m = static_cast<int>(*v);
             }
         }},
        {"clock.deltaT", [](Reader &r, ScenarioConfig &c) {
             if (auto v = r.number(0.0, 1e6, true)) c.clock.delta_t = *v;
         }},
        {"clock.T0", [](Reader &r, ScenarioConfig &c) {
             if (auto v = r.number(-1e9, 1e9)) c.clock.t0 = *v;
         }},
        {"clock.sigma", [](Reader &r, ScenarioConfig &c) {
             // +1, -1, or "paired".
             if (auto v = r.string(); v) {
                 if (*v == "paired") { c.clock.paired = true; c.clock.sigma = 1; }
                 else if (*v == "+1" || *v == "plus") { c.clock.sigma = 1; c.clock.paired = false; }
                 else if (*v == "-1" || *v == "minus") { c.clock.sigma = -1; c.clock.paired = false; }
                 else r.fail("expected +1, -1 or paired");
             }
         }},
        {"tolerances.eps_match", [](Reader &r, ScenarioConfig &c) {
             if (auto v = r.number(0.0, 1e6, true)) c.tolerances.eps_match = *v;
         }},
        {"tolerances.eps_match_bins", [](Reader &r, ScenarioConfig &c) {
             if (auto v = r.number(0.0, 1e3, true)) c.tolerances.eps_match_bins = *v;
         }},
        {"tolerances.classical_constraint", [](Reader &r, ScenarioConfig &c) {
             if (auto v = r.number(0.0, 1.0, true)) c.tolerances.classical_constraint = *v;
         }},
        {"tolerances.equivalence", [](Reader &r, ScenarioConfig &c) {
             if (auto v = r.number(0.0, 1.0, true)) c.tolerances.equivalence = *v;
         }},
        {"classical.dt", [](Reader &r, ScenarioConfig &c) {
             if (auto v = r.number(0.0, 1e3, true)) c.classical.dt = *v;
         }},
        {"classical.t_end", [](Reader &r, ScenarioConfig &c) {
             if (auto v = r.number(0.0, 1e6, true)) c.classical.t_end = *v;
         }},
        {"classical.t0", [](Reader &r, ScenarioConfig &c) {
             if (auto v = r.number(-1e9, 1e9)) c.classical.t0 = *v;
         }},
        {"classical.q0", [](Reader &r, ScenarioConfig &c) {
             if (auto v = r.numbers()) c.classical.q0 = *v;
         }},
        {"classical.p0", [](Reader &r, ScenarioConfig &c) {
             if (auto v = r.numbers()) c.classical.p0 = *v;
         }},
        {"quantum.random_states", [](Reader &r, ScenarioConfig &c) {
             if (auto v = r.integer(1, 10000)) c.quantum.random_states = static_cast<int>(*v);
         }},
        {"quantum.random_thetas", [](Reader &r, ScenarioConfig &c) {
             if (auto v = r.integer(1, 10000)) c.quantum.random_thetas = static_cast<int>(*v);
         }},
        {"quantum.covariance_bins", [](Reader &r, ScenarioConfig &c) {
             if (auto v = r.integer(-1024, 1024)) c.quantum.covariance_bins = static_cast<int>(*v);
         }},
        {"event.position", [](Reader &r, ScenarioConfig &c) {
             if (auto v = r.numbers()) {
                 if (v->size() != 2 || (*v)[0] >= (*v)[1]) r.fail("expected [a, b] with a < b");
                 else c.event.position = *v;
             }
         }},
        {"event.system", [](Reader &r, ScenarioConfig &c) {
             if (auto v = r.string()) {
                 if (*v != "plus" && *v != "ground") r.fail("expected plus or ground");
                 else c.event.system = *v;
             }
         }},
        {"event.window", [](Reader &r, ScenarioConfig &c) {
             if (auto v = r.numbers()) {
                 std::vector<int> bins;
                 for (double b : *v) {
                     if (b != std::floor(b) || b < 0) { r.fail("bins must be non-negative integers"); return; }
                     bins.push_back(static_cast<int>(b));
                 }
                 c.event.window = bins;
             }
         }},
        {"expect.deficient_subspace", [](Reader &r, ScenarioConfig &c) {
             if (auto v = r.boolean()) c.expect_deficient_subspace = *v;
         }},
        {"seeds.main", [](Reader &r, ScenarioConfig &c) {
             if (auto v = r.integer(0, std::numeric_limits<long long>::max())) {
                 c.seed = static_cast<std::uint64_t>(*v);
             }
         }},
        {"output.dir", [](Reader &r, ScenarioConfig &c) {
             if (auto v = r.string()) c.output_dir = *v;
         }},
    };
    return table;
}

void validate(const ScenarioConfig &c, const std::map<std::string, Entry> &seen,
              Problems &p) {
    auto line_of = [&](const std::string &key) {
        auto it = seen.find(key);
        return it == seen.end() ? 0 : it->second.line;
    };
    if (c.name.empty() && !seen.count("scenario.name")) {
        p.add(0, "scenario.name", "required key is missing");
    }
    if (c.system.gap && c.system.gap_bins) {
        p.add(line_of("system.gap_bins"), "system.gap_bins",
              "conflicts with system.gap; give one of them");
    }
    if (c.tolerances.eps_match && c.tolerances.eps_match_bins) {
        p.add(line_of("tolerances.eps_match_bins"), "tolerances.eps_match_bins",
              "conflicts with tolerances.eps_match; give one of them");
    }
    if (c.classical.q0.empty() || c.classical.q0.size() != c.classical.p0.size()) {
        p.add(line_of("classical.p0"), "classical.p0",
              "q0 and p0 must have equal non-zero length");
    }
    if (c.system.kind == SystemKind::explicit_matrix) {
        const auto &m = c.system.matrix;
        bool square = !m.empty();
        for (const auto &row : m) square = square && row.size() == m.size();
        if (!square) {
            p.add(line_of("system.matrix"), "system.matrix",
                  "explicit-matrix needs a non-empty square matrix");
        }
    }
    if (c.system.kind == SystemKind::qubit && !c.system.gap && !c.system.gap_bins) {
        p.add(0, "system.gap", "qubit needs system.gap or system.gap_bins");
    }
    for (int b : c.event.window) {
        if (b >= c.clock.m) {
            p.add(line_of("event.window"), "event.window",
                  "bin " + std::to_string(b) + " outside [0, clock.M)");
            break;
        }
    }
}

std::string dump(const Json &j) { return j.dump(); }

} // namespace

std::string to_string(SystemKind kind) {
    for (const auto &[name, k] : kind_table()) {
        if (k == kind) return name;
    }
    return "unknown";
}

const std::vector<std::string> &suite_names() {
    static const std::vector<std::string> names{
        "classical-equivalence", "quantum-equivalence", "constraint-solve",
        "povm-audit",            "time-distribution",   "covariance",
    };
    return names;
}

ConfigError::ConfigError(std::vector<std::string> problems)
    : InvalidInput([&] {
          std::string msg = "invalid scenario config:";
          for (const auto &p : problems) msg += "\n  " + p;
          return msg;
      }()),
      problems_(std::move(problems)) {}

ScenarioConfig parse_config(std::string_view text) {
    Problems problems;
    std::map<std::string, Entry> seen;

    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string_view line = strip_comment(raw);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            const auto col = line.find_first_not_of(" \t") + 1;
            problems.add(line_no, "", "column " + std::to_string(col) +
                                          ": expected `key = value`");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty() || !is_bare_word(key)) {
            problems.add(line_no, "", "column 1: malformed key '" + key + "'");
            continue;
        }
        const std::size_t value_col =
            line.find_first_not_of(" \t", eq + 1) == std::string_view::npos
                ? eq + 2
                : line.find_first_not_of(" \t", eq + 1) + 1;
        const std::string value_text = trim(line.substr(eq + 1));
        if (value_text.empty()) {
            problems.add(line_no, key, "column " + std::to_string(value_col) +
                                           ": missing value");
            continue;
        }
        Json value;
        try {
            value = Json::parse(value_text);
        } catch (const Json::parse_error &e) {
            if (is_bare_word(value_text)) {
                value = value_text;
            } else {
                const std::size_t offset = e.byte == 0 ? 0 : e.byte - 1;
                problems.add(line_no, key, "column " +
                                               std::to_string(value_col + offset) +
                                               ": syntax error in value");
                continue;
            }
        }
        if (seen.count(key)) {
            problems.add(line_no, key, "duplicate key (first on line " +
                                           std::to_string(seen[key].line) + ")");
            continue;
        }
        seen.emplace(key, Entry{std::move(value), line_no});
    }

    ScenarioConfig cfg;
    for (const auto &[key, entry] : seen) {
        auto it = handlers().find(key);
        if (it == handlers().end()) {
            problems.add(entry.line, key, "unknown key");
            continue;
        }
        Reader reader(key, entry, problems);
        // clock.sigma accepts the integers +-1 as well as strings.
        if (key == "clock.sigma" && entry.value.is_number_integer()) {
            const auto v = entry.value.get<long long>();
            if (v == 1 || v == -1) {
                cfg.clock.sigma = static_cast<int>(v);
                cfg.clock.paired = false;
            } else {
                problems.add(entry.line, key, "expected +1, -1 or paired");
            }
            continue;
        }
        it->second(reader, cfg);
    }
    validate(cfg, seen, problems);

    if (!problems.list.empty()) {
        std::stable_sort(problems.list.begin(), problems.list.end());
        throw ConfigError(std::move(problems.list));
    }
    return cfg;
}

ScenarioConfig load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError({"cannot read config file '" + path + "'"});
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config(buf.str());
    } catch (const ConfigError &e) {
        std::vector<std::string> problems;
        for (const auto &p : e.problems()) problems.push_back(path + ": " + p);
        throw ConfigError(std::move(problems));
    }
}

std::string serialize_config(const ScenarioConfig &c) {
    std::ostringstream os;
    auto put = [&](const std::string &key, const Json &v) {
        os << key << " = " << dump(v) << '\n';
    };
    put("scenario.name", c.name);
    put("scenario.description", c.description);
    put("scenario.suites", c.suites);
    put("system.kind", to_string(c.system.kind));
    put("system.levels", c.system.levels);
    put("system.omega", c.system.omega);
    if (c.system.gap) put("system.gap", *c.system.gap);
    if (c.system.gap_bins) put("system.gap_bins", *c.system.gap_bins);
    put("system.scale", c.system.scale);
    if (!c.system.matrix.empty()) put("system.matrix", c.system.matrix);
    put("system.snap_to_grid", c.system.snap_to_grid);
    put("clock.M", c.clock.m);
    put("clock.deltaT", c.clock.delta_t);
    put("clock.T0", c.clock.t0);
    put("clock.sigma", c.clock.paired ? Json("paired") : Json(c.clock.sigma));
    if (c.tolerances.eps_match) put("tolerances.eps_match", *c.tolerances.eps_match);
    if (c.tolerances.eps_match_bins) {
        put("tolerances.eps_match_bins", *c.tolerances.eps_match_bins);
    }
    put("tolerances.classical_constraint", c.tolerances.classical_constraint);
    put("tolerances.equivalence", c.tolerances.equivalence);
    put("classical.dt", c.classical.dt);
    put("classical.t_end", c.classical.t_end);
    put("classical.t0", c.classical.t0);
    put("classical.q0", c.classical.q0);
    put("classical.p0", c.classical.p0);
    put("quantum.random_states", c.quantum.random_states);
    put("quantum.random_thetas", c.quantum.random_thetas);
    put("quantum.covariance_bins", c.quantum.covariance_bins);
    if (c.event.position) put("event.position", *c.event.position);
    if (c.event.system) put("event.system", *c.event.system);
    if (!c.event.window.empty()) put("event.window", c.event.window);
    put("expect.deficient_subspace", c.expect_deficient_subspace);
    put("seeds.main", c.seed);
    put("output.dir", c.output_dir);
    return os.str();
}

} // namespace eptime::config
