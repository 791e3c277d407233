#include "eptime/serialization.hpp"

#include "eptime/errors.hpp"

namespace eptime::io {

namespace {

const char *kOrdering = "system-major";

Json grid_to_json(const GridInfo &g) {
    return Json{{"M", g.m}, {"deltaT", g.delta_t}, {"T0", g.t0}};
}

} // namespace

GridInfo grid_info(const quantum::ClockSpace &clock) {
    return {clock.size(), clock.delta_t(), clock.origin(),
            static_cast<int>(clock.sign())};
}

Json matrix_to_json(const CMatrix &a, const std::optional<GridInfo> &grid) {
    Json entries = Json::array();
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        for (Eigen::Index c = 0; c < a.cols(); ++c) {
            entries.push_back(Json::array({a(r, c).real(), a(r, c).imag()}));
        }
    }
    Json j{{"shape", {a.rows(), a.cols()}},
           {"entries", std::move(entries)},
           {"basis_ordering", kOrdering}};
    if (grid) {
        j["sigma"] = grid->sigma;
        j["grid"] = grid_to_json(*grid);
    }
    return j;
}

CMatrix matrix_from_json(const Json &j) {
    try {
        const auto shape = j.at("shape").get<std::vector<Eigen::Index>>();
        if (shape.size() != 2 || shape[0] < 0 || shape[1] < 0) {
            throw InvalidInput("matrix_from_json: shape must be [rows, cols]");
        }
        const auto &entries = j.at("entries");
        if (!entries.is_array() ||
            entries.size() != static_cast<std::size_t>(shape[0] * shape[1])) {
            throw InvalidInput("matrix_from_json: entry count does not match shape");
        }
        CMatrix a(shape[0], shape[1]);
        std::size_t idx = 0;
        for (Eigen::Index r = 0; r < shape[0]; ++r) {
            for (Eigen::Index c = 0; c < shape[1]; ++c, ++idx) {
                const auto &e = entries[idx];
                if (!e.is_array() || e.size() != 2) {
                    throw InvalidInput("matrix_from_json: entries must be [re, im]");
                }
                a(r, c) = Complex(e[0].get<double>(), e[1].get<double>());
            }
        }
        return a;
    } catch (const nlohmann::json::exception &e) {
        throw InvalidInput(std::string("matrix_from_json: ") + e.what());
    }
}

Json state_to_json(const quantum::ExtendedState &psi, const GridInfo &grid) {
    return matrix_to_json(psi.amplitudes, grid);
}

quantum::ExtendedState state_from_json(const Json &j) {
    const CMatrix a = matrix_from_json(j);
    if (a.cols() != 1) {
        throw InvalidInput("state_from_json: expected a column vector");
    }
    // Stored amplitudes are already normalized; keep them bit-exact.
    return quantum::ExtendedState{a.col(0)};
}

Json subspace_to_json(const constraint::PhysicalSubspace &sub,
                      const quantum::ClockSpace &clock) {
    Json j = matrix_to_json(sub.basis, grid_info(clock));
    j["method"] = sub.method == constraint::Method::spectral ? "spectral" : "kernel";
    j["tolerance"] = sub.tolerance;
    j["system_dim"] = sub.system_dim;
    Json pairs = Json::array();
    for (const auto &p : sub.pairs) {
        pairs.push_back({{"i", p.level},
                         {"k", p.k},
                         {"E_i", p.energy},
                         {"s_k", p.clock_value},
                         {"mismatch", p.mismatch}});
    }
    j["pairs"] = std::move(pairs);
    Json misses = Json::array();
    for (const auto &m : sub.misses) {
        misses.push_back({{"i", m.level},
                          {"E_i", m.energy},
                          {"nearest_k", m.nearest_k},
                          {"distance", m.distance}});
    }
    j["misses"] = std::move(misses);
    if (sub.nearest_excluded_eigenvalue) {
        j["nearest_excluded_eigenvalue"] = *sub.nearest_excluded_eigenvalue;
    }
    return j;
}

constraint::PhysicalSubspace subspace_from_json(const Json &j) {
    try {
        constraint::PhysicalSubspace sub;
        sub.basis = matrix_from_json(j);
        sub.method = j.at("method").get<std::string>() == "spectral"
                         ? constraint::Method::spectral
                         : constraint::Method::kernel;
        sub.tolerance = j.at("tolerance").get<double>();
        sub.system_dim = j.at("system_dim").get<Eigen::Index>();
        sub.clock_dim = j.at("grid").at("M").get<int>();
        for (const auto &p : j.at("pairs")) {
            sub.pairs.push_back({p.at("i").get<Eigen::Index>(), p.at("k").get<int>(),
                                 p.at("E_i").get<double>(), p.at("s_k").get<double>(),
                                 p.at("mismatch").get<double>()});
        }
        for (const auto &m : j.at("misses")) {
            sub.misses.push_back({m.at("i").get<Eigen::Index>(),
                                  m.at("E_i").get<double>(),
                                  m.at("nearest_k").get<int>(),
                                  m.at("distance").get<double>()});
        }
        if (j.contains("nearest_excluded_eigenvalue")) {
            sub.nearest_excluded_eigenvalue =
                j.at("nearest_excluded_eigenvalue").get<double>();
        }
        return sub;
    } catch (const nlohmann::json::exception &e) {
        throw InvalidInput(std::string("subspace_from_json: ") + e.what());
    }
}

} // namespace eptime::io
