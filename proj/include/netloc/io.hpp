#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "netloc/measurements.hpp"
#include "netloc/pathloss.hpp"
#include "netloc/simulator.hpp"

namespace netloc::io {

/// Deterministic float formatting for output files.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

namespace detail {

inline std::string trim(const std::string& s) {
    auto begin = s.begin();
    auto end = s.end();
    while (begin != end && std::isspace(static_cast<unsigned char>(*begin))) ++begin;
    while (end != begin && std::isspace(static_cast<unsigned char>(*(end - 1)))) --end;
    return {begin, end};
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

[[noreturn]] inline void fail(const std::string& path, int line,
                              const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

inline double parse_double(const std::string& cell, const std::string& path,
                           int line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) fail(path, line, "trailing junk in number '" + cell + "'");
        return v;
    } catch (const std::invalid_argument&) {
        fail(path, line, "expected a number, got '" + cell + "'");
    } catch (const std::out_of_range&) {
        fail(path, line, "number out of range: '" + cell + "'");
    }
}

inline std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

inline bool is_number(const std::string& s) {
    if (s.empty()) return false;
    try {
        std::size_t used = 0;
        (void)std::stod(s, &used);
        return used == s.size();
    } catch (...) {
        return false;
    }
}

}  // namespace detail

/// RSSI matrix file: n comma-delimited lines of n cells; empty cells are
/// missing entries. Row i column j is the signal received at i from j.
inline RssiMatrix load_rssi_matrix(const std::string& path) {
    const auto lines = detail::read_lines(path);
    std::vector<std::vector<std::string>> cells;
    for (std::size_t k = 0; k < lines.size(); ++k) {
        if (detail::trim(lines[k]).empty() && k + 1 == lines.size()) break;
        cells.push_back(detail::split_csv(lines[k]));
    }
    const int n = static_cast<int>(cells.size());
    if (n < 2) throw std::runtime_error(path + ": RSSI matrix needs at least 2 rows");
    RssiMatrix out(n);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(cells[i].size()) != n)
            detail::fail(path, i + 1,
                         "expected " + std::to_string(n) + " cells, got " +
                             std::to_string(cells[i].size()));
        for (int j = 0; j < n; ++j) {
            const auto& cell = cells[i][j];
            if (cell.empty()) continue;
            if (i == j) {
                // self readings carry no distance information
                continue;
            }
            out.set(i, j, detail::parse_double(cell, path, i + 1));
        }
    }
    return out;
}

inline void save_rssi_matrix(const RssiMatrix& rssi, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    for (int i = 0; i < rssi.size(); ++i) {
        for (int j = 0; j < rssi.size(); ++j) {
            if (j) out << ',';
            if (i != j && rssi.has(i, j)) out << format_double(rssi.at(i, j));
        }
        out << '\n';
    }
}

/// Ground-truth positions file: `id,x_m,y_m` with a header row; ids are
/// 0-based device indices.
inline Eigen::Matrix<double, Eigen::Dynamic, 2> load_positions(
    const std::string& path) {
    const auto lines = detail::read_lines(path);
    std::map<int, std::pair<double, double>> rows;
    for (std::size_t k = 0; k < lines.size(); ++k) {
        const std::string line = detail::trim(lines[k]);
        if (line.empty() || line[0] == '#') continue;
        const auto cells = detail::split_csv(line);
        if (cells.size() != 3)
            detail::fail(path, static_cast<int>(k + 1), "expected id,x_m,y_m");
        if (!detail::is_number(cells[0])) continue;  // header
        const int id = static_cast<int>(
            detail::parse_double(cells[0], path, static_cast<int>(k + 1)));
        if (rows.count(id))
            detail::fail(path, static_cast<int>(k + 1),
                         "duplicate id " + std::to_string(id));
        rows[id] = {detail::parse_double(cells[1], path, static_cast<int>(k + 1)),
                    detail::parse_double(cells[2], path, static_cast<int>(k + 1))};
    }
    if (rows.empty()) throw std::runtime_error(path + ": no positions found");
    const int n = static_cast<int>(rows.size());
    Eigen::Matrix<double, Eigen::Dynamic, 2> out(n, 2);
    int expected = 0;
    for (const auto& [id, xy] : rows) {
        if (id != expected)
            throw std::runtime_error(path + ": ids must be contiguous from 0 (missing " +
                                     std::to_string(expected) + ")");
        out(expected, 0) = xy.first;
        out(expected, 1) = xy.second;
        ++expected;
    }
    return out;
}

inline void save_positions(const Eigen::Matrix<double, Eigen::Dynamic, 2>& positions,
                           const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << "id,x_m,y_m\n";
    for (Eigen::Index i = 0; i < positions.rows(); ++i)
        out << i << ',' << format_double(positions(i, 0)) << ','
            << format_double(positions(i, 1)) << '\n';
}

/// Pathloss parameter file: JSON, either a single block
/// {"p0_dbm":..,"d0_m":..,"eta":..,"sigma_db":..} or named blocks keyed by
/// scenario name.
inline PathlossParams params_from_json(const nlohmann::json& block) {
    PathlossParams p;
    p.p0_dbm = block.at("p0_dbm").get<double>();
    p.d0_m = block.value("d0_m", 1.0);
    p.eta = block.at("eta").get<double>();
    p.sigma_db = block.at("sigma_db").get<double>();
    p.validate();
    return p;
}

inline PathlossParams load_pathloss_params(const std::string& path,
                                           const std::string& block_name = "") {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    try {
        if (j.contains("p0_dbm")) return params_from_json(j);
        if (!block_name.empty()) {
            if (!j.contains(block_name))
                throw std::runtime_error(path + ": no parameter block named '" +
                                         block_name + "'");
            return params_from_json(j.at(block_name));
        }
        if (j.is_object() && j.size() == 1)
            return params_from_json(j.begin().value());
        std::string names;
        for (const auto& [key, _] : j.items()) names += " " + key;
        throw std::runtime_error(path + ": multiple parameter blocks; pick one of" +
                                 names + " via <file>:<name>");
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

inline void save_pathloss_params(
    const std::map<std::string, PathlossParams>& blocks, const std::string& path) {
    nlohmann::json j;
    for (const auto& [name, p] : blocks)
        j[name] = {{"p0_dbm", p.p0_dbm},
                   {"d0_m", p.d0_m},
                   {"eta", p.eta},
                   {"sigma_db", p.sigma_db}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << j.dump(2) << '\n';
}

/// Calibration table file: `device_model,offset_db`, header row required.
inline CalibrationTable load_calibration_table(const std::string& path) {
    const auto lines = detail::read_lines(path);
    if (lines.empty()) throw std::runtime_error(path + ": empty calibration table");
    const auto header = detail::split_csv(lines[0]);
    if (header.size() != 2 || detail::is_number(header[0]) ||
        detail::is_number(header[1]))
        detail::fail(path, 1, "calibration table requires a header row");
    CalibrationTable table;
    for (std::size_t k = 1; k < lines.size(); ++k) {
        const std::string line = detail::trim(lines[k]);
        if (line.empty()) continue;
        const auto cells = detail::split_csv(line);
        if (cells.size() != 2)
            detail::fail(path, static_cast<int>(k + 1), "expected device_model,offset_db");
        table.set(cells[0],
                  detail::parse_double(cells[1], path, static_cast<int>(k + 1)));
    }
    return table;
}

/// Empirical samples file: `distance_m,rssi_dbm`, optional header.
inline std::vector<std::pair<double, double>> load_distance_rssi_samples(
    const std::string& path) {
    const auto lines = detail::read_lines(path);
    std::vector<std::pair<double, double>> samples;
    for (std::size_t k = 0; k < lines.size(); ++k) {
        const std::string line = detail::trim(lines[k]);
        if (line.empty() || line[0] == '#') continue;
        const auto cells = detail::split_csv(line);
        if (cells.size() != 2)
            detail::fail(path, static_cast<int>(k + 1), "expected distance_m,rssi_dbm");
        if (k == 0 && !detail::is_number(cells[0])) continue;  // header
        samples.emplace_back(
            detail::parse_double(cells[0], path, static_cast<int>(k + 1)),
            detail::parse_double(cells[1], path, static_cast<int>(k + 1)));
    }
    if (samples.empty()) throw std::runtime_error(path + ": no samples found");
    return samples;
}

/// Groups fit samples into an empirical dataset by exact distance value.
inline EmpiricalRssiDataset load_empirical_dataset(const std::string& path) {
    EmpiricalRssiDataset data;
    for (const auto& [d, rssi] : load_distance_rssi_samples(path))
        data.bins[d].push_back(rssi);
    data.validate();
    return data;
}

/// Scenario file: JSON mirroring ScenarioSpec.
inline ScenarioSpec load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    try {
        ScenarioSpec spec;
        spec.name = j.value("name", "custom");
        spec.n_devices = j.at("n_devices").get<int>();
        if (j.contains("area")) {
            spec.area_w_m = j.at("area").at(0).get<double>();
            spec.area_h_m = j.at("area").at(1).get<double>();
        }
        spec.miss_rate = j.value("miss_rate", 0.1);
        spec.max_range_m = j.value("max_range_m", 4.0);
        spec.min_sample_distance_m = j.value("min_sample_distance_m", 0.5);
        spec.seed = j.value("seed", 0ULL);
        if (j.contains("rssi_backend")) {
            const auto& backend = j.at("rssi_backend");
            const std::string type = backend.at("type").get<std::string>();
            if (type == "parametric") {
                const auto& pj = backend.at("params");
                spec.params = pj.is_string()
                                  ? named_params(pj.get<std::string>())
                                  : params_from_json(pj);
            } else if (type == "empirical") {
                spec.use_empirical = true;
                spec.empirical = load_empirical_dataset(
                    backend.at("dataset").get<std::string>());
            } else {
                throw std::runtime_error(path + ": unknown rssi_backend type '" + type + "'");
            }
        }
        if (j.contains("context")) {
            for (const auto& cj : j.at("context")) {
                if (cj.is_string() && cj.get<std::string>() == "open_air") {
                    spec.context.push_back(DeviceContext::open_air());
                } else {
                    spec.context.push_back(DeviceContext::in_pocket(
                        cj.at("attenuation_db").get<double>(),
                        cj.value("detected", false)));
                }
            }
        }
        if (j.contains("fixed_positions")) {
            for (const auto& pj : j.at("fixed_positions"))
                spec.fixed_positions.emplace_back(pj.at(0).get<double>(),
                                                  pj.at(1).get<double>());
        }
        spec.validate();
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

}  // namespace netloc::io
