#pragma once

// File formats: CSV for points and labels, JSON for configs and reports,
// big-endian IDX (read-only) for image datasets, binary P5 grayscale for
// sweep heatmaps. All writers format deterministically so identical inputs
// produce byte-identical files.

#include "rkm/certificate.hpp"
#include "rkm/core.hpp"
#include "rkm/relax.hpp"
#include "rkm/rounding.hpp"
#include "rkm/synth.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace rkm {

using Json = nlohmann::ordered_json;

namespace detail {

// Shortest representation that round-trips a double exactly.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double back = 0.0;
  std::sscanf(buf, "%lf", &back);
  if (back == v) {
    for (int precision = 1; precision < 17; ++precision) {
      char shorter[40];
      std::snprintf(shorter, sizeof(shorter), "%.*g", precision, v);
      std::sscanf(shorter, "%lf", &back);
      if (back == v) return shorter;
    }
  }
  return buf;
}

inline std::ifstream open_input(const std::string& path, std::ios::openmode mode) {
  std::ifstream in(path, mode);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return in;
}

inline std::ofstream open_output(const std::string& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Points CSV: one row per point, comma-separated coordinates, no header.

inline void write_points_csv(std::ostream& out, const PointSet& points) {
  for (Index i = 0; i < points.size(); ++i) {
    for (Index j = 0; j < points.dim(); ++j) {
      if (j) out << ',';
      out << detail::format_double(points.coords()(i, j));
    }
    out << '\n';
  }
}

inline PointSet read_points_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(field, &used);
      } catch (const std::exception&) {
        throw std::runtime_error("points CSV: bad number '" + field + "'");
      }
      if (used != field.size()) {
        throw std::runtime_error("points CSV: trailing garbage in '" + field + "'");
      }
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::runtime_error("points CSV: ragged rows");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return PointSet();
  Matrix coords(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      coords(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  return PointSet(std::move(coords));
}

inline void write_points_csv(const std::string& path, const PointSet& points) {
  auto out = detail::open_output(path, std::ios::out);
  write_points_csv(out, points);
}

inline PointSet read_points_csv(const std::string& path) {
  auto in = detail::open_input(path, std::ios::in);
  return read_points_csv(in);
}

// ---------------------------------------------------------------------------
// Labels CSV: header "k,<k>", then one line per point with the cluster label
// (1..k) or the word "noise".

inline void write_labels_csv(std::ostream& out, const Clustering& c) {
  validate_clustering(c);
  out << "k," << c.k << '\n';
  for (int label : c.labels) {
    if (label == kNoiseLabel) {
      out << "noise\n";
    } else {
      out << label << '\n';
    }
  }
}

inline Clustering read_labels_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("labels CSV: missing header");
  Clustering c;
  if (std::sscanf(line.c_str(), "k,%d", &c.k) != 1 || c.k < 0) {
    throw std::runtime_error("labels CSV: bad header '" + line + "'");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line == "noise") {
      c.labels.push_back(kNoiseLabel);
      continue;
    }
    int label = 0;
    if (std::sscanf(line.c_str(), "%d", &label) != 1) {
      throw std::runtime_error("labels CSV: bad label '" + line + "'");
    }
    c.labels.push_back(label);
  }
  validate_clustering(c);
  return c;
}

inline void write_labels_csv(const std::string& path, const Clustering& c) {
  auto out = detail::open_output(path, std::ios::out);
  write_labels_csv(out, c);
}

inline Clustering read_labels_csv(const std::string& path) {
  auto in = detail::open_input(path, std::ios::in);
  return read_labels_csv(in);
}

// ---------------------------------------------------------------------------
// JSON files and config parsing. Missing keys keep their defaults; unknown
// keys are rejected to catch typos in experiment configs.

inline Json read_json_file(const std::string& path) {
  auto in = detail::open_input(path, std::ios::in);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("JSON parse failure in " + path + ": " + e.what());
  }
  return j;
}

inline void write_json_file(const std::string& path, const Json& j) {
  auto out = detail::open_output(path, std::ios::out);
  out << j.dump(2) << '\n';
}

namespace detail {

inline void check_known_keys(const Json& j, std::initializer_list<const char*> known,
                             const std::string& what) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* name : known) {
      if (key == name) ok = true;
    }
    if (!ok) throw std::runtime_error(what + ": unknown key '" + key + "'");
  }
}

template <typename T>
void maybe_get(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

inline BallModelConfig ball_config_from_json(const Json& j) {
  detail::check_known_keys(j, {"k", "d", "n", "delta", "seed"}, "ball config");
  BallModelConfig config;
  detail::maybe_get(j, "k", config.k);
  detail::maybe_get(j, "d", config.d);
  detail::maybe_get(j, "n", config.n);
  detail::maybe_get(j, "delta", config.delta);
  detail::maybe_get(j, "seed", config.seed);
  return config;
}

inline NoiseConfig noise_config_from_json(const Json& j) {
  detail::check_known_keys(
      j, {"m_far", "far_factor", "m_near", "margin_alpha", "m_uniform", "box_scale", "seed"},
      "noise config");
  NoiseConfig config;
  detail::maybe_get(j, "m_far", config.m_far);
  detail::maybe_get(j, "far_factor", config.far_factor);
  detail::maybe_get(j, "m_near", config.m_near);
  detail::maybe_get(j, "margin_alpha", config.margin_alpha);
  detail::maybe_get(j, "m_uniform", config.m_uniform);
  detail::maybe_get(j, "box_scale", config.box_scale);
  detail::maybe_get(j, "seed", config.seed);
  return config;
}

inline Json ball_config_to_json(const BallModelConfig& config) {
  Json j;
  j["k"] = config.k;
  j["d"] = config.d;
  j["n"] = config.n;
  j["delta"] = config.delta;
  j["seed"] = config.seed;
  return j;
}

inline Json noise_config_to_json(const NoiseConfig& config) {
  Json j;
  j["m_far"] = config.m_far;
  j["far_factor"] = config.far_factor;
  j["m_near"] = config.m_near;
  j["margin_alpha"] = config.margin_alpha;
  j["m_uniform"] = config.m_uniform;
  j["box_scale"] = config.box_scale;
  j["seed"] = config.seed;
  return j;
}

inline SolverConfig solver_config_from_json(const Json& j) {
  detail::check_known_keys(j,
                           {"tol", "max_iter", "step", "over_relaxation", "check_interval",
                            "adapt_every", "adapt_until"},
                           "solver config");
  SolverConfig config;
  detail::maybe_get(j, "tol", config.tol);
  detail::maybe_get(j, "max_iter", config.max_iter);
  detail::maybe_get(j, "step", config.step);
  detail::maybe_get(j, "over_relaxation", config.over_relaxation);
  detail::maybe_get(j, "check_interval", config.check_interval);
  detail::maybe_get(j, "adapt_every", config.adapt_every);
  detail::maybe_get(j, "adapt_until", config.adapt_until);
  return config;
}

inline RoundingConfig rounding_config_from_json(const Json& j) {
  detail::check_known_keys(j, {"threshold", "restarts", "seed"}, "rounding config");
  RoundingConfig config;
  detail::maybe_get(j, "threshold", config.threshold);
  detail::maybe_get(j, "restarts", config.restarts);
  detail::maybe_get(j, "seed", config.seed);
  return config;
}

// JSON has no literal for infinities (they would serialize as null), so
// fields that can legitimately be infinite go through this shim.
inline Json json_number(double v) {
  if (std::isinf(v)) return Json(v > 0 ? "inf" : "-inf");
  return Json(v);
}

inline Json certificate_report_to_json(const CertificateReport& report) {
  Json j;
  j["verdict"] = report.verdict;
  j["certified"] = report.certified;
  j["duality_gap"] = report.duality_gap;
  j["min_eig_q"] = report.min_eig_q;
  j["min_beta"] = report.min_beta;
  j["lambda_feasible"] = report.lambda_feasible;
  j["primal_value"] = report.primal_value;
  j["dual_value"] = report.dual_value;
  j["complementary_slackness"] = report.complementary_slackness;
  j["reconstruction_error"] = report.reconstruction_error;
  j["lambda_window"] = {json_number(report.lambda_window[0]),
                        json_number(report.lambda_window[1])};
  j["realized_delta"] = json_number(report.realized_delta);
  j["z"] = report.z;
  j["gamma"] = report.gamma;
  return j;
}

inline Json threshold_report_to_json(const ThresholdReport& report) {
  Json j;
  j["delta_threshold_distfree"] = json_number(report.delta_threshold_distfree);
  j["delta_threshold_stochastic"] = json_number(report.delta_threshold_stochastic);
  j["alpha_threshold"] = json_number(report.alpha_threshold);
  j["n2_budget"] = json_number(report.n2_budget);
  j["lambda_window"] = {json_number(report.lambda_window[0]),
                        json_number(report.lambda_window[1])};
  j["nu_appendix"] = report.nu_appendix;
  j["nu_main"] = report.nu_main;
  return j;
}

// ---------------------------------------------------------------------------
// IDX image/label readers (big-endian), images scaled to [0,1].

namespace detail {

inline std::uint32_t read_be32(std::istream& in, const char* what) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
    throw std::runtime_error(std::string("IDX: truncated ") + what);
  }
  return (static_cast<std::uint32_t>(bytes[0]) << 24) |
         (static_cast<std::uint32_t>(bytes[1]) << 16) |
         (static_cast<std::uint32_t>(bytes[2]) << 8) | static_cast<std::uint32_t>(bytes[3]);
}

}  // namespace detail

inline PointSet load_idx(const std::string& path) {
  auto in = detail::open_input(path, std::ios::binary);
  if (detail::read_be32(in, "magic") != 0x00000803u) {
    throw std::runtime_error("IDX: bad image magic in " + path);
  }
  const std::uint32_t count = detail::read_be32(in, "count");
  const std::uint32_t rows = detail::read_be32(in, "rows");
  const std::uint32_t cols = detail::read_be32(in, "cols");
  const std::size_t dim = static_cast<std::size_t>(rows) * cols;
  if (count > 0 && dim == 0) throw std::runtime_error("IDX: zero-sized images");

  Matrix coords(static_cast<Index>(count), static_cast<Index>(dim));
  std::vector<unsigned char> pixels(dim);
  for (std::uint32_t i = 0; i < count; ++i) {
    if (!in.read(reinterpret_cast<char*>(pixels.data()),
                 static_cast<std::streamsize>(dim))) {
      throw std::runtime_error("IDX: truncated payload in " + path);
    }
    for (std::size_t j = 0; j < dim; ++j) {
      coords(static_cast<Index>(i), static_cast<Index>(j)) =
          static_cast<double>(pixels[j]) / 255.0;
    }
  }
  return PointSet(std::move(coords));
}

inline std::vector<int> load_idx_labels(const std::string& path) {
  auto in = detail::open_input(path, std::ios::binary);
  if (detail::read_be32(in, "magic") != 0x00000801u) {
    throw std::runtime_error("IDX: bad label magic in " + path);
  }
  const std::uint32_t count = detail::read_be32(in, "count");
  std::vector<int> labels(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    char byte = 0;
    if (!in.read(&byte, 1)) throw std::runtime_error("IDX: truncated labels in " + path);
    labels[i] = static_cast<unsigned char>(byte);
  }
  return labels;
}

// ---------------------------------------------------------------------------
// Binary 8-bit grayscale P5 heatmap; values clamped to [0,1], 255 = 1.0.

inline void write_heatmap_p5(std::ostream& out, const Matrix& grid) {
  out << "P5\n" << grid.cols() << ' ' << grid.rows() << "\n255\n";
  for (Index r = 0; r < grid.rows(); ++r) {
    for (Index c = 0; c < grid.cols(); ++c) {
      const double v = std::clamp(grid(r, c), 0.0, 1.0);
      out.put(static_cast<char>(static_cast<int>(std::lround(v * 255.0))));
    }
  }
}

inline void write_heatmap_p5(const std::string& path, const Matrix& grid) {
  auto out = detail::open_output(path, std::ios::binary);
  write_heatmap_p5(out, grid);
}

}  // namespace rkm
