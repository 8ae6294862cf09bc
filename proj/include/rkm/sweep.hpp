#pragma once

// Phase-diagram experiment grids: two parameter axes, repeated trials per
// cell, success fractions aggregated for CSV and heatmap output. Success
// means the rounded solution reproduces the planted clustering on the
// structured points (pair distance <= gamma_tolerance, default exact) and,
// when the penalty is finite, flags exactly the far outliers as noise.
//
// Cells and trials run concurrently. Every trial derives its own generator
// seeds from (master seed, cell index, trial index), and results land in
// preassigned slots, so the outcome is independent of scheduling.

#include "rkm/io.hpp"
#include "rkm/relax.hpp"
#include "rkm/rounding.hpp"
#include "rkm/synth.hpp"

#include <atomic>
#include <chrono>
#include <thread>

namespace rkm {

struct SweepAxis {
  std::string name;
  std::vector<double> values;
};

struct SweepSpec {
  SweepAxis axis1;
  SweepAxis axis2;
  BallModelConfig ball;    // fixed base configuration; axes override fields
  NoiseConfig noise;
  double lambda = 1.0;     // +infinity selects the unregularised relaxation
  RelaxKind kind = RelaxKind::SDP;
  SolverConfig solver;
  RoundingConfig rounding;  // its seed field is replaced per trial
  int trials = 50;
  std::uint64_t seed = 0;
  double gamma_tolerance = 0.0;  // allow pair distance <= gamma instead of 0
  int threads = 0;               // 0 = hardware concurrency
};

struct TrialRecord {
  std::uint64_t seed_ball = 0;
  std::uint64_t seed_noise = 0;
  std::uint64_t seed_round = 0;
  bool recovered = false;
  double delta_restricted = 1.0;  // pair distance on structured points
  double f1_structured = 0.0;
  double objective = 0.0;
  bool converged = false;
  double wall_ms = 0.0;
  std::string error;  // nonempty when the trial aborted; counts as failure
};

struct SweepCell {
  double axis1_value = 0.0;
  double axis2_value = 0.0;
  int successes = 0;
  int trials = 0;
  double fraction = 0.0;
  std::vector<TrialRecord> records;
};

struct SweepResult {
  SweepAxis axis1;
  SweepAxis axis2;
  std::vector<SweepCell> cells;  // axis1-major order, every cell present
  Matrix fractions;              // axis1 values x axis2 values
};

namespace detail {

inline int axis_int(double value, const std::string& name) {
  const double rounded = std::round(value);
  if (std::abs(value - rounded) > 1e-9) {
    throw std::invalid_argument("sweep axis '" + name + "' needs integer values");
  }
  return static_cast<int>(rounded);
}

inline void apply_axis(BallModelConfig& ball, NoiseConfig& noise, double& lambda,
                       const std::string& name, double value) {
  if (name == "delta") {
    ball.delta = value;
  } else if (name == "lambda") {
    lambda = value;
  } else if (name == "n") {
    ball.n = axis_int(value, name);
  } else if (name == "k") {
    ball.k = axis_int(value, name);
  } else if (name == "d") {
    ball.d = axis_int(value, name);
  } else if (name == "m_far") {
    noise.m_far = axis_int(value, name);
  } else if (name == "m_near") {
    noise.m_near = axis_int(value, name);
  } else if (name == "m_uniform") {
    noise.m_uniform = axis_int(value, name);
  } else if (name == "far_factor") {
    noise.far_factor = value;
  } else if (name == "margin_alpha") {
    noise.margin_alpha = value;
  } else if (name == "box_scale") {
    noise.box_scale = value;
  } else {
    throw std::invalid_argument("unknown sweep axis '" + name + "'");
  }
}

inline std::vector<Index> structured_indices(const GroundTruth& truth) {
  std::vector<Index> indices;
  for (const auto& members : truth.ball_members) {
    indices.insert(indices.end(), members.begin(), members.end());
  }
  std::sort(indices.begin(), indices.end());
  return indices;
}

inline TrialRecord run_trial(BallModelConfig ball, NoiseConfig noise, double lambda,
                             const SweepSpec& spec, std::uint64_t stream_base) {
  TrialRecord record;
  record.seed_ball = detail::derive_seed(spec.seed, stream_base);
  record.seed_noise = detail::derive_seed(spec.seed, stream_base + 1);
  record.seed_round = detail::derive_seed(spec.seed, stream_base + 2);
  ball.seed = record.seed_ball;
  noise.seed = record.seed_noise;

  const auto start = std::chrono::steady_clock::now();
  try {
    const auto instance = make_instance(ball, noise);
    const auto problem = build_problem(instance.points, ball.k, lambda, spec.kind);
    const auto solution = solve(problem, spec.solver);
    record.objective = solution.objective;
    record.converged = solution.converged;

    RoundingConfig rounding = spec.rounding;
    rounding.seed = record.seed_round;
    const auto rounded = round_solution(instance.points, solution.Z, solution.y,
                                        ball.k, rounding);

    const auto truth = ground_truth_clustering(instance.truth, instance.points.size());
    const auto structured = structured_indices(instance.truth);
    const auto rounded_restricted = restrict_clustering(rounded, structured);
    const auto truth_restricted = restrict_clustering(truth, structured);
    record.delta_restricted = clustering_distance(rounded_restricted, truth_restricted);
    try {
      record.f1_structured = pair_metrics(rounded_restricted, truth_restricted).f1;
    } catch (const std::invalid_argument&) {
      record.f1_structured = 0.0;  // degenerate reference without pairs
    }

    bool noise_ok = true;
    if (std::isfinite(lambda)) {
      auto flagged = noise_members(rounded);
      auto far = instance.truth.far_noise;
      std::sort(flagged.begin(), flagged.end());
      std::sort(far.begin(), far.end());
      noise_ok = flagged == far;
    }
    record.recovered = noise_ok && record.delta_restricted <= spec.gamma_tolerance;
  } catch (const std::exception& e) {
    record.error = e.what();
    record.recovered = false;
  }
  record.wall_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  return record;
}

}  // namespace detail

inline void validate_sweep_spec(const SweepSpec& spec) {
  if (spec.axis1.values.empty() || spec.axis2.values.empty()) {
    throw std::invalid_argument("sweep: both axis grids must be nonempty");
  }
  if (spec.trials < 1) throw std::invalid_argument("sweep: trials must be >= 1");
  if (spec.gamma_tolerance < 0.0) {
    throw std::invalid_argument("sweep: gamma tolerance must be >= 0");
  }
  BallModelConfig ball = spec.ball;
  NoiseConfig noise = spec.noise;
  double lambda = spec.lambda;
  detail::apply_axis(ball, noise, lambda, spec.axis1.name, spec.axis1.values.front());
  detail::apply_axis(ball, noise, lambda, spec.axis2.name, spec.axis2.values.front());
}

inline SweepResult run_sweep(const SweepSpec& spec) {
  validate_sweep_spec(spec);
  const std::size_t n1 = spec.axis1.values.size();
  const std::size_t n2 = spec.axis2.values.size();
  const std::size_t cells = n1 * n2;
  const std::size_t jobs = cells * static_cast<std::size_t>(spec.trials);

  std::vector<TrialRecord> records(jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t job = next.fetch_add(1);
      if (job >= jobs) return;
      const std::size_t cell = job / static_cast<std::size_t>(spec.trials);
      const std::size_t trial = job % static_cast<std::size_t>(spec.trials);
      BallModelConfig ball = spec.ball;
      NoiseConfig noise = spec.noise;
      double lambda = spec.lambda;
      detail::apply_axis(ball, noise, lambda, spec.axis1.name,
                         spec.axis1.values[cell / n2]);
      detail::apply_axis(ball, noise, lambda, spec.axis2.name,
                         spec.axis2.values[cell % n2]);
      const std::uint64_t stream_base =
          (static_cast<std::uint64_t>(cell) << 32) + trial * 4u;
      records[job] = detail::run_trial(ball, noise, lambda, spec, stream_base);
    }
  };
  unsigned thread_count =
      spec.threads > 0 ? static_cast<unsigned>(spec.threads)
                       : std::max(1u, std::thread::hardware_concurrency());
  thread_count = std::min<unsigned>(thread_count, static_cast<unsigned>(jobs));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < thread_count; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  SweepResult result;
  result.axis1 = spec.axis1;
  result.axis2 = spec.axis2;
  result.fractions = Matrix::Zero(static_cast<Index>(n1), static_cast<Index>(n2));
  result.cells.resize(cells);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    SweepCell& out = result.cells[cell];
    out.axis1_value = spec.axis1.values[cell / n2];
    out.axis2_value = spec.axis2.values[cell % n2];
    out.trials = spec.trials;
    for (int trial = 0; trial < spec.trials; ++trial) {
      TrialRecord& record =
          records[cell * static_cast<std::size_t>(spec.trials) + trial];
      out.successes += record.recovered ? 1 : 0;
      out.records.push_back(std::move(record));
    }
    out.fraction = static_cast<double>(out.successes) / static_cast<double>(out.trials);
    result.fractions(static_cast<Index>(cell / n2), static_cast<Index>(cell % n2)) =
        out.fraction;
  }
  return result;
}

inline SweepAxis sweep_axis_from_json(const Json& j) {
  detail::check_known_keys(j, {"name", "values"}, "sweep axis");
  SweepAxis axis;
  if (!j.contains("name") || !j.contains("values")) {
    throw std::invalid_argument("sweep axis: requires name and values");
  }
  axis.name = j.at("name").get<std::string>();
  axis.values = j.at("values").get<std::vector<double>>();
  return axis;
}

inline SweepSpec sweep_spec_from_json(const Json& j) {
  detail::check_known_keys(j,
                           {"axis1", "axis2", "ball", "noise", "lambda", "kind", "solver",
                            "rounding", "trials", "seed", "gamma_tolerance", "threads"},
                           "sweep spec");
  SweepSpec spec;
  if (!j.contains("axis1") || !j.contains("axis2")) {
    throw std::invalid_argument("sweep spec: requires axis1 and axis2");
  }
  spec.axis1 = sweep_axis_from_json(j.at("axis1"));
  spec.axis2 = sweep_axis_from_json(j.at("axis2"));
  if (j.contains("ball")) spec.ball = ball_config_from_json(j.at("ball"));
  if (j.contains("noise")) spec.noise = noise_config_from_json(j.at("noise"));
  if (j.contains("lambda")) {
    const auto& v = j.at("lambda");
    spec.lambda = v.is_string() ? std::numeric_limits<double>::infinity() : v.get<double>();
    if (v.is_string() && v.get<std::string>() != "inf") {
      throw std::invalid_argument("sweep spec: lambda must be a number or \"inf\"");
    }
  }
  if (j.contains("kind")) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "sdp") {
      spec.kind = RelaxKind::SDP;
    } else if (kind == "lp") {
      spec.kind = RelaxKind::LP;
    } else {
      throw std::invalid_argument("sweep spec: kind must be \"sdp\" or \"lp\"");
    }
  }
  if (j.contains("solver")) spec.solver = solver_config_from_json(j.at("solver"));
  if (j.contains("rounding")) spec.rounding = rounding_config_from_json(j.at("rounding"));
  detail::maybe_get(j, "trials", spec.trials);
  detail::maybe_get(j, "seed", spec.seed);
  detail::maybe_get(j, "gamma_tolerance", spec.gamma_tolerance);
  detail::maybe_get(j, "threads", spec.threads);
  return spec;
}

inline void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  out << result.axis1.name << ',' << result.axis2.name << ",successes,trials,fraction\n";
  for (const auto& cell : result.cells) {
    out << detail::format_double(cell.axis1_value) << ','
        << detail::format_double(cell.axis2_value) << ',' << cell.successes << ','
        << cell.trials << ',' << detail::format_double(cell.fraction) << '\n';
  }
}

inline void write_sweep_csv(const std::string& path, const SweepResult& result) {
  auto out = detail::open_output(path, std::ios::out);
  write_sweep_csv(out, result);
}

}  // namespace rkm
