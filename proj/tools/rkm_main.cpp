// Command-line driver. Subcommands cover the full pipeline: generate an
// instance, solve a relaxation, round the solution, certify a clustering,
// run parameter sweeps, fit the Lloyd baseline, score clusterings, and
// decide clique existence through the reduction.
//
// Exit codes: 0 success, 1 usage or I/O error, 2 solver non-convergence,
// 3 certificate verification failure.

#include "rkm/rkm.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNoConverge = 2;
constexpr int kExitNotCertified = 3;

double parse_lambda(const std::string& text) {
  if (text == "inf" || text == "infinity") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("--lambda: expected a positive number or \"inf\"");
  }
  if (used != text.size() || !(value > 0.0)) {
    throw std::invalid_argument("--lambda: expected a positive number or \"inf\"");
  }
  return value;
}

rkm::RelaxKind parse_kind(const std::string& text) {
  if (text == "sdp") return rkm::RelaxKind::SDP;
  if (text == "lp") return rkm::RelaxKind::LP;
  throw std::invalid_argument("--kind: expected \"sdp\" or \"lp\"");
}

void emit_json(const rkm::Json& j, const std::string& path) {
  if (path.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    rkm::write_json_file(path, j);
  }
}

struct GenOptions {
  std::string ball_config_path;
  std::string noise_config_path;
  std::string out_prefix;
  std::optional<int> k, d, n;
  std::optional<double> delta;
  std::optional<std::uint64_t> seed, noise_seed;
  std::optional<int> m_far, m_near, m_uniform;
  std::optional<double> far_factor, margin_alpha, box_scale;
  std::string idx_images;
  std::string idx_labels;
  std::vector<int> classes;
  int limit = 0;  // 0 means keep everything
};

int run_gen_idx(const GenOptions& opt) {
  rkm::PointSet images = rkm::load_idx(opt.idx_images);
  std::vector<int> selected;  // indices into the raw image list
  rkm::Clustering clustering;
  if (!opt.idx_labels.empty()) {
    if (opt.classes.empty()) {
      throw std::invalid_argument("gen: --classes is required when --idx-labels is given");
    }
    const std::vector<int> raw = rkm::load_idx_labels(opt.idx_labels);
    if (static_cast<rkm::Index>(raw.size()) != images.size()) {
      throw std::invalid_argument("gen: image and label counts differ");
    }
    std::vector<int> labels;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      for (std::size_t c = 0; c < opt.classes.size(); ++c) {
        if (raw[i] == opt.classes[c]) {
          selected.push_back(static_cast<int>(i));
          labels.push_back(static_cast<int>(c) + 1);
          break;
        }
      }
      if (opt.limit > 0 && static_cast<int>(selected.size()) >= opt.limit) break;
    }
    clustering.k = static_cast<int>(opt.classes.size());
    clustering.labels = labels;
  } else {
    const int keep = opt.limit > 0
                         ? std::min<int>(opt.limit, static_cast<int>(images.size()))
                         : static_cast<int>(images.size());
    for (int i = 0; i < keep; ++i) selected.push_back(i);
  }

  rkm::Matrix coords(static_cast<rkm::Index>(selected.size()), images.dim());
  for (std::size_t r = 0; r < selected.size(); ++r) {
    coords.row(static_cast<rkm::Index>(r)) = images.coords().row(selected[r]);
  }
  const rkm::PointSet points(coords);
  rkm::write_points_csv(opt.out_prefix + ".points.csv", points);

  rkm::Json meta;
  meta["source"] = opt.idx_images;
  meta["n_points"] = points.size();
  meta["dim"] = points.dim();
  meta["limit"] = opt.limit;
  if (!opt.idx_labels.empty()) {
    meta["label_source"] = opt.idx_labels;
    meta["classes"] = opt.classes;
    rkm::write_labels_csv(opt.out_prefix + ".labels.csv", clustering);
  }
  rkm::write_json_file(opt.out_prefix + ".meta.json", meta);
  return kExitOk;
}

int run_gen(const GenOptions& opt) {
  if (!opt.idx_images.empty()) return run_gen_idx(opt);

  rkm::BallModelConfig ball;
  if (!opt.ball_config_path.empty()) {
    ball = rkm::ball_config_from_json(rkm::read_json_file(opt.ball_config_path));
  }
  if (opt.k) ball.k = *opt.k;
  if (opt.d) ball.d = *opt.d;
  if (opt.n) ball.n = *opt.n;
  if (opt.delta) ball.delta = *opt.delta;
  if (opt.seed) ball.seed = *opt.seed;

  rkm::NoiseConfig noise;
  if (!opt.noise_config_path.empty()) {
    noise = rkm::noise_config_from_json(rkm::read_json_file(opt.noise_config_path));
  }
  if (opt.m_far) noise.m_far = *opt.m_far;
  if (opt.far_factor) noise.far_factor = *opt.far_factor;
  if (opt.m_near) noise.m_near = *opt.m_near;
  if (opt.margin_alpha) noise.margin_alpha = *opt.margin_alpha;
  if (opt.m_uniform) noise.m_uniform = *opt.m_uniform;
  if (opt.box_scale) noise.box_scale = *opt.box_scale;
  if (opt.noise_seed) noise.seed = *opt.noise_seed;

  const rkm::Instance instance = rkm::make_instance(ball, noise);
  const rkm::Clustering truth =
      rkm::ground_truth_clustering(instance.truth, instance.points.size());
  const rkm::AuditReport audit = rkm::audit_instance(instance, ball, noise);
  const rkm::InstanceStats stats = rkm::instance_stats(instance);

  rkm::write_points_csv(opt.out_prefix + ".points.csv", instance.points);
  rkm::write_labels_csv(opt.out_prefix + ".labels.csv", truth);

  rkm::Json meta;
  meta["ball"] = rkm::ball_config_to_json(ball);
  meta["noise"] = rkm::noise_config_to_json(noise);
  meta["n_points"] = instance.points.size();
  meta["dim"] = instance.points.dim();
  meta["realized_delta"] = instance.truth.delta;
  meta["audit"] = {{"passed", audit.passed},
                   {"max_ball_radius", audit.max_ball_radius},
                   {"min_center_gap", rkm::json_number(audit.min_center_gap)},
                   {"min_far_gap", rkm::json_number(audit.min_far_gap)},
                   {"min_margin_gap", rkm::json_number(audit.min_margin_gap)},
                   {"uniform_in_box", audit.uniform_in_box}};
  meta["stats"] = {{"n_min", stats.n_min},
                   {"rho", stats.rho},
                   {"theta", stats.theta},
                   {"sigma_max_sq", stats.sigma_max_sq}};
  meta["far_noise"] = instance.truth.far_noise;
  meta["near_noise"] = instance.truth.near_noise;
  meta["uniform_noise"] = instance.truth.uniform_noise;
  rkm::write_json_file(opt.out_prefix + ".meta.json", meta);
  return kExitOk;
}

struct SolveOptions {
  std::string points_path;
  int k = 1;
  std::string lambda_text;
  std::string kind_text = "sdp";
  std::string solver_config_path;
  std::optional<double> tol;
  std::optional<int> max_iter;
  std::string out_path;
  std::string z_out_path;
  std::string y_out_path;
};

int run_solve(const SolveOptions& opt) {
  const rkm::PointSet points = rkm::read_points_csv(opt.points_path);
  const double lambda = parse_lambda(opt.lambda_text);
  const rkm::RelaxKind kind = parse_kind(opt.kind_text);

  rkm::SolverConfig config;
  if (!opt.solver_config_path.empty()) {
    config = rkm::solver_config_from_json(rkm::read_json_file(opt.solver_config_path));
  }
  if (opt.tol) config.tol = *opt.tol;
  if (opt.max_iter) config.max_iter = *opt.max_iter;

  const rkm::RelaxedProblem problem = rkm::build_problem(points, opt.k, lambda, kind);
  const auto start = std::chrono::steady_clock::now();
  const rkm::RelaxedSolution solution = rkm::solve(problem, config);
  const double wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
          .count();

  rkm::Json report;
  report["kind"] = opt.kind_text;
  report["k"] = opt.k;
  report["lambda"] = rkm::json_number(lambda);
  report["n_points"] = points.size();
  report["objective"] = solution.objective;
  report["converged"] = solution.converged;
  report["iterations"] = solution.iterations;
  report["primal_residual"] = solution.primal_residual;
  report["residuals"] = {{"trace", solution.residuals.trace},
                         {"row", solution.residuals.row},
                         {"negativity", solution.residuals.negativity},
                         {"psd", solution.residuals.psd},
                         {"rowcap", solution.residuals.rowcap}};
  report["wall_ms"] = wall_ms;
  emit_json(report, opt.out_path);

  if (!opt.z_out_path.empty()) {
    rkm::write_points_csv(opt.z_out_path, rkm::PointSet(solution.Z));
  }
  if (!opt.y_out_path.empty()) {
    rkm::Matrix column(solution.y.size(), 1);
    column.col(0) = solution.y;
    rkm::write_points_csv(opt.y_out_path, rkm::PointSet(column));
  }
  return solution.converged ? kExitOk : kExitNoConverge;
}

struct RoundOptions {
  std::string points_path;
  std::string z_path;
  std::string y_path;
  int k = 1;
  double threshold = 0.5;
  int restarts = 10;
  std::uint64_t seed = 0;
  bool reassign_noise = false;
  std::string out_path;
  std::string report_path;
};

int run_round(const RoundOptions& opt) {
  const rkm::PointSet points = rkm::read_points_csv(opt.points_path);
  const rkm::Matrix z = rkm::read_points_csv(opt.z_path).coords();
  rkm::Vector y;
  if (!opt.y_path.empty()) {
    const rkm::Matrix column = rkm::read_points_csv(opt.y_path).coords();
    if (column.cols() != 1) throw std::invalid_argument("round: --y must be a single column");
    y = column.col(0);
  }
  rkm::RoundingConfig config;
  config.threshold = opt.threshold;
  config.restarts = opt.restarts;
  config.seed = opt.seed;

  rkm::Clustering rounded = rkm::round_solution(points, z, y, opt.k, config);
  if (opt.reassign_noise) rounded = rkm::assign_noise_to_clusters(points, rounded);
  rkm::write_labels_csv(opt.out_path, rounded);

  if (!opt.report_path.empty()) {
    rkm::Json report;
    report["k"] = rounded.k;
    report["n_points"] = points.size();
    report["noise_count"] = rkm::noise_members(rounded).size();
    report["reassign_noise"] = opt.reassign_noise;
    rkm::write_json_file(opt.report_path, report);
  }
  return kExitOk;
}

struct CertifyOptions {
  std::string points_path;
  std::string labels_path;
  std::string lambda_text;
  std::string kind_text = "sdp";
  std::optional<double> delta;
  std::optional<double> z_choice;
  std::string out_path;
};

int run_certify(const CertifyOptions& opt) {
  const rkm::PointSet points = rkm::read_points_csv(opt.points_path);
  const rkm::Clustering clustering = rkm::read_labels_csv(opt.labels_path);
  const double lambda = parse_lambda(opt.lambda_text);
  const rkm::RelaxKind kind = parse_kind(opt.kind_text);

  rkm::CertificateReport report;
  if (kind == rkm::RelaxKind::LP) {
    if (std::isinf(lambda)) {
      throw std::invalid_argument("certify: the LP certificate needs a finite --lambda");
    }
    report = rkm::lp_certificate(points, clustering, lambda);
  } else {
    const rkm::SdpDualCertificate cert =
        std::isinf(lambda)
            ? rkm::construct_dual_noiseless(points, clustering, opt.z_choice)
            : rkm::construct_dual_regularised(points, clustering, lambda, opt.z_choice);
    report = rkm::verify(cert, points, clustering, lambda, opt.delta);
  }

  rkm::Json j = rkm::certificate_report_to_json(report);
  j["kind"] = opt.kind_text;
  j["lambda"] = rkm::json_number(lambda);
  emit_json(j, opt.out_path);
  return report.certified ? kExitOk : kExitNotCertified;
}

struct SweepOptions {
  std::string config_path;
  std::optional<int> trials;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out_csv;
  std::string heatmap_path;
  std::string records_path;
};

int run_sweep(const SweepOptions& opt) {
  rkm::SweepSpec spec = rkm::sweep_spec_from_json(rkm::read_json_file(opt.config_path));
  if (opt.trials) spec.trials = *opt.trials;
  if (opt.seed) spec.seed = *opt.seed;
  if (opt.threads) spec.threads = *opt.threads;
  rkm::validate_sweep_spec(spec);

  const rkm::SweepResult result = rkm::run_sweep(spec);
  if (opt.out_csv.empty()) {
    rkm::write_sweep_csv(std::cout, result);
  } else {
    rkm::write_sweep_csv(opt.out_csv, result);
  }
  if (!opt.heatmap_path.empty()) rkm::write_heatmap_p5(opt.heatmap_path, result.fractions);
  if (!opt.records_path.empty()) {
    rkm::Json cells = rkm::Json::array();
    for (const auto& cell : result.cells) {
      rkm::Json trials = rkm::Json::array();
      for (const auto& record : cell.records) {
        trials.push_back({{"seed_ball", record.seed_ball},
                          {"seed_noise", record.seed_noise},
                          {"seed_round", record.seed_round},
                          {"recovered", record.recovered},
                          {"delta_restricted", record.delta_restricted},
                          {"f1_structured", record.f1_structured},
                          {"objective", record.objective},
                          {"converged", record.converged},
                          {"wall_ms", record.wall_ms},
                          {"error", record.error}});
      }
      cells.push_back({{result.axis1.name, cell.axis1_value},
                       {result.axis2.name, cell.axis2_value},
                       {"successes", cell.successes},
                       {"trials", trials}});
    }
    rkm::write_json_file(opt.records_path, cells);
  }
  return kExitOk;
}

struct BaselineOptions {
  std::string points_path;
  int k = 1;
  int restarts = 10;
  int max_iter = 300;
  std::uint64_t seed = 0;
  std::string out_path;
  std::string report_path;
};

int run_baseline(const BaselineOptions& opt) {
  const rkm::PointSet points = rkm::read_points_csv(opt.points_path);
  rkm::LloydConfig config;
  config.k = opt.k;
  config.restarts = opt.restarts;
  config.max_iter = opt.max_iter;
  config.seed = opt.seed;
  const rkm::LloydResult result = rkm::lloyd_detail(points, config);
  rkm::write_labels_csv(opt.out_path, result.clustering);
  if (!opt.report_path.empty()) {
    rkm::Json report;
    report["k"] = opt.k;
    report["cost"] = result.cost;
    report["iterations"] = result.iterations;
    rkm::write_json_file(opt.report_path, report);
  }
  return kExitOk;
}

struct EvalOptions {
  std::string candidate_path;
  std::string reference_path;
  std::string out_path;
};

int run_eval(const EvalOptions& opt) {
  const rkm::Clustering candidate = rkm::read_labels_csv(opt.candidate_path);
  const rkm::Clustering reference = rkm::read_labels_csv(opt.reference_path);
  const double delta = rkm::clustering_distance(candidate, reference);
  const rkm::PairMetrics metrics = rkm::pair_metrics(candidate, reference);

  rkm::Json j;
  j["delta"] = delta;
  j["precision"] = metrics.precision;
  j["recall"] = metrics.recall;
  j["f1"] = metrics.f1;
  emit_json(j, opt.out_path);
  return kExitOk;
}

struct CliqueOptions {
  std::string graph_path;
  int q = 0;
  std::optional<double> delta_param;
  std::string out_path;
};

int run_clique(const CliqueOptions& opt) {
  auto stream = rkm::detail::open_input(opt.graph_path, std::ios::in);
  const rkm::Graph graph = rkm::parse_graph(stream);
  const rkm::ReducedInstance reduced = rkm::build_instance(graph, opt.delta_param);
  const bool decision = rkm::clique_decision(graph, opt.q);

  rkm::Json j;
  j["n_vertices"] = graph.n_vertices;
  j["q"] = opt.q;
  j["clique_exists"] = decision;
  j["lambda0"] = reduced.lambda0;
  j["delta_param"] = reduced.delta_param;
  emit_json(j, opt.out_path);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"regularised k-means relaxations: synthesis, solving, certification"};
  app.require_subcommand(1);
  int rc = kExitOk;

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate an instance (synthetic or from IDX)");
  gen_cmd->add_option("--ball", gen.ball_config_path, "ball model config JSON");
  gen_cmd->add_option("--noise", gen.noise_config_path, "noise config JSON");
  gen_cmd->add_option("--out-prefix", gen.out_prefix, "output path prefix")->required();
  gen_cmd->add_option("--k", gen.k, "number of balls");
  gen_cmd->add_option("--d", gen.d, "ambient dimension");
  gen_cmd->add_option("--n", gen.n, "points per ball");
  gen_cmd->add_option("--delta", gen.delta, "center separation");
  gen_cmd->add_option("--seed", gen.seed, "ball sampling seed");
  gen_cmd->add_option("--noise-seed", gen.noise_seed, "noise sampling seed");
  gen_cmd->add_option("--m-far", gen.m_far, "far outlier count");
  gen_cmd->add_option("--far-factor", gen.far_factor, "far outlier distance factor");
  gen_cmd->add_option("--m-near", gen.m_near, "margin noise count");
  gen_cmd->add_option("--margin-alpha", gen.margin_alpha, "margin noise placement");
  gen_cmd->add_option("--m-uniform", gen.m_uniform, "uniform box noise count");
  gen_cmd->add_option("--box-scale", gen.box_scale, "uniform noise box scale");
  gen_cmd->add_option("--from-idx", gen.idx_images, "IDX image file to ingest instead");
  gen_cmd->add_option("--idx-labels", gen.idx_labels, "IDX label file");
  gen_cmd->add_option("--classes", gen.classes, "class labels to keep, in cluster order")
      ->delimiter(',');
  gen_cmd->add_option("--limit", gen.limit, "cap on ingested points (0 = all)");
  gen_cmd->callback([&] { rc = run_gen(gen); });

  SolveOptions solve;
  auto* solve_cmd = app.add_subcommand("solve", "solve the SDP or LP relaxation");
  solve_cmd->add_option("--points", solve.points_path, "points CSV")->required();
  solve_cmd->add_option("--k", solve.k, "cluster count")->required();
  solve_cmd->add_option("--lambda", solve.lambda_text, "noise penalty, or \"inf\"")
      ->required();
  solve_cmd->add_option("--kind", solve.kind_text, "relaxation kind: sdp or lp");
  solve_cmd->add_option("--solver", solve.solver_config_path, "solver config JSON");
  solve_cmd->add_option("--tol", solve.tol, "stopping tolerance override");
  solve_cmd->add_option("--max-iter", solve.max_iter, "iteration cap override");
  solve_cmd->add_option("--out", solve.out_path, "report JSON path (stdout if omitted)");
  solve_cmd->add_option("--z-out", solve.z_out_path, "write the solution matrix Z as CSV");
  solve_cmd->add_option("--y-out", solve.y_out_path, "write the noise indicator y as CSV");
  solve_cmd->callback([&] { rc = run_solve(solve); });

  RoundOptions round;
  auto* round_cmd = app.add_subcommand("round", "round a relaxed solution to a clustering");
  round_cmd->add_option("--points", round.points_path, "points CSV")->required();
  round_cmd->add_option("--z", round.z_path, "solution matrix Z CSV")->required();
  round_cmd->add_option("--y", round.y_path, "noise indicator CSV (single column)");
  round_cmd->add_option("--k", round.k, "cluster count")->required();
  round_cmd->add_option("--threshold", round.threshold, "noise threshold on y");
  round_cmd->add_option("--restarts", round.restarts, "k-means++ restarts");
  round_cmd->add_option("--seed", round.seed, "rounding seed");
  round_cmd->add_flag("--reassign-noise", round.reassign_noise,
                      "assign flagged noise to nearest recovered cluster");
  round_cmd->add_option("--out", round.out_path, "labels CSV path")->required();
  round_cmd->add_option("--report", round.report_path, "summary JSON path");
  round_cmd->callback([&] { rc = run_round(round); });

  CertifyOptions certify;
  auto* certify_cmd =
      app.add_subcommand("certify", "build and verify an optimality certificate");
  certify_cmd->add_option("--points", certify.points_path, "points CSV")->required();
  certify_cmd->add_option("--labels", certify.labels_path, "clustering labels CSV")
      ->required();
  certify_cmd->add_option("--lambda", certify.lambda_text, "noise penalty, or \"inf\"")
      ->required();
  certify_cmd->add_option("--kind", certify.kind_text, "certificate kind: sdp or lp");
  certify_cmd->add_option("--delta", certify.delta, "planted separation hint");
  certify_cmd->add_option("--z-choice", certify.z_choice, "explicit spectral shift z");
  certify_cmd->add_option("--out", certify.out_path, "report JSON path (stdout if omitted)");
  certify_cmd->callback([&] { rc = run_certify(certify); });

  SweepOptions sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "run a two-axis phase diagram");
  sweep_cmd->add_option("--config", sweep.config_path, "sweep spec JSON")->required();
  sweep_cmd->add_option("--trials", sweep.trials, "trials per cell override");
  sweep_cmd->add_option("--seed", sweep.seed, "master seed override");
  sweep_cmd->add_option("--threads", sweep.threads, "worker thread override");
  sweep_cmd->add_option("--out-csv", sweep.out_csv, "grid CSV path (stdout if omitted)");
  sweep_cmd->add_option("--heatmap", sweep.heatmap_path, "P5 heatmap path");
  sweep_cmd->add_option("--records", sweep.records_path, "per-trial records JSON path");
  sweep_cmd->callback([&] { rc = run_sweep(sweep); });

  BaselineOptions baseline;
  auto* baseline_cmd = app.add_subcommand("baseline", "k-means++ with Lloyd iterations");
  baseline_cmd->add_option("--points", baseline.points_path, "points CSV")->required();
  baseline_cmd->add_option("--k", baseline.k, "cluster count")->required();
  baseline_cmd->add_option("--restarts", baseline.restarts, "independent restarts");
  baseline_cmd->add_option("--max-iter", baseline.max_iter, "Lloyd iteration cap");
  baseline_cmd->add_option("--seed", baseline.seed, "seeding RNG");
  baseline_cmd->add_option("--out", baseline.out_path, "labels CSV path")->required();
  baseline_cmd->add_option("--report", baseline.report_path, "summary JSON path");
  baseline_cmd->callback([&] { rc = run_baseline(baseline); });

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "score a clustering against a reference");
  eval_cmd->add_option("--candidate", eval.candidate_path, "candidate labels CSV")
      ->required();
  eval_cmd->add_option("--reference", eval.reference_path, "reference labels CSV")
      ->required();
  eval_cmd->add_option("--out", eval.out_path, "metrics JSON path (stdout if omitted)");
  eval_cmd->callback([&] { rc = run_eval(eval); });

  CliqueOptions clique;
  auto* clique_cmd = app.add_subcommand("clique", "decide q-clique existence by reduction");
  clique_cmd->add_option("--graph", clique.graph_path, "edge list file")->required();
  clique_cmd->add_option("--q", clique.q, "clique size")->required();
  clique_cmd->add_option("--delta-param", clique.delta_param, "non-edge distance bump");
  clique_cmd->add_option("--out", clique.out_path, "decision JSON path (stdout if omitted)");
  clique_cmd->callback([&] { rc = run_clique(clique); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return rc;
}
