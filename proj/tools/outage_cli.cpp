// outage: command-line front end for grid generation, simulation, detection
// and Monte Carlo benchmarks.

#include "outage/detector.hpp"
#include "outage/grid.hpp"
#include "outage/harness.hpp"
#include "outage/io.hpp"
#include "outage/localizer.hpp"
#include "outage/matfun.hpp"

#include <algorithm>
#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>

namespace {

using namespace outage;
using io::Json;

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    io::write_text_file(path, text);
  }
}

std::vector<std::pair<int, int>> parse_outages(const std::vector<std::string>& specs) {
  static const std::regex pat(R"(\s*(\d+)\s*-\s*(\d+)\s*)");
  std::vector<std::pair<int, int>> out;
  for (const auto& s : specs) {
    std::smatch m;
    if (!std::regex_match(s, m, pat)) throw CLI::ValidationError("--outage", "expected i-k, got '" + s + "'");
    const int a = std::stoi(m[1]);
    const int b = std::stoi(m[2]);
    if (a < 1 || b < 1) throw CLI::ValidationError("--outage", "bus numbers are 1-based");
    out.emplace_back(a - 1, b - 1);
  }
  return out;
}

struct GridArgs {
  std::string topology;
  std::string kind = "loopy";
  int size = 8;
  std::uint64_t seed = 1;
  double adm_min = 5.0, adm_max = 15.0, shunt_min = 0.0, shunt_max = 0.0;

  void add(CLI::App* app) {
    app->add_option("--topology", topology, "topology JSON file");
    app->add_option("--kind", kind, "generated grid kind")->check(CLI::IsMember({"radial", "loopy"}));
    app->add_option("--size", size, "generated grid bus count")->check(CLI::Range(3, 100000));
    app->add_option("--grid-seed", seed, "generator seed");
    app->add_option("--admittance-min", adm_min);
    app->add_option("--admittance-max", adm_max);
    app->add_option("--shunt-min", shunt_min);
    app->add_option("--shunt-max", shunt_max);
  }

  grid::GridTopology resolve() const {
    if (!topology.empty()) return io::topology_from_json(io::read_json_file(topology));
    grid::GridGenOptions o{adm_min, adm_max, shunt_min, shunt_max};
    return grid::generate_test_grid(kind == "radial" ? grid::GridKind::radial : grid::GridKind::loopy, size, seed, o);
  }
};

int run_matfun_bench(int dim, int count, std::uint64_t seed, double radius, double log_radius,
                     const std::vector<int>& ks, const std::string& out) {
  std::mt19937_64 rng(seed);
  std::vector<Matrix> ex, lg;
  for (int i = 0; i < count; ++i) ex.push_back(matfun::random_symmetric(rng, dim, -radius, radius));
  for (int i = 0; i < count; ++i) {
    lg.push_back(Matrix::Identity(dim, dim) + matfun::random_symmetric(rng, dim, -log_radius, log_radius));
  }
  using clock = std::chrono::steady_clock;
  auto seconds = [](clock::duration d) { return std::chrono::duration<double>(d).count(); };

  std::vector<Matrix> exact_exp, exact_log;
  const auto t0 = clock::now();
  for (const auto& x : ex) exact_exp.push_back(matfun::exact_exp_sym(x));
  const double t_exact_exp = seconds(clock::now() - t0);
  const auto t1 = clock::now();
  for (const auto& x : lg) exact_log.push_back(matfun::exact_log_sym(x));
  const double t_exact_log = seconds(clock::now() - t1);

  Json rows = Json::array();
  for (int k : ks) {
    Json row{{"k", k}};
    if (k % 2 == 0 && k >= 2) {
      double err = 0.0;
      std::size_t fail = 0;
      const auto s = clock::now();
      for (std::size_t i = 0; i < ex.size(); ++i) {
        try {
          err = std::max(err, matfun::max_relative_error(matfun::truncated_exp(ex[i], k), exact_exp[i]));
        } catch (const SeriesRegionError&) {
          ++fail;
        }
      }
      row["exp_max_rel_error"] = err;
      row["exp_region_failures"] = fail;
      row["exp_time_ratio"] = seconds(clock::now() - s) / t_exact_exp;
    }
    double err = 0.0;
    const auto s = clock::now();
    for (std::size_t i = 0; i < lg.size(); ++i) {
      err = std::max(err, matfun::max_relative_error(matfun::truncated_log(lg[i], k), exact_log[i]));
    }
    row["log_max_rel_error"] = err;
    row["log_time_ratio"] = seconds(clock::now() - s) / t_exact_log;
    rows.push_back(row);
  }
  Json j{{"dim", dim}, {"count", count}, {"seed", seed}, {"exp_spectral_radius", radius},
         {"log_spectral_radius", log_radius}, {"rows", rows}};
  emit(out, j.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Line-outage detection and localization from voltage increments"};
  app.require_subcommand(1);

  // gen-grid
  auto* gen = app.add_subcommand("gen-grid", "emit a generated topology as JSON");
  GridArgs gen_grid;
  gen_grid.add(gen);
  std::string gen_out;
  gen->add_option("-o,--output", gen_out, "output file (default stdout)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "emit a stream CSV with a planted outage and its ground truth");
  GridArgs sim_grid;
  sim_grid.add(sim);
  std::string sim_model, sim_stream, sim_truth;
  std::vector<std::string> sim_outages;
  std::uint64_t sim_seed = 1, sim_inj_seed = 7;
  double sim_rho = 0.04, sim_noise = 0.0, sim_cov = 1.0;
  long sim_len = 0;
  std::string sim_channel = "real_part";
  sim->add_option("--model", sim_model, "JSON with pre/post distributions instead of a grid");
  sim->add_option("--outage", sim_outages, "removed branch as i-k (1-based), repeatable");
  sim->add_option("--injection-seed", sim_inj_seed);
  sim->add_option("--channel", sim_channel)->check(CLI::IsMember({"real_part", "magnitude"}));
  sim->add_option("--seed", sim_seed);
  sim->add_option("--rho", sim_rho)->check(CLI::Range(0.0, 1.0));
  sim->add_option("--length", sim_len, "samples (default ceil(50/rho))");
  sim->add_option("--noise", sim_noise)->check(CLI::NonNegativeNumber);
  sim->add_option("--coverage", sim_cov)->check(CLI::Range(0.0, 1.0));
  sim->add_option("--stream", sim_stream, "stream CSV output")->required();
  sim->add_option("--truth", sim_truth, "ground-truth JSON output")->required();

  // detect
  auto* det = app.add_subcommand("detect", "run the detector over a stream CSV");
  std::string det_stream, det_model, det_out, det_mode = "pgd";
  double det_rho = 0.04, det_alpha = 0.01;
  int det_window = 100, det_iters = 100, det_min_window = 20;
  bool det_whiten = false, det_accel = false, det_localize = false;
  det->add_option("--stream", det_stream, "stream CSV")->required();
  det->add_option("--model", det_model, "JSON with the pre distribution (and post for f_known)")->required();
  det->add_option("--mode", det_mode)->check(CLI::IsMember({"pgd", "f_known"}));
  det->add_option("--rho", det_rho);
  det->add_option("--alpha", det_alpha);
  det->add_option("--window", det_window);
  det->add_option("--max-iters", det_iters);
  det->add_option("--min-learning-window", det_min_window, "pgd: samples before the learner runs");
  det->add_flag("--accelerated", det_accel, "truncated exp/log in the learner");
  det->add_flag("--whiten", det_whiten, "whiten with the pre distribution before detection");
  det->add_flag("--localize", det_localize, "add localized branch candidates to the output");
  det->add_option("-o,--output", det_out);

  // bench
  auto* bench = app.add_subcommand("bench", "Monte Carlo experiment from a JSON config");
  std::string bench_cfg, bench_out, bench_csv;
  int bench_threads = 0, bench_trials = 0;
  bench->add_option("--config", bench_cfg)->required();
  bench->add_option("-o,--output", bench_out, "report JSON");
  bench->add_option("--csv", bench_csv, "per-alpha CSV");
  bench->add_option("--threads", bench_threads, "override config threads")->check(CLI::PositiveNumber);
  bench->add_option("--trials", bench_trials, "override config trials")->check(CLI::PositiveNumber);

  // matfun-bench
  auto* mb = app.add_subcommand("matfun-bench", "truncated exp/log accuracy and time against eigendecomposition");
  int mb_dim = 5, mb_count = 200;
  std::uint64_t mb_seed = 1;
  double mb_radius = 2.0, mb_log_radius = 0.5;
  std::vector<int> mb_ks{2, 4, 6, 8, 10, 12, 14, 16, 18, 20};
  std::string mb_out;
  mb->add_option("--dim", mb_dim)->check(CLI::PositiveNumber);
  mb->add_option("--count", mb_count)->check(CLI::PositiveNumber);
  mb->add_option("--seed", mb_seed);
  mb->add_option("--radius", mb_radius, "spectral radius of exp inputs");
  mb->add_option("--log-radius", mb_log_radius, "spectral radius of (x - I) for log inputs")->check(CLI::Range(0.0, 0.999));
  mb->add_option("--k", mb_ks, "series orders");
  mb->add_option("-o,--output", mb_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      emit(gen_out, io::topology_to_json(gen_grid.resolve()).dump(2) + "\n");
      return 0;
    }

    if (*sim) {
      harness::OutageModel model = [&] {
        if (!sim_model.empty()) {
          const auto m = io::model_from_json(io::read_json_file(sim_model));
          if (!m.post) throw FormatError(sim_model + ": model.post is required for simulate");
          return harness::gaussian_model(m.pre, *m.post);
        }
        if (sim_outages.empty()) throw std::invalid_argument("simulate: --outage or --model is required");
        const auto top = sim_grid.resolve();
        const auto inj = grid::random_injection_stats(top.bus_count() - 1, sim_inj_seed);
        return harness::grid_outage_model(top, parse_outages(sim_outages), inj,
                                          sim_channel == "magnitude" ? grid::SensitivityChannel::magnitude
                                                                     : grid::SensitivityChannel::real_part);
      }();
      harness::TrialOptions opts{sim_rho, sim_len > 0 ? sim_len : static_cast<long>(std::ceil(50.0 / sim_rho)),
                                 sim_noise, sim_cov};
      const harness::Trial t = harness::simulate_trial(model, opts, sim_seed);
      std::vector<int> buses;
      for (Index c : t.kept) {
        buses.push_back(model.buses.empty() ? static_cast<int>(c + 1) : model.buses[static_cast<std::size_t>(c)] + 1);
      }
      std::ofstream out(sim_stream);
      if (!out) throw std::runtime_error(sim_stream + ": cannot write");
      io::write_stream_csv(out, {buses, t.stream});
      Json truth = io::model_to_json(harness::observed(model.g, t.kept, sim_noise),
                                     harness::observed(model.f, t.kept, sim_noise), buses);
      truth["lambda"] = t.lambda;
      Json pairs = Json::array();
      for (const auto& [a, b] : model.truth) {
        pairs.push_back({model.buses[static_cast<std::size_t>(a)] + 1, model.buses[static_cast<std::size_t>(b)] + 1});
      }
      truth["truth"] = pairs;
      io::write_text_file(sim_truth, truth.dump(2) + "\n");
      return 0;
    }

    if (*det) {
      const io::StreamData s = io::read_stream_csv_file(det_stream);
      const io::ModelFile m = io::model_from_json(io::read_json_file(det_model));
      if (m.pre.dim() != static_cast<Index>(s.buses.size())) {
        throw FormatError(det_stream + ": stream has " + std::to_string(s.buses.size()) + " columns, model has " +
                          std::to_string(m.pre.dim()));
      }
      if (!m.buses.empty() && m.buses != s.buses) throw FormatError(det_stream + ": header buses differ from model.buses");
      detector::DetectorConfig cfg;
      cfg.rho = det_rho;
      cfg.alpha = det_alpha;
      cfg.window = det_window;
      cfg.learner.max_iters = det_iters;
      cfg.min_learning_window = std::min(det_min_window, det_window);
      cfg.learner.accelerated = det_accel;
      cfg.mode = det_mode == "pgd" ? detector::DetectionMode::pgd : detector::DetectionMode::f_known;
      if (cfg.mode == detector::DetectionMode::f_known && !m.post) {
        throw FormatError(det_model + ": model.post is required in f_known mode");
      }
      std::optional<WhiteningTransform> wt;
      if (det_whiten) wt = whitening_transform(m.pre);
      const IncrementDistribution g = wt ? push_forward(*wt, m.pre) : m.pre;
      std::optional<IncrementDistribution> f;
      if (m.post) f = wt ? push_forward(*wt, *m.post) : *m.post;
      const Matrix stream = wt ? apply_whitening(*wt, s.samples) : s.samples;
      const auto outcome = detector::run_detection(stream, g, cfg, f);
      std::optional<Vector> mu;
      std::optional<Matrix> sigma;
      if (wt && outcome.mu) {
        mu = unwhiten_mean(*wt, *outcome.mu);
        sigma = unwhiten_covariance(*wt, *outcome.sigma);
      }
      Json j = io::outcome_to_json(outcome, mu, sigma);
      if (det_localize) {
        if (outcome.tau && m.pre.dim() >= 3) {
          const Matrix s1 = sigma ? *sigma : *outcome.sigma;
          j["candidates"] = io::candidates_to_json(localizer::localize(m.pre.cov(), s1), s.buses)["candidates"];
        } else {
          j["candidates"] = Json::array();
        }
      }
      emit(det_out, j.dump(2) + "\n");
      return 0;
    }

    if (*bench) {
      const auto base = std::filesystem::path(bench_cfg).parent_path().string();
      harness::ExperimentConfig cfg = io::experiment_from_json(io::read_json_file(bench_cfg), base.empty() ? "." : base);
      if (bench_threads > 0) cfg.threads = bench_threads;
      if (bench_trials > 0) cfg.trials = bench_trials;
      const auto rep = harness::run_monte_carlo(cfg);
      emit(bench_out, io::report_to_json(rep, cfg).dump(2) + "\n");
      if (!bench_csv.empty()) {
        std::ostringstream csv;
        io::write_report_csv(csv, rep);
        io::write_text_file(bench_csv, csv.str());
      }
      return 0;
    }

    if (*mb) return run_matfun_bench(mb_dim, mb_count, mb_seed, mb_radius, mb_log_radius, mb_ks, mb_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
