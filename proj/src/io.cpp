#include "outage/io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace outage::io {

namespace {

const Json& field(const Json& j, const std::string& key, const std::string& where) {
  if (!j.is_object()) throw FormatError(where + ": expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw FormatError(where + ": missing field '" + key + "'");
  return *it;
}

const Json* optional_field(const Json& j, const std::string& key) {
  const auto it = j.find(key);
  return (it == j.end() || it->is_null()) ? nullptr : &*it;
}

void reject_unknown(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw FormatError(where + ": unknown field '" + key + "'");
  }
}

double number(const Json& v, const std::string& where) {
  if (!v.is_number()) throw FormatError(where + ": expected a number");
  return v.get<double>();
}

long integer(const Json& v, const std::string& where) {
  if (!v.is_number_integer()) throw FormatError(where + ": expected an integer");
  return v.get<long>();
}

bool boolean(const Json& v, const std::string& where) {
  if (!v.is_boolean()) throw FormatError(where + ": expected true or false");
  return v.get<bool>();
}

std::string text(const Json& v, const std::string& where) {
  if (!v.is_string()) throw FormatError(where + ": expected a string");
  return v.get<std::string>();
}

Vector vector_from(const Json& v, const std::string& where) {
  if (!v.is_array()) throw FormatError(where + ": expected an array of numbers");
  Vector out(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Index>(i)) = number(v[i], where + "[" + std::to_string(i) + "]");
  return out;
}

Matrix matrix_from(const Json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw FormatError(where + ": expected a non-empty array of rows");
  const std::size_t n = v.size();
  Matrix out(static_cast<Index>(n), static_cast<Index>(n));
  for (std::size_t r = 0; r < n; ++r) {
    const std::string row = where + "[" + std::to_string(r) + "]";
    if (!v[r].is_array() || v[r].size() != n) throw FormatError(row + ": expected " + std::to_string(n) + " entries");
    for (std::size_t c = 0; c < n; ++c) {
      out(static_cast<Index>(r), static_cast<Index>(c)) = number(v[r][c], row + "[" + std::to_string(c) + "]");
    }
  }
  return out;
}

Json to_json(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json to_json(const Matrix& m) {
  Json a = Json::array();
  for (Index r = 0; r < m.rows(); ++r) a.push_back(to_json(Vector(m.row(r).transpose())));
  return a;
}

template <class T>
Json nullable(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path + ": cannot open");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path + ": cannot write");
  out << text;
}

Json topology_to_json(const grid::GridTopology& top) {
  Json j;
  j["buses"] = top.bus_count();
  j["slack"] = top.slack() + 1;
  Json br = Json::array();
  for (const auto& b : top.branches()) {
    br.push_back({{"i", b.from + 1}, {"k", b.to + 1}, {"g", b.admittance.real()}, {"b", b.admittance.imag()}});
  }
  j["branches"] = br;
  Json sh = Json::array();
  for (std::size_t i = 0; i < top.shunt().size(); ++i) {
    const auto& y = top.shunt()[i];
    if (y != grid::Complex{}) sh.push_back({{"bus", i + 1}, {"g", y.real()}, {"b", y.imag()}});
  }
  j["shunt"] = sh;
  return j;
}

grid::GridTopology topology_from_json(const Json& j) {
  const std::string where = "topology";
  reject_unknown(j, {"buses", "slack", "branches", "shunt"}, where);
  const long m = integer(field(j, "buses", where), where + ".buses");
  const long slack = integer(field(j, "slack", where), where + ".slack");
  if (m < 2) throw FormatError(where + ".buses: need at least 2 buses");
  auto bus = [m](const Json& v, const std::string& w) {
    const long b = integer(v, w);
    if (b < 1 || b > m) throw FormatError(w + ": bus " + std::to_string(b) + " outside 1.." + std::to_string(m));
    return static_cast<int>(b - 1);
  };
  if (slack < 1 || slack > m) throw FormatError(where + ".slack: bus outside 1.." + std::to_string(m));

  const Json& br = field(j, "branches", where);
  if (!br.is_array()) throw FormatError(where + ".branches: expected an array");
  std::vector<grid::Branch> branches;
  for (std::size_t l = 0; l < br.size(); ++l) {
    const std::string w = where + ".branches[" + std::to_string(l) + "]";
    const Json& e = br[l];
    const int i = bus(field(e, "i", w), w + ".i");
    const int k = bus(field(e, "k", w), w + ".k");
    const double g = number(field(e, "g", w), w + ".g");
    const Json* b = optional_field(e, "b");
    const double bv = b ? number(*b, w + ".b") : 0.0;
    if (i == k) throw FormatError(w + ": self-loop");
    if (g == 0.0 && bv == 0.0) throw FormatError(w + ": zero admittance");
    branches.push_back({i, k, grid::Complex{g, bv}});
  }
  std::vector<grid::Complex> shunt(static_cast<std::size_t>(m));
  if (const Json* sh = optional_field(j, "shunt")) {
    if (!sh->is_array()) throw FormatError(where + ".shunt: expected an array");
    for (std::size_t s = 0; s < sh->size(); ++s) {
      const std::string w = where + ".shunt[" + std::to_string(s) + "]";
      const Json& e = (*sh)[s];
      const int b = bus(field(e, "bus", w), w + ".bus");
      const Json* bb = optional_field(e, "b");
      shunt[static_cast<std::size_t>(b)] += grid::Complex{number(field(e, "g", w), w + ".g"), bb ? number(*bb, w + ".b") : 0.0};
    }
  }
  return grid::GridTopology(static_cast<int>(m), static_cast<int>(slack - 1), std::move(branches), std::move(shunt));
}

Json distribution_to_json(const IncrementDistribution& d) {
  return Json{{"mean", to_json(d.mean())}, {"cov", to_json(d.cov())}};
}

IncrementDistribution distribution_from_json(const Json& j, const std::string& where) {
  const Vector mean = vector_from(field(j, "mean", where), where + ".mean");
  const Matrix cov = matrix_from(field(j, "cov", where), where + ".cov");
  if (cov.rows() != mean.size()) throw FormatError(where + ": mean and cov sizes differ");
  try {
    return IncrementDistribution(mean, cov);
  } catch (const std::invalid_argument& e) {
    throw FormatError(where + ".cov: " + e.what());
  }
}

Json model_to_json(const IncrementDistribution& pre, const std::optional<IncrementDistribution>& post,
                   const std::vector<int>& buses) {
  Json j;
  if (!buses.empty()) j["buses"] = buses;
  j["pre"] = distribution_to_json(pre);
  if (post) j["post"] = distribution_to_json(*post);
  return j;
}

ModelFile model_from_json(const Json& j) {
  reject_unknown(j, {"pre", "post", "buses", "truth", "lambda"}, "model");
  ModelFile m{distribution_from_json(field(j, "pre", "model"), "model.pre"), std::nullopt, {}};
  if (const Json* p = optional_field(j, "post")) m.post = distribution_from_json(*p, "model.post");
  if (m.post && m.post->dim() != m.pre.dim()) throw FormatError("model.post: dimension differs from model.pre");
  if (const Json* b = optional_field(j, "buses")) {
    if (!b->is_array() || static_cast<Index>(b->size()) != m.pre.dim()) {
      throw FormatError("model.buses: expected one bus number per coordinate");
    }
    for (std::size_t i = 0; i < b->size(); ++i) {
      m.buses.push_back(static_cast<int>(integer((*b)[i], "model.buses[" + std::to_string(i) + "]")));
    }
  }
  return m;
}

StreamData read_stream_csv(std::istream& in) {
  StreamData s;
  std::string line;
  long row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw FormatError("stream: missing header row");
  for (const auto& cell : split_csv(line)) {
    try {
      std::size_t used = 0;
      const int b = std::stoi(cell, &used);
      if (used != cell.size() || b < 1) throw std::invalid_argument(cell);
      s.buses.push_back(b);
    } catch (const std::exception&) {
      throw FormatError("stream row " + std::to_string(row) + ": header entry '" + cell + "' is not a bus number");
    }
  }
  const std::size_t d = s.buses.size();
  std::vector<double> values;
  long count = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != d) {
      throw FormatError("stream row " + std::to_string(row) + ": expected " + std::to_string(d) + " values, got " +
                        std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < d; ++c) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cells[c], &used);
        if (used != cells[c].size() || !std::isfinite(v)) throw std::invalid_argument(cells[c]);
        values.push_back(v);
      } catch (const std::exception&) {
        throw FormatError("stream row " + std::to_string(row) + ", column " + std::to_string(c + 1) + ": '" +
                          cells[c] + "' is not a finite number");
      }
    }
    ++count;
  }
  s.samples = Eigen::Map<const Matrix>(values.data(), static_cast<Index>(d), count);
  return s;
}

StreamData read_stream_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path + ": cannot open");
  try {
    return read_stream_csv(in);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_stream_csv(std::ostream& out, const StreamData& s) {
  for (std::size_t i = 0; i < s.buses.size(); ++i) out << (i ? "," : "") << s.buses[i];
  out << '\n' << std::setprecision(17);
  for (Index n = 0; n < s.samples.cols(); ++n) {
    for (Index r = 0; r < s.samples.rows(); ++r) out << (r ? "," : "") << s.samples(r, n);
    out << '\n';
  }
}

Json outcome_to_json(const detector::DetectionOutcome& out, const std::optional<Vector>& mu,
                     const std::optional<Matrix>& sigma) {
  Json j;
  j["tau"] = nullable(out.tau);
  j["threshold"] = out.log_threshold;
  j["trace"] = out.trace;
  const auto m = mu ? mu : out.mu;
  const auto s = sigma ? sigma : out.sigma;
  if (m && s) {
    j["learned"] = Json{{"mu", to_json(*m)}, {"sigma", to_json(*s)}};
  } else {
    j["learned"] = nullptr;
  }
  return j;
}

Json candidates_to_json(const std::vector<localizer::Candidate>& c, const std::vector<int>& buses) {
  Json a = Json::array();
  auto bus = [&](Index i) { return buses.empty() ? static_cast<int>(i + 1) : buses.at(static_cast<std::size_t>(i)); };
  for (const auto& x : c) a.push_back({{"i", bus(x.i)}, {"k", bus(x.k)}, {"rho_pre", x.rho_pre}, {"rho_post", x.rho_post}});
  return Json{{"candidates", a}};
}

namespace {

learner::LearnerConfig learner_from_json(const Json& j) {
  const std::string w = "learner";
  reject_unknown(j, {"max_iters", "step", "stop_tol", "accelerated", "k_exp", "k_log", "output", "mean_map", "mean_bound",
                     "max_dual_step"}, w);
  learner::LearnerConfig c;
  if (const Json* v = optional_field(j, "max_iters")) c.max_iters = static_cast<int>(integer(*v, w + ".max_iters"));
  if (const Json* v = optional_field(j, "step")) c.step = number(*v, w + ".step");
  if (const Json* v = optional_field(j, "stop_tol")) c.stop_tol = number(*v, w + ".stop_tol");
  if (const Json* v = optional_field(j, "accelerated")) c.accelerated = boolean(*v, w + ".accelerated");
  if (const Json* v = optional_field(j, "k_exp")) c.approx.k_exp = static_cast<int>(integer(*v, w + ".k_exp"));
  if (const Json* v = optional_field(j, "k_log")) c.approx.k_log = static_cast<int>(integer(*v, w + ".k_log"));
  if (const Json* v = optional_field(j, "output")) {
    const auto s = text(*v, w + ".output");
    if (s == "best") c.output = learner::OutputMode::best;
    else if (s == "averaged") c.output = learner::OutputMode::averaged;
    else throw FormatError(w + ".output: expected \"best\" or \"averaged\"");
  }
  if (const Json* v = optional_field(j, "mean_map")) {
    const auto s = text(*v, w + ".mean_map");
    if (s == "euclidean") c.mean_map = learner::MeanMap::euclidean;
    else if (s == "bounded_interval") c.mean_map = learner::MeanMap::bounded_interval;
    else throw FormatError(w + ".mean_map: expected \"euclidean\" or \"bounded_interval\"");
  }
  if (const Json* v = optional_field(j, "mean_bound")) c.mean_bound = number(*v, w + ".mean_bound");
  if (const auto it = j.find("max_dual_step"); it != j.end()) {
    // null disables the cap
    if (it->is_null()) c.max_dual_step.reset();
    else c.max_dual_step = number(*it, w + ".max_dual_step");
  }
  return c;
}

std::vector<std::pair<int, int>> outage_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw FormatError("scenario.outage: expected a non-empty array of [i, k] pairs");
  std::vector<std::pair<int, int>> out;
  for (std::size_t p = 0; p < j.size(); ++p) {
    const std::string w = "scenario.outage[" + std::to_string(p) + "]";
    if (!j[p].is_array() || j[p].size() != 2) throw FormatError(w + ": expected [i, k]");
    const long a = integer(j[p][0], w + "[0]");
    const long b = integer(j[p][1], w + "[1]");
    if (a < 1 || b < 1) throw FormatError(w + ": bus numbers are 1-based");
    out.emplace_back(static_cast<int>(a - 1), static_cast<int>(b - 1));
  }
  return out;
}

}  // namespace

harness::ExperimentConfig experiment_from_json(const Json& j, const std::string& base_dir) {
  const std::string w = "config";
  reject_unknown(j, {"schema", "scenario", "trials", "seed", "rho", "alphas", "noise_level", "coverage", "stream_length",
                     "whiten", "mode", "window", "min_learning_window", "learner", "localizer", "threads", "records"},
                 w);
  harness::ExperimentConfig c;
  const Json& sc = field(j, "scenario", w);
  const std::string type = text(field(sc, "type", "scenario"), "scenario.type");
  if (type == "gaussian") {
    reject_unknown(sc, {"type", "pre", "post"}, "scenario");
    c.kind = harness::ScenarioKind::gaussian;
    c.pre = distribution_from_json(field(sc, "pre", "scenario"), "scenario.pre");
    c.post = distribution_from_json(field(sc, "post", "scenario"), "scenario.post");
  } else if (type == "grid") {
    reject_unknown(sc, {"type", "topology", "generate", "outage", "injection_seed", "channel"}, "scenario");
    c.kind = harness::ScenarioKind::grid;
    if (const Json* t = optional_field(sc, "topology")) {
      if (t->is_string()) {
        std::filesystem::path p(t->get<std::string>());
        if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
        c.grid.topology = topology_from_json(read_json_file(p.string()));
      } else {
        c.grid.topology = topology_from_json(*t);
      }
    } else {
      const Json& g = field(sc, "generate", "scenario");
      const std::string gw = "scenario.generate";
      reject_unknown(g, {"kind", "size", "seed", "admittance", "shunt"}, gw);
      const std::string kind = text(field(g, "kind", gw), gw + ".kind");
      if (kind == "radial") c.grid.kind = grid::GridKind::radial;
      else if (kind == "loopy") c.grid.kind = grid::GridKind::loopy;
      else throw FormatError(gw + ".kind: expected \"radial\" or \"loopy\"");
      c.grid.size = static_cast<int>(integer(field(g, "size", gw), gw + ".size"));
      if (const Json* v = optional_field(g, "seed")) c.grid.seed = static_cast<std::uint64_t>(integer(*v, gw + ".seed"));
      if (const Json* v = optional_field(g, "admittance")) {
        const Vector r = vector_from(*v, gw + ".admittance");
        if (r.size() != 2) throw FormatError(gw + ".admittance: expected [min, max]");
        c.grid.gen.admittance_min = r(0);
        c.grid.gen.admittance_max = r(1);
      }
      if (const Json* v = optional_field(g, "shunt")) {
        const Vector r = vector_from(*v, gw + ".shunt");
        if (r.size() != 2) throw FormatError(gw + ".shunt: expected [min, max]");
        c.grid.gen.shunt_min = r(0);
        c.grid.gen.shunt_max = r(1);
      }
    }
    c.outage = outage_from_json(field(sc, "outage", "scenario"));
    if (const Json* v = optional_field(sc, "injection_seed")) {
      c.injection_seed = static_cast<std::uint64_t>(integer(*v, "scenario.injection_seed"));
    }
    if (const Json* v = optional_field(sc, "channel")) {
      const auto s = text(*v, "scenario.channel");
      if (s == "real_part") c.channel = grid::SensitivityChannel::real_part;
      else if (s == "magnitude") c.channel = grid::SensitivityChannel::magnitude;
      else throw FormatError("scenario.channel: expected \"real_part\" or \"magnitude\"");
    }
  } else {
    throw FormatError("scenario.type: expected \"gaussian\" or \"grid\"");
  }

  if (const Json* v = optional_field(j, "trials")) c.trials = static_cast<int>(integer(*v, w + ".trials"));
  if (const Json* v = optional_field(j, "seed")) c.seed = static_cast<std::uint64_t>(integer(*v, w + ".seed"));
  if (const Json* v = optional_field(j, "rho")) c.rho = number(*v, w + ".rho");
  if (const Json* v = optional_field(j, "alphas")) {
    const Vector a = vector_from(*v, w + ".alphas");
    c.alphas.assign(a.data(), a.data() + a.size());
  }
  if (const Json* v = optional_field(j, "noise_level")) c.noise_level = number(*v, w + ".noise_level");
  if (const Json* v = optional_field(j, "coverage")) c.coverage = number(*v, w + ".coverage");
  if (const Json* v = optional_field(j, "stream_length")) c.stream_length = integer(*v, w + ".stream_length");
  if (const Json* v = optional_field(j, "whiten")) c.whiten = boolean(*v, w + ".whiten");
  if (const Json* v = optional_field(j, "mode")) {
    const auto s = text(*v, w + ".mode");
    if (s == "pgd") c.mode = detector::DetectionMode::pgd;
    else if (s == "f_known") c.mode = detector::DetectionMode::f_known;
    else throw FormatError(w + ".mode: expected \"pgd\" or \"f_known\"");
  }
  if (const Json* v = optional_field(j, "window")) c.window = static_cast<int>(integer(*v, w + ".window"));
  if (const Json* v = optional_field(j, "min_learning_window")) {
    c.min_learning_window = static_cast<int>(integer(*v, w + ".min_learning_window"));
  }
  if (const Json* v = optional_field(j, "learner")) c.learner = learner_from_json(*v);
  if (const Json* v = optional_field(j, "localizer")) {
    reject_unknown(*v, {"delta_max", "delta_min"}, "localizer");
    if (const Json* x = optional_field(*v, "delta_max")) c.thresholds.delta_max = number(*x, "localizer.delta_max");
    if (const Json* x = optional_field(*v, "delta_min")) c.thresholds.delta_min = number(*x, "localizer.delta_min");
  }
  if (const Json* v = optional_field(j, "threads")) c.threads = static_cast<int>(integer(*v, w + ".threads"));
  if (const Json* v = optional_field(j, "records")) c.keep_records = boolean(*v, w + ".records");
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(w + ": " + e.what());
  }
  return c;
}

Json report_to_json(const harness::MetricsReport& rep, const harness::ExperimentConfig& config) {
  Json j;
  j["schema"] = harness::kReportSchema;
  j["config"] = Json{{"scenario", config.kind == harness::ScenarioKind::grid ? "grid" : "gaussian"},
                     {"trials", config.trials},
                     {"seed", config.seed},
                     {"rho", config.rho},
                     {"alphas", config.alphas},
                     {"mode", config.mode == detector::DetectionMode::pgd ? "pgd" : "f_known"},
                     {"window", config.window},
                     {"min_learning_window", config.min_learning_window},
                     {"stream_length", config.length()},
                     {"noise_level", config.noise_level},
                     {"coverage", config.coverage},
                     {"whiten", config.whitening()}};
  j["trials"] = rep.trials;
  j["failures"] = rep.failures;
  Json metrics = Json::array();
  for (const auto& m : rep.per_alpha) {
    metrics.push_back({{"alpha", m.alpha},
                       {"log_threshold", m.log_threshold},
                       {"avg_delay", nullable(m.avg_delay)},
                       {"false_alarm_rate", m.false_alarm_rate},
                       {"localization_accuracy", nullable(m.localization_accuracy)},
                       {"detections", m.detections},
                       {"false_alarms", m.false_alarms},
                       {"misses", m.misses},
                       {"localization_trials", m.localization_trials},
                       {"localization_correct", m.localization_correct}});
  }
  j["metrics"] = metrics;
  Json records = Json::array();
  for (const auto& r : rep.records) {
    Json taus = Json::array();
    for (const auto& t : r.tau) taus.push_back(nullable(t));
    Json loc = Json::array();
    for (const auto& l : r.localized) loc.push_back(nullable(l));
    Json rec{{"index", r.index}, {"seed", r.seed}, {"lambda", r.lambda}, {"tau", taus}, {"localized", loc}};
    if (r.error) rec["error"] = *r.error;
    records.push_back(rec);
  }
  j["records"] = records;
  return j;
}

void write_report_csv(std::ostream& out, const harness::MetricsReport& rep) {
  out << "alpha,abs_log_alpha,log_threshold,avg_delay,false_alarm_rate,localization_accuracy,detections,false_alarms,misses\n";
  out << std::setprecision(10);
  for (const auto& m : rep.per_alpha) {
    out << m.alpha << ',' << std::abs(std::log(m.alpha)) << ',' << m.log_threshold << ',';
    if (m.avg_delay) out << *m.avg_delay;
    out << ',' << m.false_alarm_rate << ',';
    if (m.localization_accuracy) out << *m.localization_accuracy;
    out << ',' << m.detections << ',' << m.false_alarms << ',' << m.misses << '\n';
  }
}

}  // namespace outage::io
