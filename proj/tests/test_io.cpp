#include "outage/io.hpp"

#include <doctest.h>

#include <sstream>
#include <string>

using namespace outage;
using namespace outage::io;

namespace {

std::string error_of(const auto& fn) {
  try {
    fn();
  } catch (const FormatError& e) {
    return e.what();
  }
  return "";
}

bool mentions(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

Json scalar_config() {
  return Json::parse(R"({
    "scenario": {"type": "gaussian", "pre": {"mean": [0], "cov": [[0.5]]}, "post": {"mean": [1], "cov": [[0.2]]}},
    "trials": 3, "alphas": [0.1, 0.01], "mode": "f_known"
  })");
}

}  // namespace

TEST_CASE("topology round trip") {
  grid::GridGenOptions opts;
  opts.shunt_max = 0.2;
  const auto top = grid::generate_test_grid(grid::GridKind::loopy, 9, 3, opts);
  const auto back = topology_from_json(topology_to_json(top));
  CHECK(back.bus_count() == top.bus_count());
  CHECK(back.slack() == top.slack());
  REQUIRE(back.branches().size() == top.branches().size());
  for (std::size_t l = 0; l < top.branches().size(); ++l) {
    CHECK(back.branches()[l].from == top.branches()[l].from);
    CHECK(back.branches()[l].to == top.branches()[l].to);
    CHECK(back.branches()[l].admittance == top.branches()[l].admittance);
  }
  CHECK(back.shunt() == top.shunt());
  CHECK(topology_to_json(top)["branches"][0]["i"].get<int>() == top.branches()[0].from + 1);
}

TEST_CASE("topology errors name the field") {
  auto bad = Json::parse(R"({"buses": 3, "slack": 1, "branches": [{"i": 1, "k": 4, "g": 1}]})");
  CHECK(mentions(error_of([&] { topology_from_json(bad); }), "topology.branches[0].k"));
  bad = Json::parse(R"({"buses": 3, "slack": 1, "branches": [{"i": 1, "k": 2}]})");
  CHECK(mentions(error_of([&] { topology_from_json(bad); }), "missing field 'g'"));
  bad = Json::parse(R"({"buses": 3, "slack": 1, "branches": [], "colour": 2})");
  CHECK(mentions(error_of([&] { topology_from_json(bad); }), "unknown field 'colour'"));
  bad = Json::parse(R"({"buses": 3, "slack": 1, "branches": [{"i": 2, "k": 2, "g": 1}]})");
  CHECK(mentions(error_of([&] { topology_from_json(bad); }), "self-loop"));
}

TEST_CASE("model round trip") {
  Matrix cov(2, 2);
  cov << 0.5, 0.1, 0.1, 0.3;
  const IncrementDistribution pre(Vector::Zero(2), cov);
  const IncrementDistribution post(Vector::Ones(2), cov * 2.0);
  const auto back = model_from_json(Json::parse(model_to_json(pre, post, {2, 5}).dump()));
  CHECK(back.pre.mean() == pre.mean());
  CHECK(back.pre.cov() == pre.cov());
  REQUIRE(back.post);
  CHECK(back.post->cov() == post.cov());
  CHECK(back.buses == std::vector<int>{2, 5});

  auto bad = model_to_json(pre, std::nullopt);
  bad["pre"]["cov"][1] = Json::array({0.1});
  CHECK(mentions(error_of([&] { model_from_json(bad); }), "model.pre.cov[1]"));
  bad = model_to_json(pre, std::nullopt);
  bad["pre"]["cov"] = Json::parse("[[1, 2], [2, 1]]");
  CHECK(mentions(error_of([&] { model_from_json(bad); }), "model.pre.cov"));
}

TEST_CASE("stream CSV round trip") {
  StreamData s{{2, 3, 7}, Matrix(3, 4)};
  s.samples << 0.1, -0.2, 1e-9, 3, 4, 5, 6, 7, 1.0 / 3.0, 2, 2, 2;
  std::stringstream buf;
  write_stream_csv(buf, s);
  const auto back = read_stream_csv(buf);
  CHECK(back.buses == s.buses);
  CHECK(back.samples == s.samples);
}

TEST_CASE("stream CSV errors name the row and column") {
  std::stringstream a("1,2\n0.1,0.2\n0.3\n");
  CHECK(mentions(error_of([&] { read_stream_csv(a); }), "row 3"));
  std::stringstream b("1,2\n0.1,abc\n");
  CHECK(mentions(error_of([&] { read_stream_csv(b); }), "row 2, column 2"));
  std::stringstream c("bus1,2\n");
  CHECK(mentions(error_of([&] { read_stream_csv(c); }), "header"));
  std::stringstream d("");
  CHECK(mentions(error_of([&] { read_stream_csv(d); }), "missing header"));
}

TEST_CASE("outcome JSON") {
  detector::DetectionOutcome out;
  out.tau = 4;
  out.trace = {-3.0, -1.0, 2.0, 9.0};
  out.log_threshold = 7.8;
  out.mu = Vector::Ones(1);
  out.sigma = Matrix::Identity(1, 1);
  const auto j = outcome_to_json(out);
  CHECK(j["tau"] == 4);
  CHECK(j["trace"].size() == 4);
  CHECK(j["learned"]["sigma"][0][0] == 1.0);
  out.tau.reset();
  out.mu.reset();
  CHECK(outcome_to_json(out)["tau"].is_null());
  CHECK(outcome_to_json(out)["learned"].is_null());

  const auto c = candidates_to_json({{0, 2, 0.8, 0.01}}, {4, 5, 7});
  CHECK(c["candidates"][0]["i"] == 4);
  CHECK(c["candidates"][0]["k"] == 7);
}

TEST_CASE("experiment config parsing") {
  const auto c = experiment_from_json(scalar_config());
  CHECK(c.kind == harness::ScenarioKind::gaussian);
  CHECK(c.trials == 3);
  CHECK(c.alphas == std::vector<double>{0.1, 0.01});
  CHECK(c.mode == detector::DetectionMode::f_known);

  auto j = scalar_config();
  j["learner"] = Json::parse(R"({"max_iters": 50, "step": 0.5, "mean_map": "euclidean", "max_dual_step": null})");
  const auto l = experiment_from_json(j).learner;
  CHECK(l.max_iters == 50);
  CHECK(*l.step == 0.5);
  CHECK(l.mean_map == learner::MeanMap::euclidean);
  CHECK_FALSE(l.max_dual_step);

  auto g = Json::parse(R"({"scenario": {"type": "grid", "generate": {"kind": "loopy", "size": 8, "seed": 1},
                           "outage": [[4, 7]]}, "trials": 2})");
  const auto gc = experiment_from_json(g);
  CHECK(gc.outage == std::vector<std::pair<int, int>>{{3, 6}});
  CHECK(gc.whitening());
}

TEST_CASE("experiment config errors name the field") {
  auto j = scalar_config();
  j["tirals"] = 3;
  CHECK(mentions(error_of([&] { experiment_from_json(j); }), "unknown field 'tirals'"));
  j = scalar_config();
  j["trials"] = 0;
  CHECK(mentions(error_of([&] { experiment_from_json(j); }), "trials"));
  j = scalar_config();
  j["mode"] = "fast";
  CHECK(mentions(error_of([&] { experiment_from_json(j); }), "config.mode"));
  j = scalar_config();
  j["learner"] = Json::parse(R"({"output": "median"})");
  CHECK(mentions(error_of([&] { experiment_from_json(j); }), "learner.output"));
  j = scalar_config();
  j["scenario"]["type"] = "ac";
  CHECK(mentions(error_of([&] { experiment_from_json(j); }), "scenario.type"));
}

TEST_CASE("report JSON carries the schema and per-alpha metrics") {
  const auto c = experiment_from_json(scalar_config());
  const auto rep = harness::run_monte_carlo(c);
  const auto j = report_to_json(rep, c);
  CHECK(j["schema"] == harness::kReportSchema);
  CHECK(j["trials"] == 3);
  CHECK(j["metrics"].size() == 2);
  CHECK(j["records"].size() == 3);
  std::ostringstream csv;
  write_report_csv(csv, rep);
  std::istringstream lines(csv.str());
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) ++count;
  CHECK(count == 3);
}
