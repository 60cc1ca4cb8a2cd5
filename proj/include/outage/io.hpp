#pragma once

// File formats. Bus numbers in files are 1-based; the library is 0-based.
//
//   topology      {buses, slack, branches:[{i,k,g,b}], shunt:[{bus,g,b}]}
//   distribution  {mean:[...], cov:[[...]]}
//   model         {pre: distribution, post?: distribution}
//   stream CSV    header row of bus numbers, one row per sample
//   outcome       {tau, threshold, trace[], learned:{mu[], sigma[][]}}
//   bench config  see docs/formats.md

#include "outage/detector.hpp"
#include "outage/grid.hpp"
#include "outage/harness.hpp"
#include "outage/localizer.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace outage::io {

using Json = nlohmann::ordered_json;

/// Parses a JSON file; parse errors become FormatError with the path.
Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

Json topology_to_json(const grid::GridTopology& top);
grid::GridTopology topology_from_json(const Json& j);

Json distribution_to_json(const IncrementDistribution& d);
IncrementDistribution distribution_from_json(const Json& j, const std::string& where = "distribution");

struct ModelFile {
  IncrementDistribution pre;
  std::optional<IncrementDistribution> post;
  std::vector<int> buses;  ///< 1-based bus number per coordinate; empty if not given
};
Json model_to_json(const IncrementDistribution& pre, const std::optional<IncrementDistribution>& post,
                   const std::vector<int>& buses = {});
ModelFile model_from_json(const Json& j);

struct StreamData {
  std::vector<int> buses;  ///< header, 1-based
  Matrix samples;          ///< dim x N
};
StreamData read_stream_csv(std::istream& in);
StreamData read_stream_csv_file(const std::string& path);
void write_stream_csv(std::ostream& out, const StreamData& s);

/// mu/sigma are taken from the outcome unless overridden (e.g. unwhitened).
Json outcome_to_json(const detector::DetectionOutcome& out, const std::optional<Vector>& mu = std::nullopt,
                     const std::optional<Matrix>& sigma = std::nullopt);

/// `buses` maps coordinates to 1-based bus numbers; identity+1 when empty.
Json candidates_to_json(const std::vector<localizer::Candidate>& c, const std::vector<int>& buses = {});

/// `base_dir` resolves relative topology paths.
harness::ExperimentConfig experiment_from_json(const Json& j, const std::string& base_dir = ".");
Json report_to_json(const harness::MetricsReport& rep, const harness::ExperimentConfig& config);
/// One row per alpha.
void write_report_csv(std::ostream& out, const harness::MetricsReport& rep);

}  // namespace outage::io
