#pragma once

// Grid topology and the linear increment model dV = Z dI.
//
// Bus indices are 0-based in this API. File formats and CLI use 1-based bus
// numbers (see io.hpp).

#include "outage/gaussian.hpp"
#include "outage/types.hpp"

#include <complex>
#include <cstdint>
#include <vector>

namespace outage::grid {

using Complex = std::complex<double>;

struct Branch {
  int from = 0;
  int to = 0;
  Complex admittance{1.0, 0.0};  ///< series admittance, per-unit
};

/// Buses, branches, per-bus shunt admittance and slack bus.
///
/// Construction checks bus ranges, self-loops and zero admittances.
/// Connectivity is not part of construction because outages can island the
/// grid; query it with is_connected().
class GridTopology {
 public:
  GridTopology(int bus_count, int slack, std::vector<Branch> branches,
               std::vector<Complex> shunt = {});

  int bus_count() const { return bus_count_; }
  int slack() const { return slack_; }
  const std::vector<Branch>& branches() const { return branches_; }
  const std::vector<Complex>& shunt() const { return shunt_; }
  bool has_shunt() const;

  int component_count() const;
  bool is_connected() const { return component_count() == 1; }

  /// Non-slack buses in increasing order; row i of the reduced matrices is bus non_slack_buses()[i].
  std::vector<int> non_slack_buses() const;

  /// Indices of branches joining buses a and b (either orientation).
  std::vector<int> find_branches(int a, int b) const;

 private:
  int bus_count_;
  int slack_;
  std::vector<Branch> branches_;
  std::vector<Complex> shunt_;
};

/// |E| x M, +1 at `from`, -1 at `to`.
Matrix build_incidence(const GridTopology& top);

/// A^T Y_E A + Y_s.
ComplexMatrix build_admittance(const GridTopology& top);

inline constexpr double kMaxConditionNumber = 1e12;

/// Removes the slack row and column. Throws SingularGridError when the result
/// has condition number above kMaxConditionNumber.
ComplexMatrix eliminate_slack(const ComplexMatrix& y, int slack);

double condition_number(const ComplexMatrix& m);

/// Z = Y^-1 of the slack-reduced admittance.
ComplexMatrix impedance(const ComplexMatrix& y_reduced);

struct OutageResult {
  GridTopology topology;
  bool connected;
};

/// Removes the listed branches (indices into top.branches()).
OutageResult apply_outage(const GridTopology& top, const std::vector<int>& out_branches);

/// Which real channel of the complex impedance drives voltage magnitudes.
enum class SensitivityChannel { real_part, magnitude };

/// Real (M-1) x (M-1) sensitivity of non-slack voltage increments to injections.
Matrix sensitivity_matrix(const GridTopology& top,
                          SensitivityChannel channel = SensitivityChannel::real_part);

/// Per non-slack bus current-injection increment statistics.
struct InjectionStats {
  Vector mean;
  Vector stddev;

  Index size() const { return mean.size(); }
  void validate() const;
};

/// mu_k ~ U(-0.01, 0.01), sigma_k ~ U(0.005, 0.02).
InjectionStats random_injection_stats(Index n, std::uint64_t seed);

/// mean = Z mu, cov = Z diag(sigma^2) Z^T.
IncrementDistribution derive_increment_distribution(const Matrix& z, const InjectionStats& inj);

enum class GridKind { radial, loopy };

struct GridGenOptions {
  double admittance_min = 5.0;
  double admittance_max = 15.0;
  /// Shunt conductance per bus drawn from [shunt_min, shunt_max]; zero disables shunts.
  double shunt_min = 0.0;
  double shunt_max = 0.0;
};

/// Random spanning tree rooted at bus 0 (the slack); the loopy variant adds
/// ceil(M/8) chords. Purely resistive branches.
GridTopology generate_test_grid(GridKind kind, int size, std::uint64_t seed,
                                const GridGenOptions& opts = {});

}  // namespace outage::grid
