#include "outage/grid.hpp"

#include "outage/matfun.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <string>

namespace outage::grid {

namespace {

class UnionFind {
 public:
  explicit UnionFind(int n) : parent_(static_cast<std::size_t>(n)) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[b] = a;
    return true;
  }

 private:
  std::vector<int> parent_;
};

}  // namespace

GridTopology::GridTopology(int bus_count, int slack, std::vector<Branch> branches,
                           std::vector<Complex> shunt)
    : bus_count_(bus_count), slack_(slack), branches_(std::move(branches)), shunt_(std::move(shunt)) {
  if (bus_count_ < 2) throw std::invalid_argument("grid needs at least 2 buses");
  if (slack_ < 0 || slack_ >= bus_count_) {
    throw std::invalid_argument("slack bus " + std::to_string(slack_) + " out of range");
  }
  if (shunt_.empty()) shunt_.assign(static_cast<std::size_t>(bus_count_), Complex{});
  if (static_cast<int>(shunt_.size()) != bus_count_) {
    throw std::invalid_argument("shunt vector must have one entry per bus");
  }
  for (std::size_t l = 0; l < branches_.size(); ++l) {
    const Branch& b = branches_[l];
    const std::string tag = "branch " + std::to_string(l);
    if (b.from < 0 || b.from >= bus_count_ || b.to < 0 || b.to >= bus_count_) {
      throw std::invalid_argument(tag + " references an unknown bus");
    }
    if (b.from == b.to) throw std::invalid_argument(tag + " is a self-loop");
    if (std::abs(b.admittance) == 0.0) throw std::invalid_argument(tag + " has zero admittance");
  }
}

bool GridTopology::has_shunt() const {
  return std::any_of(shunt_.begin(), shunt_.end(), [](Complex s) { return std::abs(s) > 0.0; });
}

int GridTopology::component_count() const {
  UnionFind uf(bus_count_);
  int components = bus_count_;
  for (const Branch& b : branches_) {
    if (uf.unite(b.from, b.to)) --components;
  }
  return components;
}

std::vector<int> GridTopology::non_slack_buses() const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(bus_count_ - 1));
  for (int b = 0; b < bus_count_; ++b) {
    if (b != slack_) out.push_back(b);
  }
  return out;
}

std::vector<int> GridTopology::find_branches(int a, int b) const {
  std::vector<int> out;
  for (std::size_t l = 0; l < branches_.size(); ++l) {
    const Branch& br = branches_[l];
    if ((br.from == a && br.to == b) || (br.from == b && br.to == a)) out.push_back(static_cast<int>(l));
  }
  return out;
}

Matrix build_incidence(const GridTopology& top) {
  const auto& branches = top.branches();
  Matrix a = Matrix::Zero(static_cast<Index>(branches.size()), top.bus_count());
  for (std::size_t l = 0; l < branches.size(); ++l) {
    a(static_cast<Index>(l), branches[l].from) = 1.0;
    a(static_cast<Index>(l), branches[l].to) = -1.0;
  }
  return a;
}

ComplexMatrix build_admittance(const GridTopology& top) {
  const Matrix a = build_incidence(top);
  const auto& branches = top.branches();
  Eigen::VectorXcd ye(static_cast<Index>(branches.size()));
  for (std::size_t l = 0; l < branches.size(); ++l) ye(static_cast<Index>(l)) = branches[l].admittance;
  const ComplexMatrix ac = a.cast<Complex>();
  ComplexMatrix y = ac.transpose() * ye.asDiagonal() * ac;
  for (int b = 0; b < top.bus_count(); ++b) y(b, b) += top.shunt()[static_cast<std::size_t>(b)];
  return y;
}

double condition_number(const ComplexMatrix& m) {
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

ComplexMatrix eliminate_slack(const ComplexMatrix& y, int slack) {
  const Index n = y.rows();
  if (y.cols() != n || n < 2) throw DimensionError("eliminate_slack: admittance must be square, M >= 2");
  if (slack < 0 || slack >= n) throw std::out_of_range("eliminate_slack: slack out of range");
  std::vector<Index> keep;
  for (Index i = 0; i < n; ++i) {
    if (i != slack) keep.push_back(i);
  }
  ComplexMatrix reduced = y(keep, keep);
  const double cond = condition_number(reduced);
  if (!(cond <= kMaxConditionNumber)) {
    throw SingularGridError("reduced admittance is singular (condition number " +
                            std::to_string(cond) + "); grid is islanded or degenerate");
  }
  return reduced;
}

ComplexMatrix impedance(const ComplexMatrix& y_reduced) {
  if (y_reduced.rows() != y_reduced.cols()) throw DimensionError("impedance: matrix must be square");
  const double cond = condition_number(y_reduced);
  if (!(cond <= kMaxConditionNumber)) {
    throw SingularGridError("impedance: admittance is singular");
  }
  return y_reduced.fullPivLu().inverse();
}

OutageResult apply_outage(const GridTopology& top, const std::vector<int>& out_branches) {
  const auto& branches = top.branches();
  std::set<int> removed;
  for (int id : out_branches) {
    if (id < 0 || id >= static_cast<int>(branches.size())) {
      throw std::out_of_range("apply_outage: unknown branch id " + std::to_string(id));
    }
    removed.insert(id);
  }
  std::vector<Branch> kept;
  for (std::size_t l = 0; l < branches.size(); ++l) {
    if (!removed.count(static_cast<int>(l))) kept.push_back(branches[l]);
  }
  GridTopology after(top.bus_count(), top.slack(), std::move(kept), top.shunt());
  const bool connected = after.is_connected();
  return {std::move(after), connected};
}

Matrix sensitivity_matrix(const GridTopology& top, SensitivityChannel channel) {
  const ComplexMatrix z = impedance(eliminate_slack(build_admittance(top), top.slack()));
  Matrix out = channel == SensitivityChannel::real_part ? Matrix(z.real()) : Matrix(z.cwiseAbs());
  return out;
}

void InjectionStats::validate() const {
  if (mean.size() != stddev.size()) throw DimensionError("injection mean/std size mismatch");
  if (!(stddev.array() > 0.0).all()) throw std::invalid_argument("injection std must be > 0");
}

InjectionStats random_injection_stats(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mu(-0.01, 0.01);
  std::uniform_real_distribution<double> sd(0.005, 0.02);
  InjectionStats s{Vector(n), Vector(n)};
  for (Index i = 0; i < n; ++i) {
    s.mean(i) = mu(rng);
    s.stddev(i) = sd(rng);
  }
  return s;
}

IncrementDistribution derive_increment_distribution(const Matrix& z, const InjectionStats& inj) {
  inj.validate();
  if (z.cols() != inj.size()) {
    throw DimensionError("derive_increment_distribution: Z has " + std::to_string(z.cols()) +
                         " columns but " + std::to_string(inj.size()) + " injections given");
  }
  const Vector var = inj.stddev.array().square();
  return IncrementDistribution(z * inj.mean, matfun::symmetrize(z * var.asDiagonal() * z.transpose()));
}

GridTopology generate_test_grid(GridKind kind, int size, std::uint64_t seed, const GridGenOptions& opts) {
  if (size < 3) throw std::invalid_argument("generate_test_grid: size must be >= 3");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> adm(opts.admittance_min, opts.admittance_max);

  // Random recursive tree: each bus after the slack joins a uniformly chosen earlier bus.
  std::vector<int> order(static_cast<std::size_t>(size - 1));
  std::iota(order.begin(), order.end(), 1);
  std::shuffle(order.begin(), order.end(), rng);
  order.insert(order.begin(), 0);

  std::vector<Branch> branches;
  std::set<std::pair<int, int>> edges;
  for (std::size_t pos = 1; pos < order.size(); ++pos) {
    std::uniform_int_distribution<std::size_t> pick(0, pos - 1);
    const int parent = order[pick(rng)];
    const int child = order[pos];
    branches.push_back({std::min(parent, child), std::max(parent, child), Complex{adm(rng), 0.0}});
    edges.insert({std::min(parent, child), std::max(parent, child)});
  }

  if (kind == GridKind::loopy) {
    const int chords = (size + 7) / 8;
    const long max_edges = static_cast<long>(size) * (size - 1) / 2;
    std::uniform_int_distribution<int> bus(0, size - 1);
    for (int c = 0; c < chords && static_cast<long>(edges.size()) < max_edges;) {
      int a = bus(rng);
      int b = bus(rng);
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      if (edges.count({a, b})) continue;
      edges.insert({a, b});
      branches.push_back({a, b, Complex{adm(rng), 0.0}});
      ++c;
    }
  }

  std::vector<Complex> shunt(static_cast<std::size_t>(size), Complex{});
  if (opts.shunt_max > 0.0) {
    std::uniform_real_distribution<double> sh(opts.shunt_min, opts.shunt_max);
    for (auto& s : shunt) s = Complex{sh(rng), 0.0};
  }
  return GridTopology(size, 0, std::move(branches), std::move(shunt));
}

}  // namespace outage::grid
