#include "mmhand/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <tuple>

#include <Eigen/Dense>

#include "mmhand/error.hpp"

namespace mmhand {

std::vector<PoseIdentity> identities(const std::vector<Pose3D>& poses, const PoseProjector& projector) {
  std::vector<PoseIdentity> ids;
  ids.reserve(poses.size());
  for (const auto& p : poses) ids.push_back(pose_identity(p, projector));
  return ids;
}

CurriculumSchedule build_pairs(const std::vector<PoseIdentity>& ids, size_t num_pairs, uint64_t seed) {
  require(ids.size() >= 2, ErrorKind::Validation, "build_pairs: need at least 2 samples");
  CurriculumSchedule s;
  s.seed = seed;
  s.pairs.reserve(num_pairs);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<size_t> pick(0, ids.size() - 1);
  std::uniform_int_distribution<size_t> other(0, ids.size() - 2);
  for (size_t k = 0; k < num_pairs; ++k) {
    const size_t src = pick(rng);
    size_t tgt = other(rng);
    if (tgt >= src) ++tgt;  // uniform over the n-1 other samples
    s.pairs.push_back({src, tgt, identity_distance(ids[src], ids[tgt])});
  }
  std::sort(s.pairs.begin(), s.pairs.end(), [](const TrainingPair& a, const TrainingPair& b) {
    return std::tie(a.distance, a.source, a.target) < std::tie(b.distance, b.source, b.target);
  });
  return s;
}

CurriculumSchedule build_pairs(const std::vector<Pose3D>& poses, size_t num_pairs, uint64_t seed,
                               const PoseProjector& projector) {
  require(poses.size() >= 2, ErrorKind::Validation, "build_pairs: need at least 2 samples");
  return build_pairs(identities(poses, projector), num_pairs, seed);
}

std::vector<std::vector<TrainingPair>> epoch_iter(const CurriculumSchedule& schedule, size_t batch_size) {
  require(batch_size > 0, ErrorKind::Parameter, "epoch_iter: batch size must be > 0");
  std::vector<std::vector<TrainingPair>> out;
  for (size_t i = 0; i < schedule.pairs.size(); i += batch_size) {
    const size_t e = std::min(schedule.pairs.size(), i + batch_size);
    out.emplace_back(schedule.pairs.begin() + i, schedule.pairs.begin() + e);
  }
  return out;
}

NearestMatch nearest_source(const PoseIdentity& target, const std::vector<PoseIdentity>& pool) {
  require(!pool.empty(), ErrorKind::Validation, "nearest_source: empty pool");
  NearestMatch best{0, identity_distance(pool[0], target)};
  for (size_t i = 1; i < pool.size(); ++i) {
    const double d = identity_distance(pool[i], target);
    if (d < best.distance) best = {i, d};
  }
  return best;
}

NearestMatch nearest_source(const Pose3D& target, const std::vector<Pose3D>& pool, const PoseProjector& projector) {
  require(!pool.empty(), ErrorKind::Validation, "nearest_source: empty pool");
  return nearest_source(pose_identity(target, projector), identities(pool, projector));
}

// VP tree ---------------------------------------------------------------------

namespace {
// rounding allowance on the triangle inequality when pruning
constexpr double kPruneSlack = 1e-9;
}  // namespace

VpTree::VpTree(std::vector<PoseIdentity> items, uint64_t seed) : items_(std::move(items)) {
  require(!items_.empty(), ErrorKind::Validation, "VpTree: empty pool");
  for (const auto& it : items_) require(it.norm() > 0.0, ErrorKind::DegeneratePose, "VpTree: zero identity vector");
  std::vector<size_t> idx(items_.size());
  std::iota(idx.begin(), idx.end(), size_t{0});
  nodes_.reserve(items_.size());
  uint64_t state = seed;
  root_ = build(idx, 0, idx.size(), state);
}

int VpTree::build(std::vector<size_t>& idx, size_t lo, size_t hi, uint64_t& state) {
  if (lo >= hi) return -1;
  state = state * 6364136223846793005ULL + 1442695040888963407ULL;
  std::swap(idx[lo], idx[lo + (state >> 33) % (hi - lo)]);
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({idx[lo], 0.0, -1, -1});
  if (hi - lo == 1) return id;
  const PoseIdentity& vp = items_[idx[lo]];
  const size_t mid = lo + 1 + (hi - lo - 1) / 2;
  std::nth_element(idx.begin() + lo + 1, idx.begin() + mid, idx.begin() + hi, [&](size_t a, size_t b) {
    return identity_distance(vp, items_[a]) < identity_distance(vp, items_[b]);
  });
  nodes_[id].radius = identity_distance(vp, items_[idx[mid]]);
  const int in = build(idx, lo + 1, mid, state);
  const int out = build(idx, mid, hi, state);
  nodes_[id].inside = in;
  nodes_[id].outside = out;
  return id;
}

void VpTree::search(int n, const PoseIdentity& q, NearestMatch& best, bool& found) const {
  if (n < 0) return;
  const Node& node = nodes_[n];
  const double d = identity_distance(items_[node.item], q);
  if (!found || d < best.distance || (d == best.distance && node.item < best.index)) {
    best = {node.item, d};
    found = true;
  }
  // inside holds points with distance to the vantage point <= radius, outside >= radius
  const int first = d < node.radius ? node.inside : node.outside;
  const int second = first == node.inside ? node.outside : node.inside;
  auto may_hold = [&](int child) {
    if (child < 0) return false;
    const double gap = child == node.inside ? d - node.radius : node.radius - d;
    return gap <= best.distance + kPruneSlack;
  };
  if (may_hold(first)) search(first, q, best, found);
  if (may_hold(second)) search(second, q, best, found);
}

NearestMatch VpTree::nearest(const PoseIdentity& q) const {
  NearestMatch best;
  bool found = false;
  search(root_, q, best, found);
  return best;
}

// Correlation study -------------------------------------------------------------

Parabola fit_parabola(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size(), ErrorKind::ShapeMismatch, "fit_parabola: x/y size mismatch");
  require(x.size() >= 3, ErrorKind::Validation, "fit_parabola: need at least 3 points");
  Eigen::MatrixXd A(x.size(), 3);
  Eigen::VectorXd b(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    A(i, 0) = x[i] * x[i];
    A(i, 1) = x[i];
    A(i, 2) = 1.0;
    b(i) = y[i];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  require(qr.rank() == 3, ErrorKind::Validation, "fit_parabola: fewer than 3 distinct abscissae");
  Eigen::Vector3d s = qr.solve(b);
  return {s(0), s(1), s(2)};
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (size_t i = 0; i < idx.size();) {
    size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorKind::Validation, "spearman: need two equal-length samples");
  const auto rx = average_ranks(x), ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

CorrelationReport epe_distance_correlation(const std::vector<Pose3D>& poses, size_t n_pairs, uint64_t seed,
                                           const std::function<double(size_t, size_t)>& epe) {
  require(n_pairs >= 3, ErrorKind::Validation, "epe_distance_correlation: need at least 3 pairs for a parabola");
  CurriculumSchedule s = build_pairs(poses, n_pairs, seed);
  CorrelationReport r;
  std::vector<double> xs, ys;
  for (const auto& p : s.pairs) {
    const double e = epe(p.source, p.target);
    r.rows.push_back({p.source, p.target, p.distance, e});
    xs.push_back(p.distance);
    ys.push_back(e);
  }
  r.fit = fit_parabola(xs, ys);
  r.spearman = spearman(xs, ys);
  return r;
}

}  // namespace mmhand
