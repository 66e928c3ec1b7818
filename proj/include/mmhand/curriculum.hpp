#pragma once

// Easy-to-hard pair scheduling by pose distance, nearest-pose source lookup,
// and the error-vs-distance study.

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "mmhand/pose_core.hpp"

namespace mmhand {

struct TrainingPair {
  size_t source = 0;
  size_t target = 0;
  double distance = 0.0;
  friend bool operator==(const TrainingPair&, const TrainingPair&) = default;
};

struct CurriculumSchedule {
  std::vector<TrainingPair> pairs;  // ascending distance, ties by (source, target)
  uint64_t seed = 0;
};

/// Identity vectors of every pose, computed once.
std::vector<PoseIdentity> identities(const std::vector<Pose3D>& poses,
                                     const PoseProjector& projector = PoseProjector::orthographic());

/// `num_pairs` uniform (source != target) pairs, annotated and sorted.
CurriculumSchedule build_pairs(const std::vector<Pose3D>& poses, size_t num_pairs, uint64_t seed,
                               const PoseProjector& projector = PoseProjector::orthographic());
CurriculumSchedule build_pairs(const std::vector<PoseIdentity>& ids, size_t num_pairs, uint64_t seed);

/// Consecutive slices of the schedule; the last one may be short.
std::vector<std::vector<TrainingPair>> epoch_iter(const CurriculumSchedule& schedule, size_t batch_size);

struct NearestMatch {
  size_t index = 0;
  double distance = 0.0;
};

/// Exhaustive argmin of the pose distance; ties go to the smallest index.
NearestMatch nearest_source(const Pose3D& target, const std::vector<Pose3D>& pool,
                            const PoseProjector& projector = PoseProjector::orthographic());
NearestMatch nearest_source(const PoseIdentity& target, const std::vector<PoseIdentity>& pool);

/// Vantage-point tree over identity vectors; answers exactly what the linear scan answers.
class VpTree {
 public:
  explicit VpTree(std::vector<PoseIdentity> items, uint64_t seed = 0);
  NearestMatch nearest(const PoseIdentity& query) const;
  size_t size() const { return items_.size(); }

 private:
  struct Node {
    size_t item = 0;
    double radius = 0.0;
    int inside = -1, outside = -1;
  };
  int build(std::vector<size_t>& idx, size_t lo, size_t hi, uint64_t& state);
  void search(int node, const PoseIdentity& q, NearestMatch& best, bool& found) const;

  std::vector<PoseIdentity> items_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

struct Parabola {
  double a = 0, b = 0, c = 0;  // a x^2 + b x + c
  double operator()(double x) const { return (a * x + b) * x + c; }
};

/// Least-squares fit; needs at least 3 points with 3 distinct abscissae.
Parabola fit_parabola(const std::vector<double>& x, const std::vector<double>& y);

/// Pearson correlation of average ranks; 0 when either side is constant.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

struct ScatterRow {
  size_t source = 0, target = 0;
  double distance = 0.0, epe = 0.0;
};

struct CorrelationReport {
  std::vector<ScatterRow> rows;
  Parabola fit;
  double spearman = 0.0;
};

/// Samples n_pairs random pairs, scores each with `epe(source, target)`, then fits and ranks.
CorrelationReport epe_distance_correlation(const std::vector<Pose3D>& poses, size_t n_pairs, uint64_t seed,
                                           const std::function<double(size_t, size_t)>& epe);

}  // namespace mmhand
