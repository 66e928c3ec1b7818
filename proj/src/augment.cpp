#include "mmhand/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mmhand/error.hpp"

namespace mmhand {

void SplitSpec::validate() const {
  require(fraction > 0.0 && fraction <= 1.0, ErrorKind::Validation, "split: fraction must be in (0, 1]");
}

Split split_dataset(size_t n, const SplitSpec& spec) {
  spec.validate();
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), size_t{0});
  std::mt19937_64 rng(spec.seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto keep = static_cast<size_t>(std::llround(spec.fraction * static_cast<double>(n)));
  require(keep > 0, ErrorKind::Validation, "split: fraction leaves no retained samples");
  Split s;
  s.retained.assign(idx.begin(), idx.begin() + keep);
  s.replaced.assign(idx.begin() + keep, idx.end());
  std::sort(s.retained.begin(), s.retained.end());
  std::sort(s.replaced.begin(), s.replaced.end());
  return s;
}

size_t AugmentedSet::retained_count() const {
  return static_cast<size_t>(std::count_if(records.begin(), records.end(), [](auto& r) { return !r.synthesized; }));
}

size_t AugmentedSet::synthesized_count() const { return records.size() - retained_count(); }

AugmentedSet build_augmented_set(const std::vector<Pose3D>& poses, const SplitSpec& spec,
                                 const std::function<Image(size_t, size_t)>& generate,
                                 const PoseProjector& projector) {
  const Split split = split_dataset(poses.size(), spec);
  const auto ids = identities(poses, projector);
  std::vector<PoseIdentity> pool;
  for (size_t i : split.retained) pool.push_back(ids[i]);

  AugmentedSet set;
  set.records.resize(poses.size());
  for (size_t i : split.retained) set.records[i] = {i, false, i, 0.0, {}};
  for (size_t t : split.replaced) {
    // pool is in ascending original order, so the smallest-index tie rule carries over
    const NearestMatch m = nearest_source(ids[t], pool);
    const size_t src = split.retained[m.index];
    set.records[t] = {t, true, src, m.distance, generate(src, t)};
  }
  return set;
}

}  // namespace mmhand
