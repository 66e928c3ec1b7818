#include "testing.hpp"

#include <map>
#include <random>

#include "fixtures.hpp"
#include "mmhand/curriculum.hpp"

using namespace mmhand;

namespace {

std::vector<Pose3D> toy_poses(size_t n, uint64_t base) {
  std::vector<Pose3D> v;
  for (size_t i = 0; i < n; ++i) v.push_back(sample_toy_pose(base + i));
  return v;
}

// plain scan written without the library's helpers
size_t brute_nearest(const PoseIdentity& q, const std::vector<PoseIdentity>& pool) {
  size_t best = 0;
  for (size_t i = 1; i < pool.size(); ++i)
    if (identity_distance(pool[i], q) < identity_distance(pool[best], q)) best = i;
  return best;
}

}  // namespace

TEST_CASE("identical poses are ordered lexicographically") {
  const std::vector<Pose3D> same(6, sample_toy_pose(1));
  const auto s = build_pairs(same, 40, 2);
  REQUIRE(s.pairs.size() == 40);
  for (size_t i = 0; i < s.pairs.size(); ++i) {
    CHECK(s.pairs[i].distance == 0.0);
    CHECK(s.pairs[i].source != s.pairs[i].target);
    if (i > 0)
      CHECK(std::make_pair(s.pairs[i - 1].source, s.pairs[i - 1].target) <=
            std::make_pair(s.pairs[i].source, s.pairs[i].target));
  }
}

TEST_CASE("schedule is sorted, recomputable and deterministic") {
  const auto poses = toy_poses(500, 10);
  const auto s = build_pairs(poses, 500, 7);
  CHECK(s.seed == 7);
  for (size_t i = 0; i < s.pairs.size(); ++i) {
    const auto& p = s.pairs[i];
    REQUIRE(p.source < poses.size());
    REQUIRE(p.target < poses.size());
    CHECK(p.source != p.target);
    CHECK(p.distance == pose_distance(poses[p.source], poses[p.target]));
    CHECK((p.distance >= 0.0 && p.distance <= 0.5));
    if (i > 0) CHECK(s.pairs[i - 1].distance <= p.distance);
  }
  CHECK((build_pairs(poses, 500, 7).pairs == s.pairs));
  CHECK_FALSE((build_pairs(poses, 500, 8).pairs == s.pairs));
  CHECK_THROWS_AS(build_pairs(toy_poses(1, 0), 3, 0), Error);
}

TEST_CASE("pairs cover sources and targets roughly uniformly") {
  const auto ids = identities(toy_poses(5, 20));
  const auto s = build_pairs(ids, 20000, 3);
  std::map<std::pair<size_t, size_t>, int> count;
  for (const auto& p : s.pairs) ++count[{p.source, p.target}];
  CHECK(count.size() == 20);
  for (const auto& [k, c] : count) CHECK(std::abs(c - 1000) < 150);
}

TEST_CASE("epoch batches partition the schedule in order") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    const auto s = build_pairs(toy_poses(30, 100 + t), 50 + t, t);
    const size_t bs = 1 + rng() % 9;
    const auto batches = epoch_iter(s, bs);
    std::vector<TrainingPair> cat;
    for (size_t k = 0; k < batches.size(); ++k) {
      CHECK(!batches[k].empty());
      if (k + 1 < batches.size()) CHECK(batches[k].size() == bs);
      cat.insert(cat.end(), batches[k].begin(), batches[k].end());
      if (k + 1 < batches.size()) {
        double hi = 0, lo = 1;
        for (const auto& p : batches[k]) hi = std::max(hi, p.distance);
        for (const auto& p : batches[k + 1]) lo = std::min(lo, p.distance);
        CHECK(hi <= lo);
      }
    }
    CHECK((cat == s.pairs));
    const auto ones = epoch_iter(s, 1);
    REQUIRE(ones.size() == s.pairs.size());
    for (size_t i = 0; i < ones.size(); ++i) CHECK((ones[i].front() == s.pairs[i]));
  }
  CHECK_THROWS_AS(epoch_iter(CurriculumSchedule{}, 0), Error);
}

TEST_CASE("nearest source finds the target itself and breaks ties low") {
  auto pool = toy_poses(50, 300);
  const auto m = nearest_source(pool[17], pool);
  CHECK(m.distance == 0.0);
  CHECK(m.index == 17);
  // a scaled copy has the same identity direction, so the earlier index wins
  pool[40] = pool[23].scaled(1.7);
  const auto t = nearest_source(pool[23].scaled(0.5), pool);
  CHECK(t.index == 23);
  CHECK(t.distance < 1e-6);
  CHECK_THROWS_AS(nearest_source(pool[0], std::vector<Pose3D>{}), Error);
}

TEST_CASE("linear scan and vantage-point tree both match brute force") {
  std::mt19937_64 rng(5);
  for (size_t n : {1u, 2u, 7u, 100u, 1000u}) {
    auto pool_poses = toy_poses(n, 1000 * n);
    if (n >= 7) pool_poses[n - 1] = pool_poses[n / 2];  // an exact duplicate
    const auto pool = identities(pool_poses);
    const VpTree tree(pool, 9);
    CHECK(tree.size() == n);
    for (int q = 0; q < 200; ++q) {
      const PoseIdentity id = q % 5 == 0 ? pool[rng() % n] : pose_identity(fx::random_pose(rng));
      const size_t want = brute_nearest(id, pool);
      const auto scan = nearest_source(id, pool);
      const auto vp = tree.nearest(id);
      CHECK(scan.index == want);
      CHECK(vp.index == want);
      CHECK(vp.distance == scan.distance);
    }
  }
}

TEST_CASE("parabola fit and rank correlation") {
  std::vector<double> x, y;
  for (int i = 0; i < 25; ++i) {
    x.push_back(0.02 * i);
    y.push_back(3.0 * x.back() * x.back() - 1.25 * x.back() + 0.5);
  }
  const Parabola p = fit_parabola(x, y);
  CHECK(std::abs(p.a - 3.0) < 1e-9);
  CHECK(std::abs(p.b + 1.25) < 1e-9);
  CHECK(std::abs(p.c - 0.5) < 1e-9);
  CHECK(std::abs(p(0.3) - (0.27 - 0.375 + 0.5)) < 1e-9);
  CHECK_THROWS_AS(fit_parabola({0.1, 0.2}, {1.0, 2.0}), Error);
  CHECK_THROWS_AS(fit_parabola({0.1, 0.1, 0.2, 0.2}, {1, 2, 3, 4}), Error);

  CHECK(spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(spearman({1, 2, 3, 4}, {1, 8, 27, 64}) == doctest::Approx(1.0));
  CHECK(spearman({1, 1, 1}, {1, 2, 3}) == 0.0);
  // ties get average ranks: ranks (1.5, 1.5, 3) vs (1, 2, 3)
  CHECK(spearman({5, 5, 9}, {1, 2, 3}) == doctest::Approx(0.8660254037844386));
}

TEST_CASE("an identity-copy generator gives error growing with distance") {
  const auto poses = toy_poses(300, 500);
  // copying the source image means the estimate is the source pose itself
  auto epe = [&](size_t s, size_t t) {
    double e = 0;
    for (int i = 0; i < kNumJoints; ++i) e += (poses[s].joint(i) - poses[t].joint(i)).norm();
    return e / kNumJoints;
  };
  for (uint64_t seed = 0; seed < 4; ++seed) {
    const auto r = epe_distance_correlation(poses, 200, seed, epe);
    CHECK(r.rows.size() == 200);
    CHECK(r.spearman > 0.0);
    for (const auto& row : r.rows) CHECK(row.epe == epe(row.source, row.target));
    CHECK(epe_distance_correlation(poses, 200, seed, epe).spearman == r.spearman);
  }
  CHECK_THROWS_AS(epe_distance_correlation(poses, 2, 6, epe), Error);
}
