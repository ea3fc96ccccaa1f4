#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "symrl/rng.hpp"
#include "symrl/symmetry.hpp"

using namespace symrl;

namespace {

// Three-limb manipulator layout: one invariant scalar, three nine-wide agent
// blocks, one planar point.
SymmetrySpec trifinger_style_spec() {
  SymmetrySpec spec;
  spec.group = GroupKind::Cyclic;
  spec.group_size = 3;
  spec.obs_layout.blocks.push_back(
      {"t_delay", 1, BlockKind::ScalarInvariant, {}});
  for (int k = 0; k < 3; ++k)
    spec.obs_layout.blocks.push_back(
        {"alpha" + std::to_string(k), 9, BlockKind::AgentIndexed, {}});
  Block p{"p_object", 2, BlockKind::CentralVariant, {}};
  p.rule.type = RuleType::PlanarRotate;
  p.rule.rotate_pairs = {{0, 1}};
  spec.obs_layout.blocks.push_back(p);
  spec.obs_layout.total_width = 1 + 27 + 2;
  for (int k = 0; k < 3; ++k)
    spec.act_layout.blocks.push_back(
        {"torque" + std::to_string(k), 3, BlockKind::AgentIndexed, {}});
  spec.act_layout.total_width = 9;
  spec.validate();
  return spec;
}

SymmetrySpec reflection_spec() {
  SymmetrySpec spec;
  spec.group = GroupKind::Reflection;
  spec.group_size = 2;
  Block pose{"pose", 2, BlockKind::CentralVariant, {}};
  pose.rule.type = RuleType::SignFlip;
  pose.rule.flip_mask = {false, true};
  spec.obs_layout.blocks.push_back(pose);
  spec.obs_layout.blocks.push_back({"left", 3, BlockKind::AgentIndexed, {}});
  spec.obs_layout.blocks.push_back({"right", 3, BlockKind::AgentIndexed, {}});
  spec.obs_layout.total_width = 8;
  Block force{"force", 1, BlockKind::CentralVariant, {}};
  force.rule.type = RuleType::SignFlip;
  force.rule.flip_mask = {true};
  spec.act_layout.blocks.push_back(force);
  spec.act_layout.blocks.push_back({"a_left", 2, BlockKind::AgentIndexed, {}});
  spec.act_layout.blocks.push_back({"a_right", 2, BlockKind::AgentIndexed, {}});
  spec.act_layout.total_width = 5;
  spec.validate();
  return spec;
}

SymmetrySpec cyclic_spec(int n, int agent_width, int central_pairs) {
  SymmetrySpec spec;
  spec.group = GroupKind::Cyclic;
  spec.group_size = n;
  for (int k = 0; k < n; ++k)
    spec.obs_layout.blocks.push_back(
        {"a" + std::to_string(k), agent_width, BlockKind::AgentIndexed, {}});
  if (central_pairs > 0) {
    Block c{"c", 2 * central_pairs, BlockKind::CentralVariant, {}};
    c.rule.type = RuleType::PlanarRotate;
    for (int p = 0; p < central_pairs; ++p)
      c.rule.rotate_pairs.emplace_back(2 * p, 2 * p + 1);
    spec.obs_layout.blocks.push_back(c);
  }
  spec.obs_layout.total_width = n * agent_width + 2 * central_pairs;
  for (int k = 0; k < n; ++k)
    spec.act_layout.blocks.push_back(
        {"u" + std::to_string(k), 2, BlockKind::AgentIndexed, {}});
  spec.act_layout.total_width = 2 * n;
  spec.validate();
  return spec;
}

}  // namespace

TEST_CASE("trifinger-style transform shifts agent blocks and rotates the point") {
  const auto set = build_transform_set(trifinger_style_spec());
  std::vector<double> o(30);
  o[0] = 42.0;  // t_delay
  for (int k = 0; k < 27; ++k) o[1 + k] = 100.0 * (k / 9) + k % 9;
  o[28] = 1.0;
  o[29] = 0.0;

  const auto t1 = set.obs[1].apply(o);
  CHECK(t1[0] == 42.0);
  // slot 0 <- alpha1, slot 1 <- alpha2, slot 2 <- alpha0
  for (int k = 0; k < 9; ++k) {
    CHECK(t1[1 + k] == 100.0 + k);
    CHECK(t1[10 + k] == 200.0 + k);
    CHECK(t1[19 + k] == 0.0 + k);
  }
  // R_1 rotates by -120 degrees
  CHECK(t1[28] == doctest::Approx(-0.5).epsilon(1e-9));
  CHECK(t1[29] == doctest::Approx(-0.8660254).epsilon(1e-6));
}

TEST_CASE("T_0 is the identity for any spec") {
  for (const auto& spec :
       {trifinger_style_spec(), reflection_spec(), cyclic_spec(4, 3, 1)}) {
    const auto set = build_transform_set(spec);
    Rng rng(7, 0);
    std::vector<double> v(spec.obs_layout.total_width);
    for (auto& x : v) x = rng.uniform(-5.0, 5.0);
    const auto out = set.obs[0].apply(v);
    for (size_t d = 0; d < v.size(); ++d) CHECK(out[d] == v[d]);
  }
}

TEST_CASE("reflection flips only masked components") {
  const auto set = build_transform_set(reflection_spec());
  std::vector<double> o(8, 0.0);
  o[0] = 0.3;
  o[1] = 0.7;
  const auto m = set.obs[1].apply(o);
  CHECK(m[0] == 0.3);
  CHECK(m[1] == -0.7);
}

TEST_CASE("scalar-invariant block is untouched by every transform") {
  const auto set = build_transform_set(trifinger_style_spec());
  std::vector<double> o(30, 0.0);
  o[0] = 7.0;
  for (int i = 0; i < 3; ++i) CHECK(set.obs[i].apply(o)[0] == 7.0);
}

TEST_CASE("apply rejects mismatched vector width") {
  const auto set = build_transform_set(reflection_spec());
  std::vector<double> bad(5, 0.0);
  CHECK_THROWS_AS((void)set.obs[1].apply(bad), DimensionError);
}

TEST_CASE("T_2 after T_1 of a cyclic(3) is the identity on random vectors") {
  const auto set = build_transform_set(cyclic_spec(3, 12, 2));
  Rng rng(11, 0);
  const int w = set.obs[0].width;
  REQUIRE(w == 40);
  std::vector<double> v(w), a(w), b(w);
  double worst = 0.0;
  for (int s = 0; s < 1000; ++s) {
    for (auto& x : v) x = rng.uniform(-3.0, 3.0);
    set.obs[1].apply(v, a);
    set.obs[2].apply(a, b);
    worst = std::max(worst, oracle::max_abs_diff(b, v));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("compose returns the group element and matches the matrix product") {
  SUBCASE("cyclic(3): T_1 * T_2 = T_0") {
    const auto set = build_transform_set(trifinger_style_spec());
    const auto& c = compose(set, set.obs[1], set.obs[2]);
    CHECK(c.agent_index == 0);
  }
  SUBCASE("reflection: T_1 * T_1 = T_0") {
    const auto set = build_transform_set(reflection_spec());
    CHECK(compose(set, set.obs[1], set.obs[1]).agent_index == 0);
  }
  SUBCASE("cyclic(4): T_1 * T_1 = T_2") {
    const auto set = build_transform_set(cyclic_spec(4, 3, 1));
    CHECK(compose(set, set.obs[1], set.obs[1]).agent_index == 2);
  }
  SUBCASE("matrix of the composition equals the matrix product") {
    const auto set = build_transform_set(trifinger_style_spec());
    const int w = set.obs[0].width;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const auto prod =
            oracle::matmul(dense_matrix(set.obs[j]), dense_matrix(set.obs[i]), w);
        const auto direct = dense_matrix(compose(set, set.obs[i], set.obs[j]));
        CHECK(oracle::max_abs_diff(prod, direct) <= 1e-12);
      }
  }
  SUBCASE("transforms from different sets are rejected") {
    const auto a = build_transform_set(trifinger_style_spec());
    const auto b = build_transform_set(trifinger_style_spec());
    CHECK_THROWS_AS((void)compose(a, a.obs[1], b.obs[1]), SpecMismatchError);
  }
}

TEST_CASE("inverse is the complementary group index") {
  SUBCASE("cyclic(3)") {
    const auto set = build_transform_set(trifinger_style_spec());
    CHECK(inverse(set, set.obs[1]).agent_index == 2);
  }
  SUBCASE("reflection is self-inverse") {
    const auto set = build_transform_set(reflection_spec());
    CHECK(inverse(set, set.obs[1]).agent_index == 1);
  }
  SUBCASE("cyclic(5)") {
    const auto set = build_transform_set(cyclic_spec(5, 2, 1));
    CHECK(inverse(set, set.obs[2]).agent_index == 3);
  }
  SUBCASE("apply then apply-inverse is the identity") {
    const auto set = build_transform_set(cyclic_spec(5, 2, 1));
    Rng rng(3, 0);
    std::vector<double> v(set.obs[0].width);
    for (auto& x : v) x = rng.uniform(-2.0, 2.0);
    for (int i = 0; i < 5; ++i) {
      const auto round = inverse(set, set.obs[i]).apply(set.obs[i].apply(v));
      CHECK(oracle::max_abs_diff(round, v) <= 1e-12);
    }
  }
}

TEST_CASE("group axioms hold to 1e-12 on random samples") {
  SUBCASE("cyclic(3) trifinger-style layout") {
    const auto set = build_transform_set(trifinger_style_spec());
    const auto rep = verify_group_axioms(set, 1000, 123);
    CHECK(rep.commutativity <= 1e-12);
    CHECK(rep.distributivity <= 1e-12);
    CHECK(rep.cyclicity <= 1e-12);
    CHECK(rep.orthogonality <= 1e-12);
  }
  SUBCASE("reflection layout") {
    const auto set = build_transform_set(reflection_spec());
    const auto rep = verify_group_axioms(set, 1000, 321);
    CHECK(rep.worst() <= 1e-12);
  }
  SUBCASE("corrupted element map reports a nonzero orthogonality residual") {
    auto set = build_transform_set(trifinger_style_spec());
    REQUIRE(!set.obs[1].rots.empty());
    Transform corrupted = set.obs[1];
    corrupted.rots[0].c *= 1.05;
    CHECK(orthogonality_residual(corrupted) > 1e-3);
    CHECK(orthogonality_residual(set.obs[1]) <= 1e-12);
  }
}

TEST_CASE("explicit group law residual over every index pair") {
  for (const auto& spec : {cyclic_spec(2, 3, 1), cyclic_spec(3, 3, 1),
                           cyclic_spec(4, 3, 1), reflection_spec()}) {
    const auto set = build_transform_set(spec);
    const int n = set.group_size();
    const int w = set.obs[0].width;
    Rng rng(99, 0);
    std::vector<double> v(w), a(w), b(w), c(w);
    double worst = 0.0;
    for (int s = 0; s < 50; ++s) {
      for (auto& x : v) x = rng.uniform(-4.0, 4.0);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          set.obs[i].apply(v, a);
          set.obs[j].apply(a, b);
          set.obs[(i + j) % n].apply(v, c);
          worst = std::max(worst, oracle::max_abs_diff(b, c));
        }
    }
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("distributivity over vector addition is exact linearity") {
  const auto set = build_transform_set(cyclic_spec(3, 4, 1));
  Rng rng(5, 0);
  const int w = set.obs[0].width;
  std::vector<double> v(w), u(w), sum(w), lhs(w), r1(w), r2(w);
  for (int s = 0; s < 200; ++s) {
    for (auto& x : v) x = rng.uniform(-2.0, 2.0);
    for (auto& x : u) x = rng.uniform(-2.0, 2.0);
    for (int d = 0; d < w; ++d) sum[d] = v[d] + u[d];
    for (int j = 0; j < 3; ++j) {
      set.obs[j].apply(sum, lhs);
      set.obs[j].apply(v, r1);
      set.obs[j].apply(u, r2);
      for (int d = 0; d < w; ++d)
        CHECK(lhs[d] == doctest::Approx(r1[d] + r2[d]).epsilon(1e-15));
    }
  }
}

TEST_CASE("norms of rotated and reflected sub-blocks are preserved") {
  const auto set = build_transform_set(cyclic_spec(4, 2, 3));
  Rng rng(17, 0);
  const int w = set.obs[0].width;
  std::vector<double> v(w), t(w);
  for (int s = 0; s < 200; ++s) {
    for (auto& x : v) x = rng.uniform(-3.0, 3.0);
    for (int i = 0; i < 4; ++i) {
      set.obs[i].apply(v, t);
      double n0 = 0.0, n1 = 0.0;
      for (int d = 0; d < w; ++d) {
        n0 += v[d] * v[d];
        n1 += t[d] * t[d];
      }
      CHECK(std::sqrt(n1) == doctest::Approx(std::sqrt(n0)).epsilon(1e-12));
    }
  }
}

TEST_CASE("agent block content lands in slot (j - i) mod N") {
  const int n = 4;
  const auto set = build_transform_set(cyclic_spec(n, 3, 0));
  std::vector<double> v(set.obs[0].width);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < 3; ++k) v[3 * j + k] = 1000.0 * j + k;  // sentinels
  for (int i = 0; i < n; ++i) {
    const auto t = set.obs[i].apply(v);
    for (int j = 0; j < n; ++j) {
      const int dst = ((j - i) % n + n) % n;
      for (int k = 0; k < 3; ++k) CHECK(t[3 * dst + k] == 1000.0 * j + k);
    }
  }
}

TEST_CASE("layout validation names the offending block") {
  SUBCASE("width sum mismatch") {
    SymmetrySpec spec = cyclic_spec(3, 2, 0);
    spec.obs_layout.total_width += 1;
    CHECK_THROWS_WITH_AS(spec.validate(),
                         doctest::Contains("width mismatch"), LayoutError);
  }
  SUBCASE("wrong agent group cardinality") {
    SymmetrySpec spec = cyclic_spec(3, 2, 0);
    spec.obs_layout.blocks.push_back({"odd", 2, BlockKind::AgentIndexed, {}});
    spec.obs_layout.total_width += 2;
    CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("odd"),
                         LayoutError);
  }
  SUBCASE("planar pair out of range") {
    SymmetrySpec spec = cyclic_spec(3, 2, 1);
    spec.obs_layout.blocks.back().rule.rotate_pairs = {{0, 5}};
    CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("out of range"),
                         LayoutError);
  }
  SUBCASE("overlapping planar pairs") {
    SymmetrySpec spec = cyclic_spec(3, 2, 2);
    spec.obs_layout.blocks.back().rule.rotate_pairs = {{0, 1}, {1, 2}};
    CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("overlap"),
                         LayoutError);
  }
  SUBCASE("sign-flip mask length") {
    SymmetrySpec spec = reflection_spec();
    spec.obs_layout.blocks[0].rule.flip_mask = {true};
    CHECK_THROWS_AS(spec.validate(), LayoutError);
  }
  SUBCASE("sign-flip under an odd cyclic group") {
    SymmetrySpec spec = cyclic_spec(3, 2, 0);
    Block b{"flip", 1, BlockKind::CentralVariant, {}};
    b.rule.type = RuleType::SignFlip;
    b.rule.flip_mask = {true};
    spec.obs_layout.blocks.push_back(b);
    spec.obs_layout.total_width += 1;
    CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("even"),
                         LayoutError);
  }
  SUBCASE("planar-rotate under reflection") {
    SymmetrySpec spec = reflection_spec();
    Block b{"pt", 2, BlockKind::CentralVariant, {}};
    b.rule.type = RuleType::PlanarRotate;
    b.rule.rotate_pairs = {{0, 1}};
    spec.obs_layout.blocks.push_back(b);
    spec.obs_layout.total_width += 2;
    CHECK_THROWS_AS(spec.validate(), LayoutError);
  }
  SUBCASE("agent-indexed action blocks require identity rules") {
    SymmetrySpec spec = reflection_spec();
    spec.act_layout.blocks[1].rule.type = RuleType::SignFlip;
    spec.act_layout.blocks[1].rule.flip_mask = {true, false};
    spec.act_layout.blocks[2].rule = spec.act_layout.blocks[1].rule;
    CHECK_THROWS_WITH_AS(spec.validate(), doctest::Contains("identity"),
                         LayoutError);
  }
}

TEST_CASE("spec json round trip preserves the transforms") {
  for (const auto& spec : {trifinger_style_spec(), reflection_spec()}) {
    const auto j = spec.to_json();
    const auto back = SymmetrySpec::from_json(j);
    const auto a = build_transform_set(spec);
    const auto b = build_transform_set(back);
    for (int i = 0; i < spec.group_size; ++i) {
      CHECK(oracle::max_abs_diff(dense_matrix(a.obs[i]),
                                 dense_matrix(b.obs[i])) == 0.0);
      CHECK(oracle::max_abs_diff(dense_matrix(a.act[i]),
                                 dense_matrix(b.act[i])) == 0.0);
    }
  }
}

TEST_CASE("quaternion element rules are a construction error") {
  auto j = reflection_spec().to_json();
  j["obs_blocks"][0]["element_rule"] = {{"type", "quaternion"}};
  CHECK_THROWS_WITH_AS((void)SymmetrySpec::from_json(j),
                       doctest::Contains("quaternion"), LayoutError);
}

TEST_CASE("trivialize keeps widths and yields a single identity transform") {
  const auto spec = trifinger_style_spec();
  const auto triv = trivialize(spec);
  CHECK(triv.group_size == 1);
  CHECK(triv.obs_layout.total_width == spec.obs_layout.total_width);
  CHECK(triv.act_layout.total_width == spec.act_layout.total_width);
  const auto set = build_transform_set(triv);
  REQUIRE(set.obs.size() == 1);
  Rng rng(2, 0);
  std::vector<double> v(triv.obs_layout.total_width);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  CHECK(oracle::max_abs_diff(set.obs[0].apply(v), v) == 0.0);
}
