#include "symrl/symmetry.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

#include "symrl/rng.hpp"

namespace symrl {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::atomic<int> g_next_set_tag{1};

const char* kind_name(BlockKind k) {
  switch (k) {
    case BlockKind::ScalarInvariant: return "scalar-invariant";
    case BlockKind::CentralVariant: return "central-variant";
    case BlockKind::AgentIndexed: return "agent-indexed";
  }
  return "?";
}

}  // namespace

int BlockLayout::block_offset(int index) const {
  int off = 0;
  for (int b = 0; b < index; ++b) off += blocks[b].width;
  return off;
}

void BlockLayout::validate(int group_size) const {
  int sum = 0;
  for (const auto& b : blocks) {
    if (b.width <= 0)
      throw LayoutError("block '" + b.name + "': width must be positive");
    sum += b.width;

    switch (b.rule.type) {
      case RuleType::Identity:
        break;
      case RuleType::SignFlip:
        if (static_cast<int>(b.rule.flip_mask.size()) != b.width)
          throw LayoutError("block '" + b.name +
                            "': sign-flip mask length != block width");
        break;
      case RuleType::PlanarRotate: {
        std::vector<bool> used(b.width, false);
        for (auto [p, q] : b.rule.rotate_pairs) {
          if (p < 0 || q < 0 || p >= b.width || q >= b.width || p == q)
            throw LayoutError("block '" + b.name +
                              "': planar-rotate pair out of range");
          if (used[p] || used[q])
            throw LayoutError("block '" + b.name +
                              "': planar-rotate pairs overlap");
          used[p] = used[q] = true;
        }
        break;
      }
    }
    if (b.kind == BlockKind::ScalarInvariant &&
        b.rule.type != RuleType::Identity)
      throw LayoutError("block '" + b.name +
                        "': scalar-invariant blocks must use identity rule");
  }
  if (sum != total_width)
    throw LayoutError("layout width mismatch: blocks sum to " +
                      std::to_string(sum) + ", total_width is " +
                      std::to_string(total_width));

  // Agent-indexed blocks must occur in runs that chunk into groups of |N|
  // uniform members.
  int run = 0;
  size_t run_start = 0;
  auto close_run = [&]() {
    if (run == 0) return;
    if (run % group_size != 0) {
      // Name the first member of the incomplete trailing group.
      const Block& off = blocks[run_start + run - run % group_size];
      throw LayoutError("agent group at block '" + off.name + "' has " +
                        std::to_string(run % group_size) +
                        " trailing members, expected groups of " +
                        std::to_string(group_size));
    }
    run = 0;
  };
  for (size_t i = 0; i < blocks.size(); ++i) {
    const Block& b = blocks[i];
    if (b.kind == BlockKind::AgentIndexed) {
      if (run == 0) run_start = i;
      if (run % group_size != 0) {
        const Block& lead = blocks[i - (run % group_size)];
        if (b.width != lead.width || !(b.rule == lead.rule))
          throw LayoutError("agent group member '" + b.name +
                            "' differs in width or rule from '" + lead.name +
                            "'");
      }
      ++run;
    } else {
      close_run();
    }
  }
  close_run();
}

int BlockLayout::central_width() const {
  int w = 0;
  for (const auto& b : blocks)
    if (b.kind != BlockKind::AgentIndexed) w += b.width;
  return w;
}

int BlockLayout::agent_share_width(int group_size) const {
  int w = 0;
  for (const auto& b : blocks)
    if (b.kind == BlockKind::AgentIndexed) w += b.width;
  return w / group_size;
}

std::vector<int> BlockLayout::agent_slot_indices(int group_size,
                                                 int slot) const {
  std::vector<int> idx;
  int off = 0;
  int member = 0;
  for (const auto& b : blocks) {
    if (b.kind == BlockKind::AgentIndexed) {
      if (member % group_size == slot)
        for (int k = 0; k < b.width; ++k) idx.push_back(off + k);
      ++member;
    }
    off += b.width;
  }
  return idx;
}

std::vector<int> BlockLayout::central_indices() const {
  std::vector<int> idx;
  int off = 0;
  for (const auto& b : blocks) {
    if (b.kind != BlockKind::AgentIndexed)
      for (int k = 0; k < b.width; ++k) idx.push_back(off + k);
    off += b.width;
  }
  return idx;
}

void SymmetrySpec::validate() const {
  switch (group) {
    case GroupKind::Cyclic:
      if (group_size < 2)
        throw LayoutError("cyclic group requires N >= 2, got " +
                          std::to_string(group_size));
      break;
    case GroupKind::Reflection:
      if (group_size != 2)
        throw LayoutError("reflection group requires N == 2, got " +
                          std::to_string(group_size));
      break;
    case GroupKind::Trivial:
      if (group_size != 1)
        throw LayoutError("trivial group requires N == 1, got " +
                          std::to_string(group_size));
      break;
  }
  obs_layout.validate(group_size);
  act_layout.validate(group_size);

  for (const BlockLayout* lay : {&obs_layout, &act_layout}) {
    for (const auto& b : lay->blocks) {
      // A base rule R must satisfy R^N = I so the compiled powers close.
      if (b.rule.type == RuleType::SignFlip && group == GroupKind::Cyclic &&
          group_size % 2 != 0)
        throw LayoutError("block '" + b.name +
                          "': sign-flip rule needs an even group order");
      if (b.rule.type == RuleType::PlanarRotate &&
          group == GroupKind::Reflection)
        throw LayoutError("block '" + b.name +
                          "': planar-rotate rule is only valid for cyclic groups");
    }
  }
  // Keeping agent action shares directly comparable across slots requires
  // identity rules there; the swap alone carries the symmetry.
  for (const auto& b : act_layout.blocks)
    if (b.kind == BlockKind::AgentIndexed && b.rule.type != RuleType::Identity)
      throw LayoutError("action block '" + b.name +
                        "': agent-indexed action blocks must use identity rule");
  if (rotation_axis_convention != "out-of-plane")
    throw LayoutError("unknown rotation_axis_convention '" +
                      rotation_axis_convention + "'");
}

SymmetrySpec trivialize(const SymmetrySpec& spec) {
  SymmetrySpec t;
  t.group = GroupKind::Trivial;
  t.group_size = 1;
  auto strip = [](const BlockLayout& in) {
    BlockLayout out;
    out.total_width = in.total_width;
    for (const auto& b : in.blocks) {
      Block nb;
      nb.name = b.name;
      nb.width = b.width;
      nb.kind = BlockKind::CentralVariant;
      out.blocks.push_back(std::move(nb));
    }
    return out;
  };
  t.obs_layout = strip(spec.obs_layout);
  t.act_layout = strip(spec.act_layout);
  t.validate();
  return t;
}

void Transform::apply(std::span<const double> in,
                      std::span<double> out) const {
  if (static_cast<int>(in.size()) != width ||
      static_cast<int>(out.size()) != width)
    throw DimensionError("transform width " + std::to_string(width) +
                         ", vector width " + std::to_string(in.size()));
  if (in.data() == out.data()) {
    const std::vector<double> tmp(in.begin(), in.end());
    apply(tmp, out);
    return;
  }
  for (int d = 0; d < width; ++d) out[d] = scale[d] * in[perm[d]];
  for (const auto& r : rots) {
    double x = out[r.a], y = out[r.b];
    out[r.a] = r.c * x - r.s * y;
    out[r.b] = r.s * x + r.c * y;
  }
}

std::vector<double> Transform::apply(std::span<const double> in) const {
  std::vector<double> out(in.size());
  apply(in, out);
  return out;
}

void Transform::apply_transpose(std::span<const double> in,
                                std::span<double> out) const {
  if (static_cast<int>(in.size()) != width ||
      static_cast<int>(out.size()) != width)
    throw DimensionError("transform width " + std::to_string(width) +
                         ", vector width " + std::to_string(in.size()));
  std::vector<double> tmp(in.begin(), in.end());
  for (const auto& r : rots) {
    double x = tmp[r.a], y = tmp[r.b];
    tmp[r.a] = r.c * x + r.s * y;
    tmp[r.b] = -r.s * x + r.c * y;
  }
  for (int d = 0; d < width; ++d) out[perm[d]] = scale[d] * tmp[d];
}

std::vector<double> Transform::apply_transpose(
    std::span<const double> in) const {
  std::vector<double> out(in.size());
  apply_transpose(in, out);
  return out;
}

std::vector<double> dense_matrix(const Transform& t) {
  std::vector<double> m(static_cast<size_t>(t.width) * t.width, 0.0);
  std::vector<double> e(t.width, 0.0), col(t.width, 0.0);
  for (int j = 0; j < t.width; ++j) {
    e[j] = 1.0;
    t.apply(e, col);
    for (int i = 0; i < t.width; ++i) m[static_cast<size_t>(i) * t.width + j] = col[i];
    e[j] = 0.0;
  }
  return m;
}

double orthogonality_residual(const Transform& t) {
  const auto m = dense_matrix(t);
  const int n = t.width;
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double dot = 0.0;
      for (int k = 0; k < n; ++k)
        dot += m[static_cast<size_t>(k) * n + i] * m[static_cast<size_t>(k) * n + j];
      worst = std::max(worst, std::abs(dot - (i == j ? 1.0 : 0.0)));
    }
  }
  return worst;
}

namespace {

// Compiles T_i for one layout: agent groups shift circularly by i while every
// block's element rule is raised to the i-th power.
Transform compile_transform(const BlockLayout& lay, GroupKind group, int n,
                            int i, int tag, int domain) {
  Transform t;
  t.agent_index = i;
  t.width = lay.total_width;
  t.set_tag = tag;
  t.domain = domain;
  t.perm.resize(lay.total_width);
  t.scale.assign(lay.total_width, 1.0);

  const double angle = (group == GroupKind::Cyclic && n > 0)
                           ? -kTwoPi * static_cast<double>(i) / n
                           : 0.0;
  const bool odd_power = (i % 2) != 0;

  auto emit_rule = [&](const Block& b, int dst_off) {
    if (i == 0) return;
    switch (b.rule.type) {
      case RuleType::Identity:
        break;
      case RuleType::SignFlip:
        if (odd_power)
          for (int k = 0; k < b.width; ++k)
            if (b.rule.flip_mask[k]) t.scale[dst_off + k] = -1.0;
        break;
      case RuleType::PlanarRotate:
        for (auto [p, q] : b.rule.rotate_pairs)
          t.rots.push_back({dst_off + p, dst_off + q, std::cos(angle),
                            std::sin(angle)});
        break;
    }
  };

  // Walk blocks: agent groups need their member offsets collected first.
  int off = 0;
  size_t bi = 0;
  while (bi < lay.blocks.size()) {
    const Block& b = lay.blocks[bi];
    if (b.kind != BlockKind::AgentIndexed) {
      for (int k = 0; k < b.width; ++k) t.perm[off + k] = off + k;
      emit_rule(b, off);
      off += b.width;
      ++bi;
      continue;
    }
    // Collect the whole run of agent-indexed blocks, then process group by
    // group (runs validate to a multiple of n members).
    std::vector<int> run_offs;
    std::vector<size_t> run_idx;
    int run_off = off;
    while (bi < lay.blocks.size() &&
           lay.blocks[bi].kind == BlockKind::AgentIndexed) {
      run_offs.push_back(run_off);
      run_idx.push_back(bi);
      run_off += lay.blocks[bi].width;
      ++bi;
    }
    off = run_off;
    for (size_t g = 0; g < run_idx.size(); g += n) {
      const Block& lead = lay.blocks[run_idx[g]];
      for (int slot = 0; slot < n; ++slot) {
        int src_member = (slot + i) % n;
        int dst_off = run_offs[g + slot];
        int src_off = run_offs[g + src_member];
        for (int k = 0; k < lead.width; ++k)
          t.perm[dst_off + k] = src_off + k;
        emit_rule(lead, dst_off);
      }
    }
  }
  return t;
}

// Element map acting on the central action dims only (identity permutation).
Transform compile_act_central(const BlockLayout& act, GroupKind group, int n,
                              int i, int tag) {
  BlockLayout central;
  for (const auto& b : act.blocks)
    if (b.kind != BlockKind::AgentIndexed) central.blocks.push_back(b);
  central.total_width = 0;
  for (const auto& b : central.blocks) central.total_width += b.width;
  for (auto& b : central.blocks) b.kind = BlockKind::CentralVariant;
  return compile_transform(central, group, n, i, tag, 2);
}

}  // namespace

TransformSet build_transform_set(const SymmetrySpec& spec) {
  spec.validate();
  TransformSet set;
  set.spec = spec;
  set.tag = g_next_set_tag.fetch_add(1);
  const int n = spec.group_size;
  for (int i = 0; i < n; ++i) {
    set.obs.push_back(compile_transform(spec.obs_layout, spec.group, n, i,
                                        set.tag, 0));
    set.act.push_back(compile_transform(spec.act_layout, spec.group, n, i,
                                        set.tag, 1));
    set.act_central.push_back(
        compile_act_central(spec.act_layout, spec.group, n, i, set.tag));
  }
  set.act_central_indices = spec.act_layout.central_indices();
  for (int slot = 0; slot < n; ++slot) {
    set.act_slot_indices.push_back(
        spec.act_layout.agent_slot_indices(n, slot));
    set.obs_slot_indices.push_back(
        spec.obs_layout.agent_slot_indices(n, slot));
  }
  return set;
}

namespace {

const std::vector<Transform>& family(const TransformSet& set, int domain) {
  switch (domain) {
    case 0: return set.obs;
    case 1: return set.act;
    default: return set.act_central;
  }
}

}  // namespace

const Transform& compose(const TransformSet& set, const Transform& a,
                         const Transform& b) {
  if (a.set_tag != set.tag || b.set_tag != set.tag || a.domain != b.domain)
    throw SpecMismatchError("compose: transforms come from different sets");
  const int n = set.group_size();
  return family(set, a.domain)[(a.agent_index + b.agent_index) % n];
}

const Transform& inverse(const TransformSet& set, const Transform& t) {
  if (t.set_tag != set.tag)
    throw SpecMismatchError("inverse: transform comes from a different set");
  const int n = set.group_size();
  return family(set, t.domain)[(n - t.agent_index) % n];
}

double AxiomReport::worst() const {
  return std::max(std::max(commutativity, distributivity),
                  std::max(cyclicity, orthogonality));
}

AxiomReport verify_group_axioms(const TransformSet& set, int sample_count,
                                std::uint64_t rng_seed) {
  AxiomReport rep;
  Rng rng(rng_seed, 0x5e7);
  const int n = set.group_size();

  for (const auto* fam : {&set.obs, &set.act}) {
    const int w = (*fam)[0].width;
    if (w == 0) continue;
    std::vector<double> v(w), u(w), t1(w), t2(w), t3(w), t4(w);
    for (int s = 0; s < sample_count; ++s) {
      for (auto& x : v) x = rng.uniform(-2.0, 2.0);
      int i = static_cast<int>(rng.uniform_int(n));
      int j = static_cast<int>(rng.uniform_int(n));
      int k = static_cast<int>(rng.uniform_int(n));

      // commutativity: T_j(T_i v) == T_{i+j} v
      (*fam)[i].apply(v, t1);
      (*fam)[j].apply(t1, t2);
      (*fam)[(i + j) % n].apply(v, t3);
      for (int d = 0; d < w; ++d)
        rep.commutativity = std::max(rep.commutativity, std::abs(t2[d] - t3[d]));

      // distributivity: T_j(T_i v + T_k v) == T_j T_i v + T_j T_k v
      (*fam)[k].apply(v, t3);
      for (int d = 0; d < w; ++d) u[d] = t1[d] + t3[d];
      (*fam)[j].apply(u, t4);
      (*fam)[j].apply(t1, t2);
      (*fam)[j].apply(t3, u);
      for (int d = 0; d < w; ++d)
        rep.distributivity =
            std::max(rep.distributivity, std::abs(t4[d] - (t2[d] + u[d])));

      // cyclicity: applying T_1 n times returns to the start
      std::copy(v.begin(), v.end(), t1.begin());
      for (int r = 0; r < n; ++r) {
        (*fam)[1 % n].apply(t1, t2);
        std::swap(t1, t2);
      }
      for (int d = 0; d < w; ++d)
        rep.cyclicity = std::max(rep.cyclicity, std::abs(t1[d] - v[d]));
    }
    for (const auto& t : *fam)
      rep.orthogonality =
          std::max(rep.orthogonality, orthogonality_residual(t));
  }
  return rep;
}

std::vector<int> dimension_orbits(const std::vector<Transform>& transforms,
                                  int width) {
  std::vector<int> parent(width);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  auto unite = [&](int a, int b) { parent[find(a)] = find(b); };
  for (const auto& t : transforms) {
    for (int d = 0; d < width; ++d) unite(d, t.perm[d]);
    for (const auto& r : t.rots) unite(r.a, r.b);
  }
  std::vector<int> out(width);
  for (int d = 0; d < width; ++d) out[d] = find(d);
  return out;
}

namespace {

const char* rule_name(RuleType t) {
  switch (t) {
    case RuleType::Identity: return "identity";
    case RuleType::SignFlip: return "sign-flip";
    case RuleType::PlanarRotate: return "planar-rotate";
  }
  return "?";
}

nlohmann::json block_to_json(const Block& b) {
  nlohmann::json j;
  j["name"] = b.name;
  j["width"] = b.width;
  j["kind"] = kind_name(b.kind);
  nlohmann::json rule;
  rule["type"] = rule_name(b.rule.type);
  if (b.rule.type == RuleType::SignFlip) {
    std::vector<int> mask;
    for (bool f : b.rule.flip_mask) mask.push_back(f ? 1 : 0);
    rule["mask"] = mask;
  } else if (b.rule.type == RuleType::PlanarRotate) {
    nlohmann::json pairs = nlohmann::json::array();
    for (auto [p, q] : b.rule.rotate_pairs) pairs.push_back({p, q});
    rule["pairs"] = pairs;
  }
  j["element_rule"] = rule;
  return j;
}

Block block_from_json(const nlohmann::json& j) {
  Block b;
  b.name = j.at("name").get<std::string>();
  b.width = j.at("width").get<int>();
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "scalar-invariant") b.kind = BlockKind::ScalarInvariant;
  else if (kind == "central-variant") b.kind = BlockKind::CentralVariant;
  else if (kind == "agent-indexed") b.kind = BlockKind::AgentIndexed;
  else throw LayoutError("block '" + b.name + "': unknown kind '" + kind + "'");

  const auto& rule = j.at("element_rule");
  std::string type = rule.at("type").get<std::string>();
  if (type == "identity") {
    b.rule.type = RuleType::Identity;
  } else if (type == "sign-flip") {
    b.rule.type = RuleType::SignFlip;
    for (const auto& m : rule.at("mask")) b.rule.flip_mask.push_back(m.get<int>() != 0);
  } else if (type == "planar-rotate") {
    b.rule.type = RuleType::PlanarRotate;
    for (const auto& p : rule.at("pairs"))
      b.rule.rotate_pairs.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
  } else if (type == "quaternion") {
    throw LayoutError("block '" + b.name +
                      "': quaternion blocks are not supported");
  } else {
    throw LayoutError("block '" + b.name + "': unknown element rule '" + type +
                      "'");
  }
  return b;
}

}  // namespace

nlohmann::json SymmetrySpec::to_json() const {
  nlohmann::json j;
  switch (group) {
    case GroupKind::Cyclic: j["group_kind"] = "cyclic"; break;
    case GroupKind::Reflection: j["group_kind"] = "reflection"; break;
    case GroupKind::Trivial: j["group_kind"] = "trivial"; break;
  }
  j["n"] = group_size;
  j["rotation_axis_convention"] = rotation_axis_convention;
  auto dump_layout = [](const BlockLayout& lay) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& b : lay.blocks) arr.push_back(block_to_json(b));
    return arr;
  };
  j["obs_blocks"] = dump_layout(obs_layout);
  j["act_blocks"] = dump_layout(act_layout);
  return j;
}

SymmetrySpec SymmetrySpec::from_json(const nlohmann::json& j) {
  SymmetrySpec spec;
  std::string kind = j.at("group_kind").get<std::string>();
  if (kind == "cyclic") spec.group = GroupKind::Cyclic;
  else if (kind == "reflection") spec.group = GroupKind::Reflection;
  else if (kind == "trivial") spec.group = GroupKind::Trivial;
  else throw LayoutError("unknown group_kind '" + kind + "'");
  spec.group_size = j.at("n").get<int>();
  if (j.contains("rotation_axis_convention"))
    spec.rotation_axis_convention =
        j.at("rotation_axis_convention").get<std::string>();
  auto load_layout = [](const nlohmann::json& arr) {
    BlockLayout lay;
    for (const auto& bj : arr) lay.blocks.push_back(block_from_json(bj));
    lay.total_width = 0;
    for (const auto& b : lay.blocks) lay.total_width += b.width;
    return lay;
  };
  spec.obs_layout = load_layout(j.at("obs_blocks"));
  spec.act_layout = load_layout(j.at("act_blocks"));
  spec.validate();
  return spec;
}

}  // namespace symrl
