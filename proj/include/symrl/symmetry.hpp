#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "symrl/errors.hpp"

#include <json.hpp>

namespace symrl {

enum class BlockKind { ScalarInvariant, CentralVariant, AgentIndexed };
enum class RuleType { Identity, SignFlip, PlanarRotate };

// Per-block orthogonal element rule. The rule describes the base map applied
// once per group step; transform i applies its i-th power.
struct ElementRule {
  RuleType type = RuleType::Identity;
  std::vector<bool> flip_mask;                   // SignFlip, size == width
  std::vector<std::pair<int, int>> rotate_pairs; // PlanarRotate, in-block indices

  bool operator==(const ElementRule&) const = default;
};

struct Block {
  std::string name;
  int width = 0;
  BlockKind kind = BlockKind::CentralVariant;
  ElementRule rule;
};

// Named segmentation of a flat vector into invariant, central-variant and
// agent-indexed blocks. Consecutive agent-indexed blocks are chunked into
// groups of |N| members; each group holds one logical per-agent quantity.
struct BlockLayout {
  std::vector<Block> blocks;
  int total_width = 0;

  int block_offset(int index) const;
  // Throws LayoutError naming the offending block.
  void validate(int group_size) const;

  int central_width() const;        // scalar-invariant + central-variant dims
  int agent_share_width(int group_size) const;  // one agent's dims across all groups

  // Flat indices belonging to agent slot j, ordered group by group.
  std::vector<int> agent_slot_indices(int group_size, int slot) const;
  // Flat indices of all non-agent dims, in layout order.
  std::vector<int> central_indices() const;
};

enum class GroupKind { Cyclic, Reflection, Trivial };

struct SymmetrySpec {
  GroupKind group = GroupKind::Cyclic;
  int group_size = 0;  // |N|: cyclic N >= 2, reflection 2, trivial 1
  BlockLayout obs_layout;
  BlockLayout act_layout;
  std::string rotation_axis_convention = "out-of-plane";

  void validate() const;

  nlohmann::json to_json() const;
  static SymmetrySpec from_json(const nlohmann::json& j);
};

// Builds a spec with identical widths whose only transform is the identity.
SymmetrySpec trivialize(const SymmetrySpec& spec);

struct RotateOp {
  int a = 0, b = 0;   // flat indices, post-permutation
  double c = 1.0, s = 0.0;
};

// One group element compiled to gather-permutation + sign scales + 2x2
// rotations. apply() is y[d] = scale[d] * x[perm[d]], then each rotation
// mixes the pair (a, b) in place.
struct Transform {
  int agent_index = 0;
  int width = 0;
  int set_tag = 0;   // identity of the owning TransformSet
  int domain = 0;    // 0 obs, 1 act, 2 act-central
  std::vector<int> perm;
  std::vector<double> scale;
  std::vector<RotateOp> rots;

  void apply(std::span<const double> in, std::span<double> out) const;
  std::vector<double> apply(std::span<const double> in) const;
  // Transpose (= inverse, the map is orthogonal). Used for gradients.
  void apply_transpose(std::span<const double> in, std::span<double> out) const;
  std::vector<double> apply_transpose(std::span<const double> in) const;
};

// Dense matrix form, row-major width x width. Verification/test use only.
std::vector<double> dense_matrix(const Transform& t);

// Max |M^T M - I| entry of the transform's matrix.
double orthogonality_residual(const Transform& t);

struct TransformSet {
  SymmetrySpec spec;
  int tag = 0;
  std::vector<Transform> obs;          // size |N|
  std::vector<Transform> act;          // size |N|
  std::vector<Transform> act_central;  // element maps on central act dims only

  // Gather maps for assembling flat actions from per-agent shares.
  std::vector<int> act_central_indices;
  std::vector<std::vector<int>> act_slot_indices;  // [slot][share dim]
  std::vector<std::vector<int>> obs_slot_indices;

  int group_size() const { return spec.group_size; }
};

TransformSet build_transform_set(const SymmetrySpec& spec);

// Group-law composition and inverse; throws SpecMismatchError when the
// transforms come from different sets.
const Transform& compose(const TransformSet& set, const Transform& a,
                         const Transform& b);
const Transform& inverse(const TransformSet& set, const Transform& t);

struct AxiomReport {
  double commutativity = 0.0;
  double distributivity = 0.0;
  double cyclicity = 0.0;
  double orthogonality = 0.0;

  double worst() const;
  bool all_within(double tol) const { return worst() <= tol; }
};

// Evaluates the group laws on random vectors; residuals are reported, never
// thrown.
AxiomReport verify_group_axioms(const TransformSet& set, int sample_count,
                                std::uint64_t rng_seed);

// Union-find orbits of flat dims under all transforms of the set (permuted
// slots plus rotation-pair couplings). Used to symmetrize normalizer stats.
std::vector<int> dimension_orbits(const std::vector<Transform>& transforms,
                                  int width);

}  // namespace symrl
