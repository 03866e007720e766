#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

// Brute-force check of split-objective supremacy on small finite instances.
//
// A shared model maps (θ, t) to a point of S_1 x ... x S_n. A split model has
// one parameter grid per objective and maps (θ_i, t) to a point of S_i. Each
// S_i is a finite set of real vectors; outputs are stored as indices into it.

namespace bicameral::reward {

class InvalidInstance : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct OutputSpace {
  std::vector<std::vector<double>> points;
  std::size_t size() const { return points.size(); }
};

/// Componentwise order on the point vectors, or an explicit relation where
/// leq[a][b] != 0 means point a <= point b.
struct PartialOrder {
  bool componentwise = true;
  std::vector<std::vector<std::uint8_t>> leq;

  bool less_equal(const OutputSpace& space, std::size_t a, std::size_t b) const;
};

struct RewardFunction {
  std::vector<double> values;  // one per point of S_i
  PartialOrder order;
};

// Every pair a <= b in the declared order has R(a) <= R(b).
bool verify_reward_monotone(const RewardFunction& r, const OutputSpace& space);

enum class CompositionKind { kWeightedSum, kMin, kShiftedProduct, kTable };

/// The composition map M. Weighted sum uses `weights`; shifted product is
/// prod_i (r_i + shifts[i]); a table gives M on the product grid of `axes`
/// (each strictly ascending), stored row-major with the last axis fastest,
/// and is interpolated multilinearly between grid points. Arguments outside
/// the axis range throw InvalidInstance.
struct CompositeMap {
  CompositionKind kind = CompositionKind::kWeightedSum;
  std::vector<double> weights;
  std::vector<double> shifts;
  std::vector<std::vector<double>> axes;
  std::vector<double> table;

  double operator()(std::span<const double> r) const;
};

std::string to_string(CompositionKind k);

/// True when M is nondecreasing in every argument over the product of the
/// given value sets. Each grid point is compared with each of its upper
/// neighbours (one coordinate moved to the next larger value); on a finite
/// product grid this covers the full pairwise dominance order by transitivity.
bool check_monotone(const CompositeMap& m, const std::vector<std::vector<double>>& value_sets);

struct CompositeReward {
  std::vector<RewardFunction> rewards;
  CompositeMap map;

  std::size_t objectives() const { return rewards.size(); }
  double compose(std::span<const double> r) const { return map(r); }
};

struct FiniteLanguageFunction {
  std::vector<std::vector<double>> grid;  // Θ
  std::size_t n_inputs = 0;               // |T*|
  std::vector<OutputSpace> spaces;        // S_1..S_n
  std::vector<std::size_t> outputs;       // index into S_i at [(θ * |T*| + t) * n + i]

  std::size_t objectives() const { return spaces.size(); }
  std::size_t at(std::size_t theta, std::size_t t, std::size_t i) const {
    return outputs[(theta * n_inputs + t) * objectives() + i];
  }
  void validate() const;
};

struct SplitLanguageFunction {
  std::vector<std::vector<std::vector<double>>> grids;  // Θ_i
  std::size_t n_inputs = 0;
  std::vector<std::vector<std::size_t>> outputs;  // [i][θ_i * |T*| + t], index into S_i
  // embedding[i][θ] is the point of Θ_i that the shared parameter θ maps to.
  std::vector<std::vector<std::size_t>> embedding;

  std::size_t objectives() const { return grids.size(); }
  std::size_t at(std::size_t i, std::size_t theta_i, std::size_t t) const {
    return outputs[i][theta_i * n_inputs + t];
  }
};

// Split model whose grids are Θ followed by `extra[i]` further points per
// objective, each extra point given as its |T*| output indices.
SplitLanguageFunction split_from_shared(
    const FiniteLanguageFunction& f,
    const std::vector<std::vector<std::vector<double>>>& extra_points,
    const std::vector<std::vector<std::vector<std::size_t>>>& extra_outputs);

// Throws InvalidInstance unless the split model restricted to the embedded
// shared grid reproduces every projection of the shared model.
void check_construction(const FiniteLanguageFunction& f, const SplitLanguageFunction& g);

inline constexpr std::size_t kEnumerationGuard = 10'000'000;

/// Mean over T* of R_i(s_i(θ, t)) for every objective.
std::vector<double> objective_means(const FiniteLanguageFunction& f, const CompositeReward& cr,
                                    std::size_t theta);

// CR(θ) = M(mean R_1, ..., mean R_n).
double shared_value(const FiniteLanguageFunction& f, const CompositeReward& cr,
                    std::size_t theta);

struct SharedOptimum {
  std::size_t theta = 0;
  double value = 0.0;
};

struct SplitOptimum {
  std::vector<std::size_t> theta;
  std::vector<double> means;
  double value = 0.0;
};

/// Exhaustive maximization of CR(θ) over Θ; ties go to the earliest grid point.
/// Throws std::length_error past kEnumerationGuard evaluations.
SharedOptimum optimize_shared(const FiniteLanguageFunction& f, const CompositeReward& cr);

/// Each θ_i maximizes mean R_i over Θ_i on its own; the value is M at the
/// resulting tuple of means.
SplitOptimum optimize_split(const SplitLanguageFunction& g, const CompositeReward& cr);

inline constexpr double kSupremacyTolerance = 1e-12;

struct SupremacyReport {
  nlohmann::json instance;

  std::size_t shared_theta = 0;
  double shared_value = 0.0;
  std::vector<double> shared_means;
  std::vector<std::size_t> split_theta;
  double split_value = 0.0;
  std::vector<double> split_means;

  bool holds = false;  // shared_value <= split_value + tolerance
  std::vector<bool> objective_dominance;
  bool equal = false;              // |split - shared| <= tolerance
  bool separable_optimum = false;  // some θ in Θ reaches every split mean

  // Single-input sub-instances, one per t.
  bool pointwise_holds = false;
  std::size_t pointwise_violations = 0;

  // Mean over t of M applied per input, at the shared and split optima.
  double shared_mean_pointwise = 0.0;
  double split_mean_pointwise = 0.0;

  bool rewards_monotone = false;
  bool composite_monotone = false;
  bool hypotheses_hold() const { return rewards_monotone && composite_monotone; }

  // A shared parameter other than the optimum, checked against the split value.
  std::optional<std::size_t> probe_theta;
  double probe_value = 0.0;
  bool probe_holds = false;
};

nlohmann::json to_json(const SupremacyReport& r);

/// Checks the construction, enumerates both optima and fills the report.
/// Instances violating the monotonicity hypotheses still get a report, with
/// the hypothesis flags cleared.
SupremacyReport verify_supremacy(const FiniteLanguageFunction& f, const SplitLanguageFunction& g,
                                 const CompositeReward& cr,
                                 std::optional<std::size_t> probe_theta = std::nullopt);

struct RewardInstance {
  FiniteLanguageFunction shared;
  SplitLanguageFunction split;
  CompositeReward cr;
  nlohmann::json description;
};

SupremacyReport verify(const RewardInstance& inst,
                       std::optional<std::size_t> probe_theta = std::nullopt);

/// Random valid instance: |T*| in [1,5], n in [2,4], |Θ| in [4,64],
/// |S_i| in [2,8], 0 to 16 extra split points per objective, nonnegative
/// linear rewards under the componentwise order and M drawn from the three
/// monotone families.
RewardInstance random_instance(std::uint64_t seed);

// A random instance altered so one shared θ reaches the best point of every
// S_i on every input.
RewardInstance separable_instance(std::uint64_t seed);

// Two objectives pulling the shared parameter apart, composed by r_2 - r_1.
RewardInstance negative_control_instance();

// Seed of the j-th instance of a sweep.
std::uint64_t instance_seed(std::uint64_t seed, std::size_t j);

/// Verifies `count` random instances (in parallel); result j belongs to
/// instance_seed(seed, j) and carries a probe at a seeded random θ.
std::vector<SupremacyReport> lemma_sweep(std::size_t count, std::uint64_t seed);

}  // namespace bicameral::reward
