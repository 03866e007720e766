#include "bicameral/reward_theory.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace bicameral::reward {

bool PartialOrder::less_equal(const OutputSpace& space, std::size_t a, std::size_t b) const {
  if (!componentwise) return leq.at(a).at(b) != 0;
  const auto& pa = space.points[a];
  const auto& pb = space.points[b];
  if (pa.size() != pb.size()) return false;
  for (std::size_t j = 0; j < pa.size(); ++j)
    if (!(pa[j] <= pb[j])) return false;
  return true;
}

bool verify_reward_monotone(const RewardFunction& r, const OutputSpace& space) {
  if (r.values.size() != space.size()) {
    throw InvalidInstance("reward has " + std::to_string(r.values.size()) + " values for " +
                          std::to_string(space.size()) + " points");
  }
  if (!r.order.componentwise) {
    if (r.order.leq.size() != space.size()) throw InvalidInstance("order matrix size mismatch");
    for (const auto& row : r.order.leq)
      if (row.size() != space.size()) throw InvalidInstance("order matrix size mismatch");
  }
  for (std::size_t a = 0; a < space.size(); ++a)
    for (std::size_t b = 0; b < space.size(); ++b)
      if (r.order.less_equal(space, a, b) && r.values[a] > r.values[b]) return false;
  return true;
}

std::string to_string(CompositionKind k) {
  switch (k) {
    case CompositionKind::kWeightedSum: return "weighted_sum";
    case CompositionKind::kMin: return "min";
    case CompositionKind::kShiftedProduct: return "shifted_product";
    case CompositionKind::kTable: return "table";
  }
  return "?";
}

namespace {

double table_value(const CompositeMap& m, std::span<const double> r) {
  const std::size_t n = m.axes.size();
  if (r.size() != n) throw InvalidInstance("table arity mismatch");
  std::size_t expected = 1;
  for (const auto& ax : m.axes) expected *= ax.size();
  if (m.table.size() != expected) throw InvalidInstance("table size does not match its axes");

  // Cell index and interpolation fraction along each axis.
  std::vector<std::size_t> lo(n);
  std::vector<double> frac(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ax = m.axes[i];
    if (ax.empty() || r[i] < ax.front() || r[i] > ax.back()) {
      throw InvalidInstance("table argument " + std::to_string(i) + " outside its axis");
    }
    auto it = std::upper_bound(ax.begin(), ax.end(), r[i]);
    std::size_t hi = static_cast<std::size_t>(it - ax.begin());
    if (hi == ax.size()) {
      lo[i] = ax.size() - 1;
      frac[i] = 0.0;
    } else {
      lo[i] = hi - 1;
      frac[i] = (r[i] - ax[lo[i]]) / (ax[hi] - ax[lo[i]]);
    }
  }

  double out = 0.0;
  for (std::size_t corner = 0; corner < (std::size_t{1} << n); ++corner) {
    double w = 1.0;
    std::size_t flat = 0;
    bool skip = false;
    for (std::size_t i = 0; i < n; ++i) {
      const bool up = (corner >> i) & 1;
      if (up && frac[i] == 0.0) {
        skip = true;
        break;
      }
      w *= up ? frac[i] : 1.0 - frac[i];
      flat = flat * m.axes[i].size() + lo[i] + (up ? 1 : 0);
    }
    if (!skip && w != 0.0) out += w * m.table[flat];
  }
  return out;
}

}  // namespace

double CompositeMap::operator()(std::span<const double> r) const {
  switch (kind) {
    case CompositionKind::kWeightedSum: {
      if (weights.size() != r.size()) throw InvalidInstance("weighted sum arity mismatch");
      double s = 0.0;
      for (std::size_t i = 0; i < r.size(); ++i) s += weights[i] * r[i];
      return s;
    }
    case CompositionKind::kMin:
      if (r.empty()) throw InvalidInstance("min of no rewards");
      return *std::min_element(r.begin(), r.end());
    case CompositionKind::kShiftedProduct: {
      if (shifts.size() != r.size()) throw InvalidInstance("shifted product arity mismatch");
      double p = 1.0;
      for (std::size_t i = 0; i < r.size(); ++i) p *= r[i] + shifts[i];
      return p;
    }
    case CompositionKind::kTable:
      return table_value(*this, r);
  }
  return 0.0;
}

bool check_monotone(const CompositeMap& m, const std::vector<std::vector<double>>& value_sets) {
  const std::size_t n = value_sets.size();
  std::vector<std::vector<double>> axes(n);
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) {
    axes[i] = value_sets[i];
    std::sort(axes[i].begin(), axes[i].end());
    axes[i].erase(std::unique(axes[i].begin(), axes[i].end()), axes[i].end());
    if (axes[i].empty()) return true;
    total *= axes[i].size();
    if (total > kEnumerationGuard) throw std::length_error("check_monotone: grid too large");
  }

  std::vector<std::size_t> idx(n, 0);
  std::vector<double> point(n), upper(n);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    for (std::size_t i = n; i-- > 0;) {
      idx[i] = rest % axes[i].size();
      rest /= axes[i].size();
      point[i] = axes[i][idx[i]];
    }
    const double here = m(point);
    for (std::size_t k = 0; k < n; ++k) {
      if (idx[k] + 1 == axes[k].size()) continue;
      upper = point;
      upper[k] = axes[k][idx[k] + 1];
      if (m(upper) < here) return false;
    }
  }
  return true;
}

void FiniteLanguageFunction::validate() const {
  if (grid.empty()) throw InvalidInstance("empty parameter grid");
  if (n_inputs == 0) throw InvalidInstance("empty input set");
  if (spaces.empty()) throw InvalidInstance("no objectives");
  if (outputs.size() != grid.size() * n_inputs * spaces.size()) {
    throw InvalidInstance("evaluation table is not total on grid x inputs");
  }
  for (std::size_t k = 0; k < outputs.size(); ++k) {
    if (outputs[k] >= spaces[k % spaces.size()].size()) {
      throw InvalidInstance("evaluation leaves its output space");
    }
  }
}

SplitLanguageFunction split_from_shared(
    const FiniteLanguageFunction& f,
    const std::vector<std::vector<std::vector<double>>>& extra_points,
    const std::vector<std::vector<std::vector<std::size_t>>>& extra_outputs) {
  f.validate();
  const std::size_t n = f.objectives();
  const std::size_t T = f.n_inputs;
  if (extra_points.size() != n || extra_outputs.size() != n) {
    throw InvalidInstance("extra split points must be given per objective");
  }
  SplitLanguageFunction g;
  g.n_inputs = T;
  g.grids.resize(n);
  g.outputs.resize(n);
  g.embedding.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    g.grids[i] = f.grid;
    for (std::size_t th = 0; th < f.grid.size(); ++th) {
      g.embedding[i].push_back(th);
      for (std::size_t t = 0; t < T; ++t) g.outputs[i].push_back(f.at(th, t, i));
    }
    if (extra_points[i].size() != extra_outputs[i].size()) {
      throw InvalidInstance("extra point / output count mismatch");
    }
    for (std::size_t e = 0; e < extra_points[i].size(); ++e) {
      g.grids[i].push_back(extra_points[i][e]);
      if (extra_outputs[i][e].size() != T) throw InvalidInstance("extra point needs |T*| outputs");
      for (auto o : extra_outputs[i][e]) {
        if (o >= f.spaces[i].size()) throw InvalidInstance("extra output leaves its space");
        g.outputs[i].push_back(o);
      }
    }
  }
  return g;
}

void check_construction(const FiniteLanguageFunction& f, const SplitLanguageFunction& g) {
  f.validate();
  const std::size_t n = f.objectives();
  if (g.objectives() != n) throw InvalidInstance("split model has a different objective count");
  if (g.n_inputs != f.n_inputs) throw InvalidInstance("split model has a different input set");
  if (g.embedding.size() != n || g.outputs.size() != n) {
    throw InvalidInstance("split model is missing per-objective maps");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (g.grids[i].empty()) throw InvalidInstance("empty split grid");
    if (g.outputs[i].size() != g.grids[i].size() * g.n_inputs) {
      throw InvalidInstance("split evaluation is not total");
    }
    for (auto o : g.outputs[i])
      if (o >= f.spaces[i].size()) throw InvalidInstance("split evaluation leaves S_i");
    if (g.embedding[i].size() != f.grid.size()) {
      throw InvalidInstance("shared grid is not embedded in split grid " + std::to_string(i));
    }
    for (std::size_t th = 0; th < f.grid.size(); ++th) {
      const std::size_t ti = g.embedding[i][th];
      if (ti >= g.grids[i].size()) throw InvalidInstance("embedding leaves the split grid");
      for (std::size_t t = 0; t < f.n_inputs; ++t) {
        if (g.at(i, ti, t) != f.at(th, t, i)) {
          throw InvalidInstance("split objective " + std::to_string(i) +
                                " does not reproduce the shared projection at theta " +
                                std::to_string(th) + ", input " + std::to_string(t));
        }
      }
    }
  }
}

namespace {

void check_rewards(const FiniteLanguageFunction& f, const CompositeReward& cr) {
  if (cr.objectives() != f.objectives()) throw InvalidInstance("reward count mismatch");
  for (std::size_t i = 0; i < cr.objectives(); ++i) {
    if (cr.rewards[i].values.size() != f.spaces[i].size()) {
      throw InvalidInstance("reward " + std::to_string(i) + " does not cover S_i");
    }
  }
}

void guard(std::size_t a, std::size_t b, std::size_t c) {
  if (a * b * c > kEnumerationGuard || (b && c && a > kEnumerationGuard / (b * c))) {
    throw std::length_error("enumeration guard exceeded");
  }
}

}  // namespace

std::vector<double> objective_means(const FiniteLanguageFunction& f, const CompositeReward& cr,
                                    std::size_t theta) {
  const std::size_t n = f.objectives();
  std::vector<double> means(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t t = 0; t < f.n_inputs; ++t) s += cr.rewards[i].values[f.at(theta, t, i)];
    means[i] = s / static_cast<double>(f.n_inputs);
  }
  return means;
}

double shared_value(const FiniteLanguageFunction& f, const CompositeReward& cr,
                    std::size_t theta) {
  return cr.compose(objective_means(f, cr, theta));
}

SharedOptimum optimize_shared(const FiniteLanguageFunction& f, const CompositeReward& cr) {
  f.validate();
  check_rewards(f, cr);
  guard(f.grid.size(), f.n_inputs, f.objectives());
  SharedOptimum best{0, shared_value(f, cr, 0)};
  for (std::size_t th = 1; th < f.grid.size(); ++th) {
    const double v = shared_value(f, cr, th);
    if (v > best.value) best = {th, v};
  }
  return best;
}

namespace {

double split_mean(const SplitLanguageFunction& g, const RewardFunction& r, std::size_t i,
                  std::size_t theta_i) {
  double s = 0.0;
  for (std::size_t t = 0; t < g.n_inputs; ++t) s += r.values[g.at(i, theta_i, t)];
  return s / static_cast<double>(g.n_inputs);
}

}  // namespace

SplitOptimum optimize_split(const SplitLanguageFunction& g, const CompositeReward& cr) {
  const std::size_t n = g.objectives();
  if (cr.objectives() != n) throw InvalidInstance("reward count mismatch");
  std::size_t total = 0;
  for (const auto& grid : g.grids) total += grid.size();
  guard(total, g.n_inputs, 1);

  SplitOptimum out;
  out.theta.assign(n, 0);
  out.means.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (g.grids[i].empty()) throw InvalidInstance("empty split grid");
    out.means[i] = split_mean(g, cr.rewards[i], i, 0);
    for (std::size_t th = 1; th < g.grids[i].size(); ++th) {
      const double m = split_mean(g, cr.rewards[i], i, th);
      if (m > out.means[i]) {
        out.means[i] = m;
        out.theta[i] = th;
      }
    }
  }
  out.value = cr.compose(out.means);
  return out;
}

nlohmann::json to_json(const SupremacyReport& r) {
  nlohmann::json j;
  j["instance"] = r.instance;
  j["shared"] = {{"theta", r.shared_theta}, {"value", r.shared_value}, {"means", r.shared_means}};
  j["split"] = {{"theta", r.split_theta}, {"value", r.split_value}, {"means", r.split_means}};
  j["holds"] = r.holds;
  j["objective_dominance"] = r.objective_dominance;
  j["equal"] = r.equal;
  j["separable_optimum"] = r.separable_optimum;
  j["pointwise"] = {{"holds", r.pointwise_holds}, {"violations", r.pointwise_violations}};
  j["mean_pointwise_composite"] = {{"shared", r.shared_mean_pointwise},
                                   {"split", r.split_mean_pointwise}};
  j["hypotheses"] = {{"rewards_monotone", r.rewards_monotone},
                     {"composite_monotone", r.composite_monotone}};
  if (r.probe_theta) {
    j["probe"] = {{"theta", *r.probe_theta}, {"value", r.probe_value}, {"holds", r.probe_holds}};
  }
  return j;
}

SupremacyReport verify_supremacy(const FiniteLanguageFunction& f, const SplitLanguageFunction& g,
                                 const CompositeReward& cr,
                                 std::optional<std::size_t> probe_theta) {
  check_construction(f, g);
  check_rewards(f, cr);
  const std::size_t n = f.objectives();
  const std::size_t T = f.n_inputs;

  SupremacyReport rep;
  rep.rewards_monotone = true;
  std::vector<std::vector<double>> value_sets(n);
  for (std::size_t i = 0; i < n; ++i) {
    rep.rewards_monotone =
        rep.rewards_monotone && verify_reward_monotone(cr.rewards[i], f.spaces[i]);
    value_sets[i] = cr.rewards[i].values;
  }
  rep.composite_monotone = check_monotone(cr.map, value_sets);

  const auto shared = optimize_shared(f, cr);
  const auto split = optimize_split(g, cr);
  rep.shared_theta = shared.theta;
  rep.shared_value = shared.value;
  rep.shared_means = objective_means(f, cr, shared.theta);
  rep.split_theta = split.theta;
  rep.split_value = split.value;
  rep.split_means = split.means;

  rep.holds = rep.shared_value <= rep.split_value + kSupremacyTolerance;
  rep.equal = std::abs(rep.split_value - rep.shared_value) <= kSupremacyTolerance;
  rep.objective_dominance.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    rep.objective_dominance[i] = rep.shared_means[i] <= rep.split_means[i] + kSupremacyTolerance;
  }
  for (std::size_t th = 0; th < f.grid.size() && !rep.separable_optimum; ++th) {
    const auto m = objective_means(f, cr, th);
    bool all = true;
    for (std::size_t i = 0; i < n && all; ++i)
      all = std::abs(m[i] - split.means[i]) <= kSupremacyTolerance;
    rep.separable_optimum = all;
  }

  // One single-input instance per t.
  std::vector<double> r(n);
  for (std::size_t t = 0; t < T; ++t) {
    double best_shared = -INFINITY;
    for (std::size_t th = 0; th < f.grid.size(); ++th) {
      for (std::size_t i = 0; i < n; ++i) r[i] = cr.rewards[i].values[f.at(th, t, i)];
      best_shared = std::max(best_shared, cr.compose(r));
    }
    for (std::size_t i = 0; i < n; ++i) {
      double best = -INFINITY;
      for (std::size_t th = 0; th < g.grids[i].size(); ++th)
        best = std::max(best, cr.rewards[i].values[g.at(i, th, t)]);
      r[i] = best;
    }
    if (best_shared > cr.compose(r) + kSupremacyTolerance) ++rep.pointwise_violations;
  }
  rep.pointwise_holds = rep.pointwise_violations == 0;

  double ss = 0.0, sp = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < n; ++i) r[i] = cr.rewards[i].values[f.at(shared.theta, t, i)];
    ss += cr.compose(r);
    for (std::size_t i = 0; i < n; ++i) r[i] = cr.rewards[i].values[g.at(i, split.theta[i], t)];
    sp += cr.compose(r);
  }
  rep.shared_mean_pointwise = ss / static_cast<double>(T);
  rep.split_mean_pointwise = sp / static_cast<double>(T);

  if (probe_theta) {
    if (*probe_theta >= f.grid.size()) throw std::out_of_range("probe theta outside the grid");
    rep.probe_theta = probe_theta;
    rep.probe_value = shared_value(f, cr, *probe_theta);
    rep.probe_holds = rep.probe_value <= rep.split_value + kSupremacyTolerance;
  }
  return rep;
}

SupremacyReport verify(const RewardInstance& inst, std::optional<std::size_t> probe_theta) {
  auto rep = verify_supremacy(inst.shared, inst.split, inst.cr, probe_theta);
  rep.instance = inst.description;
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

std::size_t draw(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

double draw_real(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace

RewardInstance random_instance(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t T = draw(rng, 1, 5);
  const std::size_t n = draw(rng, 2, 4);
  const std::size_t grid = draw(rng, 4, 64);

  FiniteLanguageFunction f;
  f.n_inputs = T;
  for (std::size_t th = 0; th < grid; ++th) {
    f.grid.push_back({static_cast<double>(th) / static_cast<double>(grid - 1)});
  }

  CompositeReward cr;
  std::vector<std::size_t> dims(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t size = draw(rng, 2, 8);
    dims[i] = draw(rng, 1, 3);
    OutputSpace space;
    for (std::size_t k = 0; k < size; ++k) {
      std::vector<double> p(dims[i]);
      for (auto& x : p) x = static_cast<double>(draw(rng, 0, 4));
      space.points.push_back(std::move(p));
    }
    std::vector<double> a(dims[i]);
    for (auto& x : a) x = draw_real(rng);
    RewardFunction r;
    for (const auto& p : space.points) {
      double v = 0.0;
      for (std::size_t j = 0; j < p.size(); ++j) v += a[j] * p[j];
      r.values.push_back(v);
    }
    f.spaces.push_back(std::move(space));
    cr.rewards.push_back(std::move(r));
  }

  f.outputs.resize(grid * T * n);
  for (std::size_t th = 0; th < grid; ++th)
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t i = 0; i < n; ++i)
        f.outputs[(th * T + t) * n + i] = draw(rng, 0, f.spaces[i].size() - 1);

  std::vector<std::vector<std::vector<double>>> extra_points(n);
  std::vector<std::vector<std::vector<std::size_t>>> extra_outputs(n);
  std::vector<std::size_t> extras(n);
  for (std::size_t i = 0; i < n; ++i) {
    extras[i] = draw(rng, 0, 16);
    for (std::size_t e = 0; e < extras[i]; ++e) {
      extra_points[i].push_back({1.0 + static_cast<double>(e + 1) / 16.0});
      std::vector<std::size_t> outs(T);
      for (auto& o : outs) o = draw(rng, 0, f.spaces[i].size() - 1);
      extra_outputs[i].push_back(std::move(outs));
    }
  }

  switch (draw(rng, 0, 2)) {
    case 0:
      cr.map.kind = CompositionKind::kWeightedSum;
      for (std::size_t i = 0; i < n; ++i) cr.map.weights.push_back(draw_real(rng));
      break;
    case 1:
      cr.map.kind = CompositionKind::kMin;
      break;
    default:
      cr.map.kind = CompositionKind::kShiftedProduct;
      for (const auto& r : cr.rewards) {
        cr.map.shifts.push_back(1.0 - *std::min_element(r.values.begin(), r.values.end()));
      }
      break;
  }

  RewardInstance inst;
  inst.split = split_from_shared(f, extra_points, extra_outputs);
  std::vector<std::size_t> sizes;
  for (const auto& s : f.spaces) sizes.push_back(s.size());
  inst.description = {{"seed", seed},
                      {"inputs", T},
                      {"objectives", n},
                      {"grid_size", grid},
                      {"space_sizes", sizes},
                      {"space_dims", dims},
                      {"extra_split_points", extras},
                      {"composition", to_string(cr.map.kind)}};
  inst.shared = std::move(f);
  inst.cr = std::move(cr);
  return inst;
}

RewardInstance separable_instance(std::uint64_t seed) {
  auto inst = random_instance(seed);
  auto& f = inst.shared;
  const std::size_t n = f.objectives();
  const std::size_t chosen = f.grid.size() / 2;
  std::vector<std::size_t> best(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& v = inst.cr.rewards[i].values;
    best[i] = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  }
  for (std::size_t t = 0; t < f.n_inputs; ++t)
    for (std::size_t i = 0; i < n; ++i) f.outputs[(chosen * f.n_inputs + t) * n + i] = best[i];

  // Rebuild the split model so it stays a faithful extension of the shared one.
  std::vector<std::vector<std::vector<double>>> extra_points(n);
  std::vector<std::vector<std::vector<std::size_t>>> extra_outputs(n);
  const std::size_t base = f.grid.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t th = base; th < inst.split.grids[i].size(); ++th) {
      extra_points[i].push_back(inst.split.grids[i][th]);
      std::vector<std::size_t> outs(f.n_inputs);
      for (std::size_t t = 0; t < f.n_inputs; ++t) outs[t] = inst.split.at(i, th, t);
      extra_outputs[i].push_back(std::move(outs));
    }
  }
  inst.split = split_from_shared(f, extra_points, extra_outputs);
  inst.description["separable_theta"] = chosen;
  return inst;
}

RewardInstance negative_control_instance() {
  // Θ = {a, b}. At a the shared model is best for objective 1, at b for
  // objective 2. M = r_2 - r_1 rewards doing badly on objective 1, which the
  // split model (optimizing each objective on its own) cannot do.
  FiniteLanguageFunction f;
  f.grid = {{0.0}, {1.0}};
  f.n_inputs = 1;
  f.spaces = {OutputSpace{{{0.0}, {1.0}}}, OutputSpace{{{0.0}, {1.0}}}};
  f.outputs = {1, 0, 0, 1};

  CompositeReward cr;
  cr.rewards = {RewardFunction{{0.0, 1.0}, {}}, RewardFunction{{0.0, 1.0}, {}}};
  cr.map.kind = CompositionKind::kWeightedSum;
  cr.map.weights = {-1.0, 1.0};

  RewardInstance inst;
  inst.split = split_from_shared(f, {{}, {}}, {{}, {}});
  inst.shared = std::move(f);
  inst.cr = std::move(cr);
  inst.description = {{"name", "negative_control"},
                      {"inputs", 1},
                      {"objectives", 2},
                      {"grid_size", 2},
                      {"composition", "weighted_sum"},
                      {"weights", {-1.0, 1.0}}};
  return inst;
}

std::uint64_t instance_seed(std::uint64_t seed, std::size_t j) {
  // splitmix64 finalizer over (seed, j)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(j) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::vector<SupremacyReport> lemma_sweep(std::size_t count, std::uint64_t seed) {
  std::vector<SupremacyReport> out(count);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t j = 0; j < count; ++j) {
    const std::uint64_t s = instance_seed(seed, j);
    auto inst = random_instance(s);
    std::mt19937_64 rng(s ^ 0x5DEECE66Dull);
    const std::size_t probe = draw(rng, 0, inst.shared.grid.size() - 1);
    out[j] = verify(inst, probe);
  }
  return out;
}

}  // namespace bicameral::reward
