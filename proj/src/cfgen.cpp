#include "cfbench/cfgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "cfbench/error.hpp"
#include "cfbench/rng.hpp"

namespace cfbench {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::whatif: return "whatif";
    case Method::moc: return "moc";
    case Method::nice_sp: return "nice_sp";
    case Method::nice_pr: return "nice_pr";
  }
  return "whatif";
}

Method parse_method(std::string_view token) {
  for (const Method m : kAllMethods) {
    if (token == to_string(m)) return m;
  }
  throw Error(fmt::format("unknown method '{}'", token));
}

CfRequest CfRequest::make(std::string id, Instance x, const LabeledDataset& data) {
  CfRequest req;
  req.id = std::move(id);
  req.x = std::move(x);
  req.mutable_mask.assign(data.cols(), true);
  for (const auto& spec : data.specs()) req.bounds.emplace_back(spec.min, spec.max);
  return req;
}

void CfRequest::validate(const RandomForestModel& model) const {
  const std::size_t p = model.n_features();
  if (x.size() != p || mutable_mask.size() != p || bounds.size() != p) {
    throw Error(fmt::format("request {}: dimension mismatch with model width {}", id, p));
  }
  if (std::none_of(mutable_mask.begin(), mutable_mask.end(), [](bool b) { return b; })) {
    throw Error(fmt::format("request {}: no mutable feature", id));
  }
  for (const auto& [lo, hi] : bounds) {
    if (!(lo <= hi)) throw Error(fmt::format("request {}: inverted bounds", id));
  }
  if (desired != Label::pass) throw Error(fmt::format("request {}: desired outcome must be pass", id));
  if (model.predict(x) != Label::fail) {
    throw Error(fmt::format("request {}: model already predicts pass", id));
  }
}

namespace {

double validity_objective(const RandomForestModel& model, std::span<const double> cand) {
  const double p_fail = model.predict_proba(cand);
  if (p_fail < kDecisionThreshold) return 0.0;
  return std::max(0.5 - (1.0 - p_fail), kTieShortfall);
}

std::size_t changed(std::span<const double> x, std::span<const double> cand) {
  std::size_t n = 0;
  for (std::size_t j = 0; j < x.size(); ++j) n += x[j] != cand[j];
  return n;
}

double plausibility_objective(std::span<const double> cand, const LabeledDataset& train, const RangeTable& ranges) {
  const std::size_t k = std::min(kPlausibilityNeighbors, train.rows());
  const auto nn = k_nearest(cand, train.features(), Metric::gower, k, ranges);
  double s = 0.0;
  for (const auto& n : nn) s += n.distance;
  return s / static_cast<double>(nn.size());
}

bool immutables_match(const CfRequest& req, std::span<const double> row) {
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (!req.mutable_mask[j] && row[j] != req.x[j]) return false;
  }
  return true;
}

}  // namespace

MocObjectives objectives(std::span<const double> x, std::span<const double> cand, const RandomForestModel& model,
                         const LabeledDataset& train, const RangeTable& ranges) {
  if (x.size() != cand.size() || x.size() != model.n_features() || x.size() != train.cols()) {
    throw Error("objectives: dimension mismatch");
  }
  MocObjectives o;
  o.validity = validity_objective(model, cand);
  o.proximity = gower(x, cand, ranges);
  o.sparsity = changed(x, cand);
  o.plausibility = plausibility_objective(cand, train, ranges);
  return o;
}

MocObjectives objectives(std::span<const double> x, std::span<const double> cand, const RandomForestModel& model,
                         const LabeledDataset& train) {
  return objectives(x, cand, model, train, RangeTable::from(train));
}

PredictedPool::PredictedPool(const RandomForestModel& model, const LabeledDataset& data)
    : model_(&model), data_(&data) {
  if (data.cols() != model.n_features()) throw Error("pool width does not match model");
  predicted_.reserve(data.rows());
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const Label label = model.predict(data.row(i));
    predicted_.push_back(label);
    if (label == Label::pass) {
      predicted_pass_.push_back(i);
      if (data.label(i) == Label::pass) correct_pass_.push_back(i);
    }
  }
}

std::vector<Counterfactual> whatif(const CfRequest& req, const PredictedPool& pool, std::size_t k,
                                   const RangeTable& ranges) {
  req.validate(pool.model());
  std::vector<std::size_t> eligible;
  for (const std::size_t i : pool.predicted_pass()) {
    if (immutables_match(req, pool.data().row(i))) eligible.push_back(i);
  }
  if (eligible.size() < k) {
    throw Error(fmt::format("whatif: request {} needs {} pass-predicted candidates, pool has {} (short by {})",
                            req.id, k, eligible.size(), k - eligible.size()));
  }
  const auto nn = k_nearest(req.x, pool.data().features(), eligible, Metric::gower, k, ranges);
  std::vector<Counterfactual> out;
  out.reserve(nn.size());
  for (std::size_t r = 0; r < nn.size(); ++r) {
    Counterfactual cf;
    cf.values = pool.data().instance(nn[r].index);
    cf.method = Method::whatif;
    cf.request_id = req.id;
    cf.meta.rank = r;
    cf.meta.distance = nn[r].distance;
    cf.meta.source_row = nn[r].index;
    out.push_back(std::move(cf));
  }
  return out;
}

std::vector<Counterfactual> whatif(const CfRequest& req, const RandomForestModel& model, const LabeledDataset& pool,
                                   std::size_t k) {
  const PredictedPool predicted(model, pool);
  return whatif(req, predicted, k, RangeTable::from(pool));
}

Counterfactual nice(const CfRequest& req, const PredictedPool& pool, NiceReward reward, const RangeTable& ranges) {
  req.validate(pool.model());
  const auto& model = pool.model();
  if (pool.correct_pass().empty()) {
    throw Error(fmt::format("nice: request {}: no correctly classified pass instance in the data", req.id));
  }
  const auto nun = k_nearest(req.x, pool.data().features(), pool.correct_pass(), Metric::heom, 1, ranges).front();
  const auto z = pool.data().row(nun.index);

  const Method method = reward == NiceReward::sparsity ? Method::nice_sp : Method::nice_pr;
  Counterfactual cf;
  cf.method = method;
  cf.request_id = req.id;
  cf.meta.source_row = nun.index;
  Instance current = req.x;
  double current_pass = model.predict_pass(current);
  Instance trial;
  for (;;) {
    std::optional<std::size_t> best;
    double best_reward = -std::numeric_limits<double>::infinity();
    double best_pass = 0.0;
    for (std::size_t j = 0; j < current.size(); ++j) {
      if (!req.mutable_mask[j] || current[j] == z[j]) continue;
      trial = current;
      trial[j] = z[j];
      const double trial_pass = model.predict_pass(trial);
      const double gain = trial_pass - current_pass;
      double score = gain;
      if (reward == NiceReward::proximity) {
        const double cost = gower(current, trial, ranges);
        if (cost > 0.0) {
          score = gain / cost;
        } else {
          score = gain > 0.0 ? std::numeric_limits<double>::infinity()
                             : gain < 0.0 ? -std::numeric_limits<double>::infinity() : 0.0;
        }
      }
      if (!best || score > best_reward) {
        best = j;
        best_reward = score;
        best_pass = trial_pass;
      }
    }
    if (!best) break;
    current[*best] = z[*best];
    current_pass = best_pass;
    cf.meta.copied.push_back(*best);
    if (1.0 - current_pass < kDecisionThreshold) break;
  }
  cf.meta.iterations = cf.meta.copied.size();
  if (model.predict(current) != Label::pass) {
    throw Error(fmt::format("nice: request {}: no valid counterfactual reachable through mutable features", req.id));
  }
  cf.values = std::move(current);
  return cf;
}

Counterfactual nice(const CfRequest& req, const RandomForestModel& model, const LabeledDataset& train,
                    NiceReward reward) {
  const PredictedPool predicted(model, train);
  return nice(req, predicted, reward, RangeTable::from(train));
}

void MocConfig::validate() const {
  if (population < 2 || population % 2 != 0) throw Error("MOC population must be even and >= 2");
  if (generations == 0) throw Error("MOC needs at least one generation");
  if (!(mutation_rate > 0.0 && mutation_rate < 1.0)) throw Error("MOC mutation rate must lie in (0, 1)");
  if (!(crossover_rate > 0.0 && crossover_rate < 1.0)) throw Error("MOC crossover rate must lie in (0, 1)");
}

bool dominates(const std::array<double, 4>& a, const std::array<double, 4>& b) {
  bool strictly = false;
  for (std::size_t m = 0; m < a.size(); ++m) {
    if (a[m] > b[m]) return false;
    if (a[m] < b[m]) strictly = true;
  }
  return strictly;
}

std::vector<std::vector<std::size_t>> non_dominated_fronts(const std::vector<std::array<double, 4>>& points) {
  const std::size_t n = points.size();
  std::vector<std::vector<std::size_t>> dominated_by(n);
  std::vector<std::size_t> domination_count(n, 0);
  std::vector<std::vector<std::size_t>> fronts;
  std::vector<std::size_t> current;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (dominates(points[a], points[b])) {
        dominated_by[a].push_back(b);
        ++domination_count[b];
      } else if (dominates(points[b], points[a])) {
        dominated_by[b].push_back(a);
        ++domination_count[a];
      }
    }
  }
  for (std::size_t a = 0; a < n; ++a) {
    if (domination_count[a] == 0) current.push_back(a);
  }
  while (!current.empty()) {
    std::vector<std::size_t> next;
    for (const std::size_t a : current) {
      for (const std::size_t b : dominated_by[a]) {
        if (--domination_count[b] == 0) next.push_back(b);
      }
    }
    std::sort(next.begin(), next.end());
    fronts.push_back(std::move(current));
    current = std::move(next);
  }
  return fronts;
}

std::vector<double> crowding_distance(const std::vector<std::array<double, 4>>& points,
                                      const std::vector<std::size_t>& front) {
  const std::size_t n = front.size();
  std::vector<double> dist(n, 0.0);
  if (n <= 2) {
    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    return dist;
  }
  std::vector<std::size_t> order(n);
  for (std::size_t m = 0; m < 4; ++m) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return points[front[a]][m] < points[front[b]][m]; });
    const double lo = points[front[order.front()]][m];
    const double hi = points[front[order.back()]][m];
    dist[order.front()] = std::numeric_limits<double>::infinity();
    dist[order.back()] = std::numeric_limits<double>::infinity();
    if (hi <= lo) continue;
    for (std::size_t k = 1; k + 1 < n; ++k) {
      dist[order[k]] += (points[front[order[k + 1]]][m] - points[front[order[k - 1]]][m]) / (hi - lo);
    }
  }
  return dist;
}

namespace {

struct Individual {
  Instance values;
  std::array<double, 4> objectives{};
  std::size_t generation = 0;
  std::size_t rank = 0;
  double crowding = 0.0;
};

class MocSearch {
 public:
  MocSearch(const CfRequest& req, const RandomForestModel& model, const LabeledDataset& train, const MocConfig& cfg,
            const RangeTable& ranges)
      : req_(req), model_(model), train_(train), cfg_(cfg), ranges_(ranges), rng_(cfg.seed) {
    for (std::size_t j = 0; j < req.x.size(); ++j) {
      if (req.mutable_mask[j]) mutable_.push_back(j);
    }
  }

  std::vector<Counterfactual> run() {
    std::vector<Individual> population(cfg_.population);
    for (auto& ind : population) ind = initial();
    assign_ranks(population);

    for (std::size_t g = 1; g <= cfg_.generations; ++g) {
      std::vector<Individual> merged = population;
      merged.reserve(2 * cfg_.population);
      while (merged.size() < 2 * cfg_.population) {
        Individual a = population[tournament(population)];
        Individual b = population[tournament(population)];
        crossover(a, b);
        mutate(a);
        mutate(b);
        for (Individual* child : {&a, &b}) {
          child->generation = g;
          evaluate(*child);
          merged.push_back(std::move(*child));
        }
      }
      population = select(std::move(merged));
    }
    return finish(population);
  }

 private:
  void clip(Instance& v, std::size_t j) const {
    v[j] = std::clamp(v[j], req_.bounds[j].first, req_.bounds[j].second);
  }

  void evaluate(Individual& ind) const {
    ind.objectives = objectives(req_.x, ind.values, model_, train_, ranges_).as_array();
  }

  Individual initial() {
    Individual ind;
    ind.values = req_.x;
    const std::size_t count = 1 + static_cast<std::size_t>(rng_.index(mutable_.size()));
    std::vector<std::size_t> picks = mutable_;
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t r = k + static_cast<std::size_t>(rng_.index(picks.size() - k));
      std::swap(picks[k], picks[r]);
      const std::size_t j = picks[k];
      ind.values[j] = train_.features()(static_cast<std::size_t>(rng_.index(train_.rows())), j);
      clip(ind.values, j);
    }
    evaluate(ind);
    return ind;
  }

  static bool better(const Individual& a, const Individual& b) {
    return a.rank < b.rank || (a.rank == b.rank && a.crowding > b.crowding);
  }

  std::size_t tournament(const std::vector<Individual>& population) {
    const auto a = static_cast<std::size_t>(rng_.index(population.size()));
    const auto b = static_cast<std::size_t>(rng_.index(population.size()));
    return better(population[b], population[a]) ? b : a;
  }

  void crossover(Individual& a, Individual& b) {
    if (!rng_.bernoulli(cfg_.crossover_rate)) return;
    for (const std::size_t j : mutable_) {
      if (rng_.bernoulli(0.5)) std::swap(a.values[j], b.values[j]);
    }
  }

  void mutate(Individual& ind) {
    for (const std::size_t j : mutable_) {
      if (rng_.bernoulli(cfg_.mutation_rate)) mutate_gene(ind.values, j);
    }
  }

  void mutate_gene(Instance& v, std::size_t j) {
    if (v[j] != req_.x[j] && rng_.bernoulli(0.5)) {
      v[j] = req_.x[j];
      return;
    }
    const double scale = 0.1 * (req_.bounds[j].second - req_.bounds[j].first);
    v[j] += scale * rng_.normal();
    clip(v, j);
  }

  static std::vector<std::array<double, 4>> points_of(const std::vector<Individual>& pop) {
    std::vector<std::array<double, 4>> pts;
    pts.reserve(pop.size());
    for (const auto& ind : pop) pts.push_back(ind.objectives);
    return pts;
  }

  static void assign_ranks(std::vector<Individual>& pop) {
    const auto pts = points_of(pop);
    const auto fronts = non_dominated_fronts(pts);
    for (std::size_t r = 0; r < fronts.size(); ++r) {
      const auto crowd = crowding_distance(pts, fronts[r]);
      for (std::size_t k = 0; k < fronts[r].size(); ++k) {
        pop[fronts[r][k]].rank = r;
        pop[fronts[r][k]].crowding = crowd[k];
      }
    }
  }

  std::vector<Individual> select(std::vector<Individual> merged) const {
    const auto pts = points_of(merged);
    const auto fronts = non_dominated_fronts(pts);
    std::vector<Individual> next;
    next.reserve(cfg_.population);
    for (std::size_t r = 0; r < fronts.size() && next.size() < cfg_.population; ++r) {
      const auto crowd = crowding_distance(pts, fronts[r]);
      std::vector<std::size_t> order(fronts[r].size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      if (next.size() + order.size() > cfg_.population) {
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return crowd[a] > crowd[b]; });
        order.resize(cfg_.population - next.size());
      }
      for (const std::size_t k : order) next.push_back(std::move(merged[fronts[r][k]]));
    }
    assign_ranks(next);
    return next;
  }

  std::vector<Counterfactual> finish(const std::vector<Individual>& population) const {
    std::vector<const Individual*> valid;
    for (const auto& ind : population) {
      if (ind.rank == 0 && ind.objectives[0] == 0.0) valid.push_back(&ind);
    }
    std::stable_sort(valid.begin(), valid.end(), [](const Individual* a, const Individual* b) {
      if (a->objectives[1] != b->objectives[1]) return a->objectives[1] < b->objectives[1];
      if (a->objectives[2] != b->objectives[2]) return a->objectives[2] < b->objectives[2];
      if (a->objectives[3] != b->objectives[3]) return a->objectives[3] < b->objectives[3];
      return a->values < b->values;
    });
    std::vector<Counterfactual> out;
    for (std::size_t i = 0; i < valid.size(); ++i) {
      if (i > 0 && valid[i]->values == valid[i - 1]->values) continue;
      Counterfactual cf;
      cf.values = valid[i]->values;
      cf.method = Method::moc;
      cf.request_id = req_.id;
      cf.meta.generation = valid[i]->generation;
      out.push_back(std::move(cf));
    }
    return out;
  }

  const CfRequest& req_;
  const RandomForestModel& model_;
  const LabeledDataset& train_;
  const MocConfig& cfg_;
  const RangeTable& ranges_;
  Rng rng_;
  std::vector<std::size_t> mutable_;
};

}  // namespace

std::vector<Counterfactual> moc(const CfRequest& req, const RandomForestModel& model, const LabeledDataset& train,
                                const MocConfig& cfg, const RangeTable& ranges) {
  cfg.validate();
  req.validate(model);
  if (train.cols() != model.n_features()) throw Error("moc: training data width does not match model");
  return MocSearch(req, model, train, cfg, ranges).run();
}

std::vector<Counterfactual> moc(const CfRequest& req, const RandomForestModel& model, const LabeledDataset& train,
                                const MocConfig& cfg) {
  return moc(req, model, train, cfg, RangeTable::from(train));
}

}  // namespace cfbench
