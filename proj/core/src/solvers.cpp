#include "llp/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "llp/error.hpp"
#include "llp/parallel.hpp"
#include "llp/random.hpp"

namespace llp {

const char* to_string(Solver s) {
  switch (s) {
    case Solver::alter_psvm: return "alter-psvm";
    case Solver::mean_map: return "mean-map";
    case Solver::inv_cal: return "inv-cal";
    case Solver::baseline: return "baseline";
  }
  return "?";
}

const char* to_string(Init i) {
  switch (i) {
    case Init::mean_map: return "mean-map";
    case Init::inv_cal: return "inv-cal";
    case Init::random: return "random";
  }
  return "?";
}

Solver solver_from_string(const std::string& s) {
  for (Solver v : {Solver::alter_psvm, Solver::mean_map, Solver::inv_cal, Solver::baseline})
    if (s == to_string(v)) return v;
  fail_usage("unknown solver '" + s + "' (alter-psvm, mean-map, inv-cal, baseline)");
}

Init init_from_string(const std::string& s) {
  for (Init v : {Init::mean_map, Init::inv_cal, Init::random})
    if (s == to_string(v)) return v;
  fail_usage("unknown initializer '" + s + "' (mean-map, inv-cal, random)");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// A subset of the bags of a dataset, sharing its instances.
struct BagView {
  const std::vector<Instance>* instances = nullptr;
  std::vector<const Bag*> bags;

  static BagView of(const BagDataset& data) {
    BagView v;
    v.instances = &data.instances;
    for (const Bag& b : data.bags) v.bags.push_back(&b);
    return v;
  }

  const Instance& at(std::size_t i) const { return (*instances)[i]; }

  std::size_t dimension() const {
    std::uint32_t d = 0;
    for (const Bag* b : bags)
      for (std::size_t m : b->members) d = std::max(d, at(m).max_index());
    return static_cast<std::size_t>(d) + 1;
  }

  std::size_t slot_count() const {
    std::size_t n = 0;
    for (const Bag* b : bags) n += b->size();
    return n;
  }

  void validate() const {
    if (bags.empty()) fail_data("dataset has no bags");
    for (const Bag* b : bags) {
      if (b->members.empty()) fail_data("empty bag");
      for (std::size_t m : b->members)
        if (m >= instances->size()) fail_data("dangling bag member");
    }
  }
};

double sparse_dot(std::span<const double> w, const Instance& x) {
  double s = 0.0;
  for (const Feature& f : x.features())
    if (f.index < w.size()) s += w[f.index] * f.value;
  return s;
}

double squared_norm(const Instance& x) {
  double s = 0.0;
  for (const Feature& f : x.features()) s += f.value * f.value;
  return s;
}

double bag_error(const LinearHypothesis& h, const BagView& view) {
  double total = 0.0;
  for (const Bag* b : view.bags) {
    std::size_t positives = 0;
    for (std::size_t m : b->members) positives += h.predict(view.at(m)) == Label::positive;
    total += std::abs(static_cast<double>(positives) / static_cast<double>(b->size()) -
                      b->observed_proportion);
  }
  return total / static_cast<double>(view.bags.size());
}

// ---------------------------------------------------------------------------
// Dual coordinate descent for the L1-loss linear SVM with the bias handled as
// an extra constant feature:
//   min 1/2 (|w|^2 + b^2) + C sum_i max(0, 1 - y_i (w.x_i + b)).

struct SvmProblem {
  std::vector<const Instance*> x;
  std::vector<double> qdiag;  // |x_i|^2 + 1
};

struct SvmState {
  std::vector<double> alpha;
  std::vector<double> w;
  double b = 0.0;
};

void rebuild_primal(const SvmProblem& p, std::span<const Label> y, SvmState& s) {
  std::fill(s.w.begin(), s.w.end(), 0.0);
  s.b = 0.0;
  for (std::size_t i = 0; i < p.x.size(); ++i) {
    if (s.alpha[i] == 0.0) continue;
    const double ay = s.alpha[i] * to_int(y[i]);
    for (const Feature& f : p.x[i]->features()) s.w[f.index] += ay * f.value;
    s.b += ay;
  }
}

// liblinear-style solver with shrinking: bounded variables whose gradient
// points outward are dropped from the active set until the active set
// converges, then the full set is re-checked. Returns true when the full set
// met the tolerance.
bool solve_svm(const SvmProblem& p, std::span<const Label> y, double C, double tolerance,
               int max_epochs, Rng& rng, SvmState& s) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const std::size_t n = p.x.size();
  std::vector<std::size_t> index(n);
  std::iota(index.begin(), index.end(), std::size_t{0});
  std::size_t active = n;
  double pg_max_old = kInf;
  double pg_min_old = -kInf;
  for (int epoch = 0; epoch < max_epochs; ++epoch) {
    for (std::size_t i = active; i > 1; --i) std::swap(index[i - 1], index[rng.below(i)]);
    double pg_max = -kInf;
    double pg_min = kInf;
    for (std::size_t t = 0; t < active; ++t) {
      const std::size_t i = index[t];
      const double yi = to_int(y[i]);
      const double g = yi * (sparse_dot(s.w, *p.x[i]) + s.b) - 1.0;
      double pg = 0.0;
      if (s.alpha[i] == 0.0) {
        if (g > pg_max_old) {
          std::swap(index[t--], index[--active]);
          continue;
        }
        pg = std::min(g, 0.0);
      } else if (s.alpha[i] == C) {
        if (g < pg_min_old) {
          std::swap(index[t--], index[--active]);
          continue;
        }
        pg = std::max(g, 0.0);
      } else {
        pg = g;
      }
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      if (std::abs(pg) > 1e-12) {
        const double old = s.alpha[i];
        s.alpha[i] = std::clamp(old - g / p.qdiag[i], 0.0, C);
        const double d = (s.alpha[i] - old) * yi;
        for (const Feature& f : p.x[i]->features()) s.w[f.index] += d * f.value;
        s.b += d;
      }
    }
    if (pg_max - pg_min <= tolerance) {
      if (active == n) return true;
      active = n;
      pg_max_old = kInf;
      pg_min_old = -kInf;
      continue;
    }
    pg_max_old = pg_max <= 0.0 ? kInf : pg_max;
    pg_min_old = pg_min >= 0.0 ? -kInf : pg_min;
  }
  return false;
}

SvmProblem make_problem(const std::vector<const Instance*>& xs) {
  SvmProblem p;
  p.x = xs;
  p.qdiag.reserve(xs.size());
  for (const Instance* x : xs) p.qdiag.push_back(squared_norm(*x) + 1.0);
  return p;
}

// ---------------------------------------------------------------------------

std::vector<double> bag_mean(const BagView& view, const Bag& bag, std::size_t dim) {
  std::vector<double> mean(dim, 0.0);
  for (std::size_t m : bag.members)
    for (const Feature& f : view.at(m).features()) mean[f.index] += f.value;
  const double inv = 1.0 / static_cast<double>(bag.size());
  for (double& v : mean) v *= inv;
  return mean;
}

ClassMeans class_means(const BagView& view) {
  view.validate();
  const std::size_t dim = view.dimension();
  double spp = 0.0, spq = 0.0, sqq = 0.0;
  std::vector<double> rp(dim, 0.0), rq(dim, 0.0);
  for (const Bag* b : view.bags) {
    const double p = b->observed_proportion;
    const double q = 1.0 - p;
    spp += p * p;
    spq += p * q;
    sqq += q * q;
    const std::vector<double> mean = bag_mean(view, *b, dim);
    for (std::size_t j = 0; j < dim; ++j) {
      rp[j] += p * mean[j];
      rq[j] += q * mean[j];
    }
  }
  const double det = spp * sqq - spq * spq;
  if (spp == 0.0 || sqq == 0.0 || det <= 1e-12 * spp * sqq)
    fail_numerical("degenerate proportions for mean-map");
  ClassMeans out;
  out.positive.resize(dim);
  out.negative.resize(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    out.positive[j] = (sqq * rp[j] - spq * rq[j]) / det;
    out.negative[j] = (spp * rq[j] - spq * rp[j]) / det;
  }
  out.positive[0] = out.negative[0] = 0.0;
  return out;
}

double prior_bias(std::span<const double> w, const BagView& view) {
  std::vector<double> s;
  double weighted = 0.0;
  for (const Bag* b : view.bags) {
    weighted += b->observed_proportion * static_cast<double>(b->size());
    for (std::size_t m : b->members) s.push_back(sparse_dot(w, view.at(m)));
  }
  const std::size_t n = s.size();
  if (n == 0) fail_data("dataset has no bags");
  const long target = round_half_up(weighted);  // pi * N
  std::sort(s.begin(), s.end(), std::greater<>());
  // Candidate cut c puts s[0..c) on the positive side; only cuts between
  // distinct values are realizable.
  std::size_t best = 0;
  long best_gap = std::numeric_limits<long>::max();
  for (std::size_t c = 0; c <= n; ++c) {
    if (c > 0 && c < n && s[c - 1] == s[c]) continue;
    const long gap = std::abs(static_cast<long>(c) - target);
    if (gap < best_gap) {
      best_gap = gap;
      best = c;
    }
  }
  if (best == 0) return -s.front() - 1.0;
  if (best == n) return -s.back() + 1.0;
  return -0.5 * (s[best - 1] + s[best]);
}

LinearHypothesis mean_map_hypothesis(const BagView& view) {
  const ClassMeans means = class_means(view);
  std::vector<double> w(means.positive.size());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = means.positive[j] - means.negative[j];
  const double b = prior_bias(w, view);
  return LinearHypothesis(std::move(w), b);
}

LinearHypothesis inv_cal_hypothesis(const BagView& view, const TrainConfig& config) {
  view.validate();
  const std::size_t dim = view.dimension();
  std::vector<RegressionPoint> points;
  points.reserve(view.bags.size());
  for (const Bag* b : view.bags)
    points.push_back(RegressionPoint{bag_mean(view, *b, dim), 2.0 * b->observed_proportion - 1.0, 1.0});
  return fit_insensitive_regression(points, config.C, config.insensitivity, 1e-4, 2000, config.seed);
}

LinearHypothesis random_hypothesis(const BagView& view, Rng rng) {
  std::vector<double> w(view.dimension(), 0.0);
  for (std::size_t j = 1; j < w.size(); ++j) w[j] = 2.0 * rng.uniform() - 1.0;
  const double b = prior_bias(w, view);
  return LinearHypothesis(std::move(w), b);
}

// ---------------------------------------------------------------------------

struct AlterRun {
  LinearHypothesis h;
  double bag_error = 0.0;
  std::vector<double> trace;
  std::vector<Label> labels;
  std::vector<std::string> warnings;
  int outer_iterations = 0;
};

double proportion_penalty(const BagView& view, std::span<const Label> labels) {
  double total = 0.0;
  std::size_t offset = 0;
  for (const Bag* b : view.bags) {
    std::size_t positives = 0;
    for (std::size_t t = 0; t < b->size(); ++t) positives += labels[offset + t] == Label::positive;
    total += std::abs(static_cast<double>(positives) / static_cast<double>(b->size()) -
                      b->observed_proportion);
    offset += b->size();
  }
  return total;
}

double joint_objective(const SvmState& s, std::span<const double> decision, std::span<const Label> labels,
                       const BagView& view, double C, double C_p) {
  double reg = s.b * s.b;
  for (double v : s.w) reg += v * v;
  return 0.5 * reg + C * hinge_cost(decision, labels) + C_p * proportion_penalty(view, labels);
}

void decision_values(const SvmProblem& p, std::span<const double> w, double b, std::vector<double>& out) {
  out.resize(p.x.size());
  for (std::size_t i = 0; i < p.x.size(); ++i) out[i] = sparse_dot(w, *p.x[i]) + b;
}

void all_label_steps(const BagView& view, std::span<const double> decision, double C, double C_p,
                     std::vector<Label>& labels) {
  std::size_t offset = 0;
  for (const Bag* b : view.bags) {
    label_step(decision.subspan(offset, b->size()), b->observed_proportion, C, C_p,
               std::span<Label>(labels).subspan(offset, b->size()));
    offset += b->size();
  }
}

AlterRun alternate(const BagView& view, const LinearHypothesis& init, const TrainConfig& config,
                   Rng rng) {
  std::vector<const Instance*> xs;
  for (const Bag* b : view.bags)
    for (std::size_t m : b->members) xs.push_back(&view.at(m));
  const SvmProblem problem = make_problem(xs);
  const std::size_t n = xs.size();

  AlterRun run;
  std::vector<double> decision(n);
  for (std::size_t i = 0; i < n; ++i) decision[i] = init.decision_value(*xs[i]);
  std::vector<Label> labels(n, Label::negative);
  all_label_steps(view, decision, config.C, config.C_p, labels);

  SvmState state;
  state.alpha.assign(n, 0.0);
  state.w.assign(view.dimension(), 0.0);
  bool converged = false;
  bool inner_warned = false;
  for (int it = 0; it < config.max_outer_iters; ++it) {
    run.outer_iterations = it + 1;
    // Step A: labels fixed, solve the SVM warm-started from the previous duals.
    SvmState candidate = state;
    rebuild_primal(problem, labels, candidate);
    if (!solve_svm(problem, labels, config.C, config.inner_tolerance, config.inner_max_epochs, rng,
                   candidate) &&
        !inner_warned) {
      run.warnings.push_back("inner SVM solve hit the epoch cap before reaching tolerance");
      inner_warned = true;
    }
    decision_values(problem, candidate.w, candidate.b, decision);
    double objective = joint_objective(candidate, decision, labels, view, config.C, config.C_p);
    if (!run.trace.empty() && objective > run.trace.back()) {
      // The approximate inner solve made things worse; keep the previous model.
      decision_values(problem, state.w, state.b, decision);
      objective = run.trace.back();
    } else {
      state = std::move(candidate);
    }
    run.trace.push_back(objective);

    // Step B: (w,b) fixed, best labels per bag.
    std::vector<Label> next = labels;
    all_label_steps(view, decision, config.C, config.C_p, next);
    run.trace.push_back(joint_objective(state, decision, next, view, config.C, config.C_p));
    if (next == labels) {
      converged = true;
      break;
    }
    labels = std::move(next);
  }
  if (!converged) run.warnings.push_back("latent labels still changing after max_outer_iters");

  run.h = LinearHypothesis(state.w, state.b);
  run.bag_error = bag_error(run.h, view);
  run.labels = std::move(labels);
  return run;
}

TrainResult alter_psvm(const BagView& view, const TrainConfig& config) {
  const auto start = Clock::now();
  view.validate();
  const Rng base(config.seed);

  std::vector<Init> starts;
  if (config.restarts <= 1) {
    starts.push_back(config.init);
  } else {
    starts = {Init::mean_map, Init::inv_cal};
    for (int i = 2; i < config.restarts; ++i) starts.push_back(Init::random);
  }

  TrainResult best;
  bool have = false;
  std::vector<std::string> warnings;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    LinearHypothesis init;
    try {
      switch (starts[i]) {
        case Init::mean_map: init = mean_map_hypothesis(view); break;
        case Init::inv_cal: init = inv_cal_hypothesis(view, config); break;
        case Init::random: init = random_hypothesis(view, base.derive(1000 + i)); break;
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::numerical) throw;
      warnings.push_back(std::string(to_string(starts[i])) + " initializer skipped: " + e.what());
      continue;
    }
    AlterRun run = alternate(view, init, config, base.derive(i));
    if (!have || run.bag_error < best.final_bag_error) {
      best.hypothesis = std::move(run.h);
      best.final_bag_error = run.bag_error;
      best.objective_trace = std::move(run.trace);
      best.latent_labels = std::move(run.labels);
      best.initializer = starts[i];
      best.outer_iterations = run.outer_iterations;
      best.warnings = std::move(run.warnings);
      have = true;
    }
  }
  if (!have) fail_numerical("alter-psvm: every initializer failed");
  best.warnings.insert(best.warnings.begin(), warnings.begin(), warnings.end());
  best.wall_time = seconds_since(start);
  return best;
}

TrainResult train_view(const BagView& view, const TrainConfig& config) {
  switch (config.solver) {
    case Solver::alter_psvm:
      return alter_psvm(view, config);
    case Solver::mean_map: {
      const auto start = Clock::now();
      TrainResult r;
      r.hypothesis = mean_map_hypothesis(view);
      r.final_bag_error = bag_error(r.hypothesis, view);
      r.initializer = Init::mean_map;
      r.wall_time = seconds_since(start);
      return r;
    }
    case Solver::inv_cal: {
      const auto start = Clock::now();
      TrainResult r;
      r.hypothesis = inv_cal_hypothesis(view, config);
      r.final_bag_error = bag_error(r.hypothesis, view);
      r.initializer = Init::inv_cal;
      r.wall_time = seconds_since(start);
      return r;
    }
    case Solver::baseline:
      break;
  }
  fail_usage("the baseline is a per-group rule; use train_baseline");
}

}  // namespace

ClassMeans estimate_class_means(const BagDataset& data) { return class_means(BagView::of(data)); }

double prior_matching_bias(const std::vector<double>& weights, const BagDataset& data) {
  const BagView view = BagView::of(data);
  view.validate();
  return prior_bias(weights, view);
}

LinearHypothesis fit_insensitive_regression(std::span<const RegressionPoint> points, double C,
                                            double insensitivity, double tolerance, int max_epochs,
                                            std::uint64_t seed) {
  if (points.empty()) fail_data("dataset has no bags");
  if (!(C > 0.0)) fail_usage("C must be positive");
  const std::size_t dim = points.front().x.size();
  for (const auto& p : points)
    if (p.x.size() != dim) fail_usage("regression points must share one dimension");

  // Dual: min 1/2 beta'Q beta - t'beta + insensitivity |beta|_1, |beta_k| <= C weight_k,
  // with w = sum beta_k x_k and the bias as an extra unit feature.
  const std::size_t n = points.size();
  std::vector<double> beta(n, 0.0), q(n, 0.0), w(dim, 0.0);
  double b = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double s = 1.0;
    for (std::size_t j = 1; j < dim; ++j) s += points[k].x[j] * points[k].x[j];
    q[k] = s;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed, 7);
  for (int epoch = 0; epoch < max_epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double worst = 0.0;
    for (std::size_t k : order) {
      const auto& pt = points[k];
      const double upper = C * pt.weight;
      double pred = b;
      for (std::size_t j = 1; j < dim; ++j) pred += w[j] * pt.x[j];
      const double g = pred - pt.target;
      const double gp = g + insensitivity;
      const double gn = g - insensitivity;
      double violation = 0.0;
      if (beta[k] == 0.0)
        violation = gp < 0.0 ? -gp : (gn > 0.0 ? gn : 0.0);
      else if (beta[k] >= upper)
        violation = gp > 0.0 ? gp : 0.0;
      else if (beta[k] <= -upper)
        violation = gn < 0.0 ? -gn : 0.0;
      else
        violation = beta[k] > 0.0 ? std::abs(gp) : std::abs(gn);
      worst = std::max(worst, violation);

      double z;
      if (gp < q[k] * beta[k])
        z = -gp / q[k];
      else if (gn > q[k] * beta[k])
        z = -gn / q[k];
      else
        z = -beta[k];
      if (std::abs(z) < 1e-14) continue;
      const double updated = std::clamp(beta[k] + z, -upper, upper);
      const double d = updated - beta[k];
      beta[k] = updated;
      for (std::size_t j = 1; j < dim; ++j) w[j] += d * pt.x[j];
      b += d;
    }
    if (worst <= tolerance) break;
  }
  return LinearHypothesis(std::move(w), b);
}

LabelStepChoice label_step(std::span<const double> decision_values, double observed_proportion,
                           double C, double C_p, std::span<Label> labels) {
  const std::size_t r = decision_values.size();
  if (r == 0) fail_data("empty bag");
  if (labels.size() != r) fail_usage("label_step: size mismatch");
  std::vector<std::size_t> order(r);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return decision_values[a] > decision_values[b];
  });
  // prefix[j]: cost of labeling the top j members +1; negatives likewise.
  std::vector<double> pos_prefix(r + 1, 0.0), neg_prefix(r + 1, 0.0);
  for (std::size_t t = 0; t < r; ++t) {
    const double s = decision_values[order[t]];
    pos_prefix[t + 1] = pos_prefix[t] + std::max(0.0, 1.0 - s);
    neg_prefix[t + 1] = neg_prefix[t] + std::max(0.0, 1.0 + s);
  }
  const auto cost = [&](long k) {
    const auto ku = static_cast<std::size_t>(k);
    return C * (pos_prefix[ku] + (neg_prefix[r] - neg_prefix[ku])) +
           C_p * std::abs(static_cast<double>(k) / static_cast<double>(r) - observed_proportion);
  };
  const long k = std::clamp<long>(round_half_up(observed_proportion * static_cast<double>(r)), 0,
                                  static_cast<long>(r));
  LabelStepChoice best{static_cast<std::size_t>(k), cost(k)};
  for (long alt : {k - 1, k + 1}) {
    if (alt < 0 || alt > static_cast<long>(r)) continue;
    const double c = cost(alt);
    if (c < best.cost) best = {static_cast<std::size_t>(alt), c};
  }
  for (std::size_t t = 0; t < r; ++t)
    labels[order[t]] = t < best.positives ? Label::positive : Label::negative;
  return best;
}

double hinge_cost(std::span<const double> decision_values, std::span<const Label> labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    total += std::max(0.0, 1.0 - to_int(labels[i]) * decision_values[i]);
  return total;
}

LinearHypothesis train_supervised_svm(std::span<const Instance> instances, double C,
                                      double tolerance, int max_epochs, std::uint64_t seed) {
  if (instances.empty()) fail_data("no instances");
  std::vector<const Instance*> xs;
  std::vector<Label> y;
  std::uint32_t dim = 0;
  for (const Instance& x : instances) {
    xs.push_back(&x);
    y.push_back(x.true_label());
    dim = std::max(dim, x.max_index());
  }
  const SvmProblem problem = make_problem(xs);
  SvmState state;
  state.alpha.assign(xs.size(), 0.0);
  state.w.assign(dim + 1, 0.0);
  Rng rng(seed);
  solve_svm(problem, y, C, tolerance, max_epochs, rng, state);
  return LinearHypothesis(state.w, state.b);
}

TrainResult train_mean_map(const BagDataset& data, const TrainConfig& config) {
  TrainConfig c = config;
  c.solver = Solver::mean_map;
  return train_view(BagView::of(data), c);
}

TrainResult train_inv_cal(const BagDataset& data, const TrainConfig& config) {
  TrainConfig c = config;
  c.solver = Solver::inv_cal;
  return train_view(BagView::of(data), c);
}

TrainResult train_alter_psvm(const BagDataset& data, const TrainConfig& config) {
  return alter_psvm(BagView::of(data), config);
}

TrainResult train(const BagDataset& data, const TrainConfig& config) {
  return train_view(BagView::of(data), config);
}

Label BaselinePredictor::predict(const std::string& group, bool* used_fallback) const {
  const auto it = group_label.find(group);
  if (used_fallback) *used_fallback = it == group_label.end();
  return it == group_label.end() ? fallback : it->second;
}

namespace {

std::string group_name(const BagDataset& data, std::size_t k) {
  const auto it = data.metadata.find("group." + std::to_string(k));
  return it != data.metadata.end() ? it->second : std::to_string(k);
}

}  // namespace

BaselinePredictor train_baseline(const BagDataset& group_bags) {
  if (group_bags.bags.empty()) fail_data("dataset has no bags");
  BaselinePredictor out;
  double positives = 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < group_bags.bags.size(); ++k) {
    const Bag& bag = group_bags.bags[k];
    out.group_label[group_name(group_bags, k)] =
        bag.observed_proportion > 0.5 ? Label::positive : Label::negative;
    positives += bag.observed_proportion * static_cast<double>(bag.size());
    total += static_cast<double>(bag.size());
  }
  out.fallback = positives / total > 0.5 ? Label::positive : Label::negative;
  return out;
}

double baseline_bag_error(const BaselinePredictor& baseline, const BagDataset& group_bags) {
  if (group_bags.bags.empty()) fail_data("dataset has no bags");
  double total = 0.0;
  for (std::size_t k = 0; k < group_bags.bags.size(); ++k) {
    const double predicted = baseline.predict(group_name(group_bags, k)) == Label::positive ? 1.0 : 0.0;
    total += std::abs(predicted - group_bags.bags[k].observed_proportion);
  }
  return total / static_cast<double>(group_bags.bags.size());
}

CrossValidationResult cross_validate(const BagDataset& data, std::span<const double> C_grid,
                                     std::span<const double> C_p_grid, int folds,
                                     std::uint64_t seed, const TrainConfig& base,
                                     unsigned workers) {
  if (C_grid.empty() || C_p_grid.empty()) fail_usage("cross_validate: empty parameter grid");
  if (folds < 2) fail_usage("cross_validate: need at least 2 folds");
  if (data.bags.size() < static_cast<std::size_t>(folds))
    fail_usage("cross_validate: fewer bags than folds");
  data.validate();

  std::vector<double> cs(C_grid.begin(), C_grid.end());
  std::vector<double> cps(C_p_grid.begin(), C_p_grid.end());
  std::sort(cs.begin(), cs.end());
  std::sort(cps.begin(), cps.end());

  std::vector<std::size_t> perm(data.bags.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed, 11);
  for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);

  std::vector<BagView> train_views(folds), test_views(folds);
  for (int f = 0; f < folds; ++f) {
    train_views[f].instances = test_views[f].instances = &data.instances;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      const Bag* b = &data.bags[perm[i]];
      (static_cast<int>(i % folds) == f ? test_views[f] : train_views[f]).bags.push_back(b);
    }
  }

  const std::size_t grid = cs.size() * cps.size();
  std::vector<double> fold_error(grid * folds, 0.0);
  parallel_for(grid * folds, workers, [&](std::size_t cell) {
    const std::size_t g = cell / folds;
    const int f = static_cast<int>(cell % folds);
    TrainConfig config = base;
    config.C = cs[g / cps.size()];
    config.C_p = cps[g % cps.size()];
    const TrainResult r = train_view(train_views[f], config);
    fold_error[cell] = bag_error(r.hypothesis, test_views[f]);
  });

  CrossValidationResult out;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < grid; ++g) {
    double sum = 0.0;
    for (int f = 0; f < folds; ++f) sum += fold_error[g * folds + f];
    GridScore score{cs[g / cps.size()], cps[g % cps.size()], sum / folds};
    out.scores.push_back(score);
    if (score.mean_heldout_error < best) {
      best = score.mean_heldout_error;
      out.best = base;
      out.best.C = score.C;
      out.best.C_p = score.C_p;
    }
  }
  return out;
}

}  // namespace llp
