#include "treereg/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "treereg/diagnostics.hpp"
#include "treereg/knn.hpp"
#include "treereg/population.hpp"
#include "treereg/pruning.hpp"
#include "treereg/stats.hpp"
#include "treereg/tree.hpp"
#include "json.hpp"

namespace treereg {

namespace {

constexpr uint64_t kTrainStream = 1;
constexpr uint64_t kTestStream = 2;
constexpr uint64_t kCvStream = 3;
constexpr uint64_t kSplitStream = 4;

void parallel_for(int threads, int64_t count, const std::function<void(int64_t)>& body) {
  if (threads <= 1 || count <= 1) {
    for (int64_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int64_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const int64_t i = next.fetch_add(1);
      if (i >= count) return;
      body(i);
    }
  };
  std::vector<std::thread> pool;
  const int m = static_cast<int>(std::min<int64_t>(threads, count));
  pool.reserve(static_cast<size_t>(m));
  for (int t = 0; t < m; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& v) {
  MeanSe out;
  out.mean = mean(v);
  if (v.size() > 1) {
    const double ss = sum_sq_dev(v, out.mean);
    out.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  }
  return out;
}

std::ofstream open_out(const ExperimentConfig& cfg, const std::string& filename) {
  std::filesystem::create_directories(cfg.out_dir);
  const auto path = std::filesystem::path(cfg.out_dir) / filename;
  std::ofstream out(path);
  if (!out) throw ValidationError("experiment: cannot write " + path.string());
  out << "# treereg " << kVersion << " config=" << cfg.to_json_line() << '\n';
  return out;
}

void write_sweep_csv(const ExperimentConfig& cfg, const std::string& filename,
                     const std::vector<SweepRow>& rows) {
  if (cfg.out_dir.empty()) return;
  auto out = open_out(cfg, filename);
  out << "d,cart_mse,cart_se,knn_mse,knn_se\n";
  for (const auto& r : rows) {
    out << r.d << ',' << r.cart_mse << ',' << r.cart_se << ',' << r.knn_mse << ',' << r.knn_se << '\n';
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  static const std::set<std::string> kNames = {"fig1a_sparsity_sweep", "fig1b_boston_sweep",
                                               "fig1c_rho_vs_d0",      "theorem1_montecarlo",
                                               "population_suite",     "identity_suite"};
  if (!kNames.count(experiment)) throw ValidationError("config: unknown experiment '" + experiment + "'");
  if (n < 1 || test_n < 1) throw ValidationError("config: n and test_n must be >= 1");
  if (replications < 1) throw ValidationError("config: replications must be >= 1");
  if (d_range.empty()) throw ValidationError("config: d_range must be non-empty");
  if (d0 < 1) throw ValidationError("config: d0 must be >= 1");
  if (experiment == "fig1a_sparsity_sweep") {
    if (d0 > *std::min_element(d_range.begin(), d_range.end())) {
      throw ValidationError("config: d0 must not exceed the smallest d in the range");
    }
  }
  if (experiment == "fig1c_rho_vs_d0") {
    if (d0_range.empty()) throw ValidationError("config: d0_range must be non-empty");
    for (int v : d0_range) {
      if (v < 1 || v > d_fixed) throw ValidationError("config: d0_range values must lie in [1, d_fixed]");
    }
  }
  if (experiment == "fig1b_boston_sweep" && boston_csv.empty()) {
    throw ValidationError("config: fig1b_boston_sweep requires boston_csv");
  }
  if (alpha_scale <= 0.0) throw ValidationError("config: alpha_scale must be positive");
  if (threads < 1) throw ValidationError("config: threads must be >= 1");
  if (mc_n < 2 || mc_replications < 1) throw ValidationError("config: monte-carlo sizes out of range");
  if (!(mc_delta > 0.0)) throw ValidationError("config: mc_delta must be positive");
}

void ExperimentConfig::apply_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: invalid JSON: ") + e.what());
  }
  if (j.contains("experiment")) experiment = j["experiment"].get<std::string>();
  if (j.contains("n")) n = j["n"].get<int64_t>();
  if (j.contains("test_n")) test_n = j["test_n"].get<int64_t>();
  if (j.contains("d_range")) d_range = j["d_range"].get<std::vector<int>>();
  if (j.contains("d0")) d0 = j["d0"].get<int>();
  if (j.contains("d_fixed")) d_fixed = j["d_fixed"].get<int>();
  if (j.contains("d0_range")) d0_range = j["d0_range"].get<std::vector<int>>();
  if (j.contains("replications")) replications = j["replications"].get<int>();
  if (j.contains("seed")) seed = j["seed"].get<uint64_t>();
  if (j.contains("max_depth")) max_depth = j["max_depth"].get<int>();
  if (j.contains("alpha_scale")) alpha_scale = j["alpha_scale"].get<double>();
  if (j.contains("response_bound")) response_bound = j["response_bound"].get<double>();
  if (j.contains("out_dir")) out_dir = j["out_dir"].get<std::string>();
  if (j.contains("boston_csv")) boston_csv = j["boston_csv"].get<std::string>();
  if (j.contains("response_column")) response_column = j["response_column"].get<std::string>();
  if (j.contains("threads")) threads = j["threads"].get<int>();
  if (j.contains("mc_n")) mc_n = j["mc_n"].get<int64_t>();
  if (j.contains("mc_replications")) mc_replications = j["mc_replications"].get<int>();
  if (j.contains("mc_delta")) mc_delta = j["mc_delta"].get<double>();
  if (j.contains("mc_alpha_scale")) mc_alpha_scale = j["mc_alpha_scale"].get<double>();
}

std::string ExperimentConfig::to_json_line() const {
  nlohmann::json j;
  j["experiment"] = experiment;
  j["n"] = n;
  j["test_n"] = test_n;
  j["d_range"] = d_range;
  j["d0"] = d0;
  j["d_fixed"] = d_fixed;
  j["d0_range"] = d0_range;
  j["replications"] = replications;
  j["seed"] = seed;
  j["max_depth"] = max_depth;
  j["alpha_scale"] = alpha_scale;
  j["response_bound"] = response_bound;
  j["threads"] = threads;
  if (!boston_csv.empty()) {
    j["boston_csv"] = boston_csv;
    j["response_column"] = response_column;
  }
  if (experiment == "theorem1_montecarlo") {
    j["mc_n"] = mc_n;
    j["mc_replications"] = mc_replications;
    j["mc_delta"] = mc_delta;
    j["mc_alpha_scale"] = mc_alpha_scale;
  }
  return j.dump();
}

GeneratorSpec make_sparse_quadratic_spec(int64_t n, int d, int d0, uint64_t seed) {
  GeneratorSpec spec;
  spec.kind = GeneratorKind::sparse_quadratic;
  spec.n = n;
  spec.d = d;
  spec.d0 = d0;
  spec.seed = seed;
  return spec;
}

StepModelInstance random_step_instance(uint64_t seed, int64_t n, int max_components, int max_total_pieces) {
  for (uint64_t attempt = 0;; ++attempt) {
    Rng rng(derive_seed(seed, attempt, 0x57EF));
    StepModelInstance inst;
    const int d0 = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(max_components)));
    // split the piece budget across components
    std::vector<int> pieces(static_cast<size_t>(d0), 1);
    int total = 1;
    for (;;) {
      const int c = static_cast<int>(rng.below(static_cast<uint64_t>(d0)));
      const int next = total / pieces[static_cast<size_t>(c)] * (pieces[static_cast<size_t>(c)] + 1);
      if (next > max_total_pieces) break;
      ++pieces[static_cast<size_t>(c)];
      total = next;
      if (rng.uniform() < 0.25 && total >= 2) break;
    }
    if (total < 2) continue;

    GeneratorSpec spec;
    spec.kind = GeneratorKind::step_additive;
    spec.n = n;
    spec.d = d0;
    spec.d0 = d0;
    spec.seed = derive_seed(seed, attempt, 0xDA7A);
    bool shape_ok = true;
    for (int c = 0; c < d0; ++c) {
      StepComponent comp;
      const int v = pieces[static_cast<size_t>(c)];
      // cuts with a minimum piece width so every slab catches samples
      const double min_width = 0.9 / (2.0 * v);
      std::vector<double> cuts;
      for (int t = 0; t < v - 1; ++t) cuts.push_back(0.05 + 0.9 * rng.uniform());
      std::sort(cuts.begin(), cuts.end());
      bool ok = true;
      double prev = 0.0;
      for (double cpos : cuts) {
        if (cpos - prev < min_width) ok = false;
        prev = cpos;
      }
      if (1.0 - prev < min_width) ok = false;
      if (!ok) {
        shape_ok = false;
        break;
      }
      // well separated levels, shuffled
      std::vector<double> lv(static_cast<size_t>(v));
      for (int t = 0; t < v; ++t) lv[static_cast<size_t>(t)] = t + rng.uniform(0.0, 0.5);
      rng.shuffle(lv);
      comp.cuts = std::move(cuts);
      comp.levels = std::move(lv);
      spec.steps.push_back(std::move(comp));
    }
    if (!shape_ok) continue;

    Dataset ds = generate(spec);
    // every grid cell must be occupied
    std::set<std::vector<int>> cells;
    std::vector<int> key(static_cast<size_t>(d0));
    for (int64_t i = 0; i < ds.n(); ++i) {
      for (int c = 0; c < d0; ++c) {
        key[static_cast<size_t>(c)] = spec.steps[static_cast<size_t>(c)].piece_index(ds.x(i, c));
      }
      cells.insert(key);
    }
    if (static_cast<int>(cells.size()) != total) continue;

    inst.spec = std::move(spec);
    inst.data = std::move(ds);
    inst.total_pieces = total;
    return inst;
  }
}

std::vector<SweepRow> run_fig1a(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<int> ds_sorted = cfg.d_range;
  std::sort(ds_sorted.begin(), ds_sorted.end());
  const int R = cfg.replications;
  const int64_t tasks = static_cast<int64_t>(ds_sorted.size()) * R;
  std::vector<double> cart(static_cast<size_t>(tasks)), knn(static_cast<size_t>(tasks));

  parallel_for(cfg.threads, tasks, [&](int64_t task) {
    const int di = static_cast<int>(task / R);
    const int rep = static_cast<int>(task % R);
    const int d = ds_sorted[static_cast<size_t>(di)];
    const auto train_spec =
        make_sparse_quadratic_spec(cfg.n, d, cfg.d0, derive_seed(cfg.seed, kTrainStream, task));
    const auto test_spec =
        make_sparse_quadratic_spec(cfg.test_n, d, cfg.d0, derive_seed(cfg.seed, kTestStream, task));
    const Dataset train = generate(train_spec);
    const Dataset test = generate(test_spec);
    const int K = cfg.max_depth < 0 ? default_depth(cfg.n) : cfg.max_depth;
    const double B = cfg.response_bound < 0 ? generator_response_bound(train_spec) : cfg.response_bound;
    const double alpha = default_temperature(cfg.n, d, B, cfg.alpha_scale);
    const Tree pruned = prune_path(grow(train, K)).select_subtree(alpha);
    cart[static_cast<size_t>(task)] = test_error(pruned, test);
    const int k = cross_validate_k(train, kDefaultKGrid, 5, derive_seed(cfg.seed, kCvStream, task));
    knn[static_cast<size_t>(task)] = knn_test_error(train, k, test);
    (void)rep;
  });

  std::vector<SweepRow> rows;
  for (size_t di = 0; di < ds_sorted.size(); ++di) {
    std::vector<double> c(cart.begin() + static_cast<int64_t>(di) * R,
                          cart.begin() + static_cast<int64_t>(di + 1) * R);
    std::vector<double> k(knn.begin() + static_cast<int64_t>(di) * R,
                          knn.begin() + static_cast<int64_t>(di + 1) * R);
    const MeanSe mc = mean_se(c);
    const MeanSe mk = mean_se(k);
    rows.push_back({ds_sorted[di], mc.mean, mc.se, mk.mean, mk.se});
  }
  write_sweep_csv(cfg, "fig1a.csv", rows);
  return rows;
}

std::vector<SweepRow> run_fig1b(const ExperimentConfig& cfg) {
  cfg.validate();
  const Dataset raw = load_csv(cfg.boston_csv, cfg.response_column);
  const Dataset base = scale_unit_interval(raw);
  const int d0 = base.d();
  double b_abs = 0.0;
  for (double y : base.response) b_abs = std::max(b_abs, std::abs(y));

  std::vector<int> ds_sorted = cfg.d_range;
  std::sort(ds_sorted.begin(), ds_sorted.end());
  const int R = cfg.replications;
  std::vector<SweepRow> rows;
  for (int d : ds_sorted) {
    if (d < d0) throw ValidationError("fig1b: d_range values must be >= the original column count");
    std::vector<double> cart, knn;
    for (int rep = 0; rep < R; ++rep) {
      const uint64_t task = derive_seed(cfg.seed, static_cast<uint64_t>(d), static_cast<uint64_t>(rep));
      const Dataset full = augment_noise(base, d - d0, derive_seed(task, kTrainStream));
      // 70/30 holdout per replication
      std::vector<int64_t> perm(static_cast<size_t>(full.n()));
      std::iota(perm.begin(), perm.end(), 0);
      Rng rng(derive_seed(task, kSplitStream));
      rng.shuffle(perm);
      const int64_t n_train = full.n() * 7 / 10;
      const std::vector<int64_t> train_rows(perm.begin(), perm.begin() + n_train);
      const std::vector<int64_t> test_rows(perm.begin() + n_train, perm.end());
      const Dataset train = subset(full, train_rows);
      const Dataset test = subset(full, test_rows);
      const int K = cfg.max_depth < 0 ? default_depth(train.n()) : cfg.max_depth;
      const double B = cfg.response_bound < 0 ? b_abs : cfg.response_bound;
      const double alpha = default_temperature(train.n(), d, B, cfg.alpha_scale);
      const Tree pruned = prune_path(grow(train, K)).select_subtree(alpha);
      cart.push_back(test_error(pruned, test));
      const int k = cross_validate_k(train, kDefaultKGrid, 5, derive_seed(task, kCvStream));
      knn.push_back(knn_test_error(train, k, test));
    }
    const MeanSe mc = mean_se(cart);
    const MeanSe mk = mean_se(knn);
    rows.push_back({d, mc.mean, mc.se, mk.mean, mk.se});
  }
  write_sweep_csv(cfg, "fig1b.csv", rows);
  return rows;
}

Fig1cResult run_fig1c(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<int> sweep = cfg.d0_range;
  std::sort(sweep.begin(), sweep.end());
  const int R = cfg.replications;
  const int64_t tasks = static_cast<int64_t>(sweep.size()) * R;
  std::vector<double> rho2(static_cast<size_t>(tasks), 0.0);

  parallel_for(cfg.threads, tasks, [&](int64_t task) {
    const int di = static_cast<int>(task / R);
    const int d0 = sweep[static_cast<size_t>(di)];
    const auto spec =
        make_sparse_quadratic_spec(cfg.n, cfg.d_fixed, d0, derive_seed(cfg.seed, kTrainStream, task));
    const Dataset train = generate(spec);
    const int K = cfg.max_depth < 0 ? default_depth(cfg.n) : cfg.max_depth;
    const double B = cfg.response_bound < 0 ? generator_response_bound(spec) : cfg.response_bound;
    const double alpha = default_temperature(cfg.n, cfg.d_fixed, B, cfg.alpha_scale);
    const Tree pruned = prune_path(grow(train, K)).select_subtree(alpha);
    const CorrelationReport rep = analyze(pruned, train);
    rho2[static_cast<size_t>(task)] = rep.has_internal ? rep.rho_H * rep.rho_H : 1.0;
  });

  Fig1cResult result;
  for (size_t di = 0; di < sweep.size(); ++di) {
    std::vector<double> v(rho2.begin() + static_cast<int64_t>(di) * R,
                          rho2.begin() + static_cast<int64_t>(di + 1) * R);
    const MeanSe ms = mean_se(v);
    result.rows.push_back({sweep[di], ms.mean, ms.se});
  }
  result.monotone_within_se = true;
  for (size_t i = 1; i < result.rows.size(); ++i) {
    const double allowance =
        std::sqrt(result.rows[i].rho_h2_se * result.rows[i].rho_h2_se +
                  result.rows[i - 1].rho_h2_se * result.rows[i - 1].rho_h2_se);
    if (result.rows[i].rho_h2_mean > result.rows[i - 1].rho_h2_mean + allowance) {
      result.monotone_within_se = false;
    }
  }
  // log-log slope against d0
  if (result.rows.size() >= 2) {
    std::vector<double> lx, ly;
    for (const auto& r : result.rows) {
      lx.push_back(std::log(static_cast<double>(r.d0)));
      ly.push_back(std::log(std::max(r.rho_h2_mean, 1e-300)));
    }
    const double mx = mean(lx), my = mean(ly);
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < lx.size(); ++i) {
      num += (lx[i] - mx) * (ly[i] - my);
      den += (lx[i] - mx) * (lx[i] - mx);
    }
    result.loglog_slope = num / den;
  }
  if (!cfg.out_dir.empty()) {
    auto out = open_out(cfg, "fig1c.csv");
    out << "d0,rho_h2_mean,rho_h2_se\n";
    for (const auto& r : result.rows) out << r.d0 << ',' << r.rho_h2_mean << ',' << r.rho_h2_se << '\n';
    out << "# monotone_within_se=" << (result.monotone_within_se ? 1 : 0)
        << " loglog_slope=" << result.loglog_slope << '\n';
  }
  return result;
}

OracleMcReport run_theorem1_montecarlo(const ExperimentConfig& cfg) {
  cfg.validate();
  OracleMcReport rep;
  rep.replications = cfg.mc_replications;
  const double B = 1.0;  // noiseless model y = x^2 on [0,1]
  rep.alpha = default_temperature(cfg.mc_n, 1, B, cfg.mc_alpha_scale);
  rep.additive_term = 54.0 * B * B * std::log(2.0 / cfg.mc_delta) / static_cast<double>(cfg.mc_n);
  rep.trivial_delta = cfg.mc_delta >= 1.0;

  std::vector<int> violations(static_cast<size_t>(cfg.mc_replications), 0);
  parallel_for(cfg.threads, cfg.mc_replications, [&](int64_t repi) {
    const auto train_spec = make_sparse_quadratic_spec(cfg.mc_n, 1, 1, derive_seed(cfg.seed, kTrainStream, repi));
    const auto test_spec =
        make_sparse_quadratic_spec(cfg.test_n, 1, 1, derive_seed(cfg.seed, kTestStream, repi));
    const Dataset train = generate(train_spec);
    const Dataset test = generate(test_spec);
    const Tree full = grow(train, default_depth(cfg.mc_n));
    const PrunePath path = prune_path(full);
    const Tree chosen = path.select_subtree(rep.alpha);
    const double err_hat = test_error(chosen, test);
    double min_cost = std::numeric_limits<double>::infinity();
    for (const auto& s : path.steps()) {
      min_cost = std::min(min_cost, s.train_err + rep.alpha * static_cast<double>(s.n_leaves));
    }
    const double bound = 4.0 * min_cost + rep.additive_term;
    violations[static_cast<size_t>(repi)] = err_hat > bound ? 1 : 0;
  });
  for (int v : violations) rep.violations += v;
  rep.violation_freq = static_cast<double>(rep.violations) / static_cast<double>(cfg.mc_replications);
  rep.freq_threshold = cfg.mc_delta + 2.0 * std::sqrt(cfg.mc_delta * (1.0 - cfg.mc_delta) /
                                                      static_cast<double>(cfg.mc_replications));
  rep.holds = rep.trivial_delta || rep.violation_freq <= rep.freq_threshold;
  if (!cfg.out_dir.empty()) {
    auto out = open_out(cfg, "oracle_mc.csv");
    out << "alpha,additive_term,violations,replications,violation_freq,freq_threshold,holds\n";
    out << rep.alpha << ',' << rep.additive_term << ',' << rep.violations << ',' << rep.replications << ','
        << rep.violation_freq << ',' << rep.freq_threshold << ',' << (rep.holds ? 1 : 0) << '\n';
  }
  return rep;
}

// ---------------------------------------------------------------------------
// identity and population suites
// ---------------------------------------------------------------------------

namespace {

Dataset random_regression(int64_t n, int d, uint64_t seed, double noise = 0.3) {
  Rng rng(seed);
  Dataset ds;
  ds.columns.assign(static_cast<size_t>(d), std::vector<double>(static_cast<size_t>(n)));
  ds.response.resize(static_cast<size_t>(n));
  std::vector<double> lin(static_cast<size_t>(d)), quad(static_cast<size_t>(d));
  for (int j = 0; j < d; ++j) {
    lin[static_cast<size_t>(j)] = rng.uniform(-1.0, 1.0);
    quad[static_cast<size_t>(j)] = rng.uniform(-1.0, 1.0);
  }
  for (int64_t i = 0; i < n; ++i) {
    double y = 0.0;
    for (int j = 0; j < d; ++j) {
      const double x = rng.uniform();
      ds.columns[static_cast<size_t>(j)][static_cast<size_t>(i)] = x;
      y += lin[static_cast<size_t>(j)] * x + quad[static_cast<size_t>(j)] * x * x;
    }
    ds.response[static_cast<size_t>(i)] = y + noise * rng.uniform(-1.0, 1.0);
  }
  return ds;
}

struct RandomPair {
  Dataset ds;
  std::vector<int64_t> rows;
  int feature = 0;
  double threshold = 0.0;
};

// random node and admissible split with both daughters non-empty
bool draw_random_pair(uint64_t seed, RandomPair& out) {
  Rng rng(seed);
  const int64_t n = 30 + static_cast<int64_t>(rng.below(471));
  const int d = 1 + static_cast<int>(rng.below(10));
  out.ds = random_regression(n, d, derive_seed(seed, 11));
  out.rows.clear();
  const double keep = rng.uniform(0.3, 1.0);
  for (int64_t i = 0; i < n; ++i) {
    if (rng.uniform() < keep) out.rows.push_back(i);
  }
  if (out.rows.size() < 4) return false;
  out.feature = static_cast<int>(rng.below(static_cast<uint64_t>(d)));
  std::vector<double> xs;
  for (int64_t r : out.rows) xs.push_back(out.ds.x(r, out.feature));
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  if (xs.size() < 2) return false;
  const size_t gap = rng.below(xs.size() - 1);
  out.threshold = 0.5 * (xs[gap] + xs[gap + 1]);
  return true;
}

CheckResult check_split_correlation_identity(uint64_t seed, int trials) {
  double worst = 0.0;
  int done = 0;
  for (int t = 0; done < trials; ++t) {
    RandomPair pair;
    if (!draw_random_pair(derive_seed(seed, static_cast<uint64_t>(t)), pair)) continue;
    ++done;
    const double rho = stump_correlation(pair.ds, pair.rows, pair.feature, pair.threshold);
    const std::vector<double> y = gather(pair.ds.response, pair.rows);
    const double ratio =
        impurity_decrease(pair.ds, pair.rows, pair.feature, pair.threshold) / node_impurity(y);
    worst = std::max(worst, std::abs(rho * rho - ratio) / std::max({std::abs(ratio), std::abs(rho * rho), 1e-300}));
  }
  CheckResult r;
  r.name = "split_correlation_identity";
  r.margin = 1e-10 - worst;
  r.pass = worst <= 1e-10;
  r.detail = "worst relative gap " + std::to_string(worst) + " over " + std::to_string(trials) + " pairs";
  return r;
}

double contraction_worst_gap(const Tree& tree) {
  double worst = 0.0;
  for (const auto& nd : tree.nodes) {
    if (nd.is_leaf()) continue;
    const TreeNode& l = tree.node(nd.left);
    const TreeNode& r = tree.node(nd.right);
    const double sse_post = static_cast<double>(l.count) * l.impurity + static_cast<double>(r.count) * r.impurity;
    const double sse_pre = static_cast<double>(nd.count) * nd.impurity;
    const double rho2 = nd.impurity > 0.0 ? nd.split.decrease / nd.impurity : 0.0;
    const double expected = sse_pre * (1.0 - rho2);
    worst = std::max(worst, std::abs(sse_post - expected) / std::max({sse_pre, std::abs(expected), 1e-300}));
  }
  return worst;
}

CheckResult check_contraction(uint64_t seed) {
  double worst = 0.0;
  for (int t = 0; t < 5; ++t) {
    const Dataset ds = random_regression(200 + 60 * t, 2 + t % 4, derive_seed(seed, static_cast<uint64_t>(t)));
    worst = std::max(worst, contraction_worst_gap(grow(ds, 6)));
  }
  CheckResult r;
  r.name = "split_contraction";
  r.margin = 1e-10 - worst;
  r.pass = worst <= 1e-10;
  r.detail = "worst relative gap " + std::to_string(worst);
  return r;
}

CheckResult check_depth_error_bound(uint64_t seed, int datasets) {
  double worst_excess = 0.0;
  for (int t = 0; t < datasets; ++t) {
    const int64_t n = 64 + static_cast<int64_t>(derive_seed(seed, static_cast<uint64_t>(t)) % 448);
    const Dataset ds = random_regression(n, 2 + t % 5, derive_seed(seed, static_cast<uint64_t>(t), 5));
    const int kmax = default_depth(n);
    const Tree tree = grow(ds, kmax);
    const std::vector<double> errs = truncation_errors(tree);
    const std::vector<double> rhos = truncation_rho_H(tree);
    const int depth = tree.achieved_depth();
    const double sigma2 = errs[0];
    for (int k = 1; k <= kmax; ++k) {
      const int kk = std::min(k, depth);
      if (kk < 1) break;
      const double err_k = errs[static_cast<size_t>(kk)];
      const double rho = rhos[static_cast<size_t>(kk)];
      const double bound = sigma2 * std::exp(-static_cast<double>(k) * rho * rho);
      worst_excess = std::max(worst_excess, (err_k - bound) / std::max(sigma2, 1e-300));
    }
  }
  CheckResult r;
  r.name = "depth_error_bound";
  r.margin = -worst_excess;
  r.pass = worst_excess <= 1e-9;
  r.detail = "worst normalized excess " + std::to_string(worst_excess);
  return r;
}

CheckResult check_stump_vs_monotone(uint64_t seed) {
  double worst = std::numeric_limits<double>::infinity();
  int nodes = 0;
  std::vector<Dataset> suite;
  suite.push_back(generate(make_sparse_quadratic_spec(400, 4, 3, derive_seed(seed, 1))));
  suite.push_back(random_regression(300, 3, derive_seed(seed, 2)));
  {
    GeneratorSpec spec;
    spec.kind = GeneratorKind::custom_additive;
    spec.n = 500;
    spec.d = 3;
    spec.d0 = 2;
    spec.seed = derive_seed(seed, 3);
    spec.components = {[](double x) { return 2.0 * x; }, [](double x) { return x * x * x; }};
    suite.push_back(generate(spec));
  }
  for (const auto& ds : suite) {
    const Tree tree = grow(ds, 5);
    for (int id : tree.internal_ids()) {
      const Fact1Report rep = check_fact1(tree, ds, id);
      worst = std::min(worst, rep.margin);
      ++nodes;
      if (!rep.holds) {
        CheckResult r;
        r.name = "stump_vs_monotone";
        r.margin = rep.margin;
        r.pass = false;
        r.detail = "failed at node " + std::to_string(id);
        return r;
      }
    }
  }
  CheckResult r;
  r.name = "stump_vs_monotone";
  r.margin = worst;
  r.pass = true;
  r.detail = std::to_string(nodes) + " internal nodes checked, smallest margin " + std::to_string(worst);
  return r;
}

StepComponent random_step_component(Rng& rng, int v, int extrema) {
  // run lengths between direction changes, strictly monotone inside a run
  StepComponent comp;
  std::vector<double> levels(static_cast<size_t>(v));
  std::vector<int> turn_at;
  if (extrema > 0 && v >= 3) {
    std::vector<int> interior(static_cast<size_t>(v - 2));
    std::iota(interior.begin(), interior.end(), 1);
    rng.shuffle(interior);
    turn_at.assign(interior.begin(), interior.begin() + std::min<size_t>(static_cast<size_t>(extrema), interior.size()));
    std::sort(turn_at.begin(), turn_at.end());
    // direction changes need non-adjacent turns to stay exact
    for (size_t i = 1; i < turn_at.size(); ++i) {
      if (turn_at[i] - turn_at[i - 1] < 2) return random_step_component(rng, v, extrema);
    }
  }
  double cur = rng.uniform(0.0, 1.0);
  double dir = rng.uniform() < 0.5 ? 1.0 : -1.0;
  levels[0] = cur;
  size_t next_turn = 0;
  for (int k = 1; k < v; ++k) {
    if (next_turn < turn_at.size() && k == turn_at[next_turn] + 1) {
      dir = -dir;
      ++next_turn;
    }
    cur += dir * rng.uniform(0.15, 1.0);
    levels[static_cast<size_t>(k)] = cur;
  }
  const double min_width = 0.9 / (2.0 * v);
  std::vector<double> cuts;
  for (;;) {
    cuts.clear();
    for (int t = 0; t < v - 1; ++t) cuts.push_back(0.05 + 0.9 * rng.uniform());
    std::sort(cuts.begin(), cuts.end());
    bool ok = true;
    double prev = 0.0;
    for (double cpos : cuts) {
      ok = ok && (cpos - prev >= min_width);
      prev = cpos;
    }
    ok = ok && (1.0 - prev >= min_width);
    if (ok) break;
  }
  comp.cuts = std::move(cuts);
  comp.levels = std::move(levels);
  return comp;
}

CheckResult check_step_function_bound(uint64_t seed, int trials) {
  double worst = std::numeric_limits<double>::infinity();
  int violations = 0;
  int done = 0;
  for (int t = 0; done < trials; ++t) {
    Rng rng(derive_seed(seed, static_cast<uint64_t>(t)));
    const int64_t n = 150 + static_cast<int64_t>(rng.below(251));
    const int v = 2 + static_cast<int>(rng.below(7));
    const int m = std::min<int>(static_cast<int>(rng.below(3)), std::max(0, (v - 1) / 2));
    const StepComponent g = random_step_component(rng, v, m);
    Dataset ds = random_regression(n, 2, derive_seed(seed, static_cast<uint64_t>(t), 7), 0.5);
    // blend the step shape into the response so the comparison is informative
    for (int64_t i = 0; i < n; ++i) ds.response[static_cast<size_t>(i)] += g(ds.x(i, 0));
    std::vector<int64_t> rows(static_cast<size_t>(n));
    std::iota(rows.begin(), rows.end(), 0);
    // require occupied stationary pieces so the registered structure applies
    const StepBoundReport rep = check_stepfn_bound(ds, rows, 0, g);
    if (rep.used_effective) continue;
    ++done;
    worst = std::min(worst, rep.margin);
    violations += rep.holds ? 0 : 1;
  }
  CheckResult r;
  r.name = "step_function_bound";
  r.margin = worst;
  r.pass = violations == 0;
  r.detail = std::to_string(trials) + " nodes, smallest margin " + std::to_string(worst);
  return r;
}

CheckResult check_sparse_component_bound(uint64_t seed, int trials) {
  int violations = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    const int d0 = 1 + t % 8;
    const auto spec = make_sparse_quadratic_spec(500, d0 + 2, d0, derive_seed(seed, static_cast<uint64_t>(t)));
    const Dataset ds = generate(spec);
    std::vector<int64_t> rows(static_cast<size_t>(ds.n()));
    std::iota(rows.begin(), rows.end(), 0);
    std::vector<int> signal(static_cast<size_t>(d0));
    std::iota(signal.begin(), signal.end(), 0);
    std::vector<std::function<double(double)>> comps;
    for (int c = 0; c < d0; ++c) {
      const double sign = (c % 2 == 0) ? 1.0 : -1.0;
      comps.push_back([sign](double x) { return sign * x * x; });
    }
    const SparseIneqReport rep = check_sparse_inequality(ds, rows, signal, comps);
    violations += rep.holds ? 0 : 1;
    const double margin = rep.nonneg_pairwise ? rep.max_component_rho2 - rep.sum_rhs
                                              : rep.max_component_rho2 - rep.sign_rhs;
    worst = std::min(worst, margin);
  }
  CheckResult r;
  r.name = "sparse_component_bound";
  r.margin = worst;
  r.pass = violations == 0;
  r.detail = std::to_string(trials) + " root nodes, smallest margin " + std::to_string(worst);
  return r;
}

CheckResult check_step_separation_suite(uint64_t seed, int trials) {
  // Single-component models: there the split-interval property is exact
  // (the response is constant within each piece along the split direction).
  // With two or more active components the within-piece response varies and
  // a chance perturbation can push the empirical optimum strictly inside a
  // piece, so only the purity and leaf-count conclusions survive.
  int violations = 0;
  bool sizes_ok = true;
  for (int t = 0; t < trials; ++t) {
    const StepModelInstance inst = random_step_instance(derive_seed(seed, static_cast<uint64_t>(t)), 400, 1, 9);
    const Tree tree = grow(inst.data, 32);
    std::vector<int> signal(static_cast<size_t>(inst.spec.d0));
    std::iota(signal.begin(), signal.end(), 0);
    const StepSeparationReport rep = check_step_separation(tree, inst.data, inst.spec.steps, signal);
    violations += rep.holds ? 0 : 1;
    sizes_ok = sizes_ok && rep.n_leaves >= inst.total_pieces;
  }
  CheckResult r;
  r.name = "step_model_separation";
  r.margin = violations == 0 && sizes_ok ? 1.0 : -1.0;
  r.pass = violations == 0 && sizes_ok;
  r.detail = std::to_string(trials) + " models, " + std::to_string(violations) + " violations";
  return r;
}

CheckResult check_node_size_training_bound(uint64_t seed, int trials) {
  int violations = 0;
  int applicable = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (int t = 0; t < trials; ++t) {
    const auto spec = make_sparse_quadratic_spec(1000, 8, 4, derive_seed(seed, static_cast<uint64_t>(t)));
    const Dataset ds = generate(spec);
    const Tree tree = grow(ds, default_depth(ds.n()));
    const AssumptionProfile prof = assumption_profile(tree, 1.0);
    const DepthBoundReport rep = check_depth_training_bound(tree, ds, prof);
    if (!rep.applicable) continue;
    ++applicable;
    violations += rep.holds ? 0 : 1;
    worst = std::min(worst, rep.rhs - rep.lhs);
  }
  CheckResult r;
  r.name = "node_size_training_bound";
  r.margin = worst;
  r.pass = violations == 0 && applicable > 0;
  r.detail = std::to_string(applicable) + " applicable trees, smallest slack " + std::to_string(worst);
  return r;
}

CheckResult check_split_location(uint64_t seed) {
  (void)seed;
  struct Case {
    PopulationModel model;
    double a, b;
  };
  std::vector<Case> cases;
  const double intervals[][2] = {{0.0, 1.0}, {0.2, 0.9}, {0.25, 0.75}};
  for (const auto& iv : intervals) {
    cases.push_back({models::linear(), iv[0], iv[1]});
    cases.push_back({models::square(), iv[0], iv[1]});
    cases.push_back({models::sinusoid(8), iv[0], iv[1]});
  }
  double worst = 0.0;
  bool all_ok = true;
  for (const auto& c : cases) {
    const PopulationSplit split = optimal_split(c.model, c.a, c.b);
    if (!split.informative) {
      all_ok = false;
      continue;
    }
    for (double s : split.maximizers) {
      const SplitLocationReport rep = verify_split_location(c.model, c.a, c.b, s);
      all_ok = all_ok && rep.holds;
      worst = std::max(worst, std::max(rep.location_gap, rep.probability_gap));
    }
  }
  CheckResult r;
  r.name = "split_location_formula";
  r.margin = 1e-6 - worst;
  r.pass = all_ok;
  r.detail = "largest gap " + std::to_string(worst);
  return r;
}

CheckResult check_endcut(const std::vector<int>& ws) {
  const std::vector<EndcutRow> rows = endcut_scaling(ws);
  const double base_sw = rows.front().s_times_w;
  const double base_rw = rows.front().rho_times_sqrt_w;
  bool ok = true;
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& r : rows) {
    const double rel_sw = r.s_times_w / base_sw;
    const double rel_rw = r.rho_times_sqrt_w / base_rw;
    ok = ok && rel_sw >= 0.5 && rel_sw <= 1.5 && rel_rw >= 0.5 && rel_rw <= 1.5;
    worst = std::min({worst, rel_sw - 0.5, 1.5 - rel_sw, rel_rw - 0.5, 1.5 - rel_rw});
  }
  CheckResult r;
  r.name = "endcut_scaling";
  r.margin = worst;
  r.pass = ok;
  r.detail = "band slack " + std::to_string(worst);
  return r;
}

}  // namespace

std::vector<CheckResult> run_identity_suite(const ExperimentConfig& cfg) {
  const uint64_t seed = cfg.seed;
  std::vector<CheckResult> out;
  out.push_back(check_split_correlation_identity(derive_seed(seed, 101), 200));
  out.push_back(check_contraction(derive_seed(seed, 102)));
  out.push_back(check_depth_error_bound(derive_seed(seed, 103), 10));
  out.push_back(check_stump_vs_monotone(derive_seed(seed, 104)));
  out.push_back(check_step_function_bound(derive_seed(seed, 105), 10));
  out.push_back(check_sparse_component_bound(derive_seed(seed, 106), 10));
  out.push_back(check_step_separation_suite(derive_seed(seed, 107), 10));
  out.push_back(check_node_size_training_bound(derive_seed(seed, 108), 5));
  out.push_back(check_split_location(derive_seed(seed, 109)));
  out.push_back(check_endcut({4, 8, 16}));
  if (!cfg.out_dir.empty()) {
    auto outfile = open_out(cfg, "identity_suite.csv");
    outfile << "check,pass,margin,detail\n";
    for (const auto& c : out) {
      outfile << c.name << ',' << (c.pass ? 1 : 0) << ',' << c.margin << ',' << '"' << c.detail << '"' << '\n';
    }
  }
  return out;
}

std::vector<CheckResult> run_population_suite(const ExperimentConfig& cfg) {
  std::vector<CheckResult> out;

  {  // registered antiderivatives against straight quadrature
    double worst = 0.0;
    const double intervals[][2] = {{0.0, 1.0}, {0.1, 0.35}, {0.4, 0.95}};
    std::vector<PopulationModel> models_list;
    models_list.push_back(models::linear());
    models_list.push_back(models::square());
    models_list.push_back(models::cubic_minus_x());
    models_list.push_back(models::sinusoid(4));
    models_list.push_back(models::sinusoid(16));
    for (const auto& m : models_list) {
      for (const auto& iv : intervals) {
        worst = std::max(worst, std::abs(m.moment1(iv[0], iv[1]) - m.quad_moment1(iv[0], iv[1])));
        worst = std::max(worst, std::abs(m.moment2(iv[0], iv[1]) - m.quad_moment2(iv[0], iv[1])));
      }
    }
    CheckResult r;
    r.name = "quadrature_agreement";
    r.margin = 1e-9 - worst;
    r.pass = worst <= 1e-9;
    r.detail = "largest moment gap " + std::to_string(worst);
    out.push_back(r);
  }

  {  // sinusoid decrease against its closed form
    double worst = 0.0;
    for (int w : {4, 8, 16, 32}) {
      const PopulationModel m = models::sinusoid(w);
      for (int i = 1; i < 40; ++i) {
        const double s = static_cast<double>(i) / 40.0;
        const double direct = population_decrease(m, 0.0, 1.0, s);
        const double c = std::cos(2.0 * M_PI * w * s);
        const double closed = (1.0 - c) * (1.0 - c) /
                              (4.0 * M_PI * M_PI * static_cast<double>(w) * static_cast<double>(w) * s * (1.0 - s));
        worst = std::max(worst, std::abs(direct - closed));
      }
    }
    CheckResult r;
    r.name = "sinusoid_decrease_closed_form";
    r.margin = 1e-9 - worst;
    r.pass = worst <= 1e-9;
    r.detail = "largest gap " + std::to_string(worst);
    out.push_back(r);
  }

  {  // the two algebraic decrease routes
    double worst = 0.0;
    std::vector<PopulationModel> models_list;
    models_list.push_back(models::linear());
    models_list.push_back(models::cubic_minus_x());
    models_list.push_back(models::sinusoid(8));
    for (const auto& m : models_list) {
      for (int i = 1; i < 30; ++i) {
        const double s = 0.05 + 0.9 * static_cast<double>(i) / 30.0;
        worst = std::max(worst, std::abs(population_decrease(m, 0.0, 1.0, s) -
                                         population_decrease_two_sided(m, 0.0, 1.0, s)));
      }
    }
    CheckResult r;
    r.name = "decrease_route_agreement";
    r.margin = 1e-9 - worst;
    r.pass = worst <= 1e-9;
    r.detail = "largest gap " + std::to_string(worst);
    out.push_back(r);
  }

  out.push_back(check_split_location(cfg.seed));
  out.push_back(check_endcut({4, 8, 16, 32}));

  if (!cfg.out_dir.empty()) {
    auto table = open_out(cfg, "endcut.csv");
    export_endcut_csv(endcut_scaling({1, 4, 8, 16, 32}), table);
    auto outfile = open_out(cfg, "population_suite.csv");
    outfile << "check,pass,margin,detail\n";
    for (const auto& c : out) {
      outfile << c.name << ',' << (c.pass ? 1 : 0) << ',' << c.margin << ',' << '"' << c.detail << '"' << '\n';
    }
  }
  return out;
}

bool run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.experiment == "fig1a_sparsity_sweep") {
    run_fig1a(cfg);
    return true;
  }
  if (cfg.experiment == "fig1b_boston_sweep") {
    run_fig1b(cfg);
    return true;
  }
  if (cfg.experiment == "fig1c_rho_vs_d0") {
    const Fig1cResult res = run_fig1c(cfg);
    return res.monotone_within_se;
  }
  if (cfg.experiment == "theorem1_montecarlo") {
    return run_theorem1_montecarlo(cfg).holds;
  }
  if (cfg.experiment == "population_suite") {
    const auto checks = run_population_suite(cfg);
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
  }
  const auto checks = run_identity_suite(cfg);
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

}  // namespace treereg
