#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "treereg/diagnostics.hpp"
#include "treereg/experiments.hpp"
#include "treereg/knn.hpp"
#include "treereg/population.hpp"
#include "treereg/pruning.hpp"
#include "treereg/tree.hpp"

namespace {

using namespace treereg;

constexpr int kExitOk = 0;
constexpr int kExitAssertion = 1;
constexpr int kExitConfig = 2;

Dataset load_dataset(const std::string& path, const std::string& response, int response_index, bool scale) {
  Dataset ds = response_index >= 0 ? load_csv_index(path, response_index) : load_csv(path, response);
  if (scale) ds = scale_unit_interval(ds);
  return ds;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path + "'");
  out << text;
}

int print_checks(const std::vector<CheckResult>& checks) {
  bool all = true;
  for (const auto& c : checks) {
    std::printf("[%s] %-28s margin=%-12.4g %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.margin,
                c.detail.c_str());
    all = all && c.pass;
  }
  return all ? kExitOk : kExitAssertion;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"regression trees with cost-complexity pruning, split-correlation diagnostics, and an "
               "experiment harness"};
  app.require_subcommand(1);

  // ---- grow ----------------------------------------------------------------
  auto* grow_cmd = app.add_subcommand("grow", "grow a tree from CSV data and serialize it");
  std::string g_data, g_response = "y", g_out = "tree.json";
  int g_response_index = -1, g_depth = -1;
  bool g_scale = false;
  grow_cmd->add_option("--data", g_data, "input CSV")->required();
  grow_cmd->add_option("--response", g_response, "response column name");
  grow_cmd->add_option("--response-index", g_response_index, "response column index (overrides name)");
  grow_cmd->add_option("--max-depth", g_depth, "depth cap (default ceil(log2 n))");
  grow_cmd->add_flag("--scale", g_scale, "rescale every feature to [0,1] first");
  grow_cmd->add_option("--out", g_out, "output tree JSON path");

  // ---- prune ---------------------------------------------------------------
  auto* prune_cmd = app.add_subcommand("prune", "weakest-link path and subtree selection");
  std::string p_tree, p_out, p_path_csv;
  double p_alpha = -1.0;
  prune_cmd->add_option("--tree", p_tree, "serialized tree JSON")->required();
  prune_cmd->add_option("--alpha", p_alpha, "temperature; selects the smallest minimizing subtree");
  prune_cmd->add_option("--out", p_out, "output JSON for the selected subtree");
  prune_cmd->add_option("--path-csv", p_path_csv, "write the (alpha, leaves, error) path table here");

  // ---- diagnose --------------------------------------------------------------
  auto* diag_cmd = app.add_subcommand("diagnose", "per-node correlation report for a tree on data");
  std::string dg_tree, dg_data, dg_response = "y", dg_out;
  int dg_response_index = -1;
  bool dg_scale = false;
  diag_cmd->add_option("--tree", dg_tree, "serialized tree JSON")->required();
  diag_cmd->add_option("--data", dg_data, "training CSV")->required();
  diag_cmd->add_option("--response", dg_response, "response column name");
  diag_cmd->add_option("--response-index", dg_response_index, "response column index");
  diag_cmd->add_flag("--scale", dg_scale, "rescale features to [0,1] first");
  diag_cmd->add_option("--out", dg_out, "report CSV path (stdout when omitted)");

  // ---- population -------------------------------------------------------------
  auto* pop_cmd = app.add_subcommand("population", "infinite-sample split analysis for 1-d models");
  std::string pp_model = "linear";
  int pp_w = 8;
  double pp_a = 0.0, pp_b = 1.0;
  std::string pp_endcut;
  std::string pp_out;
  pop_cmd->add_option("--model", pp_model, "linear | square | cubic_minus_x | sinusoid");
  pop_cmd->add_option("--w", pp_w, "sinusoid frequency");
  pop_cmd->add_option("--a", pp_a, "interval start");
  pop_cmd->add_option("--b", pp_b, "interval end");
  pop_cmd->add_option("--endcut", pp_endcut, "comma list of frequencies for the end-cut table");
  pop_cmd->add_option("--out", pp_out, "CSV output path for the end-cut table");

  // ---- experiment ------------------------------------------------------------
  auto* exp_cmd = app.add_subcommand("experiment", "run a named experiment");
  std::string e_name, e_config;
  ExperimentConfig cfg;
  uint64_t e_seed = 0;
  exp_cmd->add_option("name", e_name,
                      "fig1a_sparsity_sweep | fig1b_boston_sweep | fig1c_rho_vs_d0 | "
                      "theorem1_montecarlo | population_suite | identity_suite")
      ->required();
  exp_cmd->add_option("--config", e_config, "JSON config file");
  auto* seed_opt = exp_cmd->add_option("--seed", e_seed, "seed override");
  exp_cmd->add_option("--out", cfg.out_dir, "output directory for CSV tables");
  exp_cmd->add_option("--threads", cfg.threads, "worker threads for replications");
  exp_cmd->add_option("--boston-csv", cfg.boston_csv, "housing CSV (fig1b)");
  exp_cmd->add_option("--replications", cfg.replications, "replications override");

  // ---- verify ----------------------------------------------------------------
  auto* verify_cmd = app.add_subcommand("verify", "run the identity and population check suites");
  uint64_t v_seed = 173;
  std::string v_out;
  verify_cmd->add_option("--seed", v_seed, "seed");
  verify_cmd->add_option("--out", v_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (grow_cmd->parsed()) {
      const Dataset ds = load_dataset(g_data, g_response, g_response_index, g_scale);
      const int depth = g_depth < 0 ? default_depth(ds.n()) : g_depth;
      const Tree tree = grow(ds, depth);
      write_file(g_out, tree.to_json());
      std::printf("grew tree: n=%lld d=%d depth<=%d leaves=%lld training_mse=%.6g -> %s\n",
                  static_cast<long long>(ds.n()), ds.d(), depth, static_cast<long long>(tree.leaf_count()),
                  training_error(tree, ds), g_out.c_str());
      return kExitOk;
    }

    if (prune_cmd->parsed()) {
      const Tree tree = Tree::from_json(read_file(p_tree));
      const PrunePath path = prune_path(tree);
      if (!p_path_csv.empty()) {
        std::ofstream out(p_path_csv);
        out << "# treereg " << kVersion << " tree=" << p_tree << '\n';
        path.export_csv(out);
      }
      if (p_alpha >= 0.0) {
        const Tree chosen = path.select_subtree(p_alpha);
        std::printf("alpha=%.6g -> leaves=%lld training_err=%.6g\n", p_alpha,
                    static_cast<long long>(chosen.leaf_count()), chosen.leaf_error_sum());
        if (!p_out.empty()) write_file(p_out, chosen.to_json());
      } else if (p_path_csv.empty()) {
        std::ostringstream ss;
        path.export_csv(ss);
        std::fputs(ss.str().c_str(), stdout);
      }
      return kExitOk;
    }

    if (diag_cmd->parsed()) {
      Tree tree = Tree::from_json(read_file(dg_tree));
      const Dataset ds = load_dataset(dg_data, dg_response, dg_response_index, dg_scale);
      tree.assign_samples(ds);
      const CorrelationReport report = analyze(tree, ds);
      if (dg_out.empty()) {
        std::ostringstream ss;
        report.export_csv(ss);
        std::fputs(ss.str().c_str(), stdout);
      } else {
        std::ofstream out(dg_out);
        out << "# treereg " << kVersion << " tree=" << dg_tree << " data=" << dg_data << '\n';
        report.export_csv(out);
      }
      return kExitOk;
    }

    if (pop_cmd->parsed()) {
      if (!pp_endcut.empty()) {
        std::vector<int> ws;
        std::stringstream ss(pp_endcut);
        std::string tok;
        while (std::getline(ss, tok, ',')) ws.push_back(std::stoi(tok));
        const auto rows = endcut_scaling(ws);
        std::ostringstream table;
        export_endcut_csv(rows, table);
        if (pp_out.empty()) {
          std::fputs(table.str().c_str(), stdout);
        } else {
          write_file(pp_out, "# treereg " + std::string(kVersion) + " endcut=" + pp_endcut + "\n" + table.str());
        }
        return kExitOk;
      }
      PopulationModel model = pp_model == "square"          ? models::square()
                              : pp_model == "cubic_minus_x" ? models::cubic_minus_x()
                              : pp_model == "sinusoid"      ? models::sinusoid(pp_w)
                              : pp_model == "linear"        ? models::linear()
                                                            : throw ValidationError("unknown model '" + pp_model + "'");
      const PopulationSplit split = optimal_split(model, pp_a, pp_b);
      if (!split.informative) {
        std::printf("no informative split on [%g, %g]\n", pp_a, pp_b);
        return kExitOk;
      }
      std::printf("model=%s interval=[%g,%g] delta=%.10g rho=%.10g maximizers:", model.description().c_str(),
                  pp_a, pp_b, split.delta, split.rho);
      for (double s : split.maximizers) std::printf(" %.10g", s);
      std::printf("\n");
      for (double s : split.maximizers) {
        const SplitLocationReport rep = verify_split_location(model, pp_a, pp_b, s);
        std::printf("  s*=%.10g v=%.6g rho=%.6g location_gap=%.3g probability_gap=%.3g %s\n", s, rep.v,
                    rep.rho, rep.location_gap, rep.probability_gap, rep.holds ? "ok" : "MISMATCH");
      }
      return kExitOk;
    }

    if (exp_cmd->parsed()) {
      cfg.experiment = e_name;
      if (!e_config.empty()) {
        const std::string keep_out = cfg.out_dir;
        const int keep_threads = cfg.threads;
        cfg.apply_json_file(e_config);
        if (!keep_out.empty()) cfg.out_dir = keep_out;
        if (keep_threads != 1) cfg.threads = keep_threads;
        cfg.experiment = e_name;
      }
      if (seed_opt->count() > 0) cfg.seed = e_seed;
      cfg.validate();
      if (cfg.experiment == "identity_suite") return print_checks(run_identity_suite(cfg));
      if (cfg.experiment == "population_suite") return print_checks(run_population_suite(cfg));
      if (cfg.experiment == "theorem1_montecarlo") {
        const OracleMcReport rep = run_theorem1_montecarlo(cfg);
        std::printf("[%s] oracle_inequality_mc alpha=%.4g additive=%.4g violations=%d/%d freq=%.4g "
                    "threshold=%.4g%s\n",
                    rep.holds ? "PASS" : "FAIL", rep.alpha, rep.additive_term, rep.violations,
                    rep.replications, rep.violation_freq, rep.freq_threshold,
                    rep.trivial_delta ? " (non-binding: delta >= 1)" : "");
        return rep.holds ? kExitOk : kExitAssertion;
      }
      if (cfg.experiment == "fig1c_rho_vs_d0") {
        const Fig1cResult res = run_fig1c(cfg);
        for (const auto& r : res.rows) {
          std::printf("d0=%-3d rho_H^2=%.5f +- %.5f\n", r.d0, r.rho_h2_mean, r.rho_h2_se);
        }
        std::printf("[%s] monotone_within_se loglog_slope=%.3f\n", res.monotone_within_se ? "PASS" : "FAIL",
                    res.loglog_slope);
        return res.monotone_within_se ? kExitOk : kExitAssertion;
      }
      const auto rows = cfg.experiment == "fig1a_sparsity_sweep" ? run_fig1a(cfg) : run_fig1b(cfg);
      std::printf("d,cart_mse,cart_se,knn_mse,knn_se\n");
      for (const auto& r : rows) {
        std::printf("%d,%.6g,%.6g,%.6g,%.6g\n", r.d, r.cart_mse, r.cart_se, r.knn_mse, r.knn_se);
      }
      return kExitOk;
    }

    if (verify_cmd->parsed()) {
      ExperimentConfig vc;
      vc.seed = v_seed;
      vc.out_dir = v_out;
      auto checks = run_identity_suite(vc);
      const auto pop = run_population_suite(vc);
      checks.insert(checks.end(), pop.begin(), pop.end());
      return print_checks(checks);
    }
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kExitConfig;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitAssertion;
  }
  return kExitOk;
}
