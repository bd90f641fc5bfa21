#pragma once

// Command-line driver: synth | split | train | eval | reproduce.
// Exit status: 0 success, 1 runtime failure, 2 bad flags.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ggcn/data.hpp"
#include "ggcn/eval.hpp"
#include "ggcn/io.hpp"
#include "ggcn/train.hpp"

namespace ggcn::cli {

namespace fs = std::filesystem;

// Published link-prediction results (percent) for the citation benchmarks.
struct ReferenceRow {
  double auc, auc_se, ap, ap_se;
};

inline std::optional<ReferenceRow> reference_result(const std::string& dataset, Task task,
                                                    Variant variant) {
  static const std::map<std::string, std::map<std::string, ReferenceRow>> table = {
      {"cora/new_nodes",
       {{"gcnvae", {75.12, 0.4, 76.32, 0.3}},
        {"mlpvae", {75.59, 0.7, 75.64, 0.5}},
        {"ggcn", {83.30, 0.3, 85.03, 0.3}}}},
      {"citeseer/new_nodes",
       {{"gcnvae", {79.36, 0.3, 82.13, 0.1}},
        {"mlpvae", {81.76, 0.6, 83.67, 0.4}},
        {"ggcn", {89.54, 0.2, 91.30, 0.2}}}},
      {"pubmed/new_nodes",
       {{"gcnvae", {85.52, 0.2, 85.43, 0.1}},
        {"mlpvae", {77.13, 0.4, 77.24, 0.3}},
        {"ggcn", {87.49, 0.2, 87.24, 0.1}}}},
      {"cora/observed_graph",
       {{"gcnvae", {93.15, 0.4, 94.42, 0.2}},
        {"mlpvae", {86.55, 0.2, 87.21, 0.3}},
        {"ggcn", {94.07, 0.4, 95.15, 0.2}}}},
      {"citeseer/observed_graph",
       {{"gcnvae", {93.27, 0.4, 94.42, 0.1}},
        {"mlpvae", {87.13, 0.2, 89.34, 0.1}},
        {"ggcn", {94.62, 0.7, 95.93, 0.7}}}},
      {"pubmed/observed_graph",
       {{"gcnvae", {96.74, 0.4, 96.94, 0.3}},
        {"mlpvae", {79.39, 0.5, 79.53, 0.3}},
        {"ggcn", {96.96, 0.6, 97.27, 0.5}}}},
  };
  std::string key = dataset;
  for (char& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  const auto row = table.find(key + "/" + to_string(task));
  if (row == table.end()) return std::nullopt;
  const auto cell = row->second.find(to_string(variant));
  if (cell == row->second.end()) return std::nullopt;
  return cell->second;
}

// Flags shared by train and reproduce, kept as strings until validated.
struct TrainFlags {
  Index hidden = 400;
  Index latent = 200;
  double lr = 1e-3;
  Index iterations = 200;
  double beta = 1.0;
  Index num_batches = 3;
  std::string p_tilde = "density";
  std::string self_loops = "all";
  std::string recon_target = "all";
  std::string prior = "adaptive";
  std::uint64_t seed = 0;
  bool quiet = false;

  void attach(CLI::App* app) {
    app->add_option("--hidden", hidden, "hidden layer width")->check(CLI::PositiveNumber);
    app->add_option("--latent", latent, "latent dimension")->check(CLI::PositiveNumber);
    app->add_option("--lr", lr, "Adam learning rate")->check(CLI::PositiveNumber);
    app->add_option("--iterations", iterations, "training iterations")->check(CLI::NonNegativeNumber);
    app->add_option("--beta", beta, "KL weight")->check(CLI::NonNegativeNumber);
    app->add_option("--num-batches", num_batches, "growth batches including the seed batch")
        ->check(CLI::PositiveNumber);
    app->add_option("--p-tilde", p_tilde, "candidate fill probability: density or a number");
    app->add_option("--self-loops", self_loops, "self-loop policy")
        ->check(CLI::IsMember({"all", "new_only"}));
    app->add_option("--recon-target", recon_target, "reconstruction target")
        ->check(CLI::IsMember({"all", "old_only"}));
    app->add_option("--prior", prior, "latent prior for old nodes")
        ->check(CLI::IsMember({"adaptive", "standard"}));
    app->add_option("--seed", seed, "random seed");
    app->add_flag("--quiet", quiet, "suppress per-iteration progress lines");
  }

  TrainConfig resolve() const {
    TrainConfig c;
    c.hidden_dim = hidden;
    c.latent_dim = latent;
    c.learning_rate = lr;
    c.iterations = iterations;
    c.beta = beta;
    c.num_batches = num_batches;
    c.p_tilde = parse_p_tilde(p_tilde);
    c.self_loops = parse_self_loops(self_loops);
    c.recon_target = parse_recon_target(recon_target);
    c.prior = parse_prior_mode(prior);
    c.seed = seed;
    c.verbose = !quiet;
    c.validate();
    return c;
  }
};

struct FlagError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string percent(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * x);
  return buf;
}

// Training graph for a directory that is either a split or a plain dataset.
inline Graph training_graph(const fs::path& dir, bool row_norm) {
  Graph g = is_split_dir(dir) ? load_split(dir).observed : load_dataset(dir).graph;
  if (row_norm) row_normalize(g.features);
  return g;
}

inline EvalSplit make_split(const Graph& g, Task task, double frac_observed, double val_frac,
                            double test_frac, std::uint64_t seed) {
  Rng rng = make_rng(seed, 100);
  return task == Task::new_nodes ? make_newnode_split(g, frac_observed, rng)
                                 : make_observed_split(g, val_frac, test_frac, rng);
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Generative graph convolutional model for growing graphs", "ggcn"};
  app.require_subcommand(1);

  // synth
  std::string out_dir;
  Index n = 300, k = 3, d0 = 30;
  double p_in = 0.1, p_out = 0.01, signal = 0.9;
  std::uint64_t data_seed = 0;
  CLI::App* synth = app.add_subcommand("synth", "write a synthetic block-model dataset");
  synth->add_option("--out", out_dir, "output directory")->required();
  synth->add_option("--n", n, "node count")->check(CLI::PositiveNumber);
  synth->add_option("--k", k, "block count")->check(CLI::PositiveNumber);
  synth->add_option("--p-in", p_in, "within-block edge probability")->check(CLI::Range(0.0, 1.0));
  synth->add_option("--p-out", p_out, "cross-block edge probability")->check(CLI::Range(0.0, 1.0));
  synth->add_option("--d0", d0, "feature dimension")->check(CLI::PositiveNumber);
  synth->add_option("--signal", signal, "feature signal strength")->check(CLI::Range(0.0, 1.0));
  synth->add_option("--seed", data_seed, "random seed");

  // split
  std::string dataset_dir, task_name = "new_nodes";
  double frac_observed = 0.7, val_frac = 0.1, test_frac = 0.05;
  bool row_norm = false;
  CLI::App* split = app.add_subcommand("split", "materialize a link-prediction split");
  split->add_option("--dataset-dir", dataset_dir, "dataset directory")->required();
  split->add_option("--out", out_dir, "output directory")->required();
  split->add_option("--task", task_name, "task")->check(CLI::IsMember({"new_nodes", "observed_graph"}));
  split->add_option("--seed", data_seed, "random seed");
  split->add_option("--frac-observed", frac_observed, "fraction of nodes observed (new_nodes)");
  split->add_option("--val-frac", val_frac, "validation edge fraction (observed_graph)");
  split->add_option("--test-frac", test_frac, "test edge fraction (observed_graph)");
  split->add_flag("--row-normalize", row_norm, "scale feature rows to unit sum");

  // train
  std::string variant_name = "ggcn";
  TrainFlags tflags;
  CLI::App* train_cmd = app.add_subcommand("train", "train a model and write a checkpoint");
  train_cmd->add_option("--dataset-dir", dataset_dir, "split or dataset directory")->required();
  train_cmd->add_option("--out", out_dir, "output directory")->required();
  train_cmd->add_option("--variant", variant_name, "model variant")
      ->check(CLI::IsMember({"ggcn", "gcnvae", "mlpvae"}));
  train_cmd->add_flag("--row-normalize", row_norm, "scale feature rows to unit sum");
  tflags.attach(train_cmd);

  // eval
  std::string checkpoint_path, which = "test";
  CLI::App* eval_cmd = app.add_subcommand("eval", "score a split's queries with a checkpoint");
  eval_cmd->add_option("--dataset-dir", dataset_dir, "split directory")->required();
  eval_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  eval_cmd->add_option("--out", out_dir, "output directory")->required();
  eval_cmd->add_option("--set", which, "query set")->check(CLI::IsMember({"test", "val"}));

  // reproduce
  std::string dataset_name;
  Index runs = 1;
  TrainFlags rflags;
  CLI::App* repro = app.add_subcommand("reproduce", "split, train and evaluate all three variants");
  repro->add_option("--dataset", dataset_name, "dataset name (data/<name> unless --dataset-dir)");
  repro->add_option("--dataset-dir", dataset_dir, "dataset directory");
  repro->add_option("--out", out_dir, "output directory")->required();
  repro->add_option("--task", task_name, "task")->check(CLI::IsMember({"new_nodes", "observed_graph"}));
  repro->add_option("--frac-observed", frac_observed, "fraction of nodes observed (new_nodes)");
  repro->add_option("--val-frac", val_frac, "validation edge fraction (observed_graph)");
  repro->add_option("--test-frac", test_frac, "test edge fraction (observed_graph)");
  repro->add_option("--runs", runs, "independent splits/initializations")->check(CLI::PositiveNumber);
  repro->add_flag("--row-normalize", row_norm, "scale feature rows to unit sum");
  rflags.attach(repro);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error [flags]: " << e.what() << '\n';
    return 2;
  }

  std::string stage = "flags";
  try {
    if (synth->parsed()) {
      if (!(p_out < p_in)) throw FlagError("--p-out must be smaller than --p-in");
      if (d0 < k || n < k) throw FlagError("--d0 and --n must be at least --k");
      stage = "synth";
      Rng rng = make_rng(data_seed, 200);
      DatasetBundle bundle = gen_sbm(n, k, p_in, p_out, d0, signal, rng);
      write_dataset(bundle, out_dir);
      const Json cfg = {{"command", "synth"}, {"n", n},     {"k", k},       {"p_in", p_in},
                        {"p_out", p_out},     {"d0", d0},   {"signal", signal}, {"seed", data_seed}};
      ggcn::detail::write_text(fs::path(out_dir) / "synth.json", cfg.dump(1) + "\n");
      out << "wrote " << n << " nodes, " << bundle.graph.edge_count() << " edges to " << out_dir << '\n';
      return 0;
    }

    if (split->parsed()) {
      const Task task = parse_task(task_name);
      if (task == Task::new_nodes && !(frac_observed > 0.0 && frac_observed < 1.0)) {
        throw FlagError("--frac-observed must lie in (0,1)");
      }
      if (task == Task::observed_graph &&
          !(val_frac >= 0.0 && test_frac >= 0.0 && val_frac + test_frac < 1.0)) {
        throw FlagError("--val-frac and --test-frac must be >= 0 with sum < 1");
      }
      stage = "split";
      DatasetBundle bundle = load_dataset(dataset_dir);
      if (row_norm) row_normalize(bundle.graph.features);
      const EvalSplit s = detail::make_split(bundle.graph, task, frac_observed, val_frac,
                                             test_frac, data_seed);
      const Json provenance = {{"command", "split"},
                               {"dataset_dir", dataset_dir},
                               {"task", task_name},
                               {"frac_observed", frac_observed},
                               {"val_frac", val_frac},
                               {"test_frac", test_frac},
                               {"row_normalize", row_norm},
                               {"seed", data_seed}};
      save_split(out_dir, s, provenance);
      out << "split " << task_name << ": " << s.n_observed() << "/" << s.n_total()
          << " nodes observed, " << s.test_pos.size() << " test and " << s.val_pos.size()
          << " val positives\n";
      return 0;
    }

    if (train_cmd->parsed()) {
      const Variant variant = parse_variant(variant_name);
      TrainConfig cfg;
      try {
        cfg = tflags.resolve();
      } catch (const ContractError& e) {
        throw FlagError(e.what());
      }
      cfg.progress = &err;
      stage = "load";
      const Graph g = detail::training_graph(dataset_dir, row_norm);
      stage = "train";
      TrainResult result = train(variant, g, cfg);
      Checkpoint ck{result.params, variant, cfg,
                    {{"dataset_dir", dataset_dir}, {"row_normalize", row_norm},
                     {"train_nodes", g.n()}}};
      save_checkpoint(fs::path(out_dir) / "checkpoint.json", ck);
      ggcn::detail::write_text(fs::path(out_dir) / "history.csv", history_csv(result.history));
      out << "trained " << to_string(variant) << " for " << cfg.iterations << " iterations\n";
      return 0;
    }

    if (eval_cmd->parsed()) {
      stage = "load";
      const EvalSplit s = load_split(dataset_dir);
      const Checkpoint ck = load_checkpoint(checkpoint_path);
      stage = "eval";
      const bool val = which == "val";
      const Metrics m = evaluate(ck.params, ck.variant, s, val ? s.val_pos : s.test_pos,
                                 val ? s.val_neg : s.test_neg, ck.config.self_loops);
      Json doc = metrics_to_json(m, s.task, ck.variant, ck.config.seed);
      doc["set"] = which;
      doc["config"] = config_to_json(ck.config);
      ggcn::detail::write_text(fs::path(out_dir) / "metrics.json", doc.dump(1) + "\n");
      out << to_string(ck.variant) << " " << to_string(s.task) << " " << which
          << ": AUC=" << detail::percent(m.auc) << " AP=" << detail::percent(m.ap) << '\n';
      return 0;
    }

    if (repro->parsed()) {
      if (dataset_dir.empty() && dataset_name.empty()) {
        throw FlagError("reproduce needs --dataset or --dataset-dir");
      }
      const Task task = parse_task(task_name);
      TrainConfig base;
      try {
        base = rflags.resolve();
      } catch (const ContractError& e) {
        throw FlagError(e.what());
      }
      base.verbose = false;
      if (dataset_dir.empty()) dataset_dir = (fs::path("data") / dataset_name).string();
      if (dataset_name.empty()) dataset_name = fs::path(dataset_dir).filename().string();

      stage = "load";
      DatasetBundle bundle = load_dataset(dataset_dir);
      if (row_norm) row_normalize(bundle.graph.features);

      const Variant variants[3] = {Variant::ggcn, Variant::gcnvae, Variant::mlpvae};
      std::map<Variant, std::vector<Metrics>> results;
      Json runs_json = Json::array();
      for (Index r = 0; r < runs; ++r) {
        const std::uint64_t seed = base.seed + static_cast<std::uint64_t>(r);
        stage = "split";
        const EvalSplit s = detail::make_split(bundle.graph, task, frac_observed, val_frac,
                                               test_frac, seed);
        for (Variant v : variants) {
          stage = "train " + to_string(v);
          TrainConfig cfg = base;
          cfg.seed = seed;
          const TrainResult tr = train(v, s.observed, cfg);
          stage = "eval " + to_string(v);
          const Metrics m = evaluate_test(tr.params, v, s, cfg.self_loops);
          results[v].push_back(m);
          Json doc = metrics_to_json(m, task, v, seed);
          doc["config"] = config_to_json(cfg);
          runs_json.push_back(doc);
          if (!rflags.quiet) {
            err << "run " << r << " " << display_name(v) << ": AUC=" << detail::percent(m.auc)
                << " AP=" << detail::percent(m.ap) << '\n';
          }
        }
      }

      stage = "report";
      char line[200];
      std::snprintf(line, sizeof line, "%-8s %-16s %-16s %-18s %-18s\n", "Method", "AUC", "AP",
                    "ref AUC", "ref AP");
      out << dataset_name << " / " << to_string(task) << " (" << runs << " run"
          << (runs == 1 ? "" : "s") << ")\n" << line;
      Json summary = Json::array();
      for (Variant v : variants) {
        const auto& ms = results[v];
        auto stats = [&](auto field) {
          double mean = 0.0;
          for (const Metrics& m : ms) mean += field(m);
          mean /= static_cast<double>(ms.size());
          double var = 0.0;
          for (const Metrics& m : ms) var += (field(m) - mean) * (field(m) - mean);
          const double se = ms.size() > 1
                                ? std::sqrt(var / static_cast<double>(ms.size() - 1)) /
                                      std::sqrt(static_cast<double>(ms.size()))
                                : 0.0;
          return std::pair{mean, se};
        };
        const auto [auc_m, auc_se] = stats([](const Metrics& m) { return m.auc; });
        const auto [ap_m, ap_se] = stats([](const Metrics& m) { return m.ap; });
        const auto ref = reference_result(dataset_name, task, v);
        char a[32], b[32], ra[32] = "-", rb[32] = "-";
        std::snprintf(a, sizeof a, "%.2f +- %.2f", 100 * auc_m, 100 * auc_se);
        std::snprintf(b, sizeof b, "%.2f +- %.2f", 100 * ap_m, 100 * ap_se);
        if (ref) {
          std::snprintf(ra, sizeof ra, "%.2f +- %.1f", ref->auc, ref->auc_se);
          std::snprintf(rb, sizeof rb, "%.2f +- %.1f", ref->ap, ref->ap_se);
        }
        std::snprintf(line, sizeof line, "%-8s %-16s %-16s %-18s %-18s\n",
                      display_name(v).c_str(), a, b, ra, rb);
        out << line;
        Json row = {{"variant", to_string(v)}, {"auc", auc_m}, {"auc_se", auc_se},
                    {"ap", ap_m},              {"ap_se", ap_se}};
        if (ref) row["reference"] = {{"auc", ref->auc / 100}, {"ap", ref->ap / 100}};
        summary.push_back(row);
      }
      const Json doc = {{"dataset", dataset_name}, {"dataset_dir", dataset_dir},
                        {"task", to_string(task)}, {"runs", runs_json},
                        {"summary", summary},      {"config", config_to_json(base)},
                        {"row_normalize", row_norm}};
      ggcn::detail::write_text(fs::path(out_dir) / "summary.json", doc.dump(1) + "\n");
      return 0;
    }
  } catch (const FlagError& e) {
    err << "error [flags]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error [" << stage << "]: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace ggcn::cli
