#pragma once

// On-disk artifacts: checkpoints, split manifests, training-history CSV and
// metrics documents. All JSON; doubles are written with round-trip
// precision so that reloading is bit-exact.
//
// Checkpoint layout (version 1):
//   {
//     "format": "ggcn-checkpoint", "version": 1,
//     "variant": "ggcn" | "gcnvae" | "mlpvae",
//     "config": { ...resolved TrainConfig... },
//     "extra": { ...free-form provenance... },
//     "tensors": [ {"name": "W0", "rows": r, "cols": c, "values": [row-major]},
//                  {"name": "W1", ...}, {"name": "W2", ...} ]
//   }

#include <filesystem>
#include <fstream>
#include <string>
#include <utility>

#include "json.hpp"

#include "ggcn/data.hpp"
#include "ggcn/errors.hpp"
#include "ggcn/eval.hpp"
#include "ggcn/model.hpp"
#include "ggcn/train.hpp"

namespace ggcn {

using Json = nlohmann::json;

inline constexpr int kCheckpointVersion = 1;
inline constexpr int kSplitVersion = 1;

inline Json matrix_to_json(const std::string& name, const Matrix& m) {
  Json values = Json::array();
  for (Index i = 0; i < m.size(); ++i) values.push_back(m.data()[i]);
  return {{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"values", std::move(values)}};
}

inline Matrix matrix_from_json(const Json& j) {
  const Index rows = j.at("rows").get<Index>();
  const Index cols = j.at("cols").get<Index>();
  const Json& values = j.at("values");
  if (rows < 0 || cols < 0 || static_cast<Index>(values.size()) != rows * cols) {
    throw ParseError("tensor '" + j.value("name", std::string("?")) + "' declares " +
                     detail::shape_str(rows, cols) + " but stores " +
                     std::to_string(values.size()) + " values");
  }
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = values[static_cast<std::size_t>(i)].get<double>();
  return m;
}

inline std::string to_string(SelfLoops s) { return s == SelfLoops::all ? "all" : "new_only"; }
inline std::string to_string(ReconTarget r) { return r == ReconTarget::all ? "all" : "old_only"; }
inline std::string to_string(PriorMode p) { return p == PriorMode::adaptive ? "adaptive" : "standard"; }

inline SelfLoops parse_self_loops(const std::string& s) {
  if (s == "all") return SelfLoops::all;
  if (s == "new_only") return SelfLoops::new_only;
  throw ContractError("unknown self-loop policy '" + s + "'");
}

inline ReconTarget parse_recon_target(const std::string& s) {
  if (s == "all") return ReconTarget::all;
  if (s == "old_only") return ReconTarget::old_only;
  throw ContractError("unknown reconstruction target '" + s + "'");
}

inline PriorMode parse_prior_mode(const std::string& s) {
  if (s == "adaptive") return PriorMode::adaptive;
  if (s == "standard") return PriorMode::standard;
  throw ContractError("unknown prior mode '" + s + "'");
}

// "density" or a number in [0,1].
inline PTildePolicy parse_p_tilde(const std::string& s) {
  if (s == "density") return {};
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || !(v >= 0.0 && v <= 1.0)) {
    throw ContractError("p-tilde must be 'density' or a number in [0,1], got '" + s + "'");
  }
  return {false, v};
}

inline std::string to_string(const PTildePolicy& p) {
  return p.density ? "density" : detail::format_number(p.value);
}

inline Json config_to_json(const TrainConfig& c) {
  return {{"hidden_dim", c.hidden_dim},
          {"latent_dim", c.latent_dim},
          {"learning_rate", c.learning_rate},
          {"iterations", c.iterations},
          {"beta", c.beta},
          {"num_batches", c.num_batches},
          {"p_tilde", to_string(c.p_tilde)},
          {"self_loops", to_string(c.self_loops)},
          {"recon_target", to_string(c.recon_target)},
          {"prior", to_string(c.prior)},
          {"seed", c.seed}};
}

inline TrainConfig config_from_json(const Json& j) {
  TrainConfig c;
  c.hidden_dim = j.at("hidden_dim").get<Index>();
  c.latent_dim = j.at("latent_dim").get<Index>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.iterations = j.at("iterations").get<Index>();
  c.beta = j.at("beta").get<double>();
  c.num_batches = j.at("num_batches").get<Index>();
  c.p_tilde = parse_p_tilde(j.at("p_tilde").get<std::string>());
  c.self_loops = parse_self_loops(j.at("self_loops").get<std::string>());
  c.recon_target = parse_recon_target(j.at("recon_target").get<std::string>());
  c.prior = parse_prior_mode(j.value("prior", std::string("adaptive")));
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

inline Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace detail

struct Checkpoint {
  ModelParams params;
  Variant variant = Variant::ggcn;
  TrainConfig config;
  Json extra = Json::object();
};

inline Json checkpoint_to_json(const Checkpoint& ck) {
  Json tensors = Json::array();
  const char* names[3] = {"W0", "W1", "W2"};
  for (int k = 0; k < 3; ++k) tensors.push_back(matrix_to_json(names[k], ck.params.weights[k]));
  return {{"format", "ggcn-checkpoint"},
          {"version", kCheckpointVersion},
          {"variant", to_string(ck.variant)},
          {"config", config_to_json(ck.config)},
          {"extra", ck.extra},
          {"tensors", std::move(tensors)}};
}

inline Checkpoint checkpoint_from_json(const Json& j) {
  if (j.value("format", std::string()) != "ggcn-checkpoint") {
    throw ParseError("not a ggcn checkpoint");
  }
  if (j.at("version").get<int>() != kCheckpointVersion) {
    throw ParseError("unsupported checkpoint version " + j.at("version").dump());
  }
  Checkpoint ck;
  ck.variant = parse_variant(j.at("variant").get<std::string>());
  ck.config = config_from_json(j.at("config"));
  ck.extra = j.value("extra", Json::object());
  const Json& tensors = j.at("tensors");
  const char* names[3] = {"W0", "W1", "W2"};
  if (tensors.size() != 3) throw ParseError("checkpoint must hold exactly W0, W1, W2");
  for (int k = 0; k < 3; ++k) {
    if (tensors[k].at("name").get<std::string>() != names[k]) {
      throw ParseError(std::string("checkpoint tensor ") + std::to_string(k) + " should be " + names[k]);
    }
    ck.params.weights[k] = matrix_from_json(tensors[k]);
  }
  ck.params.validate();
  return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  detail::write_text(path, checkpoint_to_json(ck).dump(1) + "\n");
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  try {
    return checkpoint_from_json(detail::read_json(path));
  } catch (const Json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

// iteration,step_index,recon,kl,total
inline std::string history_csv(const TrainHistory& h) {
  std::string out = "iteration,step_index,recon,kl,total\n";
  for (std::size_t it = 0; it < h.steps.size(); ++it) {
    for (std::size_t s = 0; s < h.steps[it].size(); ++s) {
      const LossBreakdown& l = h.steps[it][s];
      out += std::to_string(it) + "," + std::to_string(s) + "," + detail::format_number(l.recon) +
             "," + detail::format_number(l.kl) + "," + detail::format_number(l.total) + "\n";
    }
  }
  return out;
}

inline Json metrics_to_json(const Metrics& m, Task task, Variant variant, std::uint64_t seed) {
  return {{"task", to_string(task)}, {"variant", to_string(variant)},
          {"auc", m.auc},            {"ap", m.ap},
          {"n_pos", m.n_pos},        {"n_neg", m.n_neg},
          {"seed", seed}};
}

inline Json pairs_to_json(const std::vector<NodePair>& pairs) {
  Json out = Json::array();
  for (auto [i, j] : pairs) out.push_back({i, j});
  return out;
}

inline std::vector<NodePair> pairs_from_json(const Json& j) {
  std::vector<NodePair> out;
  for (const Json& p : j) out.emplace_back(p.at(0).get<Index>(), p.at(1).get<Index>());
  return out;
}

// A split directory holds split.json (task, id map, queries, provenance),
// plus features.tsv (all nodes, split order) and edges.tsv (observed edges).
inline void save_split(const std::filesystem::path& dir, const EvalSplit& split,
                       const Json& provenance) {
  DatasetBundle bundle;
  bundle.graph.adjacency = Matrix::Zero(split.n_total(), split.n_total());
  bundle.graph.adjacency.topLeftCorner(split.n_observed(), split.n_observed()) =
      split.observed.adjacency;
  bundle.graph.features = split.full_features;
  write_dataset(bundle, dir);
  Json manifest = {{"format", "ggcn-split"},
                   {"version", kSplitVersion},
                   {"task", to_string(split.task)},
                   {"n_total", split.n_total()},
                   {"n_observed", split.n_observed()},
                   {"node_ids", split.node_ids},
                   {"val_pos", pairs_to_json(split.val_pos)},
                   {"val_neg", pairs_to_json(split.val_neg)},
                   {"test_pos", pairs_to_json(split.test_pos)},
                   {"test_neg", pairs_to_json(split.test_neg)},
                   {"provenance", provenance}};
  detail::write_text(dir / "split.json", manifest.dump(1) + "\n");
}

inline bool is_split_dir(const std::filesystem::path& dir) {
  return std::filesystem::exists(dir / "split.json");
}

inline EvalSplit load_split(const std::filesystem::path& dir) {
  const Json m = detail::read_json(dir / "split.json");
  try {
    if (m.value("format", std::string()) != "ggcn-split") throw ParseError("not a ggcn split");
    const DatasetBundle all = load_dataset(dir);
    EvalSplit s;
    s.task = parse_task(m.at("task").get<std::string>());
    const Index total = m.at("n_total").get<Index>();
    const Index observed = m.at("n_observed").get<Index>();
    if (all.graph.n() != total || observed > total) {
      throw ParseError("split.json node counts disagree with features.tsv");
    }
    s.full_features = all.graph.features;
    s.observed.adjacency = all.graph.adjacency.topLeftCorner(observed, observed);
    s.observed.features = all.graph.features.topRows(observed);
    s.node_ids = m.at("node_ids").get<std::vector<Index>>();
    s.val_pos = pairs_from_json(m.at("val_pos"));
    s.val_neg = pairs_from_json(m.at("val_neg"));
    s.test_pos = pairs_from_json(m.at("test_pos"));
    s.test_neg = pairs_from_json(m.at("test_neg"));
    s.validate();
    return s;
  } catch (const Json::exception& e) {
    throw ParseError((dir / "split.json").string() + ": " + e.what());
  }
}

}  // namespace ggcn
