// intentgc command-line tool: gen, translate, train, infer, eval, bench, pipeline.
//
// Exit codes: 0 ok, 1 configuration/usage error, 2 runtime error.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>

#include "intentgc/bench.hpp"
#include "intentgc/config.hpp"
#include "intentgc/error.hpp"
#include "intentgc/eval.hpp"
#include "intentgc/features.hpp"
#include "intentgc/graph.hpp"
#include "intentgc/pipeline.hpp"
#include "intentgc/synthetic.hpp"
#include "intentgc/translate.hpp"

namespace fs = std::filesystem;
using namespace intentgc;

namespace {

struct Globals {
  std::string config_path;
  std::string seed;
  std::string precision;
  std::string mode;
};

Config build_config(const Globals& g) {
  Config c = g.config_path.empty() ? Config() : Config::load(g.config_path);
  if (!g.seed.empty()) c.set("seed", g.seed);
  if (!g.precision.empty()) c.set("precision", g.precision);
  if (!g.mode.empty()) c.set("mode", g.mode);
  return c;
}

void require_file(const std::string& path, const char* what) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw ConfigError(std::string(what) + " file not found: " + path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IntentGC: dual graph convolution recommender (translate, train, infer, eval)"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config_path, "key = value configuration file");
  app.add_option("--seed", g.seed, "random seed (overrides config)");
  app.add_option("--precision", g.precision, "f32 or f64 (overrides config)")->check(CLI::IsMember({"f32", "f64"}));
  app.add_option("--mode", g.mode, "vectorwise or bitwise (overrides config)")
      ->check(CLI::IsMember({"vectorwise", "bitwise"}));

  std::string graph, dictionary, features, translated, checkpoint, test, out, out_dir, user_out, item_out,
      validation, metrics, workdir, bench_m, recommend_out, knn_method;
  unsigned neg_per_user = 0, reps = 0, nodes = 0, knn_k = 0;
  bool force = false;

  auto* gen = app.add_subcommand("gen", "write a planted synthetic dataset");
  gen->add_option("--out-dir", out_dir, "output directory")->required();

  auto* tr = app.add_subcommand("translate", "build user-user and item-item neighborhoods");
  tr->add_option("--graph", graph, "graph file")->required();
  tr->add_option("--dictionary", dictionary, "id dictionary file");
  tr->add_option("--out", out, "translated graph output")->required();

  auto* train = app.add_subcommand("train", "train both towers");
  train->add_option("--graph", graph, "graph file")->required();
  train->add_option("--dictionary", dictionary, "id dictionary file");
  train->add_option("--translated", translated, "translated graph")->required();
  train->add_option("--features", features, "feature file")->required();
  train->add_option("--validation", validation, "held-out user-item pairs for val_auc");
  train->add_option("--out", out, "checkpoint output")->required();

  auto* infer = app.add_subcommand("infer", "export user and item embeddings");
  infer->add_option("--graph", graph, "graph file")->required();
  infer->add_option("--dictionary", dictionary, "id dictionary file");
  infer->add_option("--translated", translated, "translated graph")->required();
  infer->add_option("--features", features, "feature file")->required();
  infer->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
  infer->add_option("--user-out", user_out, "user embedding output")->required();
  infer->add_option("--item-out", item_out, "item embedding output")->required();
  infer->add_option("--recommend", recommend_out, "also write top-k items per user here");
  infer->add_option("--k", knn_k, "items per user (overrides knn_k)");
  infer->add_option("--knn", knn_method, "exact or approximate (overrides knn_method)")
      ->check(CLI::IsMember({"exact", "approximate"}));

  auto* ev = app.add_subcommand("eval", "AUC and scaled MRR on held-out pairs");
  ev->add_option("--graph", graph, "graph file (training labels)")->required();
  ev->add_option("--dictionary", dictionary, "id dictionary file");
  ev->add_option("--translated", translated, "translated graph")->required();
  ev->add_option("--features", features, "feature file")->required();
  ev->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
  ev->add_option("--test", test, "test pairs")->required();
  ev->add_option("--metric", metrics, "comma list of auc,mrr");
  ev->add_option("--neg-per-user", neg_per_user, "AUC negatives per test user");
  ev->add_option("--out", out, "also write the report here");

  auto* bench = app.add_subcommand("bench", "time vector-wise vs bit-wise conv layers");
  bench->add_option("--m", bench_m, "comma list of widths");
  bench->add_option("--reps", reps, "timed repetitions (>= 5)");
  bench->add_option("--nodes", nodes, "rows per layer call");
  bench->add_option("--out", out, "also write the table here");

  auto* pipe = app.add_subcommand("pipeline", "translate, train, infer and eval in one run");
  pipe->add_option("--workdir", workdir, "directory for all artifacts")->required();
  pipe->add_option("--graph", graph, "graph file (default: generate synthetic data)");
  pipe->add_option("--dictionary", dictionary, "id dictionary file");
  pipe->add_option("--features", features, "feature file");
  pipe->add_option("--test", test, "test pairs");
  pipe->add_flag("--force", force, "rerun every stage");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    Config config = build_config(g);
    auto load_inputs_graph = [&] {
      require_file(graph, "graph");
      if (!dictionary.empty()) require_file(dictionary, "dictionary");
      return load_graph(graph, dictionary);
    };

    if (*gen) {
      const SyntheticSpec spec = SyntheticSpec::from(config);
      fs::create_directories(out_dir);
      write_synthetic(generate_synthetic(spec), SyntheticPaths::in(out_dir));
      std::cout << "wrote synthetic dataset to " << out_dir << '\n';
    } else if (*tr) {
      translate_options_from(config);
      const TypedGraph g0 = load_inputs_graph();
      const TranslatedGraph t = stage_translate(g0, config, out);
      std::cout << "translated " << t.relations.size() << " relation types, fingerprint " << t.fingerprint << '\n';
    } else if (*train) {
      const TypedGraph g0 = load_inputs_graph();
      require_file(translated, "translated graph");
      require_file(features, "feature");
      const TranslatedGraph t = load_translated(translated);
      const FeatureFile f = load_features(features, g0);
      std::vector<LabeledEdge> val;
      if (!validation.empty()) {
        require_file(validation, "validation");
        val = load_pairs(validation, g0.names(kUserType), g0.names(kItemType));
      }
      stage_train(g0, t, f, config, out, std::cout, val);
    } else if (*infer) {
      if (!knn_method.empty()) config.set("knn_method", knn_method);
      if (knn_k > 0) config.set("knn_k", std::to_string(knn_k));
      const KnnOptions knn = KnnOptions::from(config);
      const TypedGraph g0 = load_inputs_graph();
      require_file(translated, "translated graph");
      require_file(features, "feature");
      require_file(checkpoint, "checkpoint");
      const TranslatedGraph t = load_translated(translated);
      const FeatureFile f = load_features(features, g0);
      const std::string digest = stage_infer(t, f, checkpoint, user_out, item_out, recommend_out, knn);
      std::cout << "wrote embeddings (model " << digest << ")\n";
    } else if (*ev) {
      if (!metrics.empty()) config.set("metrics", metrics);
      if (neg_per_user > 0) config.set("neg_per_user", std::to_string(neg_per_user));
      const EvalOptions options = eval_options_from(config);
      const TypedGraph g0 = load_inputs_graph();
      require_file(translated, "translated graph");
      require_file(features, "feature");
      require_file(checkpoint, "checkpoint");
      require_file(test, "test");
      const TranslatedGraph t = load_translated(translated);
      const FeatureFile f = load_features(features, g0);
      const auto pairs = load_pairs(test, g0.names(kUserType), g0.names(kItemType));
      const std::string report = stage_eval(g0, t, f, checkpoint, pairs, config, options);
      std::cout << report;
      if (!out.empty()) write_text_file(out, report);
    } else if (*bench) {
      if (!bench_m.empty()) config.set("bench.m", bench_m);
      if (reps > 0) config.set("bench.reps", std::to_string(reps));
      if (nodes > 0) config.set("bench.nodes", std::to_string(nodes));
      const auto table = format_bench_table(bench_conv(BenchOptions::from(config)));
      std::cout << table;
      if (!out.empty()) write_text_file(out, table);
    } else if (*pipe) {
      PipelineOptions options;
      options.workdir = workdir;
      options.graph = graph;
      options.dictionary = dictionary;
      options.features = features;
      options.test = test;
      options.force = force;
      const PipelineResult result = run_pipeline(config, options, std::cout);
      std::cout << result.report;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
