#include "intentgc/pipeline.hpp"

#include <ostream>

#include "intentgc/checkpoint.hpp"
#include "intentgc/error.hpp"
#include "intentgc/recommend.hpp"
#include "intentgc/synthetic.hpp"
#include "intentgc/trainer.hpp"
#include "text_util.hpp"

namespace intentgc {

namespace fs = std::filesystem;

TranslateOptions translate_options_from(const Config& config) {
  TranslateOptions o;
  o.rho = static_cast<std::uint32_t>(config.get_u64("rho", o.rho));
  o.hot_threshold = static_cast<std::uint32_t>(config.get_u64("hot_threshold", o.hot_threshold));
  for (const auto& [key, value] : config.entries())
    if (key.starts_with("hot_threshold."))
      o.hot_threshold_by_type[key.substr(14)] = static_cast<std::uint32_t>(config.get_u64(key, 0));
  o.aux_types = config.get_list("aux_types");
  if (o.rho < 1) throw ConfigError("rho must be >= 1");
  if (o.hot_threshold < 1) throw ConfigError("hot_threshold must be >= 1");
  for (const auto& [name, t] : o.hot_threshold_by_type)
    if (t < 1) throw ConfigError("hot_threshold." + name + " must be >= 1");
  return o;
}

EvalOptions eval_options_from(const Config& config) {
  EvalOptions o;
  o.neg_per_user = static_cast<std::uint32_t>(config.get_u64("neg_per_user", o.neg_per_user));
  o.seed = config.get_u64("seed", o.seed);
  if (config.has("metrics")) {
    o.compute_auc = o.compute_mrr = false;
    for (const auto& m : config.get_list("metrics")) {
      if (m == "auc") o.compute_auc = true;
      else if (m == "mrr") o.compute_mrr = true;
      else throw ConfigError("unknown metric '" + m + "' (expected auc|mrr)");
    }
  }
  if (o.compute_auc && o.neg_per_user < 1) throw ConfigError("neg_per_user must be >= 1");
  return o;
}

TranslatedGraph stage_translate(const TypedGraph& graph, const Config& config, const fs::path& out) {
  TranslatedGraph t = translate(graph, translate_options_from(config));
  write_translated(t, out);
  return t;
}

namespace {

template <class Real>
void train_at(const TypedGraph& graph, const TranslatedGraph& translated, const FeatureFile& features,
              const Config& config, const TrainConfig& tc, const fs::path& path, std::ostream& log,
              const std::vector<LabeledEdge>& validation) {
  const TrainData data{graph, translated, features};
  Trainer<Real> trainer(data, tc);
  const EvalOptions eopts = eval_options_from(config);
  typename Trainer<Real>::Validator validate;
  if (!validation.empty()) {
    validate = [&](const ModelParams<Real>& model) {
      const auto users = infer_all(model, Side::user, translated, features.features);
      const auto items = infer_all(model, Side::item, translated, features.features);
      EvalOptions o = eopts;
      o.compute_auc = true;
      o.compute_mrr = false;
      return evaluate(validation, graph.labeled_edges(), users, items, o).auc;
    };
  }
  auto save = [&](const ModelParams<Real>& model, std::uint64_t epochs) {
    Checkpoint<Real> ckpt;
    ckpt.config_fingerprint = config.fingerprint();
    ckpt.translated_fingerprint = translated.fingerprint;
    ckpt.epochs = epochs;
    ckpt.model = model;
    save_checkpoint(ckpt, path);
  };
  std::uint64_t done = 0;
  trainer.train(
      [&](const EpochStats& s, const ModelParams<Real>& model) {
        log << "epoch " << s.epoch << " loss " << text::format_fixed(s.loss, 6);
        if (s.val_auc) log << " val_auc " << text::format_fixed(*s.val_auc, 6);
        log << '\n';
        log.flush();
        done = s.epoch;
        if (tc.checkpoint_every > 0 && s.epoch % tc.checkpoint_every == 0) save(model, s.epoch);
      },
      validate);
  save(trainer.model(), done);
}

template <class Real>
std::string infer_at(const TranslatedGraph& translated, const FeatureFile& features, const fs::path& path,
                     const fs::path& user_out, const fs::path& item_out, const fs::path& recommend_out,
                     const KnnOptions& knn) {
  const std::string digest = checkpoint_digest(path);
  const Checkpoint<Real> ckpt = load_checkpoint<Real>(path);
  if (ckpt.translated_fingerprint != translated.fingerprint)
    throw FingerprintMismatch("checkpoint was trained on translated graph " + ckpt.translated_fingerprint +
                              ", given " + translated.fingerprint);
  const auto users = infer_all(ckpt.model, Side::user, translated, features.features);
  write_text_file(user_out, format_embeddings(users, translated.user_names, digest));
  const auto items = infer_all(ckpt.model, Side::item, translated, features.features);
  write_text_file(item_out, format_embeddings(items, translated.item_names, digest));
  if (!recommend_out.empty())
    write_text_file(recommend_out, format_recommendations(recommend(users, items, knn), translated.user_names,
                                                          translated.item_names, knn, digest));
  return digest;
}

template <class Real>
std::string eval_at(const TypedGraph& graph, const TranslatedGraph& translated, const FeatureFile& features,
                    const fs::path& path, const std::vector<LabeledEdge>& test, const Config& config,
                    const EvalOptions& options, EvalReport* out) {
  const std::string digest = checkpoint_digest(path);
  const Checkpoint<Real> ckpt = load_checkpoint<Real>(path);
  if (ckpt.translated_fingerprint != translated.fingerprint)
    throw FingerprintMismatch("checkpoint was trained on translated graph " + ckpt.translated_fingerprint +
                              ", given " + translated.fingerprint);
  const auto users = infer_all(ckpt.model, Side::user, translated, features.features);
  const auto items = infer_all(ckpt.model, Side::item, translated, features.features);
  const EvalReport report = evaluate(test, graph.labeled_edges(), users, items, options);
  if (out) *out = report;
  return format_report(report, options, config.fingerprint()) + "model " + digest + "\n";
}

}  // namespace

void stage_train(const TypedGraph& graph, const TranslatedGraph& translated, const FeatureFile& features,
                 const Config& config, const fs::path& checkpoint, std::ostream& log,
                 const std::vector<LabeledEdge>& validation) {
  const TrainConfig tc = TrainConfig::from(config);
  if (tc.precision == Precision::f32)
    train_at<float>(graph, translated, features, config, tc, checkpoint, log, validation);
  else
    train_at<double>(graph, translated, features, config, tc, checkpoint, log, validation);
}

std::string stage_infer(const TranslatedGraph& translated, const FeatureFile& features, const fs::path& checkpoint,
                        const fs::path& user_out, const fs::path& item_out, const fs::path& recommend_out,
                        const KnnOptions& knn) {
  return checkpoint_precision(checkpoint) == 4
             ? infer_at<float>(translated, features, checkpoint, user_out, item_out, recommend_out, knn)
             : infer_at<double>(translated, features, checkpoint, user_out, item_out, recommend_out, knn);
}

std::string stage_eval(const TypedGraph& graph, const TranslatedGraph& translated, const FeatureFile& features,
                       const fs::path& checkpoint, const std::vector<LabeledEdge>& test, const Config& config,
                       const EvalOptions& options, EvalReport* report) {
  return checkpoint_precision(checkpoint) == 4
             ? eval_at<float>(graph, translated, features, checkpoint, test, config, options, report)
             : eval_at<double>(graph, translated, features, checkpoint, test, config, options, report);
}

namespace {

// Rethrows with the stage name prefixed, keeping the error class.
template <class F>
auto staged(const std::string& name, F&& f) {
  const std::string tag = "stage " + name + ": ";
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(tag + e.what());
  } catch (const ChecksumError& e) {
    throw ChecksumError(tag + e.what());
  } catch (const SchemaMismatch& e) {
    throw SchemaMismatch(tag + e.what());
  } catch (const FingerprintMismatch& e) {
    throw FingerprintMismatch(tag + e.what());
  } catch (const NumericError& e) {
    throw NumericError(tag + e.what());
  } catch (const IndexOutOfRange& e) {
    throw IndexOutOfRange(tag + e.what());
  } catch (const std::exception& e) {
    throw Error(tag + e.what());
  }
}

/// Value of the `#fingerprint` header of a text artifact, or empty.
std::string header_fingerprint(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) return {};
  const std::string content = read_text_file(path);
  std::size_t pos = 0;
  while (pos < content.size() && content[pos] == '#') {
    const auto end = content.find('\n', pos);
    const std::string line = content.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    if (line.starts_with("#fingerprint ")) return text::trim(line.substr(13));
    if (end == std::string::npos) break;
    pos = end + 1;
  }
  return {};
}

std::string gen_fingerprint(const Config& config) {
  std::string key;
  for (const auto& [k, v] : config.entries())
    if (k.starts_with("gen.") || k == "seed") key += k + "=" + v + "\n";
  return text::hex64(text::fnv1a(key));
}

}  // namespace

PipelineResult run_pipeline(const Config& config, const PipelineOptions& options, std::ostream& log) {
  if (options.workdir.empty()) throw ConfigError("pipeline needs a work directory");
  // validate every stage's settings before running anything
  translate_options_from(config);
  TrainConfig::from(config);
  eval_options_from(config);
  if (options.graph.empty()) SyntheticSpec::from(config);
  else if (options.features.empty()) throw ConfigError("pipeline with --graph also needs --features");

  fs::create_directories(options.workdir);
  PipelineResult result;
  auto note = [&](const std::string& stage, bool ran) {
    (ran ? result.ran : result.skipped).push_back(stage);
    log << "[pipeline] " << stage << (ran ? ": done" : ": up to date, skipped") << '\n';
  };

  fs::path graph_path = options.graph, dict_path = options.dictionary, features_path = options.features,
           test_path = options.test;
  if (graph_path.empty()) {
    const auto paths = SyntheticPaths::in(options.workdir);
    graph_path = paths.graph;
    dict_path = paths.dictionary;
    features_path = paths.features;
    test_path = paths.test;
    const fs::path stamp = options.workdir / "gen.fingerprint";
    const std::string fp = gen_fingerprint(config);
    std::error_code ec;
    const bool fresh = !options.force && fs::is_regular_file(stamp, ec) && read_text_file(stamp) == fp + "\n" &&
                       fs::is_regular_file(paths.graph, ec) && fs::is_regular_file(paths.features, ec) &&
                       fs::is_regular_file(paths.test, ec) && fs::is_regular_file(paths.dictionary, ec);
    if (!fresh) {
      staged("gen", [&] {
        write_synthetic(generate_synthetic(SyntheticSpec::from(config)), paths);
        write_text_file(stamp, fp + "\n");
        return 0;
      });
    }
    note("gen", !fresh);
  }

  const TypedGraph graph = staged("load", [&] { return load_graph(graph_path, dict_path); });
  const FeatureFile features = staged("load", [&] { return load_features(features_path, graph); });

  const fs::path translated_path = options.workdir / "translated.txt";
  const std::string tfp = translation_fingerprint(graph, translate_options_from(config));
  TranslatedGraph translated;
  const bool translated_fresh = !options.force && header_fingerprint(translated_path) == tfp;
  if (translated_fresh)
    translated = staged("translate", [&] { return load_translated(translated_path); });
  else
    translated = staged("translate", [&] { return stage_translate(graph, config, translated_path); });
  note("translate", !translated_fresh);

  const fs::path ckpt_path = options.workdir / "model.ckpt";
  const auto header = peek_checkpoint(ckpt_path);
  const bool trained = !options.force && header && header->config_fingerprint == config.fingerprint() &&
                       header->translated_fingerprint == translated.fingerprint;
  if (!trained)
    staged("train", [&] {
      stage_train(graph, translated, features, config, ckpt_path, log);
      return 0;
    });
  note("train", !trained);

  const fs::path user_emb = options.workdir / "user_embeddings.txt";
  const fs::path item_emb = options.workdir / "item_embeddings.txt";
  const std::string digest = staged("infer", [&] { return checkpoint_digest(ckpt_path); });
  const bool inferred = !options.force && header_fingerprint(user_emb) == digest && header_fingerprint(item_emb) == digest;
  if (!inferred) staged("infer", [&] { return stage_infer(translated, features, ckpt_path, user_emb, item_emb); });
  note("infer", !inferred);

  std::error_code ec;
  if (!test_path.empty() && fs::is_regular_file(test_path, ec)) {
    result.report = staged("eval", [&] {
      const auto test = load_pairs(test_path, graph.names(kUserType), graph.names(kItemType));
      return stage_eval(graph, translated, features, ckpt_path, test, config, eval_options_from(config));
    });
    write_text_file(options.workdir / "report.txt", result.report);
    note("eval", true);
  } else {
    log << "[pipeline] eval: no test pairs, skipped\n";
  }
  return result;
}

}  // namespace intentgc
