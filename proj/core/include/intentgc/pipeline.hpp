#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "intentgc/config.hpp"
#include "intentgc/eval.hpp"
#include "intentgc/features.hpp"
#include "intentgc/graph.hpp"
#include "intentgc/recommend.hpp"
#include "intentgc/translate.hpp"

namespace intentgc {

TranslateOptions translate_options_from(const Config& config);
EvalOptions eval_options_from(const Config& config);

// Stage functions shared by the CLI subcommands and run_pipeline.

TranslatedGraph stage_translate(const TypedGraph& graph, const Config& config, const std::filesystem::path& out);

/// Trains at the configured precision and writes the checkpoint (also every
/// checkpoint_every epochs). Logs `epoch <n> loss <v> [val_auc <v>]` lines.
void stage_train(const TypedGraph& graph, const TranslatedGraph& translated, const FeatureFile& features,
                 const Config& config, const std::filesystem::path& checkpoint, std::ostream& log,
                 const std::vector<LabeledEdge>& validation = {});

/// Writes both embedding files stamped with the checkpoint digest; returns it.
/// With a non-empty recommend_out, also writes top-k items per user.
std::string stage_infer(const TranslatedGraph& translated, const FeatureFile& features,
                        const std::filesystem::path& checkpoint, const std::filesystem::path& user_out,
                        const std::filesystem::path& item_out, const std::filesystem::path& recommend_out = {},
                        const KnnOptions& knn = {});

/// Embeds with the checkpoint, evaluates `test` and returns the report text.
std::string stage_eval(const TypedGraph& graph, const TranslatedGraph& translated, const FeatureFile& features,
                       const std::filesystem::path& checkpoint, const std::vector<LabeledEdge>& test,
                       const Config& config, const EvalOptions& options, EvalReport* report = nullptr);

struct PipelineOptions {
  std::filesystem::path workdir;
  /// Inputs; when graph is empty, synthetic data is generated into workdir.
  std::filesystem::path graph, dictionary, features, test;
  bool force = false;
};

struct PipelineResult {
  std::vector<std::string> ran;
  std::vector<std::string> skipped;
  std::string report;
};

/// gen (when needed), translate, train, infer, eval. A stage is skipped when
/// its outputs exist and carry the fingerprint the current inputs would
/// produce, unless force is set. Failures are rethrown tagged with the stage.
PipelineResult run_pipeline(const Config& config, const PipelineOptions& options, std::ostream& log);

}  // namespace intentgc
