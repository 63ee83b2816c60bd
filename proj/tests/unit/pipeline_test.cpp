#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "intentgc/checkpoint.hpp"
#include "intentgc/config.hpp"
#include "intentgc/error.hpp"
#include "intentgc/pipeline.hpp"
#include "intentgc/synthetic.hpp"
#include "test_support.hpp"

using namespace intentgc;
using intentgc::test::TempDir;

namespace {

const char* kToy =
    "gen.users = 40\n"
    "gen.items = 40\n"
    "gen.aux_per_type = 8\n"
    "gen.labels_per_user = 4\n"
    "rho = 3\n"
    "dense_widths = 16,8\n"
    "epochs = 2\n"
    "batch_size = 20\n"
    "neg_per_user = 10\n"
    "seed = 5\n";

#ifdef INTENTGC_CLI_PATH
int run_cli(const std::string& args) {
  const std::string cmd = std::string(INTENTGC_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}
#endif

}  // namespace

TEST(Synthetic, NoiseFreeLabelsStayInBlock) {
  SyntheticSpec s;
  s.noise = 0;
  s.users = 50;
  s.items = 60;
  s.user_blocks = 3;
  s.item_blocks = 2;
  const auto d = generate_synthetic(s);
  for (const auto& [u, i] : d.graph.labeled_edges()) EXPECT_EQ(d.item_block[i], s.target_block(d.user_block[u]));
  for (const auto& [u, i] : d.test) {
    EXPECT_EQ(d.item_block[i], s.target_block(d.user_block[u]));
    EXPECT_FALSE(d.graph.has_label(u, i));
  }
}

TEST(Synthetic, SameSeedSameFiles) {
  SyntheticSpec s;
  s.users = 30;
  s.items = 30;
  TempDir a("syn_a"), b("syn_b");
  write_synthetic(generate_synthetic(s), SyntheticPaths::in(a.path()));
  write_synthetic(generate_synthetic(s), SyntheticPaths::in(b.path()));
  for (const char* f : {"graph.txt", "features.txt", "test.txt", "dictionary.txt"})
    EXPECT_EQ(read_text_file(a / f), read_text_file(b / f)) << f;
  s.seed = 2;
  TempDir c("syn_c");
  write_synthetic(generate_synthetic(s), SyntheticPaths::in(c.path()));
  EXPECT_NE(read_text_file(a / "graph.txt"), read_text_file(c / "graph.txt"));
}

TEST(Pipeline, SecondRunSkipsEveryStage) {
  TempDir dir("pipe");
  const auto config = Config::parse(kToy);
  PipelineOptions o;
  o.workdir = dir.path();
  std::ostringstream log;
  const auto first = run_pipeline(config, o, log);
  EXPECT_EQ(first.ran, (std::vector<std::string>{"gen", "translate", "train", "infer", "eval"}));
  const auto ckpt = read_text_file(dir / "model.ckpt");
  const auto second = run_pipeline(config, o, log);
  EXPECT_EQ(second.skipped, (std::vector<std::string>{"gen", "translate", "train", "infer"}));
  EXPECT_EQ(second.report, first.report);
  EXPECT_EQ(read_text_file(dir / "model.ckpt"), ckpt);

  // a changed training key retrains but keeps the translation
  auto changed = Config::parse(kToy);
  changed.set("epochs", "1");
  const auto third = run_pipeline(changed, o, log);
  EXPECT_EQ(third.skipped, (std::vector<std::string>{"gen", "translate"}));
}

TEST(Pipeline, CorruptCheckpointFailsAtInfer) {
  TempDir dir("pipe_corrupt");
  const auto config = Config::parse(kToy);
  PipelineOptions o;
  o.workdir = dir.path();
  std::ostringstream log;
  run_pipeline(config, o, log);
  auto bytes = read_text_file(dir / "model.ckpt");
  bytes[bytes.size() - 20] ^= 0x01;
  write_text_file(dir / "model.ckpt", bytes);
  std::filesystem::remove(dir / "user_embeddings.txt");
  try {
    run_pipeline(config, o, log);
    FAIL() << "expected a checksum error";
  } catch (const ChecksumError& e) {
    EXPECT_NE(std::string(e.what()).find("infer"), std::string::npos) << e.what();
  }
}

TEST(Pipeline, RhoMismatchIsConfigError) {
  TempDir dir("pipe_rho");
  auto config = Config::parse(kToy);
  PipelineOptions o;
  o.workdir = dir.path();
  std::ostringstream log;
  run_pipeline(config, o, log);
  const auto graph = load_graph(dir / "graph.txt", dir / "dictionary.txt");
  const auto features = load_features(dir / "features.txt", graph);
  const auto translated = load_translated(dir / "translated.txt");
  config.set("rho", "4");
  EXPECT_THROW(stage_train(graph, translated, features, config, dir / "x.ckpt", log), ConfigError);
}

#ifdef INTENTGC_CLI_PATH
TEST(Cli, ExitCodes) {
  TempDir dir("cli");
  write_text_file(dir / "toy.cfg", kToy);
  const std::string cfg = "--config " + (dir / "toy.cfg").string();
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli("--precision f16 gen --out-dir " + dir.path().string()), 1);
  write_text_file(dir / "bad.cfg", "nonsense_key = 1\n");
  EXPECT_EQ(run_cli("--config " + (dir / "bad.cfg").string() + " gen --out-dir " + dir.path().string()), 1);
  // a missing input is a usage problem, a malformed one a runtime failure
  EXPECT_EQ(run_cli(cfg + " translate --graph " + (dir / "missing.txt").string() + " --out " +
                    (dir / "t.txt").string()),
            1);
  write_text_file(dir / "junk.txt", "#nodes user 1\n#nodes item 1\n#labels\n0\n");
  EXPECT_EQ(run_cli(cfg + " translate --graph " + (dir / "junk.txt").string() + " --out " +
                    (dir / "t.txt").string()),
            2);
  EXPECT_EQ(run_cli(cfg + " pipeline --workdir " + dir.path().string()), 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "report.txt"));
  EXPECT_EQ(run_cli(cfg + " --mode bitwise pipeline --workdir " + (dir / "b").string()), 0);

  auto bytes = read_text_file(dir / "model.ckpt");
  bytes[40] ^= 0x10;
  write_text_file(dir / "model.ckpt", bytes);
  const std::string common = " --graph " + (dir / "graph.txt").string() + " --dictionary " +
                             (dir / "dictionary.txt").string() + " --translated " +
                             (dir / "translated.txt").string() + " --features " + (dir / "features.txt").string() +
                             " --checkpoint " + (dir / "model.ckpt").string();
  EXPECT_EQ(run_cli(cfg + " infer" + common + " --user-out " + (dir / "u.txt").string() + " --item-out " +
                    (dir / "i.txt").string()),
            2);
}
#endif
