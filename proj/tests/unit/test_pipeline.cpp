#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "celldict/errors.hpp"
#include "celldict/pipeline.hpp"
#include "tree.hpp"

using namespace celldict;

namespace {

RunConfig small_run(const fs::path& dataset) {
  RunConfig cfg;
  cfg.dataset = dataset.string();
  cfg.learn.k = 4;
  cfg.learn.outer_iters = 6;
  cfg.cluster.n_perm = 50;
  cfg.cluster.n_boot = 20;
  cfg.cluster.n_init = 5;
  return cfg;
}

SynthConfig small_synth() {
  SynthConfig s;
  s.n_cells = 24;
  s.channels = 3;
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string(CELLDICT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void end_to_end(const fs::path& root, const fs::path& raw_dir, std::size_t threads) {
  RunConfig cfg = small_run(root / "pre" / "manifest.json");
  cfg.threads = threads;
  cmd_preprocess(raw_dir, root / "pre", cfg);
  cmd_train(cfg, root / "run");
  cmd_describe(cfg, root / "run" / "model", root / "run");
  cmd_validate(cfg, root / "run" / "descriptors", root / "run");
}

}  // namespace

TEST(CmdSynth, WritesLoadableDatasets) {
  const fs::path dir = testutil::fresh_dir("celldict_pipe_synth");
  SynthConfig s = small_synth();
  s.frame = 48;
  const SynthOutputs o = cmd_synth(s, dir);
  const DatasetManifest m = read_manifest(o.manifest);
  EXPECT_EQ(m.channels, (std::vector<std::string>{"DPC_Left", "DPC_Right", "DPC_Top"}));
  EXPECT_EQ(m.height, 8u);
  EXPECT_EQ(load_cells(m).size(), 24u);
  EXPECT_EQ(read_labels(m.root / m.labels).size(), 24u);
  EXPECT_EQ(read_manifest(o.raw_manifest).height, 48u);
  EXPECT_TRUE(fs::exists(o.truth));
  fs::remove_all(dir);
}

TEST(CmdPreprocess, EmptyInputIsAnError) {
  const fs::path dir = testutil::fresh_dir("celldict_pipe_empty");
  EXPECT_THROW(cmd_preprocess(dir, dir / "out", RunConfig{}), DataError);
  fs::remove_all(dir);
}

TEST(CmdPreprocess, FullSizeFramesGiveNinetySixPixelCrops) {
  const fs::path dir = testutil::fresh_dir("celldict_pipe_128");
  SynthConfig s;
  s.n_cells = 3;
  s.channels = 2;
  s.height = 24;
  s.width = 24;
  s.frame = 128;
  cmd_synth(s, dir / "synth");
  const DatasetManifest m = cmd_preprocess(dir / "synth" / "raw", dir / "pre", RunConfig{});
  EXPECT_EQ(m.height, 96u);
  EXPECT_EQ(m.width, 96u);
  const DatasetManifest back = read_manifest(dir / "pre" / "manifest.json");
  ASSERT_EQ(back.crops.size(), 6u);
  for (const auto& c : back.crops) {
    EXPECT_EQ(c.window, 96u);
    EXPECT_EQ(c.crop, 96u);
    EXPECT_LE(c.y + 96, 128u);
    EXPECT_LE(c.x + 96, 128u);
    EXPECT_LE(c.min, c.max);
  }
  const auto cells = load_cells(back);
  for (const auto& cell : cells) {
    for (const auto& img : cell.channels) {
      EXPECT_EQ(img.height(), 96u);
      for (double v : img.values()) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
    }
  }
  fs::remove_all(dir);
}

TEST(CmdPreprocess, RerunIsBitIdenticalAndFailuresAreReported) {
  const fs::path dir = testutil::fresh_dir("celldict_pipe_rerun");
  SynthConfig s = small_synth();
  s.n_cells = 6;
  s.frame = 60;
  cmd_synth(s, dir / "synth");
  cmd_preprocess(dir / "synth" / "raw", dir / "a", RunConfig{});
  cmd_preprocess(dir / "synth" / "raw", dir / "b", RunConfig{});
  EXPECT_TRUE(testutil::diff_trees(dir / "a", dir / "b").empty());

  // A truncated frame is skipped; the rest is still written.
  const fs::path victim = dir / "synth" / "raw" / read_manifest(dir / "synth" / "raw" / "manifest.json").cells[2].files[1];
  std::ofstream(victim, std::ios::binary) << "CDIM";
  EXPECT_THROW(cmd_preprocess(dir / "synth" / "raw", dir / "c", RunConfig{}), DataError);
  const DatasetManifest m = read_manifest(dir / "c" / "manifest.json");
  EXPECT_EQ(m.cells.size(), 5u);
  EXPECT_EQ(read_labels(dir / "c" / "labels.csv").size(), 5u);
  fs::remove_all(dir);
}

TEST(CmdTrain, CompletesAndWritesArtifacts) {
  const fs::path dir = testutil::fresh_dir("celldict_pipe_train");
  SynthConfig s;
  s.n_cells = 32;
  const SynthOutputs o = cmd_synth(s, dir / "synth");
  RunConfig cfg = small_run(o.manifest);
  cfg.learn.outer_iters = 10;
  cfg.trace = true;
  const TrainOutcome t = cmd_train(cfg, dir / "run");
  EXPECT_TRUE(t.finished);
  for (const auto& pc : t.model.per_channel) {
    EXPECT_LE(pc.dictionary.orthonormality_defect(), 1e-10);
    const std::string reason = to_string(pc.report.stop_reason);
    EXPECT_TRUE(reason == "dict_change" || reason == "obj_change" || reason == "max_iters");
  }
  for (const char* f : {"model/model.json", "model/0_DPC_Left.ckpt", "model/2_DPC_Top.ckpt",
                        "report/convergence.csv", "report/relative_errors.csv",
                        "descriptors/descriptors.bin", "descriptors/descriptors.json",
                        "traces/DPC_Left.csv", "logs/train.log"}) {
    EXPECT_TRUE(fs::exists(dir / "run" / f)) << f;
  }
  const ModelInfo info = load_model(dir / "run" / "model");
  EXPECT_TRUE(info.finished);
  EXPECT_EQ(info.atoms, 4u);
  EXPECT_EQ(info.config_hash, config_hash(cfg));
  EXPECT_EQ(info.dictionaries.size(), 3u);
  EXPECT_EQ(info.dictionaries[1], t.model.per_channel[1].dictionary);

  cmd_reconstruct(cfg, dir / "run" / "model", dir / "run");
  EXPECT_TRUE(fs::exists(dir / "run" / "reconstruct" / "metrics.csv"));
  EXPECT_TRUE(fs::exists(dir / "run" / "reconstruct" / "cell_0" / "unified.cdim"));

  std::ostringstream summary;
  cmd_report(dir / "run", summary);
  EXPECT_NE(summary.str().find("DPC_Left"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "run" / "report" / "summary.txt"));
  fs::remove_all(dir);
}

TEST(CmdTrain, ResumeMatchesUninterruptedRun) {
  const fs::path dir = testutil::fresh_dir("celldict_pipe_resume");
  const SynthOutputs o = cmd_synth(small_synth(), dir / "synth");
  const RunConfig cfg = small_run(o.manifest);
  cmd_train(cfg, dir / "full");

  TrainControl stop;
  stop.stop_after = 2;
  const TrainOutcome partial = cmd_train(cfg, dir / "split", stop);
  EXPECT_FALSE(partial.finished);
  EXPECT_FALSE(fs::exists(dir / "split" / "descriptors"));
  EXPECT_EQ(read_checkpoint(dir / "split" / "model" / "0_DPC_Left.ckpt").state.next_iteration, 2u);

  TrainControl resume;
  resume.resume = dir / "split" / "model";
  const TrainOutcome done = cmd_train(cfg, dir / "split", resume);
  EXPECT_TRUE(done.finished);
  const auto diffs = testutil::diff_trees(dir / "full", dir / "split");
  EXPECT_TRUE(diffs.empty()) << (diffs.empty() ? "" : diffs.front());

  RunConfig other = cfg;
  other.learn.k = 3;
  EXPECT_THROW(cmd_train(other, dir / "other", resume), ConfigError);
  fs::remove_all(dir);
}

TEST(CmdDescribe, MatchesTrainingDescriptors) {
  const fs::path dir = testutil::fresh_dir("celldict_pipe_describe");
  const SynthOutputs o = cmd_synth(small_synth(), dir / "synth");
  const RunConfig cfg = small_run(o.manifest);
  cmd_train(cfg, dir / "run");
  const DescriptorStore trained = read_descriptor_store(dir / "run" / "descriptors");
  const DescriptorStore described = cmd_describe(cfg, dir / "run" / "model", dir / "described");
  ASSERT_EQ(trained.records.size(), described.records.size());
  for (std::size_t j = 0; j < trained.records.size(); ++j) {
    EXPECT_EQ(trained.records[j].phi, described.records[j].phi);
  }
  fs::remove_all(dir);
}

TEST(EndToEnd, DeterministicAcrossRunsAndThreadCounts) {
  const fs::path dir = testutil::fresh_dir("celldict_pipe_e2e");
  SynthConfig s = small_synth();
  s.frame = 48;
  s.noise = 0.01;
  cmd_synth(s, dir / "synth");
  end_to_end(dir / "a", dir / "synth" / "raw", 1);
  end_to_end(dir / "b", dir / "synth" / "raw", 1);
  end_to_end(dir / "c", dir / "synth" / "raw", 8);
  for (const char* other : {"b", "c"}) {
    const auto diffs = testutil::diff_trees(dir / "a", dir / other);
    EXPECT_TRUE(diffs.empty()) << other << ": " << (diffs.empty() ? "" : diffs.front());
  }
  EXPECT_TRUE(fs::exists(dir / "a" / "run" / "validation" / "report.json"));
  EXPECT_TRUE(fs::exists(dir / "a" / "run" / "validation" / "null.csv"));
  fs::remove_all(dir);
}

TEST(CmdValidate, LabelProblemsAreDataErrors) {
  const fs::path dir = testutil::fresh_dir("celldict_pipe_validate");
  const SynthOutputs o = cmd_synth(small_synth(), dir / "synth");
  RunConfig cfg = small_run(o.manifest);
  cfg.learn.outer_iters = 2;
  cmd_train(cfg, dir / "run");
  const ValidationReport r = cmd_validate(cfg, dir / "run" / "descriptors", dir / "run");
  EXPECT_EQ(r.n_cells, 24u);

  cfg.labels = (dir / "dup.csv").string();
  write_labels(dir / "dup.csv", std::vector<LabelRow>{{"cell_0", 0}, {"cell_0", 1}, {"cell_1", 1}});
  EXPECT_THROW(cmd_validate(cfg, dir / "run" / "descriptors", dir / "run"), DataError);
  write_labels(dir / "dup.csv", std::vector<LabelRow>{{"cell_0", 0}, {"ghost", 1}});
  EXPECT_THROW(cmd_validate(cfg, dir / "run" / "descriptors", dir / "run"), DataError);
  write_labels(dir / "dup.csv", std::vector<LabelRow>{{"cell_0", 0}});
  EXPECT_THROW(cmd_validate(cfg, dir / "run" / "descriptors", dir / "run"), DataError);

  cfg.labels.clear();
  cfg.keep_classes = {7};
  EXPECT_THROW(cmd_validate(cfg, dir / "run" / "descriptors", dir / "run"), DataError);
  fs::remove_all(dir);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = testutil::fresh_dir("celldict_pipe_cli");
  const std::string d = dir.string();
  EXPECT_EQ(cli(""), 2);
  EXPECT_EQ(cli("frobnicate"), 2);
  EXPECT_EQ(cli("synth --out " + d + "/synth --cells 12 --channels 2"), 0);
  std::ofstream(dir / "cfg.json") << R"({"learn": {"k": 4, "outer_iters": 3}, "cluster": {"n_perm": 20, "n_boot": 5, "n_init": 3}})";
  const std::string common = " --config " + d + "/cfg.json --dataset " + d + "/synth/cells/manifest.json --out " + d + "/run";
  EXPECT_EQ(cli("train" + common), 0);
  EXPECT_EQ(cli("describe" + common + " --model " + d + "/run/model"), 0);
  EXPECT_EQ(cli("reconstruct" + common + " --model " + d + "/run/model"), 0);
  EXPECT_EQ(cli("validate" + common + " --descriptors " + d + "/run/descriptors"), 0);
  EXPECT_EQ(cli("report --out " + d + "/run"), 0);

  std::ofstream(dir / "bad.json") << R"({"learn": {"k": 4, "bogus": 1}})";
  EXPECT_EQ(cli("train --config " + d + "/bad.json --dataset " + d + "/synth/cells/manifest.json --out " + d + "/x"), 2);
  EXPECT_EQ(cli("train --dataset " + d + "/nowhere/manifest.json --out " + d + "/x"), 3);
  std::ofstream(dir / "chan.json") << R"({"channels": ["Fluorescence"], "learn": {"k": 4}})";
  EXPECT_EQ(cli("train --config " + d + "/chan.json --dataset " + d + "/synth/cells/manifest.json --out " + d + "/x"), 2);
  EXPECT_EQ(cli("preprocess --raw " + d + "/empty --out " + d + "/x"), 3);
  fs::remove_all(dir);
}
