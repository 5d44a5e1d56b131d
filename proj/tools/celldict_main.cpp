#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "celldict/config.hpp"
#include "celldict/errors.hpp"
#include "celldict/pipeline.hpp"

namespace {

using namespace celldict;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string out;
  std::string dataset;
};

void add_common(CLI::App* cmd, Common& c, bool with_dataset) {
  cmd->add_option("--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "override the learning and clustering seeds");
  cmd->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out", c.out, "output directory");
  if (with_dataset) cmd->add_option("--dataset", c.dataset, "dataset manifest (overrides config)");
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_config(c.config);
  if (c.seed) {
    cfg.learn.seed = *c.seed;
    cfg.cluster.seed = *c.seed;
  }
  if (c.threads) cfg.threads = *c.threads;
  if (!c.out.empty()) cfg.out = c.out;
  if (!c.dataset.empty()) cfg.dataset = c.dataset;
  cfg.validate();
  return cfg;
}

int run(int argc, char** argv) {
  CLI::App app{"Variational dictionary learning for multi-channel cell images"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "celldict 0.3.0");

  Common common;

  SynthConfig synth;
  auto* c_synth = app.add_subcommand("synth", "generate a synthetic dataset");
  c_synth->add_option("--out", common.out, "output directory")->required();
  c_synth->add_option("--cells", synth.n_cells, "number of cells");
  c_synth->add_option("--channels", synth.channels, "number of channels");
  c_synth->add_option("--height", synth.height, "cell height");
  c_synth->add_option("--width", synth.width, "cell width");
  c_synth->add_option("--k-true", synth.k_true, "number of generating patterns");
  c_synth->add_option("--noise", synth.noise, "l2 noise level per image");
  c_synth->add_option("--seed", synth.seed, "generator seed");
  c_synth->add_option("--classes", synth.classes, "number of label classes");
  c_synth->add_option("--frame", synth.frame, "also write raw frames of this size (>= 48)");

  std::string raw_dir;
  auto* c_pre = app.add_subcommand("preprocess", "focus-select, crop and normalize raw frames");
  c_pre->add_option("--raw", raw_dir, "directory with the raw manifest.json")->required();
  add_common(c_pre, common, false);

  std::optional<std::size_t> stop_after;
  std::string resume;
  auto* c_train = app.add_subcommand("train", "learn per-channel dictionaries");
  add_common(c_train, common, true);
  c_train->add_option("--stop-after", stop_after, "stop after this many outer iterations");
  c_train->add_option("--resume", resume, "model directory to resume from")
      ->check(CLI::ExistingDirectory);

  std::string model_dir;
  auto* c_desc = app.add_subcommand("describe", "compute unified descriptors");
  add_common(c_desc, common, true);
  c_desc->add_option("--model", model_dir, "trained model directory")->required();

  auto* c_rec = app.add_subcommand("reconstruct", "write reconstructions and fidelity metrics");
  add_common(c_rec, common, true);
  c_rec->add_option("--model", model_dir, "trained model directory")->required();

  std::string descriptors;
  std::string labels;
  auto* c_val = app.add_subcommand("validate", "clustering validation against labels");
  add_common(c_val, common, true);
  c_val->add_option("--descriptors", descriptors, "descriptor store directory")->required();
  c_val->add_option("--labels", labels, "labels CSV (cell_id,class)");

  auto* c_rep = app.add_subcommand("report", "summarize the results in an output directory");
  c_rep->add_option("--out", common.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (c_synth->parsed()) {
    const SynthOutputs o = cmd_synth(synth, common.out);
    std::cout << "dataset: " << o.manifest.string() << "\n";
    if (!o.raw_manifest.empty()) std::cout << "raw frames: " << o.raw_manifest.string() << "\n";
    return 0;
  }
  if (c_rep->parsed()) {
    cmd_report(common.out, std::cout);
    return 0;
  }

  const RunConfig cfg = resolve(common);
  if (c_pre->parsed()) {
    const DatasetManifest m = cmd_preprocess(raw_dir, cfg.out, cfg);
    std::cout << "preprocessed " << m.cells.size() << " cells to " << m.height << "x" << m.width
              << "\n";
  } else if (c_train->parsed()) {
    TrainControl control;
    control.stop_after = stop_after;
    if (!resume.empty()) control.resume = resume;
    const TrainOutcome t = cmd_train(cfg, cfg.out, control);
    std::cout << (t.finished ? "training finished" : "training stopped (resumable)") << "\n";
  } else if (c_desc->parsed()) {
    const DescriptorStore s = cmd_describe(cfg, model_dir, cfg.out);
    std::cout << "described " << s.records.size() << " cells\n";
  } else if (c_rec->parsed()) {
    cmd_reconstruct(cfg, model_dir, cfg.out);
    std::cout << "reconstructions written\n";
  } else if (c_val->parsed()) {
    RunConfig v = cfg;
    if (!labels.empty()) v.labels = labels;
    const ValidationReport r = cmd_validate(v, descriptors, v.out);
    std::cout << "ARI " << r.ari << "  NMI " << r.nmi << "  p(ARI) " << r.permutation.p_ari << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const celldict::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const celldict::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const celldict::NumericalDivergence& e) {
    std::cerr << "numerical divergence: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
