#include "celldict/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "celldict/errors.hpp"
#include "celldict/parallel.hpp"
#include "celldict/preprocess.hpp"

namespace celldict {

using nlohmann::json;

namespace {

// Progress and timings; kept apart from result files.
class RunLog {
 public:
  RunLog(const fs::path& out, const std::string& command)
      : start_(std::chrono::steady_clock::now()) {
    fs::create_directories(out / "logs");
    file_.open(out / "logs" / (command + ".log"), std::ios::app);
    const std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%S", std::localtime(&now));
    file_ << "== " << command << " started " << stamp << "\n";
  }

  void line(const std::string& msg) {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    file_ << "[" << secs << "s] " << msg << "\n";
    file_.flush();
  }

 private:
  std::chrono::steady_clock::time_point start_;
  std::ofstream file_;
};

void check_id(const std::string& id) {
  if (id.empty() || id.find('/') != std::string::npos || id.find('\\') != std::string::npos ||
      id == "." || id == "..") {
    throw DataError("unusable cell id '" + id + "'");
  }
}

std::string cell_file(const std::string& cell_id, const std::string& channel) {
  check_id(cell_id);
  return "cells/" + cell_id + "/" + channel + ".cdim";
}

std::string checkpoint_name(const ChannelId& c) {
  return std::to_string(c.index) + "_" + c.name + ".ckpt";
}

void write_dataset(const fs::path& dir, const std::vector<ChannelId>& channels,
                   const std::vector<CellRecord>& cells, const std::vector<int>& labels,
                   const std::map<std::string, std::string>& provenance) {
  DatasetManifest m;
  for (const auto& c : channels) m.channels.push_back(c.name);
  m.height = cells.front().channels.front().height();
  m.width = cells.front().channels.front().width();
  m.provenance = provenance;
  std::vector<LabelRow> rows;
  for (std::size_t j = 0; j < cells.size(); ++j) {
    CellFiles cf{cells[j].cell_id, {}};
    for (std::size_t c = 0; c < channels.size(); ++c) {
      cf.files.push_back(cell_file(cells[j].cell_id, channels[c].name));
      write_cdim(dir / cf.files.back(), cells[j].channels[c]);
      if (cells[j].channels[c].height() != m.height || cells[j].channels[c].width() != m.width) {
        m.height = 0;
        m.width = 0;
      }
    }
    m.cells.push_back(std::move(cf));
    rows.push_back({cells[j].cell_id, labels[j]});
  }
  m.labels = "labels.csv";
  write_labels(dir / m.labels, rows);
  write_manifest(m, dir / "manifest.json");
}

std::string num(double v) { return format_double(v); }

}  // namespace

// ---------------------------------------------------------------------------

SynthOutputs cmd_synth(const SynthConfig& cfg, const fs::path& out) {
  RunLog log(out, "synth");
  const SynthDataset ds = generate_synthetic(cfg);
  const std::map<std::string, std::string> prov{{"generator", "celldict synth"},
                                                {"seed", std::to_string(cfg.seed)},
                                                {"noise", num(cfg.noise)},
                                                {"k_true", std::to_string(cfg.k_true)},
                                                {"classes", std::to_string(cfg.classes)}};
  SynthOutputs result;
  auto with = [&](const char* kind) {
    auto p = prov;
    p["content"] = kind;
    return p;
  };
  write_dataset(out / "cells", ds.channels, ds.cells, ds.labels, with("noisy cells"));
  write_dataset(out / "truth", ds.channels, ds.truth, ds.labels, with("noiseless cells"));
  result.manifest = out / "cells" / "manifest.json";
  result.truth = out / "truth" / "manifest.json";
  if (!ds.raw_frames.empty()) {
    write_dataset(out / "raw", ds.channels, ds.raw_frames, ds.labels, with("raw frames"));
    result.raw_manifest = out / "raw" / "manifest.json";
  }
  log.line("wrote " + std::to_string(ds.cells.size()) + " cells");
  return result;
}

// ---------------------------------------------------------------------------

DatasetManifest cmd_preprocess(const fs::path& raw_dir, const fs::path& out, const RunConfig& cfg) {
  cfg.validate();
  const fs::path raw_manifest = raw_dir / "manifest.json";
  if (!fs::exists(raw_manifest)) {
    throw DataError("no manifest.json in " + raw_dir.string() + " (nothing to preprocess)");
  }
  const DatasetManifest raw = read_manifest(raw_manifest);
  if (raw.cells.empty() || raw.channels.empty()) throw DataError("raw dataset is empty");
  RunLog log(out, "preprocess");

  struct Focused {
    std::optional<Image> crop;
    CropAudit audit;
    std::string error;
  };
  const std::size_t channels = raw.channels.size();
  std::vector<Focused> focused(raw.cells.size() * channels);
  parallel_for(focused.size(), cfg.threads, [&](std::size_t idx) {
    const CellFiles& cf = raw.cells[idx / channels];
    const std::size_t c = idx % channels;
    Focused& f = focused[idx];
    f.audit.cell_id = cf.cell_id;
    f.audit.channel = raw.channels[c];
    try {
      check_id(cf.cell_id);
      const Image frame = read_cdim(raw.root / cf.files[c]);
      const FocusResult fr = focus_select(frame);
      const NormalizedImage norm =
          normalize_minmax(crop(frame, fr.y_star, fr.x_star, fr.window, fr.window));
      f.audit.y = fr.y_star;
      f.audit.x = fr.x_star;
      f.audit.window = fr.window;
      f.audit.min = norm.min;
      f.audit.max = norm.max;
      f.crop = norm.image;
    } catch (const std::exception& e) {
      f.error = cf.cell_id + "/" + raw.channels[c] + ": " + e.what();
    }
  });

  std::vector<std::string> failures;
  std::set<std::size_t> failed_cells;
  std::size_t common = 0;
  for (std::size_t idx = 0; idx < focused.size(); ++idx) {
    if (!focused[idx].error.empty()) {
      failures.push_back(focused[idx].error);
      failed_cells.insert(idx / channels);
    }
  }
  for (std::size_t idx = 0; idx < focused.size(); ++idx) {
    if (failed_cells.count(idx / channels) != 0) continue;
    const std::size_t w = focused[idx].audit.window;
    common = common == 0 ? w : std::min(common, w);
  }

  DatasetManifest m;
  m.channels = raw.channels;
  m.height = common;
  m.width = common;
  m.provenance = raw.provenance;
  m.provenance["preprocessed_from"] = raw_manifest.lexically_normal().generic_string();
  std::set<std::string> kept;
  for (std::size_t j = 0; j < raw.cells.size(); ++j) {
    if (failed_cells.count(j) != 0) continue;
    CellFiles cf{raw.cells[j].cell_id, {}};
    for (std::size_t c = 0; c < channels; ++c) {
      Focused& f = focused[j * channels + c];
      f.audit.crop = common;
      cf.files.push_back(cell_file(cf.cell_id, raw.channels[c]));
      write_cdim(out / cf.files.back(), center_crop(*f.crop, common));
      m.crops.push_back(f.audit);
    }
    kept.insert(cf.cell_id);
    m.cells.push_back(std::move(cf));
  }
  if (!raw.labels.empty() && fs::exists(raw.root / raw.labels)) {
    std::vector<LabelRow> rows;
    for (const auto& r : read_labels(raw.root / raw.labels)) {
      if (kept.count(r.cell_id) != 0) rows.push_back(r);
    }
    m.labels = "labels.csv";
    write_labels(out / m.labels, rows);
  }
  if (!m.cells.empty()) write_manifest(m, out / "manifest.json");
  m.root = out;
  log.line("focused " + std::to_string(m.cells.size()) + " cells, common size " +
           std::to_string(common) + ", " + std::to_string(failures.size()) + " failures");

  if (!failures.empty()) {
    std::string msg = std::to_string(failures.size()) + " frame(s) failed preprocessing:";
    for (const auto& f : failures) msg += "\n  " + f;
    throw DataError(msg);
  }
  return m;
}

// ---------------------------------------------------------------------------

ModelInfo load_model(const fs::path& model_dir) {
  const fs::path meta_path = model_dir / "model.json";
  std::ifstream in(meta_path);
  if (!in) throw DataError("cannot open " + meta_path.string());
  ModelInfo info;
  std::vector<std::string> files;
  try {
    const json j = json::parse(in);
    info.channels = j.at("channels").get<std::vector<std::string>>();
    const auto shape = j.at("shape").get<std::vector<std::size_t>>();
    info.height = shape.at(0);
    info.width = shape.at(1);
    info.atoms = j.at("atoms").get<std::size_t>();
    info.lambdas = j.at("lambdas").get<std::vector<double>>();
    info.config_hash = j.at("config_hash").get<std::string>();
    info.finished = j.at("finished").get<bool>();
    files = j.at("checkpoints").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw DataError(meta_path.string() + ": " + e.what());
  }
  if (files.size() != info.channels.size() || info.lambdas.size() != info.channels.size()) {
    throw DataError(meta_path.string() + ": channel lists disagree");
  }
  for (const auto& f : files) {
    Checkpoint ck = read_checkpoint(model_dir / f);
    info.dictionaries.push_back(*ck.state.dictionary);
  }
  return info;
}

TrainOutcome cmd_train(const RunConfig& cfg, const fs::path& out, const TrainControl& control) {
  cfg.validate();
  if (cfg.dataset.empty()) throw ConfigError("no dataset manifest configured");
  const DatasetManifest manifest = read_manifest(cfg.dataset);
  const std::vector<ChannelId> channels = select_channels(manifest, cfg.channels);
  const std::vector<CellRecord> cells = load_cells(manifest, cfg.channels);
  const std::string hash = config_hash(cfg);
  RunLog log(out, "train");
  log.line("training " + std::to_string(channels.size()) + " channel(s) on " +
           std::to_string(cells.size()) + " cells, config " + hash);

  const fs::path model_dir = out / "model";
  fs::create_directories(model_dir);

  std::vector<Checkpoint> resumed;
  std::vector<const TrainState*> resume_ptrs;
  if (control.resume) {
    for (const auto& c : channels) {
      resumed.push_back(read_checkpoint(*control.resume / checkpoint_name(c)));
      if (resumed.back().config_hash != hash || resumed.back().channel != c.name) {
        throw ConfigError("checkpoint " + (*control.resume / checkpoint_name(c)).string() +
                          " belongs to a different configuration or channel");
      }
    }
    for (const auto& r : resumed) resume_ptrs.push_back(&r.state);
    log.line("resuming from " + control.resume->string());
  }

  std::vector<std::optional<TrainState>> last(channels.size());
  MultiTrainOptions opts;
  opts.threads = cfg.threads;
  opts.stop_after = control.stop_after;
  opts.resume = resume_ptrs;
  opts.descriptor_eps = cfg.descriptor_eps;
  opts.on_iteration = [&](std::size_t c, const TrainState& s) {
    last[c] = s;
    write_checkpoint(model_dir / checkpoint_name(channels[c]),
                     {channels[c].name, cfg.learn.seed, hash, s});
    const auto& r = s.report.records.back();
    std::ostringstream msg;
    msg << channels[c].name << " iter " << r.iteration << " lambda " << r.lambda_tv
        << " mean_rel_err " << r.mean_relative_error << " dict_change " << r.dict_change;
    log.line(msg.str());
  };

  TrainOutcome outcome;
  outcome.model = train_multichannel(cells, channels, cfg.learn, opts);

  json meta;
  std::vector<std::string> ckpt_files;
  std::vector<double> lambdas;
  for (std::size_t c = 0; c < channels.size(); ++c) {
    // Channels that did no work in this call still get their state written.
    if (!last[c] && !resumed.empty()) {
      write_checkpoint(model_dir / checkpoint_name(channels[c]), resumed[c]);
    }
    ckpt_files.push_back(checkpoint_name(channels[c]));
    lambdas.push_back(outcome.model.per_channel[c].final_lambda);
    outcome.finished = outcome.finished && outcome.model.per_channel[c].finished;
  }
  std::vector<std::string> names;
  for (const auto& c : channels) names.push_back(c.name);
  meta["format"] = "celldict-model";
  meta["channels"] = names;
  meta["shape"] = {manifest.height, manifest.width};
  meta["atoms"] = cfg.learn.k;
  meta["lambdas"] = lambdas;
  meta["config_hash"] = hash;
  meta["finished"] = outcome.finished;
  meta["checkpoints"] = ckpt_files;
  std::vector<std::string> reasons;
  for (const auto& m : outcome.model.per_channel) reasons.push_back(to_string(m.report.stop_reason));
  meta["stop_reasons"] = reasons;
  {
    std::ofstream f(model_dir / "model.json");
    f << meta.dump(2) << "\n";
  }

  fs::create_directories(out / "report");
  {
    std::ofstream csv(out / "report" / "convergence.csv");
    write_report_header(csv);
    for (std::size_t c = 0; c < channels.size(); ++c) {
      write_report_rows(csv, channels[c].name, outcome.model.per_channel[c].report);
    }
    std::ofstream errs(out / "report" / "relative_errors.csv");
    errs << "cell_id";
    for (const auto& c : channels) errs << "," << c.name;
    errs << "\n";
    for (std::size_t j = 0; j < cells.size(); ++j) {
      errs << cells[j].cell_id;
      for (const auto& m : outcome.model.per_channel) {
        const auto& e = m.report.final_relative_errors;
        errs << "," << (j < e.size() ? format_double(e[j]) : "");
      }
      errs << "\n";
    }
  }

  if (outcome.finished) {
    DescriptorStore store;
    store.channels = names;
    store.atoms = cfg.learn.k;
    store.config_hash = hash;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      store.records.push_back(to_record(cells[j].cell_id, outcome.model.descriptors[j]));
    }
    write_descriptor_store(out / "descriptors", store);

    if (cfg.trace) {
      for (std::size_t c = 0; c < channels.size(); ++c) {
        fs::create_directories(out / "traces");
        std::ofstream tr(out / "traces" / (channels[c].name + ".csv"));
        write_trace_header(tr);
        const Image& datum = cells.front().channels[c];
        const double lambda = lambdas[c];
        solve(datum, cfg.learn.pdhg.with_lambda(lambda), csv_trace(tr, datum, lambda));
      }
    }
  }
  log.line(outcome.finished ? "finished" : "stopped early (resumable)");
  return outcome;
}

// ---------------------------------------------------------------------------

namespace {

struct ModelData {
  ModelInfo model;
  std::vector<CellRecord> cells;
};

ModelData load_for_inference(const RunConfig& cfg, const fs::path& model_dir) {
  cfg.validate();
  if (cfg.dataset.empty()) throw ConfigError("no dataset manifest configured");
  ModelData md{load_model(model_dir), {}};
  const DatasetManifest manifest = read_manifest(cfg.dataset);
  md.cells = load_cells(manifest, md.model.channels);
  const Image& first = md.cells.front().channels.front();
  if (first.height() != md.model.height || first.width() != md.model.width) {
    throw DataError("dataset images are " + std::to_string(first.height()) + "x" +
                    std::to_string(first.width()) + " but the model expects " +
                    std::to_string(md.model.height) + "x" + std::to_string(md.model.width));
  }
  return md;
}

}  // namespace

DescriptorStore cmd_describe(const RunConfig& cfg, const fs::path& model_dir, const fs::path& out) {
  const ModelData md = load_for_inference(cfg, model_dir);
  RunLog log(out, "describe");
  std::vector<UnifiedDescriptor> desc(md.cells.size());
  parallel_for(md.cells.size(), cfg.threads, [&](std::size_t j) {
    const auto codes = infer_codes(md.cells[j], md.model.dictionaries, md.model.lambdas,
                                   cfg.learn.pdhg);
    desc[j] = build_descriptor(codes, md.model.dictionaries, md.cells[j], cfg.descriptor_eps);
  });
  DescriptorStore store;
  store.channels = md.model.channels;
  store.atoms = md.model.atoms;
  store.config_hash = md.model.config_hash;
  for (std::size_t j = 0; j < md.cells.size(); ++j) {
    store.records.push_back(to_record(md.cells[j].cell_id, desc[j]));
  }
  write_descriptor_store(out / "descriptors", store);
  log.line("described " + std::to_string(md.cells.size()) + " cells");
  return store;
}

void cmd_reconstruct(const RunConfig& cfg, const fs::path& model_dir, const fs::path& out) {
  const ModelData md = load_for_inference(cfg, model_dir);
  RunLog log(out, "reconstruct");
  const std::size_t h = md.model.height;
  const std::size_t w = md.model.width;
  const std::size_t channels = md.model.channels.size();
  std::vector<std::vector<double>> rel(md.cells.size(), std::vector<double>(channels));
  std::vector<std::vector<double>> snr(md.cells.size(), std::vector<double>(channels));
  parallel_for(md.cells.size(), cfg.threads, [&](std::size_t j) {
    const CellRecord& cell = md.cells[j];
    const auto codes = infer_codes(cell, md.model.dictionaries, md.model.lambdas, cfg.learn.pdhg);
    const UnifiedDescriptor d =
        build_descriptor(codes, md.model.dictionaries, cell, cfg.descriptor_eps);
    const fs::path dir = out / "reconstruct" / cell.cell_id;
    for (std::size_t c = 0; c < channels; ++c) {
      const Image recon = md.model.dictionaries[c].synthesize(codes[c], h, w);
      write_cdim(dir / (md.model.channels[c] + ".cdim"), recon);
      const double nx = norm2(cell.channels[c].values());
      rel[j][c] = nx > 0.0 ? relative_error(cell.channels[c], recon) : std::nan("");
      snr[j][c] = psnr(cell.channels[c], recon);
    }
    write_cdim(dir / "unified.cdim", d.unified);
  });
  std::ofstream csv(out / "reconstruct" / "metrics.csv");
  csv << "cell_id,channel,relative_error,fidelity_percent,psnr_db\n";
  for (std::size_t j = 0; j < md.cells.size(); ++j) {
    for (std::size_t c = 0; c < channels; ++c) {
      csv << md.cells[j].cell_id << "," << md.model.channels[c] << "," << format_double(rel[j][c])
          << "," << format_double(100.0 * (1.0 - rel[j][c])) << "," << format_double(snr[j][c])
          << "\n";
    }
  }
  log.line("reconstructed " + std::to_string(md.cells.size()) + " cells");
}

// ---------------------------------------------------------------------------

ValidationReport cmd_validate(const RunConfig& cfg, const fs::path& descriptor_dir,
                              const fs::path& out) {
  cfg.validate();
  const DescriptorStore store = read_descriptor_store(descriptor_dir);
  fs::path labels_path = cfg.labels;
  if (labels_path.empty()) {
    if (cfg.dataset.empty()) throw ConfigError("no labels file configured");
    const DatasetManifest m = read_manifest(cfg.dataset);
    if (m.labels.empty()) throw DataError("dataset has no labels file");
    labels_path = m.root / m.labels;
  }
  RunLog log(out, "validate");

  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < store.records.size(); ++i) row_of[store.records[i].cell_id] = i;
  std::map<std::string, int> label_of;
  for (const auto& r : read_labels(labels_path)) {
    if (row_of.count(r.cell_id) == 0) {
      throw DataError("labelled cell '" + r.cell_id + "' has no descriptor");
    }
    if (!label_of.emplace(r.cell_id, r.label).second) {
      throw DataError("cell '" + r.cell_id + "' labelled twice");
    }
  }
  std::vector<std::size_t> rows;
  std::vector<int> labels;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < store.records.size(); ++i) {
    const auto it = label_of.find(store.records[i].cell_id);
    if (it == label_of.end()) continue;
    if (!cfg.keep_classes.empty() &&
        std::find(cfg.keep_classes.begin(), cfg.keep_classes.end(), it->second) ==
            cfg.keep_classes.end()) {
      continue;
    }
    rows.push_back(i);
    labels.push_back(it->second);
    ids.push_back(it->first);
  }
  if (rows.size() < std::max<std::size_t>(2, cfg.cluster.k)) {
    throw DataError("only " + std::to_string(rows.size()) + " labelled cells; need at least k = " +
                    std::to_string(cfg.cluster.k));
  }
  const Eigen::MatrixXd all = store.phi_matrix();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), all.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = all.row(static_cast<Eigen::Index>(rows[i]));
  }
  ClusterConfig cc = cfg.cluster;
  cc.threads = cfg.threads;
  const ChannelLayout layout{store.channels.size(), store.atoms};
  const ValidationReport rep = run_validation(x, layout, labels, cc);

  const fs::path dir = out / "validation";
  fs::create_directories(dir);
  json j;
  j["n_cells"] = rep.n_cells;
  j["ari"] = rep.ari;
  j["nmi"] = rep.nmi;
  j["silhouette"] = rep.silhouette;
  j["explained_variance"] = rep.explained_variance;
  j["permutation"] = {{"n_perm", cc.n_perm},
                      {"p_ari", rep.permutation.p_ari},
                      {"p_nmi", rep.permutation.p_nmi},
                      {"null_ari_mean", rep.permutation.ari_null.mean},
                      {"null_ari_p95", rep.permutation.ari_null.p95},
                      {"null_nmi_mean", rep.permutation.nmi_null.mean},
                      {"null_nmi_p95", rep.permutation.nmi_null.p95}};
  j["bootstrap"] = {{"n_boot", cc.n_boot},
                    {"ari_ci", {rep.bootstrap.ari.lo, rep.bootstrap.ari.hi}},
                    {"nmi_ci", {rep.bootstrap.nmi.lo, rep.bootstrap.nmi.hi}},
                    {"degenerate_resamples", rep.bootstrap.degenerate_resamples}};
  j["config_hash"] = config_hash(cfg);
  j["descriptor_config_hash"] = store.config_hash;
  {
    std::ofstream f(dir / "report.json");
    f << j.dump(2) << "\n";
  }
  {
    std::ofstream f(dir / "null.csv");
    f << "permutation,ari,nmi\n";
    for (std::size_t i = 0; i < rep.permutation.null_ari.size(); ++i) {
      f << i << "," << format_double(rep.permutation.null_ari[i]) << ","
        << format_double(rep.permutation.null_nmi[i]) << "\n";
    }
  }
  {
    std::ofstream f(dir / "bootstrap.csv");
    f << "resample,ari,nmi\n";
    for (std::size_t i = 0; i < rep.bootstrap.samples_ari.size(); ++i) {
      f << i << "," << format_double(rep.bootstrap.samples_ari[i]) << ","
        << format_double(rep.bootstrap.samples_nmi[i]) << "\n";
    }
  }
  {
    std::ofstream f(dir / "clusters.csv");
    f << "cell_id,class,cluster\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
      f << ids[i] << "," << labels[i] << "," << rep.clusters[i] << "\n";
    }
  }
  log.line("validated " + std::to_string(rep.n_cells) + " cells: ARI " + num(rep.ari));
  return rep;
}

// ---------------------------------------------------------------------------

void cmd_report(const fs::path& out, std::ostream& os) {
  std::ostringstream text;
  bool any = false;
  const fs::path model_json = out / "model" / "model.json";
  if (fs::exists(model_json)) {
    any = true;
    std::ifstream in(model_json);
    const json m = json::parse(in);
    text << "model: " << m.at("channels").size() << " channel(s), K = " << m.at("atoms").get<std::size_t>()
         << ", shape " << m.at("shape")[0] << "x" << m.at("shape")[1]
         << ", config " << m.at("config_hash").get<std::string>()
         << (m.at("finished").get<bool>() ? "" : " (unfinished)") << "\n";
  }
  const fs::path conv = out / "report" / "convergence.csv";
  if (fs::exists(conv)) {
    any = true;
    std::ifstream in(conv);
    std::string line;
    std::getline(in, line);
    std::map<std::string, std::vector<std::string>> last;
    std::vector<std::string> order;
    while (std::getline(in, line)) {
      std::vector<std::string> f;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) f.push_back(cell);
      if (f.size() < 12) continue;
      if (last.count(f[0]) == 0) order.push_back(f[0]);
      last[f[0]] = f;
    }
    text << "training (final outer iteration per channel):\n";
    for (const auto& name : order) {
      const auto& f = last[name];
      const double rel = std::stod(f[10]);
      text << "  " << name << ": iterations " << std::stoul(f[1]) + 1 << ", mean relative error "
           << rel << " (fidelity " << 100.0 * (1.0 - rel) << "%), lambda " << f[2]
           << (f.size() > 12 && !f[12].empty() ? ", stop " + f[12] : "") << "\n";
    }
  }
  const fs::path val = out / "validation" / "report.json";
  if (fs::exists(val)) {
    any = true;
    std::ifstream in(val);
    const json v = json::parse(in);
    text << "validation on " << v.at("n_cells").get<std::size_t>() << " labelled cells:\n"
         << "  ARI " << v.at("ari").get<double>() << "  NMI " << v.at("nmi").get<double>()
         << "  silhouette " << v.at("silhouette").get<double>() << "  explained variance "
         << v.at("explained_variance").get<double>() << "\n"
         << "  permutation p(ARI) " << v.at("permutation").at("p_ari").get<double>()
         << "  p(NMI) " << v.at("permutation").at("p_nmi").get<double>() << "  null ARI mean "
         << v.at("permutation").at("null_ari_mean").get<double>() << ", p95 "
         << v.at("permutation").at("null_ari_p95").get<double>() << "\n"
         << "  bootstrap ARI [" << v.at("bootstrap").at("ari_ci")[0].get<double>() << ", "
         << v.at("bootstrap").at("ari_ci")[1].get<double>() << "]  NMI ["
         << v.at("bootstrap").at("nmi_ci")[0].get<double>() << ", "
         << v.at("bootstrap").at("nmi_ci")[1].get<double>() << "]\n";
  }
  if (!any) throw DataError("no results found under " + out.string());
  os << text.str();
  fs::create_directories(out / "report");
  std::ofstream(out / "report" / "summary.txt") << text.str();
}

}  // namespace celldict
