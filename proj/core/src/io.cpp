#include "celldict/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "celldict/errors.hpp"

namespace celldict {

using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

constexpr std::size_t kCdimHeader = 64;

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void put_f64(std::ostream& out, std::span<const double> v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * 8));
}

void get_f64(std::istream& in, std::span<double> v, const fs::path& path) {
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * 8));
  if (!in) throw DataError(path.string() + ": truncated binary block");
}

template <typename T>
void put_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get_pod(std::istream& in, const fs::path& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw DataError(path.string() + ": truncated record");
  return v;
}

json parse_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << "\n";
}

}  // namespace

// ---------------------------------------------------------------------------

void write_cdim(const fs::path& path, const Image& img) {
  if (img.empty()) throw std::invalid_argument("write_cdim: empty image");
  std::string header = "CDIM " + std::to_string(img.height()) + " " + std::to_string(img.width());
  if (header.size() >= kCdimHeader) throw std::invalid_argument("write_cdim: shape too large");
  header.resize(kCdimHeader - 1, ' ');
  header.push_back('\n');
  std::vector<float> data(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) data[i] = static_cast<float>(img[i]);
  std::ofstream out = open_out(path);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!out) throw DataError("failed writing " + path.string());
}

Image read_cdim(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::array<char, kCdimHeader> header{};
  in.read(header.data(), kCdimHeader);
  if (!in || std::memcmp(header.data(), "CDIM ", 5) != 0 || header.back() != '\n') {
    throw DataError(path.string() + ": not a CDIM image");
  }
  std::istringstream fields(std::string(header.data() + 5, kCdimHeader - 6));
  long long h = 0;
  long long w = 0;
  if (!(fields >> h >> w) || h < 1 || w < 1) {
    throw DataError(path.string() + ": bad CDIM shape");
  }
  const auto count = static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  std::vector<float> data(count);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(count * sizeof(float)));
  if (!in) throw DataError(path.string() + ": truncated CDIM payload");
  in.peek();
  if (!in.eof()) throw DataError(path.string() + ": trailing bytes after CDIM payload");
  std::vector<double> values(data.begin(), data.end());
  for (double v : values) {
    if (!std::isfinite(v)) throw DataError(path.string() + ": non-finite pixel");
  }
  return Image(static_cast<std::size_t>(h), static_cast<std::size_t>(w), std::move(values));
}

// ---------------------------------------------------------------------------

DatasetManifest read_manifest(const fs::path& path) {
  const json j = parse_json_file(path);
  DatasetManifest m;
  m.root = path.parent_path();
  try {
    m.channels = j.at("channels").get<std::vector<std::string>>();
    if (j.contains("shape") && !j.at("shape").is_null()) {
      const auto shape = j.at("shape").get<std::vector<std::size_t>>();
      if (shape.size() != 2) throw DataError(path.string() + ": shape must be [h, w]");
      m.height = shape[0];
      m.width = shape[1];
    }
    for (const auto& c : j.at("cells")) {
      CellFiles cf{c.at("id").get<std::string>(), c.at("files").get<std::vector<std::string>>()};
      if (cf.files.size() != m.channels.size()) {
        throw DataError(path.string() + ": cell '" + cf.cell_id + "' lists " +
                        std::to_string(cf.files.size()) + " files for " +
                        std::to_string(m.channels.size()) + " channels");
      }
      m.cells.push_back(std::move(cf));
    }
    if (j.contains("labels") && !j.at("labels").is_null()) m.labels = j.at("labels").get<std::string>();
    if (j.contains("provenance")) {
      m.provenance = j.at("provenance").get<std::map<std::string, std::string>>();
    }
    if (j.contains("crops")) {
      for (const auto& c : j.at("crops")) {
        m.crops.push_back({c.at("cell_id").get<std::string>(), c.at("channel").get<std::string>(),
                           c.at("y").get<std::size_t>(), c.at("x").get<std::size_t>(),
                           c.at("window").get<std::size_t>(), c.at("crop").get<std::size_t>(),
                           c.at("min").get<double>(), c.at("max").get<double>()});
      }
    }
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed manifest: " + e.what());
  }
  return m;
}

void write_manifest(const DatasetManifest& m, const fs::path& path) {
  json j;
  j["format"] = "celldict-dataset";
  j["version"] = 1;
  j["channels"] = m.channels;
  j["shape"] = m.height > 0 ? json::array({m.height, m.width}) : json(nullptr);
  json cells = json::array();
  for (const auto& c : m.cells) cells.push_back({{"id", c.cell_id}, {"files", c.files}});
  j["cells"] = std::move(cells);
  j["labels"] = m.labels.empty() ? json(nullptr) : json(m.labels);
  j["provenance"] = m.provenance;
  if (!m.crops.empty()) {
    json crops = json::array();
    for (const auto& c : m.crops) {
      crops.push_back({{"cell_id", c.cell_id},
                       {"channel", c.channel},
                       {"y", c.y},
                       {"x", c.x},
                       {"window", c.window},
                       {"crop", c.crop},
                       {"min", c.min},
                       {"max", c.max}});
    }
    j["crops"] = std::move(crops);
  }
  write_json_file(path, j);
}

std::vector<ChannelId> select_channels(const DatasetManifest& m,
                                       std::span<const std::string> channels) {
  std::vector<ChannelId> out;
  if (channels.empty()) {
    for (std::size_t i = 0; i < m.channels.size(); ++i) out.push_back({i, m.channels[i]});
    return out;
  }
  for (std::size_t i = 0; i < channels.size(); ++i) {
    const auto it = std::find(m.channels.begin(), m.channels.end(), channels[i]);
    if (it == m.channels.end()) throw ConfigError("channel '" + channels[i] + "' not in dataset");
    out.push_back({i, channels[i]});
  }
  return out;
}

std::vector<CellRecord> load_cells(const DatasetManifest& m, std::span<const std::string> channels) {
  if (m.cells.empty()) throw DataError("dataset has no cells");
  std::vector<std::size_t> columns;
  for (const ChannelId& c : select_channels(m, channels)) {
    columns.push_back(static_cast<std::size_t>(
        std::find(m.channels.begin(), m.channels.end(), c.name) - m.channels.begin()));
  }
  std::vector<CellRecord> cells;
  cells.reserve(m.cells.size());
  for (const auto& cf : m.cells) {
    CellRecord rec{cf.cell_id, {}};
    for (std::size_t col : columns) {
      Image img = read_cdim(m.root / cf.files[col]);
      if (m.height > 0 && (img.height() != m.height || img.width() != m.width)) {
        throw DataError("cell '" + cf.cell_id + "' channel '" + m.channels[col] + "' is " +
                        std::to_string(img.height()) + "x" + std::to_string(img.width()) +
                        ", manifest says " + std::to_string(m.height) + "x" +
                        std::to_string(m.width));
      }
      rec.channels.push_back(std::move(img));
    }
    cells.push_back(std::move(rec));
  }
  check_cells(cells, columns.size());
  return cells;
}

// ---------------------------------------------------------------------------

std::vector<LabelRow> read_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open labels file " + path.string());
  std::vector<LabelRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected 'cell_id,class'");
    }
    const std::string id = line.substr(0, comma);
    const std::string cls = line.substr(comma + 1);
    if (lineno == 1 && id == "cell_id") continue;
    int label = 0;
    const auto [ptr, ec] = std::from_chars(cls.data(), cls.data() + cls.size(), label);
    if (ec != std::errc() || ptr != cls.data() + cls.size()) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": bad class '" + cls + "'");
    }
    rows.push_back({id, label});
  }
  return rows;
}

void write_labels(const fs::path& path, std::span<const LabelRow> rows) {
  std::ofstream out = open_out(path);
  out << "cell_id,class\n";
  for (const auto& r : rows) out << r.cell_id << "," << r.label << "\n";
}

// ---------------------------------------------------------------------------

namespace {

constexpr const char* kCheckpointMagic = "CDLCKPT1";
constexpr std::size_t kRecordFields = 11;

std::array<double, kRecordFields> pack(const OuterRecord& r) {
  return {static_cast<double>(r.iteration), r.lambda_tv, r.mean_fidelity, r.dict_change,
          r.dict_change_rel, r.mean_inner_residual, r.max_inner_residual,
          r.inner_converged_fraction, r.total_objective, r.mean_relative_error,
          r.max_relative_error};
}

OuterRecord unpack(const std::array<double, kRecordFields>& a) {
  OuterRecord r;
  r.iteration = static_cast<std::size_t>(a[0]);
  r.lambda_tv = a[1];
  r.mean_fidelity = a[2];
  r.dict_change = a[3];
  r.dict_change_rel = a[4];
  r.mean_inner_residual = a[5];
  r.max_inner_residual = a[6];
  r.inner_converged_fraction = a[7];
  r.total_objective = a[8];
  r.mean_relative_error = a[9];
  r.max_relative_error = a[10];
  return r;
}

std::string hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

}  // namespace

void write_checkpoint(const fs::path& path, const Checkpoint& ckpt) {
  const TrainState& s = ckpt.state;
  if (!s.dictionary) throw std::invalid_argument("write_checkpoint: state has no dictionary");
  const auto& d = s.dictionary->matrix();
  std::ostringstream head;
  head << kCheckpointMagic << "\n"
       << "channel " << ckpt.channel << "\n"
       << "n " << d.rows() << "\n"
       << "k " << d.cols() << "\n"
       << "iteration " << s.next_iteration << "\n"
       << "seed " << ckpt.seed << "\n"
       << "config_hash " << ckpt.config_hash << "\n"
       << "samples " << s.codes.size() << "\n"
       << "patience_count " << s.patience_count << "\n"
       << "prev_fidelity " << (s.prev_fidelity ? hexfloat(*s.prev_fidelity) : "none") << "\n"
       << "finished " << (s.finished ? 1 : 0) << "\n"
       << "stop_reason " << to_string(s.report.stop_reason) << "\n"
       << "records " << s.report.records.size() << "\n"
       << "errors " << s.report.final_relative_errors.size() << "\n"
       << "end\n";
  std::ofstream out = open_out(path);
  out << head.str();
  put_f64(out, std::span<const double>(d.data(), static_cast<std::size_t>(d.size())));
  for (const auto& a : s.codes) {
    put_f64(out, std::span<const double>(a.data(), static_cast<std::size_t>(a.size())));
  }
  put_f64(out, s.report.final_relative_errors);
  for (const auto& r : s.report.records) put_f64(out, pack(r));
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint read_checkpoint(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != kCheckpointMagic) {
    throw DataError(path.string() + ": not a checkpoint file");
  }
  std::map<std::string, std::string> fields;
  while (std::getline(in, line) && line != "end") {
    const auto sp = line.find(' ');
    if (sp == std::string::npos) throw DataError(path.string() + ": bad header line '" + line + "'");
    fields[line.substr(0, sp)] = line.substr(sp + 1);
  }
  if (line != "end") throw DataError(path.string() + ": truncated header");
  auto field = [&](const char* key) -> const std::string& {
    const auto it = fields.find(key);
    if (it == fields.end()) throw DataError(path.string() + ": header lacks '" + key + "'");
    return it->second;
  };
  auto count = [&](const char* key) -> std::size_t {
    try {
      return static_cast<std::size_t>(std::stoull(field(key)));
    } catch (const std::logic_error&) {
      throw DataError(path.string() + ": bad value for '" + key + "'");
    }
  };

  Checkpoint ck;
  ck.channel = field("channel");
  ck.seed = static_cast<std::uint64_t>(std::stoull(field("seed")));
  ck.config_hash = field("config_hash");
  const std::size_t n = count("n");
  const std::size_t k = count("k");
  const std::size_t samples = count("samples");
  const std::size_t records = count("records");
  const std::size_t errors = count("errors");
  TrainState& s = ck.state;
  s.next_iteration = count("iteration");
  s.patience_count = count("patience_count");
  if (field("prev_fidelity") != "none") s.prev_fidelity = std::strtod(field("prev_fidelity").c_str(), nullptr);
  s.finished = field("finished") == "1";
  s.report.stop_reason = stop_reason_from_string(field("stop_reason"));

  Eigen::MatrixXd d(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  get_f64(in, std::span<double>(d.data(), n * k), path);
  try {
    s.dictionary = UnitaryDictionary(std::move(d));
  } catch (const std::invalid_argument& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  s.codes.assign(samples, CodeVector(static_cast<Eigen::Index>(k)));
  for (auto& a : s.codes) get_f64(in, std::span<double>(a.data(), k), path);
  s.report.final_relative_errors.resize(errors);
  get_f64(in, s.report.final_relative_errors, path);
  for (std::size_t r = 0; r < records; ++r) {
    std::array<double, kRecordFields> a{};
    get_f64(in, a, path);
    s.report.records.push_back(unpack(a));
  }
  in.peek();
  if (!in.eof()) throw DataError(path.string() + ": trailing bytes");
  return ck;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd DescriptorStore::phi_matrix() const {
  if (records.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(records.size()), records.front().phi.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    m.row(static_cast<Eigen::Index>(i)) = records[i].phi.transpose();
  }
  return m;
}

DescriptorRecord to_record(const std::string& cell_id, const UnifiedDescriptor& d) {
  return {cell_id, d.phi, d.psi, d.residuals, d.weights};
}

namespace {
constexpr char kDescriptorMagic[8] = {'C', 'D', 'D', 'E', 'S', 'C', '1', '\n'};
}

void write_descriptor_store(const fs::path& dir, const DescriptorStore& store) {
  const auto c = static_cast<std::uint32_t>(store.channels.size());
  const auto k = static_cast<std::uint32_t>(store.atoms);
  std::ofstream out = open_out(dir / "descriptors.bin");
  out.write(kDescriptorMagic, sizeof kDescriptorMagic);
  put_pod<std::uint64_t>(out, store.records.size());
  for (const auto& r : store.records) {
    if (static_cast<std::size_t>(r.phi.size()) != std::size_t{c} * k ||
        static_cast<std::size_t>(r.psi.size()) != k || r.residuals.size() != c ||
        r.weights.size() != c) {
      throw std::invalid_argument("write_descriptor_store: record '" + r.cell_id +
                                  "' does not match the store layout");
    }
    put_pod<std::uint32_t>(out, static_cast<std::uint32_t>(r.cell_id.size()));
    out.write(r.cell_id.data(), static_cast<std::streamsize>(r.cell_id.size()));
    put_pod(out, c);
    put_pod(out, k);
    put_f64(out, std::span<const double>(r.phi.data(), static_cast<std::size_t>(r.phi.size())));
    put_f64(out, std::span<const double>(r.psi.data(), static_cast<std::size_t>(r.psi.size())));
    put_f64(out, r.residuals);
    put_f64(out, r.weights);
  }
  if (!out) throw DataError("failed writing descriptor store in " + dir.string());
  write_json_file(dir / "descriptors.json", {{"format", "celldict-descriptors"},
                                             {"version", 1},
                                             {"channels", store.channels},
                                             {"atoms", store.atoms},
                                             {"cells", store.records.size()},
                                             {"config_hash", store.config_hash},
                                             {"records", "descriptors.bin"}});
}

DescriptorStore read_descriptor_store(const fs::path& dir) {
  const json meta = parse_json_file(dir / "descriptors.json");
  DescriptorStore store;
  std::size_t cells = 0;
  try {
    store.channels = meta.at("channels").get<std::vector<std::string>>();
    store.atoms = meta.at("atoms").get<std::size_t>();
    store.config_hash = meta.at("config_hash").get<std::string>();
    cells = meta.at("cells").get<std::size_t>();
  } catch (const json::exception& e) {
    throw DataError((dir / "descriptors.json").string() + ": " + e.what());
  }
  const fs::path bin = dir / "descriptors.bin";
  std::ifstream in = open_in(bin);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kDescriptorMagic, sizeof magic) != 0) {
    throw DataError(bin.string() + ": not a descriptor store");
  }
  if (get_pod<std::uint64_t>(in, bin) != cells) {
    throw DataError(bin.string() + ": record count disagrees with descriptors.json");
  }
  const std::size_t c = store.channels.size();
  const std::size_t k = store.atoms;
  for (std::size_t i = 0; i < cells; ++i) {
    DescriptorRecord r;
    r.cell_id.resize(get_pod<std::uint32_t>(in, bin));
    in.read(r.cell_id.data(), static_cast<std::streamsize>(r.cell_id.size()));
    if (get_pod<std::uint32_t>(in, bin) != c || get_pod<std::uint32_t>(in, bin) != k) {
      throw DataError(bin.string() + ": record '" + r.cell_id + "' has an unexpected layout");
    }
    r.phi.resize(static_cast<Eigen::Index>(c * k));
    r.psi.resize(static_cast<Eigen::Index>(k));
    r.residuals.resize(c);
    r.weights.resize(c);
    get_f64(in, std::span<double>(r.phi.data(), c * k), bin);
    get_f64(in, std::span<double>(r.psi.data(), k), bin);
    get_f64(in, r.residuals, bin);
    get_f64(in, r.weights, bin);
    store.records.push_back(std::move(r));
  }
  in.peek();
  if (!in.eof()) throw DataError(bin.string() + ": trailing bytes");
  return store;
}

// ---------------------------------------------------------------------------

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_report_header(std::ostream& out) {
  out << "channel,iteration,lambda_tv,mean_fidelity,dict_change,dict_change_rel,"
         "mean_inner_residual,max_inner_residual,inner_converged_fraction,total_objective,"
         "mean_relative_error,max_relative_error,stop_reason\n";
}

void write_report_rows(std::ostream& out, const std::string& channel, const LearnReport& report) {
  for (std::size_t i = 0; i < report.records.size(); ++i) {
    const auto& r = report.records[i];
    out << channel << "," << r.iteration;
    for (double v : {r.lambda_tv, r.mean_fidelity, r.dict_change, r.dict_change_rel,
                     r.mean_inner_residual, r.max_inner_residual, r.inner_converged_fraction,
                     r.total_objective, r.mean_relative_error, r.max_relative_error}) {
      out << "," << format_double(v);
    }
    out << "," << (i + 1 == report.records.size() ? to_string(report.stop_reason) : "") << "\n";
  }
}

}  // namespace celldict
