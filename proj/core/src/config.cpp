#include "celldict/config.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "celldict/errors.hpp"

namespace celldict {

using nlohmann::json;

void RunConfig::validate() const {
  learn.validate();
  cluster.validate();
  if (!(descriptor_eps > 0.0)) throw ConfigError("descriptor_eps must be > 0");
  if (threads == 0) throw ConfigError("threads must be >= 1");
  std::set<std::string> seen;
  for (const auto& c : channels) {
    if (!seen.insert(c).second) throw ConfigError("channel '" + c + "' listed twice");
  }
}

namespace {

json pdhg_json(const PdhgParams& p) {
  return {{"tau", p.tau()},
          {"sigma", p.sigma()},
          {"theta", p.theta()},
          {"max_iters", p.max_iters()},
          {"tol", p.tol_inner()}};
}

json learn_json(const LearnConfig& l) {
  return {{"k", l.k},
          {"outer_iters", l.outer_iters},
          {"lambda0", l.lambda0},
          {"gamma", l.gamma},
          {"floor", l.floor},
          {"eps_dict", l.eps_dict},
          {"eps_obj", l.eps_obj},
          {"patience", l.patience},
          {"seed", l.seed},
          {"pdhg", pdhg_json(l.pdhg)}};
}

json cluster_json(const ClusterConfig& c) {
  return {{"k", c.k},
          {"n_init", c.n_init},
          {"seed", c.seed},
          {"pca_components", c.pca_components},
          {"channel_l2", c.channel_l2},
          {"standardize", c.standardize},
          {"n_perm", c.n_perm},
          {"n_boot", c.n_boot}};
}

// Fields that determine results; the hash covers exactly this object.
json result_json(const RunConfig& cfg) {
  return {{"channels", cfg.channels},
          {"keep_classes", cfg.keep_classes},
          {"learn", learn_json(cfg.learn)},
          {"cluster", cluster_json(cfg.cluster)},
          {"descriptor_eps", cfg.descriptor_eps}};
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

PdhgParams pdhg_from(const json& j) {
  check_keys(j, {"tau", "sigma", "theta", "max_iters", "tol"}, "learn.pdhg");
  const PdhgParams def;
  double tau = def.tau();
  double sigma = def.sigma();
  double theta = def.theta();
  std::size_t max_iters = def.max_iters();
  double tol = def.tol_inner();
  read(j, "tau", tau, "learn.pdhg");
  read(j, "sigma", sigma, "learn.pdhg");
  read(j, "theta", theta, "learn.pdhg");
  read(j, "max_iters", max_iters, "learn.pdhg");
  read(j, "tol", tol, "learn.pdhg");
  return PdhgParams(tau, sigma, theta, def.lambda_tv(), max_iters, tol);
}

LearnConfig learn_from(const json& j) {
  check_keys(j, {"k", "outer_iters", "lambda0", "gamma", "floor", "eps_dict", "eps_obj", "patience",
                 "seed", "pdhg"},
             "learn");
  LearnConfig l;
  read(j, "k", l.k, "learn");
  read(j, "outer_iters", l.outer_iters, "learn");
  read(j, "lambda0", l.lambda0, "learn");
  read(j, "gamma", l.gamma, "learn");
  read(j, "floor", l.floor, "learn");
  read(j, "eps_dict", l.eps_dict, "learn");
  read(j, "eps_obj", l.eps_obj, "learn");
  read(j, "patience", l.patience, "learn");
  read(j, "seed", l.seed, "learn");
  if (j.contains("pdhg")) l.pdhg = pdhg_from(j.at("pdhg"));
  return l;
}

ClusterConfig cluster_from(const json& j) {
  check_keys(j, {"k", "n_init", "seed", "pca_components", "channel_l2", "standardize", "n_perm",
                 "n_boot"},
             "cluster");
  ClusterConfig c;
  read(j, "k", c.k, "cluster");
  read(j, "n_init", c.n_init, "cluster");
  read(j, "seed", c.seed, "cluster");
  read(j, "pca_components", c.pca_components, "cluster");
  read(j, "channel_l2", c.channel_l2, "cluster");
  read(j, "standardize", c.standardize, "cluster");
  read(j, "n_perm", c.n_perm, "cluster");
  read(j, "n_boot", c.n_boot, "cluster");
  return c;
}

}  // namespace

std::string to_json(const RunConfig& cfg) {
  json j = result_json(cfg);
  j["dataset"] = cfg.dataset;
  j["labels"] = cfg.labels;
  j["out"] = cfg.out;
  j["trace"] = cfg.trace;
  j["threads"] = cfg.threads;
  return j.dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, {"dataset", "channels", "labels", "keep_classes", "learn", "cluster",
                 "descriptor_eps", "out", "trace", "threads"},
             "config");
  RunConfig cfg;
  read(j, "dataset", cfg.dataset, "config");
  read(j, "channels", cfg.channels, "config");
  read(j, "labels", cfg.labels, "config");
  read(j, "keep_classes", cfg.keep_classes, "config");
  read(j, "descriptor_eps", cfg.descriptor_eps, "config");
  read(j, "out", cfg.out, "config");
  read(j, "trace", cfg.trace, "config");
  read(j, "threads", cfg.threads, "config");
  if (j.contains("learn")) cfg.learn = learn_from(j.at("learn"));
  if (j.contains("cluster")) cfg.cluster = cluster_from(j.at("cluster"));
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return run_config_from_json(text.str());
}

void save_config(const RunConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file " + path.string());
  out << to_json(cfg);
}

std::string config_hash(const RunConfig& cfg) {
  const std::string canonical = result_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace celldict
