#include "core/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "core/errors.hpp"
#include "core/model_zoo.hpp"
#include "core/rng.hpp"

namespace nclln {

namespace {

const std::set<std::string> kLaws = {"scalar",  "functional", "classical",
                                     "lemma31", "ld-bounds",  "simulate",
                                     "rate"};

void reject_unknown_keys(const nlohmann::json& obj,
                         const std::set<std::string>& allowed,
                         const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ValidationError("unknown key '" + it.key() + "' in " + where);
}

double require_number(const nlohmann::json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_number())
    throw ValidationError("missing or non-numeric key '" + key + "'");
  return j[key].get<double>();
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config parse error at byte ") +
                     std::to_string(e.byte) + ": " + e.what());
  }
  if (!j.is_object()) throw ValidationError("config must be a JSON object");

  ExperimentConfig cfg;
  if (!j.contains("law") || !j["law"].is_string())
    throw ValidationError("config requires a 'law' string");
  cfg.law = j["law"].get<std::string>();
  if (!kLaws.count(cfg.law))
    throw ValidationError("unrecognized law '" + cfg.law + "'");

  std::set<std::string> allowed = {"schema_version", "law", "model",
                                   "observable",     "ell", "center",
                                   "master_seed"};
  auto add = [&](std::initializer_list<const char*> keys) {
    for (const char* k : keys) allowed.insert(k);
  };
  if (cfg.law == "scalar" || cfg.law == "classical")
    add({"beta", "n_schedule", "seeds"});
  else if (cfg.law == "functional")
    add({"a", "c", "n_schedule", "seeds", "tube_tol", "net"});
  else if (cfg.law == "lemma31")
    add({"blocks", "h"});
  else if (cfg.law == "ld-bounds")
    add({"gamma", "delta", "lambda", "replicas", "a", "n_schedule", "seeds",
         "tube_tol"});
  else if (cfg.law == "rate")
    add({"beta_grid"});
  else if (cfg.law == "simulate")
    add({"n_schedule", "seeds", "emit_paths"});
  reject_unknown_keys(j, allowed, "config");

  if (j.contains("schema_version")) {
    cfg.schema_version = j["schema_version"].get<int>();
    if (cfg.schema_version != 1)
      throw ValidationError("unsupported schema_version");
  }
  if (!j.contains("model"))
    throw ValidationError("config requires a 'model' object");
  cfg.model_spec = j["model"];
  if (j.contains("observable")) cfg.observable_spec = j["observable"];
  if (j.contains("ell")) {
    cfg.ell = j["ell"].get<int>();
    if (cfg.ell < 1) throw ValidationError("ell must be >= 1");
  }
  if (j.contains("center")) cfg.center = j["center"].get<bool>();
  if (j.contains("master_seed"))
    cfg.master_seed = j["master_seed"].get<std::uint64_t>();

  auto parse_schedule = [&]() {
    cfg.n_schedule = j.at("n_schedule").get<std::vector<long long>>();
    if (cfg.n_schedule.empty())
      throw ValidationError("n_schedule must be nonempty");
    for (std::size_t i = 0; i + 1 < cfg.n_schedule.size(); ++i)
      if (cfg.n_schedule[i] >= cfg.n_schedule[i + 1])
        throw ValidationError("n_schedule must be strictly increasing");
    for (long long n : cfg.n_schedule)
      if (n < 2) throw ValidationError("schedule entries must be >= 2");
  };
  auto parse_seeds = [&]() {
    cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (cfg.seeds.empty()) throw ValidationError("seeds must be nonempty");
    std::set<std::uint64_t> uniq(cfg.seeds.begin(), cfg.seeds.end());
    if (uniq.size() != cfg.seeds.size())
      throw ValidationError("seeds must be pairwise distinct");
  };

  if (cfg.law == "scalar" || cfg.law == "classical") {
    cfg.beta = require_number(j, "beta");
    parse_schedule();
    parse_seeds();
  } else if (cfg.law == "functional") {
    if (j.contains("a") == j.contains("c"))
      throw ValidationError("functional law needs exactly one of 'a' or 'c'");
    if (j.contains("a"))
      cfg.a = require_number(j, "a");
    else {
      double c = require_number(j, "c");
      if (c <= 0.0) throw ValidationError("c must be positive");
      cfg.a = 1.0 / c;
    }
    if (cfg.a <= 0.0) throw ValidationError("a must be positive");
    parse_schedule();
    parse_seeds();
    double c = 1.0 / cfg.a;
    if (c * std::log(static_cast<double>(cfg.n_schedule.front())) < 1.0)
      throw ValidationError("c ln(min n) >= 1 is required");
    if (j.contains("tube_tol")) cfg.tube_tol = require_number(j, "tube_tol");
    if (j.contains("net")) {
      const auto& net = j["net"];
      reject_unknown_keys(net, {"epsilon", "segments", "pitch", "cap"},
                          "net");
      if (net.contains("epsilon")) cfg.net_epsilon = net["epsilon"].get<double>();
      if (net.contains("segments")) cfg.net_segments = net["segments"].get<int>();
      if (net.contains("pitch")) cfg.net_pitch = net["pitch"].get<double>();
      if (net.contains("cap")) cfg.net_cap = net["cap"].get<long long>();
      if (cfg.net_epsilon <= 0.0 || cfg.net_segments < 1)
        throw ValidationError("net epsilon/segments out of range");
    }
  } else if (cfg.law == "lemma31") {
    const auto& blocks = j.at("blocks");
    reject_unknown_keys(blocks, {"k", "length", "gaps"}, "blocks");
    cfg.blocks_k = blocks.at("k").get<int>();
    cfg.block_length = blocks.value("length", 1);
    cfg.gaps = blocks.at("gaps").get<std::vector<int>>();
    if (cfg.blocks_k < 2) throw ValidationError("blocks.k must be >= 2");
    if (cfg.block_length < 1) throw ValidationError("blocks.length must be >= 1");
    for (int g : cfg.gaps)
      if (g < 1) throw ValidationError("gaps must be >= 1");
    cfg.h_name = j.at("h").get<std::string>();
  } else if (cfg.law == "ld-bounds") {
    cfg.gamma_spec = j.at("gamma");
    cfg.delta = require_number(j, "delta");
    cfg.lambda = require_number(j, "lambda");
    cfg.replicas = j.at("replicas").get<long long>();
    cfg.a = require_number(j, "a");
    if (cfg.delta <= 0.0 || cfg.lambda <= 0.0 || cfg.replicas < 1 ||
        cfg.a <= 0.0)
      throw ValidationError("ld-bounds parameters must be positive");
    if (j.contains("tube_tol")) cfg.tube_tol = require_number(j, "tube_tol");
    parse_schedule();
    parse_seeds();
  } else if (cfg.law == "rate") {
    const auto& grid = j.at("beta_grid");
    reject_unknown_keys(grid, {"min", "max", "count"}, "beta_grid");
    cfg.beta_grid_min = grid.at("min").get<double>();
    cfg.beta_grid_max = grid.at("max").get<double>();
    cfg.beta_grid_count = grid.at("count").get<int>();
    if (cfg.beta_grid_count < 2 || cfg.beta_grid_max <= cfg.beta_grid_min)
      throw ValidationError("beta_grid must have count >= 2 and max > min");
  } else if (cfg.law == "simulate") {
    parse_schedule();
    parse_seeds();
    if (j.contains("emit_paths")) cfg.emit_paths = j["emit_paths"].get<bool>();
  }

  // Canonical echo with all defaults resolved.
  nlohmann::json echo;
  echo["schema_version"] = cfg.schema_version;
  echo["law"] = cfg.law;
  echo["model"] = cfg.model_spec;
  if (!cfg.observable_spec.is_null()) echo["observable"] = cfg.observable_spec;
  echo["ell"] = cfg.ell;
  echo["center"] = cfg.center;
  echo["master_seed"] = cfg.master_seed;
  if (!cfg.n_schedule.empty()) echo["n_schedule"] = cfg.n_schedule;
  if (!cfg.seeds.empty()) echo["seeds"] = cfg.seeds;
  if (cfg.law == "scalar" || cfg.law == "classical") echo["beta"] = cfg.beta;
  if (cfg.law == "functional") {
    echo["a"] = cfg.a;
    echo["tube_tol"] = cfg.tube_tol;
    echo["net"] = {{"epsilon", cfg.net_epsilon},
                   {"segments", cfg.net_segments},
                   {"pitch", cfg.net_pitch},
                   {"cap", cfg.net_cap}};
  }
  if (cfg.law == "lemma31") {
    echo["blocks"] = {{"k", cfg.blocks_k},
                      {"length", cfg.block_length},
                      {"gaps", cfg.gaps}};
    echo["h"] = cfg.h_name;
  }
  if (cfg.law == "ld-bounds") {
    echo["gamma"] = cfg.gamma_spec;
    echo["delta"] = cfg.delta;
    echo["lambda"] = cfg.lambda;
    echo["replicas"] = cfg.replicas;
    echo["a"] = cfg.a;
    echo["tube_tol"] = cfg.tube_tol;
  }
  if (cfg.law == "rate")
    echo["beta_grid"] = {{"min", cfg.beta_grid_min},
                         {"max", cfg.beta_grid_max},
                         {"count", cfg.beta_grid_count}};
  if (cfg.law == "simulate") echo["emit_paths"] = cfg.emit_paths;
  cfg.echo = echo;
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

TransitionModel build_model(const nlohmann::json& spec) {
  if (!spec.is_object()) throw ValidationError("model spec must be an object");
  if (spec.contains("file")) {
    reject_unknown_keys(spec, {"file"}, "model");
    std::ifstream in(spec["file"].get<std::string>(), std::ios::binary);
    if (!in) throw IoError("cannot open model file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return TransitionModel::from_json(buf.str());
  }
  if (spec.contains("kernel")) {
    reject_unknown_keys(spec, {"kernel", "label"}, "model");
    auto rows = spec["kernel"].get<std::vector<std::vector<double>>>();
    int s = static_cast<int>(rows.size());
    TransitionModel m;
    m.label = spec.value("label", std::string("inline"));
    m.kernel.resize(s, s);
    for (int r = 0; r < s; ++r) {
      if (static_cast<int>(rows[r].size()) != s)
        throw ValidationError("kernel rows must be square");
      for (int c = 0; c < s; ++c) m.kernel(r, c) = rows[r][c];
    }
    m.stationary = stationary_distribution(m.kernel);
    try {
      m.doeblin_kappa = validate_doeblin(m.kernel, m.stationary);
    } catch (const DoeblinViolated&) {
    }
    m.validate();
    return m;
  }
  if (!spec.contains("name"))
    throw ValidationError("model spec needs 'name', 'kernel' or 'file'");
  reject_unknown_keys(spec, {"name", "p", "mu"}, "model");
  std::string name = spec["name"].get<std::string>();
  if (name == "flip") return flip_chain(spec.at("p").get<double>());
  if (name == "pair") return pair_chain(spec.at("p").get<double>());
  if (name == "iid") {
    auto mu = spec.at("mu").get<std::vector<double>>();
    return iid_chain(mu, "iid");
  }
  if (name == "iid-fair") return iid_chain({0.5, 0.5}, "iid-fair");
  if (name == "golden-gibbs") return golden_gibbs_chain();
  throw ValidationError("unknown model name '" + name + "'");
}

Observable build_observable(const nlohmann::json& spec,
                            const TransitionModel& model, int ell,
                            bool center) {
  Observable f;
  if (spec.is_null()) throw ValidationError("observable spec is required");
  if (spec.contains("values")) {
    reject_unknown_keys(spec, {"values"}, "observable");
    auto vals = spec["values"].get<std::vector<double>>();
    if (static_cast<int>(vals.size()) != model.state_count())
      throw ValidationError("observable values must cover every state");
    if (ell == 1)
      f = observable_from_values(vals);
    else
      f = observable_product(vals, ell);
  } else if (spec.contains("table")) {
    reject_unknown_keys(spec, {"table", "dim"}, "observable");
    int dim = spec.value("dim", 1);
    auto table = spec["table"].get<std::vector<double>>();
    f = make_observable(model.state_count(), ell, dim, table);
  } else if (spec.contains("name")) {
    reject_unknown_keys(spec, {"name"}, "observable");
    std::string name = spec["name"].get<std::string>();
    if (name == "pm1") {
      if (model.state_count() != 2)
        throw ValidationError("pm1 observable needs a 2-state model");
      f = ell == 1 ? observable_from_values({1.0, -1.0})
                   : observable_product({1.0, -1.0}, ell);
    } else if (name == "coin") {
      if (model.state_count() != 2)
        throw ValidationError("coin observable needs a 2-state model");
      f = ell == 1 ? observable_from_values({0.0, 1.0})
                   : observable_product({0.0, 1.0}, ell);
    } else {
      throw ValidationError("unknown observable name '" + name + "'");
    }
  } else {
    throw ValidationError("observable spec needs 'values', 'table' or 'name'");
  }
  if (center) return center_observable(f, model.stationary);
  return with_mean(std::move(f), model.stationary);
}

std::string config_hash(const nlohmann::json& echo) {
  std::uint64_t h = fnv1a64(echo.dump());
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace nclln
