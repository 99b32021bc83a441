#pragma once

// Seeded experiment sweeps behind the command-line tool. Each command reads
// one section of an INI config, runs its sweep points (possibly in
// parallel), and writes the rows in sweep order as CSV or JSON.

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "bounds.hpp"
#include "core.hpp"
#include "fock.hpp"
#include "io.hpp"
#include "junta.hpp"
#include "optimizer.hpp"
#include "parallel.hpp"
#include "risk.hpp"
#include "training.hpp"

#ifndef LINOPT_VERSION
#define LINOPT_VERSION "0.1.0"
#endif

namespace linopt {

class ConfigError : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };

enum ExitCode { kExitOk = 0, kExitIo = 1, kExitConfig = 2, kExitVerify = 3 };

using Ptree = boost::property_tree::ptree;

// ---------------------------------------------------------------------------
// Config values

namespace config {

inline std::string format_double(double v) {
  // shortest text that parses back to the same double
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  T value{};
  const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ConfigError("bad value for '" + key + "': '" + text + "'");
  return value;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(parse_number<T>(key, item));
  }
  return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>) out += format_double(v[i]);
    else out += std::to_string(v[i]);
  }
  return out;
}

/// Reads keys from a section, rejecting unknown ones.
class Reader {
 public:
  explicit Reader(const Ptree& section) : section_(section) {}

  template <class T>
  void operator()(const std::string& key, T& value) {
    seen_.push_back(key);
    const auto node = section_.get_child_optional(key);
    if (!node) return;
    const std::string text = node->get_value<std::string>();
    if constexpr (std::is_same_v<T, std::string>) {
      value = trim(text);
    } else if constexpr (std::is_same_v<T, bool>) {
      const std::string t = trim(text);
      if (t == "true" || t == "1") value = true;
      else if (t == "false" || t == "0") value = false;
      else throw ConfigError("bad boolean for '" + key + "': '" + text + "'");
    } else if constexpr (std::is_same_v<T, std::vector<int>> ||
                         std::is_same_v<T, std::vector<double>>) {
      value = parse_list<typename T::value_type>(key, text);
    } else {
      value = parse_number<T>(key, text);
    }
  }

  void finish(const std::string& name) const {
    for (const auto& [key, node] : section_) {
      (void)node;
      if (std::find(seen_.begin(), seen_.end(), key) == seen_.end())
        throw ConfigError("unknown key '" + key + "' in section [" + name + "]");
    }
  }

 private:
  const Ptree& section_;
  std::vector<std::string> seen_;
};

class Writer {
 public:
  explicit Writer(Ptree& section) : section_(section) {}

  template <class T>
  void operator()(const std::string& key, const T& value) {
    if constexpr (std::is_same_v<T, std::string>) section_.put(key, value);
    else if constexpr (std::is_same_v<T, bool>) section_.put(key, value ? "true" : "false");
    else if constexpr (std::is_same_v<T, double>) section_.put(key, format_double(value));
    else if constexpr (std::is_same_v<T, std::vector<int>> || std::is_same_v<T, std::vector<double>>)
      section_.put(key, join(value));
    else section_.put(key, std::to_string(value));
  }

 private:
  Ptree& section_;
};

}  // namespace config

template <class Cfg>
Cfg read_section(const Ptree& root, const std::string& name) {
  Cfg cfg;
  const auto section = root.get_child_optional(name);
  if (!section) return cfg;
  config::Reader reader(*section);
  cfg.fields(reader);
  reader.finish(name);
  cfg.validate();
  return cfg;
}

template <class Cfg>
void write_section(Ptree& root, const std::string& name, Cfg cfg) {
  Ptree section;
  config::Writer writer(section);
  cfg.fields(writer);
  root.put_child(name, section);
}

inline Ptree load_config(const std::string& path) {
  Ptree root;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  try {
    boost::property_tree::ini_parser::read_ini(in, root);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return root;
}

inline void save_config(const std::string& path, const Ptree& root) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config '" + path + "'");
  boost::property_tree::ini_parser::write_ini(out, root);
}

inline void config_require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

struct ErmConfig {
  std::string scheme = "ERM1";
  int mode_count = 4;
  std::vector<int> sizes{2, 3, 4, 5, 6, 7, 8};
  std::vector<double> energies{1.0};
  int seeds = 10;
  std::uint64_t seed = 0;
  int restarts = 10;
  int max_iters = 3000;
  int polish_iters = 500;
  double learning_rate = 0.02;
  double penalty_weight = 10.0;
  double success_risk = 1e-7;

  template <class V>
  void fields(V& v) {
    v("scheme", scheme);
    v("M", mode_count);
    v("T", sizes);
    v("E", energies);
    v("seeds", seeds);
    v("seed", seed);
    v("restarts", restarts);
    v("max_iters", max_iters);
    v("polish_iters", polish_iters);
    v("learning_rate", learning_rate);
    v("penalty_weight", penalty_weight);
    v("success_risk", success_risk);
  }

  void validate() const {
    try {
      parse_scheme(scheme);
    } catch (const InvalidParameter& e) {
      throw ConfigError(e.what());
    }
    config_require(mode_count >= 1, "M must be >= 1");
    config_require(!sizes.empty() && !energies.empty(), "T and E grids must be non-empty");
    for (int t : sizes) config_require(t >= 1, "T must be >= 1");
    for (double e : energies) config_require(e >= 0.0 && std::isfinite(e), "E must be >= 0");
    config_require(seeds >= 1 && restarts >= 1 && max_iters >= 0 && polish_iters >= 0,
                   "counts must be positive");
    config_require(learning_rate > 0.0 && penalty_weight >= 0.0 && success_risk > 0.0,
                   "optimizer parameters must be positive");
  }
};

struct JuntaConfig {
  int mode_count = 8;
  std::vector<int> junta{3, 4, 5, 8};
  std::vector<int> sizes{4};
  std::vector<double> energy_scales{1.0};
  int seeds = 10;
  std::uint64_t seed = 0;
  std::string scheme = "ERM2";
  double threshold = 1e-10;
  double tie_tolerance = 1e-2;
  int restarts = 4;
  bool product_shortcut = true;

  template <class V>
  void fields(V& v) {
    v("M", mode_count);
    v("J", junta);
    v("T", sizes);
    v("energy_scale", energy_scales);
    v("seeds", seeds);
    v("seed", seed);
    v("scheme", scheme);
    v("threshold", threshold);
    v("tie_tolerance", tie_tolerance);
    v("restarts", restarts);
    v("product_shortcut", product_shortcut);
  }

  void validate() const {
    try {
      parse_scheme(scheme);
      validate_modes(junta, mode_count);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
    config_require(mode_count >= 2, "M must be >= 2");
    config_require(!sizes.empty() && !energy_scales.empty(), "T and energy grids must be non-empty");
    for (int t : sizes) config_require(t >= 1, "T must be >= 1");
    for (double e : energy_scales) config_require(e > 0.0, "energy_scale must be > 0");
    config_require(seeds >= 1 && restarts >= 1, "counts must be positive");
    config_require(threshold > 0.0 && tie_tolerance >= 0.0, "thresholds must be positive");
  }
};

struct BoundsConfig {
  std::string schemes = "ERM1P,ERM2";
  int mode_count = 2;
  double energy = 1.0;
  std::vector<int> sizes{2, 4, 8, 16};
  double delta = 0.1;
  int sets = 20;
  std::uint64_t seed = 0;
  long mc_samples = 1L << 16;
  int probes = 16;
  int restarts = 3;

  template <class V>
  void fields(V& v) {
    v("schemes", schemes);
    v("M", mode_count);
    v("E", energy);
    v("T", sizes);
    v("delta", delta);
    v("sets", sets);
    v("seed", seed);
    v("mc_samples", mc_samples);
    v("probes", probes);
    v("restarts", restarts);
  }

  std::vector<Scheme> scheme_list() const {
    std::vector<Scheme> out;
    std::stringstream ss(schemes);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!config::trim(item).empty()) out.push_back(parse_scheme(config::trim(item)));
    return out;
  }

  void validate() const {
    try {
      config_require(!scheme_list().empty(), "no schemes given");
    } catch (const InvalidParameter& e) {
      throw ConfigError(e.what());
    }
    config_require(mode_count >= 1 && energy >= 0.0, "bad M or E");
    config_require(!sizes.empty(), "T grid must be non-empty");
    for (int t : sizes) config_require(t >= 1, "T must be >= 1");
    config_require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    config_require(sets >= 1 && mc_samples >= 2 && probes >= 0 && restarts >= 1,
                   "counts must be positive");
  }
};

struct VerifyConfig {
  std::uint64_t seed = 0;
  int fock_instances = 100;
  int fock_cutoff = 40;
  int gradient_instances = 50;
  int lipschitz_trials = 1000;
  long lipschitz_samples = 4096;
  int marginal_sets = 100000;
  int series_instances = 5;
  long series_samples = 1000000;
  /// Added to every closed-form fidelity; nonzero only as a negative control.
  double fidelity_perturbation = 0.0;

  template <class V>
  void fields(V& v) {
    v("seed", seed);
    v("fock_instances", fock_instances);
    v("fock_cutoff", fock_cutoff);
    v("gradient_instances", gradient_instances);
    v("lipschitz_trials", lipschitz_trials);
    v("lipschitz_samples", lipschitz_samples);
    v("marginal_sets", marginal_sets);
    v("series_instances", series_instances);
    v("series_samples", series_samples);
    v("fidelity_perturbation", fidelity_perturbation);
  }

  void validate() const {
    config_require(fock_instances >= 1 && gradient_instances >= 1 && lipschitz_trials >= 1 &&
                       marginal_sets >= 2 && series_instances >= 1,
                   "counts must be positive");
    config_require(fock_cutoff >= 8, "fock_cutoff must be >= 8");
    config_require(lipschitz_samples >= 2 && series_samples >= 2, "sample counts must be >= 2");
    config_require(std::isfinite(fidelity_perturbation), "fidelity_perturbation must be finite");
  }
};

struct SwapRiskConfig {
  std::string scheme = "ERM1";
  int mode_count = 2;
  int size = 4;
  double energy = 1.0;
  int shots = 1000;
  int trials = 10;
  std::uint64_t seed = 0;

  template <class V>
  void fields(V& v) {
    v("scheme", scheme);
    v("M", mode_count);
    v("T", size);
    v("E", energy);
    v("shots", shots);
    v("trials", trials);
    v("seed", seed);
  }

  void validate() const {
    try {
      parse_scheme(scheme);
    } catch (const InvalidParameter& e) {
      throw ConfigError(e.what());
    }
    config_require(mode_count >= 1 && size >= 1 && energy >= 0.0, "bad M, T or E");
    config_require(shots >= 1 && trials >= 1, "counts must be positive");
  }
};

// ---------------------------------------------------------------------------
// Output

struct RunOptions {
  std::string out;  // empty: stdout
  std::string format = "csv";
  int workers = default_workers();
  std::ostream* console = &std::cerr;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Json>> rows;

  void write(std::ostream& os, const std::string& format) const {
    if (format == "json") {
      Json arr = Json::array();
      for (const auto& row : rows) {
        Json obj = Json::object();
        for (std::size_t i = 0; i < header.size(); ++i) obj[header[i]] = row[i];
        arr.push_back(std::move(obj));
      }
      os << arr.dump(2) << '\n';
      return;
    }
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << '\n';
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) os << ',';
        if (row[i].is_string()) os << row[i].get<std::string>();
        else if (row[i].is_number_float()) os << config::format_double(row[i].get<double>());
        else os << row[i].dump();
      }
      os << '\n';
    }
  }
};

inline void emit(const Table& table, const RunOptions& opt, const std::string& command,
                 const Ptree& config_section) {
  if (opt.format != "csv" && opt.format != "json")
    throw ConfigError("unknown format '" + opt.format + "'");
  if (opt.out.empty()) {
    table.write(std::cout, opt.format);
    return;
  }
  std::ofstream out(opt.out, std::ios::binary);
  if (!out) throw IoError("cannot write '" + opt.out + "'");
  table.write(out, opt.format);
  if (!out) throw IoError("write to '" + opt.out + "' failed");

  Json cfg = Json::object();
  for (const auto& [key, node] : config_section) cfg[key] = node.get_value<std::string>();
  const Json meta = {{"command", command}, {"version", LINOPT_VERSION}, {"config", cfg}};
  std::ofstream side(opt.out + ".meta.json", std::ios::binary);
  if (!side) throw IoError("cannot write '" + opt.out + ".meta.json'");
  side << meta.dump(2) << '\n';
}

template <class Cfg>
Ptree section_of(const Cfg& cfg) {
  Ptree root;
  write_section(root, "s", cfg);
  return root.get_child("s");
}

inline std::string join_modes(const ModeSet& modes) {
  std::string out;
  for (std::size_t i = 0; i < modes.size(); ++i) out += (i ? ";" : "") + std::to_string(modes[i]);
  return out;
}

// ---------------------------------------------------------------------------
// erm

inline Table run_erm(const ErmConfig& cfg, int workers) {
  cfg.validate();
  const Scheme scheme = parse_scheme(cfg.scheme);
  struct Point {
    std::size_t ei, ti;
    int s;
  };
  std::vector<Point> points;
  for (std::size_t ei = 0; ei < cfg.energies.size(); ++ei)
    for (std::size_t ti = 0; ti < cfg.sizes.size(); ++ti)
      for (int s = 0; s < cfg.seeds; ++s) points.push_back({ei, ti, s});

  Table table;
  table.header = {"scheme", "M", "E", "T", "seed", "converged", "risk_final", "frobenius_dist_sq",
                  "unitarity_residual"};
  table.rows.resize(points.size());
  parallel_for(points.size(), workers, [&](std::size_t i) {
    const Point& p = points[i];
    const std::uint64_t run_seed = cfg.seed + static_cast<std::uint64_t>(p.s);
    Rng target_rng = make_rng(run_seed, 0);
    const SymplecticOrthogonal target = random_linear_optical(cfg.mode_count, target_rng);
    const std::uint64_t stream = 1 + p.ei * cfg.sizes.size() + p.ti;
    Rng data_rng = make_rng(run_seed, stream);
    const double energy = cfg.energies[p.ei];
    const int size = cfg.sizes[p.ti];
    const TrainingSet s = sample_training_set(scheme, cfg.mode_count, size, energy, data_rng);
    OptimConfig oc;
    oc.restarts = cfg.restarts;
    oc.max_iters = cfg.max_iters;
    oc.polish_iters = cfg.polish_iters;
    oc.learning_rate = cfg.learning_rate;
    oc.penalty_weight = cfg.penalty_weight;
    oc.success_risk_threshold = cfg.success_risk;
    oc.seed = run_seed * 1000003ULL + stream;
    const OptimResult r = minimize(s, target, oc);
    table.rows[i] = {to_string(scheme),
                     cfg.mode_count,
                     energy,
                     size,
                     run_seed,
                     r.converged ? 1 : 0,
                     r.risk_final,
                     frobenius_distance_sq(target, realify(r.g_final)),
                     r.unitarity_residual};
  });
  return table;
}

inline int cmd_erm(const ErmConfig& cfg, const RunOptions& opt) {
  emit(run_erm(cfg, opt.workers), opt, "erm", section_of(cfg));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// junta

inline Table run_junta(const JuntaConfig& cfg, int workers) {
  cfg.validate();
  struct Point {
    std::size_t ti, ei;
    int s;
  };
  std::vector<Point> points;
  for (std::size_t ti = 0; ti < cfg.sizes.size(); ++ti)
    for (std::size_t ei = 0; ei < cfg.energy_scales.size(); ++ei)
      for (int s = 0; s < cfg.seeds; ++s) points.push_back({ti, ei, s});
  ModeSet expected = cfg.junta;
  std::sort(expected.begin(), expected.end());

  Table table;
  table.header = {"M", "k", "T", "energy_scale", "seed", "status", "stages", "terminated_stage",
                  "log10_stage_minima", "junta", "recovered", "final_risk", "frobenius_dist_sq",
                  "energy_spent"};
  table.rows.resize(points.size());
  parallel_for(points.size(), workers, [&](std::size_t i) {
    const Point& p = points[i];
    const std::uint64_t run_seed = cfg.seed + static_cast<std::uint64_t>(p.s);
    Rng rng = make_rng(run_seed, 0);
    const SymplecticOrthogonal target = embed_junta(random_junta(cfg.mode_count, cfg.junta, rng));
    StagePolicy policy;
    policy.scheme = parse_scheme(cfg.scheme);
    policy.termination_threshold = cfg.threshold;
    policy.tie_tolerance = cfg.tie_tolerance;
    policy.training_size = cfg.sizes[p.ti];
    policy.energy_scale = cfg.energy_scales[p.ei];
    policy.product_shortcut = cfg.product_shortcut;
    policy.optimizer.restarts = cfg.restarts;
    auto& row = table.rows[i];
    row = {cfg.mode_count, static_cast<int>(cfg.junta.size()), cfg.sizes[p.ti],
           cfg.energy_scales[p.ei], run_seed};
    try {
      const JuntaReport r = algorithm1(target, policy, run_seed * 1000003ULL + 1 + p.ti * 97 + p.ei);
      std::string minima;
      for (std::size_t k = 0; k < r.stages.size(); ++k) {
        const double c = std::max(r.stages[k].minimum, 1e-300);
        minima += (k ? ";" : "") + config::format_double(std::log10(c));
      }
      row.insert(row.end(), {"ok", static_cast<int>(r.stages.size()), r.terminated_stage, minima,
                             join_modes(r.junta), r.junta == expected ? 1 : 0, r.final_risk,
                             frobenius_distance_sq(target, realify(r.learned_full)),
                             r.energy_spent});
    } catch (const StageLimitReached&) {
      row.insert(row.end(), {"stage_limit", 0, 0, "", "", 0, std::nan(""), std::nan(""), std::nan("")});
    } catch (const BudgetExceeded&) {
      row.insert(row.end(), {"budget", 0, 0, "", "", 0, std::nan(""), std::nan(""), std::nan("")});
    }
  });
  return table;
}

inline int cmd_junta(const JuntaConfig& cfg, const RunOptions& opt) {
  emit(run_junta(cfg, opt.workers), opt, "junta", section_of(cfg));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// bounds

inline Json bound_or_nan(Scheme scheme, const BoundParams& p) {
  try {
    return generalization_bound(scheme, p);
  } catch (const InvalidParameter&) {
    return "nan";
  }
}

inline Table run_bounds(const BoundsConfig& cfg, int workers) {
  cfg.validate();
  Table table;
  table.header = {"scheme", "M", "E", "T", "median_gap", "median_erm_gap", "bound_erm1",
                  "bound_erm1prime", "bound_erm2", "violation_fraction", "failures"};
  ExperimentOptions eo;
  eo.mc_samples = cfg.mc_samples;
  eo.probes = cfg.probes;
  eo.optimizer.restarts = cfg.restarts;
  eo.workers = workers;
  for (Scheme scheme : cfg.scheme_list()) {
    const BoundReport r = generalization_experiment(scheme, cfg.mode_count, cfg.energy, cfg.sizes,
                                                    cfg.delta, cfg.sets, cfg.seed, eo);
    for (const auto& row : r.rows) {
      const BoundParams p{cfg.mode_count, static_cast<double>(row.size), cfg.energy, cfg.delta};
      const int n = static_cast<int>(row.uniform_gaps.size());
      table.rows.push_back({to_string(scheme), cfg.mode_count, cfg.energy, row.size,
                            row.median_uniform_gap, row.median_erm_gap,
                            bound_or_nan(Scheme::ERM1, p), bound_or_nan(Scheme::ERM1P, p),
                            bound_or_nan(Scheme::ERM2, p),
                            n ? static_cast<double>(row.violations) / n : 0.0, row.failures});
    }
  }
  return table;
}

inline int cmd_bounds(const BoundsConfig& cfg, const RunOptions& opt) {
  emit(run_bounds(cfg, opt.workers), opt, "bounds", section_of(cfg));
  return kExitOk;
}

// ---------------------------------------------------------------------------
// verify

struct CheckResult {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;
};

/// max |closed form - Fock oracle| over random M <= 2 instances with |x| <= 2.
inline CheckResult check_fock_agreement(int instances, int cutoff, std::uint64_t seed,
                                        double perturbation = 0.0) {
  Rng rng = make_rng(seed, 11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < instances; ++i) {
    const int m = 1 + i % 2;
    const FockSpace space(m, cutoff);
    const SymplecticOrthogonal u = random_linear_optical(m, rng);
    const SymplecticOrthogonal v = random_linear_optical(m, rng);
    const RealVector x = uniform_on_sphere(2 * m, 2.0 * unit(rng), rng);
    const double closed = fidelity(x, u.matrix(), v.matrix()) + perturbation;
    worst = std::max(worst, std::abs(closed - oracle_fidelity(x, u, v, space)));
  }
  return {"fock_oracle", worst, 1e-8, worst < 1e-8, std::to_string(instances) + " instances"};
}

/// Worst relative error of the analytic risk gradient against central
/// differences, over random targets, training sets and non-unitary ansatze.
inline CheckResult check_gradients(int instances, std::uint64_t seed) {
  Rng rng = make_rng(seed, 12);
  std::uniform_int_distribution<int> modes(1, 4), sizes(1, 6);
  std::uniform_real_distribution<double> energy(0.1, 4.0);
  const Scheme schemes[] = {Scheme::ERM1, Scheme::ERM1P, Scheme::ERM2};
  double worst = 0.0;
  for (int i = 0; i < instances; ++i) {
    const int m = modes(rng);
    const TrainingSet s = sample_training_set(schemes[i % 3], m, sizes(rng), energy(rng), rng);
    const SymplecticOrthogonal target = random_linear_optical(m, rng);
    ComplexMatrix g = haar_unitary(m, rng);
    for (Eigen::Index k = 0; k < g.size(); ++k) {
      const RealVector noise = standard_normal(2, rng);
      g.data()[k] += 0.3 * Complex(noise[0], noise[1]);
    }
    const ErmObjective objective(s, target);
    ComplexMatrix grad;
    objective.risk_and_gradient(g, grad);
    const RealVector analytic = pack_parameters(grad);
    const RealVector theta = pack_parameters(g);
    // five-point central stencil; risks near 1 leave only a few digits for
    // a two-point difference
    RealVector numeric(theta.size());
    const double h = 1e-3;
    auto at = [&](Eigen::Index k, double step) {
      RealVector t = theta;
      t[k] += step;
      return objective.risk(unpack_parameters(t, m));
    };
    for (Eigen::Index k = 0; k < theta.size(); ++k)
      numeric[k] = (8.0 * (at(k, h) - at(k, -h)) - (at(k, 2 * h) - at(k, -2 * h))) / (12.0 * h);
    worst = std::max(worst, (analytic - numeric).norm() / std::max(analytic.norm(), 1e-12));
  }
  return {"gradient_fd", worst, 1e-5, worst < 1e-5, std::to_string(instances) + " instances"};
}

inline CheckResult check_lipschitz(int trials, long samples, std::uint64_t seed) {
  LipschitzOptions lo;
  lo.mc_samples = samples;
  const LipschitzReport r = lipschitz_sweep(2, 1.0, trials, seed, lo);
  const int violations = r.violations_empirical + r.violations_erm1 + r.violations_erm2;
  std::ostringstream detail;
  detail << r.trials << " trials, worst gap/eps " << r.worst_ratio;
  return {"lipschitz", static_cast<double>(violations), 0.0, violations == 0, detail.str()};
}

/// Mean energy of the first block of ERM2 sets (M = 4, T = 5, E = 10)
/// against E/T. Averaging all blocks of a set would give E/T exactly.
inline CheckResult check_marginal_energy(int sets, std::uint64_t seed) {
  const int m = 4, t = 5;
  const double e = 10.0;
  Rng rng = make_rng(seed, 13);
  double sum = 0.0;
  for (int i = 0; i < sets; ++i) sum += sample_training_set(Scheme::ERM2, m, t, e, rng).states[0].energy();
  const double mean = sum / sets;
  const double rel = std::abs(mean - e / t) / (e / t);
  return {"marginal_energy", rel, 0.02, rel < 0.02, "mean first-block energy " + config::format_double(mean)};
}

/// Allowed |series - MC|: 3 standard errors plus the series' own tail
/// estimate and rounding. For a single mode O_U - O_V is a scaled rotation,
/// so the ERM1 integrand is constant on the sphere and the standard error
/// vanishes; the series is then only good to its 1e-12 stopping rule.
inline double series_mc_tolerance(const SeriesResult& series, const McEstimate& mc) {
  return 3.0 * mc.standard_error + series.error_estimate +
         64.0 * std::numeric_limits<double>::epsilon();
}

/// Worst |series - MC| / tolerance over random single-mode instances with
/// E <= 2, for ERM1 and for the ERM2 first-block marginal with T = 3.
inline CheckResult check_series_mc(int instances, long samples, std::uint64_t seed) {
  Rng rng = make_rng(seed, 14);
  std::uniform_real_distribution<double> energy(0.1, 2.0);
  double worst = 0.0;
  for (int i = 0; i < instances; ++i) {
    const SymplecticOrthogonal u = random_linear_optical(1, rng);
    const SymplecticOrthogonal v = random_linear_optical(1, rng);
    const double e = energy(rng);
    const std::uint64_t mc_seed = seed + 100 + static_cast<std::uint64_t>(i);
    const SeriesResult s1 = series_full_risk(u, v, e, 1, 200);
    const McEstimate m1 = full_risk_mc(Scheme::ERM1, u, v, 1, 1, e, samples, mc_seed);
    worst = std::max(worst, std::abs(s1.value - m1.estimate) / series_mc_tolerance(s1, m1));
    const SeriesResult s2 = series_full_risk(u, v, e, 1, 200, 3);
    const McEstimate m2 = full_risk_mc(Scheme::ERM2, u, v, 1, 3, e, samples, mc_seed ^ 0xabc);
    worst = std::max(worst, std::abs(s2.value - m2.estimate) / series_mc_tolerance(s2, m2));
  }
  return {"series_vs_mc", worst, 1.0, worst < 1.0, "|series - MC| / (3 stderr + series tail)"};
}

inline std::vector<CheckResult> run_verify(const VerifyConfig& cfg) {
  cfg.validate();
  return {check_fock_agreement(cfg.fock_instances, cfg.fock_cutoff, cfg.seed, cfg.fidelity_perturbation),
          check_gradients(cfg.gradient_instances, cfg.seed),
          check_lipschitz(cfg.lipschitz_trials, cfg.lipschitz_samples, cfg.seed),
          check_marginal_energy(cfg.marginal_sets, cfg.seed),
          check_series_mc(cfg.series_instances, cfg.series_samples, cfg.seed)};
}

inline int cmd_verify(const VerifyConfig& cfg, const RunOptions& opt) {
  const auto checks = run_verify(cfg);
  Table table;
  table.header = {"check", "value", "tolerance", "status", "detail"};
  bool ok = true;
  for (const auto& c : checks) {
    ok = ok && c.pass;
    table.rows.push_back({c.name, c.value, c.tolerance, c.pass ? "PASS" : "FAIL", c.detail});
  }
  emit(table, opt, "verify", section_of(cfg));
  // aligned summary when the table went to a file
  if (!opt.out.empty()) {
    std::ostream& con = *opt.console;
    for (const auto& c : checks)
      con << std::left << std::setw(18) << c.name << std::setw(14) << c.value << std::setw(12)
          << c.tolerance << (c.pass ? "PASS" : "FAIL") << "  " << c.detail << '\n';
  }
  return ok ? kExitOk : kExitVerify;
}

// ---------------------------------------------------------------------------
// swap-risk

inline Table run_swap_risk(const SwapRiskConfig& cfg, int workers) {
  cfg.validate();
  const Scheme scheme = parse_scheme(cfg.scheme);
  Table table;
  table.header = {"trial", "scheme", "M", "T", "E", "shots", "exact_risk", "swap_risk", "abs_error"};
  table.rows.resize(static_cast<std::size_t>(cfg.trials));
  parallel_for(table.rows.size(), workers, [&](std::size_t i) {
    Rng rng = make_rng(cfg.seed, i);
    const SymplecticOrthogonal target = random_linear_optical(cfg.mode_count, rng);
    const ComplexTransfer ansatz(haar_unitary(cfg.mode_count, rng));
    const TrainingSet s = sample_training_set(scheme, cfg.mode_count, cfg.size, cfg.energy, rng);
    const double exact = empirical_risk(s, target, ansatz).value;
    const double swap =
        swap_test_risk(s, target, ansatz, {cfg.shots, cfg.seed * 1000003ULL + i}).value;
    table.rows[i] = {static_cast<int>(i), to_string(scheme), cfg.mode_count, cfg.size, cfg.energy,
                     cfg.shots, exact, swap, std::abs(exact - swap)};
  });
  return table;
}

inline int cmd_swap_risk(const SwapRiskConfig& cfg, const RunOptions& opt) {
  emit(run_swap_risk(cfg, opt.workers), opt, "swap-risk", section_of(cfg));
  return kExitOk;
}

}  // namespace linopt
