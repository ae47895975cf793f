// Copyright 2026 The qmix Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "qmix/certify.hpp"
#include "qmix/channel.hpp"
#include "qmix/doeblin.hpp"
#include "qmix/lindblad.hpp"
#include "qmix/order_effects.hpp"

namespace qmix::cli {

constexpr double kPi = 3.14159265358979323846;

inline std::string format6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open input file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::invalid_argument("cannot open output file: " + path);
  out << bytes;
  out.flush();
  if (!out) throw std::runtime_error("failed writing output file: " + path);
}

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256: digest computation failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

template <typename Body>
void parallel_for(std::size_t n, int workers, Body&& body) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const std::size_t pool_size = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(pool_size);
  std::vector<std::thread> pool;
  pool.reserve(pool_size);
  for (std::size_t w = 0; w < pool_size; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < n; i = next++) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline std::vector<double> parse_double_list(const std::string& text, const char* what) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t pos = 0;
      values.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string(what) + ": cannot parse '" + item + "'");
    }
  }
  if (values.empty()) throw std::invalid_argument(std::string(what) + ": empty list");
  return values;
}

// ---------------------------------------------------------------------------
// order-sweep

struct OrderSweepConfig {
  int gamma_steps = 16;
  int ab_steps = 12;
  double gamma_max = kPi / 2.0;
  std::uint64_t seed = 1;
  int workers = 1;
  std::string out;
};

inline void run_order_sweep(const OrderSweepConfig& cfg) {
  if (cfg.gamma_steps < 1 || cfg.ab_steps < 1) {
    throw std::invalid_argument("order-sweep: grid sizes must be positive");
  }
  if (!(cfg.gamma_max >= 0.0 && cfg.gamma_max <= kPi / 2.0)) {
    throw std::invalid_argument("order-sweep: gamma-max must lie in [0, pi/2]");
  }
  std::vector<double> gammas(cfg.gamma_steps);
  for (int k = 0; k < cfg.gamma_steps; ++k) {
    gammas[k] = cfg.gamma_steps == 1
                    ? 0.0
                    : cfg.gamma_max * static_cast<double>(k) / (cfg.gamma_steps - 1);
  }
  const ComplexMatrix psi0 = ComplexMatrix::column({0.5, 0.5, 0.5, 0.5});  // |++>

  std::vector<OrderSweepRow> rows(gammas.size());
  parallel_for(gammas.size(), cfg.workers, [&](std::size_t i) {
    rows[i] = zz_order_sweep({gammas[i]}, static_cast<std::size_t>(cfg.ab_steps), psi0,
                             cfg.seed)[0];
  });

  bool nondecreasing = true;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].mean < rows[i - 1].mean - 1e-12) nondecreasing = false;
  }

  std::string csv = "gamma,mean,min,max\n";
  for (const auto& row : rows) {
    csv += format6(row.gamma) + ',' + format6(row.mean) + ',' + format6(row.min) + ',' +
           format6(row.max) + '\n';
  }
  write_file(cfg.out, csv);
  std::cout << "order-sweep: " << rows.size() << " rows -> " << cfg.out
            << " (mean nondecreasing: " << (nondecreasing ? "yes" : "no") << ")\n";
}

// ---------------------------------------------------------------------------
// equality-scan

struct EqualityScanConfig {
  int theta_steps = 100;
  int samples = 1024;
  std::uint64_t seed = 1;
  std::string out;
};

inline void run_equality_scan(const EqualityScanConfig& cfg) {
  if (cfg.theta_steps < 1) throw std::invalid_argument("equality-scan: theta-steps must be >= 1");
  if (cfg.samples < 100) throw std::invalid_argument("equality-scan: need at least 100 samples");

  const ComplexMatrix plus_i = ComplexMatrix::column(
      {Complex(1.0 / std::sqrt(2.0), 0.0), Complex(0.0, 1.0 / std::sqrt(2.0))});
  const ComplexMatrix minus_i = ComplexMatrix::column(
      {Complex(1.0 / std::sqrt(2.0), 0.0), Complex(0.0, -1.0 / std::sqrt(2.0))});

  std::string csv = "theta,max_value,bound,angular_error\n";
  for (int k = 1; k <= cfg.theta_steps; ++k) {
    const double theta = (kPi / 2.0) * static_cast<double>(k) / (cfg.theta_steps + 1);
    const EqualityScan scan =
        equality_window_scan(theta, static_cast<std::size_t>(cfg.samples), cfg.seed);
    const double bound = 0.5 * std::abs(std::sin(2.0 * theta));
    const double err = std::min(ray_distance(scan.argmax, plus_i),
                                ray_distance(scan.argmax, minus_i));
    csv += format6(theta) + ',' + format6(scan.max_value) + ',' + format6(bound) + ',' +
           format6(err) + '\n';
  }
  write_file(cfg.out, csv);
  std::cout << "equality-scan: " << cfg.theta_steps << " rows -> " << cfg.out << "\n";
}

// ---------------------------------------------------------------------------
// doeblin-table

struct DoeblinTableConfig {
  std::string pairs = "0.2:0.5,0.3:0.3,0.4:0.7";
  int dim = 3;
  double tol = 1e-9;
  std::string out;
};

inline void run_doeblin_table(const DoeblinTableConfig& cfg) {
  if (cfg.dim < 2) throw std::invalid_argument("doeblin-table: dim must be at least 2");
  std::vector<std::pair<double, double>> pairs;
  std::stringstream ss(cfg.pairs);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw std::invalid_argument("doeblin-table: pair '" + item + "' is not p:q");
    }
    try {
      pairs.emplace_back(std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
    } catch (const std::exception&) {
      throw std::invalid_argument("doeblin-table: cannot parse pair '" + item + "'");
    }
  }
  if (pairs.empty()) throw std::invalid_argument("doeblin-table: no pairs given");

  const std::size_t d = static_cast<std::size_t>(cfg.dim);
  const Channel delta_seed = dephasing(1.0, d);
  std::string csv = "p,q,delta_A,delta_B,delta_AB\n";
  for (const auto& [p, q] : pairs) {
    const ProductBound bound =
        product_bound_check(dephasing(p, d), dephasing(q, d), delta_seed, delta_seed, cfg.tol);
    csv += format6(p) + ',' + format6(q) + ',' + format6(bound.delta_a) + ',' +
           format6(bound.delta_b) + ',' + format6(bound.delta_ab) + '\n';
  }
  write_file(cfg.out, csv);
  std::cout << "doeblin-table: " << pairs.size() << " rows -> " << cfg.out << "\n";
}

// ---------------------------------------------------------------------------
// certify

struct CertifyConfig {
  std::string counts;
  std::vector<std::string> components;
  double alpha = 0.05;
  std::optional<double> dt;
  std::optional<double> target;
  std::optional<double> initial_distance;
  bool exclusive = false;
  bool exhaustive = false;
  std::string out;
};

inline void run_certify(const CertifyConfig& cfg) {
  nlohmann::json doc;
  std::vector<std::string> warnings;
  double eps = 0.0;

  if (!cfg.components.empty()) {
    if (!cfg.counts.empty()) {
      throw std::invalid_argument("certify: give either --counts or --component, not both");
    }
    double product = 1.0;
    double alpha_total = 0.0;
    bool have_alpha = true;
    nlohmann::json parts = nlohmann::json::array();
    std::string all_bytes;
    for (const auto& path : cfg.components) {
      const std::string bytes = read_file(path);
      all_bytes += bytes;
      nlohmann::json part;
      try {
        part = nlohmann::json::parse(bytes);
      } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("certify: component '" + path + "' is not JSON: " + e.what());
      }
      if (!part.contains("epsilon_hat") || !part["epsilon_hat"].is_number()) {
        throw std::invalid_argument("certify: component '" + path + "' lacks epsilon_hat");
      }
      const double eps_i = part["epsilon_hat"].get<double>();
      if (eps_i < 0.0 || eps_i > 1.0) {
        throw std::invalid_argument("certify: component '" + path + "' has epsilon_hat outside [0,1]");
      }
      product *= eps_i;
      if (part.contains("alpha") && part["alpha"].is_number()) {
        alpha_total += part["alpha"].get<double>();
      } else {
        have_alpha = false;
      }
      parts.push_back({{"path", path}, {"epsilon_hat", eps_i}});
    }
    eps = product;
    doc["epsilon_hat"] = eps;
    doc["components"] = parts;
    if (have_alpha) doc["alpha"] = alpha_total;  // union bound over components
    doc["input_sha"] = sha256_hex(all_bytes);
  } else {
    if (cfg.counts.empty()) throw std::invalid_argument("certify: --counts is required");
    const std::string bytes = read_file(cfg.counts);
    std::istringstream stream(bytes);
    const CountTable table = CountTable::from_csv(stream);
    table.validate(cfg.exclusive, cfg.exhaustive);
    const MixingCertificate cert = epsilon_hat(table, cfg.alpha, cfg.counts);
    eps = cert.epsilon_hat;
    doc["epsilon_hat"] = cert.epsilon_hat;
    doc["alpha"] = cert.alpha;
    doc["alpha_prime"] = cert.alpha_prime;
    doc["per_outcome_lower"] = cert.per_outcome_lower;
    doc["outcomes"] = table.outcomes;
    doc["stencils"] = table.stencils;
    doc["input_sha"] = sha256_hex(bytes);
    doc["provenance"] = cert.provenance;
    if (cert.clamped) warnings.push_back("clamped-epsilon");
  }

  if (eps <= 0.0) warnings.push_back("vacuous-certificate");

  if (cfg.dt) {
    doc["dt"] = *cfg.dt;
    const double gamma = rate_from_epsilon(eps, *cfg.dt);
    if (std::isfinite(gamma)) {
      doc["gamma_hat"] = gamma;
    } else {
      doc["gamma_hat"] = "infinite";
    }
  }
  if (cfg.target || cfg.initial_distance) {
    if (!cfg.target || !cfg.initial_distance) {
      throw std::invalid_argument("certify: --target and --initial-distance must be given together");
    }
    MixingCertificate composed;
    composed.epsilon_hat = eps;
    doc["target"] = *cfg.target;
    doc["initial_distance"] = *cfg.initial_distance;
    const std::optional<long long> steps = step_bound(composed, *cfg.target, *cfg.initial_distance);
    if (steps) {
      doc["step_bound"] = *steps;
    } else {
      doc["step_bound"] = "no-certificate";
    }
  }
  if (!warnings.empty()) doc["warnings"] = warnings;

  write_file(cfg.out, doc.dump(2) + "\n");
  std::cout << "certify: epsilon_hat = " << format6(eps) << " -> " << cfg.out << "\n";
}

// ---------------------------------------------------------------------------
// lindblad-sweep

struct LindbladSweepConfig {
  std::string family = "depolarizing";
  double kappa = 1.0;
  std::string dts = "0.2,0.1,0.05,0.025";
  double t_horizon = 1.0;
  std::string mode = "exact";
  double tol = 1e-11;
  std::string out;
};

inline void run_lindblad_sweep(const LindbladSweepConfig& cfg) {
  const std::vector<double> dts = parse_double_list(cfg.dts, "lindblad-sweep dts");

  StepMode mode;
  if (cfg.mode == "exact") {
    mode = StepMode::exact;
  } else if (cfg.mode == "first-order") {
    mode = StepMode::first_order;
  } else {
    throw std::invalid_argument("lindblad-sweep: mode must be 'exact' or 'first-order'");
  }

  std::string seed_label;
  std::vector<LimitSweepRow> rows;
  if (cfg.family == "depolarizing") {
    const GKLSGenerator gen = depolarizing_generator(cfg.kappa);
    ComplexMatrix tau = ComplexMatrix::identity(2) * 0.5;
    rows = limit_sweep(gen, reset_channel(tau), dts, cfg.t_horizon, mode, cfg.tol);
    seed_label = "reset(I/2)";  // unique stationary state
  } else if (cfg.family == "dephasing") {
    const GKLSGenerator gen = dephasing_generator(cfg.kappa);
    rows = limit_sweep(gen, dephasing(1.0, 2), dts, cfg.t_horizon, mode, cfg.tol);
    seed_label = "delta (full dephasing)";  // stationary state not unique
  } else {
    throw std::invalid_argument("lindblad-sweep: unknown family '" + cfg.family + "'");
  }

  std::string csv = "dt,epsilon,gamma,embed_error\n";
  for (const auto& row : rows) {
    csv += format6(row.dt) + ',' + format6(row.epsilon) + ',' + format6(row.gamma) + ',' +
           format6(row.embed_error) + '\n';
  }
  write_file(cfg.out, csv);
  std::cout << "lindblad-sweep: " << rows.size() << " rows -> " << cfg.out << " (seed "
            << seed_label << ", embed-error log-log slope " << format6(embed_error_slope(rows))
            << ")\n";
}

// ---------------------------------------------------------------------------
// diamond-check

struct DiamondCheckConfig {
  std::string preset = "identity";
  int restarts = 32;
  std::uint64_t seed = 1;
  std::string out;
};

inline void run_diamond_check(const DiamondCheckConfig& cfg) {
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  const ComplexMatrix hadamard{{inv_sqrt2, inv_sqrt2}, {inv_sqrt2, -inv_sqrt2}};

  std::optional<DiamondReport> report;
  if (cfg.preset == "identity") {
    report = diamond_theorem_check(dephasing(0.3, 2), dephasing(0.6, 2), identity_channel(4),
                                   dephasing(1.0, 2), dephasing(1.0, 2), cfg.restarts, cfg.seed);
  } else if (cfg.preset == "swap-rank-one") {
    ComplexMatrix ground(2, 2);
    ground(0, 0) = 1.0;
    const Channel reset0 = reset_channel(ground);
    report = diamond_theorem_check(reset0, reset0, unitary_channel(swap_matrix(2)), reset0, reset0,
                                   cfg.restarts, cfg.seed);
  } else if (cfg.preset == "dephasing-zz") {
    // X-basis dephasing on A so the coupling does not commute with it.
    const Channel phi_a = conjugate_channel(dephasing(0.3, 2), hadamard);
    const Channel seed_a = conjugate_channel(dephasing(1.0, 2), hadamard);
    report = diamond_theorem_check(phi_a, dephasing(0.5, 2), zz_coupling(kPi / 4.0), seed_a,
                                   dephasing(1.0, 2), cfg.restarts, cfg.seed);
  } else {
    throw std::invalid_argument("diamond-check: unknown preset '" + cfg.preset + "'");
  }

  nlohmann::json doc;
  doc["preset"] = cfg.preset;
  doc["restarts"] = cfg.restarts;
  doc["seed"] = cfg.seed;
  doc["delta_a"] = report->delta_a;
  doc["delta_b"] = report->delta_b;
  doc["theorem_rhs"] = report->theorem_rhs;
  doc["lower"] = report->lower;
  doc["upper"] = report->upper;
  doc["verdict"] = to_string(report->verdict);
  doc["witness_value"] = report->witness_value;
  if (report->verdict == Verdict::violated) {
    nlohmann::json witness = nlohmann::json::array();
    for (std::size_t i = 0; i < report->witness.rows(); ++i) {
      witness.push_back({report->witness(i, 0).real(), report->witness(i, 0).imag()});
    }
    doc["witness"] = witness;
  }

  write_file(cfg.out, doc.dump(2) + "\n");
  std::cout << "diamond-check: preset " << cfg.preset << " verdict " << to_string(report->verdict)
            << " (lower " << format6(report->lower) << ", upper " << format6(report->upper)
            << ", rhs " << format6(report->theorem_rhs) << ") -> " << cfg.out << "\n";
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv) {
  CLI::App app{"order-effect functionals, Doeblin minorization, and mixing certificates"};
  app.require_subcommand(1);

  OrderSweepConfig sweep_cfg;
  auto* sweep = app.add_subcommand("order-sweep", "ZZ-coupled order-effect sweep CSV");
  sweep->add_option("--gamma-steps", sweep_cfg.gamma_steps, "number of coupling strengths");
  sweep->add_option("--ab-steps", sweep_cfg.ab_steps, "projection grid size per axis");
  sweep->add_option("--gamma-max", sweep_cfg.gamma_max, "largest coupling angle");
  sweep->add_option("--seed", sweep_cfg.seed, "RNG seed");
  sweep->add_option("--workers", sweep_cfg.workers, "parallel workers");
  sweep->add_option("--out", sweep_cfg.out, "output CSV path")->required();
  sweep->callback([&] { run_order_sweep(sweep_cfg); });

  EqualityScanConfig eq_cfg;
  auto* eq = app.add_subcommand("equality-scan", "commutator equality-window scan CSV");
  eq->add_option("--theta-steps", eq_cfg.theta_steps, "number of theta values");
  eq->add_option("--samples", eq_cfg.samples, "scan samples per theta");
  eq->add_option("--seed", eq_cfg.seed, "RNG seed");
  eq->add_option("--out", eq_cfg.out, "output CSV path")->required();
  eq->callback([&] { run_equality_scan(eq_cfg); });

  DoeblinTableConfig table_cfg;
  auto* table = app.add_subcommand("doeblin-table", "product Doeblin bound table CSV");
  table->add_option("--pairs", table_cfg.pairs, "comma list of p:q dephasing pairs");
  table->add_option("--dim", table_cfg.dim, "local dimension");
  table->add_option("--tol", table_cfg.tol, "bisection tolerance");
  table->add_option("--out", table_cfg.out, "output CSV path")->required();
  table->callback([&] { run_doeblin_table(table_cfg); });

  CertifyConfig cert_cfg;
  double dt_value = 0.0, target_value = 0.0, dist_value = 0.0;
  auto* cert = app.add_subcommand("certify", "counts-to-certificate JSON");
  cert->add_option("--counts", cert_cfg.counts, "counts CSV path");
  cert->add_option("--component", cert_cfg.components,
                   "component certificate JSON (repeatable; composes by product)");
  cert->add_option("--alpha", cert_cfg.alpha, "total failure probability");
  auto* dt_opt = cert->add_option("--dt", dt_value, "step size for the rate");
  auto* target_opt = cert->add_option("--target", target_value, "target distance");
  auto* dist_opt = cert->add_option("--initial-distance", dist_value, "initial distance");
  cert->add_flag("--exclusive", cert_cfg.exclusive, "outcomes may not over-count trials");
  cert->add_flag("--exhaustive", cert_cfg.exhaustive, "outcomes must exhaust trials");
  cert->add_option("--out", cert_cfg.out, "output JSON path")->required();
  cert->callback([&] {
    if (dt_opt->count() > 0) cert_cfg.dt = dt_value;
    if (target_opt->count() > 0) cert_cfg.target = target_value;
    if (dist_opt->count() > 0) cert_cfg.initial_distance = dist_value;
    run_certify(cert_cfg);
  });

  LindbladSweepConfig lind_cfg;
  auto* lind = app.add_subcommand("lindblad-sweep", "monitored Lindblad limit sweep CSV");
  lind->add_option("--family", lind_cfg.family, "generator family (depolarizing|dephasing)");
  lind->add_option("--kappa", lind_cfg.kappa, "generator rate");
  lind->add_option("--dts", lind_cfg.dts, "comma list of step sizes");
  lind->add_option("--t", lind_cfg.t_horizon, "time horizon for the embedding error");
  lind->add_option("--mode", lind_cfg.mode, "step mode (exact|first-order)");
  lind->add_option("--tol", lind_cfg.tol, "Doeblin bisection tolerance");
  lind->add_option("--out", lind_cfg.out, "output CSV path")->required();
  lind->callback([&] { run_lindblad_sweep(lind_cfg); });

  DiamondCheckConfig diamond_cfg;
  auto* diamond = app.add_subcommand("diamond-check", "diamond-norm theorem harness JSON");
  diamond->add_option("--preset", diamond_cfg.preset,
                      "instance preset (identity|swap-rank-one|dephasing-zz)");
  diamond->add_option("--restarts", diamond_cfg.restarts, "ascent restarts");
  diamond->add_option("--seed", diamond_cfg.seed, "RNG seed");
  diamond->add_option("--out", diamond_cfg.out, "output JSON path")->required();
  diamond->callback([&] { run_diamond_check(diamond_cfg); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

inline int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace qmix::cli
