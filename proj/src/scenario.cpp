#include "cvsat/scenario.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "cvsat/errors.hpp"
#include "cvsat/parallel.hpp"
#include "cvsat/qkd.hpp"

namespace cvsat {

namespace {

enum class Scheme { uplink, downlink, reflect, dual_downlink, swap_relay };

Scheme parse_scheme(const std::string& name) {
  if (name == "uplink") return Scheme::uplink;
  if (name == "downlink") return Scheme::downlink;
  if (name == "reflect") return Scheme::reflect;
  if (name == "dual_downlink") return Scheme::dual_downlink;
  if (name == "swap_relay") return Scheme::swap_relay;
  throw ConfigError("unknown scheme '" + name + "'");
}

StateType parse_state(const std::string& name) {
  if (name == "coherent") return StateType::coherent;
  if (name == "squeezed") return StateType::squeezed;
  throw ConfigError("unknown state type '" + name + "'");
}

Detection parse_detection(const std::string& name) {
  if (name == "homodyne") return Detection::homodyne;
  if (name == "heterodyne") return Detection::heterodyne;
  throw ConfigError("unknown detection '" + name + "'");
}

Reconciliation parse_reconciliation(const std::string& name) {
  if (name == "direct") return Reconciliation::direct;
  if (name == "reverse") return Reconciliation::reverse;
  throw ConfigError("unknown reconciliation '" + name + "'");
}

FadingScenario parse_fading_scenario(const std::string& name) {
  if (name == "per_eta") return FadingScenario::per_eta;
  if (name == "ensemble") return FadingScenario::ensemble;
  if (name == "postselected") return FadingScenario::postselected;
  throw ConfigError("unknown channel-knowledge scenario '" + name + "'");
}

NonGaussianKind parse_nongauss_kind(const std::string& name) {
  if (name == "subtract") return NonGaussianKind::subtract;
  if (name == "add") return NonGaussianKind::add;
  if (name == "replace") return NonGaussianKind::replace;
  throw ConfigError("unknown non-Gaussian operation '" + name + "'");
}

NonGaussianSides parse_sides(const std::string& name) {
  if (name == "mode1") return NonGaussianSides::mode1;
  if (name == "mode2") return NonGaussianSides::mode2;
  if (name == "both") return NonGaussianSides::both;
  throw ConfigError("unknown non-Gaussian sides '" + name + "'");
}

/// A channel leg resolved to a transmission-coefficient law.
FadingDistribution leg_distribution(const toml::Value& config,
                                    const std::string& table) {
  std::string kind = config.get_string(table + ".kind");
  try {
    if (kind == "beam_wander") {
      BeamWanderParams wander{config.get_double(table + ".sigma_b"),
                              config.get_double(table + ".beta"),
                              config.get_double(table + ".spot_w"),
                              config.get_double(table + ".offset_d", 0.0)};
      wander.validate();
      return FadingDistribution::parametric(wander);
    }
    if (kind == "diffraction") {
      DownlinkParams down{config.get_double(table + ".wavelength"),
                          config.get_double(table + ".telescope_d"),
                          config.get_double(table + ".range"),
                          config.get_double(table + ".aperture")};
      down.validate();
      return FadingDistribution::point_mass(downlink_transmissivity(down));
    }
    if (kind == "fixed") {
      double tau = config.get_double(table + ".transmissivity");
      if (!(tau > 0.0) || tau > 1.0) {
        throw ConfigError("fixed transmissivity must lie in (0, 1]");
      }
      return FadingDistribution::point_mass(std::sqrt(tau));
    }
    if (kind == "tabulated") {
      std::string file = config.get_string(table + ".file");
      std::ifstream in(file);
      if (!in) {
        throw ConfigError("cannot open tabulated channel file '" + file + "'");
      }
      return FadingDistribution::from_csv(in);
    }
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("invalid channel '") + table + "': " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid channel '") + table + "': " + e.what());
  }
  throw ConfigError("unknown channel kind '" + kind + "' in [" + table + "]");
}

struct ScenarioPlan {
  Scheme scheme = Scheme::uplink;
  uint64_t seed = 0;
  int bins = 200;
  double omega = 1.0;
  double v = 1.0;  // TMSV quadrature variance
  std::optional<NonGaussSource> nongauss;
  ProtocolConfig protocol;
  bool want_keyrate = true;
  std::optional<EntanglementMeasure> measure;
  FadingScenario knowledge = FadingScenario::per_eta;
  double eta_threshold = 0.0;
  bool optimize_th = false;
  std::optional<FadingDistribution> primary;
  std::optional<FadingDistribution> secondary;
  double fixed_tau_factor = 1.0;
};

ScenarioPlan build_plan(const toml::Value& config) {
  ScenarioPlan plan;
  plan.scheme = parse_scheme(config.get_string("scenario.scheme"));
  plan.seed = static_cast<uint64_t>(config.get_int("scenario.seed", 0));
  plan.bins = static_cast<int>(config.get_int("scenario.bins", 200));
  if (plan.bins < 1 || plan.bins > 100000) {
    throw ConfigError("scenario.bins must lie in [1, 100000]");
  }
  plan.omega = config.get_double("channel.omega", 1.0);
  if (plan.omega < 1.0) {
    throw ConfigError("channel.omega must be >= 1");
  }

  double r = config.get_double("source.r");
  if (!(r >= 0.0)) {
    throw ConfigError("source.r must be >= 0");
  }
  plan.v = std::cosh(2.0 * r);
  std::string op = config.get_string("source.nongauss", "none");
  if (op != "none") {
    NonGaussSource src;
    src.r = r;
    src.cutoff = static_cast<int>(config.get_int("source.cutoff", 12));
    src.op = parse_nongauss_kind(op);
    src.sides = parse_sides(config.get_string("source.sides", "both"));
    src.op_options.bs_tau = config.get_double("source.bs_tau", 0.9);
    src.op_options.herald_photons =
        static_cast<int>(config.get_int("source.herald_k", 1));
    src.op_options.on_off_detector =
        config.get_bool("source.on_off_detector", false);
    src.op_options.ideal_ladder = config.get_bool("source.ideal_ladder", false);
    if (src.cutoff < 2 || src.cutoff > 24) {
      throw ConfigError("source.cutoff must lie in [2, 24]");
    }
    plan.nongauss = src;
  }

  if (config.has("protocol")) {
    plan.protocol.state_type =
        parse_state(config.get_string("protocol.state", "coherent"));
    plan.protocol.detection =
        parse_detection(config.get_string("protocol.detection", "homodyne"));
    plan.protocol.reconciliation = parse_reconciliation(
        config.get_string("protocol.reconciliation", "reverse"));
    plan.protocol.efficiency = config.get_double("protocol.efficiency", 1.0);
    if (!(plan.protocol.efficiency > 0.0) || plan.protocol.efficiency > 1.0) {
      throw ConfigError("protocol.efficiency must lie in (0, 1]");
    }
  }

  plan.want_keyrate = config.get_bool("metrics.keyrate", true);
  std::string measure = config.get_string("metrics.entanglement", "none");
  if (measure == "log_negativity") {
    plan.measure = EntanglementMeasure::log_negativity;
  } else if (measure == "entropy") {
    plan.measure = EntanglementMeasure::entropy_pure;
  } else if (measure != "none") {
    throw ConfigError("unknown entanglement measure '" + measure + "'");
  }
  plan.knowledge =
      parse_fading_scenario(config.get_string("metrics.scenario", "per_eta"));
  plan.eta_threshold = config.get_double("metrics.eta_threshold", 0.0);
  plan.optimize_th = config.get_bool("metrics.optimize_threshold", false);

  switch (plan.scheme) {
    case Scheme::uplink:
      plan.primary = leg_distribution(config, "channel.uplink");
      break;
    case Scheme::downlink:
      plan.primary = leg_distribution(config, "channel.downlink");
      break;
    case Scheme::reflect: {
      plan.primary = leg_distribution(config, "channel.uplink");
      FadingDistribution down = leg_distribution(config, "channel.downlink");
      if (down.is_parametric() || down.grid().eta.size() != 1) {
        throw ConfigError(
            "reflect scheme needs a fixed (non-fading) downlink leg");
      }
      double eta_down = down.grid().eta.front();
      plan.fixed_tau_factor = eta_down * eta_down;
      break;
    }
    case Scheme::dual_downlink:
      plan.primary = leg_distribution(config, "channel.downlink1");
      plan.secondary = leg_distribution(config, "channel.downlink2");
      break;
    case Scheme::swap_relay:
      plan.primary = leg_distribution(config, "channel.uplink_a");
      plan.secondary = leg_distribution(config, "channel.uplink_b");
      break;
  }

  if (plan.nongauss && plan.scheme != Scheme::uplink &&
      plan.scheme != Scheme::downlink && plan.scheme != Scheme::reflect) {
    throw ConfigError(
        "non-Gaussian sources are supported on single-channel schemes only");
  }
  if (plan.nongauss && plan.omega != 1.0) {
    throw ConfigError("non-Gaussian pipelines require channel.omega = 1");
  }
  if (plan.scheme == Scheme::swap_relay && plan.want_keyrate) {
    throw ConfigError(
        "swap_relay evaluates entanglement only; relay protocol key rates "
        "are not modeled");
  }
  if (!plan.want_keyrate && !plan.measure) {
    throw ConfigError("no metrics requested");
  }
  return plan;
}

// Two-mode transfer key rate: per bin pair through Eq.-style channel
// composition, or the ensemble covariance matrix.
RateResult keyrate_dual(const ScenarioPlan& plan) {
  const FadingDistribution& d1 = *plan.primary;
  const FadingDistribution& d2 = *plan.secondary;
  if (plan.knowledge == FadingScenario::ensemble) {
    double m1 = d1.mean_eta();
    double m2 = d2.mean_eta();
    double t1 = d1.mean_eta_sq();
    double t2 = d2.mean_eta_sq();
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(4, 4);
    double c = m1 * m2 * std::sqrt(plan.v * plan.v - 1.0);
    cov(0, 0) = cov(1, 1) = t1 * plan.v + (1.0 - t1) * plan.omega;
    cov(2, 2) = cov(3, 3) = t2 * plan.v + (1.0 - t2) * plan.omega;
    cov(0, 2) = cov(2, 0) = c;
    cov(1, 3) = cov(3, 1) = -c;
    RateResult out = keyrate_collective(
        CovarianceState(Eigen::VectorXd::Zero(4), cov), plan.protocol);
    out.scenario = "ensemble";
    out.lower_bound = true;
    return out;
  }
  if (plan.knowledge == FadingScenario::postselected) {
    throw ConfigError("post-selection is supported on single-channel schemes only");
  }
  FadingDistribution::Grid g1 = d1.grid(plan.bins);
  FadingDistribution::Grid g2 = d2.grid(plan.bins);
  std::size_t n1 = g1.eta.size();
  std::size_t n2 = g2.eta.size();
  struct Bin { double info, holevo, unfloored; };
  std::vector<Bin> bins = parallel::map_index<Bin>(n1 * n2, [&](std::size_t k) {
    std::size_t i = k / n2;
    std::size_t j = k % n2;
    CovarianceState cm = tmsv_two_mode_transfer(
        plan.v, g1.eta[i] * g1.eta[i], plan.omega, g2.eta[j] * g2.eta[j],
        plan.omega);
    RateResult r = keyrate_collective(cm, plan.protocol);
    return Bin{r.mutual_info, r.holevo, r.key_rate_unfloored};
  });
  RateResult out;
  double info = 0.0;
  double holevo = 0.0;
  double key = 0.0;
  double key_signed = 0.0;
  for (std::size_t i = 0; i < n1; ++i) {
    for (std::size_t j = 0; j < n2; ++j) {
      double w = g1.pdf[i] * g1.width[i] * g2.pdf[j] * g2.width[j];
      const Bin& b = bins[i * n2 + j];
      info += w * b.info;
      holevo += w * b.holevo;
      key += w * std::max(0.0, b.unfloored);
      key_signed += w * b.unfloored;
    }
  }
  out.mutual_info = info;
  out.holevo = holevo;
  out.key_rate = key;
  out.key_rate_unfloored = key_signed;
  out.scenario = "per_eta";
  return out;
}

double entanglement_swap_fading(const ScenarioPlan& plan) {
  const FadingDistribution& d1 = *plan.primary;
  const FadingDistribution& d2 = *plan.secondary;
  double r = 0.5 * std::acosh(plan.v);
  FadingDistribution::Grid g1 = d1.grid(plan.bins);
  FadingDistribution::Grid g2 = d2.grid(plan.bins);
  std::size_t n1 = g1.eta.size();
  std::size_t n2 = g2.eta.size();
  EntanglementMeasure measure = *plan.measure;
  if (plan.knowledge == FadingScenario::ensemble) {
    // Average the swap output covariance over the bin pairs, then measure
    // the Gaussian component.
    Eigen::MatrixXd mix = Eigen::MatrixXd::Zero(4, 4);
    double total = 0.0;
    for (std::size_t i = 0; i < n1; ++i) {
      for (std::size_t j = 0; j < n2; ++j) {
        double w = g1.pdf[i] * g1.width[i] * g2.pdf[j] * g2.width[j];
        SwapConfig cfg{r, r, g1.eta[i] * g1.eta[i], g2.eta[j] * g2.eta[j],
                       plan.omega};
        mix += w * entanglement_swap(cfg).cov();
        total += w;
      }
    }
    mix /= total;
    CovarianceState avg(Eigen::VectorXd::Zero(4), mix);
    return measure == EntanglementMeasure::log_negativity
               ? log_negativity_gaussian(avg)
               : von_neumann_entropy(partial_trace(avg, {0}));
  }
  std::vector<double> values = parallel::map_index<double>(
      n1 * n2, [&](std::size_t k) {
        std::size_t i = k / n2;
        std::size_t j = k % n2;
        SwapConfig cfg{r, r, g1.eta[i] * g1.eta[i], g2.eta[j] * g2.eta[j],
                       plan.omega};
        CovarianceState out = entanglement_swap(cfg);
        return measure == EntanglementMeasure::log_negativity
                   ? log_negativity_gaussian(out)
                   : von_neumann_entropy(partial_trace(out, {0}));
      });
  double total = 0.0;
  for (std::size_t i = 0; i < n1; ++i) {
    for (std::size_t j = 0; j < n2; ++j) {
      total += g1.pdf[i] * g1.width[i] * g2.pdf[j] * g2.width[j] *
               values[i * n2 + j];
    }
  }
  return total;
}

struct PointResult {
  std::vector<std::pair<std::string, double>> values;
};

PointResult evaluate_point(const ScenarioPlan& plan) {
  PointResult out;
  FadingOptions options;
  options.bins = plan.bins;
  options.fixed_tau_factor = plan.fixed_tau_factor;

  if (plan.primary) {
    out.values.emplace_back("mean_loss_db", mean_fading_loss_db(*plan.primary));
  }
  if (plan.secondary) {
    out.values.emplace_back("mean_loss_db_2",
                            mean_fading_loss_db(*plan.secondary));
  }
  if (plan.fixed_tau_factor != 1.0) {
    out.values.emplace_back("downlink_loss_db",
                            -10.0 * std::log10(plan.fixed_tau_factor));
  }

  if (plan.nongauss) {
    HeraldResult herald = plan.nongauss->prepare();
    out.values.emplace_back("herald_probability", herald.success_probability);
    if (plan.want_keyrate) {
      if (plan.knowledge != FadingScenario::per_eta) {
        throw ConfigError(
            "non-Gaussian key rates are defined for the per_eta scenario");
      }
      RateResult rate = nongauss_keyrate(*plan.nongauss, *plan.primary,
                                         plan.omega, plan.protocol, options);
      out.values.emplace_back("key_rate", rate.key_rate);
      out.values.emplace_back("key_rate_unfloored", rate.key_rate_unfloored);
      out.values.emplace_back("mutual_info", rate.mutual_info);
      out.values.emplace_back("holevo", rate.holevo);
      out.values.emplace_back("selection_probability",
                              rate.selection_probability);
    }
    if (plan.measure) {
      double e = entanglement_fading_fock(*plan.nongauss, *plan.primary,
                                          *plan.measure, plan.knowledge,
                                          options);
      out.values.emplace_back("entanglement", e);
    }
    return out;
  }

  switch (plan.scheme) {
    case Scheme::uplink:
    case Scheme::downlink:
    case Scheme::reflect: {
      if (plan.want_keyrate) {
        RateResult rate;
        double threshold = plan.eta_threshold;
        if (plan.knowledge == FadingScenario::postselected && plan.optimize_th) {
          auto [best, result] = optimize_threshold(plan.v, *plan.primary,
                                                   plan.omega, plan.protocol,
                                                   options);
          threshold = best;
          rate = result;
        } else {
          rate = keyrate_fading(plan.v, *plan.primary, plan.omega,
                                plan.protocol, plan.knowledge, threshold,
                                options);
        }
        out.values.emplace_back("key_rate", rate.key_rate);
        out.values.emplace_back("key_rate_unfloored", rate.key_rate_unfloored);
        out.values.emplace_back("mutual_info", rate.mutual_info);
        out.values.emplace_back("holevo", rate.holevo);
        out.values.emplace_back("selection_probability",
                                rate.selection_probability);
        if (plan.knowledge == FadingScenario::postselected) {
          out.values.emplace_back("eta_threshold", threshold);
        }
      }
      if (plan.measure) {
        double e = entanglement_fading(plan.v, *plan.primary, plan.omega,
                                       *plan.measure, plan.knowledge, options);
        out.values.emplace_back("entanglement", e);
      }
      break;
    }
    case Scheme::dual_downlink: {
      if (plan.want_keyrate) {
        RateResult rate = keyrate_dual(plan);
        out.values.emplace_back("key_rate", rate.key_rate);
        out.values.emplace_back("key_rate_unfloored", rate.key_rate_unfloored);
        out.values.emplace_back("mutual_info", rate.mutual_info);
        out.values.emplace_back("holevo", rate.holevo);
      }
      if (plan.measure) {
        double e = entanglement_fading_dual(plan.v, *plan.primary,
                                            *plan.secondary, plan.omega,
                                            *plan.measure, plan.knowledge,
                                            FadingOptions{plan.bins});
        out.values.emplace_back("entanglement", e);
      }
      break;
    }
    case Scheme::swap_relay: {
      out.values.emplace_back("entanglement", entanglement_swap_fading(plan));
      break;
    }
  }
  return out;
}

std::string format_double(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.9g", v);
  return buffer;
}

}  // namespace

std::string RunReport::to_csv() const {
  std::ostringstream out;
  out << "# meta: version=" << version << " seed=" << seed
      << " scheme=" << scheme;
  if (!sweep_parameter.empty()) {
    out << " sweep=" << sweep_parameter;
  }
  out << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) {
    out << (i ? "," : "") << columns[i];
  }
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i ? "," : "") << format_double(row[i]);
    }
    out << "\n";
  }
  return out.str();
}

std::string RunReport::to_json() const {
  std::ostringstream out;
  out << "{\"version\":\"" << version << "\",\"seed\":" << seed
      << ",\"scheme\":\"" << scheme << "\",\"sweep\":\"" << sweep_parameter
      << "\",\"columns\":[";
  for (std::size_t i = 0; i < columns.size(); ++i) {
    out << (i ? "," : "") << "\"" << columns[i] << "\"";
  }
  out << "],\"rows\":[";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out << (r ? "," : "") << "[";
    for (std::size_t i = 0; i < rows[r].size(); ++i) {
      out << (i ? "," : "") << format_double(rows[r][i]);
    }
    out << "]";
  }
  out << "]}";
  return out.str();
}

RunReport run_scenario(const toml::Value& config) {
  auto started = std::chrono::steady_clock::now();

  std::string sweep_parameter;
  std::vector<double> sweep_values;
  if (config.has("sweep")) {
    sweep_parameter = config.get_string("sweep.parameter");
    sweep_values = config.get_double_array("sweep.values");
    if (sweep_values.empty()) {
      throw ConfigError("sweep.values must not be empty");
    }
  }

  // Validate the base configuration before any evaluation.
  ScenarioPlan base = build_plan(config);

  RunReport report;
  report.seed = base.seed;
  report.scheme = config.get_string("scenario.scheme");
  report.sweep_parameter = sweep_parameter;

  // Bounded parallel map across sweep points; each point is pure given
  // (config, point index) and results land by index. Nested parallel
  // regions inside a point collapse to single-thread teams.
  std::size_t n_points = sweep_values.empty() ? 1 : sweep_values.size();
  std::vector<PointResult> results(n_points);
  parallel::for_each_index(n_points, [&](std::size_t p) {
    ScenarioPlan plan = base;
    if (!sweep_values.empty()) {
      toml::Value point_config = config;
      point_config.set(sweep_parameter, toml::Value::floating(sweep_values[p]));
      plan = build_plan(point_config);
    }
    {
      std::ostringstream progress;
      progress << "point " << (p + 1) << "/" << n_points;
      if (!sweep_values.empty()) {
        progress << " (" << sweep_parameter << " = " << sweep_values[p] << ")";
      }
      progress << "\n";
      std::cerr << progress.str();
    }
    try {
      results[p] = evaluate_point(plan);
    } catch (const PhysicsError&) {
      throw;
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw NumericError("sweep point " + std::to_string(p) + " failed: " +
                         e.what());
    }
    for (const auto& [name, value] : results[p].values) {
      if (!std::isfinite(value)) {
        throw NumericError("non-finite output '" + name + "' at sweep point " +
                           std::to_string(p));
      }
    }
  });

  report.columns.push_back("sweep_index");
  if (!sweep_values.empty()) {
    report.columns.push_back("sweep_value");
  }
  for (const auto& [name, value] : results.front().values) {
    (void)value;
    report.columns.push_back(name);
  }
  for (std::size_t p = 0; p < n_points; ++p) {
    std::vector<double> row;
    row.push_back(static_cast<double>(p));
    if (!sweep_values.empty()) {
      row.push_back(sweep_values[p]);
    }
    if (results[p].values.size() + (sweep_values.empty() ? 1 : 2) !=
        report.columns.size()) {
      throw NumericError("inconsistent output columns across sweep points");
    }
    for (const auto& [name, value] : results[p].values) {
      (void)name;
      row.push_back(value);
    }
    report.rows.push_back(std::move(row));
  }

  report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
          .count();
  std::cerr << "completed " << n_points << " point(s) in "
            << format_double(report.elapsed_seconds) << " s" << std::endl;
  return report;
}

RunReport run_scenario_file(const std::string& path) {
  return run_scenario(toml::parse_file(path));
}

std::string write_report(const RunReport& report, const std::string& directory,
                         const std::string& format) {
  if (format != "csv" && format != "json") {
    throw ConfigError("output format must be 'csv' or 'json'");
  }
  std::filesystem::create_directories(directory);
  std::filesystem::path path =
      std::filesystem::path(directory) / ("report." + format);
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("cannot write report to '" + path.string() + "'");
  }
  out << (format == "csv" ? report.to_csv() : report.to_json());
  return path.string();
}

}  // namespace cvsat
