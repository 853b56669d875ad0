// Command-line front end: scenario runs from TOML configs plus quick modes
// for channel statistics, key rates, entanglement, relay swapping and
// non-Gaussian pipelines.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "cvsat/errors.hpp"
#include "cvsat/qkd.hpp"
#include "cvsat/scenario.hpp"

namespace {

using namespace cvsat;

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitPhysics = 4;

std::string fmt9(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.9g", v);
  return buffer;
}

struct ChannelArgs {
  double sigma_b = 0.7;
  double beta = 1.0;
  double spot_w = 0.8;
  double offset_d = 0.0;
  int bins = 200;
  uint64_t seed = 1;
  int samples = 0;
  std::string out_file;
};

int run_channel(const ChannelArgs& args) {
  BeamWanderParams wander{args.sigma_b, args.beta, args.spot_w, args.offset_d};
  FadingDistribution dist = FadingDistribution::parametric(wander);
  WeibullFadingParams params = *dist.weibull();

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!args.out_file.empty()) {
    file.open(args.out_file);
    if (!file) {
      throw ConfigError("cannot open output file '" + args.out_file + "'");
    }
    out = &file;
  }
  *out << "# meta: version=" << kVersion << " gamma=" << fmt9(params.gamma)
       << " S=" << fmt9(params.scale_s) << " eta0=" << fmt9(params.eta0)
       << " mean_loss_db=" << fmt9(mean_fading_loss_db(dist)) << "\n";
  if (args.samples > 0) {
    std::vector<double> samples =
        sample_transmission(args.seed, args.samples, wander);
    *out << "eta\n";
    for (double eta : samples) {
      *out << fmt9(eta) << "\n";
    }
    return 0;
  }
  FadingDistribution::Grid grid = dist.grid(args.bins);
  *out << "eta,pdf\n";
  for (std::size_t i = 0; i < grid.eta.size(); ++i) {
    *out << fmt9(grid.eta[i]) << "," << fmt9(grid.pdf[i]) << "\n";
  }
  return 0;
}

struct ProtocolArgs {
  std::string state = "coherent";
  std::string detection = "homodyne";
  std::string reconciliation = "reverse";
  double efficiency = 1.0;

  ProtocolConfig build() const {
    ProtocolConfig protocol;
    if (state == "coherent") {
      protocol.state_type = StateType::coherent;
    } else if (state == "squeezed") {
      protocol.state_type = StateType::squeezed;
    } else {
      throw ConfigError("unknown state type '" + state + "'");
    }
    if (detection == "homodyne") {
      protocol.detection = Detection::homodyne;
    } else if (detection == "heterodyne") {
      protocol.detection = Detection::heterodyne;
    } else {
      throw ConfigError("unknown detection '" + detection + "'");
    }
    if (reconciliation == "direct") {
      protocol.reconciliation = Reconciliation::direct;
    } else if (reconciliation == "reverse") {
      protocol.reconciliation = Reconciliation::reverse;
    } else {
      throw ConfigError("unknown reconciliation '" + reconciliation + "'");
    }
    protocol.efficiency = efficiency;
    return protocol;
  }
};

void add_protocol_flags(CLI::App* cmd, ProtocolArgs& args) {
  cmd->add_option("--state", args.state, "coherent | squeezed");
  cmd->add_option("--detection", args.detection, "homodyne | heterodyne");
  cmd->add_option("--reconciliation", args.reconciliation, "direct | reverse");
  cmd->add_option("--efficiency", args.efficiency, "reconciliation efficiency in (0, 1]");
}

std::optional<FadingDistribution> fading_from(double sigma_b, double beta,
                                              double spot_w, double offset_d) {
  if (sigma_b <= 0.0) {
    return std::nullopt;
  }
  return FadingDistribution::parametric(
      BeamWanderParams{sigma_b, beta, spot_w, offset_d});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Satellite CV quantum-communication simulator"};
  app.require_subcommand(1);

  // simulate
  std::string config_path;
  std::string out_dir;
  std::string format;
  int64_t seed_override = -1;
  int threads = 0;
  auto* simulate = app.add_subcommand("simulate", "run a scenario config");
  simulate->add_option("config", config_path, "TOML scenario file")->required();
  simulate->add_option("--out", out_dir, "output directory");
  simulate->add_option("--format", format, "csv | json");
  simulate->add_option("--seed", seed_override, "override scenario.seed");
  simulate->add_option("--threads", threads, "worker thread count");

  // channel
  ChannelArgs channel_args;
  auto* channel = app.add_subcommand("channel", "emit fading pdf / loss tables");
  channel->add_option("--sigma-b", channel_args.sigma_b, "beam-wandering std dev");
  channel->add_option("--beta", channel_args.beta, "receiver aperture radius");
  channel->add_option("--spot-w", channel_args.spot_w, "beam-spot radius");
  channel->add_option("--offset-d", channel_args.offset_d, "wander-center offset");
  channel->add_option("--bins", channel_args.bins, "pdf table bins");
  channel->add_option("--samples", channel_args.samples,
                      "emit Monte Carlo samples instead of the pdf table");
  channel->add_option("--seed", channel_args.seed, "sampling seed");
  channel->add_option("--out", channel_args.out_file, "output file (default stdout)");

  // keyrate
  double kr_r = 0.5;
  double kr_tau = 1.0;
  double kr_omega = 1.0;
  double kr_sigma_b = 0.0;
  double kr_beta = 1.0;
  double kr_spot = 1.0;
  double kr_offset = 0.0;
  double kr_threshold = 0.0;
  std::string kr_scenario = "per_eta";
  ProtocolArgs kr_protocol;
  auto* keyrate = app.add_subcommand("keyrate", "asymptotic key rate");
  keyrate->add_option("--r", kr_r, "TMSV squeezing parameter");
  keyrate->add_option("--tau", kr_tau, "fixed channel transmissivity");
  keyrate->add_option("--omega", kr_omega, "channel noise variance");
  keyrate->add_option("--sigma-b", kr_sigma_b,
                      "beam-wandering std dev (enables fading)");
  keyrate->add_option("--beta", kr_beta, "receiver aperture radius");
  keyrate->add_option("--spot-w", kr_spot, "beam-spot radius");
  keyrate->add_option("--offset-d", kr_offset, "wander-center offset");
  keyrate->add_option("--scenario", kr_scenario,
                      "per_eta | ensemble | postselected");
  keyrate->add_option("--eta-threshold", kr_threshold, "post-selection threshold");
  add_protocol_flags(keyrate, kr_protocol);

  // entangle
  double en_r = 0.5;
  double en_tau = 1.0;
  double en_omega = 1.0;
  double en_sigma_b = 0.0;
  double en_beta = 1.0;
  double en_spot = 1.0;
  double en_offset = 0.0;
  std::string en_measure = "log_negativity";
  std::string en_scenario = "per_eta";
  auto* entangle = app.add_subcommand("entangle", "delivered entanglement");
  entangle->add_option("--r", en_r, "TMSV squeezing parameter");
  entangle->add_option("--tau", en_tau, "fixed channel transmissivity");
  entangle->add_option("--omega", en_omega, "channel noise variance");
  entangle->add_option("--sigma-b", en_sigma_b,
                       "beam-wandering std dev (enables fading)");
  entangle->add_option("--beta", en_beta, "receiver aperture radius");
  entangle->add_option("--spot-w", en_spot, "beam-spot radius");
  entangle->add_option("--offset-d", en_offset, "wander-center offset");
  entangle->add_option("--measure", en_measure, "log_negativity | entropy");
  entangle->add_option("--scenario", en_scenario, "per_eta | ensemble");

  // swap
  SwapConfig swap_config;
  auto* swap = app.add_subcommand("swap", "relay entanglement swapping");
  swap->add_option("--r-a", swap_config.r_a, "Alice source squeezing");
  swap->add_option("--r-b", swap_config.r_b, "Bob source squeezing");
  swap->add_option("--tau-a", swap_config.tau_a, "Alice uplink transmissivity");
  swap->add_option("--tau-b", swap_config.tau_b, "Bob uplink transmissivity");
  swap->add_option("--omega", swap_config.noise_variance, "uplink noise variance");

  // nongauss
  double ng_r = 0.3;
  int ng_cutoff = 12;
  std::string ng_op = "subtract";
  std::string ng_sides = "both";
  double ng_bs_tau = 0.9;
  int ng_k = 1;
  double ng_eta = 0.9;
  ProtocolArgs ng_protocol;
  auto* nongauss = app.add_subcommand("nongauss",
                                      "heralded non-Gaussian key rate");
  nongauss->add_option("--r", ng_r, "TMSV squeezing parameter");
  nongauss->add_option("--cutoff", ng_cutoff, "Fock cutoff");
  nongauss->add_option("--op", ng_op, "subtract | add | replace");
  nongauss->add_option("--sides", ng_sides, "mode1 | mode2 | both");
  nongauss->add_option("--bs-tau", ng_bs_tau, "herald beam-splitter transmissivity");
  nongauss->add_option("--k", ng_k, "herald photon count");
  nongauss->add_option("--eta", ng_eta, "channel transmission coefficient");
  add_protocol_flags(nongauss, ng_protocol);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (simulate->parsed()) {
      if (threads > 0) {
        parallel::set_threads(threads);
      }
      toml::Value config = toml::parse_file(config_path);
      if (seed_override >= 0) {
        config.set("scenario.seed", toml::Value::integer(seed_override));
      }
      RunReport report = run_scenario(config);
      std::string fmt = !format.empty()
                            ? format
                            : config.get_string("output.format", "csv");
      if (out_dir.empty()) {
        out_dir = config.get_string("output.directory", "");
      }
      if (out_dir.empty()) {
        std::cout << (fmt == "json" ? report.to_json() : report.to_csv());
      } else {
        std::string path = write_report(report, out_dir, fmt);
        std::cerr << "wrote " << path << std::endl;
      }
      return 0;
    }
    if (channel->parsed()) {
      return run_channel(channel_args);
    }
    if (keyrate->parsed()) {
      ProtocolConfig protocol = kr_protocol.build();
      RateResult rate;
      if (kr_sigma_b > 0.0) {
        auto dist = fading_from(kr_sigma_b, kr_beta, kr_spot, kr_offset);
        FadingScenario scenario = kr_scenario == "ensemble"
                                      ? FadingScenario::ensemble
                                  : kr_scenario == "postselected"
                                      ? FadingScenario::postselected
                                      : FadingScenario::per_eta;
        rate = keyrate_fading(std::cosh(2.0 * kr_r), *dist, kr_omega, protocol,
                              scenario, kr_threshold);
        rate.per_eta_curve.reset();  // keep quick-mode output small
      } else {
        rate = keyrate_fixed(std::cosh(2.0 * kr_r), {kr_tau, kr_omega},
                             protocol);
      }
      std::cout << rate.to_json() << std::endl;
      return 0;
    }
    if (entangle->parsed()) {
      EntanglementMeasure measure = en_measure == "entropy"
                                        ? EntanglementMeasure::entropy_pure
                                        : EntanglementMeasure::log_negativity;
      double value = 0.0;
      if (en_sigma_b > 0.0) {
        auto dist = fading_from(en_sigma_b, en_beta, en_spot, en_offset);
        FadingScenario scenario = en_scenario == "ensemble"
                                      ? FadingScenario::ensemble
                                      : FadingScenario::per_eta;
        value = entanglement_fading(std::cosh(2.0 * en_r), *dist, en_omega,
                                    measure, scenario);
      } else {
        CovarianceState cm = tmsv_single_mode_transfer(std::cosh(2.0 * en_r),
                                                       en_tau, en_omega);
        value = measure == EntanglementMeasure::log_negativity
                    ? log_negativity_gaussian(cm)
                    : von_neumann_entropy(partial_trace(cm, {0}));
      }
      std::cout << "{\"entanglement\":" << fmt9(value) << "}" << std::endl;
      return 0;
    }
    if (swap->parsed()) {
      CovarianceState out = entanglement_swap(swap_config);
      std::cout << "{\"log_negativity\":"
                << fmt9(log_negativity_gaussian(out))
                << ",\"state\":" << cov_to_json(out) << "}" << std::endl;
      return 0;
    }
    if (nongauss->parsed()) {
      NonGaussSource source;
      source.r = ng_r;
      source.cutoff = ng_cutoff;
      if (ng_op == "subtract") {
        source.op = NonGaussianKind::subtract;
      } else if (ng_op == "add") {
        source.op = NonGaussianKind::add;
      } else if (ng_op == "replace") {
        source.op = NonGaussianKind::replace;
      } else if (ng_op != "none") {
        throw ConfigError("unknown non-Gaussian operation '" + ng_op + "'");
      }
      source.sides = ng_sides == "mode1" ? NonGaussianSides::mode1
                     : ng_sides == "mode2" ? NonGaussianSides::mode2
                                           : NonGaussianSides::both;
      source.op_options.bs_tau = ng_bs_tau;
      source.op_options.herald_photons = ng_k;
      RateResult rate = nongauss_keyrate(source,
                                         FadingDistribution::point_mass(ng_eta),
                                         1.0, ng_protocol.build());
      rate.per_eta_curve.reset();
      std::cout << rate.to_json() << std::endl;
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return kExitConfig;
  } catch (const PhysicsError& e) {
    std::cerr << "physics error: " << e.what() << std::endl;
    return kExitPhysics;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << std::endl;
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitNumeric;
  }
  return 0;
}
