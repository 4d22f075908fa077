#pragma once

// Command-line front end: simulate, analyze, optimize, markov, botgame, serve.
// Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "seesaw/efficiency.hpp"
#include "seesaw/errors.hpp"
#include "seesaw/format.hpp"
#include "seesaw/game.hpp"
#include "seesaw/manifest.hpp"
#include "seesaw/market.hpp"
#include "seesaw/markov.hpp"
#include "seesaw/server.hpp"
#include "seesaw/service.hpp"
#include "seesaw/stats.hpp"
#include "seesaw/version.hpp"

namespace seesaw::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// SEESAW_OUT_DIR, or the working directory.
inline std::string default_output_dir() {
  if (const char* dir = std::getenv("SEESAW_OUT_DIR")) return dir;
  return ".";
}

namespace detail {

class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

  const fs::path& dir() const { return dir_; }

  std::ofstream open(const std::string& name) {
    const auto path = dir_ / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ResourceError("cannot write '" + path.string() + "'");
    paths_.push_back(path.string());
    return out;
  }

  void json(const std::string& name, const nlohmann::ordered_json& j) { open(name) << j.dump(2) << '\n'; }

  const std::vector<std::string>& paths() const { return paths_; }

 private:
  fs::path dir_;
  std::vector<std::string> paths_;
};

inline std::map<std::string, std::string> collect_params(const CLI::App& sub) {
  std::map<std::string, std::string> params;
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_name() == "--help" || opt->get_name().empty()) continue;
    std::string key = opt->get_name();
    while (!key.empty() && key.front() == '-') key.erase(key.begin());
    const auto& results = opt->results();
    if (results.empty()) {
      params[key] = opt->get_default_str();
    } else {
      std::string joined;
      for (std::size_t i = 0; i < results.size(); ++i) joined += (i ? "," : "") + results[i];
      params[key] = joined;
    }
  }
  return params;
}

inline nlohmann::ordered_json to_json(const TailFit& fit) {
  nlohmann::ordered_json j;
  j["xi"] = fit.xi;
  j["density_exponent"] = fit.density_exponent;
  j["tail_fraction"] = fit.tail_fraction;
  j["n_tail"] = fit.n_tail;
  j["standard_error"] = fit.standard_error;
  j["threshold"] = fit.threshold;
  return j;
}

}  // namespace detail

/// Parses and runs one subcommand. `args` excludes the program name.
inline int dispatch(const std::vector<std::string>& args, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"Price-efficient bidding market: simulation, analysis, and minority-game tools", "seesaw"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  const std::string out_default = default_output_dir();

  // simulate ---------------------------------------------------------------
  auto* sim = app.add_subcommand("simulate", "Simulate the bidding market");
  int sim_ns = 0, sim_nr = 0;
  std::size_t sim_steps = 0;
  std::uint64_t sim_seed = 0;
  bool sim_reset = false;
  std::optional<int> sim_initial;
  std::string sim_out = out_default;
  sim->add_option("--ns", sim_ns, "Number of speculators")->required()->check(CLI::PositiveNumber);
  sim->add_option("--nr", sim_nr, "Number of random traders")->capture_default_str()->check(CLI::NonNegativeNumber);
  sim->add_option("--steps", sim_steps, "Number of steps")->required()->check(CLI::PositiveNumber);
  sim->add_option("--seed", sim_seed, "Generator seed")->capture_default_str();
  sim->add_flag("--reset", sim_reset, "Use the reset rule at the boundaries");
  sim->add_option("--initial", sim_initial, "Initial demand (default floor(N/2))");
  sim->add_option("--out", sim_out, "Output directory")->capture_default_str();

  // analyze ----------------------------------------------------------------
  auto* ana = app.add_subcommand("analyze", "Return statistics of a simulated trajectory");
  std::string ana_in, ana_params, ana_out;
  double ana_tail = 0.01, ana_edge = 0.02;
  std::size_t ana_lag = 100;
  int ana_bins = 40, ana_ubins = 50;
  ana->add_option("--in", ana_in, "trajectory.csv")->required()->check(CLI::ExistingFile);
  ana->add_option("--params", ana_params, "Params file (default: params.cfg beside the input)");
  ana->add_option("--tail-fraction", ana_tail, "Hill tail fraction")->capture_default_str();
  ana->add_option("--edge-exclusion", ana_edge, "Uniformity edge exclusion per side")->capture_default_str();
  ana->add_option("--max-lag", ana_lag, "Largest autocorrelation lag")->capture_default_str();
  ana->add_option("--bins", ana_bins, "Logarithmic bins for conditional fluctuations")->capture_default_str();
  ana->add_option("--uniform-bins", ana_ubins, "Bins for the uniformity test")->capture_default_str();
  ana->add_option("--out", ana_out, "Output directory (default: beside the input)");

  // optimize ---------------------------------------------------------------
  auto* opt = app.add_subcommand("optimize", "Price-efficient versus demand-efficient buy probabilities");
  int opt_ns = 0, opt_nr = 0;
  double opt_tol = 1e-10;
  std::optional<double> opt_cap;
  std::string opt_out = out_default;
  opt->add_option("--ns", opt_ns, "Number of speculators")->required()->check(CLI::PositiveNumber);
  opt->add_option("--nr", opt_nr, "Number of random traders")->capture_default_str()->check(CLI::NonNegativeNumber);
  opt->add_option("--tol", opt_tol, "Price residual tolerance")->capture_default_str();
  opt->add_option("--cap", opt_cap, "Cap the d'=N price instead of conditioning on d'<N");
  opt->add_option("--out", opt_out, "Output directory")->capture_default_str();

  // markov -----------------------------------------------------------------
  auto* mk = app.add_subcommand("markov", "Stationary distribution of the demand chain");
  int mk_n = 0, mk_nr = 0;
  bool mk_reset = false, mk_matrix = false, mk_free = false;
  double mk_tol = 1e-12;
  std::size_t mk_iter = 1'000'000;
  std::string mk_out = out_default;
  mk->add_option("--n", mk_n, "Number of agents N")->required()->check(CLI::PositiveNumber);
  mk->add_option("--nr", mk_nr, "Random traders (market chain with N_s = N - N_r)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  mk->add_flag("--reset", mk_reset, "Reset rule at the boundaries (default: absorbing)");
  mk->add_option("--tol", mk_tol, "Power-iteration tolerance (max norm)")->capture_default_str();
  mk->add_option("--max-iter", mk_iter, "Iteration limit")->capture_default_str();
  mk->add_flag("--matrix", mk_matrix, "Also write the transition matrix (N <= 200)");
  mk->add_flag("--matrix-free", mk_free, "Regenerate rows on the fly instead of storing the matrix");
  mk->add_option("--out", mk_out, "Output directory")->capture_default_str();

  // botgame ----------------------------------------------------------------
  auto* bg = app.add_subcommand("botgame", "Minority game with superplayer, played by bots");
  int bg_players = 11, bg_rounds = 1000;
  double bg_skip = 0.0;
  std::string bg_bot = "efficient", bg_payoff = "minority";
  std::uint64_t bg_seed = 0;
  std::string bg_out = out_default;
  bg->add_option("--players", bg_players, "Number of bots")->capture_default_str();
  bg->add_option("--rounds", bg_rounds, "Number of rounds")->capture_default_str();
  bg->add_option("--skip-prob", bg_skip, "Probability a bot skips a round")->capture_default_str();
  bg->add_option("--bot", bg_bot, "Bot policy")->capture_default_str()->check(CLI::IsMember({"coin", "efficient"}));
  bg->add_option("--payoff", bg_payoff, "Payoff rule")
      ->capture_default_str()
      ->check(CLI::IsMember({"minority", "return"}));
  bg->add_option("--seed", bg_seed, "Generator seed")->capture_default_str();
  bg->add_option("--out", bg_out, "Output directory")->capture_default_str();

  // serve ------------------------------------------------------------------
  auto* sv = app.add_subcommand("serve", "Host live game rooms over HTTP");
  std::string sv_config, sv_bind, sv_log_dir;
  std::optional<int> sv_port;
  sv->add_option("--config", sv_config, "JSON config file");
  sv->add_option("--bind", sv_bind, "Bind address");
  sv->add_option("--port", sv_port, "Port");
  sv->add_option("--log-dir", sv_log_dir, "Round log directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  RunManifest manifest;
  manifest.subcommand = chosen->get_name();
  manifest.argv = args;
  manifest.params = detail::collect_params(*chosen);
  manifest.started = utc_timestamp();

  try {
    if (chosen == sim) {
      ModelParams p{sim_ns, sim_nr, sim_reset ? BoundaryMode::reset_rule : BoundaryMode::clamp, sim_seed};
      p.validate();
      const auto traj = simulate(p, sim_steps, sim_initial);
      detail::OutputSet outputs(sim_out);
      {
        auto f = outputs.open("trajectory.csv");
        write_trajectory_csv(f, traj);
      }
      {
        auto f = outputs.open("params.cfg");
        write_params(f, p);
      }
      manifest.seed = sim_seed;
      manifest.output_paths = outputs.paths();
      manifest.finished = utc_timestamp();
      write_manifest(outputs.dir() / "manifest.json", manifest);
      out << "simulated " << sim_steps << " steps (N = " << p.total() << ") -> " << outputs.dir().string() << '\n';
      return kExitOk;
    }

    if (chosen == ana) {
      const fs::path in_path(ana_in);
      const fs::path params_path = ana_params.empty() ? in_path.parent_path() / "params.cfg" : fs::path(ana_params);
      std::ifstream pin(params_path);
      if (!pin) throw ResourceError("cannot open params file '" + params_path.string() + "'");
      const ModelParams p = read_params(pin);
      std::ifstream tin(in_path);
      const Trajectory traj = read_trajectory_csv(tin, p);
      manifest.seed = p.seed;

      detail::OutputSet outputs(ana_out.empty() ? (in_path.parent_path().empty() ? fs::path(".") : in_path.parent_path())
                                                : fs::path(ana_out));
      const auto returns = log_returns(traj);
      const auto mags = magnitudes(returns.values);
      const auto fit = hill_tail_exponent(mags, ana_tail);

      auto tail_json = detail::to_json(fit);
      tail_json["n_returns"] = returns.values.size();
      tail_json["skipped"] = returns.skipped;
      outputs.json("tail_fit.json", tail_json);
      {
        auto f = outputs.open("ccdf.csv");
        write_ccdf_csv(f, ccdf(mags));
      }
      nlohmann::ordered_json summary;
      summary["tail_fit"] = tail_json;
      try {
        const auto acf_r = autocorrelation(returns.values, ana_lag);
        const auto acf_m = autocorrelation(mags, ana_lag);
        {
          auto f = outputs.open("acf_returns.csv");
          write_acf_csv(f, acf_r);
        }
        {
          auto f = outputs.open("acf_magnitudes.csv");
          write_acf_csv(f, acf_m);
        }
        summary["noise_band"] = 3.0 / std::sqrt(static_cast<double>(returns.values.size()));
      } catch (const Error& e) {
        summary["autocorrelation_error"] = e.what();
      }
      try {
        const auto bins = conditional_return_variance(traj, ana_bins);
        auto f = outputs.open("fluctuations.csv");
        write_fluctuations_csv(f, bins);
        summary["fluctuation_slope"] = fluctuation_scaling_slope(bins, 10.0, p.total() / 10.0);
      } catch (const Error& e) {
        summary["fluctuations_error"] = e.what();
      }
      try {
        const auto u = uniformity_test(traj.demands, p.total(), ana_edge, ana_ubins);
        nlohmann::ordered_json uj;
        uj["chi_square"] = u.chi_square;
        uj["degrees_of_freedom"] = u.degrees_of_freedom;
        uj["max_relative_deviation"] = u.max_relative_deviation;
        uj["pass"] = u.pass;
        uj["interior"] = {u.interior_low, u.interior_high};
        outputs.json("uniformity.json", uj);
        summary["uniformity"] = uj;
      } catch (const Error& e) {
        summary["uniformity_error"] = e.what();
      }
      outputs.json("analysis.json", summary);
      manifest.output_paths = outputs.paths();
      manifest.finished = utc_timestamp();
      write_manifest(outputs.dir() / "manifest.json", manifest);
      out << "xi = " << format_double(fit.xi) << " (" << fit.n_tail << " tail points)\n";
      return kExitOk;
    }

    if (chosen == opt) {
      ModelParams p{opt_ns, opt_nr, BoundaryMode::clamp, 0};
      p.validate();
      const Regularization reg = opt_cap ? Regularization::capped(*opt_cap) : Regularization::conditional();
      const auto prof = compare_profiles(p, opt_tol, reg);
      detail::OutputSet outputs(opt_out);
      {
        auto f = outputs.open("profile.csv");
        write_profile_csv(f, prof);
      }
      nlohmann::ordered_json j;
      j["n_speculators"] = opt_ns;
      j["n_random"] = opt_nr;
      j["regularization"] = reg.describe();
      j["max_abs_difference"] = prof.max_abs_difference;
      j["argmax_d"] = prof.argmax_difference;
      outputs.json("optimize.json", j);
      manifest.output_paths = outputs.paths();
      manifest.finished = utc_timestamp();
      write_manifest(outputs.dir() / "manifest.json", manifest);
      out << "max |q_price - q_demand| = " << format_double(prof.max_abs_difference) << " at d = "
          << prof.argmax_difference << '\n';
      return kExitOk;
    }

    if (chosen == mk) {
      if (mk_nr >= mk_n) throw ParameterError("--nr must be smaller than --n");
      StationaryResult res;
      std::optional<TransitionMatrix> matrix;
      const auto boundary = mk_reset ? ChainBoundary::reset_rule : ChainBoundary::absorbing;
      if (mk_nr > 0) {
        matrix = market_transition_matrix(
            {mk_n - mk_nr, mk_nr, mk_reset ? BoundaryMode::reset_rule : BoundaryMode::clamp, 0});
        res = stationary_distribution(*matrix, mk_tol, mk_iter);
      } else if (mk_free || mk_n > 5000) {
        res = stationary_distribution_matrix_free(mk_n, boundary, mk_tol, mk_iter);
      } else {
        matrix = transition_matrix(mk_n, boundary);
        res = stationary_distribution(*matrix, mk_tol, mk_iter);
      }
      detail::OutputSet outputs(mk_out);
      {
        auto f = outputs.open("stationary.csv");
        write_stationary_csv(f, res.distribution);
      }
      if (mk_matrix) {
        if (mk_n > 200) throw ParameterError("--matrix is limited to N <= 200");
        if (!matrix) matrix = transition_matrix(mk_n, boundary);
        auto f = outputs.open("matrix.csv");
        write_matrix_csv(f, *matrix);
      }
      nlohmann::ordered_json j;
      j["n"] = mk_n;
      j["boundary"] = mk_nr > 0 ? "random_traders" : (mk_reset ? "reset_rule" : "absorbing");
      j["residual"] = res.residual;
      j["iterations"] = res.iterations;
      j["unique"] = res.unique;
      outputs.json("markov.json", j);
      manifest.output_paths = outputs.paths();
      manifest.finished = utc_timestamp();
      write_manifest(outputs.dir() / "manifest.json", manifest);
      if (!res.unique) err << "warning: absorbing chain; stationary distribution is not unique\n";
      out << "stationary distribution after " << res.iterations << " iterations, residual "
          << format_double(res.residual) << '\n';
      return kExitOk;
    }

    if (chosen == bg) {
      GameConfig cfg{bg_players, payoff_mode_from_string(bg_payoff), bg_skip, bg_rounds, bg_seed};
      cfg.validate();
      const auto records = run_bot_game(cfg, bot_kind_from_string(bg_bot));
      detail::OutputSet outputs(bg_out);
      {
        auto f = outputs.open("rounds.jsonl");
        write_round_log(f, records);
      }
      const auto report = metrics(records);
      outputs.json("metrics.json", to_json(report));
      manifest.seed = bg_seed;
      manifest.output_paths = outputs.paths();
      manifest.finished = utc_timestamp();
      write_manifest(outputs.dir() / "manifest.json", manifest);
      out << "bubble_fraction = " << format_double(report.bubble_fraction)
          << ", outcome_variance = " << format_double(report.outcome_variance) << '\n';
      return kExitOk;
    }

    if (chosen == sv) {
      auto cfg = load_service_config(sv_config);
      if (!sv_bind.empty()) cfg.bind_address = sv_bind;
      if (sv_port) cfg.port = *sv_port;
      if (!sv_log_dir.empty()) cfg.log_dir = sv_log_dir;
      GameService service(cfg);
      GameServer server(service);
      out << "serving on " << cfg.bind_address << ':' << cfg.port << std::endl;
      if (!server.listen(cfg.bind_address, cfg.port)) throw ResourceError("cannot listen on the requested address");
      return kExitOk;
    }
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

inline int dispatch(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dispatch(args, out, err);
}

}  // namespace seesaw::cli
