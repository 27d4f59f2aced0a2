#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "epsfbm/bridge.hpp"
#include "epsfbm/circulant.hpp"
#include "epsfbm/engine.hpp"
#include "epsfbm/grid_gaussian.hpp"
#include "epsfbm/holder.hpp"
#include "epsfbm/manifest.hpp"
#include "epsfbm/mlmc.hpp"
#include "epsfbm/record.hpp"
#include "epsfbm/sde.hpp"

namespace {

using namespace epsfbm;

struct CommonOpts {
  double hurst = 0.8;
  double eps = 0.1;
  double rho = 5.0;
  double delta = 0.1;
  double nu = 0.0;      // 0 means "derive from rho"
  double nustar = 0.0;
  double alpha = 0.0;   // 0 means "no Hoelder certificate"
  std::uint64_t seed = 1;
  std::string out;
  std::string format = "csv";
  int jobs = 1;
};

RecordParams make_params(const CommonOpts& o) {
  if (o.nu > 0.0 || o.nustar > 0.0) {
    const double nu = o.nu > 0.0 ? o.nu : o.rho / 2.0 - o.nustar;
    const double nustar = o.nustar > 0.0 ? o.nustar : o.rho / 2.0 - o.nu;
    return RecordParams(o.hurst, o.delta, nu, nustar);
  }
  return RecordParams::from_rho(o.hurst, o.delta, o.rho);
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  if (out.empty()) throw CLI::ValidationError("empty list: " + s);
  return out;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (double v : parse_list(s)) out.push_back(static_cast<int>(v));
  return out;
}

void add_common(CLI::App* cmd, CommonOpts* o, bool with_eps = true) {
  cmd->add_option("--hurst", o->hurst, "Hurst index in (0,1)");
  if (with_eps) cmd->add_option("--eps", o->eps, "target sup-norm accuracy");
  cmd->add_option("--rho", o->rho, "record-breaker scale parameter");
  cmd->add_option("--delta", o->delta, "record-breaker decay parameter");
  cmd->add_option("--nu", o->nu, "tail split nu (default rho/4)");
  cmd->add_option("--nustar", o->nustar, "tail split nu* (default rho/4)");
  cmd->add_option("--seed", o->seed, "RNG seed");
  cmd->add_option("--out", o->out, "output path or prefix");
  cmd->add_option("--format", o->format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--jobs", o->jobs, "worker threads for replications");
}

int cmd_fbm(const CommonOpts& o) {
  const RecordParams p = make_params(o);
  RngStream rng(o.seed, 0);
  std::optional<double> alpha;
  if (o.alpha > 0.0) alpha = o.alpha;
  const SfbmResult result = sfbm(o.eps, p, rng, alpha);

  const std::string prefix = o.out.empty() ? "fbm" : o.out;
  {
    std::ofstream mf(prefix + ".json");
    mf << io::certificate_manifest(result).dump(2) << '\n';
  }
  if (o.format == "csv") {
    std::ofstream cf(prefix + ".csv");
    io::write_path_csv(cf, result.path);
  }
  std::cout << "N=" << result.cert.last_breaker << " N_eps=" << result.cert.truncation
            << " sup_bound=" << result.cert.sup_bound << '\n';
  return 0;
}

// Mean last-breaker level of nominal paths, by scanning single exact
// fine-grid samples level by level (floored at 1; the deepest level is
// flagged when breakers still appear next to the cap).
struct MeanBreakerLevel {
  double mean = 1.0;
  bool censored = false;
};

MeanBreakerLevel mean_last_breaker(const RecordParams& p, int reps, int depth,
                                   RngStream& rng) {
  MeanBreakerLevel out;
  double total = 0.0;
  for (int rep = 0; rep < reps; ++rep) {
    RngStream stream = rng.substream(static_cast<std::uint64_t>(rep));
    const DyadicPath path = gauss::sample_fbm_path(p.hurst, depth, stream);
    int last = 1;
    for (int k = 1; k <= depth; ++k)
      if (is_record_broken(path, k, p)) last = k;
    if (last >= depth - 1) out.censored = true;
    total += static_cast<double>(last);
  }
  out.mean = total / static_cast<double>(reps);
  return out;
}

int cmd_tune(const CommonOpts& o, const std::string& grid, int reps, int depth) {
  const auto xpos = grid.find('x');
  if (xpos == std::string::npos)
    throw CLI::ValidationError("--grid must look like \"1,2.5,5x0.1,0.2\"");
  const std::vector<double> rhos = parse_list(grid.substr(0, xpos));
  const std::vector<double> deltas = parse_list(grid.substr(xpos + 1));

  std::ostringstream table;
  table << "rho,delta,N_eps,N_star,mean_N,censored\n";
  std::cout << std::setw(8) << "rho" << std::setw(8) << "delta" << std::setw(8)
            << "N_eps" << std::setw(8) << "N*" << std::setw(10) << "E[N]" << '\n';
  RngStream rng(o.seed, 0);
  std::uint64_t cell = 0;
  for (double delta : deltas) {
    for (double rho : rhos) {
      const RecordParams p = RecordParams::from_rho(o.hurst, delta, rho);
      const int n_eps = truncation_level(o.eps, 0, p);
      const int n_star = starting_level(p);
      RngStream cell_rng = rng.substream(cell++);
      const MeanBreakerLevel mn = mean_last_breaker(p, reps, depth, cell_rng);
      std::ostringstream mean_str;
      mean_str << std::setprecision(3) << mn.mean << (mn.censored ? "+" : "");
      std::cout << std::setw(8) << rho << std::setw(8) << delta << std::setw(8)
                << n_eps << std::setw(8) << n_star << std::setw(10)
                << mean_str.str() << '\n';
      table << rho << ',' << delta << ',' << n_eps << ',' << n_star << ','
            << mn.mean << ',' << (mn.censored ? 1 : 0) << '\n';
    }
  }
  if (!o.out.empty()) {
    std::ofstream f(o.out);
    f << table.str();
  }
  return 0;
}

int cmd_sde(const CommonOpts& o, const std::string& field_file,
            const std::string& y0_list) {
  if (o.alpha <= 0.0)
    throw std::domain_error("sde: --alpha is required (Hoelder order in (1/2,H))");
  const sde::VectorFieldSpec field = io::field_from_file(field_file);
  const RecordParams p = make_params(o);

  Eigen::VectorXd y0 = Eigen::VectorXd::Zero(field.dim);
  if (!y0_list.empty()) {
    const std::vector<double> vals = parse_list(y0_list);
    if (static_cast<int>(vals.size()) != field.dim)
      throw std::domain_error("sde: --y0 length must match the field dimension");
    for (int i = 0; i < field.dim; ++i) y0(i) = vals[static_cast<std::size_t>(i)];
  }

  RngStream check_rng(o.seed, 0xF1E1D);
  field.spot_check(check_rng);

  RngStream rng(o.seed, 0);
  const sde::SdeResult result = sde::ssde(o.eps, field, p, o.alpha, y0, rng);

  const std::string prefix = o.out.empty() ? "sde" : o.out;
  {
    std::ofstream mf(prefix + ".json");
    mf << io::sde_manifest(result).dump(2) << '\n';
  }
  if (o.format == "csv") {
    std::ofstream cf(prefix + ".csv");
    io::write_states_csv(cf, result.states, result.level);
  }
  std::cout << "G=" << result.g_constant << " N_Y=" << result.level
            << " eps=" << result.eps << '\n';
  return 0;
}

int cmd_mlmc(const CommonOpts& o, const std::string& functional, double lipschitz,
             const std::string& field_file, double c_alpha, bool certified) {
  const RecordParams p = make_params(o);
  mlmc::FunctionalSpec spec;
  sde::VectorFieldSpec field;

  if (functional == "sup") {
    spec.kind = mlmc::FunctionalKind::kLipschitzSupNorm;
    spec.lipschitz = lipschitz;
    spec.evaluate = [L = lipschitz](const DyadicPath& path) {
      double m = 0.0;
      for (double v : path.values) m = std::max(m, std::abs(v));
      return L * m;
    };
  } else if (functional == "terminal") {
    spec.kind = mlmc::FunctionalKind::kLipschitzSupNorm;
    spec.lipschitz = lipschitz;
    spec.evaluate = [L = lipschitz](const DyadicPath& path) {
      return L * path.values.back();
    };
  } else if (functional == "terminal-square") {
    spec.kind = mlmc::FunctionalKind::kLipschitzSupNorm;
    spec.lipschitz = lipschitz;
    spec.evaluate = [](const DyadicPath& path) {
      const double v = path.values.back();
      return v * v;
    };
  } else if (functional == "sde-terminal") {
    if (field_file.empty())
      throw std::domain_error("mlmc: sde-terminal needs --field");
    if (!(o.alpha > 0.5)) throw std::domain_error("mlmc: sde-terminal needs --alpha");
    field = io::field_from_file(field_file);
    spec.kind = mlmc::FunctionalKind::kSdeTerminal;
    spec.field = &field;
    spec.alpha = o.alpha;
    spec.y0 = Eigen::VectorXd::Zero(field.dim);
    double ca = c_alpha;
    if (ca <= 0.0) {
      // Pilot estimate of the driver Hoelder scale.
      RngStream pilot(o.seed, 0xCA);
      ca = 1.0;
      for (int i = 0; i < 32; ++i) {
        RngStream s = pilot.substream(static_cast<std::uint64_t>(i));
        const DyadicPath path = gauss::sample_fbm_path(o.hurst, 10, s);
        ca = std::max(ca, holder_norm_dyadic(path, o.alpha));
      }
    }
    spec.euler_g = sde::euler_constants(field, ca, o.alpha).g;
  } else {
    throw std::domain_error("mlmc: unknown functional " + functional);
  }

  const mlmc::MlmcPlan plan = mlmc::allocate(o.eps, spec, p);
  RngStream rng(o.seed, 0);
  const mlmc::MlmcEstimate est = mlmc::estimate(plan, spec, p, rng, o.jobs, certified);

  const nlohmann::json report = io::mlmc_report(plan, est);
  if (!o.out.empty()) {
    std::ofstream f(o.out);
    f << report.dump(2) << '\n';
  }
  std::cout << "estimate=" << est.value << " se=" << est.std_error
            << " K=" << plan.top_level << " cost=" << est.total_cost << '\n';
  return 0;
}

int cmd_bench(const CommonOpts& o, const std::string& levels_list,
              const std::string& mode, int reps) {
  const std::vector<int> levels = parse_int_list(levels_list);
  RngStream rng(o.seed, 0);

  std::vector<double> log_cost, log_time;
  std::cout << std::setw(8) << "level" << std::setw(14) << "grid_points"
            << std::setw(12) << "ms" << '\n';
  nlohmann::json out_rows = nlohmann::json::array();
  for (const int level : levels) {
    if (mode == "dense" && level > 12)
      throw std::domain_error("bench: dense mode supports levels <= 12");
    double best_ms = 0.0;
    const std::size_t points = DyadicPath::point_count(level);
    for (int rep = 0; rep < reps; ++rep) {
      RngStream stream = rng.substream(
          (static_cast<std::uint64_t>(level) << 16) + static_cast<std::uint64_t>(rep));
      const auto t0 = std::chrono::steady_clock::now();
      if (mode == "dense") {
        std::vector<double> times(points - 1);
        for (std::size_t i = 0; i + 1 < points; ++i)
          times[i] = static_cast<double>(i + 1) / static_cast<double>(points - 1);
        const gauss::GridGaussian g = gauss::fbm_grid_gaussian(times, o.hurst);
        volatile double sink = gauss::sample_mvn(g, stream).sum();
        (void)sink;
      } else {
        const DyadicPath base = gauss::sample_fbm_path(o.hurst, 1, stream);
        const DyadicPath fine = gauss::refine_dyadic_block(base, level, stream);
        volatile double sink = fine.values.back();
        (void)sink;
      }
      const auto t1 = std::chrono::steady_clock::now();
      const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
      if (rep == 0 || ms < best_ms) best_ms = ms;
    }
    std::cout << std::setw(8) << level << std::setw(14) << points << std::setw(12)
              << std::setprecision(4) << best_ms << '\n';
    const double n = static_cast<double>(points - 1);
    log_cost.push_back(mode == "dense" ? static_cast<double>(level)
                                       : std::log2(n * std::log2(n)));
    log_time.push_back(std::log2(best_ms));
    out_rows.push_back({{"level", level}, {"grid_points", points}});
  }

  if (levels.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i) {
      sx += log_cost[i];
      sy += log_time[i];
      sxx += log_cost[i] * log_cost[i];
      sxy += log_cost[i] * log_time[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    std::cout << (mode == "dense" ? "log2(time) vs level slope: "
                                  : "log2(time) vs log2(n log n) slope: ")
              << std::setprecision(4) << slope << '\n';
  }
  if (!o.out.empty()) {
    std::ofstream f(o.out);
    f << nlohmann::json({{"schema", io::kSchema}, {"mode", mode}, {"rows", out_rows}})
             .dump(2)
      << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"epsilon-strong fractional Brownian motion toolkit"};
  app.require_subcommand(1);

  CommonOpts common;

  auto* fbm_cmd = app.add_subcommand("fbm", "epsilon-strong fBM path with certificate");
  add_common(fbm_cmd, &common);
  fbm_cmd->add_option("--alpha", common.alpha, "also emit the alpha-Hoelder certificate");
  fbm_cmd->get_option("--hurst")->required();
  fbm_cmd->get_option("--eps")->required();

  auto* tune_cmd = app.add_subcommand("tune", "starting/truncation level table over (rho,delta)");
  add_common(tune_cmd, &common);
  std::string grid = "1,2.5,5x0.1,0.2";
  int tune_reps = 100;
  int tune_depth = 16;
  tune_cmd->add_option("--grid", grid, "rho,...xdelta,... grid");
  tune_cmd->add_option("--reps", tune_reps, "replications for the mean breaker level");
  tune_cmd->add_option("--depth", tune_depth, "forward scan depth");

  auto* sde_cmd = app.add_subcommand("sde", "epsilon-strong SDE solve (H > 1/2)");
  add_common(sde_cmd, &common);
  std::string field_file, y0_list;
  sde_cmd->add_option("--alpha", common.alpha, "Hoelder order in (1/2,H)");
  sde_cmd->add_option("--field", field_file, "field spec JSON file")->required();
  sde_cmd->add_option("--y0", y0_list, "initial state, comma separated");

  auto* mlmc_cmd = app.add_subcommand("mlmc", "multilevel Monte Carlo estimate");
  add_common(mlmc_cmd, &common);
  std::string functional = "terminal-square";
  double lipschitz = 1.0, c_alpha_flag = 0.0;
  bool certified = false;
  std::string mlmc_field;
  mlmc_cmd->add_option("--functional", functional,
                       "sup | terminal | terminal-square | sde-terminal");
  mlmc_cmd->add_option("--lipschitz", lipschitz, "Lipschitz constant (Case I)");
  mlmc_cmd->add_option("--field", mlmc_field, "field spec JSON (Case II)");
  mlmc_cmd->add_option("--alpha", common.alpha, "Hoelder order (Case II)");
  mlmc_cmd->add_option("--c-alpha", c_alpha_flag, "driver Hoelder constant (Case II)");
  mlmc_cmd->add_flag("--certified", certified, "per-replication breaker search");

  auto* bench_cmd = app.add_subcommand("bench", "refinement cost measurements");
  add_common(bench_cmd, &common, false);
  std::string levels_list = "10,12,14,16";
  std::string mode = "bridge";
  int bench_reps = 3;
  bench_cmd->add_option("--levels", levels_list, "comma separated target levels");
  bench_cmd->add_option("--mode", mode, "bridge or dense")
      ->check(CLI::IsMember({"bridge", "dense"}));
  bench_cmd->add_option("--reps", bench_reps, "repetitions per level (best kept)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(fbm_cmd)) return cmd_fbm(common);
    if (app.got_subcommand(tune_cmd)) return cmd_tune(common, grid, tune_reps, tune_depth);
    if (app.got_subcommand(sde_cmd)) return cmd_sde(common, field_file, y0_list);
    if (app.got_subcommand(mlmc_cmd))
      return cmd_mlmc(common, functional, lipschitz, mlmc_field, c_alpha_flag, certified);
    if (app.got_subcommand(bench_cmd)) return cmd_bench(common, levels_list, mode, bench_reps);
  } catch (const std::domain_error& e) {
    std::cerr << "parameter error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "parameter error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
