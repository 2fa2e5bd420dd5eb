// wh_cli: design, check, ambiguity and simulate subcommands.
// Exit codes: 0 success, 1 usage or input error, 2 verification failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "wh/channel.hpp"
#include "wh/design.hpp"
#include "wh/transmux.hpp"
#include "wh/waveform.hpp"
#include "wh/weyl_heisenberg.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kVerifyFailed = 2;

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json read_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open " + path);
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

// Relative paths inside a config are taken relative to the config file.
std::string resolve(const std::string& config_path, const std::string& p) {
  const fs::path q(p);
  if (q.is_absolute()) return p;
  return (fs::path(config_path).parent_path() / q).string();
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (tok.find_first_not_of(" \t", used) != std::string::npos) throw InputError("bad number: " + tok);
    out.push_back(v);
  }
  return out;
}

// Shortest decimal that reads back to the same double.
std::string num(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

// ---------------------------------------------------------------------------

int cmd_design(const std::string& config_path, std::string out_path, int workers_flag) {
  const json cfg = read_json(config_path);
  const int N = cfg.at("N").get<int>();
  const int K = cfg.at("K").get<int>();
  const wh::GridParams g = wh::grid_params(N, K);
  const int degree = get_or(cfg, "degree", 0);
  wh::DesignObjective obj = wh::DesignObjective::defaults(g);
  obj.lambda = get_or(cfg, "lambda", obj.lambda);
  obj.mainlobe_len = get_or(cfg, "mainlobe_len", obj.mainlobe_len);
  obj.fft_size = get_or(cfg, "fft_size", obj.fft_size);
  wh::OptimizeOptions opt;
  opt.budget = get_or(cfg, "budget", opt.budget);
  opt.restarts = get_or(cfg, "restarts", opt.restarts);
  opt.master_seed = get_or<std::uint64_t>(cfg, "master_seed", opt.master_seed);
  opt.workers = workers_flag > 0 ? workers_flag : get_or(cfg, "workers", opt.workers);
  opt.perturbation = get_or(cfg, "perturbation", opt.perturbation);
  if (out_path.empty()) {
    if (!cfg.contains("out")) throw InputError("no output path (--out or \"out\" in the config)");
    out_path = resolve(config_path, cfg.at("out").get<std::string>());
  }
  if (degree < 0) throw InputError("degree must be >= 0");

  const wh::DesignReport rep = wh::optimize(g, wh::default_init(g, degree), obj, opt);
  wh::save_waveform(out_path, rep.waveform);
  {
    std::ofstream ps(out_path + ".params");
    for (std::size_t r = 0; r < rep.params.size(); ++r) {
      if (r) ps << "---\n";
      ps << wh::serialize_params(rep.params[r]);
    }
  }
  std::printf("grid N=%d K=%d (M=%d P=%d J=%d L=%d), degree %d\n", g.N, g.K, g.M, g.P, g.J, g.L, degree);
  std::printf("objective        %.12g\n", rep.objective_value);
  std::printf("freq leakage     %.12g\n", rep.freq_leakage);
  std::printf("time leakage     %.12g\n", rep.time_leakage);
  std::printf("iterations       %d (restart %d of %d)\n", rep.iterations, rep.restart, std::max(1, opt.restarts));
  std::printf("length           %d (first tap %d, %d nonzero)\n", rep.waveform.length(), rep.waveform.first(),
              rep.waveform.nonzero_count());
  std::printf("orthonormality   %.3e\n", rep.defect);
  std::printf("wrote            %s\n", out_path.c_str());
  return rep.defect < 1e-9 ? kOk : kVerifyFailed;
}

int cmd_check(const std::string& path, double tol, int trials, unsigned long long seed) {
  wh::Waveform v;
  try {
    v = wh::load_waveform(path);
  } catch (const std::exception& e) {
    throw InputError(e.what());
  }
  const wh::GridParams& g = v.grid();
  const double ortho = wh::orthonormality_defect(v);
  const double frame = wh::tight_frame_defect(v, trials, seed);
  const auto blocks = wh::extract_blocks(v);
  double worst_block = 0.0;
  std::printf("waveform         %s (N=%d K=%d, %d taps from %d)\n", path.c_str(), g.N, g.K, v.length(), v.first());
  std::printf("orthonormality   %.3e\n", ortho);
  std::printf("tight frame      %.3e\n", frame);
  for (std::size_t r = 0; r < blocks.size(); ++r) {
    const double d = wh::paraunitarity_defect(blocks[r], 1.0 / g.N);
    worst_block = std::max(worst_block, d);
    std::printf("block %-4zu       %.3e\n", r, d);
  }
  const bool pass = ortho < tol && frame < tol && worst_block < tol;
  std::printf("%s (tol %.1e)\n", pass ? "PASS" : "FAIL", tol);
  return pass ? kOk : kVerifyFailed;
}

int cmd_ambiguity(const std::string& vpath, const std::string& wpath, int xmin, int xmax, int xstep,
                  const std::string& ys, const std::string& out) {
  wh::Waveform v, w;
  try {
    v = wh::load_waveform(vpath);
    w = wh::load_waveform(wpath);
  } catch (const std::exception& e) {
    throw InputError(e.what());
  }
  if (!(v.grid() == w.grid())) throw InputError("waveforms are on different grids");
  if (xstep < 1) throw InputError("--xstep must be >= 1");
  const auto grid = wh::ambiguity_grid(v, w, xmin, xmax, parse_list(ys), xstep);
  std::ofstream os(out);
  if (!os) throw InputError("cannot write " + out);
  wh::write_ambiguity_csv(os, grid);
  double peak_off = 0.0;
  for (int k = 0; k < grid.x_count(); ++k)
    for (std::size_t i = 0; i < grid.y_values.size(); ++i) {
      const int x = xmin + k * xstep;
      if (!(x == 0 && grid.y_values[i] == 0.0)) peak_off = std::max(peak_off, std::abs(grid(x, i)));
    }
  std::printf("wrote %s (%d x values, %zu y values); max |A| away from the origin %.6g\n", out.c_str(),
              grid.x_count(), grid.y_values.size(), peak_off);
  return kOk;
}

// ---------------------------------------------------------------------------

struct SchemeSpec {
  std::string name;
  wh::Waveform tx, rx;
};

std::vector<SchemeSpec> load_schemes(const json& cfg, const std::string& config_path, const wh::GridParams& g) {
  std::vector<SchemeSpec> out;
  for (const auto& s : cfg.at("schemes")) {
    SchemeSpec sp;
    const std::string builtin = get_or<std::string>(s, "builtin", "");
    if (builtin == "cp" || builtin == "zp") {
      const wh::Scheme b = builtin == "cp" ? wh::cp_scheme(g) : wh::zp_scheme(g);
      sp.name = get_or<std::string>(s, "name", b.name);
      sp.tx = b.tx;
      sp.rx = b.rx;
    } else if (!builtin.empty()) {
      throw InputError("unknown builtin scheme '" + builtin + "'");
    } else {
      sp.name = s.at("name").get<std::string>();
      try {
        sp.tx = wh::load_waveform(resolve(config_path, s.at("tx").get<std::string>()));
        sp.rx = s.contains("rx") ? wh::load_waveform(resolve(config_path, s.at("rx").get<std::string>())) : sp.tx;
      } catch (const wh::WaveformFormatError& e) {
        throw InputError(e.what());
      }
      if (!(sp.tx.grid() == g) || !(sp.rx.grid() == g)) throw InputError("scheme '" + sp.name + "' is on another grid");
    }
    out.push_back(std::move(sp));
  }
  if (out.empty()) throw InputError("no schemes");
  return out;
}

wh::ChannelStats load_channel(const json& cfg) {
  if (!cfg.contains("channel")) return {};
  const json& c = cfg.at("channel");
  if (c.is_string()) {
    const std::string p = c.get<std::string>();
    if (p == "33tap") return wh::profile_33_tap();
    if (p == "3tap") return wh::profile_3_tap();
    if (p == "none") return {};
    throw InputError("unknown channel profile '" + p + "'");
  }
  const auto db = c.at("powers_db").get<std::vector<double>>();
  const auto delays = get_or<std::vector<int>>(c, "delays", {});
  return wh::ChannelStats::from_db(db, delays);
}

template <class T>
std::vector<T> scalar_or_list(const json& cfg, const char* key, T fallback) {
  if (!cfg.contains(key)) return {fallback};
  const json& j = cfg.at(key);
  if (j.is_array()) return j.get<std::vector<T>>();
  return {j.get<T>()};
}

int cmd_simulate(const std::string& config_path, std::string out_path, int workers_flag) {
  const json cfg = read_json(config_path);
  const wh::GridParams g = wh::grid_params(cfg.at("N").get<int>(), cfg.at("K").get<int>());
  const auto schemes = load_schemes(cfg, config_path, g);
  const std::string sweep_name = get_or<std::string>(cfg, "sweep", "ebn0");
  if (sweep_name != "ebn0" && sweep_name != "ebi") throw InputError("sweep must be \"ebn0\" or \"ebi\"");
  const wh::Sweep sweep = sweep_name == "ebn0" ? wh::Sweep::ebn0 : wh::Sweep::ebi;
  const auto xs = cfg.at("x_db").get<std::vector<double>>();
  const auto efs = scalar_or_list(cfg, "eps_f", 0.0);
  const auto ets = scalar_or_list(cfg, "eps_t", 0);
  if (out_path.empty()) {
    if (!cfg.contains("out")) throw InputError("no output path (--out or \"out\" in the config)");
    out_path = resolve(config_path, cfg.at("out").get<std::string>());
  }

  wh::LinkConfig base;
  base.grid = g;
  base.channel = load_channel(cfg);
  const std::string mode = get_or<std::string>(cfg, "draw_mode", "rayleigh");
  if (mode == "rayleigh") base.draw_mode = wh::DrawMode::rayleigh;
  else if (mode == "pin_direct") base.draw_mode = wh::DrawMode::pin_direct;
  else if (mode == "normalized") base.draw_mode = wh::DrawMode::normalized;
  else throw InputError("unknown draw_mode '" + mode + "'");
  if (cfg.contains("ebn0_db")) base.ebn0_db = cfg.at("ebn0_db").get<double>();
  if (cfg.contains("interferer")) {
    const json& in = cfg.at("interferer");
    base.interferer = std::pair{in.at("center_tone").get<double>(), get_or(in, "ebi_db", 0.0)};
    const std::string im = get_or<std::string>(in, "mode", "gaussian");
    if (im == "gaussian") base.interferer_mode = wh::InterfererMode::gaussian;
    else if (im == "tone") base.interferer_mode = wh::InterfererMode::tone;
    else throw InputError("unknown interferer mode '" + im + "'");
  }
  base.frames_per_trial = get_or(cfg, "frames_per_trial", 9);
  base.trials = get_or(cfg, "trials", 100);
  base.master_seed = get_or<std::uint64_t>(cfg, "master_seed", 1);
  base.workers = workers_flag > 0 ? workers_flag : get_or(cfg, "workers", 1);
  base.phase_tracking = get_or(cfg, "phase_tracking", true);

  std::ostringstream csv;
  csv << "scheme,eps_f,eps_t,x_db,ber,bits,errors\n";
  std::printf("%-10s %7s %5s %8s %12s %12s %10s  95%% interval\n", "scheme", "eps_f", "eps_t",
              sweep == wh::Sweep::ebn0 ? "Eb/N0" : "Eb/EI", "ber", "bits", "errors");
  for (const auto& sc : schemes)
    for (double ef : efs)
      for (int et : ets) {
        wh::LinkConfig c = base;
        c.tx_waveform = sc.tx;
        c.rx_waveform = sc.rx;
        c.eps_f = ef;
        c.eps_t = et;
        const auto pts = wh::run_ber(c, sweep, xs);
        for (const auto& p : pts) {
          csv << sc.name << ',' << num(ef) << ',' << et << ',' << num(p.x_db) << ',' << num(p.ber) << ',' << p.bits_measured << ','
              << p.errors << '\n';
          const auto [lo, hi] = wh::confidence_interval(p);
          std::printf("%-10s %7.3f %5d %8.2f %12.4e %12lld %10lld  [%.3e, %.3e]\n", sc.name.c_str(), ef, et, p.x_db,
                      p.ber, p.bits_measured, p.errors, lo, hi);
        }
      }
  std::ofstream os(out_path);
  if (!os) throw InputError("cannot write " + out_path);
  os << csv.str();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weyl-Heisenberg OFDM waveform toolkit"};
  app.require_subcommand(1, 1);

  std::string design_cfg, design_out;
  int workers = 0;
  auto* design = app.add_subcommand("design", "optimize an orthonormal waveform from a JSON config");
  design->add_option("config", design_cfg, "design config (JSON)")->required();
  design->add_option("--out", design_out, "waveform file (overrides \"out\" in the config)");
  design->add_option("--workers", workers, "worker threads (overrides the config)");

  std::string check_path;
  double tol = 1e-9;
  int trials = 4;
  unsigned long long seed = 1;
  auto* check = app.add_subcommand("check", "verify orthonormality of a waveform file");
  check->add_option("waveform", check_path, "waveform file")->required();
  check->add_option("--tol", tol, "pass threshold for every defect")->capture_default_str();
  check->add_option("--trials", trials, "random probes of the frame operator")->capture_default_str();
  check->add_option("--seed", seed, "probe seed")->capture_default_str();

  std::string amb_v, amb_w, amb_out, amb_ys = "0";
  int xmin = 0, xmax = 0, xstep = 1;
  auto* amb = app.add_subcommand("ambiguity", "crossambiguity A_{v,w}(x, y) on a grid, as CSV");
  amb->add_option("v", amb_v, "multiplexing waveform file")->required();
  amb->add_option("w", amb_w, "demultiplexing waveform file")->required();
  amb->add_option("--xmin", xmin)->capture_default_str();
  amb->add_option("--xmax", xmax)->capture_default_str();
  amb->add_option("--xstep", xstep)->capture_default_str();
  amb->add_option("--ys", amb_ys, "comma-separated y values (may be empty)")->capture_default_str();
  amb->add_option("--out", amb_out, "CSV output")->required();

  std::string sim_cfg, sim_out;
  auto* sim = app.add_subcommand("simulate", "BER simulation from a JSON config");
  sim->add_option("config", sim_cfg, "simulation config (JSON)")->required();
  sim->add_option("--out", sim_out, "CSV output (overrides \"out\" in the config)");
  sim->add_option("--workers", workers, "worker threads (overrides the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kOk : kInputError;
  }

  try {
    if (*design) return cmd_design(design_cfg, design_out, workers);
    if (*check) return cmd_check(check_path, tol, trials, seed);
    if (*amb) return cmd_ambiguity(amb_v, amb_w, xmin, xmax, xstep, amb_ys, amb_out);
    if (*sim) return cmd_simulate(sim_cfg, sim_out, workers);
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInputError;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kInputError;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return kInputError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInputError;
  }
  return kInputError;
}
