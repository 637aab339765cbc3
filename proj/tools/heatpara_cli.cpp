#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "heatpara/config.hpp"

using namespace heatpara;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitAssert = 2;

struct Flags {
  std::map<std::string, std::string> values;
  bool zero_noise = false;
  std::string config;
};

void add_common(CLI::App* sub, Flags& f) {
  static const std::vector<std::pair<std::string, std::string>> opts = {
      {"--geometry", "geometry"}, {"--N", "N"},          {"--b", "b"},           {"--nt", "nt"},
      {"--alpha", "alpha"},       {"--eps", "eps"},      {"--seeds", "seeds"},   {"--delta", "delta"},
      {"--s", "s"},               {"--out", "out"},      {"--threads", "threads"}, {"--archive", "archive"},
      {"--count", "count"},       {"--method", "method"}, {"--shift", "shift"},  {"--mc-samples", "mc_samples"},
      {"--n", "tail_n"},          {"--samples", "tail_samples"}, {"--n-max", "n_max"}, {"--T", "nls_T"},
      {"--dt", "nls_dt"},         {"--s-list", "s_list"}, {"--weyl-lo", "weyl_lo"}, {"--weyl-hi", "weyl_hi"},
      {"--calibration-k", "calibration.k"}, {"--calibration-m", "calibration.m"}};
  for (const auto& [flag, key] : opts) {
    const ConfigKey* ck = nullptr;
    for (const auto& k : config_keys())
      if (k.name == key) ck = &k;
    sub->add_option_function<std::string>(flag, [&f, k = key](const std::string& v) { f.values[k] = v; },
                                          ck ? ck->doc + " (default: " + ck->default_value + ")" : "");
  }
  sub->add_flag("--zero-noise", f.zero_noise, "replace the noise by zero");
  sub->add_option("--config", f.config, "flat key = value config file");
}

Config resolve(const Flags& f) {
  Config c = f.config.empty() ? Config() : Config::load(f.config);
  for (const auto& [k, v] : f.values) c.set(k, v);
  if (f.zero_noise) c.set("zero_noise", "true");
  return c;
}

std::string fmt_eig(double v) {
  if (std::abs(v) < 1e-12) v = 0.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_json(const std::string& dir, const std::string& name, json j) {
  std::filesystem::create_directories(dir);
  std::ofstream out(std::filesystem::path(dir) / (name + ".json"));
  if (!out) throw InvalidArgument("cannot write to output directory '" + dir + "'");
  out << j.dump(2) << "\n";
}

int finish(const StudyReport& r, const Config& c) {
  write_report(r, c.get("out"), c.hash());
  std::cout << r.summary() << "\n";
  return r.passed() ? kExitOk : kExitAssert;
}

EnhancedNoise realization(const StudyConfig& sc, std::uint64_t seed) {
  GeometryPtr g = sc.make_geometry();
  const TimeGrid tg = sc.make_grid(*g);
  return enhance(g, seed, sc.eps.front(), tg, sc.alpha, {.b = sc.b, .zero_noise = sc.zero_noise});
}

int run_sample(const Config& c) {
  const StudyConfig sc = c.study();
  json all = json::array();
  for (auto seed : sc.seeds) {
    const EnhancedNoise e = realization(sc, seed);
    std::string path = c.get("archive");
    if (path.empty() || sc.seeds.size() > 1) {
      std::filesystem::create_directories(sc.out_dir);
      path = (std::filesystem::path(sc.out_dir) /
              ("xi_" + to_string(sc.geometry) + "_N" + std::to_string(sc.N) + "_seed" + std::to_string(seed) + ".hpara"))
                 .string();
    }
    archive_write(e, path);
    json j = to_json(e);
    j["archive"] = path;
    all.push_back(j);
    std::cout << "sample seed " << seed << ": x = " << e.x << ", archive " << path << "\n";
  }
  write_json(sc.out_dir, "sample", {{"config_hash", c.hash()}, {"realizations", all}});
  return kExitOk;
}

int run_spectrum(const Config& c) {
  const StudyConfig sc = c.study();
  const EnhancedNoise e = c.get("archive").empty() ? realization(sc, sc.seeds.front()) : archive_read(c.get("archive"));
  SpectrumOptions opt;
  const std::string m = c.get("method");
  if (m == "dense")
    opt.method = EigenMethod::Dense;
  else if (m == "lanczos")
    opt.method = EigenMethod::Lanczos;
  else
    throw InvalidArgument("method must be dense or lanczos");
  opt.shift = c.number("shift");
  const int count = c.integer("count");
  if (count < 1) throw InvalidArgument("count must be >= 1");
  const SpectrumResult r = spectrum(e, count, opt);
  std::string line;
  for (std::size_t i = 0; i < r.eigenvalues.size(); ++i) line += (i ? "," : "") + fmt_eig(r.eigenvalues[i]);
  std::cout << line << "\n";
  json j = to_json(r, *e.geometry(), sc.cal);
  j["config_hash"] = c.hash();
  j["x"] = e.x;
  write_json(sc.out_dir, "spectrum", j);
  return kExitOk;
}

int run_decomp(const Config& c) {
  const StudyConfig sc = c.study();
  const auto& d = decomposition(sc.b);
  json j = to_json(d);
  j["config_hash"] = c.hash();
  write_json(sc.out_dir, "decomposition", j);
  std::cout << "decomp-dump b = " << sc.b << ": written to " << (std::filesystem::path(sc.out_dir) / "decomposition.json").string()
            << "\n";
  return kExitOk;
}

int dispatch(const std::string& cmd, const Config& c) {
  if (cmd == "sample") return run_sample(c);
  if (cmd == "spectrum") return run_spectrum(c);
  if (cmd == "decomp-dump") return run_decomp(c);
  const StudyConfig sc = c.study();
  if (cmd == "renorm") return finish(renorm_study(sc, c.integer("mc_samples")), c);
  if (cmd == "weyl") return finish(weyl_study(sc, c.number("weyl_lo"), c.number("weyl_hi")), c);
  if (cmd == "bounds") return finish(eigenvalue_bounds_study(sc, c.integer("n_max")), c);
  if (cmd == "tails") return finish(tail_study(sc, c.integer("tail_n"), {}, c.integer("tail_samples")), c);
  if (cmd == "resolvent") return finish(resolvent_convergence_study(sc), c);
  if (cmd == "bg") return finish(brezis_gallouet_check(sc), c);
  if (cmd == "nls") {
    NlsOptions o;
    o.T = c.number("nls_T");
    o.dt = c.number("nls_dt");
    return finish(nls_study(sc, o), c);
  }
  if (cmd == "opnorms") return finish(opnorm_study(sc, parse_double_list(c.get("s_list"))), c);
  if (cmd == "selftest") return finish(selftest(sc), c);
  throw InvalidArgument("unknown subcommand '" + cmd + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Paracontrolled Anderson Hamiltonian on the torus and the Dirichlet square"};
  app.require_subcommand(1);
  const std::vector<std::pair<std::string, std::string>> cmds = {
      {"sample", "sample enhanced noise and write archives"},
      {"renorm", "renormalization constant against log(1/eps)"},
      {"spectrum", "lowest eigenvalues of the renormalized operator"},
      {"weyl", "counting-function slope"},
      {"bounds", "eigenvalue bounds with calibrated constants"},
      {"tails", "empirical distribution of an eigenvalue"},
      {"resolvent", "convergence in eps of eigenvalues and resolvents"},
      {"bg", "Brezis-Gallouet inequality check"},
      {"nls", "nonlinear Schroedinger evolution"},
      {"opnorms", "operator-norm scaling probes"},
      {"decomp-dump", "dump the redistributed Bony decomposition"},
      {"selftest", "invariant checks on N = 32"}};
  Flags flags;
  for (const auto& [name, desc] : cmds) add_common(app.add_subcommand(name, desc), flags);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return kExitError;
  }
  try {
    const std::string cmd = app.get_subcommands().front()->get_name();
    return dispatch(cmd, resolve(flags));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}
