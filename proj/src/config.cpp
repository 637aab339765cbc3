#include "heatpara/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <zlib.h>

namespace heatpara {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  // accepts fractions such as 1/32
  const auto slash = v.find('/');
  try {
    std::size_t pos = 0;
    if (slash != std::string::npos) {
      const double a = std::stod(v.substr(0, slash), &pos);
      std::size_t p2 = 0;
      const std::string rest = v.substr(slash + 1);
      const double b = std::stod(rest, &p2);
      if (pos != slash || p2 != rest.size() || b == 0.0) throw std::invalid_argument(v);
      return a / b;
    }
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw InvalidArgument("config key '" + key + "': '" + v + "' is not a number");
  }
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"geometry", "torus", "torus or square"},
      {"N", "32", "grid size per axis"},
      {"b", "4", "localizer order"},
      {"nt", "128", "time grid points"},
      {"alpha", "0.9", "regularity index in (2/3, 1)"},
      {"eps", "1/32", "comma list of regularizations, strictly decreasing"},
      {"seeds", "1", "comma list or ranges a-b, distinct"},
      {"delta", "0.5", "delta of the eigenvalue bounds"},
      {"s", "auto", "truncation scale or auto"},
      {"out", "out", "output directory"},
      {"zero_noise", "false", "replace the noise by zero"},
      {"calibration.k", "auto", "calibrated k or auto"},
      {"calibration.m", "auto", "calibrated m or auto"},
      {"threads", "0", "worker threads, 0 reads HEATPARA_THREADS"},
      {"archive", "", "noise archive path for spectrum"},
      {"count", "6", "eigenvalues printed by spectrum"},
      {"method", "dense", "dense or lanczos"},
      {"shift", "0", "spectral shift reported with spectrum"},
      {"mc_samples", "0", "Monte Carlo samples for renorm"},
      {"tail_n", "1", "eigenvalue index for tails"},
      {"tail_samples", "500", "realizations for tails"},
      {"n_max", "30", "eigenvalues checked by bounds"},
      {"weyl_lo", "50", "lower end of the Weyl window"},
      {"weyl_hi", "0", "upper end of the Weyl window, 0 selects half of lambda_max"},
      {"nls_T", "1", "NLS final time"},
      {"nls_dt", "0.005", "NLS time step"},
      {"s_list", "1/4,1/16,1/64", "scales for opnorms"},
  };
  return keys;
}

Config::Config() {
  for (const auto& k : config_keys()) values_[k.name] = k.default_value;
}

Config Config::parse(const std::string& text) {
  Config c;
  std::stringstream ss(text);
  std::string line;
  int no = 0;
  while (std::getline(ss, line)) {
    ++no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidArgument("config line " + std::to_string(no) + ": expected key = value");
    c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void Config::set(const std::string& key, const std::string& value) {
  if (!values_.count(key)) throw InvalidArgument("unknown config key '" + key + "'");
  values_[key] = value;
}

const std::string& Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw InvalidArgument("unknown config key '" + key + "'");
  return it->second;
}

double Config::number(const std::string& key) const { return to_double(key, get(key)); }

int Config::integer(const std::string& key) const {
  const std::string& v = get(key);
  int x = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw InvalidArgument("config key '" + key + "': '" + v + "' is not an integer");
  return x;
}

bool Config::flag(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InvalidArgument("config key '" + key + "': '" + v + "' is not a boolean");
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

std::string Config::hash() const {
  const std::string c = canonical();
  const auto crc = crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(c.data()), static_cast<uInt>(c.size()));
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc));
  return buf;
}

json Config::to_json() const {
  json j = json::object();
  for (const auto& [k, v] : values_) j[k] = v;
  j["hash"] = hash();
  return j;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split(s, ',')) out.push_back(to_double("list", item));
  if (out.empty()) throw InvalidArgument("empty number list");
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  auto num = [](const std::string& t) {
    std::uint64_t x = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), x);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size()) throw InvalidArgument("bad seed '" + t + "'");
    return x;
  };
  for (const auto& item : split(s, ',')) {
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      out.push_back(num(item));
      continue;
    }
    const auto a = num(trim(item.substr(0, dash))), b = num(trim(item.substr(dash + 1)));
    if (b < a) throw InvalidArgument("bad seed range '" + item + "'");
    for (auto x = a; x <= b; ++x) out.push_back(x);
  }
  if (out.empty()) throw InvalidArgument("empty seed list");
  return out;
}

StudyConfig Config::study() const {
  StudyConfig c;
  const std::string& geo = get("geometry");
  if (geo == "torus")
    c.geometry = GeometryKind::Torus;
  else if (geo == "square")
    c.geometry = GeometryKind::DirichletSquare;
  else
    throw InvalidArgument("geometry must be torus or square, got '" + geo + "'");
  c.N = integer("N");
  c.b = integer("b");
  c.n_t = integer("nt");
  c.alpha = number("alpha");
  c.eps = parse_double_list(get("eps"));
  c.seeds = parse_seed_list(get("seeds"));
  c.delta = number("delta");
  c.s = get("s") == "auto" ? 0.0 : number("s");
  c.out_dir = get("out");
  c.zero_noise = flag("zero_noise");
  const bool ck = get("calibration.k") != "auto", cm = get("calibration.m") != "auto";
  if (ck != cm) throw InvalidArgument("calibration.k and calibration.m must be given together");
  if (ck) {
    c.calibrated = true;
    c.cal = Calibration{number("calibration.k"), number("calibration.m")};
  }
  c.threads = integer("threads");
  c.validate();
  return c;
}

}  // namespace heatpara
