#include "bilab/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <locale>
#include <fstream>
#include <sstream>

namespace bilab::harness {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_real(const std::string& s, double& out) {
  std::string t = trim(s);
  if (t.empty()) return false;
  std::istringstream is(t);
  is.imbue(std::locale::classic());
  is >> out;
  return is && is.peek() == std::char_traits<char>::eof() && std::isfinite(out);
}

bool parse_u64(const std::string& s, std::uint64_t& out) {
  std::string t = trim(s);
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  return ec == std::errc() && p == t.data() + t.size() && !t.empty();
}

bool parse_int(const std::string& s, long long& out) {
  std::string t = trim(s);
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  return ec == std::errc() && p == t.data() + t.size() && !t.empty();
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  return out;
}

bool parse_list(const std::string& s, std::vector<double>& out) {
  out.clear();
  if (trim(s).empty()) return true;
  for (const auto& item : split(s, ',')) {
    double v;
    if (!parse_real(item, v)) return false;
    out.push_back(v);
  }
  return true;
}

bool parse_points(const std::string& s, std::vector<std::vector<double>>& out) {
  out.clear();
  if (trim(s).empty()) return true;
  for (const auto& item : split(s, ';')) {
    std::vector<double> p;
    if (!parse_list(item, p) || p.size() != 2) return false;
    out.push_back(p);
  }
  return true;
}

const char* type_name(ValueType t) {
  switch (t) {
    case ValueType::integer: return "integer";
    case ValueType::real: return "real";
    case ValueType::text: return "text";
    case ValueType::real_list: return "comma-separated reals";
    case ValueType::points: return "points x,y;x,y";
  }
  return "?";
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

ConfigError::ConfigError(const std::string& source, int line, const std::string& what)
    : std::runtime_error(line > 0 ? source + ":" + std::to_string(line) + ": " + what : source + ": " + what),
      line_(line) {}

const std::vector<KeySpec>& config_schema() {
  using T = ValueType;
  static const std::vector<KeySpec> schema = {
      {"grid.n", T::integer, "33", "nodes per side"},
      {"q1.kind", T::text, "power", "zero | power | sine | zq | pquad"},
      {"q1.params", T::real_list, "3", "power: k[,c]; others: [c]"},
      {"q1.gamma", T::text, "one", "one | bump | cosx"},
      {"q2.kind", T::text, "same", "same | gauge | any q1 kind"},
      {"q2.params", T::real_list, "", "as q1.params"},
      {"q2.gamma", T::text, "one", "as q1.gamma"},
      {"gauge.amplitude", T::real, "0.05", "height of the clamped bump"},
      {"gauge.radius", T::real, "0.35", "support radius of the bump"},
      {"base", T::text, "zero", "zero | newton"},
      {"base.amplitude", T::real, "0.3", "Navier data size of the newton base"},
      {"fp.tol", T::real, "1e-12", ""},
      {"fp.max_iter", T::integer, "50", ""},
      {"fp.delta_cap", T::real, "0.5", ""},
      {"fp.quad_nodes", T::integer, "8", ""},
      {"fp.base_tol", T::real, "1e-8", ""},
      {"newton.tol", T::real, "1e-10", ""},
      {"newton.max_iter", T::integer, "30", ""},
      {"ls.reg", T::real, "1e-8", "Tikhonov factor for coefficient recovery"},
      {"seed", T::integer, "1", ""},
      {"threads", T::integer, "0", "0: hardware concurrency"},
      {"forward.grids", T::real_list, "33,65,129", ""},
      {"fixpoint.size", T::real, "0.1", "c2 norm of v"},
      {"fixpoint.scales", T::real_list, "1,0.5,0.25", ""},
      {"fixpoint.eps", T::real_list, "1e-3,5e-4", "difference steps for the tangency check"},
      {"fixpoint.direction_size", T::real, "10", "c2 norm of the tangency direction"},
      {"fixpoint.roundtrip", T::integer, "10", ""},
      {"cauchy.pairs", T::integer, "50", ""},
      {"cauchy.amplitude", T::real, "0.05", ""},
      {"cauchy.modes", T::integer, "3", ""},
      {"cauchy.coincident", T::integer, "3", ""},
      {"project.fields", T::integer, "20", ""},
      {"second.size", T::real, "0.05", "c2 norm of each direction"},
      {"second.directions", T::integer, "5", ""},
      {"second.eps", T::real_list, "0.1,0.05", ""},
      {"recover.pairs", T::integer, "200", ""},
      {"recover.K", T::integer, "16", ""},
      {"recover.modes", T::integer, "6", ""},
      {"recover.shift", T::real, "0.5", "constant V perturbation"},
      {"recover.bump_amplitude", T::real, "0.5", "A perturbation height"},
      {"recover.bump_width", T::real, "0.2", "A perturbation width"},
      {"runge.K", T::real_list, "8,16,32,64", ""},
      {"runge.diameter", T::real, "0.5", ""},
      {"runge.source", T::real_list, "0.1,0.5", "point source outside the subdomain"},
      {"runge.reg", T::real, "1e-14", ""},
      {"runge.control_K", T::integer, "32", ""},
      {"runge.control_point", T::real_list, "0.4,0.6", ""},
      {"runge.targets", T::real_list, "4,4,4,4", "value, d/dx, d/dy, Laplacian"},
      {"sweep.points", T::points, "0.3,0.3;0.7,0.3;0.5,0.5;0.3,0.7;0.7,0.7", ""},
      {"sweep.n_lambda", T::integer, "9", ""},
      {"sweep.basis_K", T::integer, "24", ""},
      {"sweep.root_tol", T::real, "1e-8", ""},
      {"verify.configs", T::integer, "5", ""},
      {"verify.size", T::real, "0.05", "size of the perturbation h"},
  };
  return schema;
}

Config::Config() {
  for (const auto& s : config_schema()) values_[s.key] = s.fallback;
}

const KeySpec& Config::spec(const std::string& key) const {
  const auto& schema = config_schema();
  auto it = std::find_if(schema.begin(), schema.end(), [&](const KeySpec& s) { return s.key == key; });
  if (it == schema.end()) throw ConfigError("<config>", 0, "unknown key '" + key + "'");
  return *it;
}

void Config::validate(const std::string& source, int line, const std::string& key, const std::string& value) const {
  const auto& schema = config_schema();
  auto it = std::find_if(schema.begin(), schema.end(), [&](const KeySpec& s) { return s.key == key; });
  if (it == schema.end()) throw ConfigError(source, line, "unknown key '" + key + "'");
  bool ok = true;
  switch (it->type) {
    case ValueType::integer: {
      long long v;
      std::uint64_t u;
      ok = key == "seed" ? parse_u64(value, u) : parse_int(value, v);
      break;
    }
    case ValueType::real: {
      double v;
      ok = parse_real(value, v);
      break;
    }
    case ValueType::text: ok = !trim(value).empty(); break;
    case ValueType::real_list: {
      std::vector<double> v;
      ok = parse_list(value, v);
      break;
    }
    case ValueType::points: {
      std::vector<std::vector<double>> v;
      ok = parse_points(value, v);
      break;
    }
  }
  if (!ok) throw ConfigError(source, line, "key '" + key + "' expects " + type_name(it->type) + ", got '" + value + "'");
}

void Config::check_ranges() const {
  for (const auto& s : config_schema()) {
    const std::string& k = s.key;
    if (s.type == ValueType::integer && k != "threads" && k != "seed" && get_int(k) < 1) {
      throw ConfigError("<config>", 0, "key '" + k + "' must be >= 1");
    }
    if (k == "threads" && get_int(k) < 0) throw ConfigError("<config>", 0, "key 'threads' must be >= 0");
    if (s.type == ValueType::real) {
      bool positive = ends_with(k, "tol") || ends_with(k, "reg") || ends_with(k, "cap") || ends_with(k, "size") ||
                      ends_with(k, "radius") || ends_with(k, "diameter") || ends_with(k, "width");
      if (positive && !(get_real(k) > 0)) throw ConfigError("<config>", 0, "key '" + k + "' must be > 0");
    }
  }
  if (get_int("grid.n") < 9) throw ConfigError("<config>", 0, "key 'grid.n' must be >= 9");
  auto one_of = [&](const std::string& k, std::initializer_list<const char*> allowed) {
    const std::string& v = get_text(k);
    std::string list;
    for (const char* a : allowed) {
      if (v == a) return;
      list += list.empty() ? a : std::string(" | ") + a;
    }
    throw ConfigError("<config>", 0, "key '" + k + "' must be one of " + list + ", got '" + v + "'");
  };
  one_of("base", {"zero", "newton"});
  one_of("q1.kind", {"zero", "power", "sine", "zq", "pquad"});
  one_of("q2.kind", {"same", "gauge", "zero", "power", "sine", "zq", "pquad"});
  one_of("q1.gamma", {"one", "bump", "cosx"});
  one_of("q2.gamma", {"one", "bump", "cosx"});
}

void Config::set(const std::string& key, const std::string& value) {
  validate("<override>", 0, key, value);
  values_[key] = trim(value);
  check_ranges();
}

Config Config::parse(std::istream& is, const std::string& source) {
  Config c;
  std::string raw;
  int line = 0;
  std::map<std::string, int> seen;
  while (std::getline(is, raw)) {
    ++line;
    std::string text = raw.substr(0, raw.find('#'));
    if (trim(text).empty()) continue;
    auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(source, line, "expected 'key = value'");
    std::string key = trim(text.substr(0, eq));
    std::string value = trim(text.substr(eq + 1));
    if (key.empty()) throw ConfigError(source, line, "empty key");
    c.validate(source, line, key, value);
    if (seen.count(key)) {
      throw ConfigError(source, line, "key '" + key + "' repeated (first on line " + std::to_string(seen[key]) + ")");
    }
    seen[key] = line;
    c.values_[key] = value;
  }
  try {
    c.check_ranges();
  } catch (const ConfigError& e) {
    throw ConfigError(source, 0, std::string(e.what()).substr(std::string("<config>: ").size()));
  }
  return c;
}

Config Config::parse_string(const std::string& text) {
  std::istringstream is(text);
  return parse(is);
}

Config Config::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(path, 0, "cannot open config file");
  return parse(is, path);
}

long long Config::get_int(const std::string& key) const {
  if (spec(key).type != ValueType::integer) throw ConfigError("<config>", 0, "key '" + key + "' is not an integer");
  long long v = 0;
  parse_int(values_.at(key), v);
  return v;
}

double Config::get_real(const std::string& key) const {
  if (spec(key).type != ValueType::real) throw ConfigError("<config>", 0, "key '" + key + "' is not a real");
  double v = 0;
  parse_real(values_.at(key), v);
  return v;
}

const std::string& Config::get_text(const std::string& key) const {
  spec(key);
  return values_.at(key);
}

std::vector<double> Config::get_list(const std::string& key) const {
  if (spec(key).type != ValueType::real_list) throw ConfigError("<config>", 0, "key '" + key + "' is not a list");
  std::vector<double> v;
  parse_list(values_.at(key), v);
  return v;
}

std::vector<std::vector<double>> Config::get_points(const std::string& key) const {
  if (spec(key).type != ValueType::points) throw ConfigError("<config>", 0, "key '" + key + "' is not a point list");
  std::vector<std::vector<double>> v;
  parse_points(values_.at(key), v);
  return v;
}

std::uint64_t Config::seed() const {
  std::uint64_t v = 0;
  parse_u64(values_.at("seed"), v);
  return v;
}

nlohmann::json Config::echo() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : values_) j[k] = v;
  return j;
}

}  // namespace bilab::harness
