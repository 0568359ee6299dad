#include "owo/config.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <type_traits>

namespace owo {

namespace {

[[noreturn]] void fail(const std::string& name, int line,
                       const std::string& msg) {
  throw ConfigError(name + ":" + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Entry {
  std::string key;
  std::string value;
  int line = 0;
};

double parse_double(const Entry& en, const std::string& name) {
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(en.value.c_str(), &end);
  // ERANGE underflow still yields a usable subnormal; only overflow is fatal
  if (end == en.value.c_str() || *end != '\0' || !std::isfinite(v))
    fail(name, en.line, "expected a finite number for '" + en.key +
                            "', got '" + en.value + "'");
  return v;
}

long long parse_ll(const Entry& en, const std::string& name) {
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(en.value.c_str(), &end, 10);
  if (end == en.value.c_str() || *end != '\0' || errno == ERANGE)
    fail(name, en.line, "expected an integer for '" + en.key + "', got '" +
                            en.value + "'");
  return v;
}

int parse_int(const Entry& en, const std::string& name) {
  long long v = parse_ll(en, name);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    fail(name, en.line, "'" + en.key + "' out of int range");
  return static_cast<int>(v);
}

std::uint64_t parse_u64(const Entry& en, const std::string& name) {
  if (!en.value.empty() && en.value[0] == '-')
    fail(name, en.line, "'" + en.key + "' must be nonnegative");
  errno = 0;
  char* end = nullptr;
  unsigned long long v = std::strtoull(en.value.c_str(), &end, 10);
  if (end == en.value.c_str() || *end != '\0' || errno == ERANGE)
    fail(name, en.line, "expected an unsigned integer for '" + en.key +
                            "', got '" + en.value + "'");
  return static_cast<std::uint64_t>(v);
}

bool parse_bool(const Entry& en, const std::string& name) {
  if (en.value == "true") return true;
  if (en.value == "false") return false;
  fail(name, en.line,
       "expected true or false for '" + en.key + "', got '" + en.value + "'");
}

std::vector<std::string> split_list(const Entry& en, const std::string& name) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(en.value);
  while (std::getline(ss, cur, ',')) out.push_back(trim(cur));
  if (out.empty() || std::any_of(out.begin(), out.end(),
                                 [](const std::string& s) { return s.empty(); }))
    fail(name, en.line, "malformed list for '" + en.key + "'");
  return out;
}

template <typename T, typename F>
std::vector<T> parse_list(const Entry& en, const std::string& name, F scalar) {
  std::vector<T> out;
  for (const std::string& item : split_list(en, name))
    out.push_back(scalar(Entry{en.key, item, en.line}, name));
  return out;
}

Regime parse_regime(const Entry& en, const std::string& name) {
  if (en.value == "stochastic") return Regime::stochastic;
  if (en.value == "adversarial") return Regime::adversarial;
  fail(name, en.line, "'" + en.key + "' must be stochastic or adversarial");
}

// unset optionals print and parse as "auto"
std::optional<double> parse_opt_double(const Entry& en,
                                       const std::string& name) {
  if (en.value == "auto") return std::nullopt;
  return parse_double(en, name);
}

// env.user<k>.<field>; returns false when the key is not of that shape
bool parse_user_key(const std::string& key, int& k, std::string& field) {
  const std::string prefix = "env.user";
  if (key.compare(0, prefix.size(), prefix) != 0) return false;
  std::size_t p = prefix.size();
  std::size_t dot = key.find('.', p);
  if (dot == std::string::npos || dot == p) return false;
  for (std::size_t i = p; i < dot; ++i)
    if (!std::isdigit(static_cast<unsigned char>(key[i]))) return false;
  k = std::atoi(key.substr(p, dot - p).c_str());
  field = key.substr(dot + 1);
  return true;
}

void apply_user_field(UserWaveConfig& u, const std::string& field,
                      const Entry& en, const std::string& name) {
  if (field == "amp_mean")
    u.amp_mean = parse_double(en, name);
  else if (field == "amp_std")
    u.amp_std = parse_double(en, name);
  else if (field == "freq_mean")
    u.freq_mean = parse_double(en, name);
  else if (field == "freq_std")
    u.freq_std = parse_double(en, name);
  else if (field == "phase_mean")
    u.phase_mean = parse_double(en, name);
  else if (field == "phase_std")
    u.phase_std = parse_double(en, name);
  else if (field == "noise_mean")
    u.noise_mean = parse_double(en, name);
  else if (field == "noise_std")
    u.noise_std = parse_double(en, name);
  else if (field == "cosine")
    u.cosine = parse_bool(en, name);
  else if (field == "seed_offset")
    u.seed_offset = parse_u64(en, name);
  else
    fail(name, en.line, "unknown key '" + en.key + "'");
}

const char* kVersion = "1";
const char* kTraceSchema = "owo.trace.v1";
const char* kReportSchema = "owo.report.v1";

void check_schema(const Entry& en, const std::string& name,
                  const char* expected) {
  if (en.value != expected)
    fail(name, en.line, "'" + en.key + "' must be " + expected +
                            " for this build, got '" + en.value + "'");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& name) {
  std::vector<Entry> entries;
  std::set<std::string> seen;
  {
    std::stringstream ss(text);
    std::string raw;
    int line = 0;
    while (std::getline(ss, raw)) {
      ++line;
      std::string s = trim(raw);
      if (s.empty() || s[0] == '#') continue;
      std::size_t eq = s.find('=');
      if (eq == std::string::npos)
        fail(name, line, "expected key = value, got '" + s + "'");
      Entry en{trim(s.substr(0, eq)), trim(s.substr(eq + 1)), line};
      if (en.key.empty()) fail(name, line, "missing key before '='");
      if (en.value.empty()) fail(name, line, "missing value for '" + en.key + "'");
      if (!seen.insert(en.key).second)
        fail(name, line, "duplicate key '" + en.key + "'");
      entries.push_back(std::move(en));
    }
  }

  ExperimentConfig cfg;

  // user overrides are applied second so env.num_users can size the list
  // regardless of ordering
  std::vector<const Entry*> user_entries;

  for (const Entry& en : entries) {
    const std::string& k = en.key;
    if (k == "version")
      check_schema(en, name, kVersion);
    else if (k == "trace_schema")
      check_schema(en, name, kTraceSchema);
    else if (k == "report_schema")
      check_schema(en, name, kReportSchema);
    else if (k == "algorithm") {
      if (en.value != "owo_fmtl" && en.value != "srl" && en.value != "cws")
        fail(name, en.line, "algorithm must be owo_fmtl, srl, or cws");
      cfg.algorithm = en.value;
    } else if (k == "fairness.alpha")
      cfg.alpha = parse_double(en, name);
    else if (k == "fairness.u_min")
      cfg.u_min = parse_double(en, name);
    else if (k == "fairness.u_max")
      cfg.u_max = parse_opt_double(en, name);
    else if (k == "fairness.loss_cap")
      cfg.loss_cap = parse_opt_double(en, name);
    else if (k == "env.regime")
      cfg.env.regime = parse_regime(en, name);
    else if (k == "env.num_users")
      cfg.env.num_users = parse_int(en, name);
    else if (k == "env.m")
      cfg.env.m = parse_int(en, name);
    else if (k == "env.rounds")
      cfg.env.rounds = parse_int(en, name);
    else if (k == "env.samples_per_slot")
      cfg.env.samples_per_slot = parse_int(en, name);
    else if (k == "env.feature_dim")
      cfg.env.feature_dim = parse_int(en, name);
    else if (k == "env.frozen")
      cfg.env.frozen = parse_bool(en, name);
    else if (k == "env.trunc_sigmas")
      cfg.env.trunc_sigmas = parse_double(en, name);
    else if (k == "env.seed")
      cfg.env.seed = parse_u64(en, name);
    else if (k == "schedule.g_theta")
      cfg.g_theta = parse_opt_double(en, name);
    else if (k == "schedule.d_star")
      cfg.d_star = parse_opt_double(en, name);
    else if (k == "schedule.gamma_exponent")
      cfg.gamma_exponent = parse_double(en, name);
    else if (k == "engine.update_order") {
      if (en.value != "dual_then_primal" && en.value != "primal_then_dual")
        fail(name, en.line,
             "engine.update_order must be dual_then_primal or primal_then_dual");
      cfg.update_order = en.value;
    } else if (k == "engine.dual_warm_start")
      cfg.dual_warm_start = parse_bool(en, name);
    else if (k == "solver.tolerance")
      cfg.solver.tolerance = parse_double(en, name);
    else if (k == "solver.max_iterations")
      cfg.solver.max_iterations = parse_ll(en, name);
    else if (k == "solver.grid_resolution")
      cfg.solver.grid_resolution = parse_int(en, name);
    else if (k == "solver.restarts")
      cfg.solver.restarts = parse_int(en, name);
    else if (k == "cws.weights") {
      if (en.value == "auto")
        cfg.cws_weights.clear();
      else
        cfg.cws_weights = parse_list<double>(en, name, parse_double);
    } else if (k == "cws.outer_loop")
      cfg.cws_outer_loop = parse_bool(en, name);
    else if (k == "sweep.m")
      cfg.sweep_m = parse_list<int>(en, name, parse_int);
    else if (k == "sweep.alpha")
      cfg.sweep_alpha = parse_list<double>(en, name, parse_double);
    else if (k == "sweep.regimes") {
      cfg.sweep_regimes.clear();
      for (const std::string& r : split_list(en, name)) {
        parse_regime(Entry{en.key, r, en.line}, name);  // validates
        cfg.sweep_regimes.push_back(r);
      }
    } else if (k == "sweep.seeds")
      cfg.sweep_seeds = parse_list<std::uint64_t>(en, name, parse_u64);
    else if (k == "out.dir")
      cfg.out_dir = en.value;
    else {
      int uk;
      std::string field;
      if (parse_user_key(k, uk, field))
        user_entries.push_back(&en);
      else
        fail(name, en.line, "unknown key '" + k + "'");
    }
  }

  if (!user_entries.empty()) {
    if (cfg.env.num_users < 1)
      fail(name, user_entries.front()->line,
           "user overrides require env.num_users >= 1");
    EnvConfig presets;  // empty users, preset cycling
    presets.num_users = cfg.env.num_users;
    cfg.env.users.clear();
    for (int k = 0; k < cfg.env.num_users; ++k)
      cfg.env.users.push_back(presets.user(k));
    for (const Entry* en : user_entries) {
      int uk;
      std::string field;
      parse_user_key(en->key, uk, field);
      if (uk >= cfg.env.num_users)
        fail(name, en->line, "user index " + std::to_string(uk) +
                                 " out of range (env.num_users = " +
                                 std::to_string(cfg.env.num_users) + ")");
      apply_user_field(cfg.env.users[uk], field, *en, name);
    }
  }

  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

namespace {

double default_g_theta(const FairnessSpec& spec, const LossBounds& lb) {
  double sum = 0.0;
  for (double g : lb.user_grad_sup) sum += g;
  return std::pow(spec.u_min, -spec.alpha) * sum;
}

}  // namespace

RunSetup resolve(const ExperimentConfig& cfg) {
  RunSetup rs;
  rs.env = cfg.env;
  rs.env.validate();

  const LossBounds lb = loss_bounds(rs.env);

  FairnessSpec spec;
  spec.alpha = cfg.alpha;
  spec.u_min = cfg.u_min;
  spec.u_max = cfg.u_max.value_or(cfg.u_min + lb.loss_sup);
  spec.num_users = rs.env.num_users;
  spec.validate();

  EngineConfig ec;
  ec.spec = spec;
  ec.loss_cap = cfg.loss_cap.value_or(spec.u_max);
  ec.theta_dom = BoxDomain::cube(-1.0, 1.0, rs.env.feature_dim);
  ec.x_dom = ec.theta_dom;
  ec.schedule = make_schedule(
      spec, ec.theta_dom, cfg.d_star.value_or(ec.theta_dom.diameter()),
      cfg.g_theta.value_or(default_g_theta(spec, lb)), rs.env.m,
      cfg.gamma_exponent);
  ec.solver = cfg.solver;
  ec.solver.validate();
  ec.rounds = rs.env.rounds;
  ec.policy.order = cfg.update_order == "primal_then_dual"
                        ? UpdateOrder::primal_then_dual
                        : UpdateOrder::dual_then_primal;
  ec.policy.dual_warm_start = cfg.dual_warm_start;
  rs.engine = ec;

  rs.algorithm = cfg.algorithm;
  if (cfg.algorithm == "srl") {
    rs.baseline.kind = BaselineKind::srl;
  } else if (cfg.algorithm == "cws") {
    rs.baseline.kind = BaselineKind::cws;
    rs.baseline.cws_outer_loop = cfg.cws_outer_loop;
    if (cfg.cws_weights.empty()) {
      double w = std::clamp(-1.0 / spec.num_users, spec.dual_lower(),
                            spec.dual_upper());
      rs.baseline.cws_weights.assign(spec.num_users, w);
    } else {
      rs.baseline.cws_weights = cfg.cws_weights;
    }
  } else if (cfg.algorithm != "owo_fmtl") {
    throw ConfigError("algorithm must be owo_fmtl, srl, or cws, got '" +
                      cfg.algorithm + "'");
  }
  return rs;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(std::optional<double> v) { return v ? fmt(*v) : "auto"; }

std::string fmt(bool v) { return v ? "true" : "false"; }

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_same_v<T, double>)
      out += fmt(v[i]);
    else if constexpr (std::is_same_v<T, std::string>)
      out += v[i];
    else
      out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace

std::string manifest_text(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "# experiment manifest; parses back as a config\n";
  os << "version = " << kVersion << "\n";
  os << "trace_schema = " << kTraceSchema << "\n";
  os << "report_schema = " << kReportSchema << "\n";
  os << "algorithm = " << cfg.algorithm << "\n";
  os << "fairness.alpha = " << fmt(cfg.alpha) << "\n";
  os << "fairness.u_min = " << fmt(cfg.u_min) << "\n";
  os << "fairness.u_max = " << fmt(cfg.u_max) << "\n";
  os << "fairness.loss_cap = " << fmt(cfg.loss_cap) << "\n";
  os << "env.regime = "
     << (cfg.env.regime == Regime::adversarial ? "adversarial" : "stochastic")
     << "\n";
  os << "env.num_users = " << cfg.env.num_users << "\n";
  os << "env.m = " << cfg.env.m << "\n";
  os << "env.rounds = " << cfg.env.rounds << "\n";
  os << "env.samples_per_slot = " << cfg.env.samples_per_slot << "\n";
  os << "env.feature_dim = " << cfg.env.feature_dim << "\n";
  os << "env.frozen = " << fmt(cfg.env.frozen) << "\n";
  os << "env.trunc_sigmas = " << fmt(cfg.env.trunc_sigmas) << "\n";
  os << "env.seed = " << cfg.env.seed << "\n";
  for (std::size_t k = 0; k < cfg.env.users.size(); ++k) {
    const UserWaveConfig& u = cfg.env.users[k];
    const std::string p = "env.user" + std::to_string(k) + ".";
    os << p << "amp_mean = " << fmt(u.amp_mean) << "\n";
    os << p << "amp_std = " << fmt(u.amp_std) << "\n";
    os << p << "freq_mean = " << fmt(u.freq_mean) << "\n";
    os << p << "freq_std = " << fmt(u.freq_std) << "\n";
    os << p << "phase_mean = " << fmt(u.phase_mean) << "\n";
    os << p << "phase_std = " << fmt(u.phase_std) << "\n";
    os << p << "noise_mean = " << fmt(u.noise_mean) << "\n";
    os << p << "noise_std = " << fmt(u.noise_std) << "\n";
    os << p << "cosine = " << fmt(u.cosine) << "\n";
    os << p << "seed_offset = " << u.seed_offset << "\n";
  }
  os << "schedule.g_theta = " << fmt(cfg.g_theta) << "\n";
  os << "schedule.d_star = " << fmt(cfg.d_star) << "\n";
  os << "schedule.gamma_exponent = " << fmt(cfg.gamma_exponent) << "\n";
  os << "engine.update_order = " << cfg.update_order << "\n";
  os << "engine.dual_warm_start = " << fmt(cfg.dual_warm_start) << "\n";
  os << "solver.tolerance = " << fmt(cfg.solver.tolerance) << "\n";
  os << "solver.max_iterations = " << cfg.solver.max_iterations << "\n";
  os << "solver.grid_resolution = " << cfg.solver.grid_resolution << "\n";
  os << "solver.restarts = " << cfg.solver.restarts << "\n";
  os << "cws.weights = "
     << (cfg.cws_weights.empty() ? std::string("auto") : join(cfg.cws_weights))
     << "\n";
  os << "cws.outer_loop = " << fmt(cfg.cws_outer_loop) << "\n";
  os << "sweep.m = " << join(cfg.sweep_m) << "\n";
  os << "sweep.alpha = " << join(cfg.sweep_alpha) << "\n";
  os << "sweep.regimes = " << join(cfg.sweep_regimes) << "\n";
  os << "sweep.seeds = " << join(cfg.sweep_seeds) << "\n";
  os << "out.dir = " << cfg.out_dir << "\n";
  return os.str();
}

}  // namespace owo
