#include "strigs/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace strigs::cli {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

struct KeySpec {
  const char* key;
  ordered_json fallback;  // null: derived during resolution
};

const std::vector<KeySpec>& schema() {
  static const std::vector<KeySpec> keys = {
      {"problem.kind", "quadratic"},
      {"problem.dim", 4},
      {"problem.p", nullptr},
      {"problem.A", nullptr},
      {"problem.b", nullptr},
      {"problem.A_csv", ""},
      {"problem.b_csv", ""},
      {"problem.threshold", 1.0},
      {"problem.center", nullptr},
      {"problem.smoothing", 1.0},
      {"problem.anchors", nullptr},
      {"eps.r", 1.0},
      {"eps.t0", 1.0},
      {"sigma.kind", "exp"},
      {"sigma.alpha", 0.5},
      {"sigma.scale", 1.0},
      {"sigma.power", 1.0},
      {"damping.delta", 2.0},
      {"damping.lambda", nullptr},
      {"damping.a", 3.0},
      {"damping.c", 4.0},
      {"damping.rho", 0.4},
      {"sim.h", nullptr},
      {"sim.T", 1e4},
      {"sim.t0", 1.0},
      {"sim.seed", 0},
      {"sim.kind", "strigs"},
      {"sim.x0", nullptr},
      {"sim.y0", nullptr},
      {"sim.checkpoints_per_decade", 64},
      {"sim.scheme", "semi_implicit"},
      {"experiment.n_paths", 64},
      {"experiment.fit_lo", nullptr},
      {"experiment.fit_hi", nullptr},
      {"experiment.metrics", ordered_json::array({"f_gap", "dist_sq", "y_norm", "energy"})},
      {"experiment.slack_f_gap", 0.15},
      {"experiment.slack_dist_sq", 0.15},
      {"experiment.slack_y_norm", 0.2},
      {"experiment.slack_energy", 0.15},
      {"experiment.antithetic", false},
      {"experiment.martingale", false},
      {"experiment.savd_alpha", 3.0},
      {"experiment.hb_mu", 1.0},
      {"experiment.gen_alpha", nullptr},
      {"experiment.gen_q", nullptr},
      {"experiment.gen_a", 1.0},
      {"experiment.gen_p", nullptr},
      {"output_dir", "out"},
      {"run_id", "run"},
  };
  return keys;
}

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::kValidation, msg); }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

ordered_json parse_value(const std::string& raw) {
  try {
    return ordered_json::parse(raw);
  } catch (const json::parse_error&) {
    const bool bare = std::all_of(raw.begin(), raw.end(), [](unsigned char ch) {
      return std::isalnum(ch) || ch == '_' || ch == '-' || ch == '.' || ch == '/';
    });
    if (bare && !raw.empty()) return raw;
    throw;
  }
}

bool known_key(const std::string& key) {
  return std::any_of(schema().begin(), schema().end(),
                     [&](const KeySpec& k) { return key == k.key; });
}

void assign(std::map<std::string, ordered_json>& user, const std::string& key,
            const std::string& raw, const std::string& where) {
  if (key.empty()) throw Error(ErrorCode::kParse, where + ": missing key");
  if (!known_key(key)) throw Error(ErrorCode::kParse, where + ": unknown key '" + key + "'");
  if (raw.empty()) throw Error(ErrorCode::kParse, where + ": missing value for '" + key + "'");
  try {
    user[key] = parse_value(raw);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, where + ": bad value for '" + key + "': " + e.what());
  }
}

// Typed access to the merged document.
class Doc {
 public:
  explicit Doc(ordered_json& values) : v_(values) {}

  bool is_null(const std::string& key) const { return v_.at(key).is_null(); }

  double num(const std::string& key) const {
    const auto& j = v_.at(key);
    if (!j.is_number()) invalid(key + " must be a number");
    const double x = j.get<double>();
    if (!std::isfinite(x)) invalid(key + " must be finite");
    return x;
  }

  long long integer(const std::string& key) const {
    const auto& j = v_.at(key);
    if (j.is_number_integer()) return j.get<long long>();
    if (j.is_number_float() && std::floor(j.get<double>()) == j.get<double>()) {
      return static_cast<long long>(j.get<double>());
    }
    invalid(key + " must be an integer");
  }

  std::uint64_t seed(const std::string& key) const {
    const auto& j = v_.at(key);
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer() && j.get<long long>() >= 0) {
      return static_cast<std::uint64_t>(j.get<long long>());
    }
    invalid(key + " must be a non-negative integer");
  }

  std::string str(const std::string& key) const {
    const auto& j = v_.at(key);
    if (!j.is_string()) invalid(key + " must be a string");
    return j.get<std::string>();
  }

  bool flag(const std::string& key) const {
    const auto& j = v_.at(key);
    if (!j.is_boolean()) invalid(key + " must be true or false");
    return j.get<bool>();
  }

  // A number broadcasts to a constant vector of length dim.
  Vec vec(const std::string& key, int dim) const {
    const auto& j = v_.at(key);
    if (j.is_number()) return Vec::Constant(dim, j.get<double>());
    Vec out = vec_any(key);
    if (out.size() != dim) {
      invalid(key + " has length " + std::to_string(out.size()) + ", expected " +
              std::to_string(dim));
    }
    return out;
  }

  Vec vec_any(const std::string& key) const {
    const auto& j = v_.at(key);
    if (!j.is_array()) invalid(key + " must be a list of numbers");
    Vec out(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (!j[i].is_number()) invalid(key + " must be a list of numbers");
      out[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return out;
  }

  Mat mat(const std::string& key) const {
    const auto& j = v_.at(key);
    if (!j.is_array() || j.empty() || !j[0].is_array()) {
      invalid(key + " must be a list of rows");
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Mat out(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      const auto& row = j[static_cast<std::size_t>(r)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
        invalid(key + " rows must have equal length");
      }
      for (Eigen::Index c = 0; c < cols; ++c) {
        const auto& cell = row[static_cast<std::size_t>(c)];
        if (!cell.is_number()) invalid(key + " entries must be numbers");
        out(r, c) = cell.get<double>();
      }
    }
    return out;
  }

  void set(const std::string& key, ordered_json value) { v_[key] = std::move(value); }

 private:
  ordered_json& v_;
};

ordered_json vec_json(const Vec& v) {
  ordered_json out = ordered_json::array();
  for (double x : v) out.push_back(x);
  return out;
}

ordered_json mat_json(const Mat& m) {
  ordered_json out = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vec_json(m.row(r).transpose()));
  return out;
}

std::vector<std::vector<double>> read_numeric_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) invalid("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    std::vector<double> row;
    double x;
    while (ss >> x) row.push_back(x);
    if (!ss.eof()) invalid(path + ": non-numeric entry in '" + line + "'");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) invalid(path + " holds no data");
  return rows;
}

ordered_json csv_matrix(const std::string& path) {
  ordered_json out = ordered_json::array();
  for (const auto& row : read_numeric_csv(path)) out.push_back(row);
  return out;
}

ordered_json csv_vector(const std::string& path) {
  ordered_json out = ordered_json::array();
  for (const auto& row : read_numeric_csv(path)) {
    for (double x : row) out.push_back(x);
  }
  return out;
}

void resolve_problem(Doc& d, RunConfig& cfg) {
  const std::string kind = d.str("problem.kind");
  if (kind == "least_squares") {
    if (!d.str("problem.A_csv").empty()) {
      d.set("problem.A", csv_matrix(d.str("problem.A_csv")));
      d.set("problem.A_csv", "");
    }
    if (!d.str("problem.b_csv").empty()) {
      d.set("problem.b", csv_vector(d.str("problem.b_csv")));
      d.set("problem.b_csv", "");
    }
    if (d.is_null("problem.A") || d.is_null("problem.b")) {
      invalid("least_squares needs problem.A and problem.b");
    }
    const Mat A = d.mat("problem.A");
    const Vec b = d.vec_any("problem.b");
    if (b.size() != A.rows()) invalid("problem.b length must equal the rows of problem.A");
    d.set("problem.dim", static_cast<long long>(A.cols()));
    cfg.problem = make_least_squares(A, b);
    return;
  }
  const long long dim = d.integer("problem.dim");
  if (dim < 1 || dim > 1000000) invalid("problem.dim must be positive");
  const int n = static_cast<int>(dim);
  if (kind == "quadratic") {
    if (d.is_null("problem.p")) d.set("problem.p", vec_json(Vec::Constant(n, 0.5)));
    const Vec p = d.vec("problem.p", n);
    d.set("problem.p", vec_json(p));
    cfg.problem = make_shifted_quadratic(p);
  } else if (kind == "huber") {
    if (d.is_null("problem.center")) d.set("problem.center", vec_json(Vec::Zero(n)));
    const Vec center = d.vec("problem.center", n);
    d.set("problem.center", vec_json(center));
    cfg.problem = make_smoothed_norm(HuberParams{d.num("problem.threshold"), center, n});
  } else if (kind == "lse") {
    if (d.is_null("problem.anchors")) d.set("problem.anchors", mat_json(Mat::Identity(n, n)));
    const Mat anchors = d.mat("problem.anchors");
    if (anchors.cols() != n) invalid("problem.anchors rows must have length problem.dim");
    cfg.problem = make_smoothed_norm(LogSumExpParams{d.num("problem.smoothing"), anchors});
  } else {
    invalid("problem.kind must be one of quadratic, least_squares, huber, lse (got '" + kind +
            "')");
  }
}

void resolve_schedules(Doc& d, RunConfig& cfg) {
  const double r = d.num("eps.r");
  if (!(r > 0.0 && r < 2.0)) invalid("eps.r must satisfy 0 < r < 2");
  const double t0 = d.num("eps.t0");
  if (!(t0 > 0.0)) invalid("eps.t0 must be positive");
  cfg.eps = EpsilonSchedule::power(r, t0);

  const int dim = cfg.problem.dim();
  const std::string kind = d.str("sigma.kind");
  if (kind == "zero") {
    cfg.sigma = DiffusionSchedule::zero(dim);
  } else if (kind == "exp") {
    cfg.sigma = exp_diffusion(r, d.num("sigma.alpha"), dim);
  } else if (kind == "power") {
    cfg.sigma = power_diffusion(d.num("sigma.scale"), d.num("sigma.power"), dim);
  } else {
    invalid("sigma.kind must be one of zero, exp, power (got '" + kind + "')");
  }

  DampingParams p;
  p.delta = d.num("damping.delta");
  p.a = d.num("damping.a");
  p.c = d.num("damping.c");
  p.rho = d.num("damping.rho");
  cfg.window = lambda_window(p.delta, p.a, p.c);
  if (d.is_null("damping.lambda")) {
    if (!cfg.window.feasible) {
      invalid("no admissible damping.lambda for delta=" + format_double(p.delta) +
              ", a=" + format_double(p.a) + ", c=" + format_double(p.c));
    }
    d.set("damping.lambda", 0.5 * (cfg.window.lo + cfg.window.hi));
  }
  p.lambda = d.num("damping.lambda");
  p.validate();
  p.t1 = feasible_t1(cfg.eps, p);
  cfg.damping = p;
}

void resolve_sim(Doc& d, RunConfig& cfg) {
  SimSettings& s = cfg.sim;
  const int dim = cfg.problem.dim();
  if (d.is_null("sim.h")) d.set("sim.h", std::min(0.01, 0.5 / cfg.problem.lipschitz()));
  s.h = d.num("sim.h");
  s.T = d.num("sim.T");
  s.t0 = d.num("sim.t0");
  if (!(s.h > 0.0)) invalid("sim.h must be positive");
  if (!(s.t0 > 0.0)) invalid("sim.t0 must be positive");
  if (!(s.T > s.t0)) invalid("sim.T must exceed sim.t0");
  if ((s.T - s.t0) / s.h > 1e9) invalid("sim.T / sim.h exceeds 1e9 steps");
  s.seed = d.seed("sim.seed");
  s.kind = parse_system_kind(d.str("sim.kind"));
  if (d.is_null("sim.x0")) d.set("sim.x0", vec_json(Vec::Zero(dim)));
  if (d.is_null("sim.y0")) d.set("sim.y0", vec_json(Vec::Zero(dim)));
  s.x0 = d.vec("sim.x0", dim);
  s.y0 = d.vec("sim.y0", dim);
  d.set("sim.x0", vec_json(s.x0));
  d.set("sim.y0", vec_json(s.y0));
  const long long per_decade = d.integer("sim.checkpoints_per_decade");
  if (per_decade < 1 || per_decade > 100000) invalid("sim.checkpoints_per_decade must be >= 1");
  s.checkpoints_per_decade = static_cast<int>(per_decade);
  s.scheme = parse_scheme(d.str("sim.scheme"));
}

void resolve_experiment(Doc& d, RunConfig& cfg) {
  ExperimentSettings& e = cfg.experiment;
  const long long n = d.integer("experiment.n_paths");
  if (n < 1 || n > 10000000) invalid("experiment.n_paths must be >= 1");
  e.n_paths = static_cast<int>(n);
  // Last two decades of the run, after t1.
  if (d.is_null("experiment.fit_hi")) d.set("experiment.fit_hi", cfg.sim.T);
  if (d.is_null("experiment.fit_lo")) {
    d.set("experiment.fit_lo", std::max(cfg.damping.t1, d.num("experiment.fit_hi") / 100.0));
  }
  e.fit_lo = d.num("experiment.fit_lo");
  e.fit_hi = d.num("experiment.fit_hi");
  if (!(e.fit_lo < e.fit_hi)) invalid("experiment.fit_lo must be below experiment.fit_hi");

  const auto& list = cfg.values.at("experiment.metrics");
  if (!list.is_array()) invalid("experiment.metrics must be a list of metric names");
  for (const auto& m : list) {
    if (!m.is_string()) invalid("experiment.metrics must be a list of metric names");
    try {
      e.metrics.push_back(parse_metric(m.get<std::string>()));
    } catch (const Error& err) {
      invalid(std::string("experiment.metrics: ") + err.what());
    }
  }
  for (Metric m : kAllMetrics) {
    const double slack = d.num(std::string("experiment.slack_") + to_string(m));
    if (slack < 0.0) invalid(std::string("experiment.slack_") + to_string(m) + " must be >= 0");
    e.slack[m] = slack;
  }
  e.antithetic = d.flag("experiment.antithetic");
  e.martingale = d.flag("experiment.martingale");
  if (e.antithetic && e.n_paths % 2 != 0) {
    invalid("experiment.antithetic needs an even experiment.n_paths");
  }
  e.savd_alpha = d.num("experiment.savd_alpha");
  e.hb_mu = d.num("experiment.hb_mu");
  // Defaults alias the generalized system to the main one.
  const double r = cfg.eps.r();
  if (d.is_null("experiment.gen_alpha")) d.set("experiment.gen_alpha", cfg.damping.delta);
  if (d.is_null("experiment.gen_q")) d.set("experiment.gen_q", 0.5 * r);
  if (d.is_null("experiment.gen_p")) d.set("experiment.gen_p", r);
  e.gen = StrigsGenParams{d.num("experiment.gen_alpha"), d.num("experiment.gen_q"),
                          d.num("experiment.gen_a"), d.num("experiment.gen_p")};
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& k : schema()) out.emplace_back(k.key);
  return out;
}

RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides,
                       const std::string& origin) {
  std::map<std::string, ordered_json> user;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    const std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::kParse, where + ": expected key = value");
    const std::string key = trim(body.substr(0, eq));
    if (!seen.insert(key).second) {
      throw Error(ErrorCode::kParse, where + ": duplicate key '" + key + "'");
    }
    assign(user, key, trim(body.substr(eq + 1)), where);
  }
  for (const std::string& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kParse, "--set " + ov + ": expected key=value");
    }
    assign(user, trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)), "--set " + ov);
  }

  RunConfig cfg;
  cfg.values = ordered_json::object();
  for (const auto& k : schema()) {
    const auto it = user.find(k.key);
    cfg.values[k.key] = it != user.end() ? it->second : k.fallback;
  }
  Doc d(cfg.values);
  try {
    resolve_problem(d, cfg);
    resolve_schedules(d, cfg);
    resolve_sim(d, cfg);
    resolve_experiment(d, cfg);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kValidation) throw;
    throw Error(ErrorCode::kValidation, e.what());
  }
  cfg.output_dir = d.str("output_dir");
  cfg.run_id = d.str("run_id");
  if (cfg.run_id.empty()) invalid("run_id must not be empty");
  return cfg;
}

RunConfig load_config(const std::optional<std::string>& path,
                      const std::vector<std::string>& overrides) {
  if (!path) return parse_config("", overrides);
  std::ifstream in(*path);
  if (!in) throw Error(ErrorCode::kParse, "cannot open config file " + *path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), overrides, *path);
}

std::string manifest_text(const RunConfig& config, const std::string& command) {
  std::ostringstream out;
  out << "# strigs " << kVersion << "\n";
  out << "# command: " << command << "\n";
  out << "# derived: t1 = " << format_double(config.damping.t1) << ", lambda window = ("
      << format_double(config.window.lo) << ", " << format_double(config.window.hi) << ")\n";
  for (const auto& [key, value] : config.values.items()) {
    out << key << " = " << value.dump() << "\n";
  }
  return out.str();
}

SystemSpec RunConfig::system() const {
  const double delta = damping.delta;
  auto params = [&]() -> DynamicsParams {
    switch (sim.kind) {
      case SystemKind::kStrigs: return StrigsParams{eps, delta};
      case SystemKind::kTrigs: return TrigsParams{eps, delta};
      case SystemKind::kSavd: return SavdParams{experiment.savd_alpha};
      case SystemKind::kAvdTikhonov: return AvdTikhonovParams{experiment.savd_alpha, eps};
      case SystemKind::kHeavyBall: return HeavyBallParams{experiment.hb_mu};
      case SystemKind::kSgf: return SgfParams{};
      case SystemKind::kStrigsGen: return experiment.gen;
    }
    return SgfParams{};
  };
  return SystemSpec{problem, params(), sigma};
}

std::optional<DampingParams> RunConfig::energy_damping() const {
  if (sim.kind == SystemKind::kStrigs || sim.kind == SystemKind::kTrigs) return damping;
  return std::nullopt;
}

SimState RunConfig::initial_state() const {
  SimState s;
  s.t = sim.t0;
  s.x = sim.x0;
  if (sim.kind != SystemKind::kSgf) s.y = sim.y0;
  return s;
}

std::vector<double> RunConfig::checkpoints() const {
  std::vector<double> c = log_checkpoints(sim.t0, sim.T, sim.checkpoints_per_decade);
  if (damping.t1 > sim.t0 && damping.t1 < sim.T) {
    c.insert(std::upper_bound(c.begin(), c.end(), damping.t1), damping.t1);
  }
  return c;
}

EnergyModel RunConfig::energy_model() const {
  const DiffusionSchedule s = system().noisy() ? sigma : DiffusionSchedule::zero(problem.dim());
  return EnergyModel{problem, eps, damping, s};
}

}  // namespace strigs::cli
