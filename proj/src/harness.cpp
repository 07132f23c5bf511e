#include "greenpot/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>

#include "greenpot/errors.hpp"
#include "greenpot/parallel.hpp"

namespace greenpot {

namespace {

struct Outcome {
  bool passed = true;
  Json result = Json::object();
  CsvTable csv{{"empty"}};
  std::string message;
};

using Job = std::function<Outcome()>;

// Typed, validated access to the merged option object.
class Options {
 public:
  explicit Options(const Json& j) : j_(j) {}

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  double number(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) return parse_number(key, v.get<std::string>());
    throw UsageError("option '" + key + "' must be a number");
  }

  long integer(const std::string& key, long fallback) const {
    const double v = number(key, static_cast<double>(fallback));
    if (v != std::floor(v) || std::abs(v) > 9e15) throw UsageError("option '" + key + "' must be an integer");
    return static_cast<long>(v);
  }

  std::uint64_t seed() const {
    if (!has("seed")) return 0;
    const Json& v = j_.at("seed");
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
    if (v.is_string()) {
      try {
        std::size_t used = 0;
        const auto s = std::stoull(v.get<std::string>(), &used);
        if (used == v.get<std::string>().size()) return s;
      } catch (const std::exception&) {
      }
    }
    throw UsageError("option 'seed' must be a nonnegative integer");
  }

  std::vector<double> list(const std::string& key, std::vector<double> fallback) const {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    std::vector<double> out;
    if (v.is_array()) {
      for (const auto& e : v) {
        if (!e.is_number()) throw UsageError("option '" + key + "' must be a list of numbers");
        out.push_back(e.get<double>());
      }
    } else if (v.is_string()) {
      std::string s = v.get<std::string>();
      std::size_t start = 0;
      while (start <= s.size()) {
        const auto end = s.find(',', start);
        out.push_back(parse_number(key, s.substr(start, end - start)));
        if (end == std::string::npos) break;
        start = end + 1;
      }
    } else if (v.is_number()) {
      out.push_back(v.get<double>());
    } else {
      throw UsageError("option '" + key + "' must be a list of numbers");
    }
    return out;
  }

  std::string text(const std::string& key, std::string fallback) const {
    if (!has(key)) return fallback;
    if (!j_.at(key).is_string()) throw UsageError("option '" + key + "' must be a string");
    return j_.at(key).get<std::string>();
  }

  // Object-valued option; strings are parsed as JSON or read from a file.
  Json object(const std::string& key) const {
    const Json& v = j_.at(key);
    if (!v.is_string()) return v;
    const std::string s = v.get<std::string>();
    try {
      if (!s.empty() && (s.front() == '{' || s.front() == '[')) return Json::parse(s);
      std::ifstream in(s);
      if (!in) throw UsageError("option '" + key + "': cannot open " + s);
      return Json::parse(in);
    } catch (const Json::exception& e) {
      throw UsageError("option '" + key + "': " + e.what());
    }
  }

 private:
  static double parse_number(const std::string& key, const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (s.find_first_not_of(" \t", used) == std::string::npos) return v;
    } catch (const std::exception&) {
    }
    throw UsageError("option '" + key + "': '" + s + "' is not a number");
  }

  const Json& j_;
};

// Module preconditions raise std::invalid_argument; during validation they
// are usage errors.
template <class F>
auto checked(F&& f) {
  try {
    return f();
  } catch (const UsageError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  } catch (const Json::exception& e) {
    throw UsageError(e.what());
  }
}

int require_dim(const Options& o, int fallback, int lo, int hi) {
  const long d = o.integer("d", fallback);
  if (d < lo || d > hi) throw UsageError("option 'd' must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<int>(d);
}

long require_positive(const Options& o, const std::string& key, long fallback) {
  const long v = o.integer(key, fallback);
  if (v < 1) throw UsageError("option '" + key + "' must be positive");
  return v;
}

std::vector<double> require_point(const Options& o, const std::string& key, std::vector<double> fallback, int d) {
  auto p = o.list(key, std::move(fallback));
  if (static_cast<int>(p.size()) != d) throw UsageError("option '" + key + "' must have " + std::to_string(d) + " coordinates");
  return p;
}

IntPoint to_int_point(const std::vector<double>& p, const std::string& key) {
  IntPoint z;
  for (double v : p) {
    if (v != std::floor(v)) throw UsageError("option '" + key + "' must be an integer point");
    z.push_back(static_cast<long>(v));
  }
  return z;
}

// Lattice set from "points" or from "domain" + "n".
LatticeSet lattice_from(const Options& o, int d) {
  if (o.has("points")) {
    return checked([&] {
      Json pts = o.object("points");
      if (pts.is_object()) pts = pts.at("points");
      return LatticeSet(d, pts.get<std::vector<IntPoint>>());
    });
  }
  if (o.has("domain")) {
    return checked([&] {
      const DomainSpec domain = domain_from_json(o.object("domain"));
      if (domain.d != d) throw UsageError("domain dimension differs from 'd'");
      return grid_points(domain, GridSpec(d, require_positive(o, "n", 2L * d)));
    });
  }
  // Default: a small box of side 5.
  std::vector<IntPoint> pts;
  IntPoint z(static_cast<std::size_t>(d), -2);
  while (true) {
    pts.push_back(z);
    std::size_t i = 0;
    while (i < z.size() && ++z[i] > 2) z[i++] = -2;
    if (i == z.size()) break;
  }
  return LatticeSet(d, std::move(pts));
}

DomainSpec domain_or(const Options& o, int d, const DomainSpec& fallback) {
  if (!o.has("domain")) return fallback;
  return checked([&] {
    DomainSpec domain = domain_from_json(o.object("domain"));
    if (domain.d != d) throw UsageError("domain dimension differs from 'd'");
    return domain;
  });
}

Transform transform_from(const Options& o, int d) {
  Transform t = PowerTransform{1.0};
  if (o.has("transform")) {
    t = checked([&] { return transform_from_json(o.object("transform")); });
  } else if (o.has("alpha")) {
    t = ExpTransform{o.number("alpha", 1.0)};
  } else if (o.has("beta")) {
    t = PowerTransform{o.number("beta", 1.0)};
  }
  checked([&] {
    validate_operator_transform(d, t);
    return 0;
  });
  return t;
}

std::string point_text(std::span<const long> p) {
  std::string s;
  for (std::size_t i = 0; i < p.size(); ++i) s += (i ? " " : "") + std::to_string(p[i]);
  return s;
}

// ---- experiments --------------------------------------------------------

Job lattice_green_job(const Options& o) {
  const int d = require_dim(o, 3, 2, 6);
  const long max = require_positive(o, "max", 16);
  const double tol = o.number("tol", 0.05);
  return [=] {
    Outcome out;
    out.csv = CsvTable({"d", "x", "norm", "value", "asymptote", "ratio"});
    Json rows = Json::array();
    for (int diagonal = 0; diagonal < 2; ++diagonal) {
      for (long k = 0; k <= max; ++k) {
        IntPoint x(static_cast<std::size_t>(d), 0);
        if (diagonal) {
          std::fill(x.begin(), x.end(), k);
        } else {
          x[0] = k;
        }
        if (diagonal && k == 0) continue;
        double norm = 0.0;
        for (long v : x) norm += static_cast<double>(v * v);
        norm = std::sqrt(norm);
        double value = 0.0, asym = 0.0, ratio = std::nan("");
        if (d == 2) {
          value = potential_kernel_2d(x);
          asym = k > 0 ? potential_kernel_asymptote(norm) : std::nan("");
          ratio = value - asym;
        } else {
          value = lattice_green_fourier(d, x);
          asym = k > 0 ? d * green_constant(d) * std::pow(norm, 2.0 - d) : std::nan("");
          ratio = value / asym;
        }
        // checked at |x| >= 10: ratio within tol of 1 (d >= 3) or a - asymptote within tol (d = 2)
        if (norm >= 10.0) out.passed = out.passed && std::abs(d == 2 ? ratio : ratio - 1.0) <= tol;
        rows.push_back(Json{{"x", x}, {"norm", norm}, {"value", value}, {"asymptote", number(asym)},
                            {d == 2 ? "difference" : "ratio", number(ratio)}});
        out.csv.add_row({cell(d), cell(point_text(x)), cell(norm), cell(value), cell(asym), cell(ratio)});
      }
    }
    out.result = Json{{"d", d}, {"rows", rows}, {"tol", tol}};
    if (d >= 3) out.result["decay_constant"] = lattice_decay_constant(d);
    return out;
  };
}

Job killed_green_job(const Options& o) {
  const int d = require_dim(o, 2, 1, 6);
  const LatticeSet set = lattice_from(o, d);
  if (set.empty()) throw UsageError("lattice set is empty");
  if (set.size() > 5000) throw UsageError("killed-green reports at most 5000 points");
  const double tol = o.number("tol", 1e-8);
  return [=] {
    Outcome out;
    const KilledGreenMatrix m = killed_green_matrix(set);
    const PotentialReport report = is_inverse_m_matrix(m.entries, tol);
    out.passed = report.is_potential;
    out.result = Json{{"matrix", to_json(m)}, {"potential", to_json(report)}};
    out.csv = CsvTable({"i", "j", "x", "y", "entry"});
    for (std::size_t i = 0; i < set.size(); ++i) {
      for (std::size_t j = 0; j < set.size(); ++j) {
        out.csv.add_row({cell(i), cell(j), cell(point_text(set[i])), cell(point_text(set[j])),
                         cell(m.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))});
      }
    }
    return out;
  };
}

Eigen::MatrixXd load_matrix_option(const Options& o) {
  if (!o.has("matrix")) throw UsageError("check-potential needs --matrix");
  return checked([&] {
    const std::string path = o.text("matrix", "");
    Eigen::MatrixXd m = load_matrix(path);
    if ((m.array() < 0.0).any()) throw UsageError("matrix must be entrywise nonnegative");
    return m;
  });
}

Job check_potential_job(const Options& o) {
  const Eigen::MatrixXd u = load_matrix_option(o);
  const double tol = o.number("tol", 1e-8);
  const long trials = require_positive(o, "trials", 10000);
  const std::uint64_t seed = o.seed();
  return [=] {
    Outcome out;
    const PotentialReport report = classify_potential(u, tol, trials, seed);
    out.passed = report.is_potential;
    out.result = to_json(report);
    out.csv = CsvTable({"nonsingular", "max_offdiag_of_inverse", "min_row_sum_of_inverse", "is_potential", "reliable",
                        "condition_estimate", "cmp_inequality_min", "trials", "seed"});
    out.csv.add_row({cell(report.nonsingular ? "true" : "false"), cell(report.max_offdiag_of_inverse),
                     cell(report.min_row_sum_of_inverse), cell(report.is_potential ? "true" : "false"),
                     cell(report.reliable ? "true" : "false"), cell(report.condition_estimate),
                     cell(*report.cmp_inequality_min), cell(trials), cell(std::to_string(seed))});
    return out;
  };
}

struct Population {
  int d;
  long count;
  long min_size;
  long max_size;
  std::uint64_t seed;
};

Population population_from(const Options& o) {
  Population p{require_dim(o, 3, 2, 3), require_positive(o, "count", 200), require_positive(o, "min_size", 2),
               require_positive(o, "max_size", 40), o.seed()};
  if (p.max_size < p.min_size || p.max_size > 5000) throw UsageError("need min_size <= max_size <= 5000");
  return p;
}

KilledGreenMatrix member(const Population& p, long k) {
  return random_potential(p.d, static_cast<std::size_t>(p.min_size), static_cast<std::size_t>(p.max_size),
                          derive_seed(p.seed, static_cast<std::uint64_t>(k)));
}

Job sweep_job(const Options& o, bool exponential) {
  const Population pop = population_from(o);
  const std::string key = exponential ? "alphas" : "betas";
  const auto params = o.list(key, exponential ? std::vector<double>{0.1, 0.5, 1.0} : std::vector<double>{1.0, 1.5, 2.0, 3.7});
  if (params.empty()) throw UsageError("option '" + key + "' is empty");
  for (double v : params) {
    if (exponential ? !(v > 0.0) : !(v >= 1.0)) throw UsageError(exponential ? "alphas must be positive" : "betas must be >= 1");
  }
  const double tol = o.number("tol", 1e-8);
  return [=] {
    Outcome out;
    std::vector<long> passed(params.size(), 0), unreliable(params.size(), 0);
    for (long k = 0; k < pop.count; ++k) {
      const Eigen::MatrixXd u = member(pop, k).entries;
      for (std::size_t i = 0; i < params.size(); ++i) {
        const Eigen::MatrixXd t = exponential ? hadamard_exp(u, params[i]) : hadamard_power(u, params[i]);
        const PotentialReport r = is_inverse_m_matrix(t, tol);
        passed[i] += r.is_potential ? 1 : 0;
        unreliable[i] += r.reliable ? 0 : 1;
      }
    }
    out.csv = CsvTable({exponential ? "alpha" : "beta", "passed", "unreliable", "total", "pass_rate"});
    Json rows = Json::array();
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double rate = static_cast<double>(passed[i]) / static_cast<double>(pop.count);
      out.passed = out.passed && passed[i] == pop.count;
      rows.push_back(Json{{exponential ? "alpha" : "beta", params[i]},
                          {"passed", passed[i]},
                          {"unreliable", unreliable[i]},
                          {"total", pop.count},
                          {"pass_rate", rate}});
      out.csv.add_row({cell(params[i]), cell(passed[i]), cell(unreliable[i]), cell(pop.count), cell(rate)});
    }
    out.result = Json{{"d", pop.d}, {"count", pop.count}, {"seed", pop.seed}, {"tol", tol}, {"rows", rows}};
    return out;
  };
}

Job cmp_random_job(const Options& o) {
  const Population pop = population_from(o);
  const long trials = require_positive(o, "trials", 10000);
  const double tol = o.number("tol", 1e-10);
  return [=] {
    Outcome out;
    out.csv = CsvTable({"index", "size", "cmp_min", "scale", "ok"});
    Json rows = Json::array();
    for (long k = 0; k < pop.count; ++k) {
      const KilledGreenMatrix m = member(pop, k);
      const CmpSample s = sample_cmp(m.entries, trials, derive_seed(pop.seed, static_cast<std::uint64_t>(k)));
      const double scale = m.entries.maxCoeff();
      const bool ok = s.min_value >= -tol * scale;
      out.passed = out.passed && ok;
      rows.push_back(Json{{"index", k}, {"size", m.set.size()}, {"cmp_min", s.min_value}, {"scale", scale}, {"ok", ok}});
      out.csv.add_row({cell(k), cell(m.set.size()), cell(s.min_value), cell(scale), cell(ok ? "true" : "false")});
    }
    out.result = Json{{"d", pop.d}, {"trials", trials}, {"seed", pop.seed}, {"tol", tol}, {"rows", rows}};
    return out;
  };
}

Job cmp_functional_job(const Options& o) {
  const int d = require_dim(o, 2, 2, 4);
  const DomainSpec domain = domain_or(o, d, make_ball(std::vector<double>(static_cast<std::size_t>(d), 0.0), 1.0));
  const GridSpec grid = checked([&] { return GridSpec(d, require_positive(o, "n", d == 2 ? 162 : 27)); });
  const Transform transform = transform_from(o, d);
  const long count = require_positive(o, "count", 20);
  const std::uint64_t seed = o.seed();
  const double tol = o.number("tol", 1e-8);
  return [=] {
    Outcome out;
    const auto op = DiscreteOperator::killed(domain, grid, transform);
    const auto [lo, hi] = bounding_box(domain);
    const double vol = std::pow(grid.spacing(), d) * static_cast<double>(op.points().size());
    out.csv = CsvTable({"index", "functional", "sup_norm", "bound", "ok"});
    Json rows = Json::array();
    for (long k = 0; k < count; ++k) {
      RngStream rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
      const double amplitude = std::exp(std::log(0.5) + rng.uniform() * std::log(400.0));
      const RandomBumps f = random_bumps(lo, hi, 4, amplitude, rng);
      const double value = cmp_functional(op, f);
      double sup = 0.0;
      for (const auto& z : op.points().points()) sup = std::max(sup, std::abs(f(grid.to_point(z))));
      const double bound = -tol * sup * sup * vol;
      const bool ok = value >= bound;
      out.passed = out.passed && ok;
      rows.push_back(Json{{"index", k}, {"functional", value}, {"sup_norm", sup}, {"bound", bound}, {"ok", ok}});
      out.csv.add_row({cell(k), cell(value), cell(sup), cell(bound), cell(ok ? "true" : "false")});
    }
    out.result = Json{{"domain", to_json(domain)}, {"n", grid.scale()}, {"points", op.points().size()},
                      {"transform", to_json(transform)}, {"seed", seed}, {"rows", rows}};
    return out;
  };
}

Outcome convergence_outcome(const ConvergenceReport& r, double rel_tol) {
  Outcome out;
  out.passed = r.errors_decrease() && r.final_rel_err() <= rel_tol;
  out.result = to_json(r);
  out.result["rel_tol"] = rel_tol;
  out.csv = to_csv(r);
  return out;
}

Job converge_disk_job(const Options& o) {
  const auto x = require_point(o, "x", {0.2, 0.0}, 2);
  const auto y = require_point(o, "y", {-0.3, 0.1}, 2);
  const double radius = o.number("radius", 1.0);
  const long m = require_positive(o, "m", 2);
  const long levels = require_positive(o, "levels", 4);
  const double rel_tol = o.number("rel_tol", 0.05);
  if (!(radius > 0.0)) throw UsageError("radius must be positive");
  if (std::hypot(x[0], x[1]) >= radius || std::hypot(y[0], y[1]) >= radius || x == y) {
    throw UsageError("x and y must be distinct points of the open disk");
  }
  return [=] { return convergence_outcome(converge_disk_green(radius, x, y, m, static_cast<int>(levels)), rel_tol); };
}

Job converge_free_job(const Options& o) {
  const int d = require_dim(o, 3, 3, 5);
  const double beta = o.number("beta", 1.0);
  checked([&] {
    validate_operator_transform(d, PowerTransform{beta});
    return 0;
  });
  const std::vector<double> origin(static_cast<std::size_t>(d), 0.0);
  const auto x = require_point(o, "x", origin, d);
  const auto center = require_point(o, "center", origin, d);
  const double r = o.number("r", 1.0);
  if (!(r > 0.0)) throw UsageError("r must be positive");
  const long m = require_positive(o, "m", d);
  const long levels = require_positive(o, "levels", 3);
  const double rel_tol = o.number("rel_tol", 0.03);
  return [=] {
    return convergence_outcome(converge_free_ball(d, beta, x, center, r, m, static_cast<int>(levels)), rel_tol);
  };
}

Job riesz_mc_job(const Options& o) {
  const int d = require_dim(o, 3, 3, 6);
  const double beta = o.number("beta", 2.0);
  checked([&] { return riesz_params(d, beta); });
  const std::vector<double> origin(static_cast<std::size_t>(d), 0.0);
  const auto x = require_point(o, "x", origin, d);
  const auto center = require_point(o, "center", origin, d);
  const double r = o.number("r", 1.0);
  RieszMcOptions mc;
  mc.time_step = o.number("time_step", 0.01);
  mc.horizon = o.number("horizon", 10.0);
  mc.trials = require_positive(o, "trials", 100000);
  mc.seed = o.seed();
  if (!(r > 0.0) || !(mc.time_step > 0.0) || !(mc.horizon > mc.time_step) || mc.trials < 2) {
    throw UsageError("need r > 0, 0 < time_step < horizon and trials >= 2");
  }
  return [=] {
    Outcome out;
    const KernelSpec spec(d, FreeSpace{}, PowerTransform{beta});
    const double oracle = ball_kernel_integral(spec, x, center, r);
    const McEstimate e = estimate_riesz_potential(d, beta, center, r, x, mc);
    const double allowed = 3.0 * e.std_error + *e.tail_bound;
    out.passed = std::abs(e.mean - oracle) <= allowed;
    const RieszParams p = riesz_params(d, beta);
    out.result = Json{{"estimate", to_json(e)}, {"oracle", oracle}, {"allowed", allowed},
                      {"alpha", p.alpha}, {"D", p.D}, {"time_step", mc.time_step}, {"horizon", mc.horizon}};
    out.csv = CsvTable({"mean", "stderr", "tail_bound", "oracle", "abs_err", "allowed", "trials"});
    out.csv.add_row({cell(e.mean), cell(e.std_error), cell(*e.tail_bound), cell(oracle), cell(std::abs(e.mean - oracle)),
                     cell(allowed), cell(e.trials)});
    return out;
  };
}

Job exit_mc_job(const Options& o) {
  const int d = require_dim(o, 2, 1, 6);
  const LatticeSet set = lattice_from(o, d);
  if (set.empty() || set.size() > 5000) throw UsageError("lattice set must have 1..5000 points");
  const IntPoint start = o.has("start") ? to_int_point(o.list("start", {}), "start") : set[set.size() / 2];
  if (!set.contains(start)) throw UsageError("start point is not in the set");
  const long trials = require_positive(o, "trials", 100000);
  if (trials < 2) throw UsageError("trials must be at least 2");
  const std::uint64_t seed = o.seed();
  return [=] {
    Outcome out;
    const KilledGreenMatrix m = killed_green_matrix(set);
    const VisitEstimate v = mean_visits(set, start, trials, seed);
    const auto row = static_cast<Eigen::Index>(*set.index_of(start));
    out.csv = CsvTable({"y", "mean_visits", "stderr", "exact", "ok"});
    Json rows = Json::array();
    long failures = 0;
    for (Eigen::Index j = 0; j < v.mean.size(); ++j) {
      const double exact = m.entries(row, j);
      const bool ok = std::abs(v.mean(j) - exact) <= 4.0 * v.std_error(j) + 1e-12;
      failures += ok ? 0 : 1;
      rows.push_back(Json{{"y", set[static_cast<std::size_t>(j)]}, {"mean", v.mean(j)}, {"stderr", v.std_error(j)},
                          {"exact", exact}, {"ok", ok}});
      out.csv.add_row({cell(point_text(set[static_cast<std::size_t>(j)])), cell(v.mean(j)), cell(v.std_error(j)),
                       cell(exact), cell(ok ? "true" : "false")});
    }
    // 4-sigma per entry; allow the expected handful of excursions on large sets
    const long allowed = static_cast<long>(std::floor(1e-3 * static_cast<double>(v.mean.size())));
    out.passed = failures <= allowed;
    out.result = Json{{"start", start}, {"trials", trials}, {"seed", seed}, {"failures", failures},
                      {"allowed_failures", allowed}, {"rows", rows}};
    return out;
  };
}

Job domain_grid_job(const Options& o) {
  const int d = require_dim(o, 2, 1, 6);
  const DomainSpec domain = domain_or(o, d, make_ball(std::vector<double>(static_cast<std::size_t>(d), 0.0), 1.0));
  const GridSpec grid = checked([&] { return GridSpec(d, require_positive(o, "n", 2L * d)); });
  return [=] {
    Outcome out;
    const LatticeSet inside = grid_points(domain, grid);
    const LatticeSet interior = interior_grid(domain, grid);
    const LatticeSet exterior = exterior_grid(domain, grid);
    bool sandwich = true;
    for (const auto& z : interior.points()) sandwich = sandwich && inside.contains(z);
    for (const auto& z : inside.points()) sandwich = sandwich && exterior.contains(z);
    out.passed = sandwich;
    out.result = Json{{"domain", to_json(domain)}, {"n", grid.scale()}, {"h", grid.spacing()},
                      {"grid", to_json(inside)}, {"interior", to_json(interior)}, {"exterior", to_json(exterior)},
                      {"sandwich", sandwich}};
    std::vector<std::string> header{"set"};
    for (int i = 0; i < d; ++i) header.push_back("z" + std::to_string(i + 1));
    for (int i = 0; i < d; ++i) header.push_back("x" + std::to_string(i + 1));
    out.csv = CsvTable(header);
    const std::pair<const char*, const LatticeSet*> sets[] = {
        {"grid", &inside}, {"interior", &interior}, {"exterior", &exterior}};
    for (const auto& [name, set] : sets) {
      for (const auto& z : set->points()) {
        std::vector<std::string> row{cell(name)};
        for (long v : z) row.push_back(cell(v));
        for (double v : grid.to_point(z)) row.push_back(cell(v));
        out.csv.add_row(std::move(row));
      }
    }
    return out;
  };
}

struct Experiment {
  std::vector<std::string> keys;
  std::function<Job(const Options&)> prepare;
};

const std::map<std::string, Experiment>& registry() {
  static const std::map<std::string, Experiment> experiments{
      {"lattice-green", {{"d", "max", "tol"}, lattice_green_job}},
      {"killed-green", {{"d", "points", "domain", "n", "tol"}, killed_green_job}},
      {"check-potential", {{"matrix", "tol", "trials"}, check_potential_job}},
      {"hadamard-sweep",
       {{"d", "betas", "count", "min_size", "max_size", "tol"}, [](const Options& o) { return sweep_job(o, false); }}},
      {"exp-sweep",
       {{"d", "alphas", "count", "min_size", "max_size", "tol"}, [](const Options& o) { return sweep_job(o, true); }}},
      {"cmp-random", {{"d", "count", "trials", "min_size", "max_size", "tol"}, cmp_random_job}},
      {"cmp-functional", {{"d", "domain", "n", "transform", "beta", "alpha", "count", "tol"}, cmp_functional_job}},
      {"converge-disk", {{"x", "y", "radius", "m", "levels", "rel_tol"}, converge_disk_job}},
      {"converge-free", {{"d", "beta", "x", "center", "r", "m", "levels", "rel_tol"}, converge_free_job}},
      {"riesz-mc", {{"d", "beta", "x", "center", "r", "time_step", "horizon", "trials"}, riesz_mc_job}},
      {"exit-mc", {{"d", "points", "domain", "n", "start", "trials"}, exit_mc_job}},
      {"domain-grid", {{"d", "domain", "n"}, domain_grid_job}},
  };
  return experiments;
}

std::string timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

std::vector<std::string> experiment_names() {
  std::vector<std::string> names;
  for (const auto& [name, _] : registry()) names.push_back(name);
  return names;
}

std::vector<std::string> experiment_options(const std::string& experiment) {
  const auto it = registry().find(experiment);
  if (it == registry().end()) throw UsageError("unknown experiment '" + experiment + "'");
  auto keys = it->second.keys;
  keys.push_back("seed");
  return keys;
}

Json merge_options(const Json& cli, const Json& file, bool force) {
  Json merged = force ? cli : file;
  for (const auto& [key, value] : (force ? file : cli).items()) merged[key] = value;
  return merged;
}

RunResult run(const ExperimentConfig& config) {
  RunResult result;
  Job job;
  try {
    const auto it = registry().find(config.experiment);
    if (it == registry().end()) throw UsageError("unknown experiment '" + config.experiment + "'");
    if (!config.options.is_object()) throw UsageError("options must be a JSON object");
    const auto allowed = experiment_options(config.experiment);
    for (const auto& [key, _] : config.options.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        throw UsageError("option '" + key + "' does not apply to " + config.experiment);
      }
    }
    job = checked([&] { return it->second.prepare(Options(config.options)); });
  } catch (const std::exception& e) {
    result.exit_code = kExitUsage;
    result.message = e.what();
    return result;
  }

  const auto started = std::chrono::steady_clock::now();
  Outcome outcome;
  try {
    outcome = job();
  } catch (const std::exception& e) {
    result.exit_code = kExitFail;
    result.message = e.what();
    result.report = Json{{"experiment", config.experiment}, {"options", config.options}, {"passed", false},
                         {"error", e.what()}};
    return result;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  result.exit_code = outcome.passed ? kExitPass : kExitFail;
  result.message = outcome.passed ? "pass" : "fail";
  result.csv = outcome.csv.str();
  result.report = Json{{"experiment", config.experiment},
                       {"options", config.options},
                       {"passed", outcome.passed},
                       {"result", outcome.result}};
  Json metadata{{"timestamp", timestamp()},
                {"seconds", seconds},
                {"threads", thread_count()},
                {"rng", RngStream::kAlgorithm}};

  if (!config.output_dir.empty()) {
    try {
      const std::filesystem::path dir(config.output_dir);
      std::filesystem::create_directories(dir);
      write_file(dir / (config.experiment + ".json"), result.report.dump(2) + "\n");
      write_file(dir / (config.experiment + ".csv"), result.csv);
      write_file(dir / (config.experiment + ".metadata.json"), metadata.dump(2) + "\n");
    } catch (const std::exception& e) {
      result.exit_code = kExitFail;
      result.message = e.what();
    }
  }
  result.report["metadata"] = metadata;
  return result;
}

}  // namespace greenpot
