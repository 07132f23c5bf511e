#include "greenpot/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace greenpot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> doubles(const Json& j, double null_value) {
  std::vector<double> out;
  for (const auto& v : j) out.push_back(v.is_null() ? null_value : v.get<double>());
  return out;
}

Json corner(const std::vector<double>& v) {
  Json out = Json::array();
  for (double c : v) out.push_back(number(c));
  return out;
}

Json flat_entries(const Eigen::MatrixXd& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(number(m(i, j)));
  }
  return out;
}

}  // namespace

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json to_json(const Transform& transform) {
  if (const auto* p = std::get_if<PowerTransform>(&transform)) return Json{{"power", p->beta}};
  return Json{{"exp", std::get<ExpTransform>(transform).alpha}};
}

Transform transform_from_json(const Json& j) {
  if (!j.is_object() || j.size() != 1) throw std::invalid_argument("transform must be {\"power\":b} or {\"exp\":a}");
  if (j.contains("power")) return PowerTransform{j.at("power").get<double>()};
  if (j.contains("exp")) return ExpTransform{j.at("exp").get<double>()};
  throw std::invalid_argument("unknown transform " + j.dump());
}

Json to_json(const KernelSpec& spec) {
  Json base = spec.is_free_space() ? Json("free") : Json{{"disk", std::get<Disk>(spec.base()).radius}};
  return Json{{"d", spec.dim()}, {"base", base}, {"transform", to_json(spec.transform())}};
}

KernelSpec kernel_spec_from_json(const Json& j) {
  const int d = j.at("d").get<int>();
  const Json& base = j.at("base");
  KernelBase kb;
  if (base.is_string() && base.get<std::string>() == "free") {
    kb = FreeSpace{};
  } else if (base.is_object() && base.contains("disk")) {
    kb = Disk{base.at("disk").get<double>()};
  } else {
    throw std::invalid_argument("unknown kernel base " + base.dump());
  }
  return KernelSpec(d, kb, transform_from_json(j.at("transform")));
}

Json to_json(const DomainSpec& domain) {
  Json shape = std::visit(
      [](const auto& s) -> Json {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, BallShape>) {
          return Json{{"ball", {{"center", s.center}, {"radius", s.radius}}}};
        } else if constexpr (std::is_same_v<S, BoxShape>) {
          return Json{{"box", {{"lo", corner(s.lo)}, {"hi", corner(s.hi)}}}};
        } else if constexpr (std::is_same_v<S, CubicShape>) {
          return Json{{"cubic", {{"m", s.m}, {"basis", s.basis}}}};
        } else {
          return Json{{"intersect_with_ball", {{"inner", to_json(*s.inner)}, {"radius", s.radius}}}};
        }
      },
      domain.shape);
  return Json{{"d", domain.d}, {"shape", shape}};
}

DomainSpec domain_from_json(const Json& j) {
  const int d = j.at("d").get<int>();
  const Json& shape = j.at("shape");
  if (!shape.is_object() || shape.size() != 1) throw std::invalid_argument("domain shape must have exactly one kind");
  DomainSpec out;
  out.d = d;
  if (shape.contains("ball")) {
    const Json& b = shape.at("ball");
    out.shape = BallShape{b.at("center").get<std::vector<double>>(), b.at("radius").get<double>()};
  } else if (shape.contains("box")) {
    const Json& b = shape.at("box");
    out.shape = BoxShape{doubles(b.at("lo"), -kInf), doubles(b.at("hi"), kInf)};
  } else if (shape.contains("cubic")) {
    const Json& c = shape.at("cubic");
    out.shape = CubicShape{c.at("m").get<long>(), c.at("basis").get<std::vector<IntPoint>>()};
  } else if (shape.contains("intersect_with_ball")) {
    const Json& s = shape.at("intersect_with_ball");
    out.shape = IntersectBallShape{std::make_shared<const DomainSpec>(domain_from_json(s.at("inner"))),
                                   s.at("radius").get<double>()};
  } else {
    throw std::invalid_argument("unknown domain shape " + shape.dump());
  }
  validate(out);
  return out;
}

Json to_json(const LatticeSet& set) { return Json{{"d", set.dim()}, {"points", set.points()}}; }

LatticeSet lattice_set_from_json(const Json& j) {
  return LatticeSet(j.at("d").get<int>(), j.at("points").get<std::vector<IntPoint>>());
}

Json to_json(const KilledGreenMatrix& m) {
  return Json{{"d", m.dim()}, {"points", m.set.points()}, {"entries", flat_entries(m.entries)}};
}

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(number(m(i, k)));
    rows.push_back(row);
  }
  return Json{{"entries", rows}};
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  const Json& entries = j.is_array() ? j : j.at("entries");
  if (!entries.is_array() || entries.empty()) throw std::invalid_argument("matrix entries must be a nonempty array");
  if (entries.front().is_array()) {
    const auto n = static_cast<Eigen::Index>(entries.size());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Json& row = entries[static_cast<std::size_t>(i)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) throw std::invalid_argument("matrix must be square");
      for (Eigen::Index k = 0; k < n; ++k) m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
    }
    return m;
  }
  Eigen::Index n = 0;
  if (j.is_object() && j.contains("points")) {
    n = static_cast<Eigen::Index>(j.at("points").size());
  } else if (j.is_object() && j.contains("rows")) {
    n = j.at("rows").get<Eigen::Index>();
  } else {
    n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(entries.size()))));
  }
  if (n * n != static_cast<Eigen::Index>(entries.size())) throw std::invalid_argument("flat entries do not form a square matrix");
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < n; ++k) m(i, k) = entries[static_cast<std::size_t>(i * n + k)].get<double>();
  }
  return m;
}

Eigen::MatrixXd matrix_from_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(field, &used));
        if (field.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw std::invalid_argument("not a number in matrix CSV: '" + field + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (n == 0) throw std::invalid_argument("empty matrix CSV");
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != n) throw std::invalid_argument("matrix CSV must be square");
    for (Eigen::Index k = 0; k < n; ++k) m(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  }
  return m;
}

Eigen::MatrixXd load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open matrix file " + path);
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0) return matrix_from_csv(in);
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument("malformed JSON in " + path + ": " + e.what());
  }
  return matrix_from_json(j);
}

Json to_json(const PotentialReport& r) {
  Json j{{"nonsingular", r.nonsingular},
         {"max_offdiag_of_inverse", number(r.max_offdiag_of_inverse)},
         {"min_row_sum_of_inverse", number(r.min_row_sum_of_inverse)},
         {"is_potential", r.is_potential},
         {"reliable", r.reliable},
         {"condition_estimate", number(r.condition_estimate)},
         {"tol", r.tol},
         {"trials", r.trials},
         {"seed", r.seed}};
  j["cmp_inequality_min"] = r.cmp_inequality_min ? number(*r.cmp_inequality_min) : Json(nullptr);
  return j;
}

Json to_json(const McEstimate& e) {
  Json j{{"mean", number(e.mean)}, {"stderr", number(e.std_error)}, {"trials", e.trials}, {"seed", e.seed}};
  if (e.tail_bound) j["tail_bound"] = number(*e.tail_bound);
  return j;
}

Json to_json(const ConvergenceReport& r) {
  Json levels = Json::array();
  for (const auto& l : r.levels) {
    levels.push_back(Json{{"n", l.n},
                          {"value", number(l.value)},
                          {"abs_err", number(l.abs_err)},
                          {"rel_err", number(l.rel_err)},
                          {"rate", number(l.rate)}});
  }
  return Json{{"quantity", r.quantity},
              {"reference", number(r.reference)},
              {"reference_source", r.reference_source},
              {"levels", levels},
              {"errors_decrease", r.errors_decrease()}};
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != header_.size()) throw std::invalid_argument("CSV row width does not match the header");
  rows_.push_back(std::move(row));
}

std::string cell(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string cell(long v) { return std::to_string(v); }

std::string cell(const std::string& v) {
  if (v.find_first_of(",\"\r\n") == std::string::npos) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string CsvTable::str() const {
  std::string out;
  const auto line = [&](const std::vector<std::string>& row, bool quote) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out += ',';
      out += quote ? cell(row[i]) : row[i];
    }
    out += "\r\n";
  };
  line(header_, true);
  for (const auto& row : rows_) line(row, false);
  return out;
}

CsvTable to_csv(const ConvergenceReport& r) {
  CsvTable table({"n", "value", "reference", "abs_err", "rel_err", "rate"});
  for (const auto& l : r.levels) {
    table.add_row({cell(l.n), cell(l.value), cell(r.reference), cell(l.abs_err), cell(l.rel_err), cell(l.rate)});
  }
  return table;
}

}  // namespace greenpot
