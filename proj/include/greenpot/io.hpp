#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "greenpot/continuum_kernels.hpp"
#include "greenpot/discrete_operator.hpp"
#include "greenpot/domain_grid.hpp"
#include "greenpot/lattice_green.hpp"
#include "greenpot/monte_carlo.hpp"
#include "greenpot/potential_matrix.hpp"

namespace greenpot {

using Json = nlohmann::json;

// Non-finite doubles have no JSON literal; they are written as null.
Json number(double v);

Json to_json(const KernelSpec& spec);
KernelSpec kernel_spec_from_json(const Json& j);

Json to_json(const Transform& transform);
Transform transform_from_json(const Json& j);

// {"d":2,"shape":{"ball":{"center":[0,0],"radius":1.0}}}; boxes use
// {"box":{"lo":[...],"hi":[...]}} with null for infinite corners, cubic sets
// {"cubic":{"m":..,"basis":[[..],..]}}, truncations
// {"intersect_with_ball":{"inner":{..domain..},"radius":..}}.
Json to_json(const DomainSpec& domain);
DomainSpec domain_from_json(const Json& j);

Json to_json(const LatticeSet& set);
LatticeSet lattice_set_from_json(const Json& j);

// {"d":..,"points":[[..],..],"entries":[row-major]}
Json to_json(const KilledGreenMatrix& m);

// Square matrix from JSON: a nested array of rows, or an object with
// "entries" (nested, or flat row-major with "points" or "rows" giving the
// size).
Eigen::MatrixXd matrix_from_json(const Json& j);
Json matrix_to_json(const Eigen::MatrixXd& m);

// Comma-separated rows of numbers.
Eigen::MatrixXd matrix_from_csv(std::istream& in);

// Loads by extension: .csv as CSV, anything else as JSON.
Eigen::MatrixXd load_matrix(const std::string& path);

Json to_json(const PotentialReport& report);
Json to_json(const McEstimate& estimate);
Json to_json(const ConvergenceReport& report);

// RFC 4180 table; numbers with 6 significant digits.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  // Cells are strings already formatted by `cell`.
  void add_row(std::vector<std::string> row);
  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string cell(double v);
std::string cell(long v);
inline std::string cell(int v) { return cell(static_cast<long>(v)); }
inline std::string cell(std::size_t v) { return cell(static_cast<long>(v)); }
std::string cell(const std::string& v);
inline std::string cell(const char* v) { return cell(std::string(v)); }

CsvTable to_csv(const ConvergenceReport& report);

}  // namespace greenpot
