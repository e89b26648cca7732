#include "thermobeat/curves.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "thermobeat/errors.hpp"

namespace thermobeat {

std::vector<double> symmetric_tau_grid(double bin_width, double tau_max) {
  if (!(bin_width > 0.0)) throw DomainError("bin_width must be positive");
  if (!(tau_max >= bin_width)) throw DomainError("tau_max must be at least bin_width");
  long k = std::lround(tau_max / bin_width);
  std::vector<double> grid;
  grid.reserve(2 * k + 1);
  for (long i = -k; i <= k; ++i) grid.push_back(static_cast<double>(i) * bin_width);
  return grid;
}

namespace {

std::vector<std::vector<double>> read_table(std::istream& is, const std::string& header) {
  std::string line;
  if (!std::getline(is, line)) throw DataError("empty CSV input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw DataError("unexpected CSV header '" + line + "', expected '" + header + "'");
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw DataError("CSV line " + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    if (row.size() != 3) throw DataError("CSV line " + std::to_string(lineno) + ": expected 3 columns");
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

void write_g2_csv(std::ostream& os, const G2Curve& g2) {
  os << "tau_s,value,stderr\n" << std::setprecision(17);
  for (std::size_t i = 0; i < g2.size(); ++i) {
    os << g2.tau[i] << ',' << g2.values[i] << ',' << (i < g2.sigma.size() ? g2.sigma[i] : 0.0) << '\n';
  }
}

void write_g1_csv(std::ostream& os, const G1Curve& g1) {
  os << "tau_s,magnitude,phase_rad\n" << std::setprecision(17);
  for (std::size_t i = 0; i < g1.tau.size(); ++i) {
    os << g1.tau[i] << ',' << g1.magnitude[i] << ',' << g1.phase[i] << '\n';
  }
}

G2Curve read_g2_csv(std::istream& is) {
  G2Curve g2;
  for (auto& row : read_table(is, "tau_s,value,stderr")) {
    g2.tau.push_back(row[0]);
    g2.values.push_back(row[1]);
    g2.sigma.push_back(row[2]);
  }
  for (std::size_t i = 1; i < g2.tau.size(); ++i) {
    if (!(g2.tau[i] > g2.tau[i - 1])) throw DataError("g2 CSV tau column is not increasing");
  }
  if (g2.tau.size() >= 2) g2.bin_width = (g2.tau.back() - g2.tau.front()) / static_cast<double>(g2.tau.size() - 1);
  return g2;
}

G1Curve read_g1_csv(std::istream& is) {
  G1Curve g1;
  for (auto& row : read_table(is, "tau_s,magnitude,phase_rad")) {
    g1.tau.push_back(row[0]);
    g1.magnitude.push_back(row[1]);
    g1.phase.push_back(row[2]);
  }
  return g1;
}

void write_g2_csv_file(const std::string& path, const G2Curve& g2) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open '" + path + "' for writing");
  write_g2_csv(os, g2);
  if (!os) throw DataError("write failed for '" + path + "'");
}

G2Curve read_g2_csv_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open '" + path + "'");
  return read_g2_csv(is);
}

}  // namespace thermobeat
