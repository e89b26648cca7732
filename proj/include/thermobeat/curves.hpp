#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace thermobeat {

/// Binned second-order correlation. Bins are uniform and centred on
/// k * bin_width for k = -K..K.
struct G2Curve {
  std::vector<double> tau;     // bin centres, s
  std::vector<double> values;  // normalized g2
  std::vector<double> sigma;   // standard error per bin
  double bin_width = 0.0;      // s
  std::uint64_t total_coincidences = 0;
  std::pair<double, double> rates{0.0, 0.0};  // counts/s per channel
  double duration = 0.0;                      // s
  std::vector<std::uint64_t> counts;          // raw counts, empty for model curves

  std::size_t size() const { return tau.size(); }
  double tau_max() const { return tau.empty() ? 0.0 : tau.back(); }
  /// Index of the tau = 0 bin.
  std::size_t centre_index() const { return tau.size() / 2; }
};

/// First-order correlation on a non-negative lag grid.
struct G1Curve {
  std::vector<double> tau;        // s, tau[0] == 0
  std::vector<double> magnitude;  // |g1|
  std::vector<double> phase;      // rad
};

/// Symmetric bin centres k * bin_width for |k| <= round(tau_max / bin_width).
std::vector<double> symmetric_tau_grid(double bin_width, double tau_max);

void write_g2_csv(std::ostream& os, const G2Curve& g2);
void write_g1_csv(std::ostream& os, const G1Curve& g1);
/// Reads the tau_s,value,stderr format. Only tau, values, sigma and
/// bin_width are recoverable from the file.
G2Curve read_g2_csv(std::istream& is);
G1Curve read_g1_csv(std::istream& is);

void write_g2_csv_file(const std::string& path, const G2Curve& g2);
G2Curve read_g2_csv_file(const std::string& path);

}  // namespace thermobeat
