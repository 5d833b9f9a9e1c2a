#pragma once

// Finite-state Markov models for channel gains and harvested energy, the
// attacker's battery, and the SINR -> packet-arrival-rate link.

#include <cstddef>
#include <utility>
#include <variant>
#include <vector>

namespace hjam {

/// Finite-state chain whose states carry a physical value (gain or energy).
class MarkovChain {
 public:
  MarkovChain() = default;
  /// Throws ValidationError unless rows are stochastic within 1e-12 and
  /// dimensions agree.
  MarkovChain(std::vector<double> values, std::vector<std::vector<double>> rows);

  std::size_t size() const noexcept { return values_.size(); }
  double value(std::size_t state) const { return values_.at(state); }
  double prob(std::size_t from, std::size_t to) const { return rows_[from][to]; }
  const std::vector<double>& values() const noexcept { return values_; }
  const std::vector<std::vector<double>>& rows() const noexcept { return rows_; }

  /// Inverse-CDF sample of row `current` given u in [0,1).
  std::size_t step(std::size_t current, double u) const;

  /// Identity transitions over the given values.
  static MarkovChain constant(std::vector<double> values);

 private:
  std::vector<double> values_;
  std::vector<std::vector<double>> rows_;
};

inline std::size_t chain_step(const MarkovChain& chain, std::size_t current, double u) {
  return chain.step(current, u);
}

/// Gaussian upper tail Q(x) = P(Z > x).
double q_function(double x);

struct QamModulation {
  double b = 0.5;
};

/// Piecewise-linear nondecreasing SINR -> rate map, clamped at both ends.
struct TableModulation {
  std::vector<std::pair<double, double>> points;  // (sinr, rate), sorted by sinr
};

using Modulation = std::variant<QamModulation, TableModulation>;

struct LinkModel {
  double sigma2 = 0.04;
  double jam_gain = 1.0;
  Modulation modulation = QamModulation{};

  void validate() const;
};

/// H / (jam_gain * G * p + sigma2)
double sinr(const LinkModel& link, double H, double G, double p);

/// f(SINR): 1 - Q(sqrt(b s)) for QAM, interpolated lookup for tables.
double arrival_rate(const LinkModel& link, double s);

struct BatteryModel {
  int b_max = 0;
  int p_max = 0;

  /// {0, 1, ..., p_max}
  std::vector<int> power_levels() const;
  void validate() const;
};

/// min(b - total_p + floor(E), b_max). Throws std::invalid_argument when the
/// action spends more than the battery holds.
int battery_update(const BatteryModel& model, int b, int total_p, double E);

}  // namespace hjam
