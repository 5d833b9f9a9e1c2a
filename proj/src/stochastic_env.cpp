#include "hjam/stochastic_env.hpp"

#include "hjam/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace hjam {

MarkovChain::MarkovChain(std::vector<double> values, std::vector<std::vector<double>> rows)
    : values_(std::move(values)), rows_(std::move(rows)) {
  if (values_.empty()) throw ValidationError("Markov chain needs at least one state");
  if (rows_.size() != values_.size())
    throw ValidationError("Markov chain: row count does not match value count");
  for (double v : values_)
    if (!std::isfinite(v)) throw ValidationError("Markov chain values must be finite");
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const auto& row = rows_[i];
    if (row.size() != values_.size())
      throw ValidationError("Markov chain: row " + std::to_string(i) + " has wrong length");
    for (double p : row)
      if (!(p >= 0.0 && p <= 1.0))
        throw ValidationError("Markov chain: entries must lie in [0,1]");
    const double sum = std::accumulate(row.begin(), row.end(), 0.0);
    if (std::abs(sum - 1.0) > 1e-12)
      throw ValidationError("Markov chain: row " + std::to_string(i) + " does not sum to 1");
  }
}

MarkovChain MarkovChain::constant(std::vector<double> values) {
  std::vector<std::vector<double>> rows(values.size(), std::vector<double>(values.size(), 0.0));
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i][i] = 1.0;
  return MarkovChain(std::move(values), std::move(rows));
}

std::size_t MarkovChain::step(std::size_t current, double u) const {
  const auto& row = rows_.at(current);
  double cdf = 0.0;
  std::size_t last_positive = current;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (row[j] <= 0.0) continue;
    last_positive = j;
    cdf += row[j];
    if (u < cdf) return j;
  }
  // u fell in the rounding gap above the accumulated CDF.
  return last_positive;
}

double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

void LinkModel::validate() const {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
    throw ValidationError("sigma2 must be positive");
  if (!(jam_gain >= 0.0) || !std::isfinite(jam_gain))
    throw ValidationError("jam_gain must be nonnegative");
  if (const auto* qam = std::get_if<QamModulation>(&modulation)) {
    if (!(qam->b > 0.0)) throw ValidationError("QAM parameter b must be positive");
  } else {
    const auto& table = std::get<TableModulation>(modulation);
    if (table.points.empty()) throw ValidationError("rate table must not be empty");
    for (std::size_t i = 0; i < table.points.size(); ++i) {
      const auto [s, r] = table.points[i];
      if (!(r >= 0.0 && r <= 1.0)) throw ValidationError("rate table values must lie in [0,1]");
      if (i > 0) {
        if (!(s > table.points[i - 1].first))
          throw ValidationError("rate table SINR points must be strictly increasing");
        if (r < table.points[i - 1].second)
          throw ValidationError("rate table must be nondecreasing");
      }
    }
  }
}

double sinr(const LinkModel& link, double H, double G, double p) {
  return H / (link.jam_gain * G * p + link.sigma2);
}

namespace {

double table_rate(const TableModulation& table, double s) {
  const auto& pts = table.points;
  if (s <= pts.front().first) return pts.front().second;
  if (s >= pts.back().first) return pts.back().second;
  const auto hi = std::upper_bound(pts.begin(), pts.end(), s,
                                   [](double v, const auto& pt) { return v < pt.first; });
  const auto lo = hi - 1;
  const double w = (s - lo->first) / (hi->first - lo->first);
  return lo->second + w * (hi->second - lo->second);
}

}  // namespace

double arrival_rate(const LinkModel& link, double s) {
  if (const auto* qam = std::get_if<QamModulation>(&link.modulation))
    return 1.0 - q_function(std::sqrt(qam->b * std::max(s, 0.0)));
  return table_rate(std::get<TableModulation>(link.modulation), s);
}

std::vector<int> BatteryModel::power_levels() const {
  std::vector<int> levels(static_cast<std::size_t>(p_max) + 1);
  std::iota(levels.begin(), levels.end(), 0);
  return levels;
}

void BatteryModel::validate() const {
  if (b_max < 0) throw ValidationError("b_max must be nonnegative");
  if (p_max < 0) throw ValidationError("p_max must be nonnegative");
}

int battery_update(const BatteryModel& model, int b, int total_p, double E) {
  if (total_p < 0 || total_p > b)
    throw std::invalid_argument("battery_update: action spends more energy than stored");
  const int harvested = static_cast<int>(std::floor(E));
  return std::clamp(b - total_p + harvested, 0, model.b_max);
}

}  // namespace hjam
