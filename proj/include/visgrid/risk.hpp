#pragma once

// Transient-instability probability: per-line fault likelihood from annual
// rates, an equal-weight two-normal fault-duration mixture, and the tail mass
// above each line's CCT. The duration model carries an explicit time-unit tag
// (defaults to cycles at nominal frequency) so second-valued CCTs are never
// silently mixed with cycle-valued means.

#include <cmath>
#include <string>
#include <vector>

#include "visgrid/grid.hpp"

namespace visgrid {

struct DurationDistribution {
  double mean_a = 3.5;
  double mean_b = 4.0;
  double sigma = 0.5;            // sigma_T, same unit as the means
  std::string time_unit = "cycles";
};

struct RiskResult {
  std::vector<double> line_probability;  // P_l(L), sums to 1
  std::vector<double> tail_mass;         // P(tau > CCT_l)
  std::vector<double> contribution;      // P_l * tail
  std::vector<double> cct;               // echoed inputs
  double theta = 0.0;
  bool clamped = false;
};

inline double line_fault_probability(const std::vector<double>& rates, int line_index) {
  if (line_index < 0 || line_index >= static_cast<int>(rates.size()))
    throw Error("line_fault_probability: index out of range");
  double total = 0.0;
  for (double r : rates) {
    if (r < 0.0) throw Error("line_fault_probability: negative fault rate");
    total += r;
  }
  if (total <= 0.0) throw Error("line_fault_probability: all fault rates are zero");
  return rates[static_cast<std::size_t>(line_index)] / total;
}

namespace detail {

inline double normal_pdf(double x, double mean, double sigma) {
  const double z = (x - mean) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * M_PI));
}

inline double normal_pdf_deriv(double x, double mean, double sigma) {
  return -normal_pdf(x, mean, sigma) * (x - mean) / (sigma * sigma);
}

}  // namespace detail

inline double duration_density(double tau, const DurationDistribution& dist) {
  if (dist.sigma <= 0.0) throw Error("duration_density: sigma_T must be > 0");
  return 0.5 * detail::normal_pdf(tau, dist.mean_a, dist.sigma) +
         0.5 * detail::normal_pdf(tau, dist.mean_b, dist.sigma);
}

inline double duration_density_deriv(double tau, const DurationDistribution& dist) {
  return 0.5 * detail::normal_pdf_deriv(tau, dist.mean_a, dist.sigma) +
         0.5 * detail::normal_pdf_deriv(tau, dist.mean_b, dist.sigma);
}

// Tail mass P(tau > cct) by endpoint-corrected composite trapezoid: the
// h^2/12 * (f'(b) - f'(a)) Euler-Maclaurin term is subtracted so halving the
// step moves the result at the h^4 scale.
inline double duration_tail_mass(double cct, const DurationDistribution& dist,
                                 double quad_step = -1.0) {
  if (dist.sigma <= 0.0) throw Error("duration_tail_mass: sigma_T must be > 0");
  if (quad_step <= 0.0) quad_step = dist.sigma / 50.0;
  const double upper = std::max(dist.mean_a, dist.mean_b) + 10.0 * dist.sigma;
  const double support_lo = std::min(dist.mean_a, dist.mean_b) - 10.0 * dist.sigma;
  const double lo = std::max(cct, support_lo);
  if (lo >= upper) return 0.0;
  const long n = std::max<long>(1, std::lround(std::ceil((upper - lo) / quad_step)));
  const double h = (upper - lo) / static_cast<double>(n);
  double sum = 0.5 * (duration_density(lo, dist) + duration_density(upper, dist));
  for (long i = 1; i < n; ++i) sum += duration_density(lo + h * static_cast<double>(i), dist);
  double integral = h * sum;
  integral -= h * h / 12.0 *
              (duration_density_deriv(upper, dist) - duration_density_deriv(lo, dist));
  return integral;
}

inline RiskResult instability_probability(const std::vector<double>& cct_per_line,
                                          const std::vector<double>& rates,
                                          const DurationDistribution& dist,
                                          double quad_step = -1.0,
                                          const std::string& cct_unit = "cycles") {
  if (cct_per_line.size() != rates.size())
    throw Error("instability_probability: cct and rate vectors differ in length");
  if (cct_unit != dist.time_unit)
    throw Error("instability_probability: CCT unit '" + cct_unit +
                "' does not match distribution unit '" + dist.time_unit + "'");
  RiskResult out;
  out.cct = cct_per_line;
  const int m = static_cast<int>(rates.size());
  out.line_probability.resize(static_cast<std::size_t>(m));
  out.tail_mass.resize(static_cast<std::size_t>(m));
  out.contribution.resize(static_cast<std::size_t>(m));
  double theta = 0.0;
  for (int l = 0; l < m; ++l) {
    out.line_probability[static_cast<std::size_t>(l)] = line_fault_probability(rates, l);
    out.tail_mass[static_cast<std::size_t>(l)] =
        duration_tail_mass(cct_per_line[static_cast<std::size_t>(l)], dist, quad_step);
    out.contribution[static_cast<std::size_t>(l)] =
        out.line_probability[static_cast<std::size_t>(l)] *
        out.tail_mass[static_cast<std::size_t>(l)];
    theta += out.contribution[static_cast<std::size_t>(l)];
  }
  if (theta < 0.0) {
    theta = 0.0;
    out.clamped = true;
  }
  if (theta > 1.0) {
    theta = 1.0;
    out.clamped = true;
  }
  out.theta = theta;
  return out;
}

}  // namespace visgrid
