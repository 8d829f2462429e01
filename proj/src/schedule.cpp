#include "rydmis/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "rydmis/errors.hpp"

namespace rydmis {

namespace {
constexpr double kRampFrac = 0.15;
}

double AnnealSchedule::omega(double t) const {
  const double T = t_total_us, r = kRampFrac * T;
  if (t <= 0.0 || t >= T) return 0.0;
  if (t < r) return 0.5 * omega_max * (1.0 - std::cos(std::numbers::pi * t / r));
  if (t > T - r)
    return 0.5 * omega_max * (1.0 - std::cos(std::numbers::pi * (T - t) / r));
  return omega_max;
}

double AnnealSchedule::omega_dot(double t) const {
  const double T = t_total_us, r = kRampFrac * T;
  if (t <= 0.0 || t >= T) return 0.0;
  const double k = 0.5 * omega_max * std::numbers::pi / r;
  if (t < r) return k * std::sin(std::numbers::pi * t / r);
  if (t > T - r) return -k * std::sin(std::numbers::pi * (T - t) / r);
  return 0.0;
}

double AnnealSchedule::delta(double t) const {
  const double T = t_total_us, a = kRampFrac * T, b = (1.0 - kRampFrac) * T;
  if (t <= a) return delta_initial;
  if (t >= b) return delta_final;
  return delta_initial + (delta_final - delta_initial) * (t - a) / (b - a);
}

double AnnealSchedule::delta_dot(double t) const {
  const double T = t_total_us, a = kRampFrac * T, b = (1.0 - kRampFrac) * T;
  if (t <= a || t >= b) return 0.0;
  return (delta_final - delta_initial) / (b - a);
}

double AnnealSchedule::delta_dot_segment(int seg) const {
  if (seg < 0 || seg > 2) throw spec_error("schedule segment out of range");
  if (seg != 1) return 0.0;
  return (delta_final - delta_initial) / ((1.0 - 2.0 * kRampFrac) * t_total_us);
}

double AnnealSchedule::delta_integral(double t) const {
  const double T = t_total_us, a = kRampFrac * T, b = (1.0 - kRampFrac) * T;
  t = std::clamp(t, 0.0, T);
  if (t <= a) return delta_initial * t;
  double acc = delta_initial * a;
  const double u = std::min(t, b) - a;
  acc += delta_initial * u +
         0.5 * (delta_final - delta_initial) * u * u / (b - a);
  if (t > b) acc += delta_final * (t - b);
  return acc;
}

std::vector<double> AnnealSchedule::knots() const {
  const double T = t_total_us;
  return {0.0, kRampFrac * T, (1.0 - kRampFrac) * T, T};
}

std::string AnnealSchedule::to_json() const {
  nlohmann::json j;
  j["t_total_us"] = t_total_us;
  j["omega_max"] = omega_max;
  j["delta_initial"] = delta_initial;
  j["delta_final"] = delta_final;
  j["shape"] = "cosine-ramp-v1";
  return j.dump(2);
}

AnnealSchedule AnnealSchedule::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw spec_error(std::string("bad schedule JSON: ") + e.what());
  }
  if (j.value("shape", "") != "cosine-ramp-v1")
    throw spec_error("unknown schedule shape");
  return default_schedule(j.at("t_total_us").get<double>(),
                          j.at("omega_max").get<double>(),
                          j.at("delta_initial").get<double>(),
                          j.at("delta_final").get<double>());
}

AnnealSchedule default_schedule(double t_total_us, double omega_max,
                                double delta_initial, double delta_final) {
  if (!(t_total_us > 0)) throw spec_error("t_total must be positive");
  if (!(omega_max > 0)) throw spec_error("omega_max must be positive");
  if (!(delta_initial < 0 && delta_final > 0))
    throw spec_error("detuning must sweep from negative to positive");
  return AnnealSchedule{t_total_us, omega_max, delta_initial, delta_final};
}

}  // namespace rydmis
