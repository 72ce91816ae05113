// SPDX-License-Identifier: Apache-2.0
#include "awbe/solar.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <sstream>

#include "awbe/error.hpp"

namespace awbe::solar {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kRiseSetZenith = 90.833;
constexpr double kCivilZenith = 96.0;
constexpr int kRefineIterations = 4;

double floor_mod(double x, double m) {
  double r = std::fmod(x, m);
  if (r < 0) r += m;
  return r;
}

struct SunState {
  double declination;  // radians
  double eq_time_min;  // equation of time, minutes
};

// NOAA solar calculator formulation of Meeus' low-precision solar
// coordinates, evaluated at an absolute UTC instant.
SunState sun_state(double unix_seconds) {
  const double jd = unix_seconds / kSecondsPerDay + 2440587.5;
  const double t = (jd - 2451545.0) / 36525.0;

  const double l0 = floor_mod(280.46646 + t * (36000.76983 + t * 0.0003032), 360.0);
  const double m = 357.52911 + t * (35999.05029 - 0.0001537 * t);
  const double e = 0.016708634 - t * (0.000042037 + 0.0000001267 * t);
  const double c = std::sin(m * kDeg) * (1.914602 - t * (0.004817 + 0.000014 * t)) +
                   std::sin(2 * m * kDeg) * (0.019993 - 0.000101 * t) +
                   std::sin(3 * m * kDeg) * 0.000289;
  const double true_long = l0 + c;
  const double omega = 125.04 - 1934.136 * t;
  const double app_long = true_long - 0.00569 - 0.00478 * std::sin(omega * kDeg);
  const double mean_obliq =
      23.0 + (26.0 + (21.448 - t * (46.815 + t * (0.00059 - t * 0.001813))) / 60.0) / 60.0;
  const double obliq = mean_obliq + 0.00256 * std::cos(omega * kDeg);

  const double decl = std::asin(std::sin(obliq * kDeg) * std::sin(app_long * kDeg));
  const double y = std::pow(std::tan(obliq * kDeg / 2.0), 2);
  const double eq = y * std::sin(2 * l0 * kDeg) - 2 * e * std::sin(m * kDeg) +
                    4 * e * y * std::sin(m * kDeg) * std::cos(2 * l0 * kDeg) -
                    0.5 * y * y * std::sin(4 * l0 * kDeg) -
                    1.25 * e * e * std::sin(2 * m * kDeg);
  return {decl, 4.0 * eq / kDeg};
}

// Absolute UTC instant of the transit for the given local date. The transit
// is kept inside the local day.
double transit_utc(double day_start_utc_local, double longitude, double utc_offset,
                   double eq_time_min) {
  // day_start_utc_local is local midnight expressed as unix seconds of the
  // local clock; the UTC-day estimate for the same calendar number follows.
  double t = day_start_utc_local + (720.0 - 4.0 * longitude - eq_time_min) * 60.0;
  double local = t + utc_offset - day_start_utc_local;
  while (local < 0) { t += kSecondsPerDay; local += kSecondsPerDay; }
  while (local >= kSecondsPerDay) { t -= kSecondsPerDay; local -= kSecondsPerDay; }
  return t;
}

double transit_for_day(double day_start, const GeoTime& geo) {
  double t = day_start + 43200.0 - geo.utc_offset;
  for (int i = 0; i < kRefineIterations; ++i) {
    t = transit_utc(day_start, geo.longitude, geo.utc_offset, sun_state(t).eq_time_min);
  }
  return t;
}

// Hour angle (degrees) at which the sun reaches the zenith angle, or nullopt
// if it never does on this day.
std::optional<double> hour_angle(double latitude, double declination, double zenith) {
  const double lat = latitude * kDeg;
  const double cos_ha = (std::cos(zenith * kDeg) - std::sin(lat) * std::sin(declination)) /
                        (std::cos(lat) * std::cos(declination));
  if (!std::isfinite(cos_ha) || cos_ha > 1.0 || cos_ha < -1.0) return std::nullopt;
  return std::acos(cos_ha) / kDeg;
}

// sign = -1 for morning events, +1 for evening events.
std::optional<double> crossing_utc(double day_start, const GeoTime& geo, double zenith,
                                   double sign) {
  double t = transit_for_day(day_start, geo);
  std::optional<double> result;
  for (int i = 0; i < kRefineIterations; ++i) {
    const SunState s = sun_state(t);
    const auto ha = hour_angle(geo.latitude, s.declination, zenith);
    if (!ha) return std::nullopt;
    const double noon = transit_utc(day_start, geo.longitude, geo.utc_offset, s.eq_time_min);
    t = noon + sign * (*ha) * 4.0 * 60.0;
    result = t;
  }
  return result;
}

}  // namespace

const char* to_string(Event e) {
  switch (e) {
    case Event::kDawn: return "dawn";
    case Event::kSunrise: return "sunrise";
    case Event::kNoon: return "noon";
    case Event::kSunset: return "sunset";
    case Event::kDusk: return "dusk";
    case Event::kMidnight: return "midnight";
  }
  return "?";
}

void validate(const GeoTime& geo) {
  if (!std::isfinite(geo.latitude) || !std::isfinite(geo.longitude) ||
      !std::isfinite(geo.utc_timestamp) || !std::isfinite(geo.utc_offset)) {
    fail(ErrorCode::kInvalidArgument, "GeoTime has non-finite fields");
  }
  if (geo.latitude < -90.0 || geo.latitude > 90.0) {
    fail(ErrorCode::kInvalidArgument, "latitude out of [-90, 90]");
  }
  if (geo.longitude < -180.0 || geo.longitude > 180.0) {
    fail(ErrorCode::kInvalidArgument, "longitude out of [-180, 180]");
  }
  if (std::abs(geo.utc_offset) > 14.0 * 3600.0) {
    fail(ErrorCode::kInvalidArgument, "utc_offset out of [-14h, +14h]");
  }
}

double approximate_utc_offset(double longitude) {
  return std::round(longitude / 15.0) * 3600.0;
}

double local_seconds(const GeoTime& geo) {
  return floor_mod(geo.utc_timestamp + geo.utc_offset, kSecondsPerDay);
}

std::int64_t local_day(const GeoTime& geo) {
  return static_cast<std::int64_t>(
      std::floor((geo.utc_timestamp + geo.utc_offset) / kSecondsPerDay));
}

SolarEvents solar_events(const GeoTime& geo) {
  validate(geo);
  const double day_start = static_cast<double>(local_day(geo)) * kSecondsPerDay;
  auto to_local = [&](double utc) {
    return floor_mod(utc + geo.utc_offset - day_start, kSecondsPerDay);
  };

  SolarEvents ev;
  const double noon = to_local(transit_for_day(day_start, geo));
  const double midnight = floor_mod(noon + 43200.0, kSecondsPerDay);

  auto set = [&](Event e, std::optional<double> utc, double fallback) {
    const int i = static_cast<int>(e);
    ev.valid[i] = utc.has_value();
    ev.times[i] = utc ? to_local(*utc) : fallback;
  };
  set(Event::kDawn, crossing_utc(day_start, geo, kCivilZenith, -1.0), noon);
  set(Event::kSunrise, crossing_utc(day_start, geo, kRiseSetZenith, -1.0), noon);
  ev.times[static_cast<int>(Event::kNoon)] = noon;
  ev.valid[static_cast<int>(Event::kNoon)] = true;
  set(Event::kSunset, crossing_utc(day_start, geo, kRiseSetZenith, 1.0), midnight);
  set(Event::kDusk, crossing_utc(day_start, geo, kCivilZenith, 1.0), midnight);
  ev.times[static_cast<int>(Event::kMidnight)] = midnight;
  ev.valid[static_cast<int>(Event::kMidnight)] = true;
  return ev;
}

std::array<double, 2 * kNumEvents> TimeFeature::flatten() const {
  std::array<double, 2 * kNumEvents> out{};
  for (int i = 0; i < kNumEvents; ++i) {
    out[i] = sqrt_probs[i];
    out[kNumEvents + i] = before_flags[i];
  }
  return out;
}

TimeFeature time_feature(double capture_local_seconds, const SolarEvents& events) {
  TimeFeature tf;
  for (int i = 0; i < kNumEvents; ++i) {
    const double tg = events.times[i];
    const double p = 1.0 - std::abs(capture_local_seconds - tg) / kSecondsPerDay;
    tf.sqrt_probs[i] = std::sqrt(std::clamp(p, 0.0, 1.0));
    tf.before_flags[i] = capture_local_seconds <= tg ? 1.0 : 0.0;
  }
  return tf;
}

TimeFeature time_feature(const GeoTime& geo, const SolarEvents& events) {
  validate(geo);
  return time_feature(local_seconds(geo), events);
}

GeoTime geo_time_for_date(double latitude, double longitude, const std::string& date,
                          double utc_offset) {
  int y = 0;
  unsigned m = 0, d = 0;
  char dash1 = 0, dash2 = 0;
  std::istringstream in(date);
  in >> y >> dash1 >> m >> dash2 >> d;
  if (!in || dash1 != '-' || dash2 != '-' || !in.eof()) {
    fail(ErrorCode::kInvalidArgument, "malformed date '" + date + "', expected YYYY-MM-DD");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) fail(ErrorCode::kInvalidArgument, "invalid calendar date '" + date + "'");
  const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
  GeoTime geo;
  geo.latitude = latitude;
  geo.longitude = longitude;
  geo.utc_offset = utc_offset;
  geo.utc_timestamp = static_cast<double>(days) * kSecondsPerDay + 43200.0 - utc_offset;
  validate(geo);
  return geo;
}

std::string format_clock(double seconds) {
  const long s = std::lround(seconds) % 86400;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02ld:%02ld:%02ld", s / 3600, (s / 60) % 60, s % 60);
  return buf;
}

}  // namespace awbe::solar
