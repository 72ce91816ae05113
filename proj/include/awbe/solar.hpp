// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace awbe::solar {

inline constexpr double kSecondsPerDay = 86400.0;
inline constexpr int kNumEvents = 6;

enum class Event { kDawn = 0, kSunrise, kNoon, kSunset, kDusk, kMidnight };

inline constexpr std::array<Event, kNumEvents> kAllEvents = {
    Event::kDawn, Event::kSunrise, Event::kNoon,
    Event::kSunset, Event::kDusk, Event::kMidnight};

const char* to_string(Event e);

/// Capture position and instant. utc_offset converts UTC to local clock time.
struct GeoTime {
  double latitude = 0.0;      // degrees, [-90, 90]
  double longitude = 0.0;     // degrees, [-180, 180]
  double utc_timestamp = 0.0; // seconds since the Unix epoch
  double utc_offset = 0.0;    // seconds, [-14h, +14h]
};

/// Throws kInvalidArgument on non-finite or out-of-range fields.
void validate(const GeoTime& geo);

/// round(longitude / 15) hours, used when no explicit offset is known.
double approximate_utc_offset(double longitude);

/// Local seconds since midnight of the capture, in [0, 86400).
double local_seconds(const GeoTime& geo);

/// Days since the Unix epoch of the local calendar date.
std::int64_t local_day(const GeoTime& geo);

/// Local clock times (seconds since local midnight) of the solar events for
/// the local calendar date. Events that do not occur on that date (polar day
/// or night) carry valid = false and hold the substitute time: solar noon
/// for dawn/sunrise, solar midnight for sunset/dusk.
struct SolarEvents {
  std::array<double, kNumEvents> times{};
  std::array<bool, kNumEvents> valid{};

  double time(Event e) const { return times[static_cast<int>(e)]; }
  bool is_valid(Event e) const { return valid[static_cast<int>(e)]; }
};

/// Computes the six event times with the NOAA/Meeus low-precision solar
/// model. Sunrise/sunset use altitude -0.833 deg, dawn/dusk civil twilight
/// (-6 deg); midnight is solar noon + 12 h.
SolarEvents solar_events(const GeoTime& geo);

/// sqrt_probs[g] = sqrt(1 - |t_c - t_g| / 86400); before[g] = t_c <= t_g.
struct TimeFeature {
  std::array<double, kNumEvents> sqrt_probs{};
  std::array<double, kNumEvents> before_flags{};

  /// sqrt-probabilities first, then the flags.
  std::array<double, 2 * kNumEvents> flatten() const;
};

TimeFeature time_feature(const GeoTime& geo, const SolarEvents& events);

/// Same computation from an explicit capture time (local seconds).
TimeFeature time_feature(double capture_local_seconds,
                         const SolarEvents& events);

/// GeoTime at local noon of a "YYYY-MM-DD" date. Throws kInvalidArgument
/// on malformed dates.
GeoTime geo_time_for_date(double latitude, double longitude,
                          const std::string& date, double utc_offset);

/// "HH:MM:SS" rendering of local seconds.
std::string format_clock(double seconds);

}  // namespace awbe::solar
