#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace windcast {

// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

inline constexpr std::int64_t kTenMinutes = 600;
inline constexpr std::int64_t kOneHour = 3600;

// Accepts "YYYY-MM-DDTHH:MM[:SS][Z|+00:00]" (a space may replace the 'T').
// Returns nullopt on anything else, including non-UTC offsets.
std::optional<Timestamp> parse_iso8601(std::string_view text);

std::string format_iso8601(Timestamp t);

// Uniform time axis. Index i maps to origin + i * step.
class TimeGrid {
 public:
  TimeGrid() = default;
  TimeGrid(Timestamp origin, std::int64_t step, std::size_t length);

  Timestamp origin() const noexcept { return origin_; }
  std::int64_t step() const noexcept { return step_; }
  std::size_t length() const noexcept { return length_; }
  Timestamp last() const noexcept { return origin_ + static_cast<std::int64_t>(length_ - 1) * step_; }

  Timestamp at(std::size_t index) const;
  // Exact index of a grid-aligned timestamp inside the grid.
  std::optional<std::size_t> index_of(Timestamp t) const noexcept;
  bool contains(Timestamp t) const noexcept { return index_of(t).has_value(); }

  bool operator==(const TimeGrid&) const = default;

 private:
  Timestamp origin_ = 0;
  std::int64_t step_ = kTenMinutes;
  std::size_t length_ = 0;
};

}  // namespace windcast
