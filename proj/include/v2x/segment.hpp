#pragma once

#include <optional>
#include <string_view>

namespace v2x {

// Link condition of a route point.
enum class Segment { los, nlos };

constexpr std::string_view to_string(Segment s) { return s == Segment::los ? "LOS" : "NLOS"; }

inline std::optional<Segment> parse_segment(std::string_view text) {
  if (text == "LOS" || text == "los") return Segment::los;
  if (text == "NLOS" || text == "nlos") return Segment::nlos;
  return std::nullopt;
}

}  // namespace v2x
