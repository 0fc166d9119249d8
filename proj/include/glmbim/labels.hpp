#pragma once

#include <compare>
#include <cstdint>
#include <string>

#include "glmbim/seeding.hpp"

namespace glmbim {

// Track label (t, i): birth frame and per-frame birth index. Totally ordered
// so label sets have a canonical order.
struct TrackLabel {
    int birth_time = 0;
    int birth_index = 0;

    auto operator<=>(const TrackLabel&) const = default;

    std::string str() const {
        return "(" + std::to_string(birth_time) + "," + std::to_string(birth_index) + ")";
    }

    std::uint64_t hash() const {
        return mix64((static_cast<std::uint64_t>(static_cast<std::uint32_t>(birth_time)) << 32) |
                     static_cast<std::uint32_t>(birth_index));
    }
};

}  // namespace glmbim
