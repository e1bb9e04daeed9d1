#pragma once

#include <string>

#include "cbnn/errors.hpp"

namespace cbnn {

/// One of the three protocol roles: P0 data owner, P1 model owner, P2 helper.
/// Neighbour indices wrap modulo 3.
struct PartyId {
    int id = 0;

    constexpr PartyId() = default;
    constexpr explicit PartyId(int i) : id(i) {}

    constexpr PartyId next() const { return PartyId{(id + 1) % 3}; }
    constexpr PartyId prev() const { return PartyId{(id + 2) % 3}; }

    constexpr bool operator==(const PartyId&) const = default;

    std::string str() const { return "P" + std::to_string(id); }
};

inline constexpr PartyId kDataOwner{0};
inline constexpr PartyId kModelOwner{1};
inline constexpr PartyId kHelper{2};

inline PartyId checked_party(int id) {
    if (id < 0 || id > 2) throw ConfigError("party id must be 0, 1 or 2");
    return PartyId{id};
}

} // namespace cbnn
