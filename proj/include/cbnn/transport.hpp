#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cbnn/party_id.hpp"

namespace cbnn {

/// Protocol-step label carried by every message; mismatched tags surface as
/// DesyncError at the receiver. High byte: protocol, low byte: step.
using Tag = std::uint16_t;

namespace tag {
constexpr Tag make(std::uint8_t proto, std::uint8_t step) {
    return static_cast<Tag>((proto << 8) | step);
}

constexpr Tag deal_skeleton = make(1, 0);
constexpr Tag deal_share = make(1, 1);
constexpr Tag mul_reshare = make(2, 0);
constexpr Tag bitmul_reshare = make(2, 1);
constexpr Tag open_all = make(3, 0);
constexpr Tag open_pair = make(3, 1);
constexpr Tag reveal = make(3, 2);
constexpr Tag linear_reshare = make(4, 0);
constexpr Tag trunc_pair = make(5, 0);
constexpr Tag trunc_open = make(5, 1);
constexpr Tag ot_masked_pair = make(6, 0);
constexpr Tag ot_selected = make(6, 1);
constexpr Tag b2a_replica = make(7, 0);
constexpr Tag sign_replica = make(7, 1);
constexpr Tag relu_reshare = make(8, 0);
constexpr Tag ping = make(15, 0);
} // namespace tag

/// Pairwise message channel of one party. Implementations: in-process queues
/// (LocalExchange) and TCP sockets (TcpMesh). Delivery is exactly-once and
/// in-order per (sender, receiver) stream.
class Channel {
public:
    virtual ~Channel() = default;
    virtual void send(PartyId to, Tag tag, std::span<const std::uint8_t> payload) = 0;
    virtual std::vector<std::uint8_t> recv(PartyId from, Tag tag) = 0;
};

} // namespace cbnn
