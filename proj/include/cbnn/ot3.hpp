#pragma once

#include <optional>

#include "cbnn/shares.hpp"

namespace cbnn {

/// Role assignment for one OT invocation. Callers rotate roles freely; the
/// secure ReLU protocol runs the transfer twice with sender and receiver
/// exchanged between P0 and P2.
struct OtRoles {
    PartyId sender;
    PartyId receiver;
    PartyId helper;

    void validate() const {
        if (sender == receiver || sender == helper || receiver == helper)
            throw ConfigError("OT roles must name three distinct parties");
    }
};

/// Batched message pair held by the sender: element j of the transfer moves
/// m0[j] or m1[j] depending on choice bit j.
struct OtMessagePair {
    RingTensor m0;
    RingTensor m1;
};

/// Three-party oblivious transfer. The sender XOR-masks both messages with
/// pads drawn from the sender/receiver common PRF stream and ships them to the
/// helper; the helper forwards only the chosen ciphertext; the receiver
/// unmasks. Receiver and helper must hold identical choice bits. Two message
/// legs, i.e. two rounds; 2n words sender->helper and n words helper->receiver.
///
/// Returns m_c at the receiver, nullopt elsewhere.
std::optional<RingTensor> ot3_transfer(PartyCtx& ctx, const OtRoles& roles,
                                       const OtMessagePair* msgs, const BitTensor* choice,
                                       const Shape& shape);

} // namespace cbnn
