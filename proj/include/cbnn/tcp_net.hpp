#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "cbnn/transport.hpp"

namespace cbnn {

/// host:port endpoints of the three parties, in party order. Party i listens
/// on its own entry and dials every lower-numbered peer.
struct PeerList {
    std::array<std::string, 3> host;
    std::array<std::uint16_t, 3> port;

    /// "host:port,host:port,host:port"
    static PeerList parse(const std::string& spec);
};

/// TCP mesh transport. One connection per party pair; frames are
/// [payload length u32 LE][tag u16 LE][payload], matching docs/FORMATS.md.
/// Delivery per (sender, receiver) stream is in-order by TCP; a tag mismatch
/// surfaces as DesyncError, socket trouble as TransportError.
class TcpMesh : public Channel {
public:
    TcpMesh(PartyId me, const PeerList& peers, double timeout_s = 30.0);
    ~TcpMesh() override;
    TcpMesh(const TcpMesh&) = delete;
    TcpMesh& operator=(const TcpMesh&) = delete;

    void send(PartyId to, Tag tag, std::span<const std::uint8_t> payload) override;
    std::vector<std::uint8_t> recv(PartyId from, Tag tag) override;

private:
    void read_exact(int fd, std::uint8_t* buf, std::size_t n, PartyId from);

    PartyId me_;
    std::array<int, 3> fd_{-1, -1, -1};
};

} // namespace cbnn
