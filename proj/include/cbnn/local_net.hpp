#pragma once

#include <array>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>

#include "cbnn/transport.hpp"

namespace cbnn {

/// In-process transport: six directed FIFO queues between three threads.
/// shutdown() poisons every queue so blocked receivers fail fast when a peer
/// thread dies.
class LocalExchange {
public:
    explicit LocalExchange(double timeout_s = 30.0);

    Channel& endpoint(PartyId p);
    void shutdown();

private:
    struct Queue {
        std::mutex m;
        std::condition_variable cv;
        std::deque<std::pair<Tag, std::vector<std::uint8_t>>> q;
    };

    class Endpoint : public Channel {
    public:
        Endpoint(LocalExchange& ex, PartyId me) : ex_(ex), me_(me) {}
        void send(PartyId to, Tag tag, std::span<const std::uint8_t> payload) override;
        std::vector<std::uint8_t> recv(PartyId from, Tag tag) override;

    private:
        LocalExchange& ex_;
        PartyId me_;
    };

    Queue& queue(PartyId from, PartyId to) { return queues_[from.id * 3 + to.id]; }

    std::array<Queue, 9> queues_;
    std::array<std::unique_ptr<Endpoint>, 3> endpoints_;
    bool down_ = false;
    double timeout_s_;
};

} // namespace cbnn
