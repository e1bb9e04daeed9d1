#include "cbnn/local_net.hpp"

#include <chrono>

#include "cbnn/errors.hpp"

namespace cbnn {

LocalExchange::LocalExchange(double timeout_s) : timeout_s_(timeout_s) {
    for (int i = 0; i < 3; ++i)
        endpoints_[i] = std::make_unique<Endpoint>(*this, PartyId{i});
}

Channel& LocalExchange::endpoint(PartyId p) { return *endpoints_[p.id]; }

void LocalExchange::shutdown() {
    for (auto& q : queues_) {
        std::lock_guard lk(q.m);
    }
    down_ = true;
    for (auto& q : queues_) q.cv.notify_all();
}

void LocalExchange::Endpoint::send(PartyId to, Tag tag,
                                   std::span<const std::uint8_t> payload) {
    if (to == me_) throw TransportError("send to self");
    auto& q = ex_.queue(me_, to);
    {
        std::lock_guard lk(q.m);
        q.q.emplace_back(tag, std::vector<std::uint8_t>(payload.begin(), payload.end()));
    }
    q.cv.notify_one();
}

std::vector<std::uint8_t> LocalExchange::Endpoint::recv(PartyId from, Tag tag) {
    auto& q = ex_.queue(from, me_);
    std::unique_lock lk(q.m);
    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                        std::chrono::duration<double>(ex_.timeout_s_));
    if (!q.cv.wait_until(lk, deadline, [&] { return !q.q.empty() || ex_.down_; }))
        throw TransportError("recv timeout waiting for " + from.str() + " at " + me_.str());
    if (q.q.empty() && ex_.down_)
        throw TransportError("exchange shut down while " + me_.str() + " waited for " +
                             from.str());
    auto [got_tag, payload] = std::move(q.q.front());
    q.q.pop_front();
    if (got_tag != tag)
        throw DesyncError("tag mismatch at " + me_.str() + ": expected " +
                          std::to_string(tag) + ", got " + std::to_string(got_tag) +
                          " from " + from.str());
    return payload;
}

} // namespace cbnn
