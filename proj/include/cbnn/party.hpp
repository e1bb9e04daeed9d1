#pragma once

#include <chrono>
#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <type_traits>
#include <utility>
#include <vector>

#include "cbnn/local_net.hpp"
#include "cbnn/randomness.hpp"
#include "cbnn/stats.hpp"
#include "cbnn/tensor.hpp"
#include "cbnn/transport.hpp"

namespace cbnn {

/// Run-wide protocol parameters; identical at all parties.
struct ProtocolConfig {
    Ring ring{32};
    unsigned frac_bits = 13;
    unsigned msb_budget = 8; // d: the MSB mask width, r in [1, 2^(d-1))
    double inject_latency_ms = 0.0;

    FixedPointCodec codec() const { return FixedPointCodec(ring, frac_bits); }
    void validate() const {
        if (ring.bits() % 8 != 0)
            throw ConfigError("ring width must be a byte multiple for transport");
        if (msb_budget < 4 || msb_budget >= ring.bits() - 1)
            throw ConfigError("msb budget d must satisfy 4 <= d < l-1");
        if (frac_bits >= ring.bits() - 1) throw ConfigError("frac bits too large for ring");
    }
};

/// Everything one party's protocol code needs: identity, channel, correlated
/// randomness, traffic accounting, and the run configuration. Single-threaded
/// per party; shares move between threads only through the channel.
class PartyCtx {
public:
    PartyCtx(PartyId me, Channel& channel, RandomnessCtx rand, ProtocolConfig cfg)
        : me_(me), channel_(channel), rand_(std::move(rand)), cfg_(cfg),
          codec_(cfg.ring, cfg.frac_bits) {}

    PartyId me() const { return me_; }
    const Ring& ring() const { return cfg_.ring; }
    const FixedPointCodec& codec() const { return codec_; }
    const ProtocolConfig& config() const { return cfg_; }
    RandomnessCtx& rand() { return rand_; }
    PartyStats& stats() { return stats_; }
    const PartyStats& stats() const { return stats_; }

    // -- raw messaging with accounting ------------------------------------------
    void send_bytes(PartyId to, Tag tag, std::span<const std::uint8_t> payload) {
        channel_.send(to, tag, payload);
        stats_.add_message(phase_path_, payload.size());
    }
    std::vector<std::uint8_t> recv_bytes(PartyId from, Tag tag) {
        auto payload = channel_.recv(from, tag);
        if (wiretap) wiretap(from, tag, payload);
        return payload;
    }

    // -- ring / bit tensor messaging (little-endian, l/8 bytes per element) -----
    void send_ring(PartyId to, Tag tag, const RingTensor& t) {
        send_bytes(to, tag, serialize_ring(t));
    }
    RingTensor recv_ring(PartyId from, Tag tag, const Shape& shape) {
        return parse_ring(recv_bytes(from, tag), shape, from);
    }
    void send_bits(PartyId to, Tag tag, const BitTensor& t) {
        send_bytes(to, tag, pack_bits(t));
    }
    BitTensor recv_bits(PartyId from, Tag tag, const Shape& shape) {
        return unpack_bits(recv_bytes(from, tag), shape, from);
    }

    /// Declares a synchronization barrier: all messages sent since the previous
    /// barrier must be delivered before any party proceeds. This is the unit the
    /// latency model charges.
    void round() {
        stats_.add_round(phase_path_);
        if (cfg_.inject_latency_ms > 0)
            std::this_thread::sleep_for(
                std::chrono::duration<double, std::milli>(cfg_.inject_latency_ms));
    }

    /// RAII scope attributing traffic to a named protocol phase ("msb/ot3"...).
    class PhaseScope {
    public:
        PhaseScope(PartyCtx& ctx, std::string_view name) : ctx_(ctx) {
            ctx_.phase_stack_.emplace_back(name);
            ctx_.rebuild_path();
        }
        ~PhaseScope() {
            ctx_.phase_stack_.pop_back();
            ctx_.rebuild_path();
        }
        PhaseScope(const PhaseScope&) = delete;
        PhaseScope& operator=(const PhaseScope&) = delete;

    private:
        PartyCtx& ctx_;
    };
    [[nodiscard]] PhaseScope phase(std::string_view name) { return PhaseScope(*this, name); }
    const std::string& phase_path() const { return phase_path_; }

    /// Test hook: observes every received payload (privacy smoke tests).
    std::function<void(PartyId from, Tag, std::span<const std::uint8_t>)> wiretap;
    /// Test hook: per-layer share dump for the in-process debug validator.
    std::function<void(std::size_t layer, const RingTensor& s0, const RingTensor& s1)>
        debug_share_sink;

    std::vector<std::uint8_t> serialize_ring(const RingTensor& t) const {
        std::size_t wb = word_bytes();
        std::vector<std::uint8_t> out(t.size() * wb);
        for (std::size_t i = 0; i < t.size(); ++i)
            for (std::size_t b = 0; b < wb; ++b)
                out[i * wb + b] = static_cast<std::uint8_t>(t[i] >> (8 * b));
        return out;
    }
    RingTensor parse_ring(const std::vector<std::uint8_t>& in, const Shape& shape,
                          PartyId from) const {
        std::size_t wb = word_bytes();
        if (in.size() != shape.count() * wb)
            throw DesyncError("ring payload from " + from.str() + " has " +
                              std::to_string(in.size()) + " bytes, expected " +
                              std::to_string(shape.count() * wb));
        RingTensor t(shape);
        for (std::size_t i = 0; i < t.size(); ++i) {
            ring_t v = 0;
            for (std::size_t b = 0; b < wb; ++b)
                v |= static_cast<ring_t>(in[i * wb + b]) << (8 * b);
            t[i] = cfg_.ring.reduce(v);
        }
        return t;
    }

private:
    std::size_t word_bytes() const { return cfg_.ring.bits() / 8; }

    std::vector<std::uint8_t> pack_bits(const BitTensor& t) const {
        std::vector<std::uint8_t> out((t.size() + 7) / 8, 0);
        for (std::size_t i = 0; i < t.size(); ++i)
            if (t[i] & 1) out[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
        return out;
    }
    BitTensor unpack_bits(const std::vector<std::uint8_t>& in, const Shape& shape,
                          PartyId from) const {
        if (in.size() != (shape.count() + 7) / 8)
            throw DesyncError("bit payload from " + from.str() + " has wrong length");
        BitTensor t(shape);
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = (in[i / 8] >> (i % 8)) & 1;
        return t;
    }

    void rebuild_path() {
        phase_path_.clear();
        for (std::size_t i = 0; i < phase_stack_.size(); ++i) {
            if (i) phase_path_ += '/';
            phase_path_ += phase_stack_[i];
        }
    }

    PartyId me_;
    Channel& channel_;
    RandomnessCtx rand_;
    ProtocolConfig cfg_;
    FixedPointCodec codec_;
    PartyStats stats_;
    std::vector<std::string> phase_stack_;
    std::string phase_path_;
};

/// Runs the same protocol closure at three in-process parties (one thread
/// each) and merges their traffic counters. Deterministic for a fixed seed
/// setup. A failing party shuts the exchange down so the others unblock; the
/// first failure is rethrown with its original type.
template <typename F>
auto run_in_process(const ProtocolConfig& cfg, const SeedSetup& seeds, F&& program,
                    double timeout_s = 30.0,
                    const std::function<void(PartyCtx&)>& setup_hook = {}) {
    cfg.validate();
    using R = std::invoke_result_t<F&, PartyCtx&>;
    static_assert(!std::is_void_v<R>, "party program must return a value");

    LocalExchange exchange(timeout_s);
    std::array<std::optional<R>, 3> results;
    std::array<PartyStats, 3> stats;
    std::array<std::exception_ptr, 3> errors{};

    auto body = [&](int i) {
        PartyCtx ctx(PartyId{i}, exchange.endpoint(PartyId{i}), seeds.ctx_for(PartyId{i}),
                     cfg);
        if (setup_hook) setup_hook(ctx);
        try {
            results[i].emplace(program(ctx));
        } catch (...) {
            errors[i] = std::current_exception();
            exchange.shutdown();
        }
        stats[i] = ctx.stats();
    };

    std::array<std::thread, 3> threads;
    for (int i = 0; i < 3; ++i) threads[i] = std::thread(body, i);
    for (auto& t : threads) t.join();

    // Prefer the root cause: a party that died with a protocol error makes the
    // others fail with induced TransportErrors once the exchange shuts down.
    std::exception_ptr root, fallback;
    for (int i = 0; i < 3; ++i) {
        if (!errors[i]) continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const TransportError&) {
            if (!fallback) fallback = errors[i];
        } catch (...) {
            if (!root) root = errors[i];
        }
    }
    if (root) std::rethrow_exception(root);
    if (fallback) std::rethrow_exception(fallback);

    TrafficStats traffic;
    traffic.party = std::move(stats);
    std::array<R, 3> out{std::move(*results[0]), std::move(*results[1]),
                         std::move(*results[2])};
    return std::pair<std::array<R, 3>, TrafficStats>{std::move(out), std::move(traffic)};
}

} // namespace cbnn
