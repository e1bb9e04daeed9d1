#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>

namespace cbnn {

struct PhaseCounters {
    std::uint64_t messages = 0;
    std::uint64_t bytes = 0;
    std::uint64_t rounds = 0;

    PhaseCounters& operator+=(const PhaseCounters& o) {
        messages += o.messages;
        bytes += o.bytes;
        rounds += o.rounds;
        return *this;
    }
    bool operator==(const PhaseCounters&) const = default;
};

/// One party's traffic counters. Bytes count payload only (framing excluded);
/// a round is an explicit synchronization barrier declared by protocol code.
struct PartyStats {
    std::uint64_t messages = 0;
    std::uint64_t bytes = 0;
    std::uint64_t rounds = 0;
    std::map<std::string, PhaseCounters> by_phase;

    void add_message(const std::string& phase, std::uint64_t payload_bytes) {
        ++messages;
        bytes += payload_bytes;
        auto& p = by_phase[phase];
        ++p.messages;
        p.bytes += payload_bytes;
    }
    void add_round(const std::string& phase) {
        ++rounds;
        ++by_phase[phase].rounds;
    }
};

/// Merged counters of a full three-party run.
struct TrafficStats {
    std::array<PartyStats, 3> party;

    std::uint64_t total_bytes() const {
        return party[0].bytes + party[1].bytes + party[2].bytes;
    }
    std::uint64_t max_party_bytes() const {
        std::uint64_t m = 0;
        for (const auto& p : party) m = std::max(m, p.bytes);
        return m;
    }
    std::uint64_t total_messages() const {
        return party[0].messages + party[1].messages + party[2].messages;
    }
    /// Protocol rounds; identical at every party by construction (SPMD barriers).
    std::uint64_t rounds() const {
        std::uint64_t m = 0;
        for (const auto& p : party) m = std::max(m, p.rounds);
        return m;
    }
    /// Sum of a phase's counters over all parties, matching phases by exact name.
    PhaseCounters phase_total(const std::string& name) const {
        PhaseCounters t;
        for (const auto& p : party) {
            auto it = p.by_phase.find(name);
            if (it != p.by_phase.end()) t += it->second;
        }
        return t;
    }
    /// Rolls up every phase whose path starts with the given prefix.
    PhaseCounters prefix_total(const std::string& prefix) const {
        PhaseCounters t;
        for (const auto& p : party)
            for (const auto& [name, c] : p.by_phase)
                if (name.rfind(prefix, 0) == 0) t += c;
        return t;
    }
    /// Max-over-parties rounds under a phase prefix.
    std::uint64_t prefix_rounds(const std::string& prefix) const {
        std::uint64_t m = 0;
        for (const auto& p : party) {
            std::uint64_t r = 0;
            for (const auto& [name, c] : p.by_phase)
                if (name.rfind(prefix, 0) == 0) r += c.rounds;
            m = std::max(m, r);
        }
        return m;
    }
};

/// One-way latency plus bandwidth; the analytic cost model is
/// rounds * latency + bytes / bandwidth.
struct NetProfile {
    double latency_ms = 0.2;
    double bandwidth_mbps = 625.0; // megabytes per second

    static NetProfile lan() { return {0.2, 625.0}; }
    static NetProfile wan() { return {80.0, 40.0}; }
};

struct TimeEstimate {
    std::array<double, 3> per_party_s{};
    double max_party_s = 0.0;
};

inline TimeEstimate estimate_time(const TrafficStats& stats, const NetProfile& profile) {
    TimeEstimate e;
    for (int i = 0; i < 3; ++i) {
        const auto& p = stats.party[i];
        e.per_party_s[i] = static_cast<double>(p.rounds) * profile.latency_ms / 1e3 +
                           static_cast<double>(p.bytes) / (profile.bandwidth_mbps * 1e6);
        e.max_party_s = std::max(e.max_party_s, e.per_party_s[i]);
    }
    return e;
}

} // namespace cbnn
