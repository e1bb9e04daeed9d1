#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cbnn/model.hpp"
#include "cbnn/stats.hpp"

namespace cbnn {

/// Binary model container, magic "CBNN". Little-endian throughout, CRC32 over
/// the body; see docs/FORMATS.md for the exact layout and worked examples.
std::vector<std::uint8_t> serialize_graph(const ModelGraph& graph,
                                          bool include_params = true);
ModelGraph parse_graph(const std::vector<std::uint8_t>& bytes);

void save_model(const ModelGraph& graph, const std::filesystem::path& path);
ModelGraph load_model(const std::filesystem::path& path);

/// Input tensors: CSV of reals (encoded at load time) or a raw ring dump,
/// magic "CBNT".
RealTensor load_input_csv(const std::filesystem::path& path);
void save_input_raw(const RingTensor& t, unsigned ring_bits,
                    const std::filesystem::path& path);
RingTensor load_input_raw(const std::filesystem::path& path, unsigned expect_bits);

/// Everything one run produces; serializes to stable, diff-friendly JSON
/// (sorted keys, fixed float formatting).
struct RunReport {
    std::string mode;  // "simulate" | "tcp"
    std::string model;
    std::uint64_t seed = 0;
    unsigned ring_bits = 0, frac_bits = 0, msb_budget = 0;
    std::string net_profile; // "lan" | "wan" | "both"
    TrafficStats stats;
    bool cost_model_match = false;
    std::uint64_t analytic_rounds = 0;
    std::size_t argmax_index = 0;
    std::vector<double> output; // decoded logits when revealed

    std::string to_json() const;
};

void save_report(const RunReport& report, const std::filesystem::path& path);

} // namespace cbnn
