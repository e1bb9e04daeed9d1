#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "cbnn/model_io.hpp"
#include "support/netgen.hpp"

using namespace cbnn;
using namespace cbnn::test;

namespace {
std::filesystem::path temp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}
} // namespace

TEST_CASE("model serialization round-trips every test net") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 9ull}) {
        ModelGraph g = seed % 2 ? random_relunet(seed) : random_signnet(seed);
        auto bytes = serialize_graph(g);
        ModelGraph back = parse_graph(bytes);
        CHECK(serialize_graph(back) == bytes);
        CHECK(back.layers.size() == g.layers.size());
        CHECK(back.input_shape == g.input_shape);

        // compiled plans round-trip too, scales included
        CompiledModel m = compile(g);
        auto cb = serialize_graph(m.graph);
        ModelGraph cback = parse_graph(cb);
        CHECK(cback.compiled);
        CHECK(serialize_graph(cback) == cb);
        for (std::size_t i = 0; i < cback.layers.size(); ++i) {
            CHECK(cback.layers[i].in_scale == m.graph.layers[i].in_scale);
            CHECK(cback.layers[i].out_scale == m.graph.layers[i].out_scale);
        }
    }
}

TEST_CASE("truncated files and checksum flips are rejected") {
    ModelGraph g = random_signnet(4);
    auto bytes = serialize_graph(g);

    std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + bytes.size() / 2);
    CHECK_THROWS_AS(parse_graph(cut), ConfigError);

    auto flipped = bytes;
    flipped[bytes.size() / 3] ^= 0x40;
    CHECK_THROWS_WITH_AS(parse_graph(flipped), doctest::Contains("checksum"), ConfigError);

    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_WITH_AS(parse_graph(bad_magic), doctest::Contains("magic"), ConfigError);
}

TEST_CASE("save/load goes through the filesystem unchanged") {
    ModelGraph g = random_relunet(5);
    auto path = temp_file("cbnn_io_test.cbnn");
    save_model(g, path);
    ModelGraph back = load_model(path);
    CHECK(serialize_graph(back) == serialize_graph(g));
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_model(path), ConfigError);
}

TEST_CASE("csv inputs parse values, separators and comments") {
    auto path = temp_file("cbnn_input.csv");
    {
        std::ofstream out(path);
        out << "# test vector\n0.5, -0.25, 1\n0.125\t-1\n";
    }
    RealTensor x = load_input_csv(path);
    REQUIRE(x.size() == 5);
    CHECK(x[0] == 0.5);
    CHECK(x[1] == -0.25);
    CHECK(x[2] == 1.0);
    CHECK(x[3] == 0.125);
    CHECK(x[4] == -1.0);
    std::filesystem::remove(path);
}

TEST_CASE("raw ring dumps round-trip and check the ring width") {
    RingTensor t(Shape{2, 3});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = 1000 + i;
    auto path = temp_file("cbnn_input.cbnt");
    save_input_raw(t, 32, path);
    RingTensor back = load_input_raw(path, 32);
    CHECK(back == t);
    CHECK_THROWS_AS(load_input_raw(path, 16), ConfigError);
    std::filesystem::remove(path);
}

TEST_CASE("reports serialize with stable key order") {
    RunReport rep;
    rep.mode = "simulate";
    rep.model = "m.cbnn";
    rep.seed = 9;
    rep.ring_bits = 32;
    rep.frac_bits = 13;
    rep.msb_budget = 8;
    rep.stats.party[0].bytes = 100;
    rep.stats.party[0].rounds = 4;
    rep.stats.party[0].by_phase["L000:fc"] = {2, 100, 1};
    rep.argmax_index = 2;
    rep.output = {0.5, -1.25, 3.0};

    std::string a = rep.to_json();
    std::string b = rep.to_json();
    CHECK(a == b);
    CHECK(a.find("\"argmax\": 2") != std::string::npos);
    // keys are emitted sorted at every level
    CHECK(a.find("\"config\"") < a.find("\"mode\""));
    CHECK(a.find("\"mode\"") < a.find("\"model\""));
}
