#include "doctest.h"

#include <random>

#include "cbnn/compiler.hpp"
#include "cbnn/engine.hpp"
#include "cbnn/model_io.hpp"
#include "cbnn/oracle.hpp"
#include "support/netgen.hpp"

using namespace cbnn;
using namespace cbnn::test;

namespace {
BnParams make_bn(std::vector<double> gamma, std::vector<double> beta, std::vector<double> mean,
                 std::vector<double> var, double eps = 1e-5) {
    BnParams bn;
    Shape s{gamma.size()};
    bn.gamma = RealTensor(s, std::move(gamma));
    bn.beta = RealTensor(s, std::move(beta));
    bn.mean = RealTensor(s, std::move(mean));
    bn.var = RealTensor(s, std::move(var));
    bn.eps = eps;
    return bn;
}
} // namespace

TEST_CASE("bn/sign threshold follows the closed form") {
    // identity normalization: gamma'=1, beta'=0, t=0
    BnParams ident = make_bn({1}, {0}, {0}, {1.0 - 1e-5});
    CHECK(bn_sign_threshold(ident)[0] == doctest::Approx(0.0).epsilon(1e-9));

    // gamma=2, var+eps=4, beta=3, mean=1: gamma'=1, beta'=2, t=2
    BnParams ex = make_bn({2}, {3}, {1}, {4.0 - 1e-5});
    CHECK(bn_sign_threshold(ex)[0] == doctest::Approx(2.0).epsilon(1e-6));

    BnParams bad = make_bn({-0.5, 1.0}, {0, 0}, {0, 0}, {1, 1});
    CHECK_THROWS_WITH_AS(bn_sign_threshold(bad), doctest::Contains("channel 0"), RangeError);
}

TEST_CASE("Sign(gamma'x + beta') equals Sign(x + t) on random parameters") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> gdist(0.1, 3.0), rdist(-2.0, 2.0),
        vdist(0.05, 4.0), xdist(-50.0, 50.0);
    for (int rep = 0; rep < 100; ++rep) {
        BnParams bn = make_bn({gdist(gen)}, {rdist(gen)}, {rdist(gen)}, {vdist(gen)});
        double t = bn_sign_threshold(bn)[0];
        double gp = bn.gamma[0] / std::sqrt(bn.var[0] + bn.eps);
        double bp = bn.beta[0] - gp * bn.mean[0];
        for (int i = 0; i < 100; ++i) {
            double x = xdist(gen);
            CHECK((gp * x + bp >= 0) == (x + t >= 0));
        }
    }
}

TEST_CASE("bn folding into a linear layer matches the affine identities") {
    Layer fc;
    fc.kind = LayerKind::Fc;
    fc.in_features = 1;
    fc.out_features = 1;
    fc.weights = RealTensor(Shape{1, 1}, std::vector<double>{1.0});
    fc.bias = RealTensor(Shape{1}, std::vector<double>{0.0});

    SUBCASE("identity bn leaves the layer unchanged") {
        fuse_bn_into_linear(fc, make_bn({1}, {0}, {0}, {1.0 - 1e-5}));
        CHECK(fc.weights[0] == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(fc.bias[0] == doctest::Approx(0.0).epsilon(1e-9));
    }

    SUBCASE("worked example: W=1,b=0, gamma=3, var+eps=9, mean=2, beta=5") {
        fuse_bn_into_linear(fc, make_bn({3}, {5}, {2}, {9.0 - 1e-5}));
        CHECK(fc.weights[0] == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(fc.bias[0] == doctest::Approx(3.0).epsilon(1e-6));
    }
}

TEST_CASE("fused linear equals BN(linear(x)) in real arithmetic") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> wdist(-1.0, 1.0), gdist(0.2, 2.5),
        vdist(0.1, 3.0);
    for (int rep = 0; rep < 30; ++rep) {
        Layer fc;
        fc.kind = LayerKind::Fc;
        fc.in_features = 5;
        fc.out_features = 3;
        fc.weights = RealTensor(Shape{3, 5});
        fc.bias = RealTensor(Shape{3});
        for (auto& v : fc.weights.values()) v = wdist(gen);
        for (auto& v : fc.bias.values()) v = wdist(gen);
        BnParams bn = make_bn({gdist(gen), gdist(gen), gdist(gen)},
                              {wdist(gen), wdist(gen), wdist(gen)},
                              {wdist(gen), wdist(gen), wdist(gen)},
                              {vdist(gen), vdist(gen), vdist(gen)});

        Layer fused = fc;
        fuse_bn_into_linear(fused, bn);
        for (int i = 0; i < 33; ++i) {
            RealTensor x(Shape{5});
            for (auto& v : x.values()) v = wdist(gen);
            // unfused: BN(fc(x))
            double worst = 0;
            for (std::size_t c = 0; c < 3; ++c) {
                double z = fc.bias[c];
                for (std::size_t j = 0; j < 5; ++j) z += fc.weights[c * 5 + j] * x[j];
                double gp = bn.gamma[c] / std::sqrt(bn.var[c] + bn.eps);
                double expect = gp * (z - bn.mean[c]) + bn.beta[c];
                double got = fused.bias[c];
                for (std::size_t j = 0; j < 5; ++j) got += fused.weights[c * 5 + j] * x[j];
                worst = std::max(worst, std::fabs(expect - got));
            }
            CHECK(worst < 1e-9);
        }
    }
}

TEST_CASE("separable substitution follows the channel threshold") {
    auto conv = [](std::size_t cin, std::size_t cout, const std::string& name) {
        Layer l;
        l.kind = LayerKind::Conv;
        l.name = name;
        l.geom = Conv2dGeom{cin, cout, 3, 1, 1};
        l.weights = RealTensor(Shape{cout, cin, 3, 3});
        l.bias = RealTensor(Shape{cout});
        return l;
    };

    ModelGraph g;
    g.input_shape = Shape{3, 8, 8};
    g.layers.push_back(conv(3, 32, "c1"));  // below threshold: untouched
    g.layers.push_back(conv(32, 64, "c2")); // substituted
    Layer out;
    out.kind = LayerKind::Output;
    g.layers.push_back(out);

    std::size_t n = substitute_separable(g, 4);
    CHECK(n == 1);
    CHECK(g.layers[0].kind == LayerKind::Conv);
    CHECK(g.layers[1].kind == LayerKind::DwConv);
    CHECK(g.layers[2].kind == LayerKind::PwConv);

    // weight counts: 32*9 + 32*64 = 2336 vs 32*64*9 = 18432
    SeparableCounts counts = separable_weight_counts(32, 64, 3);
    CHECK(counts.standard == 18432);
    CHECK(counts.separable == 2336);
    CHECK(g.layers[1].weight_count() + g.layers[2].weight_count() == 2336);

    // identity-flavored initialization preserves the output shape
    std::vector<Shape> shapes = infer_shapes(g);
    CHECK(shapes[2] == Shape{64, 8, 8});
}

TEST_CASE("compile fuses BN and maxpool, inserts truncation and is idempotent") {
    ModelGraph g = random_signnet(101);
    // splice a BN between the first linear layer and its Sign
    Layer bn;
    bn.kind = LayerKind::BatchNorm;
    bn.name = "bn";
    std::size_t c = 0;
    for (std::size_t i = 0; i < g.layers.size(); ++i)
        if (g.layers[i].is_linear()) {
            c = g.layers[i].kind == LayerKind::Fc ? g.layers[i].out_features
                                                  : g.layers[i].geom.out_channels;
            bn.bn = make_bn(std::vector<double>(c, 1.2), std::vector<double>(c, 0.01),
                            std::vector<double>(c, 0.0), std::vector<double>(c, 1.0));
            g.layers.insert(g.layers.begin() + static_cast<std::ptrdiff_t>(i) + 1, bn);
            break;
        }

    CompiledModel m = compile(g);
    for (const Layer& l : m.graph.layers) {
        CHECK(l.kind != LayerKind::BatchNorm);
        CHECK(l.kind != LayerKind::MaxPool);
    }
    CHECK(m.graph.compiled);

    // compile of a compiled plan is the identity (bit-equal serialization)
    CompiledModel again = compile(m.graph);
    CHECK(serialize_graph(again.graph) == serialize_graph(m.graph));

    // truncation placement: a relunet compiles with Truncate layers, a signnet
    // with tiny first-layer weights without any
    CompiledModel relu = compile(random_relunet(5));
    bool has_trunc = false;
    for (const Layer& l : relu.graph.layers) has_trunc |= l.kind == LayerKind::Truncate;
    CHECK(has_trunc);
}

TEST_CASE("range analysis rejects nets that blow the msb budget") {
    ModelGraph g;
    g.input_shape = Shape{8};
    g.msb_budget = 16; // wide mask: ReLU inputs must stay below 2^(31-16-13) = 4
    Layer fc;
    fc.kind = LayerKind::Fc;
    fc.name = "big_fc";
    fc.in_features = 8;
    fc.out_features = 4;
    fc.weights = RealTensor(Shape{4, 8}, 1.0); // post-truncation bound ~9
    fc.bias = RealTensor(Shape{4}, 1.0);
    g.layers.push_back(fc);
    Layer relu;
    relu.kind = LayerKind::Relu;
    relu.name = "relu";
    g.layers.push_back(relu);
    Layer out;
    out.kind = LayerKind::Output;
    g.layers.push_back(out);

    CHECK_THROWS_WITH_AS(compile(g), doctest::Contains("relu"), RangeError);
    // the default mask width leaves ample headroom for the same net
    g.msb_budget = 8;
    CHECK_NOTHROW(compile(g));
}

TEST_CASE("maxpool without a preceding Sign cannot compile") {
    ModelGraph g;
    g.input_shape = Shape{1, 4, 4};
    Layer mp;
    mp.kind = LayerKind::MaxPool;
    mp.name = "mp";
    g.layers.push_back(mp);
    Layer out;
    out.kind = LayerKind::Output;
    g.layers.push_back(out);
    CHECK_THROWS_AS(compile(g), ConfigError);
}

TEST_CASE("bn without a preceding linear layer cannot compile") {
    ModelGraph g;
    g.input_shape = Shape{4};
    Layer bn;
    bn.kind = LayerKind::BatchNorm;
    bn.name = "bn";
    bn.bn = make_bn({1, 1, 1, 1}, {0, 0, 0, 0}, {0, 0, 0, 0}, {1, 1, 1, 1});
    g.layers.push_back(bn);
    Layer out;
    out.kind = LayerKind::Output;
    g.layers.push_back(out);
    CHECK_THROWS_AS(compile(g), ConfigError);
}

TEST_CASE("a 2conv/2maxpool/2fc graph compiles to the measured round count") {
    // MnistNet3-shaped architecture at desk scale: conv-sign-pool twice, then
    // two fully connected layers.
    ModelGraph g;
    g.input_shape = Shape{1, 8, 8};
    std::mt19937_64 gen(71);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    auto conv = [&](std::size_t cin, std::size_t cout, double scale, const char* name) {
        Layer l;
        l.kind = LayerKind::Conv;
        l.name = name;
        l.geom = Conv2dGeom{cin, cout, 3, 1, 1};
        l.weights = RealTensor(Shape{cout, cin, 3, 3});
        l.bias = RealTensor(Shape{cout});
        for (auto& v : l.weights.values()) v = unit(gen) * scale;
        return l;
    };
    auto act = [](LayerKind k, const char* name) {
        Layer l;
        l.kind = k;
        l.name = name;
        return l;
    };

    g.layers.push_back(conv(1, 4, 0.008, "conv1"));
    g.layers.push_back(act(LayerKind::Sign, "sign1"));
    g.layers.push_back(act(LayerKind::MaxPool, "mp1"));
    g.layers.push_back(conv(4, 8, 0.3, "conv2"));
    g.layers.push_back(act(LayerKind::Sign, "sign2"));
    g.layers.push_back(act(LayerKind::MaxPool, "mp2"));
    g.layers.push_back(act(LayerKind::Flatten, "flat"));
    Layer fc1;
    fc1.kind = LayerKind::Fc;
    fc1.name = "fc1";
    fc1.in_features = 8 * 2 * 2;
    fc1.out_features = 16;
    fc1.weights = RealTensor(Shape{16, 32});
    fc1.bias = RealTensor(Shape{16});
    for (auto& v : fc1.weights.values()) v = unit(gen) * 0.4;
    g.layers.push_back(fc1);
    g.layers.push_back(act(LayerKind::Sign, "sign3"));
    Layer fc2;
    fc2.kind = LayerKind::Fc;
    fc2.name = "fc2";
    fc2.in_features = 16;
    fc2.out_features = 10;
    fc2.weights = RealTensor(Shape{10, 16});
    fc2.bias = RealTensor(Shape{10});
    for (auto& v : fc2.weights.values()) v = unit(gen) * 0.03;
    g.layers.push_back(fc2);
    g.layers.push_back(act(LayerKind::Output, "out"));

    CompiledModel m = compile(g);
    // conv1 1 + sign 6 + pool 6 + conv2 1 + sign 6 + pool 6 + fc 1 + sign 6
    // + fc 1 + reveal 1 = 35 protocol rounds, plus 3 setup rounds
    CHECK(m.protocol_rounds() == 35);

    RealTensor x = random_input(g.input_shape, 72);
    SimulationResult r = simulate_inference(m, x, 73);
    CHECK(r.stats.rounds() == m.total_rounds());
    CHECK(cost_model_mismatch(m, r.stats) == "");
}

TEST_CASE("rewrites preserve plaintext semantics on random graphs") {
    std::mt19937_64 gen(13);
    std::uniform_real_distribution<double> pdist(-1.0, 1.0), gdist(0.2, 2.0),
        vdist(0.1, 2.0);
    for (int rep = 0; rep < 6; ++rep) {
        ModelGraph g = random_signnet(200 + rep);
        // insert BN before each activation that follows a linear layer
        std::vector<Layer> with_bn;
        for (std::size_t i = 0; i < g.layers.size(); ++i) {
            with_bn.push_back(g.layers[i]);
            if (!g.layers[i].is_linear() || i + 1 >= g.layers.size()) continue;
            LayerKind nk = g.layers[i + 1].kind;
            if (nk != LayerKind::Sign && nk != LayerKind::Relu) continue;
            std::size_t c = g.layers[i].kind == LayerKind::Fc
                                ? g.layers[i].out_features
                                : g.layers[i].geom.out_channels;
            Layer bn;
            bn.kind = LayerKind::BatchNorm;
            bn.name = "bn" + std::to_string(i);
            std::vector<double> gm(c), bt(c), mu(c), vr(c);
            for (std::size_t j = 0; j < c; ++j) {
                gm[j] = gdist(gen);
                bt[j] = pdist(gen) * 0.02;
                mu[j] = pdist(gen) * 0.02;
                vr[j] = vdist(gen);
            }
            bn.bn = make_bn(gm, bt, mu, vr);
            with_bn.push_back(std::move(bn));
        }
        g.layers = std::move(with_bn);

        CompiledModel m = compile(g);
        for (int xi = 0; xi < 100; ++xi) {
            RealTensor x = random_input(g.input_shape, 900 + rep * 100 + xi);
            RealTensor before = forward_real(g, x);
            RealTensor after = forward_real(m.graph, x);
            REQUIRE(before.size() == after.size());
            CHECK(argmax(before) == argmax(after));
            for (std::size_t i = 0; i < before.size(); ++i)
                CHECK(std::fabs(before[i] - after[i]) < 1e-9);
        }
    }
}
