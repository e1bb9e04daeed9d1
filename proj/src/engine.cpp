#include "cbnn/engine.hpp"

#include <cstdio>

#include "cbnn/model_io.hpp"
#include "cbnn/secure_linear.hpp"
#include "cbnn/secure_nonlinear.hpp"

namespace cbnn {

namespace {

/// Dealing without a per-tensor barrier: the caller declares one round after
/// all tensors of the phase are on the wire.
RssShare deal_send(PartyCtx& ctx, const RingTensor& x) {
    const Ring& ring = ctx.ring();
    RingTensor c0 = ctx.rand().priv_ring(RandKind::Deal, ring, x.shape());
    RingTensor c1 = ctx.rand().priv_ring(RandKind::Deal, ring, x.shape());
    RingTensor c2 = sub(ring, x, add(ring, c0, c1));
    std::array<RingTensor, 3> c{std::move(c0), std::move(c1), std::move(c2)};
    int me = ctx.me().id;
    for (int i = 0; i < 3; ++i) {
        if (i == me) continue;
        ctx.send_ring(PartyId{i}, tag::deal_share, c[i]);
        ctx.send_ring(PartyId{i}, tag::deal_share, c[(i + 1) % 3]);
    }
    return {ctx.me(), c[me], c[(me + 1) % 3]};
}

RssShare deal_recv(PartyCtx& ctx, PartyId dealer, const Shape& shape) {
    RingTensor s0 = ctx.recv_ring(dealer, tag::deal_share, shape);
    RingTensor s1 = ctx.recv_ring(dealer, tag::deal_share, shape);
    return {ctx.me(), std::move(s0), std::move(s1)};
}

std::string layer_phase(std::size_t index, const Layer& l) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "L%03zu:", index);
    return buf + std::string(layer_kind_name(l.kind));
}

} // namespace

InferResult secure_infer(PartyCtx& ctx, const CompiledModel* model, const RealTensor* input,
                         const InferOptions& opts) {
    const Ring& ring = ctx.ring();
    const PartyId me = ctx.me();

    // -- setup: plan skeleton --------------------------------------------------
    ModelGraph plan;
    {
        auto scope = ctx.phase("setup");
        if (me == kModelOwner) {
            if (!model) throw ConfigError("model owner has no compiled model");
            plan = model->graph;
            auto skeleton = serialize_graph(plan, /*include_params=*/false);
            ctx.send_bytes(PartyId{0}, tag::deal_skeleton, skeleton);
            ctx.send_bytes(PartyId{2}, tag::deal_skeleton, skeleton);
        } else {
            plan = parse_graph(ctx.recv_bytes(kModelOwner, tag::deal_skeleton));
        }
        ctx.round();
    }
    if (!plan.compiled) throw ConfigError("secure inference needs a compiled plan");
    if (plan.ring_bits != ring.bits() || plan.frac_bits != ctx.config().frac_bits ||
        plan.msb_budget != ctx.config().msb_budget)
        throw ConfigError("model header (l,f,d) disagrees with the runtime config");
    std::vector<Shape> shapes = infer_shapes(plan);

    // -- setup: parameter and input deals ---------------------------------------
    std::vector<LinearParams> params(plan.layers.size());
    {
        auto scope = ctx.phase("setup");
        for (std::size_t i = 0; i < plan.layers.size(); ++i) {
            const Layer& l = plan.layers[i];
            if (!l.is_linear()) continue;
            LinearParams& p = params[i];
            p.kind = l.kind == LayerKind::Fc      ? LinearKind::Fc
                     : l.kind == LayerKind::Conv  ? LinearKind::Conv
                     : l.kind == LayerKind::PwConv ? LinearKind::PwConv
                                                   : LinearKind::DwConv;
            p.geom = l.geom;
            std::size_t w_count, b_count;
            if (l.kind == LayerKind::Fc) {
                w_count = l.in_features * l.out_features;
                b_count = l.out_features;
            } else {
                std::size_t kk = l.geom.kernel * l.geom.kernel;
                w_count = l.kind == LayerKind::DwConv
                              ? l.geom.in_channels * kk
                              : l.geom.out_channels * l.geom.in_channels * kk;
                b_count = l.geom.out_channels;
            }
            if (me == kModelOwner) {
                EncodedLayerParams enc =
                    encode_layer_params(model->graph.layers[i], ctx.codec());
                p.w = deal_send(ctx, enc.weights.reshaped(Shape{w_count}));
                p.b = deal_send(ctx, enc.bias);
            } else {
                p.w = deal_recv(ctx, kModelOwner, Shape{w_count});
                p.b = deal_recv(ctx, kModelOwner, Shape{b_count});
            }
        }
        ctx.round();
    }

    RssShare cur;
    {
        auto scope = ctx.phase("setup");
        if (me == kDataOwner) {
            if (!input) throw ConfigError("data owner has no input tensor");
            RingTensor enc = encode_tensor(ctx.codec(), input->reshaped(plan.input_shape));
            cur = deal_send(ctx, enc);
        } else {
            cur = deal_recv(ctx, kDataOwner, plan.input_shape);
        }
        cur.s0 = cur.s0.reshaped(plan.input_shape);
        cur.s1 = cur.s1.reshaped(plan.input_shape);
        ctx.round();
    }

    // -- layer loop --------------------------------------------------------------
    InferResult result;
    for (std::size_t i = 0; i < plan.layers.size(); ++i) {
        const Layer& l = plan.layers[i];
        auto scope = ctx.phase(layer_phase(i, l));
        switch (l.kind) {
            case LayerKind::Fc: {
                cur.s0 = cur.s0.reshaped(Shape{cur.s0.size()});
                cur.s1 = cur.s1.reshaped(Shape{cur.s1.size()});
                LinearParams p = params[i];
                p.w.s0 = p.w.s0.reshaped(Shape{l.out_features, l.in_features});
                p.w.s1 = p.w.s1.reshaped(p.w.s0.shape());
                cur = linear_infer(ctx, p, cur);
                break;
            }
            case LayerKind::Conv:
            case LayerKind::PwConv:
            case LayerKind::DwConv: {
                LinearParams p = params[i];
                p.w.s0 = p.w.s0.reshaped(l.kind == LayerKind::DwConv
                                             ? Shape{l.geom.in_channels, l.geom.kernel,
                                                     l.geom.kernel}
                                             : Shape{l.geom.out_channels, l.geom.in_channels,
                                                     l.geom.kernel, l.geom.kernel});
                p.w.s1 = p.w.s1.reshaped(p.w.s0.shape());
                cur = linear_infer(ctx, p, cur);
                break;
            }
            case LayerKind::Truncate:
                cur = truncate(ctx, cur, ctx.config().frac_bits);
                break;
            case LayerKind::Sign: {
                BitShare m = msb_extract(ctx, cur);
                cur = secure_sign(ctx, m);
                break;
            }
            case LayerKind::Relu: {
                BitShare m = msb_extract(ctx, cur);
                cur = secure_relu(ctx, cur, m);
                break;
            }
            case LayerKind::FusedSignMaxPool:
                cur = fused_sign_maxpool(ctx, cur, l.pool_window, l.pool_stride);
                break;
            case LayerKind::Flatten:
                cur.s0 = cur.s0.reshaped(Shape{cur.s0.size()});
                cur.s1 = cur.s1.reshaped(Shape{cur.s1.size()});
                break;
            case LayerKind::Output: {
                result.output_shape = cur.shape();
                result.output_scale = l.out_scale;
                if (opts.reveal_all) {
                    result.output = open_to_all(ctx, cur);
                } else {
                    auto got = reveal_to(ctx, cur, kDataOwner);
                    if (got) result.output = std::move(*got);
                }
                break;
            }
            case LayerKind::MaxPool:
            case LayerKind::BatchNorm:
                throw ConfigError("compiled plan contains an unfused layer");
        }
        // enforce the (C,H,W) shape after pooling/linear stages
        if (l.kind != LayerKind::Output && !(cur.s0.shape() == shapes[i])) {
            cur.s0 = cur.s0.reshaped(shapes[i]);
            cur.s1 = cur.s1.reshaped(shapes[i]);
        }
        if (ctx.debug_share_sink && l.kind != LayerKind::Output)
            ctx.debug_share_sink(i, cur.s0, cur.s1);
    }
    return result;
}

SimulationResult simulate_inference(const CompiledModel& model, const RealTensor& input,
                                    std::uint64_t seed, const InferOptions& opts,
                                    double inject_latency_ms,
                                    const std::function<void(PartyCtx&)>& setup_hook) {
    ProtocolConfig cfg;
    cfg.ring = Ring(model.graph.ring_bits);
    cfg.frac_bits = model.graph.frac_bits;
    cfg.msb_budget = model.graph.msb_budget;
    cfg.inject_latency_ms = inject_latency_ms;

    SeedSetup seeds = SeedSetup::from_seed(seed);
    auto [outs, stats] = run_in_process(
        cfg, seeds,
        [&](PartyCtx& ctx) {
            const CompiledModel* m = ctx.me() == kModelOwner ? &model : nullptr;
            const RealTensor* x = ctx.me() == kDataOwner ? &input : nullptr;
            return secure_infer(ctx, m, x, opts);
        },
        120.0, setup_hook);

    SimulationResult r;
    r.stats = stats;
    const InferResult& at0 = outs[0];
    if (!at0.output) throw ConfigError("simulation revealed no output at P0");
    r.output_raw = *at0.output;
    r.output_scale = at0.output_scale;
    FixedPointCodec codec(cfg.ring, cfg.frac_bits);
    r.output = decode_tensor(codec, r.output_raw, at0.output_scale);
    r.argmax_index = argmax(r.output);
    return r;
}

std::string cost_model_mismatch(const CompiledModel& model, const TrafficStats& stats,
                                const InferOptions& opts) {
    auto desc = [](const std::string& what, std::uint64_t expect, std::uint64_t got) {
        return what + ": analytic " + std::to_string(expect) + ", measured " +
               std::to_string(got);
    };
    for (const auto& c : model.layer_costs) {
        if (c.rounds == 0 && c.bytes[0] + c.bytes[1] + c.bytes[2] == 0) continue;
        std::uint64_t rounds = stats.prefix_rounds(c.phase);
        std::uint64_t expect_rounds = c.rounds;
        std::array<std::uint64_t, 3> expect_bytes = c.bytes;
        if (model.graph.layers[c.layer_index].kind == LayerKind::Output && opts.reveal_all) {
            std::uint64_t n = expect_bytes[1]; // reveal: P1/P2 send n bytes each
            expect_bytes = {n, n, n};          // open to all: every party sends n
        }
        if (rounds != expect_rounds) return desc(c.phase + " rounds", expect_rounds, rounds);
        for (int p = 0; p < 3; ++p) {
            std::uint64_t got = 0;
            for (const auto& [name, pc] : stats.party[p].by_phase)
                if (name.rfind(c.phase, 0) == 0) got += pc.bytes;
            if (got != expect_bytes[p])
                return desc(c.phase + " bytes at P" + std::to_string(p), expect_bytes[p],
                            got);
        }
    }
    // setup: skeleton broadcast + parameter/input deals
    std::uint64_t skeleton = serialize_graph(model.graph, false).size();
    auto expect = model.setup_param_bytes;
    expect[1] += 2 * skeleton;
    std::uint64_t setup_rounds = stats.prefix_rounds("setup");
    if (setup_rounds != model.setup_rounds)
        return desc("setup rounds", model.setup_rounds, setup_rounds);
    for (int p = 0; p < 3; ++p) {
        std::uint64_t got = 0;
        for (const auto& [name, pc] : stats.party[p].by_phase)
            if (name.rfind("setup", 0) == 0) got += pc.bytes;
        if (got != expect[p])
            return desc("setup bytes at P" + std::to_string(p), expect[p], got);
    }
    return {};
}

} // namespace cbnn
