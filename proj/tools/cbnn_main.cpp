#include <chrono>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "cbnn/engine.hpp"
#include "cbnn/model_io.hpp"
#include "cbnn/tcp_net.hpp"
#include "cbnn/trainer.hpp"

namespace {

using namespace cbnn;

RealTensor load_input_any(const std::string& path, unsigned ring_bits, unsigned frac_bits) {
    std::ifstream probe(path, std::ios::binary);
    char magic[4] = {};
    probe.read(magic, 4);
    if (probe.gcount() == 4 && std::string(magic, 4) == "CBNT") {
        RingTensor raw = load_input_raw(path, ring_bits);
        FixedPointCodec codec(Ring(ring_bits), frac_bits);
        return decode_tensor(codec, raw, static_cast<int>(frac_bits));
    }
    return load_input_csv(path);
}

CompiledModel load_compiled(const std::string& path) {
    ModelGraph g = load_model(path);
    return compile(g);
}

RunReport make_report(const std::string& mode, const std::string& model_path,
                      std::uint64_t seed, const CompiledModel& model,
                      const SimulationResult& sim, bool include_output) {
    RunReport rep;
    rep.mode = mode;
    rep.model = model_path;
    rep.seed = seed;
    rep.ring_bits = model.graph.ring_bits;
    rep.frac_bits = model.graph.frac_bits;
    rep.msb_budget = model.graph.msb_budget;
    rep.net_profile = "both";
    rep.stats = sim.stats;
    rep.analytic_rounds = model.total_rounds();
    rep.cost_model_match = cost_model_mismatch(model, sim.stats).empty();
    rep.argmax_index = sim.argmax_index;
    if (include_output) rep.output.assign(sim.output.values().begin(), sim.output.values().end());
    return rep;
}

void print_run_summary(const CompiledModel& model, const SimulationResult& sim) {
    TimeEstimate lan = estimate_time(sim.stats, NetProfile::lan());
    TimeEstimate wan = estimate_time(sim.stats, NetProfile::wan());
    std::cout << "argmax: " << sim.argmax_index << "\n"
              << "rounds: " << sim.stats.rounds() << " (analytic "
              << model.total_rounds() << ")\n"
              << "comm total: " << static_cast<double>(sim.stats.total_bytes()) / 1e6
              << " MB, max party: "
              << static_cast<double>(sim.stats.max_party_bytes()) / 1e6 << " MB\n"
              << "est time LAN: " << lan.max_party_s << " s, WAN: " << wan.max_party_s
              << " s\n";
    std::string mismatch = cost_model_mismatch(model, sim.stats);
    if (!mismatch.empty()) std::cout << "cost model mismatch: " << mismatch << "\n";
}

int cmd_simulate(const std::string& model_path, const std::string& input_path,
                 std::uint64_t seed, const std::string& profile, bool reveal_all,
                 double inject_latency_ms, const std::string& report_path) {
    CompiledModel model = load_compiled(model_path);
    RealTensor input = load_input_any(input_path, model.graph.ring_bits, model.graph.frac_bits);
    InferOptions opts;
    opts.reveal_all = reveal_all;
    SimulationResult sim =
        simulate_inference(model, input, seed, opts, inject_latency_ms);
    print_run_summary(model, sim);
    if (profile == "lan" || profile == "wan") {
        NetProfile p = profile == "lan" ? NetProfile::lan() : NetProfile::wan();
        std::cout << "est time (" << profile
                  << "): " << estimate_time(sim.stats, p).max_party_s << " s\n";
    }
    if (!report_path.empty()) {
        RunReport rep = make_report("simulate", model_path, seed, model, sim, true);
        rep.net_profile = profile;
        save_report(rep, report_path);
    }
    return 0;
}

int cmd_run_party(int party, const std::string& peers_spec, const std::string& model_path,
                  const std::string& input_path, std::uint64_t seed, unsigned ring_bits,
                  unsigned frac_bits, unsigned msb_budget, double timeout_s,
                  const std::string& report_path) {
    PartyId me = checked_party(party);
    std::optional<CompiledModel> model;
    std::optional<RealTensor> input;
    ProtocolConfig cfg;
    cfg.ring = Ring(ring_bits);
    cfg.frac_bits = frac_bits;
    cfg.msb_budget = msb_budget;
    if (me == kModelOwner) {
        if (model_path.empty()) throw ConfigError("party 1 (model owner) needs --model");
        model = load_compiled(model_path);
        cfg.ring = Ring(model->graph.ring_bits);
        cfg.frac_bits = model->graph.frac_bits;
        cfg.msb_budget = model->graph.msb_budget;
    }
    cfg.validate();
    if (me == kDataOwner) {
        if (input_path.empty()) throw ConfigError("party 0 (data owner) needs --input");
        input = load_input_any(input_path, cfg.ring.bits(), cfg.frac_bits);
    }

    TcpMesh mesh(me, PeerList::parse(peers_spec), timeout_s);
    SeedSetup seeds = SeedSetup::from_seed(seed);
    PartyCtx ctx(me, mesh, seeds.ctx_for(me), cfg);

    InferResult result = secure_infer(ctx, model ? &*model : nullptr,
                                      input ? &*input : nullptr, {});

    std::cout << "party " << party << " done; rounds " << ctx.stats().rounds << ", bytes "
              << ctx.stats().bytes << "\n";
    if (result.output) {
        FixedPointCodec codec(cfg.ring, cfg.frac_bits);
        RealTensor decoded = decode_tensor(codec, *result.output, result.output_scale);
        std::cout << "argmax: " << argmax(decoded) << "\noutput:";
        for (double v : decoded.values()) std::cout << " " << v;
        std::cout << "\n";
        if (!report_path.empty()) {
            RunReport rep;
            rep.mode = "tcp";
            rep.model = model_path;
            rep.seed = seed;
            rep.ring_bits = cfg.ring.bits();
            rep.frac_bits = cfg.frac_bits;
            rep.msb_budget = cfg.msb_budget;
            rep.net_profile = "both";
            rep.stats.party[me.id] = ctx.stats();
            rep.argmax_index = argmax(decoded);
            rep.output.assign(decoded.values().begin(), decoded.values().end());
            save_report(rep, report_path);
        }
    } else if (!report_path.empty()) {
        RunReport rep;
        rep.mode = "tcp";
        rep.model = model_path;
        rep.seed = seed;
        rep.ring_bits = cfg.ring.bits();
        rep.frac_bits = cfg.frac_bits;
        rep.msb_budget = cfg.msb_budget;
        rep.stats.party[me.id] = ctx.stats();
        save_report(rep, report_path);
    }
    return 0;
}

int cmd_compile(const std::string& model_path, const std::string& out_path,
                int separable_threshold, int msb_budget) {
    ModelGraph g = load_model(model_path);
    if (msb_budget > 0) g.msb_budget = static_cast<unsigned>(msb_budget);
    std::size_t before_params = g.param_count();
    std::size_t substituted = 0;
    if (separable_threshold > 0)
        substituted = substitute_separable(g, static_cast<std::size_t>(separable_threshold));
    CompiledModel m = compile(g);
    save_model(m.graph, out_path);

    std::size_t after_params = m.graph.param_count();
    std::cout << "compiled " << model_path << " -> " << out_path << "\n"
              << "layers: " << m.graph.layers.size() << ", analytic rounds: "
              << m.total_rounds() << "\n"
              << "parameters: " << after_params;
    if (substituted > 0) {
        double reduction = 1.0 - static_cast<double>(after_params) /
                                     static_cast<double>(before_params);
        std::cout << " (" << substituted << " convolutions separable, "
                  << reduction * 100.0 << "% parameter reduction)";
    }
    std::cout << "\n";
    return 0;
}

int cmd_train_toy(const std::string& config_path, const std::string& out_path,
                  const std::string& report_path) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot read " + config_path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, true, true);

    auto ds = j.value("dataset", nlohmann::json::object());
    Dataset full = make_blobs(ds.value("per_class", 150), ds.value("classes", 4),
                              ds.value("dim", 8), ds.value("spread", 0.25),
                              ds.value("seed", 5));
    auto [train, val] = split_dataset(full);

    TrainConfig tc;
    auto tj = j.value("teacher", nlohmann::json::object());
    tc.epochs = tj.value("epochs", 60);
    tc.batch = tj.value("batch", 32);
    tc.lr = tj.value("lr", 0.1);
    tc.seed = j.value("seed", 1);
    TrainResult teacher = train_teacher(train, tj.value("hidden", 32), tc);

    TrainConfig sc = tc;
    auto sj = j.value("student", nlohmann::json::object());
    sc.epochs = sj.value("epochs", 40);
    sc.batch = sj.value("batch", 32);
    sc.lr = sj.value("lr", 0.1);
    auto kj = j.value("kd", nlohmann::json::object());
    sc.kd.temperature = kj.value("temperature", 10.0);
    sc.kd.lambda = kj.value("lambda", 0.1);
    TrainResult student = train_student_kd(train, &teacher.model, sj.value("hidden", 12), sc);

    double teacher_acc = accuracy(teacher.model, val);
    double student_acc = accuracy(student.model, val);
    std::cout << "teacher val accuracy: " << teacher_acc << "\n"
              << "student val accuracy: " << student_acc << " (lambda " << sc.kd.lambda
              << ", T " << sc.kd.temperature << ")\n";

    ModelGraph g = export_graph(student.model);
    save_model(g, out_path);
    std::cout << "saved " << out_path << "\n";

    if (!report_path.empty()) {
        nlohmann::json rep{{"teacher_val_accuracy", teacher_acc},
                           {"student_val_accuracy", student_acc},
                           {"teacher_loss", teacher.epoch_loss},
                           {"student_loss", student.epoch_loss}};
        std::ofstream out(report_path);
        out << rep.dump(2) << "\n";
    }
    return 0;
}

int cmd_bench(const std::string& model_path, const std::string& input_path, int trials,
              std::uint64_t seed, const std::string& report_path) {
    CompiledModel model = load_compiled(model_path);
    RealTensor input = load_input_any(input_path, model.graph.ring_bits, model.graph.frac_bits);

    double total_ms = 0, best_ms = 1e300;
    SimulationResult last;
    for (int t = 0; t < trials; ++t) {
        auto start = std::chrono::steady_clock::now();
        last = simulate_inference(model, input, seed + static_cast<std::uint64_t>(t));
        double ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - start)
                        .count();
        total_ms += ms;
        best_ms = std::min(best_ms, ms);
    }
    std::cout << "trials: " << trials << ", mean wall " << total_ms / trials
              << " ms, best " << best_ms << " ms\n";
    print_run_summary(model, last);
    if (!report_path.empty()) {
        RunReport rep = make_report("simulate", model_path, seed, model, last, false);
        save_report(rep, report_path);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"three-party secure inference engine for binarized networks"};
    app.require_subcommand(1);

    std::string model_path, input_path, out_path, report_path, peers, profile = "both",
                config_path;
    std::uint64_t seed = 1;
    int party = -1, trials = 10, separable_threshold = 0, msb_budget = 0;
    unsigned ring_bits = 32, frac_bits = 13, msb_budget_rt = 8;
    double inject_latency = 0.0, timeout_s = 30.0;
    bool reveal_all = false;

    auto* sim = app.add_subcommand("simulate", "run all three parties in-process");
    sim->add_option("--model", model_path)->required();
    sim->add_option("--input", input_path)->required();
    sim->add_option("--seed", seed);
    sim->add_option("--net-profile", profile)->check(CLI::IsMember({"lan", "wan", "both"}));
    sim->add_option("--report", report_path);
    sim->add_flag("--reveal-all", reveal_all,
                  "reconstruct the output at every party (testing only)");
    sim->add_option("--inject-latency", inject_latency,
                    "sleep this many ms at every round barrier (debug)");

    auto* rp = app.add_subcommand("run-party", "participate in a 3-process TCP run");
    rp->add_option("--party", party)->required()->check(CLI::Range(0, 2));
    rp->add_option("--peers", peers, "host:port,host:port,host:port in party order")
        ->required();
    rp->add_option("--model", model_path, "compiled model (party 1 only)");
    rp->add_option("--input", input_path, "input CSV (party 0 only)");
    rp->add_option("--seed", seed);
    rp->add_option("--ring-bits", ring_bits);
    rp->add_option("--frac-bits", frac_bits);
    rp->add_option("--msb-budget", msb_budget_rt);
    rp->add_option("--timeout", timeout_s);
    rp->add_option("--report", report_path);

    auto* comp = app.add_subcommand("compile", "rewrite a model into an MPC-executable plan");
    comp->add_option("--model", model_path)->required();
    comp->add_option("--out", out_path)->required();
    comp->add_option("--separable-threshold", separable_threshold,
                     "replace standard convolutions with at least this many input "
                     "channels by depthwise+pointwise pairs");
    comp->add_option("--msb-budget", msb_budget, "override the model's mask width d");

    auto* tt = app.add_subcommand("train-toy", "train the synthetic teacher/student pair");
    tt->add_option("--config", config_path)->required();
    tt->add_option("--out", out_path)->required();
    tt->add_option("--report", report_path);

    auto* bench = app.add_subcommand("bench", "repeat simulate and aggregate costs");
    bench->add_option("--model", model_path)->required();
    bench->add_option("--input", input_path)->required();
    bench->add_option("--trials", trials)->check(CLI::PositiveNumber);
    bench->add_option("--seed", seed);
    bench->add_option("--report", report_path);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed())
            return cmd_simulate(model_path, input_path, seed, profile, reveal_all,
                                inject_latency, report_path);
        if (rp->parsed())
            return cmd_run_party(party, peers, model_path, input_path, seed, ring_bits,
                                 frac_bits, msb_budget_rt, timeout_s, report_path);
        if (comp->parsed())
            return cmd_compile(model_path, out_path, separable_threshold, msb_budget);
        if (tt->parsed()) return cmd_train_toy(config_path, out_path, report_path);
        if (bench->parsed())
            return cmd_bench(model_path, input_path, trials, seed, report_path);
    } catch (const cbnn::DesyncError& e) {
        std::cerr << "protocol desync: " << e.what() << "\n";
        return 3;
    } catch (const cbnn::TransportError& e) {
        std::cerr << "transport failure: " << e.what() << "\n";
        return 4;
    } catch (const cbnn::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
