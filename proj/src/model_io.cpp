#include "cbnn/model_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "json.hpp"

namespace cbnn {

namespace {

constexpr std::uint16_t kVersion = 1;
constexpr char kMagic[4] = {'C', 'B', 'N', 'N'};
constexpr char kInputMagic[4] = {'C', 'B', 'N', 'T'};

enum class PayloadKind : std::uint8_t { Absent = 0, Real64 = 1, Ring64 = 2 };

class Writer {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16(std::uint16_t v) { le(v, 2); }
    void u32(std::uint32_t v) { le(v, 4); }
    void u64(std::uint64_t v) { le(v, 8); }
    void i16(std::int16_t v) { le(static_cast<std::uint16_t>(v), 2); }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
    void str(const std::string& s) {
        u16(static_cast<std::uint16_t>(s.size()));
        buf_.insert(buf_.end(), s.begin(), s.end());
    }
    void shape(const Shape& s) {
        u8(static_cast<std::uint8_t>(s.rank()));
        for (std::size_t i = 0; i < s.rank(); ++i) u32(static_cast<std::uint32_t>(s[i]));
    }
    void real_tensor(const RealTensor& t, bool include) {
        if (!include || t.empty()) {
            u8(static_cast<std::uint8_t>(PayloadKind::Absent));
            shape(t.shape());
            return;
        }
        u8(static_cast<std::uint8_t>(PayloadKind::Real64));
        shape(t.shape());
        for (double v : t.values()) f64(v);
    }
    std::vector<std::uint8_t>& bytes() { return buf_; }

private:
    void le(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t> buf_;
};

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& b) : buf_(b) {}

    std::uint8_t u8() { return take(1)[0]; }
    std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
    std::uint64_t u64() { return le(8); }
    std::int16_t i16() { return static_cast<std::int16_t>(u16()); }
    double f64() {
        std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string str() {
        std::size_t n = u16();
        const std::uint8_t* p = take(n);
        return std::string(p, p + n);
    }
    Shape shape() {
        std::size_t rank = u8();
        std::vector<std::size_t> dims(rank);
        for (auto& d : dims) d = u32();
        return Shape(dims);
    }
    RealTensor real_tensor() {
        auto kind = static_cast<PayloadKind>(u8());
        Shape s = shape();
        if (kind == PayloadKind::Absent) return RealTensor(); // shape dropped: params absent
        if (kind != PayloadKind::Real64)
            throw ConfigError(at() + ": unsupported parameter payload kind");
        RealTensor t(s);
        for (auto& v : t.values()) v = f64();
        return t;
    }
    std::size_t pos() const { return pos_; }
    std::string at() const { return "byte " + std::to_string(pos_); }
    bool done() const { return pos_ == buf_.size(); }

private:
    const std::uint8_t* take(std::size_t n) {
        if (pos_ + n > buf_.size())
            throw ConfigError("model file truncated at byte " + std::to_string(pos_));
        const std::uint8_t* p = buf_.data() + pos_;
        pos_ += n;
        return p;
    }
    std::uint64_t le(int n) {
        const std::uint8_t* p = take(n);
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        return v;
    }
    const std::vector<std::uint8_t>& buf_;
    std::size_t pos_ = 0;
};

std::uint32_t body_crc(const std::vector<std::uint8_t>& bytes, std::size_t from,
                       std::size_t to) {
    return static_cast<std::uint32_t>(
        crc32(0, bytes.data() + from, static_cast<uInt>(to - from)));
}

} // namespace

std::vector<std::uint8_t> serialize_graph(const ModelGraph& graph, bool include_params) {
    Writer w;
    w.bytes().insert(w.bytes().end(), kMagic, kMagic + 4);
    w.u16(kVersion);
    w.u8(static_cast<std::uint8_t>(graph.ring_bits));
    w.u8(static_cast<std::uint8_t>(graph.frac_bits));
    w.u8(static_cast<std::uint8_t>(graph.msb_budget));
    w.u8(graph.compiled ? 1 : 0);
    w.shape(graph.input_shape);
    w.u32(static_cast<std::uint32_t>(graph.layers.size()));
    for (const Layer& l : graph.layers) {
        w.u8(static_cast<std::uint8_t>(l.kind));
        w.str(l.name);
        w.i16(static_cast<std::int16_t>(l.in_scale));
        w.i16(static_cast<std::int16_t>(l.out_scale));
        switch (l.kind) {
            case LayerKind::Fc:
                w.u32(static_cast<std::uint32_t>(l.in_features));
                w.u32(static_cast<std::uint32_t>(l.out_features));
                break;
            case LayerKind::Conv:
            case LayerKind::PwConv:
            case LayerKind::DwConv:
                w.u32(static_cast<std::uint32_t>(l.geom.in_channels));
                w.u32(static_cast<std::uint32_t>(l.geom.out_channels));
                w.u32(static_cast<std::uint32_t>(l.geom.kernel));
                w.u32(static_cast<std::uint32_t>(l.geom.stride));
                w.u32(static_cast<std::uint32_t>(l.geom.pad));
                w.u8(l.geom.depthwise ? 1 : 0);
                break;
            case LayerKind::BatchNorm:
                w.f64(l.bn.eps);
                w.real_tensor(l.bn.gamma, include_params);
                w.real_tensor(l.bn.beta, include_params);
                w.real_tensor(l.bn.mean, include_params);
                w.real_tensor(l.bn.var, include_params);
                break;
            case LayerKind::MaxPool:
            case LayerKind::FusedSignMaxPool:
                w.u32(static_cast<std::uint32_t>(l.pool_window));
                w.u32(static_cast<std::uint32_t>(l.pool_stride));
                break;
            default: break;
        }
        if (l.is_linear()) {
            w.real_tensor(l.weights, include_params);
            w.real_tensor(l.bias, include_params);
        }
    }
    std::uint32_t crc = body_crc(w.bytes(), 4, w.bytes().size());
    w.u32(crc);
    return std::move(w.bytes());
}

ModelGraph parse_graph(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw ConfigError("not a CBNN model file (bad magic)");
    std::uint32_t stored = 0;
    for (int i = 0; i < 4; ++i)
        stored |= static_cast<std::uint32_t>(bytes[bytes.size() - 4 + i]) << (8 * i);
    if (stored != body_crc(bytes, 4, bytes.size() - 4))
        throw ConfigError("model file checksum mismatch (damaged body)");

    std::vector<std::uint8_t> body(bytes.begin() + 4, bytes.end() - 4);
    Reader r(body);
    std::uint16_t version = r.u16();
    if (version != kVersion)
        throw ConfigError("unsupported model version " + std::to_string(version));

    ModelGraph g;
    g.ring_bits = r.u8();
    g.frac_bits = r.u8();
    g.msb_budget = r.u8();
    g.compiled = r.u8() != 0;
    g.input_shape = r.shape();
    std::uint32_t layer_count = r.u32();
    for (std::uint32_t i = 0; i < layer_count; ++i) {
        Layer l;
        l.kind = static_cast<LayerKind>(r.u8());
        l.name = r.str();
        l.in_scale = r.i16();
        l.out_scale = r.i16();
        switch (l.kind) {
            case LayerKind::Fc:
                l.in_features = r.u32();
                l.out_features = r.u32();
                break;
            case LayerKind::Conv:
            case LayerKind::PwConv:
            case LayerKind::DwConv:
                l.geom.in_channels = r.u32();
                l.geom.out_channels = r.u32();
                l.geom.kernel = r.u32();
                l.geom.stride = r.u32();
                l.geom.pad = r.u32();
                l.geom.depthwise = r.u8() != 0;
                break;
            case LayerKind::BatchNorm:
                l.bn.eps = r.f64();
                l.bn.gamma = r.real_tensor();
                l.bn.beta = r.real_tensor();
                l.bn.mean = r.real_tensor();
                l.bn.var = r.real_tensor();
                break;
            case LayerKind::MaxPool:
            case LayerKind::FusedSignMaxPool:
                l.pool_window = r.u32();
                l.pool_stride = r.u32();
                break;
            case LayerKind::Sign:
            case LayerKind::Relu:
            case LayerKind::Flatten:
            case LayerKind::Truncate:
            case LayerKind::Output: break;
            default:
                throw ConfigError(r.at() + ": unknown layer kind " +
                                  std::to_string(static_cast<int>(l.kind)));
        }
        if (l.is_linear()) {
            l.weights = r.real_tensor();
            l.bias = r.real_tensor();
        }
        g.layers.push_back(std::move(l));
    }
    if (!r.done()) throw ConfigError("trailing bytes after the last layer record");
    return g;
}

void save_model(const ModelGraph& graph, const std::filesystem::path& path) {
    auto bytes = serialize_graph(graph);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

ModelGraph load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return parse_graph(bytes);
}

RealTensor load_input_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::vector<double> vals;
    std::string tok;
    while (in) {
        int c = in.peek();
        if (c == EOF) break;
        if (c == ',' || c == '\n' || c == '\r' || c == ' ' || c == '\t') {
            in.get();
            continue;
        }
        if (c == '#') { // comment line
            std::getline(in, tok);
            continue;
        }
        double v;
        if (!(in >> v))
            throw ConfigError(path.string() + ": malformed number near value index " +
                              std::to_string(vals.size()));
        vals.push_back(v);
    }
    if (vals.empty()) throw ConfigError(path.string() + ": no values");
    Shape shape{vals.size()};
    return RealTensor(shape, std::move(vals));
}

void save_input_raw(const RingTensor& t, unsigned ring_bits,
                    const std::filesystem::path& path) {
    Writer w;
    w.bytes().insert(w.bytes().end(), kInputMagic, kInputMagic + 4);
    w.u8(static_cast<std::uint8_t>(ring_bits));
    w.shape(t.shape());
    for (ring_t v : t.values()) w.u64(v);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(w.bytes().data()),
              static_cast<std::streamsize>(w.bytes().size()));
}

RingTensor load_input_raw(const std::filesystem::path& path, unsigned expect_bits) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() < 5 || std::memcmp(bytes.data(), kInputMagic, 4) != 0)
        throw ConfigError(path.string() + ": not a CBNT ring dump");
    std::vector<std::uint8_t> body(bytes.begin() + 4, bytes.end());
    Reader r(body);
    unsigned bits = r.u8();
    if (bits != expect_bits)
        throw ConfigError(path.string() + ": dump is for l=" + std::to_string(bits) +
                          ", model expects l=" + std::to_string(expect_bits));
    Shape s = r.shape();
    RingTensor t(s);
    for (auto& v : t.values()) v = r.u64();
    if (!r.done()) throw ConfigError(path.string() + ": trailing bytes");
    return t;
}

std::string RunReport::to_json() const {
    nlohmann::json j;
    j["mode"] = mode;
    j["model"] = model;
    j["seed"] = seed;
    j["config"] = {{"ring_bits", ring_bits}, {"frac_bits", frac_bits},
                   {"msb_budget", msb_budget}};
    j["net_profile"] = net_profile;

    auto round6 = [](double v) { return std::round(v * 1e6) / 1e6; };
    nlohmann::json parties = nlohmann::json::array();
    for (int p = 0; p < 3; ++p) {
        const auto& ps = stats.party[p];
        nlohmann::json phases;
        for (const auto& [name, c] : ps.by_phase)
            phases[name] = {{"messages", c.messages}, {"bytes", c.bytes},
                            {"rounds", c.rounds}};
        parties.push_back({{"party", p},
                           {"messages", ps.messages},
                           {"bytes", ps.bytes},
                           {"rounds", ps.rounds},
                           {"phases", phases}});
    }
    j["traffic"] = {{"parties", parties},
                    {"total_bytes", stats.total_bytes()},
                    {"comm_total_mb", round6(static_cast<double>(stats.total_bytes()) / 1e6)},
                    {"comm_max_party_mb",
                     round6(static_cast<double>(stats.max_party_bytes()) / 1e6)},
                    {"rounds", stats.rounds()}};
    TimeEstimate lan = estimate_time(stats, NetProfile::lan());
    TimeEstimate wan = estimate_time(stats, NetProfile::wan());
    j["time_estimate_s"] = {
        {"lan", {{"per_party", {round6(lan.per_party_s[0]), round6(lan.per_party_s[1]),
                                round6(lan.per_party_s[2])}},
                 {"max", round6(lan.max_party_s)}}},
        {"wan", {{"per_party", {round6(wan.per_party_s[0]), round6(wan.per_party_s[1]),
                                round6(wan.per_party_s[2])}},
                 {"max", round6(wan.max_party_s)}}}};
    j["cost_model"] = {{"analytic_rounds", analytic_rounds},
                       {"matches_measured", cost_model_match}};
    j["result"] = {{"argmax", argmax_index}};
    if (!output.empty()) {
        nlohmann::json ov = nlohmann::json::array();
        for (double v : output) ov.push_back(round6(v));
        j["result"]["output"] = ov;
    }
    return j.dump(2) + "\n";
}

void save_report(const RunReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << report.to_json();
}

} // namespace cbnn
