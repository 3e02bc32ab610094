#include "demcl/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace demcl {

namespace {

void put_u16(std::string& out, std::uint16_t x) {
    out.push_back(static_cast<char>(x & 0xff));
    out.push_back(static_cast<char>((x >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t x) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float x) {
    std::uint32_t bits;
    std::memcpy(&bits, &x, 4);
    put_u32(out, bits);
}

struct ByteReader {
    std::string data;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (data.size() - pos < n) throw FormatError("MDCK: truncated file");
    }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(data[pos++]);
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t x = static_cast<std::uint16_t>(
            static_cast<unsigned char>(data[pos]) |
            (static_cast<unsigned char>(data[pos + 1]) << 8));
        pos += 2;
        return x;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t x = 0;
        for (int i = 3; i >= 0; --i)
            x = (x << 8) | static_cast<unsigned char>(data[pos + static_cast<std::size_t>(i)]);
        pos += 4;
        return x;
    }
    float f32() {
        std::uint32_t bits = u32();
        float x;
        std::memcpy(&x, &bits, 4);
        return x;
    }
    std::string str(std::size_t n) {
        need(n);
        std::string s = data.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace

void write_checkpoint(const std::filesystem::path& path,
                      const std::vector<CheckpointEntry>& entries) {
    std::string out;
    out += "MDCK";
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(entries.size()));
    for (const auto& e : entries) {
        if (e.name.size() > 0xffff)
            throw std::invalid_argument("write_checkpoint: entry name too long");
        put_u16(out, static_cast<std::uint16_t>(e.name.size()));
        out += e.name;
        out.push_back(static_cast<char>(e.dims.size()));
        std::size_t n = e.dims.empty() ? 0 : 1;
        for (std::size_t d : e.dims) {
            put_u32(out, static_cast<std::uint32_t>(d));
            n *= d;
        }
        if (n != e.data.size())
            throw std::invalid_argument("write_checkpoint: dims do not match payload for " +
                                        e.name);
        for (float x : e.data) put_f32(out, x);
    }
    atomic_write(path, out);
}

std::vector<CheckpointEntry> read_checkpoint(const std::filesystem::path& path) {
    ByteReader r;
    {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw FormatError("MDCK: cannot open " + path.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        r.data = ss.str();
    }
    if (r.str(4) != "MDCK") throw FormatError("MDCK: bad magic");
    std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw FormatError("MDCK: unsupported version " + std::to_string(version));
    std::uint32_t count = r.u32();
    std::vector<CheckpointEntry> entries(count);
    for (auto& e : entries) {
        e.name = r.str(r.u16());
        std::uint8_t rank = r.u8();
        e.dims.resize(rank);
        std::size_t n = rank == 0 ? 0 : 1;
        for (auto& d : e.dims) {
            d = r.u32();
            n *= d;
        }
        e.data.resize(n);
        for (auto& x : e.data) x = r.f32();
    }
    return entries;
}

namespace {

CheckpointEntry tensor_entry(const std::string& name, const Tensor& t) {
    CheckpointEntry e;
    e.name = name;
    e.dims = t.shape;
    e.data.reserve(t.size());
    for (double x : t.values) e.data.push_back(static_cast<float>(x));
    return e;
}

void load_tensor(Tensor& t, const CheckpointEntry& e) {
    if (e.dims != t.shape)
        throw FormatError("MDCK: shape mismatch for " + e.name);
    for (std::size_t i = 0; i < e.data.size(); ++i)
        t.values[i] = static_cast<double>(e.data[i]);
}

std::size_t meta_at(const CheckpointEntry& e, std::size_t i) {
    return static_cast<std::size_t>(e.data.at(i));
}

std::unique_ptr<Layer> layer_from_meta(const std::string& kind, const CheckpointEntry& m) {
    if (kind == "dense") return std::make_unique<DenseLayer>(meta_at(m, 0), meta_at(m, 1));
    if (kind == "conv2d")
        return std::make_unique<Conv2dLayer>(meta_at(m, 0), meta_at(m, 1), meta_at(m, 2),
                                             meta_at(m, 3), m.data.at(4) != 0.0f, meta_at(m, 5));
    if (kind == "multiscale-conv") {
        std::vector<std::size_t> ks;
        for (std::size_t i = 2; i < m.data.size(); ++i) ks.push_back(meta_at(m, i));
        return std::make_unique<MultiscaleConvLayer>(meta_at(m, 0), meta_at(m, 1), ks);
    }
    if (kind == "relu") return std::make_unique<ReluLayer>();
    if (kind == "leaky-relu")
        return std::make_unique<LeakyReluLayer>(static_cast<double>(m.data.at(0)));
    if (kind == "sigmoid") return std::make_unique<SigmoidLayer>();
    if (kind == "softmax") return std::make_unique<SoftmaxLayer>();
    if (kind == "flatten") return std::make_unique<FlattenLayer>();
    if (kind == "maxpool") return std::make_unique<MaxPoolLayer>(meta_at(m, 0), meta_at(m, 1));
    if (kind == "rbf")
        return std::make_unique<RbfLayer>(meta_at(m, 0), meta_at(m, 1), meta_at(m, 2));
    throw FormatError("MDCK: unsupported layer kind '" + kind + "'");
}

}  // namespace

std::vector<CheckpointEntry> network_entries(Network& net, const std::string& prefix) {
    std::vector<CheckpointEntry> entries;
    for (std::size_t i = 0; i < net.layer_count(); ++i) {
        Layer& l = net.layer(i);
        CheckpointEntry meta;
        meta.name = prefix + "/" + l.name() + "/meta";
        std::vector<double> md = l.meta();
        meta.dims = {md.size()};
        for (double x : md) meta.data.push_back(static_cast<float>(x));
        entries.push_back(std::move(meta));
        for (auto& p : l.params()) entries.push_back(tensor_entry(prefix + "/" + p.name, *p.value));
    }
    return entries;
}

Network network_from_entries(const std::vector<CheckpointEntry>& entries,
                             const std::string& prefix) {
    Network net;
    for (std::size_t idx = 0;; ++idx) {
        // layer names are "<idx>:<kind>"; probe for the meta entry
        std::string stem = prefix + "/" + std::to_string(idx) + ":";
        const CheckpointEntry* meta = nullptr;
        std::string kind;
        for (const auto& e : entries) {
            if (e.name.rfind(stem, 0) == 0 && e.name.size() > stem.size() &&
                e.name.compare(e.name.size() - 5, 5, "/meta") == 0) {
                meta = &e;
                kind = e.name.substr(stem.size(), e.name.size() - stem.size() - 5);
                break;
            }
        }
        if (!meta) break;
        net.push(layer_from_meta(kind, *meta));
        Layer& l = net.layer(net.layer_count() - 1);
        for (auto& p : l.params()) {
            const CheckpointEntry* e = find_entry(entries, prefix + "/" + p.name);
            if (!e) throw FormatError("MDCK: missing parameter entry " + prefix + "/" + p.name);
            load_tensor(*p.value, *e);
        }
    }
    if (net.layer_count() == 0)
        throw FormatError("MDCK: no layers found under prefix '" + prefix + "'");
    return net;
}

CheckpointEntry scalar_entry(const std::string& name, double value) {
    CheckpointEntry e;
    e.name = name;
    e.dims = {1};
    e.data = {static_cast<float>(value)};
    return e;
}

const CheckpointEntry* find_entry(const std::vector<CheckpointEntry>& entries,
                                  const std::string& name) {
    for (const auto& e : entries)
        if (e.name == name) return &e;
    return nullptr;
}

double scalar_value(const std::vector<CheckpointEntry>& entries, const std::string& name) {
    const CheckpointEntry* e = find_entry(entries, name);
    if (!e || e->data.empty()) throw FormatError("MDCK: missing scalar entry " + name);
    return static_cast<double>(e->data[0]);
}

void save_network(const std::filesystem::path& path, Network& net, const std::string& prefix) {
    write_checkpoint(path, network_entries(net, prefix));
}

Network load_network(const std::filesystem::path& path, const std::string& prefix) {
    return network_from_entries(read_checkpoint(path), prefix);
}

}  // namespace demcl
