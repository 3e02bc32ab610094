#include "demcl/io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace demcl {

namespace {

void put_u32(std::string& out, std::uint32_t x) {
    out.push_back(static_cast<char>(x & 0xff));
    out.push_back(static_cast<char>((x >> 8) & 0xff));
    out.push_back(static_cast<char>((x >> 16) & 0xff));
    out.push_back(static_cast<char>((x >> 24) & 0xff));
}

void put_f32(std::string& out, float x) {
    std::uint32_t bits;
    std::memcpy(&bits, &x, 4);
    put_u32(out, bits);
}

class Reader {
public:
    Reader(const std::filesystem::path& path, std::string what) : what_(std::move(what)) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw FormatError(what_ + ": cannot open " + path.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        data_ = ss.str();
    }

    bool eof() const { return pos_ >= data_.size(); }
    std::size_t remaining() const { return data_.size() - pos_; }

    std::uint32_t u32() {
        need(4);
        std::uint32_t x = 0;
        for (int i = 3; i >= 0; --i)
            x = (x << 8) | static_cast<unsigned char>(data_[pos_ + static_cast<std::size_t>(i)]);
        pos_ += 4;
        return x;
    }

    float f32() {
        std::uint32_t bits = u32();
        float x;
        std::memcpy(&x, &bits, 4);
        return x;
    }

    void magic(const char* m) {
        need(4);
        if (std::memcmp(data_.data() + pos_, m, 4) != 0)
            throw FormatError(what_ + ": bad magic, expected " + std::string(m, 4));
        pos_ += 4;
    }

private:
    void need(std::size_t n) {
        if (remaining() < n) throw FormatError(what_ + ": truncated file");
    }

    std::string what_;
    std::string data_;
    std::size_t pos_ = 0;
};

}  // namespace

void atomic_write(const std::filesystem::path& path, const std::string& bytes) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw std::runtime_error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void write_rdf1(const std::filesystem::path& path, const std::vector<RadarFrame>& frames) {
    if (frames.empty()) throw std::invalid_argument("write_rdf1: no frames");
    const std::size_t k = frames.front().k();
    const std::size_t l = frames.front().l();
    std::string out;
    out.reserve(20 + frames.size() * k * l * 8);
    out += "RDF1";
    put_u32(out, static_cast<std::uint32_t>(k));
    put_u32(out, static_cast<std::uint32_t>(l));
    put_u32(out, static_cast<std::uint32_t>(frames.size()));
    put_f32(out, static_cast<float>(frames.front().frame_rate));
    for (const auto& f : frames) {
        if (f.k() != k || f.l() != l)
            throw std::invalid_argument("write_rdf1: frame dimensions differ");
        for (std::size_t li = 0; li < l; ++li)
            for (std::size_t ki = 0; ki < k; ++ki) {
                put_f32(out, static_cast<float>(f.samples.at(ki, li).real()));
                put_f32(out, static_cast<float>(f.samples.at(ki, li).imag()));
            }
    }
    atomic_write(path, out);
}

std::vector<RadarFrame> read_rdf1(const std::filesystem::path& path) {
    Reader r(path, "RDF1");
    r.magic("RDF1");
    const std::uint32_t k = r.u32();
    const std::uint32_t l = r.u32();
    const std::uint32_t count = r.u32();
    const float rate = r.f32();
    if (k == 0 || l == 0 || count == 0) throw FormatError("RDF1: zero dimension in header");
    std::vector<RadarFrame> frames(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        frames[i].samples = ComplexMat(k, l);
        frames[i].frame_index = static_cast<int>(i);
        frames[i].frame_rate = rate;
        for (std::uint32_t li = 0; li < l; ++li)
            for (std::uint32_t ki = 0; ki < k; ++ki) {
                double re = r.f32();
                double im = r.f32();
                frames[i].samples.at(ki, li) = {re, im};
            }
    }
    return frames;
}

namespace {

void append_mat_record(std::string& out, const char* magic, const RealMat& m) {
    out += magic;
    put_u32(out, static_cast<std::uint32_t>(m.rows));
    put_u32(out, static_cast<std::uint32_t>(m.cols));
    for (double x : m.v) put_f32(out, static_cast<float>(x));
}

RealMat read_mat_record(Reader& r, const char* magic) {
    r.magic(magic);
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    if (rows == 0 || cols == 0) throw FormatError(std::string(magic) + ": zero dimension");
    RealMat m(rows, cols);
    for (auto& x : m.v) x = r.f32();
    return m;
}

}  // namespace

void write_rdm1(const std::filesystem::path& path, const std::vector<RealMat>& mats) {
    if (mats.empty()) throw std::invalid_argument("write_rdm1: no matrices");
    std::string out;
    for (const auto& m : mats) append_mat_record(out, "RDM1", m);
    atomic_write(path, out);
}

std::vector<RealMat> read_rdm1(const std::filesystem::path& path) {
    Reader r(path, "RDM1");
    std::vector<RealMat> mats;
    while (!r.eof()) mats.push_back(read_mat_record(r, "RDM1"));
    if (mats.empty()) throw FormatError("RDM1: empty file");
    return mats;
}

void write_tds1(const std::filesystem::path& path, const RealMat& tds) {
    std::string out;
    append_mat_record(out, "TDS1", tds);
    atomic_write(path, out);
}

RealMat read_tds1(const std::filesystem::path& path) {
    Reader r(path, "TDS1");
    return read_mat_record(r, "TDS1");
}

void write_sidecar(const std::filesystem::path& path,
                   const std::vector<std::pair<std::string, std::string>>& kv) {
    std::string out;
    for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
    atomic_write(path, out);
}

std::vector<std::pair<std::string, std::string>> read_sidecar(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open sidecar " + path.string());
    std::vector<std::pair<std::string, std::string>> kv;
    std::string line;
    while (std::getline(in, line)) {
        auto eq = line.find('=');
        if (eq == std::string::npos || line.empty() || line[0] == '#') continue;
        kv.emplace_back(line.substr(0, eq), line.substr(eq + 1));
    }
    return kv;
}

std::string sidecar_value(const std::vector<std::pair<std::string, std::string>>& kv,
                          const std::string& key) {
    for (const auto& [k, v] : kv)
        if (k == key) return v;
    throw std::runtime_error("sidecar: missing key " + key);
}

}  // namespace demcl
