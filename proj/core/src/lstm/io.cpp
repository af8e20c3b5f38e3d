#include "honeypot/lstm/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace honeypot::lstm {

namespace {

constexpr std::uint8_t kMagic[4] = {'E', 'D', 'L', '1'};
constexpr std::size_t kHeaderBytes = 4 + 5 * 4;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int k = 0; k < 8; ++k) out.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(p[k]) << (8 * k);
    return v;
}

double get_f64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(p[k]) << (8 * k);
    return std::bit_cast<double>(v);
}

}  // namespace

std::vector<std::uint8_t> encode_model(const EncoderDecoderModel& model) {
    check_shapes(model);
    const auto& cfg = model.config;
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    out.reserve(kHeaderBytes + 8 * model.parameter_count());
    put_u32(out, static_cast<std::uint32_t>(cfg.input_size));
    put_u32(out, static_cast<std::uint32_t>(cfg.hidden_size));
    put_u32(out, static_cast<std::uint32_t>(cfg.lookback));
    put_u32(out, static_cast<std::uint32_t>(cfg.lookahead));
    put_u32(out, static_cast<std::uint32_t>(cfg.target));
    for (const auto block : parameter_blocks(model))
        for (double v : block) put_f64(out, v);
    return out;
}

EncoderDecoderModel decode_model(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4) throw ModelIoError(ModelIoError::Kind::TruncatedFile, "model file shorter than its magic");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw ModelIoError(ModelIoError::Kind::BadMagic, "not an EDL1 model file");
    if (bytes.size() < kHeaderBytes) throw ModelIoError(ModelIoError::Kind::TruncatedFile, "model header truncated");

    ModelConfig cfg;
    cfg.input_size = get_u32(bytes.data() + 4);
    cfg.hidden_size = get_u32(bytes.data() + 8);
    cfg.lookback = get_u32(bytes.data() + 12);
    cfg.lookahead = get_u32(bytes.data() + 16);
    cfg.target = get_u32(bytes.data() + 20);
    // Caps keep a corrupt header from requesting an absurd allocation.
    if (cfg.input_size == 0 || cfg.hidden_size == 0 || cfg.lookback == 0 || cfg.lookahead == 0 ||
        cfg.target >= cfg.input_size || cfg.input_size > 4096 || cfg.hidden_size > 4096) {
        throw ModelIoError(ModelIoError::Kind::ShapeHeaderMismatch, "model header declares an invalid shape");
    }

    EncoderDecoderModel model(cfg);
    const std::size_t expected = kHeaderBytes + 8 * model.parameter_count();
    if (bytes.size() < expected) {
        throw ModelIoError(ModelIoError::Kind::TruncatedFile, "model file holds " + std::to_string(bytes.size()) +
                                                                  " bytes, header implies " + std::to_string(expected));
    }
    if (bytes.size() > expected) {
        throw ModelIoError(ModelIoError::Kind::ShapeHeaderMismatch, "model file has trailing bytes beyond the declared shape");
    }
    const std::uint8_t* p = bytes.data() + kHeaderBytes;
    for (auto block : parameter_blocks(model)) {
        for (double& v : block) {
            v = get_f64(p);
            p += 8;
        }
    }
    return model;
}

void save_model(const EncoderDecoderModel& model, const std::filesystem::path& path) {
    const auto bytes = encode_model(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ModelIoError(ModelIoError::Kind::IoFailure, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ModelIoError(ModelIoError::Kind::IoFailure, "write failed for " + path.string());
}

EncoderDecoderModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelIoError(ModelIoError::Kind::IoFailure, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_model(bytes);
}

}  // namespace honeypot::lstm
