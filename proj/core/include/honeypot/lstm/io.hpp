#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "honeypot/lstm/model.hpp"

namespace honeypot::lstm {

class ModelIoError : public std::runtime_error {
public:
    enum class Kind { BadMagic, TruncatedFile, ShapeHeaderMismatch, IoFailure };
    ModelIoError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// "EDL1" container: magic, then little-endian u32 header
/// (input size, hidden size, look-back, look-ahead, target index), then every
/// parameter block in parameter_blocks() order as little-endian f64.
std::vector<std::uint8_t> encode_model(const EncoderDecoderModel& model);
EncoderDecoderModel decode_model(std::span<const std::uint8_t> bytes);

void save_model(const EncoderDecoderModel& model, const std::filesystem::path& path);
EncoderDecoderModel load_model(const std::filesystem::path& path);

}  // namespace honeypot::lstm
