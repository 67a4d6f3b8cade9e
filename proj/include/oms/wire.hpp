#pragma once

// Wire format for the simulated server/client exchange.
//
// Frame = 16-byte little-endian header followed by a bit-packed payload:
//
//   offset  size  field
//   0       4     epoch (1-based)
//   4       4     client id
//   8       4     payload length in bits
//   12      1     message kind (1 = downlink, 2 = uplink)
//   13      1     bits per index, ceil(log2 K)
//   14      2     number of indices J
//
// Payload, LSB-first:
//   downlink: J indices, then for each index its d_i parameters (float32)
//   uplink:   J indices, then for each index one loss and d_i gradient
//             coordinates (float32)
// The payload is zero-padded to a whole byte; the header carries the exact
// bit count so that frames can be audited against account_bits.

#include <bit>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace oms {

class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DownlinkMessage {
    std::uint32_t epoch = 0;
    std::uint32_t client = 0;
    std::vector<std::uint32_t> indices;           // A_1..A_J
    std::vector<std::vector<double>> parameters;  // w_i for each sampled index
};

struct UplinkMessage {
    std::uint32_t epoch = 0;
    std::uint32_t client = 0;
    std::vector<std::uint32_t> indices;
    std::vector<double> losses;                  // epoch-averaged raw losses
    std::vector<std::vector<double>> gradients;  // epoch-averaged raw gradients
};

enum class MessageKind : std::uint8_t { Downlink = 1, Uplink = 2 };

inline constexpr std::size_t kFrameHeaderBytes = 16;
inline constexpr std::uint64_t kFloatBits = 32;

// ceil(log2 K); zero for K = 1.
inline std::uint32_t index_bits(std::size_t k) {
    if (k == 0) throw std::invalid_argument("index_bits: K must be positive");
    return static_cast<std::uint32_t>(std::bit_width(k - 1));
}

namespace detail {
inline std::uint64_t parameter_count(const std::vector<std::vector<double>>& vs) {
    std::uint64_t n = 0;
    for (const auto& v : vs) n += v.size();
    return n;
}
}  // namespace detail

// Bits on the wire for one message: 32 per float, ceil(log2 K) per index.
inline std::uint64_t account_bits(const DownlinkMessage& msg, std::size_t k) {
    return kFloatBits * detail::parameter_count(msg.parameters) + msg.indices.size() * index_bits(k);
}

inline std::uint64_t account_bits(const UplinkMessage& msg, std::size_t k) {
    return kFloatBits * (detail::parameter_count(msg.gradients) + msg.losses.size()) +
           msg.indices.size() * index_bits(k);
}

class BitWriter {
public:
    void write(std::uint64_t value, std::uint32_t width) {
        for (std::uint32_t b = 0; b < width; ++b) {
            if (bits_ % 8 == 0) bytes_.push_back(0);
            if ((value >> b) & 1U) bytes_.back() |= static_cast<std::uint8_t>(1U << (bits_ % 8));
            ++bits_;
        }
    }

    void write_float(double value) { write(std::bit_cast<std::uint32_t>(static_cast<float>(value)), 32); }

    std::uint64_t bit_count() const noexcept { return bits_; }
    std::vector<std::uint8_t> take() && { return std::move(bytes_); }

private:
    std::vector<std::uint8_t> bytes_;
    std::uint64_t bits_ = 0;
};

class BitReader {
public:
    explicit BitReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint64_t read(std::uint32_t width) {
        std::uint64_t value = 0;
        for (std::uint32_t b = 0; b < width; ++b, ++pos_) {
            if (pos_ / 8 >= bytes_.size()) throw ProtocolError("frame payload truncated");
            if ((bytes_[pos_ / 8] >> (pos_ % 8)) & 1U) value |= std::uint64_t{1} << b;
        }
        return value;
    }

    double read_float() { return std::bit_cast<float>(static_cast<std::uint32_t>(read(32))); }

    std::uint64_t position() const noexcept { return pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::uint64_t pos_ = 0;
};

struct FrameHeader {
    std::uint32_t epoch = 0;
    std::uint32_t client = 0;
    std::uint32_t payload_bits = 0;
    MessageKind kind = MessageKind::Downlink;
    std::uint8_t bits_per_index = 0;
    std::uint16_t subset_size = 0;
};

namespace detail {

inline void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint64_t get_le(std::span<const std::uint8_t> in, std::size_t offset, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(in[offset + i]) << (8 * i);
    return v;
}

inline std::vector<std::uint8_t> assemble(MessageKind kind, std::uint32_t epoch, std::uint32_t client,
                                          std::size_t subset, std::size_t k, BitWriter&& payload) {
    const std::uint64_t bits = payload.bit_count();
    if (bits > UINT32_MAX) throw ProtocolError("frame payload too large");
    std::vector<std::uint8_t> frame;
    frame.reserve(kFrameHeaderBytes + (bits + 7) / 8);
    put_le(frame, epoch, 4);
    put_le(frame, client, 4);
    put_le(frame, bits, 4);
    put_le(frame, static_cast<std::uint8_t>(kind), 1);
    put_le(frame, index_bits(k), 1);
    put_le(frame, subset, 2);
    auto bytes = std::move(payload).take();
    frame.insert(frame.end(), bytes.begin(), bytes.end());
    return frame;
}

inline void check_index(std::uint32_t idx, std::size_t k) {
    if (idx >= k) throw ProtocolError("index " + std::to_string(idx) + " out of range for K=" + std::to_string(k));
}

}  // namespace detail

inline FrameHeader parse_header(std::span<const std::uint8_t> frame) {
    if (frame.size() < kFrameHeaderBytes) throw ProtocolError("frame shorter than its header");
    FrameHeader h;
    h.epoch = static_cast<std::uint32_t>(detail::get_le(frame, 0, 4));
    h.client = static_cast<std::uint32_t>(detail::get_le(frame, 4, 4));
    h.payload_bits = static_cast<std::uint32_t>(detail::get_le(frame, 8, 4));
    const auto kind = static_cast<std::uint8_t>(detail::get_le(frame, 12, 1));
    if (kind != 1 && kind != 2) throw ProtocolError("unknown message kind " + std::to_string(kind));
    h.kind = static_cast<MessageKind>(kind);
    h.bits_per_index = static_cast<std::uint8_t>(detail::get_le(frame, 13, 1));
    h.subset_size = static_cast<std::uint16_t>(detail::get_le(frame, 14, 2));
    if (frame.size() - kFrameHeaderBytes != (static_cast<std::uint64_t>(h.payload_bits) + 7) / 8)
        throw ProtocolError("frame length does not match its payload bit count");
    return h;
}

inline std::span<const std::uint8_t> frame_payload(std::span<const std::uint8_t> frame) {
    return frame.subspan(kFrameHeaderBytes);
}

inline std::vector<std::uint8_t> encode_frame(const DownlinkMessage& msg, std::size_t k) {
    if (msg.indices.size() != msg.parameters.size()) throw ProtocolError("downlink: one parameter vector per index");
    BitWriter w;
    const auto width = index_bits(k);
    for (auto idx : msg.indices) {
        detail::check_index(idx, k);
        w.write(idx, width);
    }
    for (const auto& params : msg.parameters)
        for (double x : params) w.write_float(x);
    return detail::assemble(MessageKind::Downlink, msg.epoch, msg.client, msg.indices.size(), k, std::move(w));
}

inline std::vector<std::uint8_t> encode_frame(const UplinkMessage& msg, std::size_t k) {
    if (msg.indices.size() != msg.losses.size() || msg.indices.size() != msg.gradients.size())
        throw ProtocolError("uplink: one loss and one gradient per index");
    BitWriter w;
    const auto width = index_bits(k);
    for (auto idx : msg.indices) {
        detail::check_index(idx, k);
        w.write(idx, width);
    }
    for (std::size_t a = 0; a < msg.indices.size(); ++a) {
        w.write_float(msg.losses[a]);
        for (double g : msg.gradients[a]) w.write_float(g);
    }
    return detail::assemble(MessageKind::Uplink, msg.epoch, msg.client, msg.indices.size(), k, std::move(w));
}

namespace detail {
inline void check_consumed(const BitReader& r, const FrameHeader& h) {
    if (r.position() != h.payload_bits)
        throw ProtocolError("frame decoded " + std::to_string(r.position()) + " bits but header declares " +
                            std::to_string(h.payload_bits));
}
}  // namespace detail

// `dims[i]` is the parameter dimension of space i; needed to split the
// float stream. Decoded floats carry single precision.
inline DownlinkMessage decode_downlink(std::span<const std::uint8_t> frame, std::span<const std::size_t> dims) {
    const auto h = parse_header(frame);
    if (h.kind != MessageKind::Downlink) throw ProtocolError("expected a downlink frame");
    if (h.bits_per_index != index_bits(dims.size())) throw ProtocolError("index width does not match K");
    BitReader r(frame_payload(frame));
    DownlinkMessage msg{h.epoch, h.client, {}, {}};
    for (std::uint16_t a = 0; a < h.subset_size; ++a) {
        const auto idx = static_cast<std::uint32_t>(r.read(h.bits_per_index));
        detail::check_index(idx, dims.size());
        msg.indices.push_back(idx);
    }
    for (auto idx : msg.indices) {
        std::vector<double> params(dims[idx]);
        for (double& x : params) x = r.read_float();
        msg.parameters.push_back(std::move(params));
    }
    detail::check_consumed(r, h);
    return msg;
}

inline UplinkMessage decode_uplink(std::span<const std::uint8_t> frame, std::span<const std::size_t> dims) {
    const auto h = parse_header(frame);
    if (h.kind != MessageKind::Uplink) throw ProtocolError("expected an uplink frame");
    if (h.bits_per_index != index_bits(dims.size())) throw ProtocolError("index width does not match K");
    BitReader r(frame_payload(frame));
    UplinkMessage msg{h.epoch, h.client, {}, {}, {}};
    for (std::uint16_t a = 0; a < h.subset_size; ++a) {
        const auto idx = static_cast<std::uint32_t>(r.read(h.bits_per_index));
        detail::check_index(idx, dims.size());
        msg.indices.push_back(idx);
    }
    for (auto idx : msg.indices) {
        msg.losses.push_back(r.read_float());
        std::vector<double> grad(dims[idx]);
        for (double& g : grad) g = r.read_float();
        msg.gradients.push_back(std::move(grad));
    }
    detail::check_consumed(r, h);
    return msg;
}

}  // namespace oms
