#pragma once

#include "wsc/types.hpp"

#include <cstdint>
#include <vector>

namespace wsc {

// MSB-first bit packing. Values are written big-endian within their bit
// width and streams are zero-padded to a byte boundary.
class BitWriter {
public:
    void put(std::uint64_t value, unsigned bits) {
        for (unsigned i = bits; i-- > 0;) {
            const unsigned bit = static_cast<unsigned>((value >> i) & 1u);
            if (bit_pos_ == 0) bytes_.push_back(0);
            bytes_.back() |= static_cast<std::uint8_t>(bit << (7 - bit_pos_));
            bit_pos_ = (bit_pos_ + 1) % 8;
            ++bit_count_;
        }
    }

    std::uint64_t bit_count() const { return bit_count_; }

    std::vector<std::uint8_t> take() {
        bit_pos_ = 0;
        return std::move(bytes_);
    }

    const std::vector<std::uint8_t>& bytes() const { return bytes_; }

private:
    std::vector<std::uint8_t> bytes_;
    unsigned bit_pos_ = 0;
    std::uint64_t bit_count_ = 0;
};

class BitReader {
public:
    BitReader(const std::uint8_t* data, std::size_t size_bytes)
        : data_(data), size_bits_(size_bytes * 8) {}

    explicit BitReader(const std::vector<std::uint8_t>& bytes)
        : BitReader(bytes.data(), bytes.size()) {}

    bool eof() const { return pos_ >= size_bits_; }
    std::uint64_t remaining_bits() const { return size_bits_ - pos_; }

    unsigned get_bit() {
        if (pos_ >= size_bits_) throw io_error("bitstream: read past end");
        const unsigned bit = (data_[pos_ / 8] >> (7 - pos_ % 8)) & 1u;
        ++pos_;
        return bit;
    }

    std::uint64_t get(unsigned bits) {
        std::uint64_t value = 0;
        for (unsigned i = 0; i < bits; ++i) value = (value << 1) | get_bit();
        return value;
    }

private:
    const std::uint8_t* data_;
    std::uint64_t size_bits_;
    std::uint64_t pos_ = 0;
};

} // namespace wsc
