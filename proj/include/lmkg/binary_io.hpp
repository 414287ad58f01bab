#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lmkg {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path &path);
void write_file(const std::filesystem::path &path, std::span<const std::uint8_t> bytes);

/// Appends little-endian scalars to a byte buffer.
class ByteWriter {
  public:
    void bytes(const void *data, std::size_t n) {
        const auto *p = static_cast<const std::uint8_t *>(data);
        buf_.insert(buf_.end(), p, p + n);
    }
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u32(std::uint32_t v) { bytes(&v, sizeof v); }
    void u64(std::uint64_t v) { bytes(&v, sizeof v); }
    void f64(double v) { bytes(&v, sizeof v); }
    void str(std::string_view s) {
        u64(s.size());
        bytes(s.data(), s.size());
    }
    void f64s(std::span<const double> v) {
        u64(v.size());
        bytes(v.data(), v.size() * sizeof(double));
    }
    void u32s(std::span<const std::uint32_t> v) {
        u64(v.size());
        bytes(v.data(), v.size() * sizeof(std::uint32_t));
    }
    /// Appends the CRC32 of everything written so far.
    void crc_trailer() { u32(crc32(buf_)); }

    std::vector<std::uint8_t> &buffer() { return buf_; }

  private:
    std::vector<std::uint8_t> buf_;
};

/// Bounds-checked reader; throws Error(truncated) past the end.
class ByteReader {
  public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    void bytes(void *out, std::size_t n);
    std::uint8_t u8() {
        std::uint8_t v;
        bytes(&v, 1);
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v;
        bytes(&v, sizeof v);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        bytes(&v, sizeof v);
        return v;
    }
    double f64() {
        double v;
        bytes(&v, sizeof v);
        return v;
    }
    std::string str();
    std::vector<double> f64s();
    std::vector<std::uint32_t> u32s();
    void expect_magic(std::string_view magic);

    std::size_t remaining() const { return data_.size() - pos_; }

  private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

/// Verifies and strips a CRC32 trailer; throws Error(truncated / checksum_mismatch).
std::span<const std::uint8_t> verify_crc_trailer(std::span<const std::uint8_t> bytes);

} // namespace lmkg
