#include "lmkg/binary_io.hpp"

#include "lmkg/error.hpp"

#include <fstream>
#include <iterator>

#include <zlib.h>

namespace lmkg {

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed in chunks
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - pos, 1u << 30));
        crc = ::crc32(crc, bytes.data() + pos, chunk);
        pos += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path &path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
    out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
}

void ByteReader::bytes(void *out, std::size_t n) {
    if (n > remaining()) throw Error(ErrorCode::truncated, "unexpected end of data");
    std::memcpy(out, data_.data() + pos_, n);
    pos_ += n;
}

std::string ByteReader::str() {
    const auto n = u64();
    if (n > remaining()) throw Error(ErrorCode::truncated, "string length past end of data");
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
}

std::vector<double> ByteReader::f64s() {
    const auto n = u64();
    if (n > remaining() / sizeof(double)) throw Error(ErrorCode::truncated, "array length past end of data");
    std::vector<double> v(n);
    bytes(v.data(), n * sizeof(double));
    return v;
}

std::vector<std::uint32_t> ByteReader::u32s() {
    const auto n = u64();
    if (n > remaining() / sizeof(std::uint32_t)) throw Error(ErrorCode::truncated, "array length past end of data");
    std::vector<std::uint32_t> v(n);
    bytes(v.data(), n * sizeof(std::uint32_t));
    return v;
}

void ByteReader::expect_magic(std::string_view magic) {
    std::string got(magic.size(), '\0');
    bytes(got.data(), magic.size());
    if (got != magic) throw Error(ErrorCode::malformed_input, "bad magic header");
}

std::span<const std::uint8_t> verify_crc_trailer(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4) throw Error(ErrorCode::truncated, "file too short for checksum");
    const auto body = bytes.first(bytes.size() - 4);
    std::uint32_t stored;
    std::memcpy(&stored, bytes.data() + body.size(), 4);
    if (crc32(body) != stored) throw Error(ErrorCode::checksum_mismatch, "CRC32 mismatch");
    return body;
}

} // namespace lmkg
