#pragma once

#include "wsc/types.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

// Little-endian binary IO helpers shared by the file-format code.
// The host is assumed little-endian (checked below); helpers keep the
// byte order explicit at every call site anyway.

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts need byte swaps");

namespace wsc::detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open for writing: " + path.string());
    return out;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open for reading: " + path.string());
    return in;
}

template <typename T>
void write_le(std::ostream& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const char* what) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw io_error(std::string("truncated payload reading ") + what);
    return value;
}

inline void write_bytes(std::ostream& out, const void* data, std::size_t size) {
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(size));
}

inline void read_bytes(std::istream& in, void* data, std::size_t size, const char* what) {
    in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(size));
    if (!in) throw io_error(std::string("truncated payload reading ") + what);
}

inline void expect_magic(std::istream& in, const char magic[4], const char* format) {
    char got[4] = {};
    in.read(got, 4);
    if (!in || std::memcmp(got, magic, 4) != 0)
        throw io_error(std::string("bad magic, not a ") + format + " file");
}

// Sniffs the first bytes so loaders can accept either the binary format or
// its JSON mirror.
inline bool has_magic(const std::filesystem::path& path, const char magic[4]) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open for reading: " + path.string());
    char got[4] = {};
    in.read(got, 4);
    return in && std::memcmp(got, magic, 4) == 0;
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open for reading: " + path.string());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw io_error("write failed: " + path.string());
}

} // namespace wsc::detail
