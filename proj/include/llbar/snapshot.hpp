#ifndef LLBAR_SNAPSHOT_HPP
#define LLBAR_SNAPSHOT_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "llbar/error.hpp"
#include "llbar/field.hpp"

namespace llbar {

// Field snapshot layout (all little-endian):
//   "LLBR" | u32 version | u32 dim | u32 N[dim] | f64 L[dim] | f64 data[3 * prod N]
// with data row-major over nodes (last axis fastest), component innermost.

inline constexpr std::uint32_t snapshot_version = 1;

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "snapshot I/O assumes a little-endian host");

template <typename T>
void put(std::string& buf, T value) {
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    buf.append(bytes, sizeof(T));
}

template <typename T>
T take(const std::string& buf, std::size_t& pos, const std::string& what) {
    if (pos + sizeof(T) > buf.size())
        throw Error(ErrorCode::io, what + ": truncated snapshot");
    T value;
    std::memcpy(&value, buf.data() + pos, sizeof(T));
    pos += sizeof(T);
    return value;
}

} // namespace detail

inline std::string encode_snapshot(const VectorField& u) {
    std::string buf = "LLBR";
    detail::put<std::uint32_t>(buf, snapshot_version);
    detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(u.grid.dim));
    for (int j = 0; j < u.grid.dim; ++j)
        detail::put<std::uint32_t>(buf, static_cast<std::uint32_t>(u.grid.points[j]));
    for (int j = 0; j < u.grid.dim; ++j) detail::put<double>(buf, u.grid.extents[j]);
    for (double x : u.data) detail::put<double>(buf, x);
    return buf;
}

/// dealias_pad is not part of the format; the caller's value is attached.
inline VectorField decode_snapshot(const std::string& buf, int dealias_pad = 2,
                                   const std::string& origin = "snapshot") {
    if (buf.size() < 4 || buf.compare(0, 4, "LLBR") != 0)
        throw Error(ErrorCode::io, origin + ": bad magic");
    std::size_t pos = 4;
    const auto version = detail::take<std::uint32_t>(buf, pos, origin);
    if (version != snapshot_version)
        throw Error(ErrorCode::io, origin + ": unsupported version " + std::to_string(version));
    const auto dim = detail::take<std::uint32_t>(buf, pos, origin);
    if (dim < 1 || dim > 3) throw Error(ErrorCode::io, origin + ": bad dimension");
    Index3 n{1, 1, 1};
    std::array<double, 3> ext{1.0, 1.0, 1.0};
    for (std::uint32_t j = 0; j < dim; ++j)
        n[j] = static_cast<int>(detail::take<std::uint32_t>(buf, pos, origin));
    for (std::uint32_t j = 0; j < dim; ++j) ext[j] = detail::take<double>(buf, pos, origin);
    GridSpec grid;
    try {
        grid = GridSpec::make(static_cast<int>(dim), ext, n, dealias_pad);
    } catch (const Error& e) {
        throw Error(ErrorCode::io, origin + ": " + e.what());
    }
    const std::size_t count = 3 * grid.node_count();
    if (buf.size() != pos + count * sizeof(double))
        throw Error(ErrorCode::io, origin + ": payload length does not match header");
    std::vector<double> data(count);
    std::memcpy(data.data(), buf.data() + pos, count * sizeof(double));
    VectorField u(grid, std::move(data));
    if (!u.finite()) throw Error(ErrorCode::io, origin + ": non-finite samples");
    return u;
}

inline void write_snapshot(const std::string& path, const VectorField& u) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, path + ": cannot open for writing");
    const std::string buf = encode_snapshot(u);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw Error(ErrorCode::io, path + ": write failed");
}

inline VectorField read_snapshot(const std::string& path, int dealias_pad = 2) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, path + ": cannot open for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return decode_snapshot(ss.str(), dealias_pad, path);
}

} // namespace llbar

#endif // LLBAR_SNAPSHOT_HPP
