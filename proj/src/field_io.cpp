#include "droplet/field_io.hpp"

#include "droplet/error.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace droplet {

namespace {

template <typename T>
void put_le(std::ofstream& out, T value) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    }
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(std::ifstream& in) {
    unsigned char bytes[sizeof(T)];
    in.read(reinterpret_cast<char*>(bytes), sizeof(T));
    if (!in) throw Error(ErrorCode::io, "truncated binary field");
    if constexpr (std::endian::native == std::endian::big) {
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    }
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

} // namespace

void write_field_csv(const std::filesystem::path& path, const ScalarField& f) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io, "cannot open " + path.string());
    const Grid& g = f.grid();
    out << (g.dim() == 2 ? "x1,x2,value\n" : "x1,x2,x3,value\n");
    char buf[128];
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Point p = g.point(i);
        if (g.dim() == 2) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p[0], p[1], f[i]);
        } else {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", p[0], p[1], p[2], f[i]);
        }
        out << buf;
    }
    if (!out) throw Error(ErrorCode::io, "write failed: " + path.string());
}

void write_field_binary(const std::filesystem::path& path, const ScalarField& f) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io, "cannot open " + path.string());
    const Grid& g = f.grid();
    put_le<std::int32_t>(out, g.dim());
    put_le<std::int32_t>(out, g.n());
    put_le<double>(out, g.half_width());
    for (double v : f.values()) put_le<double>(out, v);
    if (!out) throw Error(ErrorCode::io, "write failed: " + path.string());
}

ScalarField read_field_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
    const auto dim = get_le<std::int32_t>(in);
    const auto n = get_le<std::int32_t>(in);
    const auto half_width = get_le<double>(in);
    Grid g(dim, n, half_width);
    ScalarField f(g);
    for (std::size_t i = 0; i < g.size(); ++i) f[i] = get_le<double>(in);
    return f;
}

} // namespace droplet
