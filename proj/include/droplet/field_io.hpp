#pragma once

#include "droplet/grid.hpp"

#include <filesystem>

namespace droplet {

// CSV with header "x1,x2[,x3],value", one row per node in storage order.
void write_field_csv(const std::filesystem::path& path, const ScalarField& f);

// Binary dump: 16-byte header (int32 dim, int32 n, float64 L), then n^d
// float64 values; everything little-endian.
void write_field_binary(const std::filesystem::path& path, const ScalarField& f);
ScalarField read_field_binary(const std::filesystem::path& path);

} // namespace droplet
