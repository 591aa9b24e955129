#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "diffreg/grid.hpp"

namespace diffreg {

/// Raw volume in the DVF1 container:
///
///   bytes 0-3   magic "DVF1"
///   bytes 4-15  N1, N2, N3 as uint32 little-endian
///   bytes 16-19 component count (1 or 3), uint32 little-endian
///   bytes 20-23 payload flag, uint32 little-endian; 1 = float64
///   payload     N1*N2*N3*components float64 little-endian, x-fastest,
///               component index slowest
struct Volume {
  std::array<std::uint32_t, 3> dims{};
  std::uint32_t components = 1;
  std::vector<double> data;

  std::size_t voxels() const { return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]; }
};

inline constexpr std::size_t kVolumeHeaderBytes = 24;

std::vector<unsigned char> encode_volume(const Volume& v);
/// Throws InputError on a malformed buffer.
Volume decode_volume(const std::vector<unsigned char>& bytes);

void write_volume(const std::filesystem::path& path, const Volume& v);
/// Throws InputError if the file is unreadable or malformed.
Volume read_volume(const std::filesystem::path& path);

Volume to_volume(const ScalarField& f);
Volume to_volume(const VectorField& v);
/// Throws InputError when the volume is not a single-component field on a
/// valid grid.
ScalarField to_scalar_field(const Volume& v);
VectorField to_vector_field(const Volume& v);

}  // namespace diffreg
