#include "diffreg/volume_file.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "diffreg/errors.hpp"

namespace diffreg {

namespace {

constexpr char kMagic[4] = {'D', 'V', 'F', '1'};
constexpr std::uint32_t kFloat64Flag = 1;

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<unsigned char>((v >> (8 * b)) & 0xffu));
}

void put_f64(std::vector<unsigned char>& out, double d) {
  const auto bits = std::bit_cast<std::uint64_t>(d);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>((bits >> (8 * b)) & 0xffu));
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(p[b]) << (8 * b);
  return v;
}

double get_f64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return std::bit_cast<double>(v);
}

Grid grid_of(const Volume& v) {
  for (auto d : v.dims) {
    if (d < 4 || d % 2 != 0 || d > (1u << 15)) {
      throw InputError("volume dimensions " + std::to_string(v.dims[0]) + "x" +
                       std::to_string(v.dims[1]) + "x" + std::to_string(v.dims[2]) +
                       " are not a valid grid (each must be even and >= 4)");
    }
  }
  return Grid(static_cast<int>(v.dims[0]), static_cast<int>(v.dims[1]),
              static_cast<int>(v.dims[2]));
}

}  // namespace

std::vector<unsigned char> encode_volume(const Volume& v) {
  if (v.components != 1 && v.components != 3) {
    throw InputError("volume component count must be 1 or 3");
  }
  if (v.data.size() != v.voxels() * v.components) {
    throw InputError("volume payload size does not match its header");
  }
  std::vector<unsigned char> out;
  out.reserve(kVolumeHeaderBytes + v.data.size() * 8);
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  for (auto d : v.dims) put_u32(out, d);
  put_u32(out, v.components);
  put_u32(out, kFloat64Flag);
  for (double d : v.data) put_f64(out, d);
  return out;
}

Volume decode_volume(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < kVolumeHeaderBytes) throw InputError("volume file is truncated");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw InputError("volume file has a bad magic");
  Volume v;
  for (int i = 0; i < 3; ++i) v.dims[i] = get_u32(bytes.data() + 4 + 4 * i);
  v.components = get_u32(bytes.data() + 16);
  const std::uint32_t flag = get_u32(bytes.data() + 20);
  if (v.components != 1 && v.components != 3) {
    throw InputError("volume component count must be 1 or 3");
  }
  if (flag != kFloat64Flag) throw InputError("volume payload is not float64");
  const std::size_t count = v.voxels() * v.components;
  if (bytes.size() != kVolumeHeaderBytes + count * 8) {
    throw InputError("volume payload length does not match its header");
  }
  v.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) v.data[i] = get_f64(bytes.data() + kVolumeHeaderBytes + 8 * i);
  return v;
}

void write_volume(const std::filesystem::path& path, const Volume& v) {
  const auto bytes = encode_volume(v);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw InputError("cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw InputError("failed writing " + path.string());
}

Volume read_volume(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open volume " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                   std::istreambuf_iterator<char>());
  try {
    return decode_volume(bytes);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

Volume to_volume(const ScalarField& f) {
  const auto& d = f.grid().dims();
  Volume v{{static_cast<std::uint32_t>(d[0]), static_cast<std::uint32_t>(d[1]),
            static_cast<std::uint32_t>(d[2])},
           1,
           {f.values().begin(), f.values().end()}};
  return v;
}

Volume to_volume(const VectorField& f) {
  Volume v = to_volume(f[0]);
  v.components = 3;
  for (int c = 1; c < 3; ++c) v.data.insert(v.data.end(), f[c].values().begin(), f[c].values().end());
  return v;
}

ScalarField to_scalar_field(const Volume& v) {
  if (v.components != 1) throw InputError("expected a single-component volume");
  const Grid g = grid_of(v);
  ScalarField f(g, v.data);
  if (!f.all_finite()) throw InputError("volume contains non-finite values");
  return f;
}

VectorField to_vector_field(const Volume& v) {
  if (v.components != 3) throw InputError("expected a three-component volume");
  const Grid g = grid_of(v);
  const std::size_t n = g.size();
  std::array<std::vector<double>, 3> parts;
  for (int c = 0; c < 3; ++c) {
    parts[c].assign(v.data.begin() + static_cast<std::ptrdiff_t>(c * n),
                    v.data.begin() + static_cast<std::ptrdiff_t>((c + 1) * n));
  }
  return VectorField(ScalarField(g, std::move(parts[0])), ScalarField(g, std::move(parts[1])),
                     ScalarField(g, std::move(parts[2])));
}

}  // namespace diffreg
