#include "sann/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace sann {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'S', 'A', 'N', 'N', 'M', 'R', 'N', 'N'};
constexpr std::uint32_t kVersion = 1;
// Guards against allocating absurd sizes from a corrupt header.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw CheckpointError("checkpoint: unexpected end of file");
  return v;
}

void put_tensor(std::ostream& os, std::size_t rows, std::size_t cols,
                std::span<const double> data) {
  put<std::uint64_t>(os, rows);
  put<std::uint64_t>(os, cols);
  os.write(reinterpret_cast<const char*>(data.data()),
           static_cast<std::streamsize>(data.size() * sizeof(double)));
}

Vector get_payload(std::istream& is, std::uint64_t rows, std::uint64_t cols) {
  if (rows != 0 && cols > kMaxElements / rows) throw CheckpointError("checkpoint: tensor too large");
  Vector v(rows * cols);
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!is) throw CheckpointError("checkpoint: truncated tensor payload");
  return v;
}

Matrix get_matrix(std::istream& is) {
  const auto rows = get<std::uint64_t>(is);
  const auto cols = get<std::uint64_t>(is);
  try {
    return Matrix(rows, cols, get_payload(is, rows, cols));
  } catch (const std::domain_error&) {
    throw CheckpointError("checkpoint: non-finite weight");
  }
}

Vector get_vector(std::istream& is) {
  const auto rows = get<std::uint64_t>(is);
  const auto cols = get<std::uint64_t>(is);
  if (cols != 1) throw CheckpointError("checkpoint: bias tensor must have one column");
  Vector v = get_payload(is, rows, cols);
  if (!all_finite(v)) throw CheckpointError("checkpoint: non-finite bias");
  return v;
}

}  // namespace

void write_checkpoint(std::ostream& os, const MrnnParams& params) {
  params.validate();
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, kVersion);
  put<std::uint64_t>(os, params.input_rows);
  put<std::uint64_t>(os, params.input_cols);
  put<std::uint64_t>(os, params.layers.size());
  for (const MrnnLayer& ly : params.layers) {
    put_tensor(os, ly.a0.rows(), ly.a0.cols(), ly.a0.data());
    put_tensor(os, ly.b0.size(), 1, ly.b0);
    put_tensor(os, ly.bmul0.rows(), ly.bmul0.cols(), ly.bmul0.data());
    put_tensor(os, ly.a1.rows(), ly.a1.cols(), ly.a1.data());
    put_tensor(os, ly.b1.size(), 1, ly.b1);
    put_tensor(os, ly.bmul1.rows(), ly.bmul1.cols(), ly.bmul1.data());
  }
  if (!os) throw CheckpointError("checkpoint: write failed");
}

MrnnParams read_checkpoint(std::istream& is) {
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("checkpoint: bad magic");
  }
  const auto version = get<std::uint32_t>(is);
  if (version != kVersion) {
    throw CheckpointError("checkpoint: unsupported version " + std::to_string(version));
  }
  MrnnParams p;
  p.input_rows = get<std::uint64_t>(is);
  p.input_cols = get<std::uint64_t>(is);
  const auto count = get<std::uint64_t>(is);
  if (count == 0 || count > 1024) throw CheckpointError("checkpoint: implausible layer count");
  for (std::uint64_t l = 0; l < count; ++l) {
    MrnnLayer ly;
    ly.a0 = get_matrix(is);
    ly.b0 = get_vector(is);
    ly.bmul0 = get_matrix(is);
    ly.a1 = get_matrix(is);
    ly.b1 = get_vector(is);
    ly.bmul1 = get_matrix(is);
    if (l + 1 < count) p.hidden_widths.push_back(ly.b0.size());
    p.layers.push_back(std::move(ly));
  }
  try {
    p.validate();
  } catch (const DimensionError& e) {
    throw CheckpointError(std::string("checkpoint: inconsistent shapes: ") + e.what());
  }
  return p;
}

void save_checkpoint(const std::filesystem::path& path, const MrnnParams& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw CheckpointError("checkpoint: cannot open " + path.string() + " for writing");
  write_checkpoint(os, params);
}

MrnnParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("checkpoint: cannot open " + path.string());
  return read_checkpoint(is);
}

}  // namespace sann
