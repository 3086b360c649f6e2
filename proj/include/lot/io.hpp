#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lot/network.hpp"
#include "lot/orthogonalizer.hpp"
#include "lot/tensor.hpp"

namespace lot::io {

// ---------------------------------------------------------------------------
// Tensor files
//
//   offset 0  "LOTK"
//          4  u16 version (1)
//          6  u8  dtype: 0 f32, 1 f64, 2 u32
//          7  u8  rank
//          8  u32 dims[rank]
//             payload, row-major
//
// Every integer and float is little-endian.

inline constexpr std::uint16_t kTensorFileVersion = 1;

enum class DType : std::uint8_t { f32 = 0, f64 = 1, u32 = 2 };

std::size_t dtype_size(DType d);

std::vector<std::uint8_t> encode_tensor(const Tensor& t, DType dtype);
std::vector<std::uint8_t> encode_labels(std::span<const std::size_t> labels);

struct DecodedTensor {
  Tensor tensor;  ///< u32 payloads are widened to double
  DType dtype = DType::f64;
};

/// Throws FormatError on a bad magic, version, dtype or payload length.
DecodedTensor decode_tensor(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

void write_tensor(const std::filesystem::path& path, const Tensor& t, DType dtype);
DecodedTensor read_tensor(const std::filesystem::path& path);
/// Rank-1 u32 file.
void write_labels(const std::filesystem::path& path, std::span<const std::size_t> labels);
std::vector<std::size_t> read_labels(const std::filesystem::path& path);

/// Frequency kernel as a [s, s, c_out, c_in, 2] tensor of (re, im) pairs.
Tensor frequency_kernel_tensor(const FrequencyKernel& w);
FrequencyKernel frequency_kernel_from_tensor(const Tensor& t);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::span<const std::uint8_t> bytes);
std::string hash_hex(std::uint64_t h);

// ---------------------------------------------------------------------------
// Model manifests (JSON)
//
// {
//   "format": "lotkit-model", "version": 1,
//   "input_shape": [c, w, w],
//   "layers": [
//     {"type": "lot", "weights": "layer0.lotk", "hash": "<16 hex>",
//      "input_side": w, "padding": "zero" | "circular",
//      "residual": 0.5 | null, "newton_steps": 10, "early_stop_tol": 1e-7},
//     {"type": "maxmin"}, {"type": "downsample"}
//   ],
//   "head": {"type": "plain" | "lln", "weights": "head.lotk", "hash": "..."} | null
// }
//
// Weight paths are relative to the manifest's directory.

/// Writes the manifest and one f64 weight file per LOT layer and head.
void save_model(const std::filesystem::path& manifest, const Network& net);
/// Validates hashes and the shape chain before returning.
Network load_model(const std::filesystem::path& manifest);

// ---------------------------------------------------------------------------
// Line-oriented reports: a tab-separated header, one record per line, then a
// "#summary" line followed by key<TAB>value lines.

class Report {
 public:
  explicit Report(std::vector<std::string> columns = {}) : columns_(std::move(columns)) {}

  void add_row(std::vector<std::string> cells);
  void add_summary(std::string key, std::string value);
  void write(std::ostream& out) const;
  std::string str() const;

  const std::vector<std::vector<std::string>>& rows() const noexcept { return rows_; }
  const std::vector<std::pair<std::string, std::string>>& summary() const noexcept { return summary_; }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::pair<std::string, std::string>> summary_;
};

/// Shortest round-trip decimal form ("%.17g" trimmed).
std::string format_double(double v);

}  // namespace lot::io
