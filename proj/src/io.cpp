#include "lot/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "lot/error.hpp"

namespace lot::io {

namespace {

constexpr std::uint8_t kMagic[4] = {'L', 'O', 'T', 'K'};

template <class U>
void put_le(std::vector<std::uint8_t>& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

template <class U>
U get_le(std::span<const std::uint8_t> bytes, std::size_t at) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(bytes[at + i]) << (8 * i));
  return v;
}

std::vector<std::uint8_t> header(DType dtype, std::span<const std::size_t> dims) {
  if (dims.size() > 255) throw InvalidArgument("tensor file: rank above 255");
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_le<std::uint16_t>(out, kTensorFileVersion);
  out.push_back(static_cast<std::uint8_t>(dtype));
  out.push_back(static_cast<std::uint8_t>(dims.size()));
  for (auto d : dims) {
    if (d > 0xffffffffULL) throw InvalidArgument("tensor file: dimension exceeds u32");
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  }
  return out;
}

Padding parse_padding(const std::string& s) {
  if (s == "zero") return Padding::zero;
  if (s == "circular") return Padding::circular;
  throw FormatError("manifest: unknown padding '" + s + "'");
}

std::string file_hash(const std::filesystem::path& p) { return hash_hex(fnv1a(read_bytes(p))); }

void save_weights(const std::filesystem::path& dir, const std::string& name, const Tensor& t,
                  nlohmann::json& entry) {
  const auto bytes = encode_tensor(t, DType::f64);
  write_bytes(dir / name, bytes);
  entry["weights"] = name;
  entry["hash"] = hash_hex(fnv1a(bytes));
}

Tensor load_weights(const std::filesystem::path& dir, const nlohmann::json& entry) {
  const auto path = dir / entry.at("weights").get<std::string>();
  const auto bytes = read_bytes(path);
  const std::string want = entry.at("hash").get<std::string>();
  const std::string got = hash_hex(fnv1a(bytes));
  if (want != got)
    throw FormatError("manifest: hash mismatch for " + path.string() + " (expected " + want + ", got " + got + ")");
  return decode_tensor(bytes).tensor;
}

}  // namespace

std::size_t dtype_size(DType d) {
  switch (d) {
    case DType::f32: return 4;
    case DType::f64: return 8;
    case DType::u32: return 4;
  }
  throw FormatError("tensor file: unknown dtype");
}

std::vector<std::uint8_t> encode_tensor(const Tensor& t, DType dtype) {
  auto out = header(dtype, t.shape());
  out.reserve(out.size() + t.size() * dtype_size(dtype));
  for (double v : t.values()) {
    switch (dtype) {
      case DType::f32: put_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v))); break;
      case DType::f64: put_le(out, std::bit_cast<std::uint64_t>(v)); break;
      case DType::u32:
        if (!(v >= 0.0 && v <= 4294967295.0) || v != std::floor(v))
          throw InvalidArgument("tensor file: value not representable as u32");
        put_le(out, static_cast<std::uint32_t>(v));
        break;
    }
  }
  return out;
}

std::vector<std::uint8_t> encode_labels(std::span<const std::size_t> labels) {
  const std::size_t n = labels.size();
  auto out = header(DType::u32, std::span<const std::size_t>(&n, 1));
  for (auto l : labels) {
    if (l > 0xffffffffULL) throw InvalidArgument("labels: value exceeds u32");
    put_le(out, static_cast<std::uint32_t>(l));
  }
  return out;
}

DecodedTensor decode_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin()))
    throw FormatError("tensor file: bad magic");
  const auto version = get_le<std::uint16_t>(bytes, 4);
  if (version != kTensorFileVersion)
    throw FormatError("tensor file: unsupported version " + std::to_string(version));
  const std::uint8_t code = bytes[6];
  if (code > 2) throw FormatError("tensor file: unknown dtype code " + std::to_string(code));
  const auto dtype = static_cast<DType>(code);
  const std::size_t rank = bytes[7];
  if (bytes.size() < 8 + 4 * rank) throw FormatError("tensor file: truncated header");
  std::vector<std::size_t> dims(rank);
  for (std::size_t i = 0; i < rank; ++i) dims[i] = get_le<std::uint32_t>(bytes, 8 + 4 * i);
  const std::size_t count = shape_product(dims);
  const std::size_t start = 8 + 4 * rank;
  if (bytes.size() - start != count * dtype_size(dtype))
    throw FormatError("tensor file: payload is " + std::to_string(bytes.size() - start) + " bytes, expected " +
                      std::to_string(count * dtype_size(dtype)));

  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    switch (dtype) {
      case DType::f32:
        data[i] = std::bit_cast<float>(get_le<std::uint32_t>(bytes, start + 4 * i));
        break;
      case DType::f64: data[i] = std::bit_cast<double>(get_le<std::uint64_t>(bytes, start + 8 * i)); break;
      case DType::u32: data[i] = get_le<std::uint32_t>(bytes, start + 4 * i); break;
    }
  }
  Tensor t(std::move(dims), std::move(data));
  if (dtype == DType::f32) t = t.rounded_to(Precision::f32);
  return {std::move(t), dtype};
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed for " + path.string());
  return out;
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

void write_tensor(const std::filesystem::path& path, const Tensor& t, DType dtype) {
  write_bytes(path, encode_tensor(t, dtype));
}

DecodedTensor read_tensor(const std::filesystem::path& path) {
  try {
    return decode_tensor(read_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_labels(const std::filesystem::path& path, std::span<const std::size_t> labels) {
  write_bytes(path, encode_labels(labels));
}

std::vector<std::size_t> read_labels(const std::filesystem::path& path) {
  const DecodedTensor d = read_tensor(path);
  if (d.dtype != DType::u32 || d.tensor.rank() != 1)
    throw FormatError(path.string() + ": labels must be a rank-1 u32 tensor");
  std::vector<std::size_t> out(d.tensor.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<std::size_t>(d.tensor[i]);
  return out;
}

Tensor frequency_kernel_tensor(const FrequencyKernel& w) {
  const std::size_t s = w.side(), co = w.c_out(), ci = w.c_in();
  Tensor t({s, s, co, ci, 2});
  std::size_t at = 0;
  for (std::size_t p = 0; p < s * s; ++p)
    for (std::size_t j = 0; j < co; ++j)
      for (std::size_t i = 0; i < ci; ++i) {
        t[at++] = w.pixel(p)(j, i).real();
        t[at++] = w.pixel(p)(j, i).imag();
      }
  return t;
}

FrequencyKernel frequency_kernel_from_tensor(const Tensor& t) {
  if (t.rank() != 5 || t.dim(0) != t.dim(1) || t.dim(4) != 2)
    throw FormatError("frequency kernel: expected [s, s, c_out, c_in, 2]");
  FrequencyKernel w(t.dim(0), t.dim(2), t.dim(3));
  std::size_t at = 0;
  for (std::size_t p = 0; p < w.pixel_count(); ++p)
    for (std::size_t j = 0; j < w.c_out(); ++j)
      for (std::size_t i = 0; i < w.c_in(); ++i, at += 2) w.pixel(p)(j, i) = Complex(t[at], t[at + 1]);
  w.set_orthogonalized(true);
  return w;
}

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (auto b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = digits[h & 0xf];
  return s;
}

void save_model(const std::filesystem::path& manifest, const Network& net) {
  const auto dir = manifest.parent_path().empty() ? std::filesystem::path(".") : manifest.parent_path();
  const std::string stem = manifest.stem().string();
  nlohmann::json doc;
  doc["format"] = "lotkit-model";
  doc["version"] = 1;
  doc["input_shape"] = net.input_shape();
  doc["layers"] = nlohmann::json::array();
  for (std::size_t i = 0; i < net.body().size(); ++i) {
    nlohmann::json entry;
    if (const auto* l = std::get_if<LotLayer>(&net.body()[i])) {
      entry["type"] = "lot";
      save_weights(dir, stem + ".layer" + std::to_string(i) + ".lotk", l->params().to_tensor(), entry);
      entry["input_side"] = l->input_side();
      entry["padding"] = l->padding() == Padding::zero ? "zero" : "circular";
      entry["residual"] = l->residual() ? nlohmann::json(*l->residual()) : nlohmann::json(nullptr);
      entry["newton_steps"] = l->newton().steps;
      entry["early_stop_tol"] = l->newton().early_stop_tol;
    } else if (std::holds_alternative<MaxMinLayer>(net.body()[i])) {
      entry["type"] = "maxmin";
    } else {
      entry["type"] = "downsample";
    }
    doc["layers"].push_back(entry);
  }
  if (net.head()) {
    nlohmann::json head;
    head["type"] = net.head()->type == HeadType::lln ? "lln" : "plain";
    save_weights(dir, stem + ".head.lotk", net.head()->weights, head);
    doc["head"] = head;
  } else {
    doc["head"] = nullptr;
  }
  const std::string text = doc.dump(2) + "\n";
  write_bytes(manifest, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Network load_model(const std::filesystem::path& manifest) {
  const auto bytes = read_bytes(manifest);
  const auto dir = manifest.parent_path().empty() ? std::filesystem::path(".") : manifest.parent_path();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(manifest.string() + ": " + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != "lotkit-model") throw FormatError("manifest: wrong format tag");
    if (doc.at("version").get<int>() != 1) throw FormatError("manifest: unsupported version");
    const auto input_shape = doc.at("input_shape").get<std::vector<std::size_t>>();

    // Hashes are checked for every file before any layer is built.
    for (const auto& entry : doc.at("layers")) {
      if (entry.contains("weights")) {
        const auto p = dir / entry.at("weights").get<std::string>();
        if (file_hash(p) != entry.at("hash").get<std::string>())
          throw FormatError("manifest: hash mismatch for " + p.string());
      }
    }

    std::vector<BodyLayer> body;
    for (const auto& entry : doc.at("layers")) {
      const std::string type = entry.at("type").get<std::string>();
      if (type == "lot") {
        const Tensor w = load_weights(dir, entry);
        std::optional<double> residual;
        if (!entry.at("residual").is_null()) residual = entry.at("residual").get<double>();
        NewtonOptions newton;
        newton.steps = entry.value("newton_steps", kDefaultNewtonSteps);
        newton.early_stop_tol = entry.value("early_stop_tol", kDefaultEarlyStopTol);
        body.emplace_back(LotLayer(ConvKernel::from_tensor(w), entry.at("input_side").get<std::size_t>(),
                                   parse_padding(entry.value("padding", std::string("zero"))), residual, newton));
      } else if (type == "maxmin") {
        body.emplace_back(MaxMinLayer{});
      } else if (type == "downsample") {
        body.emplace_back(DownsampleLayer{});
      } else {
        throw FormatError("manifest: unknown layer type '" + type + "'");
      }
    }

    std::optional<LinearHead> head;
    if (doc.contains("head") && !doc.at("head").is_null()) {
      const auto& h = doc.at("head");
      const std::string type = h.at("type").get<std::string>();
      if (type != "lln" && type != "plain") throw FormatError("manifest: unknown head type '" + type + "'");
      head = LinearHead{load_weights(dir, h), type == "lln" ? HeadType::lln : HeadType::plain};
    }
    return Network(input_shape, std::move(body), std::move(head));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(manifest.string() + ": " + e.what());
  }
}

void Report::add_row(std::vector<std::string> cells) {
  if (!columns_.empty() && cells.size() != columns_.size())
    throw InvalidArgument("report: row has " + std::to_string(cells.size()) + " cells, expected " +
                          std::to_string(columns_.size()));
  rows_.push_back(std::move(cells));
}

void Report::add_summary(std::string key, std::string value) { summary_.emplace_back(std::move(key), std::move(value)); }

void Report::write(std::ostream& out) const {
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "\t" : "") << cells[i];
    out << '\n';
  };
  if (!columns_.empty()) line(columns_);
  for (const auto& r : rows_) line(r);
  out << "#summary\n";
  for (const auto& [k, v] : summary_) out << k << '\t' << v << '\n';
}

std::string Report::str() const {
  std::ostringstream s;
  write(s);
  return s.str();
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace lot::io
