#include "fwtt/dtns.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "fwtt/errors.hpp"

namespace fwtt {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr const char* kMagic = "dtns";
constexpr int kVersion = 1;
constexpr const char* kOrder = "first-index-fastest";
// Header lines longer than this are rejected rather than read into memory.
constexpr std::size_t kMaxHeader = 1 << 20;

const char* kind_name(DtnsKind k) {
  switch (k) {
    case DtnsKind::dense: return "dense";
    case DtnsKind::tt: return "tt";
    case DtnsKind::pattern: return "pattern";
  }
  return "dense";
}

void write_doubles(std::ostream& os, std::span<const double> v) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  } else {
    for (double d : v) {
      auto bits = __builtin_bswap64(std::bit_cast<std::uint64_t>(d));
      os.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
  }
}

std::vector<double> read_doubles(std::istream& is, Index count) {
  std::vector<double> v(static_cast<std::size_t>(count));
  const auto bytes = static_cast<std::streamsize>(v.size() * sizeof(double));
  is.read(reinterpret_cast<char*>(v.data()), bytes);
  if (is.gcount() != bytes) {
    throw FormatError("payload truncated: expected " + std::to_string(count) + " doubles, got " +
                      std::to_string(is.gcount() / static_cast<std::streamsize>(sizeof(double))) + " (" +
                      std::to_string(is.gcount()) + " bytes)");
  }
  if constexpr (std::endian::native != std::endian::little) {
    for (double& d : v) d = std::bit_cast<double>(__builtin_bswap64(std::bit_cast<std::uint64_t>(d)));
  }
  return v;
}

void expect_end(std::istream& is) {
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after payload");
}

std::vector<Index> read_index_list(const ordered_json& h, const char* key) {
  if (!h.contains(key) || !h[key].is_array()) throw FormatError(std::string("header field '") + key + "' missing");
  std::vector<Index> out;
  for (const auto& x : h[key]) {
    if (!x.is_number_integer() || x.get<long long>() < 1) {
      throw FormatError(std::string("header field '") + key + "' must hold positive integers");
    }
    out.push_back(x.get<Index>());
  }
  return out;
}

// NaN may only mark whole mode-N fibers.
void check_nan_blocks(const DenseTensor& t) {
  const Index len = t.shape().back();
  const Index fibers = t.size() / len;
  const auto v = t.values();
  for (Index f = 0; f < fibers; ++f) {
    Index nans = 0;
    for (Index k = 0; k < len; ++k) nans += std::isnan(v[static_cast<std::size_t>(f + fibers * k)]) ? 1 : 0;
    if (nans != 0 && (nans != len || t.order() < 2)) {
      throw FormatError("NaN outside masked fibers (fiber " + std::to_string(f) + ")");
    }
  }
}

}  // namespace

std::string header_line(const DtnsHeader& h) {
  ordered_json j;
  j["magic"] = kMagic;
  j["version"] = kVersion;
  j["kind"] = kind_name(h.kind);
  j["shape"] = h.shape;
  if (h.kind == DtnsKind::tt) j["ranks"] = h.ranks;
  j["dtype"] = h.kind == DtnsKind::pattern ? "u8" : "f64";
  j["order"] = kOrder;
  return j.dump() + "\n";
}

void write_dtns(std::ostream& os, const DenseTensor& t) {
  os << header_line({DtnsKind::dense, t.shape(), {}});
  write_doubles(os, t.values());
}

void write_dtns(std::ostream& os, const TTDecomposition& tt) {
  os << header_line({DtnsKind::tt, tt.shape(), tt.ranks()});
  for (const auto& c : tt.cores()) write_doubles(os, c.values());
}

void write_dtns(std::ostream& os, const FiberPattern& p) {
  os << header_line({DtnsKind::pattern, p.base_shape(), {}});
  os.write(reinterpret_cast<const char*>(p.flags().data()), static_cast<std::streamsize>(p.flags().size()));
}

DtnsObject read_dtns(std::istream& is) {
  std::string line;
  char c = 0;
  while (is.get(c) && c != '\n') {
    line.push_back(c);
    if (line.size() > kMaxHeader) throw FormatError("header line too long");
  }
  if (c != '\n') throw FormatError("missing header line");
  ordered_json h;
  try {
    h = ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("header is not valid JSON: ") + e.what());
  }
  if (!h.is_object() || h.value("magic", "") != kMagic) throw FormatError("bad magic (expected \"dtns\")");
  if (!h.contains("version") || !h["version"].is_number_integer() || h["version"].get<int>() != kVersion) {
    throw FormatError("unsupported version (expected 1)");
  }
  if (h.value("order", "") != kOrder) throw FormatError("unsupported element order");
  const std::string kind = h.value("kind", "");
  const Shape shape = read_index_list(h, "shape");
  if (shape.empty()) throw FormatError("shape must be non-empty");

  try {
    if (kind == "dense") {
      if (h.value("dtype", "") != "f64" || h.contains("ranks")) throw FormatError("dense header must have dtype f64 and no ranks");
      DenseTensor t(shape, read_doubles(is, shape_size(shape)));
      expect_end(is);
      check_nan_blocks(t);
      return t;
    }
    if (kind == "tt") {
      if (h.value("dtype", "") != "f64") throw FormatError("tt header must have dtype f64");
      const auto ranks = read_index_list(h, "ranks");
      if (ranks.size() != shape.size() + 1) throw FormatError("tt ranks must have one more entry than shape");
      std::vector<DenseTensor> cores;
      for (std::size_t n = 0; n < shape.size(); ++n) {
        Shape cs{ranks[n], shape[n], ranks[n + 1]};
        cores.emplace_back(cs, read_doubles(is, shape_size(cs)));
      }
      expect_end(is);
      return TTDecomposition(std::move(cores));
    }
    if (kind == "pattern") {
      if (h.value("dtype", "") != "u8" || h.contains("ranks")) throw FormatError("pattern header must have dtype u8 and no ranks");
      std::vector<std::uint8_t> flags(static_cast<std::size_t>(shape_size(shape)));
      is.read(reinterpret_cast<char*>(flags.data()), static_cast<std::streamsize>(flags.size()));
      if (is.gcount() != static_cast<std::streamsize>(flags.size())) {
        throw FormatError("payload truncated: expected " + std::to_string(flags.size()) + " bytes, got " +
                          std::to_string(is.gcount()));
      }
      expect_end(is);
      return FiberPattern(shape, std::move(flags));
    }
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("inconsistent ") + kind + " file: " + e.what());
  }
  throw FormatError("unknown kind '" + kind + "'");
}

void save_dtns(const std::filesystem::path& path, const DtnsObject& obj) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open " + path.string() + " for writing");
  std::visit([&](const auto& v) { write_dtns(os, v); }, obj);
  os.flush();
  if (!os) throw FormatError("failed writing " + path.string());
}

DtnsObject load_dtns(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  return read_dtns(is);
}

namespace {

template <typename T>
T load_as(const std::filesystem::path& path, const char* kind) {
  auto obj = load_dtns(path);
  if (auto* v = std::get_if<T>(&obj)) return std::move(*v);
  throw FormatError(path.string() + " does not hold a " + kind + " object");
}

}  // namespace

DenseTensor load_dense(const std::filesystem::path& path) { return load_as<DenseTensor>(path, "dense"); }
TTDecomposition load_tt(const std::filesystem::path& path) { return load_as<TTDecomposition>(path, "tt"); }
FiberPattern load_pattern(const std::filesystem::path& path) { return load_as<FiberPattern>(path, "pattern"); }

}  // namespace fwtt
