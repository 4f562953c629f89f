#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "fwtt/patterns.hpp"
#include "fwtt/tensor.hpp"

namespace fwtt {

/**
 * DTNS container: one UTF-8 JSON header line terminated by '\n', then a raw
 * payload.
 *
 *   {"magic":"dtns","version":1,"kind":"dense","shape":[...],"dtype":"f64","order":"first-index-fastest"}
 *
 * kind "dense": shape is the tensor shape; payload is prod(shape) little-endian
 *   IEEE-754 doubles, first-index-fastest. NaN marks missing entries and may
 *   only cover whole mode-N fibers.
 * kind "tt": shape is (I_1..I_N) and "ranks" (R_0..R_N) follows "shape";
 *   payload is the cores in order, each first-index-fastest in shape
 *   (R_{n-1}, I_n, R_n), sum R_{n-1} I_n R_n doubles.
 * kind "pattern": shape is the base shape (I_1..I_{N-1}); dtype is "u8" and
 *   the payload holds one byte (0 or 1) per mode-N fiber, first-index-fastest.
 */
enum class DtnsKind { dense, tt, pattern };

using DtnsObject = std::variant<DenseTensor, TTDecomposition, FiberPattern>;

struct DtnsHeader {
  DtnsKind kind = DtnsKind::dense;
  Shape shape;
  std::vector<Index> ranks;  // tt only
};

/// Serialized header line, including the trailing newline.
std::string header_line(const DtnsHeader& h);

void write_dtns(std::ostream& os, const DenseTensor& t);
void write_dtns(std::ostream& os, const TTDecomposition& tt);
void write_dtns(std::ostream& os, const FiberPattern& p);

/// Reads any kind; throws FormatError on malformed or truncated input.
DtnsObject read_dtns(std::istream& is);

void save_dtns(const std::filesystem::path& path, const DtnsObject& obj);
DtnsObject load_dtns(const std::filesystem::path& path);

DenseTensor load_dense(const std::filesystem::path& path);
TTDecomposition load_tt(const std::filesystem::path& path);
FiberPattern load_pattern(const std::filesystem::path& path);

}  // namespace fwtt
