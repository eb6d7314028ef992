#pragma once

#include <filesystem>
#include <iosfwd>

#include "aipgame/errors.hpp"
#include "aipgame/tensor.hpp"

namespace aipgame {

/// Reads a binary PGM (P5, maxval 255) into an H x W x 1 tensor with pixel
/// values in [0, 255]. Malformed input throws ParseError with the offending
/// byte offset.
Tensor read_pgm(const std::filesystem::path& path);

/// Writes a tensor as binary PGM; values are quantized to [0, 255] first.
/// The tensor must be single-channel (rank-2 or H x W x 1).
void write_pgm(const std::filesystem::path& path, const Tensor& image);

/// Tensor container: magic "TNSR", version byte 0x01, rank and extents as
/// little-endian int32, then the payload as little-endian float32.
Tensor read_tensor(const std::filesystem::path& path);
Tensor read_tensor(std::istream& in, std::size_t base_offset = 0);
void write_tensor(const std::filesystem::path& path, const Tensor& t);
void write_tensor(std::ostream& out, const Tensor& t);

/// Loads an image by extension: ".pgm" via read_pgm, anything else as TNSR.
Tensor read_image(const std::filesystem::path& path);

}  // namespace aipgame
