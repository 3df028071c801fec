// npy.hpp: NPY v1.0 array file reader/writer.
//
// Accepts little-endian '<f4' and '<f8' payloads in C order; 32-bit files
// are widened to f64 on load. Fortran-order files are rejected rather than
// transposed. Writing pads the header so the payload starts on a 64-byte
// boundary, matching the reference format.
#pragma once

#include <filesystem>

#include "cpal/tensor.hpp"

namespace cpal {

enum class NpyDtype { f32, f64 };

// Throws FormatError on malformed or truncated files and
// UnsupportedDtypeError on non-float payloads.
Tensor load_tensor(const std::filesystem::path& path);

// Writes t as NPY v1.0. Equal tensors produce byte-identical files.
void save_tensor(const Tensor& t, const std::filesystem::path& path,
                 NpyDtype dtype = NpyDtype::f64);

}  // namespace cpal
