#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "sdkn/network.hpp"

namespace sdkn {

// Text model format, version 1:
//
//   sdkn-model 1 <binary64|binary128>
//   dims d_0 d_1 ... d_{2L+1}
//   centers <M> <d_0>
//   <M rows of d_0 numbers>
//   linear <rows> <cols>
//   <rows rows of cols numbers>
//   activation <M> <d>
//   kernel <family> <epsilon>        (d lines)
//   <M rows of d numbers>
//   ...                              (alternating, ending with a linear block)
//   end
//
// Numbers are decimal with max_digits10 significant digits (17 for binary64,
// 36 for binary128), so a write/read cycle reproduces every value exactly.

template <class T>
void write_model(std::ostream& out, const BasicModel<T>& model);

template <class T>
BasicModel<T> read_model(std::istream& in);

template <class T>
void save_model(const std::filesystem::path& path, const BasicModel<T>& model);

template <class T>
BasicModel<T> load_model(const std::filesystem::path& path);

/// Reads the scalar tag from a model file header ("binary64" or "binary128").
std::string model_scalar_tag(const std::filesystem::path& path);

/// Loads either precision into double.
SdknModel load_model_as_double(const std::filesystem::path& path);

std::string format_number(double v);
std::string format_number(const Quad& v);

}  // namespace sdkn
