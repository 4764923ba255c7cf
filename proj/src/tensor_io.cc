// src/tensor_io.cc

// Copyright 2026  The EEND-Aux Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "eend/tensor_io.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "eend/error.h"

namespace eend {
namespace {

static_assert(sizeof(double) == 8);

template <typename U>
void put_le(std::ostream& os, U value) {
  unsigned char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i)
    bytes[i] = static_cast<unsigned char>(value >> (8 * i));
  os.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <typename U>
U get_le(std::istream& is) {
  unsigned char bytes[sizeof(U)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(U)))
    throw IoError("truncated tensor stream");
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i)
    value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

}  // namespace

void write_tensor(std::ostream& os, const Tensor& t) {
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t extent : t.shape())
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(extent));
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(t.ptr()),
             static_cast<std::streamsize>(t.size() * sizeof(double)));
  } else {
    for (double v : t.data()) put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(v));
  }
  if (!os) throw IoError("failed writing tensor");
}

Tensor read_tensor(std::istream& is) {
  const std::uint32_t rank = get_le<std::uint32_t>(is);
  if (rank == 0 || rank > 8) throw IoError("implausible tensor rank " + std::to_string(rank));
  Shape shape(rank);
  for (auto& extent : shape) {
    extent = get_le<std::uint32_t>(is);
    if (extent == 0) throw IoError("zero tensor extent");
  }
  std::vector<double> data(shape_size(shape));
  if constexpr (std::endian::native == std::endian::little) {
    if (!is.read(reinterpret_cast<char*>(data.data()),
                 static_cast<std::streamsize>(data.size() * sizeof(double))))
      throw IoError("truncated tensor data");
  } else {
    for (double& v : data) v = std::bit_cast<double>(get_le<std::uint64_t>(is));
  }
  return Tensor(std::move(shape), std::move(data));
}

void write_tensors(const std::filesystem::path& path,
                   const std::vector<Tensor>& tensors) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  for (const Tensor& t : tensors) write_tensor(os, t);
  os.flush();
  if (!os) throw IoError("failed writing " + path.string());
}

std::vector<Tensor> read_tensors(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::vector<Tensor> out;
  while (is.peek() != std::char_traits<char>::eof()) out.push_back(read_tensor(is));
  return out;
}

}  // namespace eend
