// include/eend/tensor_io.h

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

#ifndef EEND_TENSOR_IO_H_
#define EEND_TENSOR_IO_H_

// Flat binary tensor format: little-endian u32 rank, rank x u32 extents,
// then the values as IEEE-754 binary64 in row-major order.

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "eend/tensor.h"

namespace eend {

void write_tensor(std::ostream& os, const Tensor& t);
// Throws IoError on truncated or malformed input.
Tensor read_tensor(std::istream& is);

void write_tensors(const std::filesystem::path& path,
                   const std::vector<Tensor>& tensors);
std::vector<Tensor> read_tensors(const std::filesystem::path& path);

}  // namespace eend

#endif  // EEND_TENSOR_IO_H_
