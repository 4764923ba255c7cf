// include/eend/dataset.h

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

#ifndef EEND_DATASET_H_
#define EEND_DATASET_H_

// On-disk datasets. A dataset root holds one directory per split (train,
// val, test) with one conversation file per recording, and manifest.txt
// with a line "split id relative-path frames overlap_ratio silence_ratio"
// per file.

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "eend/config.h"
#include "eend/simulator.h"

namespace eend {

inline constexpr const char* kSplits[] = {"train", "val", "test"};

struct ManifestEntry {
  std::string split;
  std::string id;
  std::string file;  // relative to the dataset root
  std::size_t frames = 0;
  double overlap_ratio = 0.0;
  double silence_ratio = 0.0;
};

// Spec of conversation `index` in split `split_index`; seeds are derived
// from the dataset seed so every file is reproducible on its own.
ConversationSpec conversation_spec(const DataConfig& data, std::size_t split_index,
                                   std::size_t index);

// Generates all splits under root and writes the manifest. Returns the
// manifest entries in file order.
std::vector<ManifestEntry> generate_dataset(const DataConfig& data,
                                            const std::filesystem::path& root);

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& root);
void write_manifest(const std::filesystem::path& root,
                    const std::vector<ManifestEntry>& entries);

// Every *.bin conversation in a split directory, sorted by file name.
std::vector<Conversation> load_split_dir(const std::filesystem::path& dir);

}  // namespace eend

#endif  // EEND_DATASET_H_
