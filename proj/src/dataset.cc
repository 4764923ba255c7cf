// src/dataset.cc

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

#include "eend/dataset.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "eend/error.h"

namespace eend {

ConversationSpec conversation_spec(const DataConfig& data, std::size_t split_index,
                                   std::size_t index) {
  ConversationSpec spec = data.spec;
  spec.seed = mix_seed(data.spec.seed, (static_cast<std::uint64_t>(split_index) << 32) |
                                           static_cast<std::uint64_t>(index));
  return spec;
}

std::vector<ManifestEntry> generate_dataset(const DataConfig& data,
                                            const std::filesystem::path& root) {
  data.spec.validate();
  const std::size_t counts[] = {data.train, data.val, data.test};
  std::vector<ManifestEntry> entries;
  for (std::size_t split = 0; split < 3; ++split) {
    const std::filesystem::path dir = root / kSplits[split];
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < counts[split]; ++i) {
      char id[64];
      std::snprintf(id, sizeof(id), "%s_%05zu", kSplits[split], i);
      const Conversation conv = make_conversation(conversation_spec(data, split, i), id);
      const std::string file = std::string(kSplits[split]) + "/" + id + ".bin";
      write_conversation(root / file, conv);
      entries.push_back({kSplits[split], id, file, conv.labels.rows(),
                         overlap_ratio(conv.labels), silence_fraction(conv.labels)});
    }
  }
  write_manifest(root, entries);
  return entries;
}

void write_manifest(const std::filesystem::path& root,
                    const std::vector<ManifestEntry>& entries) {
  std::filesystem::create_directories(root);
  std::ofstream os(root / "manifest.txt", std::ios::trunc);
  if (!os) throw IoError("cannot write " + (root / "manifest.txt").string());
  char buf[64];
  for (const ManifestEntry& e : entries) {
    os << e.split << ' ' << e.id << ' ' << e.file << ' ' << e.frames;
    std::snprintf(buf, sizeof(buf), " %.17g %.17g\n", e.overlap_ratio, e.silence_ratio);
    os << buf;
  }
  if (!os) throw IoError("failed writing manifest");
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& root) {
  std::ifstream is(root / "manifest.txt");
  if (!is) throw IoError("no manifest in " + root.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    ManifestEntry e;
    if (!(fields >> e.split >> e.id >> e.file >> e.frames >> e.overlap_ratio >> e.silence_ratio))
      throw IoError("malformed manifest line '" + line + "'");
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<Conversation> load_split_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw IoError("dataset directory " + dir.string() + " does not exist");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".bin")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<Conversation> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(read_conversation(f));
  return out;
}

}  // namespace eend
