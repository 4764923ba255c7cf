// tests/test_cli.cc

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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(EEND_TOOL) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("eend_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

const char* kTiny =
    "model.blocks = 2\nmodel.heads = 2\nmodel.dim = 8\nmodel.ff_dim = 16\n"
    "loss.svad_block = 2\noptim.warmup = 10\n"
    "data.frames_raw = 300\ndata.base_dim = 3\ndata.context = 1\n"
    "data.min_segment = 20\ndata.max_segment = 50\n"
    "data.train = 6\ndata.val = 2\ndata.test = 2\n"
    "train.epochs = 1\ntrain.batch_size = 3\n";

}  // namespace

TEST_CASE("exit status for bad invocations") {
  CHECK(run("") == 1);
  CHECK(run("frobnicate") == 1);
  CHECK(run("--help") == 0);
  CHECK(run("eval") == 1);
  CHECK(run("gen --config /nonexistent/file.conf") == 1);
  const fs::path dir = scratch("bad");
  std::ofstream(dir / "bad.conf") << "model.depth = 3\n";
  CHECK(run("gen --config " + (dir / "bad.conf").string() + " --out " + dir.string()) == 1);
  CHECK(run("gen --set data.overlap_ratio=0.95 --out " + dir.string()) == 1);
  CHECK(run("train --out " + (dir / "nodata").string()) == 1);
}

TEST_CASE("gen, train, eval and attention end to end") {
  const fs::path dir = scratch("e2e");
  std::ofstream(dir / "tiny.conf") << kTiny;
  const std::string conf = "--config " + (dir / "tiny.conf").string();
  const std::string out = " --out " + (dir / "run").string();
  REQUIRE(run("gen " + conf + " --seed 5" + out) == 0);
  CHECK(slurp(dir / "run" / "data" / "manifest.txt").find("train train_00000") == 0);

  REQUIRE(run("gen " + conf + " --seed 5 --out " + (dir / "again").string()) == 0);
  CHECK(slurp(dir / "run" / "data" / "train" / "train_00003.bin") ==
        slurp(dir / "again" / "data" / "train" / "train_00003.bin"));

  REQUIRE(run("train " + conf + out) == 0);
  const fs::path ckpt = dir / "run" / "checkpoints" / "best.ckpt";
  CHECK(fs::exists(ckpt));
  CHECK(fs::exists(dir / "run" / "metrics.csv"));

  CHECK(run("eval " + conf + " --checkpoint " + ckpt.string() + out) == 0);
  CHECK(slurp(dir / "run" / "eval.csv").rfind("id,miss,fa,confusion,der\n", 0) == 0);
  fs::create_directories(dir / "empty");
  CHECK(run("eval " + conf + " --checkpoint " + ckpt.string() + " --data " +
            (dir / "empty").string() + out) == 1);

  CHECK(run("attention --checkpoint " + ckpt.string() + " --recording test_00000 --block 1" +
            out) == 0);
  CHECK(fs::exists(dir / "run" / "attention" / "test_00000_block1_head1.pgm"));
  CHECK(run("attention --checkpoint " + ckpt.string() + " --recording test_00000 --block 9" +
            out) == 1);
  CHECK(run("attention --checkpoint " + ckpt.string() + " --recording nope" + out) == 1);
}

TEST_CASE("zero conversations") {
  const fs::path dir = scratch("zero");
  CHECK(run("gen --set data.train=0 --set data.val=0 --set data.test=0 --out " + dir.string()) == 0);
  CHECK(fs::file_size(dir / "data" / "manifest.txt") == 0);
}
