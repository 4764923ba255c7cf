// tests/test_simulator.cc

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

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "eend/error.h"
#include "eend/simulator.h"

using namespace eend;

namespace {

ConversationSpec default_spec(std::uint64_t seed) {
  ConversationSpec spec;
  spec.target_overlap_ratio = 0.344;
  spec.silence_ratio = 0.1;
  spec.num_frames_raw = 2000;
  spec.seed = seed;
  return spec;
}

std::size_t count_rows_with(const Tensor& labels, double active) {
  std::size_t n = 0;
  for (std::size_t t = 0; t < labels.rows(); ++t)
    n += labels(t, 0) + labels(t, 1) == active;
  return n;
}

}  // namespace

TEST_CASE("labels are binary and respect the overlap target") {
  ConversationSpec spec = default_spec(3);
  const Tensor labels = generate_labels(spec);
  CHECK(labels.rows() == 2000);
  for (double v : labels.data()) CHECK((v == 0.0 || v == 1.0));
  const double rho = overlap_ratio(labels);
  CHECK(rho >= 0.294);
  CHECK(rho <= 0.394);
  CHECK(std::abs(silence_fraction(labels) - 0.1) < 0.01);

  spec.target_overlap_ratio = 0.0;
  CHECK(count_rows_with(generate_labels(spec), 2.0) == 0);
}

TEST_CASE("segments alternate and keep the configured lengths") {
  const Tensor labels = generate_labels(default_spec(5));
  // every run of a constant row state lasts at least the minimum length
  std::size_t run = 1;
  for (std::size_t t = 1; t <= labels.rows(); ++t) {
    const bool same = t < labels.rows() && labels(t, 0) == labels(t - 1, 0) &&
                      labels(t, 1) == labels(t - 1, 1);
    if (same) {
      ++run;
    } else {
      CHECK(run >= 10);
      run = 1;
    }
  }
}

TEST_CASE("generation is a pure function of the spec") {
  CHECK(generate_labels(default_spec(11)) == generate_labels(default_spec(11)));
  CHECK_FALSE(generate_labels(default_spec(11)) == generate_labels(default_spec(12)));
  const Conversation a = make_conversation(default_spec(11));
  const Conversation b = make_conversation(default_spec(11));
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
}

TEST_CASE("overlap ratio averages to the target over many conversations") {
  double total_raw = 0.0, total_sub = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const ConversationSpec spec = default_spec(1000 + seed);
    const Tensor labels = generate_labels(spec);
    total_raw += overlap_ratio(labels);
    const double sub = overlap_ratio(subsample_rows(labels, spec.subsample));
    CHECK(std::abs(sub - 0.344) <= 0.05);
    total_sub += sub;
  }
  CHECK(std::abs(total_raw / 100.0 - 0.344) <= 0.02);
  CHECK(std::abs(total_sub / 100.0 - 0.344) <= 0.02);
}

TEST_CASE("infeasible specs are rejected") {
  ConversationSpec spec = default_spec(1);
  spec.target_overlap_ratio = 0.6;
  spec.silence_ratio = 0.4;
  CHECK_THROWS_AS(generate_labels(spec), SpecError);
  spec = default_spec(1);
  spec.num_frames_raw = 40;  // 4 silent frames cannot form a segment
  CHECK_THROWS_AS(generate_labels(spec), SpecError);
  spec = default_spec(1);
  spec.num_speakers = 3;
  CHECK_THROWS_AS(spec.validate(), SpecError);
}

TEST_CASE("noise-free rendering reproduces speaker means") {
  ConversationSpec spec = default_spec(21);
  spec.noise_sigma = 0.0;
  const Tensor labels = generate_labels(spec);
  const Tensor features = render_features(labels, spec);
  const Tensor means = speaker_means(spec);
  for (std::size_t s = 0; s < 2; ++s) {
    double norm = 0.0;
    for (std::size_t j = 0; j < 23; ++j) norm += means(s, j) * means(s, j);
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
  }
  for (std::size_t t = 0; t < labels.rows(); ++t)
    for (std::size_t j = 0; j < 23; ++j)
      CHECK(features(t, j) == labels(t, 0) * means(0, j) + labels(t, 1) * means(1, j));
}

TEST_CASE("noisy class means recover the speaker means") {
  ConversationSpec spec = default_spec(31);
  spec.num_frames_raw = 10000;
  const Tensor labels = generate_labels(spec);
  const Tensor features = render_features(labels, spec);
  const Tensor means = speaker_means(spec);
  const double tolerance = 3.0 * spec.noise_sigma / std::sqrt(1000.0);
  for (std::size_t s = 0; s < 2; ++s) {
    std::vector<double> acc(23, 0.0);
    std::size_t count = 0;
    for (std::size_t t = 0; t < labels.rows(); ++t) {
      if (labels(t, s) != 1.0 || labels(t, 1 - s) != 0.0) continue;
      ++count;
      for (std::size_t j = 0; j < 23; ++j) acc[j] += features(t, j);
    }
    REQUIRE(count >= 1000);
    for (std::size_t j = 0; j < 23; ++j)
      CHECK(std::abs(acc[j] / static_cast<double>(count) - means(s, j)) < tolerance);
  }
}

TEST_CASE("noise-free features are linearly separable by speaker presence") {
  ConversationSpec spec = default_spec(41);
  spec.noise_sigma = 0.0;
  const Tensor labels = generate_labels(spec);
  const Tensor features = render_features(labels, spec);
  const Eigen::Index n = static_cast<Eigen::Index>(labels.rows());
  Eigen::MatrixXd x(n, 24);
  Eigen::MatrixXd y(n, 2);
  for (Eigen::Index t = 0; t < n; ++t) {
    for (Eigen::Index j = 0; j < 23; ++j) x(t, j) = features(t, j);
    x(t, 23) = 1.0;
    y(t, 0) = labels(t, 0);
    y(t, 1) = labels(t, 1);
  }
  const Eigen::MatrixXd w = x.completeOrthogonalDecomposition().solve(y);
  const Eigen::MatrixXd fit = x * w;
  std::size_t correct = 0;
  for (Eigen::Index t = 0; t < n; ++t)
    correct += ((fit(t, 0) > 0.5) == (y(t, 0) > 0.5)) && ((fit(t, 1) > 0.5) == (y(t, 1) > 0.5));
  CHECK(correct == labels.rows());
}

TEST_CASE("splice replicates edges") {
  const Tensor x = Tensor::matrix({{1}, {2}, {3}});
  CHECK(splice(x, 0) == x);
  CHECK(splice(x, 1) == Tensor::matrix({{1, 1, 2}, {1, 2, 3}, {2, 3, 3}}));
  CHECK(splice(Tensor({5, 23}), 7).cols() == 345);
}

TEST_CASE("subsample keeps every factor-th frame from index 0") {
  Tensor x({25, 2});
  Tensor y({25, 2});
  for (std::size_t t = 0; t < 25; ++t) {
    x(t, 0) = static_cast<double>(t);
    y(t, t % 2) = 1.0;
  }
  const SubsampledPair one = subsample(x, y, 1);
  CHECK(one.features == x);
  CHECK(one.labels == y);
  const SubsampledPair ten = subsample(x, y, 10);
  REQUIRE(ten.features.rows() == 3);
  CHECK(ten.features(0, 0) == 0.0);
  CHECK(ten.features(1, 0) == 10.0);
  CHECK(ten.features(2, 0) == 20.0);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t s = 0; s < 2; ++s) CHECK(ten.labels(i, s) == y(10 * i, s));
}

TEST_CASE("pipeline splices before subsampling") {
  ConversationSpec spec = default_spec(51);
  const Conversation conv = make_conversation(spec);
  CHECK(conv.features.rows() == 200);
  CHECK(conv.features.cols() == 345);
  CHECK(conv.frame_duration_s == doctest::Approx(0.1));
  const Tensor raw = render_features(generate_labels(spec), spec);
  CHECK(conv.features == subsample_rows(splice(raw, 7), 10));
  CHECK_FALSE(conv.features == splice(subsample_rows(raw, 10), 7));
  CHECK(subsample_rows(splice(raw, 7), 1) == splice(subsample_rows(raw, 1), 7));
}

TEST_CASE("conversation files round-trip") {
  const Conversation conv = make_conversation(default_spec(61), "conv");
  const auto path = std::filesystem::temp_directory_path() / "eend_conv_test.bin";
  write_conversation(path, conv);
  const Conversation back = read_conversation(path);
  CHECK(back.features == conv.features);
  CHECK(back.labels == conv.labels);
  CHECK(back.frame_duration_s == conv.frame_duration_s);
  std::filesystem::remove(path);
}
