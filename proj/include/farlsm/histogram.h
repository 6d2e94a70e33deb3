// Copyright (c) 2026 The farlsm Authors. All rights reserved.
// Use of this source code is governed by a BSD-style license that can be
// found in the LICENSE file.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace farlsm {

// Latency histogram over microsecond values with geometric buckets.
class Histogram {
 public:
  Histogram() { Clear(); }

  void Clear();
  void Add(double value);
  void Merge(const Histogram& other);

  uint64_t count() const { return count_; }
  double min() const { return count_ == 0 ? 0.0 : min_; }
  double max() const { return max_; }
  double Average() const;
  double Percentile(double p) const;  // p in [0, 100]
  double Median() const { return Percentile(50.0); }

  std::string ToString() const;

 private:
  static constexpr int kNumBuckets = 154;
  static const double kBucketLimit[kNumBuckets];

  double min_;
  double max_;
  double sum_;
  uint64_t count_;
  std::vector<uint64_t> buckets_;
};

}  // namespace farlsm
