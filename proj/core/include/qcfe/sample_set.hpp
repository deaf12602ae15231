// This code is licensed under the Apache License, Version 2.0. You may obtain
// a copy of this license at http://www.apache.org/licenses/LICENSE-2.0.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>

#include "qcfe/determinant.hpp"

namespace qcfe {

/// Multiset of raw length-2M bitstrings with counts, as drawn from a
/// (simulated) device. Keys reuse the Determinant mask layout but need not
/// satisfy any particle-number constraint; noise can break it. Iteration
/// order is the (alpha, beta) mask order, which keeps every consumer
/// deterministic.
class SampleSet {
 public:
  explicit SampleSet(int n_orbitals);

  int n_orbitals() const noexcept { return n_orbitals_; }
  bool empty() const noexcept { return counts_.empty(); }
  std::size_t distinct() const noexcept { return counts_.size(); }
  std::uint64_t total_shots() const noexcept { return total_; }

  void add(const Determinant& pattern, std::uint64_t count = 1);
  void merge(const SampleSet& other);

  const std::map<Determinant, std::uint64_t>& counts() const noexcept {
    return counts_;
  }

 private:
  int n_orbitals_;
  std::uint64_t total_ = 0;
  std::map<Determinant, std::uint64_t> counts_;
};

/// count_dict interchange: one `bitstring count` pair per line, bitstring in
/// the canonical alpha-block-then-beta-block text order.
SampleSet read_count_dict(std::istream& in);
SampleSet read_count_dict_file(const std::string& path);
void write_count_dict(const SampleSet& samples, std::ostream& out);
void write_count_dict_file(const SampleSet& samples, const std::string& path);

}  // namespace qcfe
