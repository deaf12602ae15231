// This code is licensed under the Apache License, Version 2.0. You may obtain
// a copy of this license at http://www.apache.org/licenses/LICENSE-2.0.

#include "qcfe/sample_set.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "qcfe/errors.hpp"

namespace qcfe {

SampleSet::SampleSet(int n_orbitals) : n_orbitals_(n_orbitals) {
  if (n_orbitals_ < 1 || n_orbitals_ > 64)
    throw ValidationError("SampleSet: n_orbitals out of [1, 64]");
}

void SampleSet::add(const Determinant& pattern, std::uint64_t count) {
  if (count == 0) return;
  const std::uint64_t range =
      n_orbitals_ >= 64 ? ~0ull : ((1ull << n_orbitals_) - 1);
  if ((pattern.alpha & ~range) || (pattern.beta & ~range))
    throw ValidationError("SampleSet: pattern bits exceed orbital count");
  counts_[pattern] += count;
  total_ += count;
}

void SampleSet::merge(const SampleSet& other) {
  if (other.n_orbitals_ != n_orbitals_)
    throw ValidationError("SampleSet::merge: orbital count mismatch");
  for (const auto& [pattern, count] : other.counts_) {
    counts_[pattern] += count;
    total_ += count;
  }
}

SampleSet read_count_dict(std::istream& in) {
  std::string line;
  int lineno = 0;
  SampleSet out(1);
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string bits, ctok;
    if (!(ls >> bits)) continue;
    if (!(ls >> ctok))
      throw ValidationError("count_dict line " + std::to_string(lineno) +
                            ": missing count");
    std::string extra;
    if (ls >> extra)
      throw ValidationError("count_dict line " + std::to_string(lineno) +
                            ": trailing token '" + extra + "'");
    std::uint64_t count = 0;
    auto res = std::from_chars(ctok.data(), ctok.data() + ctok.size(), count);
    if (res.ec != std::errc{} || res.ptr != ctok.data() + ctok.size() ||
        count == 0)
      throw ValidationError("count_dict line " + std::to_string(lineno) +
                            ": count must be a positive integer, got '" +
                            ctok + "'");
    Determinant d;
    try {
      d = determinant_from_bitstring(bits);
    } catch (const ValidationError& e) {
      throw ValidationError("count_dict line " + std::to_string(lineno) +
                            ": " + e.what());
    }
    if (first) {
      out = SampleSet(static_cast<int>(bits.size() / 2));
      first = false;
    } else if (bits.size() != 2 * static_cast<std::size_t>(out.n_orbitals())) {
      throw ValidationError("count_dict line " + std::to_string(lineno) +
                            ": inconsistent bitstring length");
    }
    out.add(d, count);
  }
  if (first) throw ValidationError("count_dict: no samples found");
  return out;
}

SampleSet read_count_dict_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open count_dict file: " + path);
  return read_count_dict(in);
}

void write_count_dict(const SampleSet& samples, std::ostream& out) {
  for (const auto& [pattern, count] : samples.counts())
    out << to_bitstring(pattern, samples.n_orbitals()) << ' ' << count << '\n';
}

void write_count_dict_file(const SampleSet& samples, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  write_count_dict(samples, out);
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace qcfe
