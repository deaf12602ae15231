// This code is licensed under the Apache License, Version 2.0. You may obtain
// a copy of this license at http://www.apache.org/licenses/LICENSE-2.0.

#include "qcfe/integrals.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "qcfe/errors.hpp"

namespace qcfe {

MolecularHamiltonian::MolecularHamiltonian(int n_orbitals, int n_alpha,
                                           int n_beta)
    : norb_(n_orbitals), n_alpha_(n_alpha), n_beta_(n_beta) {
  if (norb_ < 1 || norb_ > 64)
    throw ValidationError("n_orbitals must be in [1, 64], got " +
                          std::to_string(norb_));
  if (n_alpha_ < 0 || n_beta_ < 0)
    throw ValidationError("electron counts must be non-negative");
  if (n_alpha_ > norb_ || n_beta_ > norb_)
    throw ValidationError("electron count exceeds orbital count");
  const std::size_t npair =
      static_cast<std::size_t>(norb_) * (norb_ + 1) / 2;
  h_.assign(npair, 0.0);
  v_.assign(npair * (npair + 1) / 2, 0.0);
}

std::size_t MolecularHamiltonian::pair_index(int a, int b) const {
  const std::size_t hi = static_cast<std::size_t>(std::max(a, b));
  const std::size_t lo = static_cast<std::size_t>(std::min(a, b));
  return hi * (hi + 1) / 2 + lo;
}

std::size_t MolecularHamiltonian::quad_index(int p, int q, int r, int s) const {
  const std::size_t pq = pair_index(p, q);
  const std::size_t rs = pair_index(r, s);
  const std::size_t hi = std::max(pq, rs);
  const std::size_t lo = std::min(pq, rs);
  return hi * (hi + 1) / 2 + lo;
}

void MolecularHamiltonian::check_index(int p) const {
  if (p < 0 || p >= norb_)
    throw ValidationError("orbital index " + std::to_string(p) +
                          " out of range [0, " + std::to_string(norb_) + ")");
}

double MolecularHamiltonian::one_body(int p, int q) const {
  check_index(p);
  check_index(q);
  return h_[pair_index(p, q)];
}

void MolecularHamiltonian::set_one_body(int p, int q, double value) {
  check_index(p);
  check_index(q);
  h_[pair_index(p, q)] = value;
}

double MolecularHamiltonian::two_body(int p, int q, int r, int s) const {
  check_index(p);
  check_index(q);
  check_index(r);
  check_index(s);
  return v_[quad_index(p, q, r, s)];
}

void MolecularHamiltonian::set_two_body(int p, int q, int r, int s,
                                        double value) {
  check_index(p);
  check_index(q);
  check_index(r);
  check_index(s);
  v_[quad_index(p, q, r, s)] = value;
}

namespace {

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ValidationError("fcidump line " + std::to_string(line) + ": " + msg);
}

long parse_long(const std::string& tok, int line, const char* what) {
  long value = 0;
  const auto* begin = tok.data();
  const auto* end = tok.data() + tok.size();
  auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc{} || res.ptr != end)
    fail(line, std::string("expected integer for ") + what + ", got '" + tok +
                   "'");
  return value;
}

struct HeaderField {
  std::string key;
  std::vector<std::string> values;
};

}  // namespace

MolecularHamiltonian parse_fcidump(std::istream& in) {
  std::string line;
  int lineno = 0;

  // --- namelist header: everything up to &END or a bare '/' -------------
  std::string header;
  bool header_done = false;
  int header_start = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (header.empty()) {
      auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos) continue;  // leading blank lines
      header_start = lineno;
      if (line[first] != '&')
        fail(lineno, "expected namelist header starting with '&'");
    }
    std::string upper = line;
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return std::toupper(c); });
    auto endpos = upper.find("&END");
    auto slashpos = line.find('/');
    if (endpos != std::string::npos) {
      header += " " + line.substr(0, endpos);
      header_done = true;
      break;
    }
    if (slashpos != std::string::npos) {
      header += " " + line.substr(0, slashpos);
      header_done = true;
      break;
    }
    header += " " + line;
  }
  if (!header_done) fail(lineno, "unterminated namelist header (no &END or /)");

  // Strip the group name and split into KEY=value[,value...] fields.
  {
    auto amp = header.find('&');
    auto after = header.find_first_of(" \t,", amp);
    header = after == std::string::npos ? "" : header.substr(after);
  }
  std::vector<HeaderField> fields;
  {
    std::string tok;
    std::istringstream toks(header);
    std::string piece;
    while (toks >> piece) {
      // commas separate values; they may glue to tokens
      std::string cur;
      for (char c : piece) {
        if (c == ',') {
          if (!cur.empty()) {
            if (auto eq = cur.find('='); eq != std::string::npos) {
              std::string key = cur.substr(0, eq);
              std::transform(key.begin(), key.end(), key.begin(),
                             [](unsigned char ch) { return std::toupper(ch); });
              fields.push_back({key, {}});
              if (eq + 1 < cur.size())
                fields.back().values.push_back(cur.substr(eq + 1));
            } else {
              if (fields.empty())
                fail(header_start, "value '" + cur + "' before any key");
              fields.back().values.push_back(cur);
            }
            cur.clear();
          }
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
          cur += c;
        }
      }
      if (!cur.empty()) {
        if (auto eq = cur.find('='); eq != std::string::npos) {
          std::string key = cur.substr(0, eq);
          std::transform(key.begin(), key.end(), key.begin(),
                         [](unsigned char ch) { return std::toupper(ch); });
          fields.push_back({key, {}});
          if (eq + 1 < cur.size())
            fields.back().values.push_back(cur.substr(eq + 1));
        } else {
          if (fields.empty())
            fail(header_start, "value '" + cur + "' before any key");
          fields.back().values.push_back(cur);
        }
      }
    }
  }

  long norb = -1, nelec = -1, ms2 = 0;
  for (const auto& f : fields) {
    if (f.key == "NORB") {
      if (f.values.empty()) fail(header_start, "NORB has no value");
      norb = parse_long(f.values[0], header_start, "NORB");
    } else if (f.key == "NELEC") {
      if (f.values.empty()) fail(header_start, "NELEC has no value");
      nelec = parse_long(f.values[0], header_start, "NELEC");
    } else if (f.key == "MS2") {
      if (f.values.empty()) fail(header_start, "MS2 has no value");
      ms2 = parse_long(f.values[0], header_start, "MS2");
    }
    // ORBSYM, ISYM and any other keys are accepted and ignored: the solvers
    // here never exploit point-group symmetry.
  }
  if (norb < 0) fail(header_start, "missing NORB");
  if (nelec < 0) fail(header_start, "missing NELEC");
  if ((nelec + ms2) % 2 != 0)
    fail(header_start, "NELEC/MS2 parity mismatch: NELEC=" +
                           std::to_string(nelec) + " MS2=" +
                           std::to_string(ms2));
  const long na = (nelec + ms2) / 2;
  const long nb = (nelec - ms2) / 2;
  if (na < 0 || nb < 0)
    fail(header_start, "negative per-spin electron count from NELEC/MS2");
  if (norb < 1 || norb > 64)
    fail(header_start, "NORB must be in [1, 64], got " + std::to_string(norb));
  if (na > norb || nb > norb)
    fail(header_start, "electron count exceeds NORB");

  MolecularHamiltonian ham(static_cast<int>(norb), static_cast<int>(na),
                           static_cast<int>(nb));

  // --- integral body ------------------------------------------------------
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string vtok;
    if (!(ls >> vtok)) continue;  // blank line
    double value = 0.0;
    {
      const auto* begin = vtok.data();
      const auto* end = vtok.data() + vtok.size();
      auto res = std::from_chars(begin, end, value);
      if (res.ec != std::errc{} || res.ptr != end || !std::isfinite(value))
        fail(lineno, "non-numeric integral value '" + vtok + "'");
    }
    long idx[4];
    for (int t = 0; t < 4; ++t) {
      std::string itok;
      if (!(ls >> itok)) fail(lineno, "expected 4 orbital indices");
      idx[t] = parse_long(itok, lineno, "orbital index");
      if (idx[t] < 0 || idx[t] > norb)
        fail(lineno, "index " + std::to_string(idx[t]) + " out of [0, " +
                         std::to_string(norb) + "]");
    }
    std::string extra;
    if (ls >> extra) fail(lineno, "trailing token '" + extra + "'");

    const long i = idx[0], j = idx[1], k = idx[2], l = idx[3];
    if (i == 0 && j == 0 && k == 0 && l == 0) {
      ham.set_e_nuc(value);
    } else if (k == 0 && l == 0) {
      if (i == 0 || j == 0)
        fail(lineno, "zero orbital index in one-electron integral");
      ham.set_one_body(static_cast<int>(i - 1), static_cast<int>(j - 1),
                       value);
    } else {
      if (i == 0 || j == 0 || k == 0 || l == 0)
        fail(lineno, "zero orbital index in two-electron integral");
      ham.set_two_body(static_cast<int>(i - 1), static_cast<int>(j - 1),
                       static_cast<int>(k - 1), static_cast<int>(l - 1),
                       value);
    }
  }
  return ham;
}

MolecularHamiltonian parse_fcidump_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open fcidump file: " + path);
  return parse_fcidump(in);
}

namespace {

// Shortest representation that round-trips exactly.
std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

void write_fcidump(const MolecularHamiltonian& h, std::ostream& out) {
  const int m = h.n_orbitals();
  const int nelec = h.n_alpha() + h.n_beta();
  const int ms2 = h.n_alpha() - h.n_beta();
  out << "&FCI NORB=" << m << ",NELEC=" << nelec << ",MS2=" << ms2 << ",\n";
  out << "  ORBSYM=";
  for (int p = 0; p < m; ++p) out << "1,";
  out << "\n  ISYM=1,\n&END\n";

  auto pair = [](int a, int b) { return a * (a + 1) / 2 + b; };
  for (int p = 0; p < m; ++p)
    for (int q = 0; q <= p; ++q)
      for (int r = 0; r <= p; ++r)
        for (int s = 0; s <= r; ++s) {
          if (pair(r, s) > pair(p, q)) continue;
          const double v = h.two_body(p, q, r, s);
          if (v != 0.0)
            out << format_double(v) << ' ' << p + 1 << ' ' << q + 1 << ' '
                << r + 1 << ' ' << s + 1 << '\n';
        }
  for (int p = 0; p < m; ++p)
    for (int q = 0; q <= p; ++q) {
      const double v = h.one_body(p, q);
      if (v != 0.0)
        out << format_double(v) << ' ' << p + 1 << ' ' << q + 1 << " 0 0\n";
    }
  out << format_double(h.e_nuc()) << " 0 0 0 0\n";
}

void write_fcidump_file(const MolecularHamiltonian& h,
                        const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  write_fcidump(h, out);
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace qcfe
