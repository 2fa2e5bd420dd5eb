#pragma once

// Real prototype waveform on an integer time axis, plus its text format:
//
//   # wfm v1 N=<int> K=<int> offset=<int> len=<int>
//   <tap 0>
//   ...
//
// Taps are written with 17 significant digits so the round trip is bit-exact.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wh/grid.hpp"

namespace wh {

class Waveform {
 public:
  Waveform() = default;

  /// Takes samples starting at absolute index `offset`; leading and trailing
  /// exact zeros are dropped. Throws if every sample is zero.
  Waveform(std::vector<double> samples, int offset, GridParams grid) : grid_(grid) {
    std::size_t lo = 0;
    while (lo < samples.size() && samples[lo] == 0.0) ++lo;
    if (lo == samples.size()) throw std::invalid_argument("Waveform: all samples are zero");
    std::size_t hi = samples.size();
    while (samples[hi - 1] == 0.0) --hi;
    for (std::size_t k = lo; k < hi; ++k)
      if (!std::isfinite(samples[k])) throw std::invalid_argument("Waveform: non-finite tap");
    taps_.assign(samples.begin() + static_cast<std::ptrdiff_t>(lo), samples.begin() + static_cast<std::ptrdiff_t>(hi));
    offset_ = offset + static_cast<int>(lo);
  }

  const std::vector<double>& taps() const { return taps_; }
  int offset() const { return offset_; }
  const GridParams& grid() const { return grid_; }
  int length() const { return static_cast<int>(taps_.size()); }
  int first() const { return offset_; }
  int last() const { return offset_ + length() - 1; }

  /// v[n] at absolute index n (zero outside the support).
  double at(int n) const {
    const int k = n - offset_;
    if (k < 0 || k >= length()) return 0.0;
    return taps_[static_cast<std::size_t>(k)];
  }

  double energy() const {
    double e = 0.0;
    for (double t : taps_) e += t * t;
    return e;
  }

  int nonzero_count() const {
    int c = 0;
    for (double t : taps_) c += t != 0.0;
    return c;
  }

  /// Same taps, support moved by d samples.
  Waveform delayed(int d) const {
    Waveform w = *this;
    w.offset_ += d;
    return w;
  }

  /// u[n] = v[-n].
  Waveform reversed() const {
    Waveform w;
    w.grid_ = grid_;
    w.taps_.assign(taps_.rbegin(), taps_.rend());
    w.offset_ = -last();
    return w;
  }

  Waveform scaled(double s) const {
    std::vector<double> t = taps_;
    for (double& x : t) x *= s;
    return Waveform(std::move(t), offset_, grid_);
  }

  friend bool operator==(const Waveform& a, const Waveform& b) {
    return a.offset_ == b.offset_ && a.grid_ == b.grid_ && a.taps_ == b.taps_;
  }

 private:
  std::vector<double> taps_;
  int offset_ = 0;
  GridParams grid_;
};

class WaveformFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void write_waveform(std::ostream& os, const Waveform& w) {
  os << "# wfm v1 N=" << w.grid().N << " K=" << w.grid().K << " offset=" << w.offset() << " len=" << w.length()
     << "\n";
  char buf[64];
  for (double t : w.taps()) {
    std::snprintf(buf, sizeof buf, "%.17g\n", t);
    os << buf;
  }
}

inline Waveform read_waveform(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw WaveformFormatError("waveform: missing header");
  int N = 0, K = 0, offset = 0, len = 0;
  char tail = 0;
  if (std::sscanf(header.c_str(), "# wfm v1 N=%d K=%d offset=%d len=%d %c", &N, &K, &offset, &len, &tail) != 4)
    throw WaveformFormatError("waveform: bad header '" + header + "'");
  if (len < 1) throw WaveformFormatError("waveform: len must be positive");
  GridParams g;
  try {
    g = grid_params(N, K);
  } catch (const std::invalid_argument& e) {
    throw WaveformFormatError(std::string("waveform: ") + e.what());
  }
  std::vector<double> taps;
  taps.reserve(static_cast<std::size_t>(len));
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    char* end = nullptr;
    const double x = std::strtod(line.c_str(), &end);
    if (end == line.c_str()) throw WaveformFormatError("waveform: bad tap '" + line + "'");
    while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
    if (*end != '\0') throw WaveformFormatError("waveform: trailing garbage in '" + line + "'");
    taps.push_back(x);
  }
  if (static_cast<int>(taps.size()) != len)
    throw WaveformFormatError("waveform: header says len=" + std::to_string(len) + " but file has " +
                              std::to_string(taps.size()) + " taps");
  if (taps.front() == 0.0 || taps.back() == 0.0)
    throw WaveformFormatError("waveform: first and last taps must be nonzero");
  try {
    return Waveform(std::move(taps), offset, g);
  } catch (const std::invalid_argument& e) {
    throw WaveformFormatError(std::string("waveform: ") + e.what());
  }
}

inline void save_waveform(const std::string& path, const Waveform& w) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_waveform(os, w);
  if (!os) throw std::runtime_error("write to '" + path + "' failed");
}

inline Waveform load_waveform(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  return read_waveform(is);
}

}  // namespace wh
