#pragma once

#include <string>

#include "tracelens/dataset.hpp"

namespace tracelens {

inline constexpr int kDefaultBinCount = 10;

// Equal-width bins over an attribute's [min, max]. The last bin is closed on
// the right so the maximum lands inside it. A zero-width range collapses to a
// single bin.
struct Binning {
  double lo = 0.0;
  double hi = 0.0;
  int count = kDefaultBinCount;

  static Binning For(const AttributeSchema& attribute,
                     int count = kDefaultBinCount) {
    return Binning{attribute.min, attribute.max,
                   attribute.max > attribute.min ? count : 1};
  }

  double width() const { return (hi - lo) / count; }
  double LowerEdge(int bin) const { return bin == 0 ? lo : lo + width() * bin; }
  double UpperEdge(int bin) const {
    return bin == count - 1 ? hi : lo + width() * (bin + 1);
  }
  int BinOf(double value) const;
  // "[lo, hi)" style label; the final bin is rendered "[lo, hi]".
  std::string Label(int bin) const;
};

}  // namespace tracelens
