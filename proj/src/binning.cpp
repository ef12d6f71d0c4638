#include "tracelens/binning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace tracelens {

int Binning::BinOf(double value) const {
  if (!(hi > lo)) return 0;
  const double position = (value - lo) / (hi - lo) * count;
  const int bin = static_cast<int>(std::floor(position));
  return std::clamp(bin, 0, count - 1);
}

std::string Binning::Label(int bin) const {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "[%.6g, %.6g%c", LowerEdge(bin),
                UpperEdge(bin), bin == count - 1 ? ']' : ')');
  return buf;
}

}  // namespace tracelens
