#pragma once

#include <map>
#include <span>
#include <string>

#include "sit/error.hpp"

namespace sit {

// Cohen's kappa for two raters over paired categorical labels.
inline double cohens_kappa(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.size() != b.size()) fail(Errc::validation, "cohens_kappa: label lists differ in length");
  if (a.empty()) fail(Errc::insufficient_data, "cohens_kappa: no labels");
  std::map<std::string, double> ma, mb;
  double agree = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma[a[i]] += 1.0;
    mb[b[i]] += 1.0;
    if (a[i] == b[i]) agree += 1.0;
  }
  const double n = static_cast<double>(a.size());
  double pe = 0.0;
  for (const auto& [label, ca] : ma)
    if (auto it = mb.find(label); it != mb.end()) pe += (ca / n) * (it->second / n);
  const double po = agree / n;
  if (pe >= 1.0) fail(Errc::degenerate, "cohens_kappa: chance agreement is 1");
  return (po - pe) / (1.0 - pe);
}

}  // namespace sit
