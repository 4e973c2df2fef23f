#pragma once

// Template definitions for split.hpp.

#include <vector>

namespace nacart::detail {

template <typename Scan>
std::optional<SplitCandidate> reduce_features(std::span<const std::size_t> features,
                                              const SplitParams& params, Scan&& scan) {
  const auto nf = static_cast<long>(features.size());
  std::vector<FeatureBest> best(features.size());
#pragma omp parallel for schedule(dynamic) if (params.parallel && nf > 1)
  for (long k = 0; k < nf; ++k) best[k] = scan(features[k]);

  std::optional<SplitCandidate> out;
  for (std::size_t k = 0; k < features.size(); ++k) {
    const FeatureBest& b = best[k];
    if (!b.found) continue;
    if (out && !(b.criterion < out->criterion)) continue;
    SplitCandidate c;
    c.split.feature = features[k];
    c.split.kind = b.kind;
    c.split.missing_route = b.route;
    if (b.kind == SplitKind::Thresholded) c.split.threshold = b.threshold;
    c.criterion = b.criterion;
    out = c;
  }
  return out;
}

}  // namespace nacart::detail
