#pragma once

#include <span>
#include <vector>

#include "mars/model.hpp"
#include "mars/tensor.hpp"

namespace mars {

double rmse(std::span<const double> predicted, std::span<const double> actual);

// One ranking evaluation case: candidate ids in ranked order plus the ids
// considered relevant.
struct RankingCase {
  std::vector<int> ranked;
  std::vector<int> relevant;
};

// Fraction of cases with at least one relevant id in the top k.
double hit_ratio_at_k(std::span<const RankingCase> cases, int k);

// Mean average precision truncated at k; the per-case denominator is
// min(|relevant|, k).
double map_at_k(std::span<const RankingCase> cases, int k);

struct ReconstructionReport {
  double donation_loss = 0.0;  // squared error per cell
  double response_loss = 0.0;
};

ReconstructionReport reconstruction_report(const SensorModel& model,
                                           const EventTensor& td,
                                           const EventTensor& tr);

}  // namespace mars
