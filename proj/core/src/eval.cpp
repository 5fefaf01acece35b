#include "mars/eval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mars {

double rmse(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size()) {
    throw std::invalid_argument("rmse: length mismatch");
  }
  if (predicted.empty()) {
    throw std::invalid_argument("rmse: empty input");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - actual[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(predicted.size()));
}

namespace {

bool is_relevant(const RankingCase& c, int id) {
  return std::find(c.relevant.begin(), c.relevant.end(), id) !=
         c.relevant.end();
}

}  // namespace

double hit_ratio_at_k(std::span<const RankingCase> cases, int k) {
  if (k < 1) throw std::invalid_argument("hit_ratio_at_k: k must be >= 1");
  if (cases.empty()) {
    throw std::invalid_argument("hit_ratio_at_k: no evaluation cases");
  }
  double hits = 0.0;
  for (const RankingCase& c : cases) {
    const int top = std::min<int>(k, static_cast<int>(c.ranked.size()));
    for (int i = 0; i < top; ++i) {
      if (is_relevant(c, c.ranked[i])) {
        hits += 1.0;
        break;
      }
    }
  }
  return hits / static_cast<double>(cases.size());
}

double map_at_k(std::span<const RankingCase> cases, int k) {
  if (k < 1) throw std::invalid_argument("map_at_k: k must be >= 1");
  if (cases.empty()) {
    throw std::invalid_argument("map_at_k: no evaluation cases");
  }
  double total = 0.0;
  for (const RankingCase& c : cases) {
    const int top = std::min<int>(k, static_cast<int>(c.ranked.size()));
    double precision_sum = 0.0;
    int seen_relevant = 0;
    for (int i = 0; i < top; ++i) {
      if (is_relevant(c, c.ranked[i])) {
        ++seen_relevant;
        precision_sum += static_cast<double>(seen_relevant) / (i + 1);
      }
    }
    const int denom = std::min<int>(k, static_cast<int>(c.relevant.size()));
    if (denom > 0) total += precision_sum / denom;
  }
  return total / static_cast<double>(cases.size());
}

ReconstructionReport reconstruction_report(const SensorModel& model,
                                           const EventTensor& td,
                                           const EventTensor& tr) {
  if (td.n_viewers() != model.n_viewers() ||
      td.n_channels() != model.n_channels() ||
      td.n_slots() != model.n_slots() || !td.same_shape(tr)) {
    throw std::invalid_argument("reconstruction_report: shape mismatch");
  }
  const double cells = static_cast<double>(td.cell_count());
  return {frob_sq_diff(td, model.reconstruct_donations()) / cells,
          frob_sq_diff(tr, model.reconstruct_responses()) / cells};
}

}  // namespace mars
