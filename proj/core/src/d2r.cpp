#include "mars/d2r.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace mars {

FeatureVector build_features(const SensorModel& model, const EventTensor& td,
                             int v, int c, int t, double amount,
                             const MessageFeatures& message,
                             double fanlist_min, int window) {
  if (!(amount > 0.0)) {
    throw std::invalid_argument("build_features: amount must be positive");
  }
  if (window < 1) {
    throw std::invalid_argument("build_features: window must be >= 1");
  }
  td.check_index(v, c, t);
  const int emb_width = model.emb_width;
  if (static_cast<int>(message.sentence_embedding.size()) != emb_width) {
    throw std::invalid_argument(
        "build_features: embedding width " +
        std::to_string(message.sentence_embedding.size()) + " != configured " +
        std::to_string(emb_width));
  }
  const int alpha = model.alpha();

  FeatureVector f;
  f.x.assign(FeatureVector::width(emb_width, alpha), 0.0);
  f.x[0] = amount;
  std::copy(message.sentence_embedding.begin(),
            message.sentence_embedding.end(),
            f.x.begin() + FeatureVector::embedding_offset());
  f.x[FeatureVector::sentiment_offset(emb_width)] = message.sentiment;
  std::copy(message.streamer_emotion.begin(), message.streamer_emotion.end(),
            f.x.begin() + FeatureVector::emotion_offset(emb_width));

  const double recorded = td.at(v, c, t);

  // Cumulative donations from v to c over [0, t], minus the scored donation.
  double viewer_total = 0.0;
  {
    auto lo = td.entries().lower_bound({v, c, 0});
    auto hi = td.entries().upper_bound({v, c, t});
    for (auto it = lo; it != hi; ++it) viewer_total += it->second;
  }
  f.x[FeatureVector::viewer_total_offset(emb_width)] = viewer_total - recorded;

  // Donations to c over the recent window from all viewers, same exclusion.
  double window_total = 0.0;
  const int t_lo = std::max(0, t - window);
  for (const auto& [idx, x] : td.entries()) {
    if (idx[1] == c && idx[2] >= t_lo && idx[2] <= t) window_total += x;
  }
  f.x[FeatureVector::window_total_offset(emb_width)] = window_total - recorded;

  f.x[FeatureVector::fanlist_offset(emb_width)] = fanlist_min;

  const auto v_row = model.factors.viewer_factors.row(v);
  const auto c_row = model.factors.channel_factors.row(c);
  double* inter = f.x.data() + FeatureVector::interaction_offset(emb_width);
  for (int a = 0; a < alpha; ++a) inter[a] = v_row[a] * c_row[a];

  return f;
}

double estimate_response(std::span<const double> theta,
                         const FeatureVector& x) {
  if (theta.size() != x.x.size()) {
    throw std::invalid_argument("estimate_response: width mismatch (theta " +
                                std::to_string(theta.size()) + ", features " +
                                std::to_string(x.x.size()) + ")");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) acc += theta[i] * x.x[i];
  return acc;
}

std::vector<std::pair<int, double>> recommend_donation(
    const SensorModel& model, const EventTensor& td, int v,
    const std::vector<int>& candidates, double amount,
    const std::vector<MessageFeatures>& messages, int t,
    const std::vector<double>& fanlist_mins, int window) {
  if (candidates.empty()) {
    throw std::invalid_argument("recommend_donation: no candidate channels");
  }
  if (!messages.empty() && messages.size() != candidates.size()) {
    throw std::invalid_argument(
        "recommend_donation: messages must align with candidates");
  }
  if (!fanlist_mins.empty() && fanlist_mins.size() != candidates.size()) {
    throw std::invalid_argument(
        "recommend_donation: fanlist_mins must align with candidates");
  }
  MessageFeatures zero_message;
  zero_message.sentence_embedding.assign(model.emb_width, 0.0);

  std::vector<std::pair<int, double>> scored;
  scored.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const MessageFeatures& msg = messages.empty() ? zero_message : messages[i];
    const double fanmin = fanlist_mins.empty() ? 0.0 : fanlist_mins[i];
    const FeatureVector x = build_features(model, td, v, candidates[i], t,
                                           amount, msg, fanmin, window);
    scored.emplace_back(candidates[i], estimate_response(model.theta, x));
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return scored;
}

}  // namespace mars
