#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "mars/model.hpp"
#include "mars/tensor.hpp"

namespace mars {

// Precomputed message-level inputs of a donation. Extraction models are out
// of scope; these arrive as numbers.
struct MessageFeatures {
  std::vector<double> sentence_embedding;  // width = configured emb_width
  double sentiment = 0.0;                  // in [-1, 1]
  std::array<double, 4> streamer_emotion{};

  bool operator==(const MessageFeatures&) const = default;
};

// One observed donation with everything needed to score it.
struct DonationEvent {
  int viewer = 0;
  int channel = 0;
  int slot = 0;
  double amount = 0.0;
  MessageFeatures message;
  double fanlist_min = 0.0;

  bool operator==(const DonationEvent&) const = default;
};

// Concatenated regression input for one prospective donation. Layout, in
// order: amount | message embedding | sentiment | streamer emotion (4) |
// viewer-to-channel cumulative donations | channel donations in the recent
// window | fan-list minimum | viewer (.) channel factor interaction (alpha).
struct FeatureVector {
  std::vector<double> x;

  static int width(int emb_width, int alpha) { return 9 + emb_width + alpha; }

  // Offsets of the eight groups within x.
  static int amount_offset() { return 0; }
  static int embedding_offset() { return 1; }
  static int sentiment_offset(int emb_width) { return 1 + emb_width; }
  static int emotion_offset(int emb_width) { return 2 + emb_width; }
  static int viewer_total_offset(int emb_width) { return 6 + emb_width; }
  static int window_total_offset(int emb_width) { return 7 + emb_width; }
  static int fanlist_offset(int emb_width) { return 8 + emb_width; }
  static int interaction_offset(int emb_width) { return 9 + emb_width; }
};

// Builds the feature vector for a donation of `amount` from viewer v to
// channel c at slot t. The cumulative and window sums exclude the prospective
// donation itself: any amount already recorded at exactly (v, c, t) is
// subtracted out.
FeatureVector build_features(const SensorModel& model, const EventTensor& td,
                             int v, int c, int t, double amount,
                             const MessageFeatures& message,
                             double fanlist_min, int window);

// theta . x
double estimate_response(std::span<const double> theta,
                         const FeatureVector& x);

// Scores a prospective donation against every candidate channel and returns
// (channel, estimated response) sorted by estimate descending, ties broken by
// ascending channel index. `messages` and `fanlist_mins` align with
// `candidates`; empty means all-zero defaults.
std::vector<std::pair<int, double>> recommend_donation(
    const SensorModel& model, const EventTensor& td, int v,
    const std::vector<int>& candidates, double amount,
    const std::vector<MessageFeatures>& messages, int t,
    const std::vector<double>& fanlist_mins, int window);

}  // namespace mars
