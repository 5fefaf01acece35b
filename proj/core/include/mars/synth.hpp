#pragma once

#include <cstdint>
#include <vector>

#include "mars/cars.hpp"
#include "mars/d2r.hpp"
#include "mars/model.hpp"
#include "mars/tensor.hpp"

namespace mars {

// Generator knobs. All randomness is fixed by `seed`.
struct SynthConfig {
  int n_viewers = 100;
  int n_channels = 10;
  int n_slots = 200;
  int k = 3;  // channels per viewer in a party

  double edge_prob = 0.05;          // viewer friendship density
  double neg_relation_prob = 0.3;   // share of -1 among streamer relations

  double planted_decay = 0.5;       // d* of the donation ripple
  double planted_influence = 0.02;  // scale of the planted influence weights

  double base_donation_rate = 0.0003;  // donation probability floor per cell
  double burst_rate = 0.004;          // probability of a burst per (c, t)
  double burst_magnitude = 40.0;      // donation-rate multiplier in a burst

  double response_base = 2.0;         // response quality scale
  double suppression_strength = 0.4;  // response decay per crowded window

  std::uint64_t seed = 42;

  void validate() const;
};

// Ground truth the generator planted, returned for recovery experiments.
struct PlantedTruth {
  Matrix social_influence;  // |V| x |V|, zero off the planted edges
  double decay = 0.0;
  Matrix affinity;                    // |V| x |C| donation propensity
  std::vector<std::uint8_t> bursts;   // |C| x T mask, row-major

  bool operator==(const PlantedTruth&) const = default;
};

// One ranking evaluation case: a viewer, a candidate party list sharing one
// group, and the index of the candidate with the highest planted affinity.
struct EvalCase {
  int viewer = 0;
  std::vector<Msp> candidates;
  int relevant = 0;

  bool operator==(const EvalCase&) const = default;
};

struct SynthData {
  ViewerGraph graph;
  SignedStreamerMatrix relations;
  EventTensor donations;
  EventTensor responses;
  std::vector<DonationEvent> events;  // one per nonzero donation cell
  std::vector<Msp> msps;              // training parties
  std::vector<EvalCase> eval_cases;
  PlantedTruth planted;
};

// Generates a dataset whose donations follow a self-exciting rule driven by
// the planted influence weights, with occasional channel-wide bursts, and
// whose response quality decays with the crowding of the channel's recent
// window. Identical config + seed give bit-identical outputs.
SynthData generate(const SynthConfig& config);

// Response prediction split: donation events are kept in full (the donation
// happened either way) while the response values of a seeded sample of events
// are withheld into a separate tensor.
struct ResponseHoldout {
  std::vector<DonationEvent> train_events;
  std::vector<DonationEvent> test_events;
  EventTensor train_responses;
  EventTensor test_responses;
};

ResponseHoldout holdout_responses(const SynthData& data, double test_fraction,
                                  std::uint64_t seed);

// Fraction of donation events preceded by another donation to the same
// channel within `window` slots.
double follow_within_window_fraction(const EventTensor& td, int window);

}  // namespace mars
