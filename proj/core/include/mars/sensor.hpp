#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mars/d2r.hpp"
#include "mars/model.hpp"
#include "mars/tensor.hpp"

namespace mars {

// Everything the first training phase consumes. Donation events carry the
// per-donation regression inputs; each must sit on a nonzero donation cell
// with a matching amount. The regression loss ranges over the recorded
// events, so a bundle without features for some donations simply skips them.
struct TrainingData {
  EventTensor donations;   // T_D
  EventTensor responses;   // T_R
  std::vector<DonationEvent> events;
  ViewerGraph graph;
  SignedStreamerMatrix relations;  // W_C

  void validate() const;
};

// Loss value split by term. `ser`, `star` and `riot` are the raw regularizer
// values; `total` already applies the configured weights.
struct LossBreakdown {
  double reconstruction_donation = 0.0;
  double reconstruction_response = 0.0;
  double d2r = 0.0;
  double ser = 0.0;
  double star = 0.0;
  double riot = 0.0;
  double total = 0.0;
};

struct SensorGradients {
  Matrix viewer_factors;
  Matrix channel_factors;
  Matrix time_factors;
  Tensor3 donation_core;
  Tensor3 response_core;
  Matrix social_influence;
  double decay = 0.0;
  std::vector<double> theta;
};

struct SensorTrainResult {
  SensorModel model;
  // Loss evaluated before each step; trace[0] is the loss at initialization.
  std::vector<double> loss_trace;
  double final_loss = 0.0;
};

// --- individual loss terms ---------------------------------------------

// Frobenius reconstruction error of both tensors against the current model,
// over every cell.
double loss_reconstruction(const SensorModel& model, const EventTensor& td,
                           const EventTensor& tr);

// Streamer relation term: sum over all (i, j) of
// (W_C(i, j) - c_i . c_j)^2, the Gram matrix of channel factor rows fit to
// the signed relation matrix.
double loss_ser(const Matrix& channel_factors,
                const SignedStreamerMatrix& relations);

// Influence-weighted, exponentially decayed sum of donations by other viewers
// to channel c over the `window` slots before t.
double star_estimate(const SensorModel& model, const EventTensor& td, int v,
                     int c, int t, int window);

// Sum over all cells of (reconstructed donation - star_estimate)^2.
double loss_star(const SensorModel& model, const EventTensor& td, int window);

// Entropy of the donation distribution of channel c over viewers and the
// slots [max(0, t - window), t]. Zero when the window is empty.
double donation_entropy(const EventTensor& td, int c, int t, int window);

// Current slot total minus the window average total: positive while donations
// to c are ramping up.
double burst_trend(const EventTensor& td, int c, int t, int window);

// Burst suppression term. The trend and entropy weights are treated as
// constants during differentiation.
double loss_riot(const SensorModel& model, const EventTensor& td, int window);

// Regression loss of estimated responses against theta . x over every
// donation event.
double loss_d2r(const SensorModel& model, const EventTensor& td,
                std::span<const DonationEvent> events, int window);

// --- assembled objective ------------------------------------------------

LossBreakdown loss_components(const SensorModel& model,
                              const TrainingData& data,
                              const SensorConfig& config);

double total_loss(const SensorModel& model, const TrainingData& data,
                  const SensorConfig& config);

// Analytic gradient of total_loss with respect to every learnable, plus the
// loss evaluated at `model`. Honors the stop-gradient convention of the burst
// suppression term.
std::pair<SensorGradients, LossBreakdown> gradients(const SensorModel& model,
                                                    const TrainingData& data,
                                                    const SensorConfig& config);

// Seeds factors uniformly in [-init_scale, init_scale] and the social
// influence matrix at 1 on graph edges and epsilon elsewhere (off-diagonal).
SensorModel init_sensor_model(const TrainingData& data,
                              const SensorConfig& config);

// Deterministic full-batch gradient descent on total_loss. Throws
// TrainingDivergence (with the partial trace) if the loss becomes
// non-finite.
SensorTrainResult train_sensor(const TrainingData& data,
                               const SensorConfig& config);

// --- parameter counting --------------------------------------------------

enum class ParamVariant {
  shared,    // one factor set, two cores
  separate,  // independent factorization per tensor
  four_dim,  // single 4-way tensor with an action mode of size 2
};

long long param_count(int n_viewers, int n_channels, int n_slots, int alpha,
                      ParamVariant variant);

}  // namespace mars
