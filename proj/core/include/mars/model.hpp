#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mars/tensor.hpp"

namespace mars {

// Undirected social network of viewers. No self-loops; pairs are stored
// normalized as (min, max).
class ViewerGraph {
 public:
  ViewerGraph() = default;
  explicit ViewerGraph(int n_viewers);

  void add_edge(int u, int v);
  bool has_edge(int u, int v) const;

  int n_viewers() const { return n_viewers_; }
  const std::set<std::pair<int, int>>& edges() const { return edges_; }

  bool operator==(const ViewerGraph&) const = default;

 private:
  int n_viewers_ = 0;
  std::set<std::pair<int, int>> edges_;
};

// Signed streamer relation matrix with entries in {-1, 0, +1}. The diagonal
// is fixed at 0.
class SignedStreamerMatrix {
 public:
  SignedStreamerMatrix() = default;
  explicit SignedStreamerMatrix(int n_channels);

  void set(int i, int j, int sign);
  int at(int i, int j) const;
  int n_channels() const { return n_channels_; }

  bool operator==(const SignedStreamerMatrix&) const = default;

 private:
  void check_index(int i, int j) const;

  int n_channels_ = 0;
  std::vector<int> values_;
};

// Shared latent factors of the coupled factorization: one factor matrix per
// mode plus a separate core tensor for donations and for responses.
struct FactorSet {
  int alpha = 0;
  Matrix viewer_factors;   // |V| x alpha
  Matrix channel_factors;  // |C| x alpha
  Matrix time_factors;     // T x alpha
  Tensor3 donation_core;   // alpha^3
  Tensor3 response_core;   // alpha^3

  bool operator==(const FactorSet&) const = default;
};

// Full learnable state of the first training phase.
struct SensorModel {
  FactorSet factors;
  // Learnable viewer-to-viewer influence, |V| x |V|. Directed: entry (u, v)
  // is the influence of u on v. The diagonal is never read.
  Matrix social_influence;
  double decay = 0.1;              // temporal decay of influence, kept >= 0
  std::vector<double> theta;       // response regression weights
  double epsilon_init = 0.02;      // off-edge initial influence
  int emb_width = 16;              // message embedding width theta assumes

  int n_viewers() const { return factors.viewer_factors.rows(); }
  int n_channels() const { return factors.channel_factors.rows(); }
  int n_slots() const { return factors.time_factors.rows(); }
  int alpha() const { return factors.alpha; }

  Tensor3 reconstruct_donations() const {
    return tucker_reconstruct(factors.donation_core, factors.viewer_factors,
                              factors.channel_factors, factors.time_factors);
  }
  Tensor3 reconstruct_responses() const {
    return tucker_reconstruct(factors.response_core, factors.viewer_factors,
                              factors.channel_factors, factors.time_factors);
  }

  void validate() const;

  bool operator==(const SensorModel&) const = default;
};

struct SensorConfig {
  int alpha = 32;
  int window = 5;              // L, in slots
  double lambda_ser = 0.5;     // weight of the streamer relation term
  double lambda_star = 0.1;    // weight of the socio-temporal term
  double lambda_riot = 0.5;    // weight of the burst suppression term
  double learning_rate = 1e-3;
  int epochs = 100;
  std::uint64_t seed = 1;
  double init_scale = 0.1;
  double decay_init = 0.1;
  double epsilon_init = 0.02;
  int emb_width = 16;
  double momentum = 0.0;           // optional; 0 = plain gradient descent
  double influence_lr_scale = 1.0; // step multiplier for social influence
  // When set, the reconstruction part of the training loss uses observed
  // cells plus a seeded sample of zero cells (reweighted to stay unbiased)
  // instead of every cell.
  bool sampled_zeros = false;
  int zero_sample_per_nnz = 4;

  void validate() const;
};

// Thrown when a training loop produces a non-finite loss. Carries the loss
// trace up to the failing step.
class TrainingDivergence : public std::runtime_error {
 public:
  TrainingDivergence(const std::string& what, std::vector<double> trace)
      : std::runtime_error(what), loss_trace(std::move(trace)) {}

  std::vector<double> loss_trace;
};

}  // namespace mars
