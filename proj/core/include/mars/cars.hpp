#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "mars/model.hpp"
#include "mars/tensor.hpp"

namespace mars {

// A multi-stream party: a viewer group with its induced friendship edges and
// one set of exactly k distinct channels per group member.
class Msp {
 public:
  Msp() = default;
  Msp(std::vector<int> group, std::vector<std::pair<int, int>> edges,
      std::map<int, std::vector<int>> assignments);

  const std::vector<int>& group() const { return group_; }  // sorted
  const std::set<std::pair<int, int>>& edges() const { return edges_; }
  const std::map<int, std::vector<int>>& assignments() const {
    return assignments_;
  }
  const std::vector<int>& channels_of(int viewer) const;

  bool has_viewer(int v) const;
  bool watches(int v, int c) const;
  bool are_friends(int u, int v) const;
  int k() const { return k_; }

  bool operator==(const Msp&) const = default;

 private:
  std::vector<int> group_;
  std::set<std::pair<int, int>> edges_;
  std::map<int, std::vector<int>> assignments_;  // channel lists sorted
  int k_ = 0;
};

// Ranking-model parameters: the influence gate (h, bias) shared across
// viewers plus per-viewer blend weights for the social and streamer-relation
// aspects.
struct CarsParams {
  std::vector<double> h;  // width 2 alpha + 1
  double bias = 0.0;
  std::vector<double> tau_social;    // per viewer
  std::vector<double> tau_relation;  // per viewer
  double lambda4 = 0.1;

  bool operator==(const CarsParams&) const = default;
};

struct CarsConfig {
  double learning_rate = 0.05;
  int epochs = 200;
  std::uint64_t seed = 1;
  double init_scale = 0.1;
  double tau_init = 0.5;
  double lambda4 = 0.1;
  // When > 0, each epoch optimizes a seeded sample of this many pairs instead
  // of the full pair set.
  int pair_sample = 0;
};

struct CarsGradients {
  std::vector<double> h;
  double bias = 0.0;
  std::vector<double> tau_social;
  std::vector<double> tau_relation;
};

struct CarsTrainResult {
  CarsParams params;
  std::vector<double> loss_trace;  // loss before each step
  double final_loss = 0.0;
};

// Numerically stable logistic function. Built so that
// sigmoid(x) + sigmoid(-x) == 1 holds exactly.
double sigmoid(double x);
// -ln(sigmoid(x)) without overflow for large |x|.
double neg_log_sigmoid(double x);

// Personal influence o(v, c) = h . sigmoid(v ++ c ++ bias), the sigmoid
// applied element-wise to the concatenated vector.
double base_influence(const CarsParams& params, std::span<const double> v_emb,
                      std::span<const double> c_emb);

// Channel influence within a party: the personal part plus the
// influence-weighted part of friends watching the same channel plus the
// absolute streamer-relation strength to the viewer's co-channels.
double channel_influence(const CarsParams& params, const SensorModel& model,
                         int v, int c, const Msp& p);

// Party satisfaction r_{v,p} = v . sum over assigned channels of
// channel_influence * channel embedding.
double msp_satisfaction(const CarsParams& params, const SensorModel& model,
                        int v, const Msp& p);

// Preference pair: `viewer` has donated strictly more to their channels in
// msps[preferred] than in msps[other].
struct BprPair {
  int viewer = 0;
  int preferred = 0;
  int other = 0;

  bool operator==(const BprPair&) const = default;
};

// All (v, p, p') with a strictly larger donation total to p than to p' and v
// in both groups. Ties produce no pair.
std::vector<BprPair> build_bpr_pairs(const EventTensor& td,
                                     const std::vector<Msp>& msps);

// Pairwise ranking loss: sum of -ln sigmoid(r_{v,p} - r_{v,p'}) plus
// lambda4/2 * ||Theta||^2 over h, bias and all taus.
double cars_loss(const CarsParams& params, const SensorModel& model,
                 const std::vector<Msp>& msps,
                 const std::vector<BprPair>& pairs);

// Analytic gradient of cars_loss with respect to the ranking parameters.
// Embeddings and the social influence matrix stay frozen.
CarsGradients cars_gradients(const CarsParams& params, const SensorModel& model,
                             const std::vector<Msp>& msps,
                             const std::vector<BprPair>& pairs);

// Deterministic gradient descent over the ranking parameters only.
CarsTrainResult train_cars(const SensorModel& model,
                           const std::vector<Msp>& msps,
                           const std::vector<BprPair>& pairs,
                           const CarsConfig& config);

// Candidates ordered by satisfaction for viewer v, descending; ties keep the
// input order. Returns (candidate index, satisfaction).
std::vector<std::pair<std::size_t, double>> rank_msps(
    const CarsParams& params, const SensorModel& model, int v,
    const std::vector<Msp>& candidates);

// Least-misery pick: the candidate whose minimum member satisfaction is
// largest. All candidates must share one viewer group; ties keep the first.
std::size_t recommend_group_msp(const CarsParams& params,
                                const SensorModel& model,
                                const std::vector<Msp>& candidates);

}  // namespace mars
