#include "mars/cars.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace mars {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void check_param_widths(const CarsParams& params, const SensorModel& model) {
  const std::size_t want = 2 * static_cast<std::size_t>(model.alpha()) + 1;
  if (params.h.size() != want) {
    throw std::invalid_argument("cars: h has width " +
                                std::to_string(params.h.size()) +
                                ", expected " + std::to_string(want));
  }
  const std::size_t nv = static_cast<std::size_t>(model.n_viewers());
  if (params.tau_social.size() != nv || params.tau_relation.size() != nv) {
    throw std::invalid_argument("cars: tau vectors must have one entry per viewer");
  }
}

void check_channels(const SensorModel& model, const Msp& p) {
  for (const auto& [v, channels] : p.assignments()) {
    if (v < 0 || v >= model.n_viewers()) {
      throw std::out_of_range("cars: party viewer index out of range");
    }
    for (int c : channels) {
      if (c < 0 || c >= model.n_channels()) {
        throw std::out_of_range("cars: party channel index out of range");
      }
    }
  }
}

// Satisfaction r_{v,p} plus the partial derivatives needed for ranking-loss
// gradients, computed in one pass over the viewer's assigned channels.
struct SatParts {
  double r = 0.0;
  std::vector<double> dh;
  double dbias = 0.0;
  double dtau_social = 0.0;
  double dtau_relation = 0.0;
};

SatParts satisfaction_parts(const CarsParams& params, const SensorModel& model,
                            int v, const Msp& p, bool with_grad) {
  if (!p.has_viewer(v)) {
    throw std::invalid_argument("cars: viewer " + std::to_string(v) +
                                " is not in the party group");
  }
  check_channels(model, p);
  const int alpha = model.alpha();
  const auto v_emb = model.factors.viewer_factors.row(v);
  const double sig_bias = sigmoid(params.bias);
  const double dsig_bias = sig_bias * (1.0 - sig_bias);
  const double h_bias = params.h.back();

  SatParts out;
  if (with_grad) out.dh.assign(params.h.size(), 0.0);
  std::vector<double> weighted_channels(alpha, 0.0);

  auto gated_influence = [&](std::span<const double> x_emb,
                             std::span<const double> c_emb) {
    double acc = 0.0;
    for (int i = 0; i < alpha; ++i) acc += params.h[i] * sigmoid(x_emb[i]);
    for (int i = 0; i < alpha; ++i) {
      acc += params.h[alpha + i] * sigmoid(c_emb[i]);
    }
    return acc + h_bias * sig_bias;
  };

  for (int c : p.channels_of(v)) {
    const auto c_emb = model.factors.channel_factors.row(c);
    const double w = dot(v_emb, c_emb);

    const double o_vc = gated_influence(v_emb, c_emb);

    double social = 0.0;
    double influence_sum = 0.0;  // sum of W(u, v) over contributing friends
    std::vector<double> social_dh;
    if (with_grad) social_dh.assign(params.h.size(), 0.0);
    for (int u : p.group()) {
      if (u == v || !p.are_friends(u, v) || !p.watches(u, c)) continue;
      const auto u_emb = model.factors.viewer_factors.row(u);
      const double influence = model.social_influence(u, v);
      social += influence * gated_influence(u_emb, c_emb);
      influence_sum += influence;
      if (with_grad) {
        for (int i = 0; i < alpha; ++i) {
          social_dh[i] += influence * sigmoid(u_emb[i]);
          social_dh[alpha + i] += influence * sigmoid(c_emb[i]);
        }
      }
    }

    double relation = 0.0;
    for (int other : p.channels_of(v)) {
      if (other == c) continue;
      relation += std::abs(
          dot(c_emb, model.factors.channel_factors.row(other)));
    }

    const double a = o_vc + params.tau_social[v] * social +
                     params.tau_relation[v] * relation;
    for (int i = 0; i < alpha; ++i) weighted_channels[i] += a * c_emb[i];

    if (with_grad) {
      // d a / d h through o(v, c) and the friends' o(u, c).
      for (int i = 0; i < alpha; ++i) {
        out.dh[i] += w * (sigmoid(v_emb[i]) +
                          params.tau_social[v] * social_dh[i]);
        out.dh[alpha + i] +=
            w * (sigmoid(c_emb[i]) +
                 params.tau_social[v] * social_dh[alpha + i]);
      }
      out.dh[2 * alpha] +=
          w * sig_bias * (1.0 + params.tau_social[v] * influence_sum);
      out.dbias += w * h_bias * dsig_bias *
                   (1.0 + params.tau_social[v] * influence_sum);
      out.dtau_social += w * social;
      out.dtau_relation += w * relation;
    }
  }

  out.r = dot(v_emb, weighted_channels);
  return out;
}

}  // namespace

Msp::Msp(std::vector<int> group, std::vector<std::pair<int, int>> edges,
         std::map<int, std::vector<int>> assignments)
    : group_(std::move(group)), assignments_(std::move(assignments)) {
  std::sort(group_.begin(), group_.end());
  if (std::adjacent_find(group_.begin(), group_.end()) != group_.end()) {
    throw std::invalid_argument("Msp: duplicate viewer in group");
  }
  if (group_.empty()) throw std::invalid_argument("Msp: empty group");
  for (auto [u, v] : edges) {
    if (u == v) throw std::invalid_argument("Msp: self-loop edge");
    if (!has_viewer(u) || !has_viewer(v)) {
      throw std::invalid_argument("Msp: edge endpoint outside the group");
    }
    edges_.insert({std::min(u, v), std::max(u, v)});
  }
  if (assignments_.size() != group_.size()) {
    throw std::invalid_argument(
        "Msp: every group member needs a channel assignment");
  }
  for (auto& [v, channels] : assignments_) {
    if (!has_viewer(v)) {
      throw std::invalid_argument("Msp: assignment for a viewer outside the group");
    }
    std::sort(channels.begin(), channels.end());
    if (std::adjacent_find(channels.begin(), channels.end()) !=
        channels.end()) {
      throw std::invalid_argument("Msp: duplicate channel in an assignment");
    }
    if (channels.empty()) {
      throw std::invalid_argument("Msp: empty channel assignment");
    }
    if (k_ == 0) {
      k_ = static_cast<int>(channels.size());
    } else if (static_cast<int>(channels.size()) != k_) {
      throw std::invalid_argument(
          "Msp: assignments must all have the same size k");
    }
  }
}

const std::vector<int>& Msp::channels_of(int viewer) const {
  auto it = assignments_.find(viewer);
  if (it == assignments_.end()) {
    throw std::invalid_argument("Msp: viewer " + std::to_string(viewer) +
                                " is not in the party");
  }
  return it->second;
}

bool Msp::has_viewer(int v) const {
  return std::binary_search(group_.begin(), group_.end(), v);
}

bool Msp::watches(int v, int c) const {
  auto it = assignments_.find(v);
  if (it == assignments_.end()) return false;
  return std::binary_search(it->second.begin(), it->second.end(), c);
}

bool Msp::are_friends(int u, int v) const {
  if (u == v) return false;
  return edges_.contains({std::min(u, v), std::max(u, v)});
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  // 1 - sigmoid(-x); exact complement of the branch above, so
  // sigmoid(x) + sigmoid(-x) == 1 holds bit for bit.
  return 1.0 - 1.0 / (1.0 + std::exp(x));
}

double neg_log_sigmoid(double x) {
  if (x >= 0.0) return std::log1p(std::exp(-x));
  return -x + std::log1p(std::exp(x));
}

double base_influence(const CarsParams& params, std::span<const double> v_emb,
                      std::span<const double> c_emb) {
  if (v_emb.size() != c_emb.size()) {
    throw std::invalid_argument("base_influence: embedding widths differ");
  }
  if (params.h.size() != 2 * v_emb.size() + 1) {
    throw std::invalid_argument("base_influence: h width must be 2 alpha + 1");
  }
  double acc = 0.0;
  std::size_t i = 0;
  for (double x : v_emb) acc += params.h[i++] * sigmoid(x);
  for (double x : c_emb) acc += params.h[i++] * sigmoid(x);
  acc += params.h[i] * sigmoid(params.bias);
  return acc;
}

double channel_influence(const CarsParams& params, const SensorModel& model,
                         int v, int c, const Msp& p) {
  check_param_widths(params, model);
  check_channels(model, p);
  if (!p.has_viewer(v)) {
    throw std::invalid_argument("channel_influence: viewer not in the group");
  }
  if (!p.watches(v, c)) {
    throw std::invalid_argument(
        "channel_influence: channel is not assigned to the viewer");
  }
  const auto v_emb = model.factors.viewer_factors.row(v);
  const auto c_emb = model.factors.channel_factors.row(c);
  double a = base_influence(params, v_emb, c_emb);

  double social = 0.0;
  for (int u : p.group()) {
    if (u == v || !p.are_friends(u, v) || !p.watches(u, c)) continue;
    social += model.social_influence(u, v) *
              base_influence(params, model.factors.viewer_factors.row(u),
                             c_emb);
  }
  a += params.tau_social[v] * social;

  double relation = 0.0;
  for (int other : p.channels_of(v)) {
    if (other == c) continue;
    relation += std::abs(dot(c_emb, model.factors.channel_factors.row(other)));
  }
  return a + params.tau_relation[v] * relation;
}

double msp_satisfaction(const CarsParams& params, const SensorModel& model,
                        int v, const Msp& p) {
  check_param_widths(params, model);
  return satisfaction_parts(params, model, v, p, false).r;
}

std::vector<BprPair> build_bpr_pairs(const EventTensor& td,
                                     const std::vector<Msp>& msps) {
  for (const Msp& p : msps) {
    for (const auto& [v, channels] : p.assignments()) {
      if (v < 0 || v >= td.n_viewers()) {
        throw std::out_of_range("build_bpr_pairs: viewer index out of range");
      }
      for (int c : channels) {
        if (c < 0 || c >= td.n_channels()) {
          throw std::out_of_range("build_bpr_pairs: channel index out of range");
        }
      }
    }
  }
  auto viewer_channel_total = [&](int v, int c) {
    double acc = 0.0;
    auto it = td.entries().lower_bound({v, c, 0});
    auto end = td.entries().upper_bound({v, c, td.n_slots() - 1});
    for (; it != end; ++it) acc += it->second;
    return acc;
  };
  // Donation total of viewer v to their own channel set within each party.
  std::vector<std::map<int, double>> totals(msps.size());
  for (std::size_t i = 0; i < msps.size(); ++i) {
    for (const auto& [v, channels] : msps[i].assignments()) {
      double acc = 0.0;
      for (int c : channels) acc += viewer_channel_total(v, c);
      totals[i][v] = acc;
    }
  }
  std::vector<BprPair> pairs;
  for (int v = 0; v < td.n_viewers(); ++v) {
    for (std::size_t i = 0; i < msps.size(); ++i) {
      auto it_i = totals[i].find(v);
      if (it_i == totals[i].end()) continue;
      for (std::size_t j = 0; j < msps.size(); ++j) {
        if (i == j) continue;
        auto it_j = totals[j].find(v);
        if (it_j == totals[j].end()) continue;
        if (it_i->second > it_j->second) {
          pairs.push_back({v, static_cast<int>(i), static_cast<int>(j)});
        }
      }
    }
  }
  return pairs;
}

double cars_loss(const CarsParams& params, const SensorModel& model,
                 const std::vector<Msp>& msps,
                 const std::vector<BprPair>& pairs) {
  check_param_widths(params, model);
  double acc = 0.0;
  for (const BprPair& pair : pairs) {
    const double r_p =
        satisfaction_parts(params, model, pair.viewer, msps[pair.preferred],
                           false)
            .r;
    const double r_q =
        satisfaction_parts(params, model, pair.viewer, msps[pair.other], false)
            .r;
    acc += neg_log_sigmoid(r_p - r_q);
  }
  double norm_sq = params.bias * params.bias;
  for (double x : params.h) norm_sq += x * x;
  for (double x : params.tau_social) norm_sq += x * x;
  for (double x : params.tau_relation) norm_sq += x * x;
  return acc + 0.5 * params.lambda4 * norm_sq;
}

CarsGradients cars_gradients(const CarsParams& params, const SensorModel& model,
                             const std::vector<Msp>& msps,
                             const std::vector<BprPair>& pairs) {
  check_param_widths(params, model);
  CarsGradients g;
  g.h.assign(params.h.size(), 0.0);
  g.tau_social.assign(params.tau_social.size(), 0.0);
  g.tau_relation.assign(params.tau_relation.size(), 0.0);

  for (const BprPair& pair : pairs) {
    const SatParts p = satisfaction_parts(params, model, pair.viewer,
                                          msps[pair.preferred], true);
    const SatParts q =
        satisfaction_parts(params, model, pair.viewer, msps[pair.other], true);
    // d/dx of -ln sigmoid(x) is -sigmoid(-x).
    const double coef = -sigmoid(-(p.r - q.r));
    for (std::size_t i = 0; i < g.h.size(); ++i) {
      g.h[i] += coef * (p.dh[i] - q.dh[i]);
    }
    g.bias += coef * (p.dbias - q.dbias);
    g.tau_social[pair.viewer] += coef * (p.dtau_social - q.dtau_social);
    g.tau_relation[pair.viewer] += coef * (p.dtau_relation - q.dtau_relation);
  }

  for (std::size_t i = 0; i < g.h.size(); ++i) {
    g.h[i] += params.lambda4 * params.h[i];
  }
  g.bias += params.lambda4 * params.bias;
  for (std::size_t i = 0; i < g.tau_social.size(); ++i) {
    g.tau_social[i] += params.lambda4 * params.tau_social[i];
    g.tau_relation[i] += params.lambda4 * params.tau_relation[i];
  }
  return g;
}

CarsTrainResult train_cars(const SensorModel& model,
                           const std::vector<Msp>& msps,
                           const std::vector<BprPair>& pairs,
                           const CarsConfig& config) {
  if (pairs.empty()) {
    throw std::invalid_argument("train_cars: the preference pair set is empty");
  }
  if (config.epochs < 1) {
    throw std::invalid_argument("train_cars: epochs must be >= 1");
  }
  if (!(config.learning_rate > 0)) {
    throw std::invalid_argument("train_cars: learning rate must be positive");
  }
  for (const BprPair& pair : pairs) {
    if (pair.preferred < 0 || pair.other < 0 ||
        pair.preferred >= static_cast<int>(msps.size()) ||
        pair.other >= static_cast<int>(msps.size())) {
      throw std::out_of_range("train_cars: pair references a missing party");
    }
  }

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> uniform(-config.init_scale,
                                                 config.init_scale);
  CarsParams params;
  params.h.resize(2 * static_cast<std::size_t>(model.alpha()) + 1);
  for (double& x : params.h) x = uniform(rng);
  params.bias = uniform(rng);
  params.tau_social.assign(model.n_viewers(), config.tau_init);
  params.tau_relation.assign(model.n_viewers(), config.tau_init);
  params.lambda4 = config.lambda4;

  std::vector<double> trace;
  trace.reserve(config.epochs);
  std::vector<BprPair> batch;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const std::vector<BprPair>* active = &pairs;
    if (config.pair_sample > 0 &&
        config.pair_sample < static_cast<int>(pairs.size())) {
      batch.clear();
      std::sample(pairs.begin(), pairs.end(), std::back_inserter(batch),
                  config.pair_sample, rng);
      active = &batch;
    }
    const double loss = cars_loss(params, model, msps, *active);
    if (!std::isfinite(loss)) {
      throw TrainingDivergence(
          "train_cars: loss became non-finite at epoch " +
              std::to_string(epoch),
          trace);
    }
    trace.push_back(loss);
    const CarsGradients g = cars_gradients(params, model, msps, *active);
    for (std::size_t i = 0; i < params.h.size(); ++i) {
      params.h[i] -= config.learning_rate * g.h[i];
    }
    params.bias -= config.learning_rate * g.bias;
    for (std::size_t i = 0; i < params.tau_social.size(); ++i) {
      params.tau_social[i] -= config.learning_rate * g.tau_social[i];
      params.tau_relation[i] -= config.learning_rate * g.tau_relation[i];
    }
  }

  const double final_loss = cars_loss(params, model, msps, pairs);
  if (!std::isfinite(final_loss)) {
    throw TrainingDivergence("train_cars: final loss is non-finite", trace);
  }
  return {std::move(params), std::move(trace), final_loss};
}

std::vector<std::pair<std::size_t, double>> rank_msps(
    const CarsParams& params, const SensorModel& model, int v,
    const std::vector<Msp>& candidates) {
  if (candidates.empty()) {
    throw std::invalid_argument("rank_msps: no candidates");
  }
  std::vector<std::pair<std::size_t, double>> ranked;
  ranked.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    ranked.emplace_back(i, msp_satisfaction(params, model, v, candidates[i]));
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) {
                     return a.second > b.second;
                   });
  return ranked;
}

std::size_t recommend_group_msp(const CarsParams& params,
                                const SensorModel& model,
                                const std::vector<Msp>& candidates) {
  if (candidates.empty()) {
    throw std::invalid_argument("recommend_group_msp: no candidates");
  }
  for (const Msp& p : candidates) {
    if (p.group() != candidates.front().group()) {
      throw std::invalid_argument(
          "recommend_group_msp: candidates must share one group");
    }
  }
  std::size_t best = 0;
  double best_min = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    double worst = 0.0;
    bool first = true;
    for (int v : candidates[i].group()) {
      const double r = msp_satisfaction(params, model, v, candidates[i]);
      if (first || r < worst) worst = r;
      first = false;
    }
    if (i == 0 || worst > best_min) {
      best = i;
      best_min = worst;
    }
  }
  return best;
}

}  // namespace mars
