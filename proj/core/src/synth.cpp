#include "mars/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace mars {
namespace {

constexpr int kGenWindow = 5;        // ripple / crowding horizon in slots
constexpr double kRelationProb = 0.5;  // chance two streamers are related
constexpr int kAffinityRank = 4;
constexpr int kGroupSize = 5;
constexpr int kPartiesPerGroup = 6;
constexpr int kEvalCandidates = 20;
constexpr int kEvalCases = 20;
constexpr double kMaxDonationProb = 0.9;

double round_cents(double x) {
  return std::max(0.01, std::round(x * 100.0) / 100.0);
}

}  // namespace

void SynthConfig::validate() const {
  auto expect = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("SynthConfig: ") + what);
  };
  expect(n_viewers >= 1, "n_viewers must be >= 1");
  expect(n_channels >= 1, "n_channels must be >= 1");
  expect(n_slots >= 1, "n_slots must be >= 1");
  expect(k >= 1, "k must be >= 1");
  expect(k <= n_channels, "k cannot exceed n_channels");
  expect(edge_prob >= 0 && edge_prob <= 1, "edge_prob must be in [0, 1]");
  expect(neg_relation_prob >= 0 && neg_relation_prob <= 1,
         "neg_relation_prob must be in [0, 1]");
  expect(burst_rate >= 0 && burst_rate <= 1, "burst_rate must be in [0, 1]");
  expect(planted_decay >= 0, "planted_decay must be >= 0");
  expect(planted_influence >= 0, "planted_influence must be >= 0");
  expect(base_donation_rate >= 0, "base_donation_rate must be >= 0");
  expect(burst_magnitude >= 0, "burst_magnitude must be >= 0");
  expect(response_base >= 0, "response_base must be >= 0");
  expect(suppression_strength >= 0, "suppression_strength must be >= 0");
}

SynthData generate(const SynthConfig& config) {
  config.validate();
  const int nv = config.n_viewers;
  const int nc = config.n_channels;
  const int nt = config.n_slots;

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> u_sym(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  SynthData data;

  data.graph = ViewerGraph(nv);
  for (int u = 0; u < nv; ++u) {
    for (int v = u + 1; v < nv; ++v) {
      if (u01(rng) < config.edge_prob) data.graph.add_edge(u, v);
    }
  }

  data.relations = SignedStreamerMatrix(nc);
  for (int i = 0; i < nc; ++i) {
    for (int j = i + 1; j < nc; ++j) {
      if (u01(rng) < kRelationProb) {
        const int sign = u01(rng) < config.neg_relation_prob ? -1 : 1;
        data.relations.set(i, j, sign);
        data.relations.set(j, i, sign);
      }
    }
  }

  // Planted viewer-channel affinity from low-rank gaussian factors,
  // normalized to mean 1 so base_donation_rate keeps its meaning.
  Matrix affinity(nv, nc);
  {
    Matrix vf(nv, kAffinityRank), cf(nc, kAffinityRank);
    for (double& x : vf.data()) x = normal(rng);
    for (double& x : cf.data()) x = normal(rng);
    double total = 0.0;
    for (int v = 0; v < nv; ++v) {
      for (int c = 0; c < nc; ++c) {
        double z = 0.0;
        for (int a = 0; a < kAffinityRank; ++a) z += vf(v, a) * cf(c, a);
        affinity(v, c) = std::exp(0.8 * z / std::sqrt(kAffinityRank));
        total += affinity(v, c);
      }
    }
    const double mean = total / (static_cast<double>(nv) * nc);
    for (double& x : affinity.data()) x /= mean;
  }

  // Planted influence: graded weights on the friendship edges, both
  // directions drawn independently. Zero elsewhere.
  Matrix planted_w(nv, nv);
  for (const auto& [u, v] : data.graph.edges()) {
    planted_w(u, v) = config.planted_influence * (0.5 + u01(rng));
    planted_w(v, u) = config.planted_influence * (0.5 + u01(rng));
  }

  std::vector<std::uint8_t> bursts(static_cast<std::size_t>(nc) * nt, 0);
  for (std::size_t i = 0; i < bursts.size(); ++i) {
    bursts[i] = u01(rng) < config.burst_rate ? 1 : 0;
  }

  // Donation simulation, slot by slot. The probability of a donation grows
  // with the decayed, influence-weighted amount donated to the channel in the
  // recent slots.
  data.donations = EventTensor(nv, nc, nt);
  std::vector<std::vector<std::vector<std::pair<int, double>>>> by_slot(
      nc, std::vector<std::vector<std::pair<int, double>>>(nt));
  std::vector<double> ripple(nv);
  for (int t = 0; t < nt; ++t) {
    for (int c = 0; c < nc; ++c) {
      std::fill(ripple.begin(), ripple.end(), 0.0);
      for (int dt = 1; dt <= kGenWindow && dt <= t; ++dt) {
        const double w = std::exp(-config.planted_decay * dt);
        for (const auto& [u, x] : by_slot[c][t - dt]) {
          for (int v = 0; v < nv; ++v) {
            ripple[v] += w * x * planted_w(u, v);
          }
        }
      }
      const double boost =
          bursts[static_cast<std::size_t>(c) * nt + t]
              ? config.burst_magnitude * config.base_donation_rate
              : 0.0;
      for (int v = 0; v < nv; ++v) {
        const double p = std::min(
            kMaxDonationProb,
            config.base_donation_rate * affinity(v, c) + ripple[v] + boost);
        if (u01(rng) < p) {
          const double amount = round_cents(std::exp(0.5 * normal(rng)));
          data.donations.set(v, c, t, amount);
          by_slot[c][t].emplace_back(v, amount);
        }
      }
    }
  }

  // Responses: quality grows with the amount and decays exponentially with
  // the crowding of the channel's recent window.
  data.responses = EventTensor(nv, nc, nt);
  Matrix window_count(nc, nt);
  for (int c = 0; c < nc; ++c) {
    for (int t = 0; t < nt; ++t) {
      int count = 0;
      for (int tp = std::max(0, t - kGenWindow); tp <= t; ++tp) {
        count += static_cast<int>(by_slot[c][tp].size());
      }
      window_count(c, t) = count;
    }
  }
  for (const auto& [idx, amount] : data.donations.entries()) {
    const double crowd =
        std::max(0.0, window_count(idx[1], idx[2]) - 1.0);
    const double quality =
        std::min(5.0, config.response_base * std::log1p(amount)) *
        std::exp(-config.suppression_strength * crowd);
    if (quality > 0.0) data.responses.set(idx[0], idx[1], idx[2], quality);
  }

  // Message features are exogenous noise; the fan-list minimum is the top
  // cumulative per-viewer donation to the channel before the event's slot.
  {
    Matrix cum(nv, nc);
    std::vector<double> fan_max(nc, 0.0);
    Matrix fanmin_at(nc, nt);
    for (int t = 0; t < nt; ++t) {
      for (int c = 0; c < nc; ++c) fanmin_at(c, t) = fan_max[c];
      for (int c = 0; c < nc; ++c) {
        for (const auto& [v, x] : by_slot[c][t]) {
          cum(v, c) += x;
          fan_max[c] = std::max(fan_max[c], cum(v, c));
        }
      }
    }
    for (const auto& [idx, amount] : data.donations.entries()) {
      DonationEvent e;
      e.viewer = idx[0];
      e.channel = idx[1];
      e.slot = idx[2];
      e.amount = amount;
      e.fanlist_min = fanmin_at(idx[1], idx[2]);
      e.message.sentence_embedding.resize(16);
      for (double& x : e.message.sentence_embedding) x = 0.1 * normal(rng);
      e.message.sentiment = u_sym(rng);
      for (double& x : e.message.streamer_emotion) x = u01(rng);
      data.events.push_back(std::move(e));
    }
  }

  // Training parties: random viewer groups; each candidate assigns every
  // member k channels with the first pick biased toward their affinity.
  auto sample_viewers = [&](int count) {
    std::vector<int> all(nv);
    for (int i = 0; i < nv; ++i) all[i] = i;
    std::vector<int> picked;
    std::sample(all.begin(), all.end(), std::back_inserter(picked), count,
                rng);
    return picked;
  };
  auto induced_edges = [&](const std::vector<int>& group) {
    std::vector<std::pair<int, int>> edges;
    for (std::size_t i = 0; i < group.size(); ++i) {
      for (std::size_t j = i + 1; j < group.size(); ++j) {
        if (data.graph.has_edge(group[i], group[j])) {
          edges.emplace_back(group[i], group[j]);
        }
      }
    }
    return edges;
  };
  auto sample_assignment = [&](int v) {
    std::vector<double> weights(affinity.row(v).begin(),
                                affinity.row(v).end());
    std::discrete_distribution<int> biased(weights.begin(), weights.end());
    std::vector<int> channels{biased(rng)};
    while (static_cast<int>(channels.size()) < config.k) {
      std::uniform_int_distribution<int> pick(0, nc - 1);
      const int c = pick(rng);
      if (std::find(channels.begin(), channels.end(), c) == channels.end()) {
        channels.push_back(c);
      }
    }
    return channels;
  };
  auto make_party = [&](const std::vector<int>& group) {
    std::map<int, std::vector<int>> assignments;
    for (int v : group) assignments[v] = sample_assignment(v);
    return Msp(group, induced_edges(group), std::move(assignments));
  };

  const int group_size = std::min(kGroupSize, nv);
  const int n_groups = std::max(1, nv / 20);
  for (int g = 0; g < n_groups; ++g) {
    const std::vector<int> group = sample_viewers(group_size);
    for (int p = 0; p < kPartiesPerGroup; ++p) {
      data.msps.push_back(make_party(group));
    }
  }

  // Ranking evaluation cases: the relevant candidate is the one whose
  // channels for the case viewer carry the highest planted affinity.
  const int n_cases = std::min(kEvalCases, nv);
  const std::vector<int> case_viewers = sample_viewers(n_cases);
  for (int v : case_viewers) {
    std::vector<int> group{v};
    for (int other : sample_viewers(group_size)) {
      if (other != v && static_cast<int>(group.size()) < group_size) {
        group.push_back(other);
      }
    }
    std::sort(group.begin(), group.end());
    EvalCase ec;
    ec.viewer = v;
    double best = 0.0;
    for (int i = 0; i < kEvalCandidates; ++i) {
      ec.candidates.push_back(make_party(group));
      double planted_sat = 0.0;
      for (int c : ec.candidates.back().channels_of(v)) {
        planted_sat += affinity(v, c);
      }
      if (i == 0 || planted_sat > best) {
        best = planted_sat;
        ec.relevant = i;
      }
    }
    data.eval_cases.push_back(std::move(ec));
  }

  data.planted.social_influence = std::move(planted_w);
  data.planted.decay = config.planted_decay;
  data.planted.affinity = std::move(affinity);
  data.planted.bursts = std::move(bursts);
  return data;
}

ResponseHoldout holdout_responses(const SynthData& data, double test_fraction,
                                  std::uint64_t seed) {
  if (test_fraction < 0.0 || test_fraction >= 1.0) {
    throw std::invalid_argument(
        "holdout_responses: test_fraction must be in [0, 1)");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  ResponseHoldout split;
  split.train_responses =
      EventTensor(data.responses.n_viewers(), data.responses.n_channels(),
                  data.responses.n_slots());
  split.test_responses = split.train_responses;
  for (const DonationEvent& e : data.events) {
    const double response = data.responses.at(e.viewer, e.channel, e.slot);
    if (u01(rng) < test_fraction) {
      split.test_events.push_back(e);
      if (response > 0.0) {
        split.test_responses.set(e.viewer, e.channel, e.slot, response);
      }
    } else {
      split.train_events.push_back(e);
      if (response > 0.0) {
        split.train_responses.set(e.viewer, e.channel, e.slot, response);
      }
    }
  }
  return split;
}

double follow_within_window_fraction(const EventTensor& td, int window) {
  if (window < 1) {
    throw std::invalid_argument(
        "follow_within_window_fraction: window must be >= 1");
  }
  if (td.nnz() == 0) return 0.0;
  // Slots with at least one donation, per channel.
  std::vector<std::vector<char>> active(
      td.n_channels(), std::vector<char>(td.n_slots(), 0));
  for (const auto& [idx, x] : td.entries()) {
    active[idx[1]][idx[2]] = 1;
  }
  std::size_t followed = 0;
  for (const auto& [idx, x] : td.entries()) {
    for (int dt = 1; dt <= window && dt <= idx[2]; ++dt) {
      if (active[idx[1]][idx[2] - dt]) {
        ++followed;
        break;
      }
    }
  }
  return static_cast<double>(followed) / static_cast<double>(td.nnz());
}

}  // namespace mars
