#include "mars/sensor.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_set>

namespace mars {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// Per-channel view of the donation tensor: entries (t, v, x) sorted by
// (t, v), plus per-slot totals. Window scans below walk these in the same
// order as the standalone loss functions so the assembled objective matches
// them bit for bit.
struct ChannelIndex {
  std::vector<std::vector<std::tuple<int, int, double>>> by_channel;
  Matrix slot_totals;  // |C| x T

  explicit ChannelIndex(const EventTensor& td)
      : by_channel(td.n_channels()),
        slot_totals(td.n_channels(), td.n_slots()) {
    for (const auto& [idx, x] : td.entries()) {
      by_channel[idx[1]].emplace_back(idx[2], idx[0], x);
      slot_totals(idx[1], idx[2]) += x;
    }
    for (auto& entries : by_channel) {
      std::sort(entries.begin(), entries.end());
    }
  }

  double window_total(int c, int t, int window) const {
    double acc = 0.0;
    for (int tp = std::max(0, t - window); tp <= t; ++tp) {
      acc += slot_totals(c, tp);
    }
    return acc;
  }
};

struct Donor {
  int u;
  double m;   // decayed donation mass
  double md;  // d/d(decay) of m
};

// Decayed donation history per (c, t): m(u | c, t) =
// sum over dt in [1, window] of exp(-decay dt) T_D(u, c, t - dt).
std::vector<std::vector<Donor>> build_decayed_donors(const ChannelIndex& index,
                                                     int n_channels,
                                                     int n_slots, int window,
                                                     double decay) {
  std::vector<double> decay_w(window + 1, 0.0);
  for (int dt = 1; dt <= window; ++dt) decay_w[dt] = std::exp(-decay * dt);

  std::vector<std::vector<Donor>> donors(
      static_cast<std::size_t>(n_channels) * n_slots);
  for (int c = 0; c < n_channels; ++c) {
    for (const auto& [tp, u, x] : index.by_channel[c]) {
      for (int dt = 1; dt <= window; ++dt) {
        const int t = tp + dt;
        if (t >= n_slots) break;
        donors[static_cast<std::size_t>(c) * n_slots + t].push_back(
            {u, decay_w[dt] * x, -dt * decay_w[dt] * x});
      }
    }
  }
  // Merge duplicate donors per cell; keeps the estimate loops deterministic.
  for (auto& cell : donors) {
    std::sort(cell.begin(), cell.end(),
              [](const Donor& a, const Donor& b) { return a.u < b.u; });
    std::size_t out = 0;
    for (std::size_t i = 0; i < cell.size();) {
      Donor merged = cell[i];
      std::size_t j = i + 1;
      while (j < cell.size() && cell[j].u == merged.u) {
        merged.m += cell[j].m;
        merged.md += cell[j].md;
        ++j;
      }
      cell[out++] = merged;
      i = j;
    }
    cell.resize(out);
  }
  return donors;
}

// Entropy of the donation distribution over the window entries, walked in
// (t, v) order. `first`/`last` delimit the window inside the channel's
// sorted entry list.
double entropy_of_range(
    const std::vector<std::tuple<int, int, double>>& entries,
    std::size_t first, std::size_t last) {
  double z = 0.0;
  for (std::size_t i = first; i < last; ++i) z += std::get<2>(entries[i]);
  if (z == 0.0) return 0.0;
  double acc = 0.0;
  for (std::size_t i = first; i < last; ++i) {
    const double p = std::get<2>(entries[i]) / z;
    if (p > 0.0) acc -= p * std::log(p);
  }
  return acc;
}

void check_data_dims(const SensorModel& model, const TrainingData& data) {
  if (data.donations.n_viewers() != model.n_viewers() ||
      data.donations.n_channels() != model.n_channels() ||
      data.donations.n_slots() != model.n_slots()) {
    throw std::invalid_argument("sensor: donation tensor does not match model");
  }
  if (!data.responses.same_shape(data.donations)) {
    throw std::invalid_argument("sensor: response tensor shape mismatch");
  }
  if (data.relations.n_channels() != model.n_channels()) {
    throw std::invalid_argument("sensor: relation matrix shape mismatch");
  }
  const int want =
      FeatureVector::width(model.emb_width, model.alpha());
  if (static_cast<int>(model.theta.size()) != want) {
    throw std::invalid_argument(
        "sensor: theta has width " + std::to_string(model.theta.size()) +
        " but the feature schema requires " + std::to_string(want));
  }
}

// Cells included in the reconstruction part of the objective: either all of
// them, or the observed cells plus a seeded sample of zero cells reweighted
// by the zero population they stand in for.
struct ReconScheme {
  bool all = true;
  std::vector<std::size_t> sampled_zero_cells;
  double zero_weight = 1.0;
};

ReconScheme make_recon_scheme(const EventTensor& t, const SensorConfig& cfg,
                              std::uint64_t salt) {
  ReconScheme scheme;
  if (!cfg.sampled_zeros) return scheme;
  scheme.all = false;
  const std::size_t cells = t.cell_count();
  const std::size_t zeros = cells - t.nnz();
  if (zeros == 0) return scheme;
  const std::size_t want = std::min<std::size_t>(
      zeros, t.nnz() * static_cast<std::size_t>(cfg.zero_sample_per_nnz) + 1);
  std::mt19937_64 rng(cfg.seed ^ salt);
  std::uniform_int_distribution<std::size_t> pick(0, cells - 1);
  std::unordered_set<std::size_t> chosen;
  const int nc = t.n_channels();
  const int nt = t.n_slots();
  while (chosen.size() < want) {
    const std::size_t cell = pick(rng);
    const int v = static_cast<int>(cell / (static_cast<std::size_t>(nc) * nt));
    const int rem = static_cast<int>(cell % (static_cast<std::size_t>(nc) * nt));
    if (t.at(v, rem / nt, rem % nt) != 0.0) continue;
    chosen.insert(cell);
  }
  scheme.sampled_zero_cells.assign(chosen.begin(), chosen.end());
  std::sort(scheme.sampled_zero_cells.begin(),
            scheme.sampled_zero_cells.end());
  scheme.zero_weight = static_cast<double>(zeros) /
                       static_cast<double>(scheme.sampled_zero_cells.size());
  return scheme;
}

double recon_term(const EventTensor& observed, const Tensor3& reconstructed,
                  const ReconScheme& scheme, Tensor3* upstream) {
  if (scheme.all) {
    const double value = frob_sq_diff(observed, reconstructed);
    if (upstream) {
      auto& g = upstream->data();
      const auto& r = reconstructed.data();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * r[i];
      for (const auto& [idx, x] : observed.entries()) {
        (*upstream)(idx[0], idx[1], idx[2]) -= 2.0 * x;
      }
    }
    return value;
  }
  double value = 0.0;
  for (const auto& [idx, x] : observed.entries()) {
    const double diff = reconstructed(idx[0], idx[1], idx[2]) - x;
    value += diff * diff;
    if (upstream) (*upstream)(idx[0], idx[1], idx[2]) += 2.0 * diff;
  }
  for (std::size_t cell : scheme.sampled_zero_cells) {
    const double y = reconstructed.data()[cell];
    value += scheme.zero_weight * y * y;
    if (upstream) upstream->data()[cell] += 2.0 * scheme.zero_weight * y;
  }
  return value;
}

// Backpropagates an upstream gradient on a reconstruction through the Tucker
// product into the factor matrices and the core.
void accumulate_tucker_backward(const Tensor3& upstream, const Tensor3& core,
                                const FactorSet& f, Matrix& g_viewers,
                                Matrix& g_channels, Matrix& g_times,
                                Tensor3& g_core) {
  const int nv = f.viewer_factors.rows();
  const int nc = f.channel_factors.rows();
  const int nt = f.time_factors.rows();
  const int alpha = f.alpha;

  const Tensor3 p = mode_n_product(
      mode_n_product(core, f.channel_factors, 2), f.time_factors, 3);
  const Tensor3 q = mode_n_product(
      mode_n_product(core, f.viewer_factors, 1), f.time_factors, 3);
  const Tensor3 r = mode_n_product(
      mode_n_product(core, f.viewer_factors, 1), f.channel_factors, 2);

  for (int v = 0; v < nv; ++v) {
    for (int c = 0; c < nc; ++c) {
      for (int t = 0; t < nt; ++t) {
        const double g = upstream(v, c, t);
        if (g == 0.0) continue;
        for (int a = 0; a < alpha; ++a) g_viewers(v, a) += g * p(a, c, t);
        for (int b = 0; b < alpha; ++b) g_channels(c, b) += g * q(v, b, t);
        for (int e = 0; e < alpha; ++e) g_times(t, e) += g * r(v, c, e);
      }
    }
  }

  Matrix vt(alpha, nv);
  for (int i = 0; i < nv; ++i)
    for (int a = 0; a < alpha; ++a) vt(a, i) = f.viewer_factors(i, a);
  Matrix ct(alpha, nc);
  for (int i = 0; i < nc; ++i)
    for (int a = 0; a < alpha; ++a) ct(a, i) = f.channel_factors(i, a);
  Matrix tt(alpha, nt);
  for (int i = 0; i < nt; ++i)
    for (int a = 0; a < alpha; ++a) tt(a, i) = f.time_factors(i, a);
  const Tensor3 gc = mode_n_product(
      mode_n_product(mode_n_product(upstream, vt, 1), ct, 2), tt, 3);
  for (std::size_t i = 0; i < g_core.data().size(); ++i) {
    g_core.data()[i] += gc.data()[i];
  }
}

// Computes every loss term and, when `grads` is non-null, accumulates the
// analytic gradient of the weighted objective.
LossBreakdown assemble(const SensorModel& model, const TrainingData& data,
                       const SensorConfig& config, SensorGradients* grads) {
  model.validate();
  config.validate();
  check_data_dims(model, data);

  const int nv = model.n_viewers();
  const int nc = model.n_channels();
  const int nt = model.n_slots();
  const int alpha = model.alpha();
  const int window = config.window;
  const int emb_width = model.emb_width;

  const Tensor3 td_hat = model.reconstruct_donations();
  const Tensor3 tr_hat = model.reconstruct_responses();

  Tensor3 g_d, g_r;
  if (grads) {
    g_d = Tensor3(nv, nc, nt);
    g_r = Tensor3(nv, nc, nt);
    grads->viewer_factors = Matrix(nv, alpha);
    grads->channel_factors = Matrix(nc, alpha);
    grads->time_factors = Matrix(nt, alpha);
    grads->donation_core = Tensor3(alpha, alpha, alpha);
    grads->response_core = Tensor3(alpha, alpha, alpha);
    grads->social_influence = Matrix(nv, nv);
    grads->decay = 0.0;
    grads->theta.assign(model.theta.size(), 0.0);
  }

  LossBreakdown lb;

  // Reconstruction of both tensors.
  const ReconScheme scheme_d =
      make_recon_scheme(data.donations, config, 0x9e3779b97f4a7c15ULL);
  const ReconScheme scheme_r =
      make_recon_scheme(data.responses, config, 0xc2b2ae3d27d4eb4fULL);
  lb.reconstruction_donation =
      recon_term(data.donations, td_hat, scheme_d, grads ? &g_d : nullptr);
  lb.reconstruction_response =
      recon_term(data.responses, tr_hat, scheme_r, grads ? &g_r : nullptr);

  // Streamer relation term.
  {
    Matrix err(nc, nc);
    for (int i = 0; i < nc; ++i) {
      for (int j = 0; j < nc; ++j) {
        const double diff =
            data.relations.at(i, j) -
            dot(model.factors.channel_factors.row(i),
                model.factors.channel_factors.row(j));
        lb.ser += diff * diff;
        err(i, j) = -diff;  // gram - relation
      }
    }
    if (grads && config.lambda_ser != 0.0) {
      for (int i = 0; i < nc; ++i) {
        for (int j = 0; j < nc; ++j) {
          const double coef =
              config.lambda_ser * 2.0 * (err(i, j) + err(j, i));
          if (coef == 0.0) continue;
          for (int a = 0; a < alpha; ++a) {
            grads->channel_factors(i, a) +=
                coef * model.factors.channel_factors(j, a);
          }
        }
      }
    }
  }

  const ChannelIndex index(data.donations);

  // Socio-temporal term: residual of the reconstructed donations against the
  // influence-weighted decayed history.
  {
    const auto donors =
        build_decayed_donors(index, nc, nt, window, model.decay);
    Tensor3 star(nv, nc, nt);
    for (int c = 0; c < nc; ++c) {
      for (int t = 0; t < nt; ++t) {
        const auto& cell = donors[static_cast<std::size_t>(c) * nt + t];
        for (const Donor& donor : cell) {
          for (int v = 0; v < nv; ++v) {
            if (v == donor.u) continue;
            star(v, c, t) += model.social_influence(donor.u, v) * donor.m;
          }
        }
      }
    }
    std::vector<double> decay_dot(nv);
    for (int c = 0; c < nc; ++c) {
      for (int t = 0; t < nt; ++t) {
        const auto& cell = donors[static_cast<std::size_t>(c) * nt + t];
        double cell_loss = 0.0;
        for (int v = 0; v < nv; ++v) {
          const double res = td_hat(v, c, t) - star(v, c, t);
          cell_loss += res * res;
        }
        lb.star += cell_loss;
        if (!grads || config.lambda_star == 0.0) continue;
        for (int v = 0; v < nv; ++v) {
          g_d(v, c, t) +=
              config.lambda_star * 2.0 * (td_hat(v, c, t) - star(v, c, t));
        }
        if (cell.empty()) continue;
        std::fill(decay_dot.begin(), decay_dot.end(), 0.0);
        for (const Donor& donor : cell) {
          for (int v = 0; v < nv; ++v) {
            if (v == donor.u) continue;
            const double res = td_hat(v, c, t) - star(v, c, t);
            grads->social_influence(donor.u, v) +=
                config.lambda_star * -2.0 * res * donor.m;
            decay_dot[v] += model.social_influence(donor.u, v) * donor.md;
          }
        }
        double d_acc = 0.0;
        for (int v = 0; v < nv; ++v) {
          d_acc += (td_hat(v, c, t) - star(v, c, t)) * decay_dot[v];
        }
        grads->decay += config.lambda_star * -2.0 * d_acc;
      }
    }
  }

  // Burst suppression term. Trend and entropy are data-only weights.
  {
    Matrix phi(nc, nt);
    Matrix entropy(nc, nt);
    for (int c = 0; c < nc; ++c) {
      const auto& entries = index.by_channel[c];
      std::size_t lo = 0, hi = 0;
      for (int t = 0; t < nt; ++t) {
        const int t_lo = std::max(0, t - window);
        while (lo < entries.size() && std::get<0>(entries[lo]) < t_lo) ++lo;
        while (hi < entries.size() && std::get<0>(entries[hi]) <= t) ++hi;
        phi(c, t) = index.slot_totals(c, t) -
                    index.window_total(c, t, window) / (window + 1);
        entropy(c, t) = entropy_of_range(entries, lo, hi);
      }
    }
    Matrix resp_slot(nc, nt);  // sum over viewers of reconstructed responses
    for (int v = 0; v < nv; ++v) {
      for (int c = 0; c < nc; ++c) {
        for (int t = 0; t < nt; ++t) resp_slot(c, t) += tr_hat(v, c, t);
      }
    }
    for (int c = 0; c < nc; ++c) {
      for (int t = 0; t < nt; ++t) {
        const double weight = phi(c, t) * entropy(c, t);
        if (weight == 0.0) continue;
        double resp_window = 0.0;
        for (int tp = std::max(0, t - window); tp <= t; ++tp) {
          resp_window += resp_slot(c, tp);
        }
        lb.riot += weight * resp_window;
      }
    }
    if (grads && config.lambda_riot != 0.0) {
      for (int c = 0; c < nc; ++c) {
        for (int tp = 0; tp < nt; ++tp) {
          double w = 0.0;
          for (int t = tp; t <= std::min(nt - 1, tp + window); ++t) {
            w += phi(c, t) * entropy(c, t);
          }
          if (w == 0.0) continue;
          for (int v = 0; v < nv; ++v) {
            g_r(v, c, tp) += config.lambda_riot * w;
          }
        }
      }
    }
  }

  // Donation-to-response regression.
  {
    const int width = FeatureVector::width(emb_width, alpha);
    std::vector<double> x(width);
    const int off_sent = FeatureVector::sentiment_offset(emb_width);
    const int off_emo = FeatureVector::emotion_offset(emb_width);
    const int off_vt = FeatureVector::viewer_total_offset(emb_width);
    const int off_wt = FeatureVector::window_total_offset(emb_width);
    const int off_fan = FeatureVector::fanlist_offset(emb_width);
    const int off_inter = FeatureVector::interaction_offset(emb_width);
    const std::span<const double> theta8(model.theta.data() + off_inter,
                                         static_cast<std::size_t>(alpha));
    for (const DonationEvent& e : data.events) {
      if (static_cast<int>(e.message.sentence_embedding.size()) != emb_width) {
        throw std::invalid_argument(
            "sensor: event embedding width does not match the model");
      }
      x[0] = e.amount;
      std::copy(e.message.sentence_embedding.begin(),
                e.message.sentence_embedding.end(), x.begin() + 1);
      x[off_sent] = e.message.sentiment;
      std::copy(e.message.streamer_emotion.begin(),
                e.message.streamer_emotion.end(), x.begin() + off_emo);
      const double recorded = data.donations.at(e.viewer, e.channel, e.slot);
      double viewer_total = 0.0;
      {
        auto it = data.donations.entries().lower_bound({e.viewer, e.channel, 0});
        auto end =
            data.donations.entries().upper_bound({e.viewer, e.channel, e.slot});
        for (; it != end; ++it) viewer_total += it->second;
      }
      x[off_vt] = viewer_total - recorded;
      x[off_wt] = index.window_total(e.channel, e.slot, window) - recorded;
      x[off_fan] = e.fanlist_min;
      const auto v_row = model.factors.viewer_factors.row(e.viewer);
      const auto c_row = model.factors.channel_factors.row(e.channel);
      for (int a = 0; a < alpha; ++a) x[off_inter + a] = v_row[a] * c_row[a];

      const double pred = dot(model.theta, x);
      const double res = tr_hat(e.viewer, e.channel, e.slot) - pred;
      lb.d2r += res * res;
      if (!grads) continue;
      g_r(e.viewer, e.channel, e.slot) += 2.0 * res;
      for (int i = 0; i < width; ++i) grads->theta[i] += -2.0 * res * x[i];
      for (int a = 0; a < alpha; ++a) {
        grads->viewer_factors(e.viewer, a) += -2.0 * res * theta8[a] * c_row[a];
        grads->channel_factors(e.channel, a) +=
            -2.0 * res * theta8[a] * v_row[a];
      }
    }
  }

  lb.total = lb.reconstruction_donation + lb.reconstruction_response +
             lb.d2r + config.lambda_ser * lb.ser +
             config.lambda_star * lb.star + config.lambda_riot * lb.riot;

  if (grads) {
    accumulate_tucker_backward(g_d, model.factors.donation_core, model.factors,
                               grads->viewer_factors, grads->channel_factors,
                               grads->time_factors, grads->donation_core);
    accumulate_tucker_backward(g_r, model.factors.response_core, model.factors,
                               grads->viewer_factors, grads->channel_factors,
                               grads->time_factors, grads->response_core);
  }
  return lb;
}

}  // namespace

void TrainingData::validate() const {
  if (!donations.same_shape(responses)) {
    throw std::invalid_argument(
        "TrainingData: donation and response tensors differ in shape");
  }
  if (graph.n_viewers() != donations.n_viewers()) {
    throw std::invalid_argument("TrainingData: graph viewer count mismatch");
  }
  if (relations.n_channels() != donations.n_channels()) {
    throw std::invalid_argument("TrainingData: relation channel count mismatch");
  }
  std::set<std::array<int, 3>> seen;
  for (const DonationEvent& e : events) {
    const double recorded = donations.at(e.viewer, e.channel, e.slot);
    if (recorded == 0.0) {
      throw std::invalid_argument(
          "TrainingData: event references a zero donation cell");
    }
    if (recorded != e.amount) {
      throw std::invalid_argument(
          "TrainingData: event amount disagrees with the donation tensor");
    }
    if (!seen.insert({e.viewer, e.channel, e.slot}).second) {
      throw std::invalid_argument("TrainingData: duplicate donation event");
    }
  }
}

double loss_reconstruction(const SensorModel& model, const EventTensor& td,
                           const EventTensor& tr) {
  if (td.n_viewers() != model.n_viewers() ||
      td.n_channels() != model.n_channels() ||
      td.n_slots() != model.n_slots() || !td.same_shape(tr)) {
    throw std::invalid_argument("loss_reconstruction: shape mismatch");
  }
  return frob_sq_diff(td, model.reconstruct_donations()) +
         frob_sq_diff(tr, model.reconstruct_responses());
}

double loss_ser(const Matrix& channel_factors,
                const SignedStreamerMatrix& relations) {
  if (relations.n_channels() != channel_factors.rows()) {
    throw std::invalid_argument("loss_ser: shape mismatch");
  }
  double acc = 0.0;
  for (int i = 0; i < channel_factors.rows(); ++i) {
    for (int j = 0; j < channel_factors.rows(); ++j) {
      const double diff = relations.at(i, j) -
                          dot(channel_factors.row(i), channel_factors.row(j));
      acc += diff * diff;
    }
  }
  return acc;
}

double star_estimate(const SensorModel& model, const EventTensor& td, int v,
                     int c, int t, int window) {
  if (window < 1) {
    throw std::invalid_argument("star_estimate: window must be >= 1");
  }
  td.check_index(v, c, t);
  double acc = 0.0;
  for (int dt = 1; dt <= window; ++dt) {
    const int tp = t - dt;
    if (tp < 0) break;
    const double w = std::exp(-model.decay * dt);
    for (int u = 0; u < td.n_viewers(); ++u) {
      if (u == v) continue;
      const double x = td.at(u, c, tp);
      if (x != 0.0) acc += w * model.social_influence(u, v) * x;
    }
  }
  return acc;
}

double loss_star(const SensorModel& model, const EventTensor& td, int window) {
  if (window < 1) throw std::invalid_argument("loss_star: window must be >= 1");
  if (td.n_viewers() != model.n_viewers() ||
      td.n_channels() != model.n_channels() ||
      td.n_slots() != model.n_slots()) {
    throw std::invalid_argument("loss_star: shape mismatch");
  }
  const Tensor3 td_hat = model.reconstruct_donations();
  const ChannelIndex index(td);
  const auto donors = build_decayed_donors(index, td.n_channels(),
                                           td.n_slots(), window, model.decay);
  double acc = 0.0;
  for (int c = 0; c < td.n_channels(); ++c) {
    for (int t = 0; t < td.n_slots(); ++t) {
      const auto& cell = donors[static_cast<std::size_t>(c) * td.n_slots() + t];
      for (int v = 0; v < td.n_viewers(); ++v) {
        double est = 0.0;
        for (const Donor& donor : cell) {
          if (donor.u != v) est += model.social_influence(donor.u, v) * donor.m;
        }
        const double res = td_hat(v, c, t) - est;
        acc += res * res;
      }
    }
  }
  return acc;
}

double donation_entropy(const EventTensor& td, int c, int t, int window) {
  if (window < 1) {
    throw std::invalid_argument("donation_entropy: window must be >= 1");
  }
  td.check_index(0, c, t);
  const int t_lo = std::max(0, t - window);
  std::vector<std::tuple<int, int, double>> in_window;
  for (const auto& [idx, x] : td.entries()) {
    if (idx[1] == c && idx[2] >= t_lo && idx[2] <= t) {
      in_window.emplace_back(idx[2], idx[0], x);
    }
  }
  std::sort(in_window.begin(), in_window.end());
  return entropy_of_range(in_window, 0, in_window.size());
}

double burst_trend(const EventTensor& td, int c, int t, int window) {
  if (window < 1) {
    throw std::invalid_argument("burst_trend: window must be >= 1");
  }
  td.check_index(0, c, t);
  auto slot_total = [&](int tp) {
    double acc = 0.0;
    for (const auto& [idx, x] : td.entries()) {
      if (idx[1] == c && idx[2] == tp) acc += x;
    }
    return acc;
  };
  double window_sum = 0.0;
  for (int tp = std::max(0, t - window); tp <= t; ++tp) {
    window_sum += slot_total(tp);
  }
  return slot_total(t) - window_sum / (window + 1);
}

double loss_riot(const SensorModel& model, const EventTensor& td, int window) {
  if (window < 1) throw std::invalid_argument("loss_riot: window must be >= 1");
  if (td.n_viewers() != model.n_viewers() ||
      td.n_channels() != model.n_channels() ||
      td.n_slots() != model.n_slots()) {
    throw std::invalid_argument("loss_riot: shape mismatch");
  }
  const Tensor3 tr_hat = model.reconstruct_responses();
  Matrix resp_slot(td.n_channels(), td.n_slots());
  for (int v = 0; v < td.n_viewers(); ++v) {
    for (int c = 0; c < td.n_channels(); ++c) {
      for (int t = 0; t < td.n_slots(); ++t) resp_slot(c, t) += tr_hat(v, c, t);
    }
  }
  double acc = 0.0;
  for (int c = 0; c < td.n_channels(); ++c) {
    for (int t = 0; t < td.n_slots(); ++t) {
      const double weight =
          burst_trend(td, c, t, window) * donation_entropy(td, c, t, window);
      if (weight == 0.0) continue;
      double resp_window = 0.0;
      for (int tp = std::max(0, t - window); tp <= t; ++tp) {
        resp_window += resp_slot(c, tp);
      }
      acc += weight * resp_window;
    }
  }
  return acc;
}

double loss_d2r(const SensorModel& model, const EventTensor& td,
                std::span<const DonationEvent> events, int window) {
  const Tensor3 tr_hat = model.reconstruct_responses();
  double acc = 0.0;
  for (const DonationEvent& e : events) {
    if (td.at(e.viewer, e.channel, e.slot) == 0.0) {
      throw std::invalid_argument(
          "loss_d2r: event references a zero donation cell");
    }
    const FeatureVector x =
        build_features(model, td, e.viewer, e.channel, e.slot, e.amount,
                       e.message, e.fanlist_min, window);
    const double res =
        tr_hat(e.viewer, e.channel, e.slot) - estimate_response(model.theta, x);
    acc += res * res;
  }
  return acc;
}

LossBreakdown loss_components(const SensorModel& model,
                              const TrainingData& data,
                              const SensorConfig& config) {
  return assemble(model, data, config, nullptr);
}

double total_loss(const SensorModel& model, const TrainingData& data,
                  const SensorConfig& config) {
  return assemble(model, data, config, nullptr).total;
}

std::pair<SensorGradients, LossBreakdown> gradients(
    const SensorModel& model, const TrainingData& data,
    const SensorConfig& config) {
  SensorGradients g;
  const LossBreakdown lb = assemble(model, data, config, &g);
  return {std::move(g), lb};
}

SensorModel init_sensor_model(const TrainingData& data,
                              const SensorConfig& config) {
  config.validate();
  const int nv = data.donations.n_viewers();
  const int nc = data.donations.n_channels();
  const int nt = data.donations.n_slots();
  const int alpha = config.alpha;

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> uniform(-config.init_scale,
                                                 config.init_scale);
  auto fill_matrix = [&](int rows, int cols) {
    Matrix m(rows, cols);
    for (double& x : m.data()) x = uniform(rng);
    return m;
  };
  auto fill_core = [&]() {
    Tensor3 t(alpha, alpha, alpha);
    for (double& x : t.data()) x = uniform(rng);
    return t;
  };

  SensorModel model;
  model.factors.alpha = alpha;
  model.factors.viewer_factors = fill_matrix(nv, alpha);
  model.factors.channel_factors = fill_matrix(nc, alpha);
  model.factors.time_factors = fill_matrix(nt, alpha);
  model.factors.donation_core = fill_core();
  model.factors.response_core = fill_core();
  model.emb_width = config.emb_width;
  model.theta.resize(FeatureVector::width(config.emb_width, alpha));
  for (double& x : model.theta) x = uniform(rng);

  model.epsilon_init = config.epsilon_init;
  model.social_influence = Matrix(nv, nv, config.epsilon_init);
  for (int v = 0; v < nv; ++v) model.social_influence(v, v) = 0.0;
  for (const auto& [u, v] : data.graph.edges()) {
    model.social_influence(u, v) = 1.0;
    model.social_influence(v, u) = 1.0;
  }
  model.decay = config.decay_init;
  return model;
}

SensorTrainResult train_sensor(const TrainingData& data,
                               const SensorConfig& config) {
  config.validate();
  if (config.epochs < 1) {
    throw std::invalid_argument("train_sensor: epochs must be >= 1");
  }
  data.validate();

  SensorModel model = init_sensor_model(data, config);
  const double lr = config.learning_rate;

  SensorGradients velocity;
  const bool use_momentum = config.momentum != 0.0;

  std::vector<double> trace;
  trace.reserve(config.epochs);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    auto [grad, lb] = gradients(model, data, config);
    if (!std::isfinite(lb.total)) {
      throw TrainingDivergence(
          "train_sensor: loss became non-finite at epoch " +
              std::to_string(epoch),
          trace);
    }
    trace.push_back(lb.total);

    if (use_momentum) {
      if (epoch == 0) {
        velocity = grad;
      } else {
        auto blend = [&](std::vector<double>& vel, const std::vector<double>& g) {
          for (std::size_t i = 0; i < vel.size(); ++i) {
            vel[i] = config.momentum * vel[i] + g[i];
          }
        };
        blend(velocity.viewer_factors.data(), grad.viewer_factors.data());
        blend(velocity.channel_factors.data(), grad.channel_factors.data());
        blend(velocity.time_factors.data(), grad.time_factors.data());
        blend(velocity.donation_core.data(), grad.donation_core.data());
        blend(velocity.response_core.data(), grad.response_core.data());
        blend(velocity.social_influence.data(), grad.social_influence.data());
        blend(velocity.theta, grad.theta);
        velocity.decay = config.momentum * velocity.decay + grad.decay;
      }
    }
    const SensorGradients& step = use_momentum ? velocity : grad;

    auto apply = [&](std::vector<double>& x, const std::vector<double>& g,
                     double rate) {
      for (std::size_t i = 0; i < x.size(); ++i) x[i] -= rate * g[i];
    };
    apply(model.factors.viewer_factors.data(), step.viewer_factors.data(), lr);
    apply(model.factors.channel_factors.data(), step.channel_factors.data(),
          lr);
    apply(model.factors.time_factors.data(), step.time_factors.data(), lr);
    apply(model.factors.donation_core.data(), step.donation_core.data(), lr);
    apply(model.factors.response_core.data(), step.response_core.data(), lr);
    apply(model.social_influence.data(), step.social_influence.data(),
          lr * config.influence_lr_scale);
    apply(model.theta, step.theta, lr);
    model.decay = std::max(0.0, model.decay - lr * step.decay);
  }

  const double final_loss = total_loss(model, data, config);
  if (!std::isfinite(final_loss)) {
    throw TrainingDivergence("train_sensor: final loss is non-finite", trace);
  }
  return {std::move(model), std::move(trace), final_loss};
}

long long param_count(int n_viewers, int n_channels, int n_slots, int alpha,
                      ParamVariant variant) {
  if (n_viewers < 1 || n_channels < 1 || n_slots < 1 || alpha < 1) {
    throw std::invalid_argument("param_count: dimensions must be positive");
  }
  const long long a = alpha;
  const long long dims = static_cast<long long>(n_viewers) + n_channels +
                         static_cast<long long>(n_slots);
  switch (variant) {
    case ParamVariant::shared:
      return dims * a + 2 * a * a * a;
    case ParamVariant::separate:
      return 2 * dims * a + 2 * a * a * a;
    case ParamVariant::four_dim:
      return (dims + 2) * a + a * a * a * a;
  }
  throw std::invalid_argument("param_count: unknown variant");
}

}  // namespace mars
