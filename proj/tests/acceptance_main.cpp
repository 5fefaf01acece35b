// Acceptance suite: runs every release criterion at its stated tolerance and
// prints one pass/fail line per criterion. Exit code is the failure count.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mars/cars.hpp"
#include "mars/d2r.hpp"
#include "mars/eval.hpp"
#include "mars/io.hpp"
#include "mars/sensor.hpp"
#include "mars/synth.hpp"
#include "mars/tensor.hpp"
#include "oracle.hpp"
#include "test_util.hpp"

using namespace mars;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

// Spearman rank correlation with average ranks for ties. Zero when either
// side is constant.
double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  auto ranks = [n](const std::vector<double>& x) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i + 1;
      while (j < n && x[order[j]] == x[order[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j - 1) + 1.0;
      for (std::size_t k = i; k < j; ++k) r[order[k]] = avg;
      i = j;
    }
    return r;
  };
  const std::vector<double> ra = ranks(a), rb = ranks(b);
  const double mean = static_cast<double>(n + 1) / 2.0;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cov += (ra[i] - mean) * (rb[i] - mean);
    va += (ra[i] - mean) * (ra[i] - mean);
    vb += (rb[i] - mean) * (rb[i] - mean);
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

TrainingData bundle_from(const SynthData& data) {
  TrainingData bundle;
  bundle.donations = data.donations;
  bundle.responses = data.responses;
  bundle.events = data.events;
  bundle.graph = data.graph;
  bundle.relations = data.relations;
  return bundle;
}

std::vector<double> offdiag(const Matrix& m) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.rows()) * (m.rows() - 1));
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (i != j) flat.push_back(m(i, j));
    }
  }
  return flat;
}

// ---------------------------------------------------------------------------
// 1. Gradient correctness against central finite differences.
bool criterion_gradients(std::string& detail) {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed * 7919);
    SensorModel model = test::random_model(6, 4, 10, 2, rng, 3, 0.4);
    const TrainingData data = test::random_training_data(6, 4, 10, rng);
    SensorConfig cfg;
    cfg.alpha = 2;
    cfg.emb_width = 3;
    cfg.window = 5;
    cfg.lambda_ser = 0.5;
    cfg.lambda_star = 0.1;
    cfg.lambda_riot = 0.5;

    const auto [analytic, lb] = gradients(model, data, cfg);
    if (!std::isfinite(lb.total)) {
      detail = "non-finite loss";
      return false;
    }
    const std::vector<double> flat = oracle::flatten_gradients(analytic);
    const std::vector<double*> coords = oracle::sensor_learnables(model);
    const std::vector<double> numeric = oracle::finite_diff_gradient(
        [&]() { return total_loss(model, data, cfg); }, coords, 1e-5);
    for (std::size_t i = 0; i < flat.size(); ++i) {
      worst = std::max(worst, test::grad_err(flat[i], numeric[i]));
    }
  }
  const double elapsed = seconds_since(start);
  std::ostringstream out;
  out << "max per-coordinate error " << worst << " (tol 1e-4), " << elapsed
      << " s";
  detail = out.str();
  return worst <= 1e-4 && elapsed < 30.0;
}

// ---------------------------------------------------------------------------
// 2. Oracle equivalence for the total loss and the group pick.
bool criterion_oracles(std::string& detail) {
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    std::mt19937_64 rng(500 + trial);
    const SensorModel model = test::random_model(5, 3, 7, 2, rng, 3, 0.5);
    const TrainingData data = test::random_training_data(5, 3, 7, rng);
    SensorConfig cfg;
    cfg.alpha = 2;
    cfg.emb_width = 3;
    cfg.window = 3;
    cfg.lambda_ser = 0.5;
    cfg.lambda_star = 0.1;
    cfg.lambda_riot = 0.5;
    worst = std::max(
        worst, test::rel_diff(total_loss(model, data, cfg),
                              oracle::naive_total_loss(model, data, cfg)));
  }

  int agreements = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::mt19937_64 rng(9000 + trial);
    const SensorModel model = test::random_model(8, 6, 4, 2, rng);
    const CarsParams params = test::random_cars_params(8, 2, rng);
    const Msp shape = test::random_msp(8, 6, 2, 5, rng);
    std::vector<Msp> candidates;
    std::vector<int> channels(6);
    std::iota(channels.begin(), channels.end(), 0);
    for (int i = 0; i < 10; ++i) {
      std::map<int, std::vector<int>> assignments;
      for (int v : shape.group()) {
        std::vector<int> picked;
        std::sample(channels.begin(), channels.end(),
                    std::back_inserter(picked), 2, rng);
        assignments[v] = picked;
      }
      candidates.emplace_back(
          shape.group(),
          std::vector<std::pair<int, int>>(shape.edges().begin(),
                                           shape.edges().end()),
          assignments);
    }
    if (recommend_group_msp(params, model, candidates) ==
        oracle::exhaustive_group_choice(params, model, candidates)) {
      ++agreements;
    }
  }

  std::ostringstream out;
  out << "loss max rel diff " << worst << " (tol 1e-10), group choice "
      << agreements << "/100";
  detail = out.str();
  return worst <= 1e-10 && agreements == 100;
}

// ---------------------------------------------------------------------------
// 3. Parameter-count propositions.
bool criterion_param_count(std::string& detail) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> dim(1, 1000);
  std::uniform_int_distribution<int> alpha_pick(2, 64);
  for (int i = 0; i < 20; ++i) {
    const long long nv = dim(rng), nc = dim(rng), nt = dim(rng);
    const long long a = alpha_pick(rng);
    const long long shared =
        param_count(static_cast<int>(nv), static_cast<int>(nc),
                    static_cast<int>(nt), static_cast<int>(a),
                    ParamVariant::shared);
    const long long separate =
        param_count(static_cast<int>(nv), static_cast<int>(nc),
                    static_cast<int>(nt), static_cast<int>(a),
                    ParamVariant::separate);
    const long long four =
        param_count(static_cast<int>(nv), static_cast<int>(nc),
                    static_cast<int>(nt), static_cast<int>(a),
                    ParamVariant::four_dim);
    if (shared != (nv + nc + nt) * a + 2 * a * a * a ||
        separate != 2 * (nv + nc + nt) * a + 2 * a * a * a ||
        four != (nv + nc + nt + 2) * a + a * a * a * a) {
      detail = "formula mismatch";
      return false;
    }
    if (!(shared < separate) || !(shared < four)) {
      detail = "ordering violated";
      return false;
    }
  }
  detail = "20 dimension tuples, formulas exact, shared strictly smallest";
  return true;
}

// ---------------------------------------------------------------------------
// 4. Planted influence recovery through the socio-temporal term.
bool criterion_influence_recovery(std::string& detail) {
  const auto start = std::chrono::steady_clock::now();
  SynthConfig synth;
  synth.n_viewers = 100;
  synth.n_channels = 10;
  synth.n_slots = 200;
  synth.edge_prob = 0.05;
  synth.base_donation_rate = 0.01;
  synth.planted_influence = 0.05;
  synth.burst_rate = 0.002;
  synth.seed = 404;
  const SynthData data = generate(synth);

  // Train without the observed social network: the influence matrix starts
  // at the flat epsilon and must be recovered from donation timing alone.
  TrainingData bundle = bundle_from(data);
  bundle.graph = ViewerGraph(synth.n_viewers);
  bundle.events.clear();

  SensorConfig cfg;
  cfg.alpha = 8;
  cfg.emb_width = 16;
  cfg.window = 5;
  cfg.lambda_ser = 0.5;
  cfg.lambda_star = 0.1;
  cfg.lambda_riot = 0.5;
  cfg.learning_rate = 2e-5;
  cfg.influence_lr_scale = 40.0;
  cfg.epochs = 800;
  cfg.seed = 11;

  const SensorTrainResult trained = train_sensor(bundle, cfg);

  SensorConfig ablated = cfg;
  ablated.lambda_star = 0.0;
  const SensorTrainResult no_star = train_sensor(bundle, ablated);

  const std::vector<double> planted = offdiag(data.planted.social_influence);
  const double with_star =
      spearman(offdiag(trained.model.social_influence), planted);
  const double without_star =
      spearman(offdiag(no_star.model.social_influence), planted);
  const double elapsed = seconds_since(start);

  std::ostringstream out;
  out << "rank correlation " << with_star << " (>= 0.6), ablation "
      << without_star << ", " << elapsed << " s";
  detail = out.str();
  return with_star >= 0.6 && with_star > without_star && elapsed < 300.0;
}

// ---------------------------------------------------------------------------
// 5. Burst suppression: depressed estimates in bursts, and a test-RMSE win
//    for the full model over the ablation.
bool criterion_burst_suppression(std::string& detail) {
  SynthConfig synth;
  synth.n_viewers = 60;
  synth.n_channels = 8;
  synth.n_slots = 150;
  synth.base_donation_rate = 0.01;
  synth.planted_influence = 0.03;
  synth.burst_rate = 0.02;
  synth.burst_magnitude = 25.0;
  synth.suppression_strength = 0.5;
  synth.response_base = 2.5;
  synth.seed = 505;
  const SynthData data = generate(synth);
  const ResponseHoldout split = holdout_responses(data, 0.25, synth.seed + 1);

  TrainingData bundle = bundle_from(data);
  bundle.responses = split.train_responses;
  bundle.events = split.train_events;

  SensorConfig cfg;
  cfg.alpha = 8;
  cfg.emb_width = 16;
  cfg.window = 5;
  cfg.lambda_ser = 0.5;
  cfg.lambda_star = 0.1;
  cfg.lambda_riot = 0.5;
  cfg.learning_rate = 2e-5;
  cfg.epochs = 600;
  cfg.seed = 13;

  const SensorTrainResult full = train_sensor(bundle, cfg);
  SensorConfig ablated_cfg = cfg;
  ablated_cfg.lambda_riot = 0.0;
  const SensorTrainResult no_riot = train_sensor(bundle, ablated_cfg);

  // Burst cells: positive trend and entropy above its median.
  const int nc = synth.n_channels, nt = synth.n_slots;
  std::vector<double> entropies;
  entropies.reserve(static_cast<std::size_t>(nc) * nt);
  for (int c = 0; c < nc; ++c) {
    for (int t = 0; t < nt; ++t) {
      entropies.push_back(donation_entropy(data.donations, c, t, cfg.window));
    }
  }
  std::vector<double> sorted = entropies;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2,
                   sorted.end());
  const double median = sorted[sorted.size() / 2];

  const Tensor3 tr_hat = full.model.reconstruct_responses();
  double burst_sum = 0.0, other_sum = 0.0;
  std::size_t burst_n = 0, other_n = 0;
  for (int c = 0; c < nc; ++c) {
    for (int t = 0; t < nt; ++t) {
      const bool burst =
          burst_trend(data.donations, c, t, cfg.window) > 0.0 &&
          entropies[static_cast<std::size_t>(c) * nt + t] > median;
      for (int v = 0; v < synth.n_viewers; ++v) {
        if (burst) {
          burst_sum += tr_hat(v, c, t);
          ++burst_n;
        } else {
          other_sum += tr_hat(v, c, t);
          ++other_n;
        }
      }
    }
  }
  const double burst_mean = burst_n ? burst_sum / burst_n : 0.0;
  const double other_mean = other_n ? other_sum / other_n : 0.0;

  auto test_rmse = [&](const SensorModel& model) {
    std::vector<double> predicted, actual;
    for (const DonationEvent& e : split.test_events) {
      const FeatureVector x =
          build_features(model, data.donations, e.viewer, e.channel, e.slot,
                         e.amount, e.message, e.fanlist_min, cfg.window);
      predicted.push_back(estimate_response(model.theta, x));
      actual.push_back(split.test_responses.at(e.viewer, e.channel, e.slot));
    }
    return rmse(predicted, actual);
  };
  const double rmse_full = test_rmse(full.model);
  const double rmse_ablated = test_rmse(no_riot.model);

  std::ostringstream out;
  out << "burst mean " << burst_mean << " vs other " << other_mean
      << "; test RMSE " << rmse_full << " vs ablated " << rmse_ablated;
  detail = out.str();
  return burst_n > 0 && other_n > 0 && burst_mean < other_mean &&
         rmse_full < rmse_ablated;
}

// ---------------------------------------------------------------------------
// 6. Coupled factorization against two independent fits at an equal total
//    step budget.
struct TuckerFit {
  Matrix viewers, channels, times;
  Tensor3 core;
};

TuckerFit fit_single_tucker(const EventTensor& observed, int alpha, double lr,
                            int epochs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  TuckerFit fit{Matrix(observed.n_viewers(), alpha),
                Matrix(observed.n_channels(), alpha),
                Matrix(observed.n_slots(), alpha),
                Tensor3(alpha, alpha, alpha)};
  for (double& x : fit.viewers.data()) x = u(rng);
  for (double& x : fit.channels.data()) x = u(rng);
  for (double& x : fit.times.data()) x = u(rng);
  for (double& x : fit.core.data()) x = u(rng);

  Matrix vt(alpha, observed.n_viewers());
  Matrix ct(alpha, observed.n_channels());
  Matrix tt(alpha, observed.n_slots());
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const Tensor3 recon =
        tucker_reconstruct(fit.core, fit.viewers, fit.channels, fit.times);
    Tensor3 upstream = recon;
    for (double& x : upstream.data()) x *= 2.0;
    for (const auto& [idx, x] : observed.entries()) {
      upstream(idx[0], idx[1], idx[2]) -= 2.0 * x;
    }
    const Tensor3 p = mode_n_product(
        mode_n_product(fit.core, fit.channels, 2), fit.times, 3);
    const Tensor3 q = mode_n_product(
        mode_n_product(fit.core, fit.viewers, 1), fit.times, 3);
    const Tensor3 r = mode_n_product(
        mode_n_product(fit.core, fit.viewers, 1), fit.channels, 2);
    Matrix gv(observed.n_viewers(), alpha);
    Matrix gc(observed.n_channels(), alpha);
    Matrix gt(observed.n_slots(), alpha);
    for (int v = 0; v < observed.n_viewers(); ++v) {
      for (int c = 0; c < observed.n_channels(); ++c) {
        for (int t = 0; t < observed.n_slots(); ++t) {
          const double g = upstream(v, c, t);
          if (g == 0.0) continue;
          for (int a = 0; a < alpha; ++a) {
            gv(v, a) += g * p(a, c, t);
            gc(c, a) += g * q(v, a, t);
            gt(t, a) += g * r(v, c, a);
          }
        }
      }
    }
    for (int i = 0; i < observed.n_viewers(); ++i) {
      for (int a = 0; a < alpha; ++a) vt(a, i) = fit.viewers(i, a);
    }
    for (int i = 0; i < observed.n_channels(); ++i) {
      for (int a = 0; a < alpha; ++a) ct(a, i) = fit.channels(i, a);
    }
    for (int i = 0; i < observed.n_slots(); ++i) {
      for (int a = 0; a < alpha; ++a) tt(a, i) = fit.times(i, a);
    }
    const Tensor3 gcore = mode_n_product(
        mode_n_product(mode_n_product(upstream, vt, 1), ct, 2), tt, 3);

    auto step = [&](std::vector<double>& xs, const std::vector<double>& gs) {
      for (std::size_t i = 0; i < xs.size(); ++i) xs[i] -= lr * gs[i];
    };
    step(fit.viewers.data(), gv.data());
    step(fit.channels.data(), gc.data());
    step(fit.times.data(), gt.data());
    step(fit.core.data(), gcore.data());
  }
  return fit;
}

bool criterion_coupled_vs_separate(std::string& detail) {
  // Dense enough that the planted low-rank structure dominates the fit.
  SynthConfig synth;
  synth.n_viewers = 40;
  synth.n_channels = 6;
  synth.n_slots = 80;
  synth.base_donation_rate = 0.15;
  synth.planted_influence = 0.01;
  synth.burst_rate = 0.0;
  synth.seed = 606;
  const SynthData data = generate(synth);

  const int alpha = 4;
  const double lr = 3e-4;
  const int total_epochs = 4000;

  // Coupled run: shared factors, both reconstruction terms, nothing else.
  TrainingData bundle = bundle_from(data);
  bundle.events.clear();
  SensorConfig cfg;
  cfg.alpha = alpha;
  cfg.emb_width = 16;
  cfg.lambda_ser = 0.0;
  cfg.lambda_star = 0.0;
  cfg.lambda_riot = 0.0;
  cfg.learning_rate = lr;
  cfg.epochs = total_epochs;
  cfg.seed = 17;
  const SensorTrainResult coupled = train_sensor(bundle, cfg);

  const double cells = static_cast<double>(data.donations.cell_count());
  const double coupled_loss =
      frob_sq_diff(data.donations, coupled.model.reconstruct_donations()) /
          cells +
      frob_sq_diff(data.responses, coupled.model.reconstruct_responses()) /
          cells;

  // Two independent fits, splitting the same step budget.
  const TuckerFit fit_d =
      fit_single_tucker(data.donations, alpha, lr, total_epochs / 2, 18);
  const TuckerFit fit_r =
      fit_single_tucker(data.responses, alpha, lr, total_epochs / 2, 19);
  const double separate_loss =
      frob_sq_diff(data.donations,
                   tucker_reconstruct(fit_d.core, fit_d.viewers,
                                      fit_d.channels, fit_d.times)) /
          cells +
      frob_sq_diff(data.responses,
                   tucker_reconstruct(fit_r.core, fit_r.viewers,
                                      fit_r.channels, fit_r.times)) /
          cells;

  // The coupled factorization stores exactly the shared-formula learnables.
  const long long stored = static_cast<long long>(
      coupled.model.factors.viewer_factors.data().size() +
      coupled.model.factors.channel_factors.data().size() +
      coupled.model.factors.time_factors.data().size() +
      coupled.model.factors.donation_core.data().size() +
      coupled.model.factors.response_core.data().size());
  const long long shared_formula =
      param_count(synth.n_viewers, synth.n_channels, synth.n_slots, alpha,
                  ParamVariant::shared);

  std::ostringstream out;
  out << "coupled per-cell loss " << coupled_loss << " vs separate "
      << separate_loss << "; factorization parameters " << stored
      << " == " << shared_formula;
  detail = out.str();
  return coupled_loss <= separate_loss && stored == shared_formula;
}

// ---------------------------------------------------------------------------
// 7. Ranking lift of the trained second phase over random ordering.
bool criterion_ranking_lift(std::string& detail) {
  const auto start = std::chrono::steady_clock::now();
  SynthConfig synth;
  synth.n_viewers = 100;
  synth.n_channels = 10;
  synth.n_slots = 200;
  synth.base_donation_rate = 0.01;
  synth.planted_influence = 0.03;
  synth.seed = 707;
  const SynthData data = generate(synth);

  TrainingData bundle = bundle_from(data);
  SensorConfig cfg;
  cfg.alpha = 8;
  cfg.emb_width = 16;
  cfg.window = 5;
  cfg.lambda_ser = 0.5;
  cfg.lambda_star = 0.1;
  cfg.lambda_riot = 0.5;
  cfg.learning_rate = 2e-5;
  cfg.epochs = 400;
  cfg.seed = 19;
  const SensorTrainResult sensor = train_sensor(bundle, cfg);

  const std::vector<BprPair> pairs =
      build_bpr_pairs(data.donations, data.msps);
  if (pairs.empty()) {
    detail = "no preference pairs";
    return false;
  }
  CarsConfig cars_cfg;
  cars_cfg.learning_rate = 0.02;
  cars_cfg.epochs = 300;
  cars_cfg.seed = 23;
  const CarsTrainResult cars =
      train_cars(sensor.model, data.msps, pairs, cars_cfg);

  std::vector<RankingCase> cases;
  for (const EvalCase& c : data.eval_cases) {
    const auto ranking =
        rank_msps(cars.params, sensor.model, c.viewer, c.candidates);
    RankingCase rc;
    for (const auto& [index, score] : ranking) {
      rc.ranked.push_back(static_cast<int>(index));
    }
    rc.relevant.push_back(c.relevant);
    cases.push_back(std::move(rc));
  }
  const double hr2 = hit_ratio_at_k(cases, 2);
  const double random_hr2 = 2.0 / 20.0;
  const double elapsed = seconds_since(start);

  std::ostringstream out;
  out << "HR@2 " << hr2 << " (need >= " << 2.0 * random_hr2
      << "), ranking loss " << cars.loss_trace.front() << " -> "
      << cars.final_loss << ", " << elapsed << " s";
  detail = out.str();
  return hr2 >= 2.0 * random_hr2 &&
         cars.final_loss < 0.5 * cars.loss_trace.front() && elapsed < 180.0;
}

// ---------------------------------------------------------------------------
// 8. Determinism, checkpoint round-trip, and the exact metric examples.
bool criterion_determinism(std::string& detail) {
  SynthConfig synth;
  synth.n_viewers = 20;
  synth.n_channels = 4;
  synth.n_slots = 40;
  synth.k = 2;
  synth.base_donation_rate = 0.02;
  synth.planted_influence = 0.08;
  synth.edge_prob = 0.15;
  synth.seed = 808;
  const SynthData data = generate(synth);
  const TrainingData bundle = bundle_from(data);

  SensorConfig cfg;
  cfg.alpha = 2;
  cfg.emb_width = 16;
  cfg.learning_rate = 1e-5;
  cfg.epochs = 30;
  cfg.seed = 29;
  const SensorTrainResult a = train_sensor(bundle, cfg);
  const SensorTrainResult b = train_sensor(bundle, cfg);
  if (a.loss_trace != b.loss_trace || !(a.model == b.model)) {
    detail = "sensor training not bit-deterministic";
    return false;
  }

  const std::vector<BprPair> pairs =
      build_bpr_pairs(data.donations, data.msps);
  if (!pairs.empty()) {
    CarsConfig cars_cfg;
    cars_cfg.epochs = 40;
    cars_cfg.seed = 31;
    const CarsTrainResult ca = train_cars(a.model, data.msps, pairs, cars_cfg);
    const CarsTrainResult cb = train_cars(a.model, data.msps, pairs, cars_cfg);
    if (ca.loss_trace != cb.loss_trace || !(ca.params == cb.params)) {
      detail = "ranking training not bit-deterministic";
      return false;
    }
  }

  const auto dir = std::filesystem::temp_directory_path() / "mars_acceptance";
  std::filesystem::create_directories(dir);
  const auto checkpoint = dir / "model.json";
  save_checkpoint(a.model, checkpoint);
  const SensorModel loaded = load_checkpoint(checkpoint);
  std::filesystem::remove_all(dir);
  if (!(loaded == a.model)) {
    detail = "checkpoint round trip not exact";
    return false;
  }

  // Metric unit examples, exactly as stated.
  const std::vector<double> zeros = {0.0, 0.0};
  const std::vector<double> target = {3.0, 4.0};
  if (rmse(zeros, target) != std::sqrt(25.0 / 2.0)) {
    detail = "rmse example failed";
    return false;
  }
  const std::vector<double> same = {1.0, 2.0};
  if (rmse(same, same) != 0.0 ||
      rmse(std::vector<double>{5.0}, std::vector<double>{3.0}) != 2.0) {
    detail = "rmse trivial examples failed";
    return false;
  }
  const RankingCase hit{{7, 3, 5}, {7}};
  const RankingCase miss{{3, 5, 7}, {7}};
  const std::vector<RankingCase> one = {hit};
  const std::vector<RankingCase> two = {hit, miss};
  if (hit_ratio_at_k(one, 1) != 1.0 ||
      hit_ratio_at_k(std::vector<RankingCase>{miss}, 2) != 0.0 ||
      hit_ratio_at_k(two, 2) != 0.5) {
    detail = "hit ratio examples failed";
    return false;
  }
  const std::vector<RankingCase> ap_top = {{{4, 1, 2}, {4}}};
  const std::vector<RankingCase> ap_second = {{{1, 4, 2}, {4}}};
  const std::vector<RankingCase> ap_absent = {{{1, 2, 3}, {9}}};
  if (map_at_k(ap_top, 3) != 1.0 || map_at_k(ap_second, 2) != 0.5 ||
      map_at_k(ap_absent, 2) != 0.0) {
    detail = "average precision examples failed";
    return false;
  }

  detail = "training bit-deterministic, round trip exact, metric examples hold";
  return true;
}

struct Criterion {
  int id;
  const char* name;
  std::function<bool(std::string&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "gradient correctness", criterion_gradients},
      {2, "oracle equivalence", criterion_oracles},
      {3, "parameter-count propositions", criterion_param_count},
      {4, "planted influence recovery", criterion_influence_recovery},
      {5, "burst suppression effect", criterion_burst_suppression},
      {6, "coupled vs separate factorization", criterion_coupled_vs_separate},
      {7, "ranking lift", criterion_ranking_lift},
      {8, "determinism and round-trip", criterion_determinism},
  };

  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);

  int failures = 0;
  for (const Criterion& criterion : criteria) {
    if (only != 0 && criterion.id != only) continue;
    std::string detail;
    bool ok = false;
    try {
      ok = criterion.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] criterion %d: %s — %s\n", ok ? "PASS" : "FAIL",
                criterion.id, criterion.name, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  return failures;
}
