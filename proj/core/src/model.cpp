#include "mars/model.hpp"

#include <string>

namespace mars {

ViewerGraph::ViewerGraph(int n_viewers) : n_viewers_(n_viewers) {
  if (n_viewers < 0) {
    throw std::invalid_argument("ViewerGraph: negative viewer count");
  }
}

void ViewerGraph::add_edge(int u, int v) {
  if (u < 0 || u >= n_viewers_ || v < 0 || v >= n_viewers_) {
    throw std::out_of_range("ViewerGraph: viewer index out of range");
  }
  if (u == v) {
    throw std::invalid_argument("ViewerGraph: self-loops are not allowed");
  }
  edges_.insert({std::min(u, v), std::max(u, v)});
}

bool ViewerGraph::has_edge(int u, int v) const {
  if (u == v) return false;
  return edges_.contains({std::min(u, v), std::max(u, v)});
}

SignedStreamerMatrix::SignedStreamerMatrix(int n_channels)
    : n_channels_(n_channels) {
  if (n_channels < 0) {
    throw std::invalid_argument("SignedStreamerMatrix: negative channel count");
  }
  values_.assign(static_cast<std::size_t>(n_channels) * n_channels, 0);
}

void SignedStreamerMatrix::check_index(int i, int j) const {
  if (i < 0 || i >= n_channels_ || j < 0 || j >= n_channels_) {
    throw std::out_of_range("SignedStreamerMatrix: index out of range");
  }
}

void SignedStreamerMatrix::set(int i, int j, int sign) {
  check_index(i, j);
  if (sign < -1 || sign > 1) {
    throw std::invalid_argument(
        "SignedStreamerMatrix: entries must be -1, 0 or +1");
  }
  if (i == j && sign != 0) {
    throw std::invalid_argument("SignedStreamerMatrix: diagonal is fixed at 0");
  }
  values_[static_cast<std::size_t>(i) * n_channels_ + j] = sign;
}

int SignedStreamerMatrix::at(int i, int j) const {
  check_index(i, j);
  return values_[static_cast<std::size_t>(i) * n_channels_ + j];
}

void SensorModel::validate() const {
  const int alpha = factors.alpha;
  if (alpha < 1) throw std::invalid_argument("SensorModel: alpha must be >= 1");
  auto expect = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("SensorModel: ") + what);
  };
  expect(factors.viewer_factors.cols() == alpha, "viewer factor width != alpha");
  expect(factors.channel_factors.cols() == alpha,
         "channel factor width != alpha");
  expect(factors.time_factors.cols() == alpha, "time factor width != alpha");
  expect(factors.donation_core.n1() == alpha &&
             factors.donation_core.n2() == alpha &&
             factors.donation_core.n3() == alpha,
         "donation core is not alpha^3");
  expect(factors.response_core.n1() == alpha &&
             factors.response_core.n2() == alpha &&
             factors.response_core.n3() == alpha,
         "response core is not alpha^3");
  expect(social_influence.rows() == n_viewers() &&
             social_influence.cols() == n_viewers(),
         "social influence is not |V| x |V|");
  expect(decay >= 0.0, "decay must be nonnegative");
  expect(emb_width >= 0, "embedding width must be nonnegative");
}

void SensorConfig::validate() const {
  if (alpha < 1) throw std::invalid_argument("SensorConfig: alpha must be >= 1");
  if (window < 1) {
    throw std::invalid_argument("SensorConfig: window must be >= 1");
  }
  if (lambda_ser < 0 || lambda_star < 0 || lambda_riot < 0) {
    throw std::invalid_argument("SensorConfig: lambdas must be nonnegative");
  }
  if (!(learning_rate > 0)) {
    throw std::invalid_argument("SensorConfig: learning rate must be positive");
  }
  if (emb_width < 0) {
    throw std::invalid_argument("SensorConfig: embedding width must be >= 0");
  }
  if (zero_sample_per_nnz < 1) {
    throw std::invalid_argument(
        "SensorConfig: zero_sample_per_nnz must be >= 1");
  }
}

}  // namespace mars
