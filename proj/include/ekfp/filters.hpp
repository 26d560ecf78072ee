// Copyright 2026 The ekfp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EKFP_FILTERS_HPP
#define EKFP_FILTERS_HPP

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "ekfp/games.hpp"
#include "ekfp/rng.hpp"

namespace ekfp::filters {

/// Gaussian belief over one opponent's latent propensity vector: the
/// propensity of action s drives the probability of s through a softmax link.
struct PropensityBelief {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  // Standard-normal prior over propensities: mean 0, identity covariance.
  static PropensityBelief initial(int n_actions) {
    return {Eigen::VectorXd::Zero(n_actions),
            Eigen::MatrixXd::Identity(n_actions, n_actions)};
  }

  int size() const { return static_cast<int>(mean.size()); }
};

struct FilterParams {
  double q = 0.01;       // state noise scale; process covariance is q*I
  double r = 0.1;        // observation noise scale
  double eps_var = 1e-5; // variance of the per-update perturbation of r
  double tau = 1.0;      // softmax temperature

  void validate() const {
    if (!(q >= 0.0) || !std::isfinite(q))
      throw std::invalid_argument("filter params: q must be >= 0");
    if (!(r > 0.0) || !std::isfinite(r))
      throw std::invalid_argument("filter params: r must be > 0");
    if (!(eps_var >= 0.0) || !std::isfinite(eps_var))
      throw std::invalid_argument("filter params: eps_var must be >= 0");
    if (!(tau > 0.0) || !std::isfinite(tau))
      throw std::invalid_argument("filter params: tau must be > 0");
  }
};

/// Count-based opponent model: weights accumulate observed action frequencies.
struct FrequencyBelief {
  std::vector<double> weights;

  static FrequencyBelief ones(int n_actions) {
    return {std::vector<double>(static_cast<std::size_t>(n_actions), 1.0)};
  }

  int size() const { return static_cast<int>(weights.size()); }
};

struct FilterDivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

// Softmax with max subtraction; the shift leaves the result unchanged and
// keeps every exponent <= 0. Uses std::exp per element: unlike vectorized
// exp kernels it underflows cleanly, so extreme propensity gaps yield an
// exactly degenerate strategy.
inline Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  double mx = logits.maxCoeff();
  Eigen::VectorXd e(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i)
    e(i) = std::exp(logits(i) - mx);
  return e / e.sum();
}

}  // namespace detail

/// Opponent strategy implied by estimated propensities: softmax(mean / tau).
inline games::MixedStrategy strategy_from_propensity(
    const Eigen::VectorXd& mean, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be > 0");
  Eigen::VectorXd sigma = detail::softmax(mean / tau);
  return games::MixedStrategy{
      std::vector<double>(sigma.data(), sigma.data() + sigma.size())};
}

/// Random-walk time update: mean unchanged, covariance inflated by q*I.
inline PropensityBelief predict(const PropensityBelief& belief,
                                const FilterParams& params) {
  params.validate();
  PropensityBelief out = belief;
  out.cov.diagonal().array() += params.q;
  return out;
}

/// Jacobian of strategy_from_propensity at `mean`:
/// (diag(sigma) - sigma*sigma^T) / tau. Every row sums to zero.
inline Eigen::MatrixXd softmax_jacobian(const Eigen::VectorXd& mean,
                                        double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be > 0");
  Eigen::VectorXd sigma = detail::softmax(mean / tau);
  Eigen::MatrixXd jac = -sigma * sigma.transpose();
  jac.diagonal() += sigma;
  return jac / tau;
}

/// Measurement update on a predicted belief after observing one action. The
/// observation is the one-hot action indicator; its noise covariance is
/// (r + eps) * I, where eps is the caller-supplied perturbation of r.
inline PropensityBelief update(const PropensityBelief& belief,
                               int observed_action, const FilterParams& params,
                               double eps) {
  params.validate();
  const int n = belief.size();
  if (observed_action < 0 || observed_action >= n)
    throw std::invalid_argument("observed action out of range");
  double z_scale = params.r + eps;
  if (!(z_scale > 0.0))
    throw std::invalid_argument("observation noise r + eps must stay > 0");

  Eigen::VectorXd sigma = detail::softmax(belief.mean / params.tau);
  Eigen::MatrixXd H = softmax_jacobian(belief.mean, params.tau);

  Eigen::VectorXd v = -sigma;
  v(observed_action) += 1.0;

  Eigen::MatrixXd S = H * belief.cov * H.transpose();
  S.diagonal().array() += z_scale;

  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success)
    throw FilterDivergenceError("innovation covariance not positive definite");

  // K = P H^T S^{-1}, computed as (S^{-1} H P)^T via the Cholesky factor.
  Eigen::MatrixXd K = llt.solve(H * belief.cov).transpose();

  PropensityBelief out;
  out.mean = belief.mean + K * v;
  out.cov = belief.cov - K * S * K.transpose();
  out.cov = ((out.cov + out.cov.transpose()) / 2.0).eval();
  return out;
}

/// Draws the observation-noise perturbation, redrawing while r + eps fails to
/// stay positive so the update precondition always holds.
inline double sample_epsilon(const FilterParams& params, RandomStream& rng) {
  params.validate();
  if (params.eps_var == 0.0) return 0.0;
  double sd = std::sqrt(params.eps_var);
  double eps = rng.normal(0.0, sd);
  while (!(params.r + eps > 0.0)) eps = rng.normal(0.0, sd);
  return eps;
}

/// Sign of the mean change per action for a 2-action update, from the
/// rank-one closed form. With u = (1,-1)^T the Jacobian is a*u*u^T with
/// a = sigma1*sigma2/tau, the gain is proportional to P*u = (c, -d) with
/// c = P(0,0)-P(0,1) and d = P(1,1)-P(0,1), and the innovation is a positive
/// multiple of -u (observing action 1) or +u (observing action 0). Only the
/// sign structure is exposed; the magnitude is left to the generic update.
inline std::array<int, 2> closed_form_2action_update_direction(
    const PropensityBelief& belief, int observed_action,
    const FilterParams& params) {
  params.validate();
  if (belief.size() != 2)
    throw std::invalid_argument("closed form applies to 2 actions only");
  if (observed_action < 0 || observed_action > 1)
    throw std::invalid_argument("observed action out of range");

  Eigen::VectorXd sigma = detail::softmax(belief.mean / params.tau);
  double a = sigma(0) * sigma(1) / params.tau;
  if (a == 0.0) return {0, 0};

  auto sign = [](double x) { return x > 0.0 ? 1 : (x < 0.0 ? -1 : 0); };
  double c = belief.cov(0, 0) - belief.cov(0, 1);
  double d = belief.cov(1, 1) - belief.cov(0, 1);
  if (observed_action == 1) return {-sign(c), sign(d)};
  return {sign(c), -sign(d)};
}

/// Adds one to the observed action's weight.
inline FrequencyBelief fp_update(const FrequencyBelief& belief,
                                 int observed_action) {
  if (observed_action < 0 || observed_action >= belief.size())
    throw std::invalid_argument("observed action out of range");
  FrequencyBelief out = belief;
  out.weights[static_cast<std::size_t>(observed_action)] += 1.0;
  return out;
}

/// Normalized weights as a mixed strategy.
inline games::MixedStrategy fp_strategy(const FrequencyBelief& belief) {
  double sum = 0.0;
  for (double w : belief.weights) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw std::invalid_argument("frequency weights must be >= 0");
    sum += w;
  }
  if (!(sum > 0.0))
    throw std::invalid_argument("frequency weights must have positive sum");
  games::MixedStrategy s{belief.weights};
  for (double& p : s.probs) p /= sum;
  return s;
}

/// Checks the belief invariants: covariance symmetric within `sym_tol`,
/// smallest eigenvalue at least `psd_tol` (a small negative slack).
inline bool belief_is_valid(const PropensityBelief& belief,
                            double sym_tol = 1e-12, double psd_tol = -1e-9) {
  if (belief.cov.rows() != belief.size() || belief.cov.cols() != belief.size())
    return false;
  if (!belief.mean.allFinite() || !belief.cov.allFinite()) return false;
  double asym = (belief.cov - belief.cov.transpose()).cwiseAbs().maxCoeff();
  if (asym > sym_tol) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      belief.cov, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= psd_tol;
}

// --- JSON interface ---------------------------------------------------------
//
// { "mean": [...], "cov": [...] }   cov flattened row-major

inline nlohmann::json belief_to_json(const PropensityBelief& belief) {
  nlohmann::json j;
  j["mean"] = std::vector<double>(belief.mean.data(),
                                  belief.mean.data() + belief.mean.size());
  std::vector<double> cov;
  cov.reserve(static_cast<std::size_t>(belief.cov.size()));
  for (Eigen::Index i = 0; i < belief.cov.rows(); ++i)
    for (Eigen::Index k = 0; k < belief.cov.cols(); ++k)
      cov.push_back(belief.cov(i, k));
  j["cov"] = std::move(cov);
  return j;
}

inline FilterParams params_from_json(const nlohmann::json& j) {
  FilterParams p;
  p.q = j.value("q", p.q);
  p.r = j.value("r", p.r);
  p.eps_var = j.value("eps_var", p.eps_var);
  p.tau = j.value("tau", p.tau);
  p.validate();
  return p;
}

inline nlohmann::json params_to_json(const FilterParams& p) {
  return {{"q", p.q}, {"r", p.r}, {"eps_var", p.eps_var}, {"tau", p.tau}};
}

inline PropensityBelief belief_from_json(const nlohmann::json& j) {
  auto mean = j.at("mean").get<std::vector<double>>();
  auto cov = j.at("cov").get<std::vector<double>>();
  auto n = static_cast<Eigen::Index>(mean.size());
  if (cov.size() != mean.size() * mean.size())
    throw std::invalid_argument("belief json: cov must be n*n");
  PropensityBelief b;
  b.mean = Eigen::Map<Eigen::VectorXd>(mean.data(), n);
  b.cov.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k)
      b.cov(i, k) = cov[static_cast<std::size_t>(i * n + k)];
  return b;
}

}  // namespace ekfp::filters

#endif  // EKFP_FILTERS_HPP
