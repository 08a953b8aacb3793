/*
 * Copyright 2026 The pfbench Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "pf/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pf/error.hpp"

namespace pf {
namespace {

double Dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Normalized copy and the original norm.
std::pair<std::vector<double>, double> Normalize(const std::vector<double>& v) {
  const double norm = std::sqrt(Dot(v, v));
  if (!(norm > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "cannot normalize a zero vector");
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / norm;
  return {out, norm};
}

// Pulls a gradient taken w.r.t. the unit vector u = v/|v| back to v.
std::vector<double> BackThroughNormalize(const std::vector<double>& g,
                                         const std::vector<double>& unit, double norm) {
  const double radial = Dot(g, unit);
  std::vector<double> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = (g[i] - unit[i] * radial) / norm;
  return out;
}

double Sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void CheckLayers(const FeatureStack& fx, const FeatureStack& fy) {
  if (fx.empty()) throw Error(ErrorCode::kEmptyLayerList, "empty feature stack");
  if (fx.size() != fy.size()) throw Error(ErrorCode::kShapeMismatch, "layer counts differ");
  for (std::size_t l = 0; l < fx.size(); ++l) {
    const auto& a = fx[l];
    const auto& b = fy[l];
    const std::size_t volume = static_cast<std::size_t>(a.h) * a.w * a.c;
    if (a.h != b.h || a.w != b.w || a.c != b.c || a.data.size() != volume ||
        b.data.size() != volume || a.h < 1 || a.w < 1 || a.c < 1) {
      throw Error(ErrorCode::kShapeMismatch,
                  "feature layer " + std::to_string(l) + " shapes differ");
    }
  }
}

}  // namespace

double InfoNceFromSimilarities(double positive, const std::vector<double>& negatives,
                               ContrastiveMode mode) {
  if (negatives.empty()) throw Error(ErrorCode::kInvalidArgument, "need >= 1 negative");
  std::vector<double> denom = negatives;
  if (mode == ContrastiveMode::kStandard) denom.push_back(positive);
  const auto max_it = std::max_element(denom.begin(), denom.end());
  const double m = *max_it;
  double rest = 0.0;
  for (auto it = denom.begin(); it != denom.end(); ++it) {
    if (it != max_it) rest += std::exp(*it - m);
  }
  // log sum exp(s_i) - s_+ with the largest term factored out.
  return (m - positive) + std::log1p(rest);
}

InfoNceResult InfoNce(const std::vector<double>& anchor,
                      const std::vector<double>& positive,
                      const std::vector<std::vector<double>>& negatives, double tau,
                      bool normalize, ContrastiveMode mode) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw Error(ErrorCode::kNonPositiveTemperature, "tau must be > 0");
  }
  if (negatives.empty()) throw Error(ErrorCode::kInvalidArgument, "need >= 1 negative");
  const std::size_t d = anchor.size();
  if (d == 0 || positive.size() != d ||
      std::any_of(negatives.begin(), negatives.end(),
                  [&](const auto& v) { return v.size() != d; })) {
    throw Error(ErrorCode::kDimensionMismatch, "embedding dimensions differ");
  }

  // Working vectors (unit or raw) and their norms for the backward pass.
  std::vector<std::vector<double>> vecs;
  std::vector<double> norms;
  vecs.reserve(negatives.size() + 2);
  const auto add = [&](const std::vector<double>& v) {
    if (normalize) {
      auto [u, n] = Normalize(v);
      vecs.push_back(std::move(u));
      norms.push_back(n);
    } else {
      vecs.push_back(v);
      norms.push_back(1.0);
    }
  };
  add(anchor);
  add(positive);
  for (const auto& n : negatives) add(n);

  const std::size_t k = negatives.size();
  std::vector<double> sims(k + 1);  // [0] positive, [1..k] negatives
  for (std::size_t i = 0; i <= k; ++i) sims[i] = Dot(vecs[0], vecs[i + 1]) / tau;

  InfoNceResult out;
  out.loss = InfoNceFromSimilarities(
      sims[0], std::vector<double>(sims.begin() + 1, sims.end()), mode);

  // Softmax over the denominator members.
  const std::size_t first = mode == ContrastiveMode::kStandard ? 0 : 1;
  const double m = *std::max_element(sims.begin() + static_cast<std::ptrdiff_t>(first), sims.end());
  std::vector<double> prob(k + 1, 0.0);
  double z = 0.0;
  for (std::size_t i = first; i <= k; ++i) {
    prob[i] = std::exp(sims[i] - m);
    z += prob[i];
  }
  for (double& p : prob) p /= z;
  std::vector<double> dsim = prob;  // dL/ds_i
  dsim[0] -= 1.0;

  std::vector<double> g_anchor(d, 0.0);
  std::vector<std::vector<double>> g_cand(k + 1, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i <= k; ++i) {
    const double coef = dsim[i] / tau;
    for (std::size_t j = 0; j < d; ++j) {
      g_anchor[j] += coef * vecs[i + 1][j];
      g_cand[i][j] = coef * vecs[0][j];
    }
  }
  if (normalize) {
    g_anchor = BackThroughNormalize(g_anchor, vecs[0], norms[0]);
    for (std::size_t i = 0; i <= k; ++i) {
      g_cand[i] = BackThroughNormalize(g_cand[i], vecs[i + 1], norms[i + 1]);
    }
  }
  out.grad_anchor = std::move(g_anchor);
  out.grad_positive = std::move(g_cand[0]);
  out.grad_negatives.assign(std::make_move_iterator(g_cand.begin() + 1),
                            std::make_move_iterator(g_cand.end()));
  return out;
}

TensorLoss L1Loss(const Tensor& x, const Tensor& y) {
  if (!x.same_shape(y) || x.size() != y.size()) {
    throw Error(ErrorCode::kShapeMismatch, "l1_loss: shapes differ");
  }
  if (x.size() == 0) throw Error(ErrorCode::kEmptyInput, "l1_loss: empty tensors");
  const double n = static_cast<double>(x.size());
  std::vector<double> abs(x.size());
  TensorLoss out{0.0, Tensor(x.shape)};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double diff = x.data[i] - y.data[i];
    abs[i] = std::fabs(diff);
    out.grad.data[i] = Sign(diff) / n;
  }
  out.loss = PairwiseSum(abs) / n;
  return out;
}

StackLoss PerceptualL1(const FeatureStack& fx, const FeatureStack& fy) {
  CheckLayers(fx, fy);
  StackLoss out;
  std::vector<double> per_layer;
  for (std::size_t l = 0; l < fx.size(); ++l) {
    const auto& a = fx[l];
    const auto& b = fy[l];
    const double area = static_cast<double>(a.h) * a.w;
    FeatureLayer g{a.h, a.w, a.c, std::vector<double>(a.data.size())};
    std::vector<double> abs(a.data.size());
    for (std::size_t i = 0; i < a.data.size(); ++i) {
      const double diff = a.data[i] - b.data[i];
      abs[i] = std::fabs(diff);
      g.data[i] = -Sign(diff) / area;
    }
    per_layer.push_back(PairwiseSum(abs) / area);
    out.grad.push_back(std::move(g));
  }
  out.loss = PairwiseSum(per_layer);
  return out;
}

AdversarialTerms Adversarial(const std::vector<double>& d_real,
                             const std::vector<double>& d_fake) {
  if (d_real.empty() || d_fake.empty()) {
    throw Error(ErrorCode::kEmptyInput, "adversarial terms need non-empty batches");
  }
  const auto check = [](const std::vector<double>& scores) {
    for (const double s : scores) {
      if (!(s > 0.0 && s < 1.0)) {
        throw Error(ErrorCode::kScoreOutOfRange,
                    "discriminator score " + std::to_string(s) + " outside (0, 1)");
      }
    }
  };
  check(d_real);
  check(d_fake);
  const double nr = static_cast<double>(d_real.size());
  const double nf = static_cast<double>(d_fake.size());
  AdversarialTerms out;
  std::vector<double> log_real(d_real.size()), log_not_fake(d_fake.size()),
      log_fake(d_fake.size());
  for (std::size_t i = 0; i < d_real.size(); ++i) {
    log_real[i] = std::log(d_real[i]);
    out.grad_disc_real.push_back(-1.0 / (nr * d_real[i]));
  }
  for (std::size_t i = 0; i < d_fake.size(); ++i) {
    log_not_fake[i] = std::log1p(-d_fake[i]);
    log_fake[i] = std::log(d_fake[i]);
    out.grad_disc_fake.push_back(1.0 / (nf * (1.0 - d_fake[i])));
    out.grad_gen_fake.push_back(-1.0 / (nf * d_fake[i]));
  }
  out.disc_objective = PairwiseSum(log_real) / nr + PairwiseSum(log_not_fake) / nf;
  out.disc_loss = -out.disc_objective;
  out.gen_loss = -PairwiseSum(log_fake) / nf;
  return out;
}

double TotalPretrainLoss(const PretrainTerms& t, const PretrainWeights& w) {
  for (const double v : {t.recon, t.enhance, t.cont, t.adv, t.perceptual}) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteTerm, "loss term is not finite");
  }
  return w.recon * t.recon + w.enhance * t.enhance + w.cont * t.cont + w.adv * t.adv +
         w.perceptual * t.perceptual;
}

}  // namespace pf
