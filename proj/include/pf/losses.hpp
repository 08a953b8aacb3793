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

#ifndef PF_LOSSES_HPP_
#define PF_LOSSES_HPP_

#include <vector>

#include "pf/tensor.hpp"

namespace pf {

enum class ContrastiveMode {
  // Positive included in the softmax denominator (bounded below by 0).
  kStandard,
  // Denominator sums over negatives only, as the bare formula is written.
  kNegativesOnly,
};

struct InfoNceResult {
  double loss = 0.0;
  std::vector<double> grad_anchor;
  std::vector<double> grad_positive;
  std::vector<std::vector<double>> grad_negatives;
};

// Loss from precomputed similarities (already divided by the temperature).
// Uses a max-shifted log-sum-exp.
double InfoNceFromSimilarities(double positive, const std::vector<double>& negatives,
                               ContrastiveMode mode = ContrastiveMode::kStandard);

// s_i = <a, v_i> / tau over the positive and every negative, rows
// unit-normalized first when `normalize` is set. Gradients are analytic.
InfoNceResult InfoNce(const std::vector<double>& anchor,
                      const std::vector<double>& positive,
                      const std::vector<std::vector<double>>& negatives, double tau,
                      bool normalize = true,
                      ContrastiveMode mode = ContrastiveMode::kStandard);

// mean |x - y|; grad is with respect to x (the gradient for y is its
// negation). The subgradient at exact ties is 0.
TensorLoss L1Loss(const Tensor& x, const Tensor& y);

struct StackLoss {
  double loss = 0.0;
  FeatureStack grad;  // with respect to fy
};

// sum_l 1/(H_l W_l) ||fx_l - fy_l||_1.
StackLoss PerceptualL1(const FeatureStack& fx, const FeatureStack& fy);

struct AdversarialTerms {
  // mean log D(real) + mean log(1 - D(fake)); the discriminator maximizes it.
  double disc_objective = 0.0;
  double disc_loss = 0.0;  // -disc_objective
  // Non-saturating generator loss, -mean log D(fake).
  double gen_loss = 0.0;
  std::vector<double> grad_disc_real;  // d disc_loss / d D(real)
  std::vector<double> grad_disc_fake;  // d disc_loss / d D(fake)
  std::vector<double> grad_gen_fake;   // d gen_loss / d D(fake)
};

// Scores must lie strictly inside (0, 1).
AdversarialTerms Adversarial(const std::vector<double>& d_real,
                             const std::vector<double>& d_fake);

struct PretrainTerms {
  double recon = 0.0;
  double enhance = 0.0;
  double cont = 0.0;
  double adv = 0.0;
  double perceptual = 0.0;
};

struct PretrainWeights {
  double recon = 1.0;
  double enhance = 1.0;
  double cont = 1.0;
  double adv = 1.0;
  double perceptual = 1.0;
};

double TotalPretrainLoss(const PretrainTerms& terms, const PretrainWeights& weights = {});

}  // namespace pf

#endif  // PF_LOSSES_HPP_
