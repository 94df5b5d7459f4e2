// Copyright 2026 The cmdp-lsvi Authors. All Rights Reserved.
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

// Small dense linear algebra used by the agent: feature vectors, the running
// inverse of a ridge-regularized Gram matrix, and least-squares solves against
// it. Everything is 64-bit floating point.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cmdp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Slack allowed above unit Euclidean norm for a feature vector.
inline constexpr double kFeatureNormSlack = 1e-9;

/// A feature vector phi(x, a) with Euclidean norm at most one.
class FeatureVector {
  public:
    FeatureVector() = default;

    explicit FeatureVector(Vector entries) : entries_(std::move(entries)) {
        if (entries_.size() < 1)
            throw std::invalid_argument("FeatureVector: dimension must be >= 1");
        const double norm = entries_.norm();
        if (!std::isfinite(norm) || norm > 1.0 + kFeatureNormSlack)
            throw std::invalid_argument("FeatureVector: Euclidean norm " + std::to_string(norm) +
                                        " exceeds 1");
    }

    static FeatureVector one_hot(Eigen::Index dim, Eigen::Index index) {
        if (index < 0 || index >= dim)
            throw std::out_of_range("FeatureVector::one_hot: index out of range");
        Vector v = Vector::Zero(dim);
        v[index] = 1.0;
        return FeatureVector(std::move(v));
    }

    const Vector& values() const { return entries_; }
    Eigen::Index dim() const { return entries_.size(); }
    double operator[](Eigen::Index i) const { return entries_[i]; }

    friend bool operator==(const FeatureVector& a, const FeatureVector& b) {
        return a.entries_.size() == b.entries_.size() && a.entries_ == b.entries_;
    }

  private:
    Vector entries_;
};

/**
 * Inverse of the regularized Gram matrix  Lambda = sum_t phi_t phi_t^T + lambda I.
 *
 * Only the inverse is stored. Each new sample is folded in with a
 * Sherman-Morrison rank-one update in O(d^2), after which the matrix is
 * symmetrized by averaging with its transpose.
 */
class GramInverse {
  public:
    GramInverse(Eigen::Index dim, double lambda_reg) : lambda_reg_(lambda_reg) {
        if (dim < 1) throw std::invalid_argument("GramInverse: dimension must be >= 1");
        if (!(lambda_reg > 0.0) || !std::isfinite(lambda_reg))
            throw std::invalid_argument("GramInverse: lambda_reg must be positive");
        inv_ = Matrix::Identity(dim, dim) / lambda_reg;
        scratch_.resize(dim);
    }

    void rank_one_update(const Vector& phi) {
        check_dim(phi);
        scratch_.noalias() = inv_ * phi;
        const double denom = 1.0 + phi.dot(scratch_);
        inv_.noalias() -= (scratch_ / denom) * scratch_.transpose();
        // symmetrize in place
        const Eigen::Index d = inv_.rows();
        for (Eigen::Index i = 0; i < d; ++i) {
            for (Eigen::Index j = i + 1; j < d; ++j) {
                const double avg = 0.5 * (inv_(i, j) + inv_(j, i));
                inv_(i, j) = avg;
                inv_(j, i) = avg;
            }
        }
        ++samples_;
    }
    void rank_one_update(const FeatureVector& phi) { rank_one_update(phi.values()); }

    /// phi^T Lambda^{-1} phi, clamped at zero against round-off.
    double quadratic_form(const Vector& phi) const {
        check_dim(phi);
        return std::max(0.0, phi.dot(inv_ * phi));
    }

    const Matrix& inverse() const { return inv_; }
    double lambda_reg() const { return lambda_reg_; }
    Eigen::Index dim() const { return inv_.rows(); }
    long samples() const { return samples_; }

  private:
    void check_dim(const Vector& phi) const {
        if (phi.size() != inv_.rows())
            throw std::invalid_argument("GramInverse: feature dimension mismatch");
    }

    Matrix inv_;
    Vector scratch_;
    double lambda_reg_;
    long samples_ = 0;
};

inline GramInverse gram_inverse_init(Eigen::Index dim, double lambda_reg) {
    return GramInverse(dim, lambda_reg);
}

inline GramInverse gram_inverse_rank_one_update(GramInverse g, const FeatureVector& phi) {
    g.rank_one_update(phi);
    return g;
}

/// Unscaled exploration bonus sqrt(phi^T Lambda^{-1} phi).
inline double bonus_quadratic_form(const GramInverse& g, const Vector& phi) {
    return std::sqrt(g.quadratic_form(phi));
}
inline double bonus_quadratic_form(const GramInverse& g, const FeatureVector& phi) {
    return bonus_quadratic_form(g, phi.values());
}

enum class Objective { reward, utility };

/// Right-hand sides  sum_t phi_t * y_t  of the two ridge regressions.
struct RidgeAccumulator {
    Vector reward_targets;
    Vector utility_targets;
    long samples = 0;

    explicit RidgeAccumulator(Eigen::Index dim)
        : reward_targets(Vector::Zero(dim)), utility_targets(Vector::Zero(dim)) {}

    void add(const Vector& phi, double reward_target, double utility_target) {
        reward_targets.noalias() += reward_target * phi;
        utility_targets.noalias() += utility_target * phi;
        ++samples;
    }
    void add(const FeatureVector& phi, double reward_target, double utility_target) {
        add(phi.values(), reward_target, utility_target);
    }

    const Vector& targets(Objective objective) const {
        return objective == Objective::reward ? reward_targets : utility_targets;
    }
};

/// Ridge-regression weights Lambda^{-1} * sum_t phi_t y_t.
inline Vector ridge_solve(const GramInverse& g, const Vector& target_sums) {
    if (target_sums.size() != g.dim())
        throw std::invalid_argument("ridge_solve: dimension mismatch");
    return g.inverse() * target_sums;
}
inline Vector ridge_solve(const GramInverse& g, const RidgeAccumulator& acc, Objective objective) {
    return ridge_solve(g, acc.targets(objective));
}

}  // namespace cmdp
