// Copyright 2026 The AML Workbench Authors
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

// Poincare-ball geometry: distance, its Euclidean gradient, the Riemannian
// metric rescaling and the retraction back into the open unit ball.
//
// All functions are pure. Dimension is a runtime property of the inputs;
// the workbench uses 3 throughout.

#ifndef AMLWB_HYPERBOLIC_HPP_
#define AMLWB_HYPERBOLIC_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace amlwb::hyperbolic {

inline constexpr double kDefaultBallEps = 1e-5;
inline constexpr std::size_t kDefaultDim = 3;

double squared_norm(std::span<const double> x);

/// A point with Euclidean norm <= 1 - eps.
class BallPoint {
 public:
  BallPoint() = default;
  /// Throws OutsideBallError if the norm exceeds 1 - eps.
  explicit BallPoint(std::vector<double> coords,
                     double eps = kDefaultBallEps);

  std::span<const double> coords() const { return coords_; }
  std::size_t dim() const { return coords_.size(); }
  double operator[](std::size_t i) const { return coords_[i]; }
  double norm() const;

  friend bool operator==(const BallPoint&, const BallPoint&) = default;

 private:
  std::vector<double> coords_;
};

/// Row-major n x dim matrix of ball points. Mutated only by training.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t dim)
      : rows_(rows), dim_(dim), data_(rows * dim, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }

  std::span<double> row(std::size_t i) {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  BallPoint point(std::size_t i) const {
    auto r = row(i);
    return BallPoint({r.begin(), r.end()});
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  double max_norm() const;

  friend bool operator==(const EmbeddingMatrix&,
                         const EmbeddingMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

/// d(u,v) = arcosh(1 + 2|u-v|^2 / ((1-|u|^2)(1-|v|^2))), evaluated as
/// 2 asinh(sqrt(|u-v|^2 / ((1-|u|^2)(1-|v|^2)))) which is exact at u = v and
/// keeps full precision for nearby points.
///
/// Throws OutsideBallError if either norm is >= 1, and std::invalid_argument
/// on dimension mismatch.
double poincare_distance(std::span<const double> u, std::span<const double> v);
inline double poincare_distance(const BallPoint& u, const BallPoint& v) {
  return poincare_distance(u.coords(), v.coords());
}

struct DistanceGradients {
  std::vector<double> wrt_u;
  std::vector<double> wrt_v;
};

/// Euclidean gradients of poincare_distance with respect to both arguments.
/// Throws DegeneratePairError when u == v, where the distance is not
/// differentiable.
DistanceGradients distance_gradient(std::span<const double> u,
                                    std::span<const double> v);

/// Unchecked kernel used by the trainer: writes both gradients and returns
/// true, or returns false (outputs untouched) for a coincident pair. Inputs
/// must already be inside the ball.
bool distance_with_gradient(std::span<const double> u,
                            std::span<const double> v, double& distance,
                            std::span<double> grad_u,
                            std::span<double> grad_v) noexcept;

/// (1 - |theta|^2)^2 / 4, the inverse metric factor.
double riemannian_factor(std::span<const double> theta);

std::vector<double> riemannian_rescale(std::span<const double> theta,
                                       std::span<const double> euclidean_grad);

/// Rescales p onto the sphere of radius 1 - eps when it lies outside; the
/// direction is preserved. Throws std::invalid_argument unless 0 < eps < 1.
BallPoint project_into_ball(std::span<const double> p,
                            double eps = kDefaultBallEps);
void project_into_ball_inplace(std::span<double> p,
                               double eps = kDefaultBallEps) noexcept;

/// n x dim matrix with i.i.d. N(0, stddev^2) entries drawn from
/// Rng(seed).normal(), then projected into the ball.
EmbeddingMatrix random_init(std::size_t n, std::size_t dim, double stddev,
                            std::uint64_t seed, double eps = kDefaultBallEps);

}  // namespace amlwb::hyperbolic

#endif  // AMLWB_HYPERBOLIC_HPP_
