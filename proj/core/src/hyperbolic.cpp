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

#include "amlwb/hyperbolic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "amlwb/error.hpp"
#include "amlwb/rng.hpp"

namespace amlwb::hyperbolic {

namespace {

void check_inside(std::span<const double> x, const char* what) {
  double sq = squared_norm(x);
  if (!(sq < 1.0)) {
    throw OutsideBallError(std::string(what) + " has norm " +
                           std::to_string(std::sqrt(sq)) +
                           ", expected < 1");
  }
}

double diff_squared(std::span<const double> u, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    double d = u[i] - v[i];
    s += d * d;
  }
  return s;
}

}  // namespace

double squared_norm(std::span<const double> x) {
  double s = 0.0;
  for (double c : x) s += c * c;
  return s;
}

BallPoint::BallPoint(std::vector<double> coords, double eps)
    : coords_(std::move(coords)) {
  if (norm() > 1.0 - eps) {
    throw OutsideBallError("ball point norm " + std::to_string(norm()) +
                           " exceeds 1 - eps");
  }
}

double BallPoint::norm() const { return std::sqrt(squared_norm(coords_)); }

double EmbeddingMatrix::max_norm() const {
  double best = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) {
    best = std::max(best, squared_norm(row(i)));
  }
  return std::sqrt(best);
}

double poincare_distance(std::span<const double> u,
                         std::span<const double> v) {
  if (u.size() != v.size()) {
    throw std::invalid_argument("poincare_distance: dimension mismatch");
  }
  check_inside(u, "u");
  check_inside(v, "v");
  double alpha = 1.0 - squared_norm(u);
  double beta = 1.0 - squared_norm(v);
  double z = diff_squared(u, v) / (alpha * beta);
  return 2.0 * std::asinh(std::sqrt(z));
}

bool distance_with_gradient(std::span<const double> u,
                            std::span<const double> v, double& distance,
                            std::span<double> grad_u,
                            std::span<double> grad_v) noexcept {
  double uu = squared_norm(u);
  double vv = squared_norm(v);
  double uv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) uv += u[i] * v[i];
  double alpha = 1.0 - uu;
  double beta = 1.0 - vv;
  double z = diff_squared(u, v) / (alpha * beta);
  if (!(z > 0.0)) return false;

  // gamma = 1 + 2z, sqrt(gamma^2 - 1) = 2 sqrt(z (1 + z)).
  double root = 2.0 * std::sqrt(z * (1.0 + z));
  double cu = 4.0 / (beta * root);
  double cv = 4.0 / (alpha * root);
  double su = (vv - 2.0 * uv + 1.0) / (alpha * alpha);
  double sv = (uu - 2.0 * uv + 1.0) / (beta * beta);
  for (std::size_t i = 0; i < u.size(); ++i) {
    grad_u[i] = cu * (su * u[i] - v[i] / alpha);
    grad_v[i] = cv * (sv * v[i] - u[i] / beta);
  }
  distance = 2.0 * std::asinh(std::sqrt(z));
  return true;
}

DistanceGradients distance_gradient(std::span<const double> u,
                                    std::span<const double> v) {
  if (u.size() != v.size()) {
    throw std::invalid_argument("distance_gradient: dimension mismatch");
  }
  check_inside(u, "u");
  check_inside(v, "v");
  DistanceGradients out{std::vector<double>(u.size()),
                        std::vector<double>(v.size())};
  double d = 0.0;
  if (!distance_with_gradient(u, v, d, out.wrt_u, out.wrt_v)) {
    throw DegeneratePairError(
        "distance gradient undefined for coincident points");
  }
  return out;
}

double riemannian_factor(std::span<const double> theta) {
  double a = 1.0 - squared_norm(theta);
  return a * a / 4.0;
}

std::vector<double> riemannian_rescale(std::span<const double> theta,
                                       std::span<const double> euclidean_grad) {
  if (theta.size() != euclidean_grad.size()) {
    throw std::invalid_argument("riemannian_rescale: dimension mismatch");
  }
  check_inside(theta, "theta");
  double f = riemannian_factor(theta);
  std::vector<double> out(euclidean_grad.begin(), euclidean_grad.end());
  for (double& g : out) g *= f;
  return out;
}

void project_into_ball_inplace(std::span<double> p, double eps) noexcept {
  const double limit = 1.0 - eps;
  double norm = std::sqrt(squared_norm(p));
  if (norm <= limit) return;
  double scale = limit / norm;
  for (double& c : p) c *= scale;
  // The rescaled norm can land one ulp above the limit.
  while (std::sqrt(squared_norm(p)) > limit) {
    for (double& c : p) c = std::nextafter(c, 0.0);
  }
}

BallPoint project_into_ball(std::span<const double> p, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) {
    throw std::invalid_argument("project_into_ball: eps must be in (0, 1)");
  }
  std::vector<double> out(p.begin(), p.end());
  project_into_ball_inplace(out, eps);
  return BallPoint(std::move(out), eps);
}

EmbeddingMatrix random_init(std::size_t n, std::size_t dim, double stddev,
                            std::uint64_t seed, double eps) {
  if (n == 0 || dim == 0 || !(stddev > 0.0)) {
    throw ConfigError("random_init requires n > 0, dim > 0, stddev > 0");
  }
  EmbeddingMatrix m(n, dim);
  Rng rng(seed);
  for (double& c : m.data()) c = rng.normal(0.0, stddev);
  for (std::size_t i = 0; i < n; ++i) project_into_ball_inplace(m.row(i), eps);
  return m;
}

}  // namespace amlwb::hyperbolic
