#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "coadapt/autodiff.hpp"

namespace coadapt::testing {

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols,
                            std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = u(rng);
  }
  return m;
}

// Relative error |g - fd| / max(|g| + |fd|, floor), worst entry.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) /
         std::max(std::abs(analytic) + std::abs(numeric), floor);
}

// Central differences at h on a scalar function of `param`'s value.
inline Matrix central_differences(Var& param, const std::function<double()>& f,
                                  double h = 1e-5) {
  Matrix fd(param.rows(), param.cols());
  for (Eigen::Index i = 0; i < param.value().size(); ++i) {
    double& x = param.mutable_value().data()[i];
    const double saved = x;
    x = saved + h;
    const double up = f();
    x = saved - h;
    const double down = f();
    x = saved;
    fd.data()[i] = (up - down) / (2.0 * h);
  }
  return fd;
}

// Worst relative error between the tape gradient and central differences of
// build(p) with respect to p, starting at `at`.
inline double max_relative_error(const Matrix& at,
                                 const std::function<Var(const Var&)>& build,
                                 double h = 1e-5) {
  Var p = Var::parameter(at, "p");
  build(p).backward();
  const Matrix analytic = p.grad();
  const Matrix numeric = central_differences(p, [&] { return build(p).scalar(); }, h);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    worst = std::max(worst, relative_error(analytic.data()[i], numeric.data()[i]));
  }
  return worst;
}

}  // namespace coadapt::testing

namespace coadapt::testing {

// Worst relative error over every entry of `params` between backward() of
// build() and central differences of build().scalar().
inline double max_parameter_error(const std::vector<Var>& params,
                                  const std::function<Var()>& build,
                                  double h = 1e-5) {
  for (auto p : params) p.zero_grad();
  build().backward();
  double worst = 0.0;
  for (auto p : params) {
    const Matrix analytic = p.grad();
    const Matrix numeric = central_differences(p, [&] { return build().scalar(); }, h);
    for (Eigen::Index i = 0; i < analytic.size(); ++i) {
      worst = std::max(worst, relative_error(analytic.data()[i], numeric.data()[i]));
    }
  }
  for (auto p : params) p.zero_grad();
  return worst;
}

// Largest absolute gradient entry that build() leaves on `params`.
inline double max_abs_gradient(const std::vector<Var>& params,
                               const std::function<Var()>& build) {
  for (auto p : params) p.zero_grad();
  build().backward();
  double worst = 0.0;
  for (const auto& p : params) worst = std::max(worst, p.grad().cwiseAbs().maxCoeff());
  for (auto p : params) p.zero_grad();
  return worst;
}

}  // namespace coadapt::testing
