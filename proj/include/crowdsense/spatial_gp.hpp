// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CROWDSENSE_SPATIAL_GP_HPP_
#define CROWDSENSE_SPATIAL_GP_HPP_

// Joint Gaussian model of received signal strength over user sites and a
// grid of map sites, with the entropy and mutual-information queries used to
// value a set of measurements.
//
// Sites are indexed in one fixed order: user sites 0..n-1 followed by grid
// sites n..n+m-1. The mean is taken to be zero everywhere, so every quantity
// except conditional_mean depends on the covariance alone.

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "crowdsense/errors.hpp"
#include "crowdsense/site_subset.hpp"

namespace crowdsense {

struct Location {
  double x = 0.0;  // km
  double y = 0.0;  // km

  friend bool operator==(const Location&, const Location&) = default;
};

inline double distance(const Location& a, const Location& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// Exponential covariance K(d) = sill * exp(-d / range).
struct KernelSpec {
  double sill = 15.5;   // dB^2
  double range = 0.7;   // km

  double operator()(double d) const { return sill * std::exp(-d / range); }

  void validate() const {
    if (!(sill > 0.0) || !std::isfinite(sill)) {
      throw std::invalid_argument("KernelSpec: sill must be positive");
    }
    if (!(range > 0.0) || !std::isfinite(range)) {
      throw std::invalid_argument("KernelSpec: range must be positive");
    }
  }
};

struct UserSite {
  Location location;
  double noise_variance = 0.0;  // dB^2
};

namespace detail {

inline constexpr double kLog2PiE = 2.8378770664093453;  // log(2*pi*e)

inline Eigen::MatrixXd gather(const Eigen::MatrixXd& m,
                              const std::vector<std::size_t>& idx) {
  const auto k = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd out(k, k);
  for (Eigen::Index c = 0; c < k; ++c) {
    for (Eigen::Index r = 0; r < k; ++r) {
      out(r, c) = m(static_cast<Eigen::Index>(idx[r]),
                    static_cast<Eigen::Index>(idx[c]));
    }
  }
  return out;
}

// log det of a symmetric positive-definite matrix via its Cholesky factor.
inline double log_det_spd(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() == 0) return 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw NumericalDegenerateError(std::string(what) +
                                   ": covariance block is not positive definite");
  }
  const auto& l = llt.matrixLLT();
  double s = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

}  // namespace detail

// Immutable after construction; safe to share read-only between threads.
class SiteField {
 public:
  // Jitter schedule, as multiples of K(0).
  static constexpr double kInitialJitter = 1e-8;
  static constexpr double kMaxJitter = 1e-4;

  SiteField(std::vector<UserSite> users, std::vector<Location> grid,
            KernelSpec kernel)
      : users_(std::move(users)), grid_(std::move(grid)), kernel_(kernel) {
    kernel_.validate();
    for (const auto& u : users_) {
      if (!std::isfinite(u.location.x) || !std::isfinite(u.location.y)) {
        throw std::invalid_argument("SiteField: non-finite user location");
      }
      if (!(u.noise_variance >= 0.0) || !std::isfinite(u.noise_variance)) {
        throw std::invalid_argument("SiteField: noise variance must be >= 0");
      }
    }
    for (const auto& g : grid_) {
      if (!std::isfinite(g.x) || !std::isfinite(g.y)) {
        throw std::invalid_argument("SiteField: non-finite grid location");
      }
    }
    BuildCovariance();
    Factorize();
  }

  std::size_t num_users() const { return users_.size(); }
  std::size_t num_grid() const { return grid_.size(); }
  std::size_t num_sites() const { return users_.size() + grid_.size(); }
  bool is_user_site(std::size_t i) const { return i < users_.size(); }

  const KernelSpec& kernel() const { return kernel_; }
  const std::vector<UserSite>& users() const { return users_; }
  const std::vector<Location>& grid() const { return grid_; }

  Location location(std::size_t i) const {
    return is_user_site(i) ? users_[i].location : grid_[i - users_.size()];
  }

  // Covariance entries exactly as given by the entry rule (no jitter).
  const Eigen::MatrixXd& covariance() const { return cov_; }
  double covariance(std::size_t i, std::size_t j) const {
    return cov_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

  // Diagonal jitter added before any factorization.
  double jitter() const { return jitter_; }

  // covariance() + jitter() * I.
  const Eigen::MatrixXd& working_covariance() const { return working_; }

  // Inverse of working_covariance().
  const Eigen::MatrixXd& precision() const { return precision_; }

 private:
  void BuildCovariance() {
    const auto n = static_cast<Eigen::Index>(num_sites());
    cov_.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Location li = location(static_cast<std::size_t>(i));
      for (Eigen::Index j = 0; j < i; ++j) {
        const double k = kernel_(distance(li, location(static_cast<std::size_t>(j))));
        cov_(i, j) = k;
        cov_(j, i) = k;
      }
      cov_(i, i) = kernel_(0.0);
      if (is_user_site(static_cast<std::size_t>(i))) {
        cov_(i, i) += users_[static_cast<std::size_t>(i)].noise_variance;
      }
    }
  }

  void Factorize() {
    const double k0 = kernel_(0.0);
    const auto n = cov_.rows();
    for (double scale = kInitialJitter; scale <= kMaxJitter * (1 + 1e-9);
         scale *= 10.0) {
      jitter_ = scale * k0;
      working_ = cov_;
      working_.diagonal().array() += jitter_;
      if (n == 0) {
        precision_.resize(0, 0);
        return;
      }
      Eigen::LLT<Eigen::MatrixXd> llt(working_);
      if (llt.info() == Eigen::Success) {
        precision_ = llt.solve(Eigen::MatrixXd::Identity(n, n));
        precision_ = 0.5 * (precision_ + precision_.transpose()).eval();
        return;
      }
    }
    const auto [a, b] = MostCorrelatedPair();
    std::ostringstream msg;
    msg << "covariance is not positive definite after maximum jitter; "
           "sites "
        << a << " and " << b << " are nearly indistinguishable";
    throw ModelDegenerateError(msg.str(), a, b);
  }

  std::pair<std::size_t, std::size_t> MostCorrelatedPair() const {
    std::pair<std::size_t, std::size_t> best{0, 0};
    double best_corr = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < cov_.rows(); ++i) {
      for (Eigen::Index j = 0; j < i; ++j) {
        const double c = cov_(i, j) / std::sqrt(cov_(i, i) * cov_(j, j));
        if (c > best_corr) {
          best_corr = c;
          best = {static_cast<std::size_t>(j), static_cast<std::size_t>(i)};
        }
      }
    }
    return best;
  }

  std::vector<UserSite> users_;
  std::vector<Location> grid_;
  KernelSpec kernel_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd working_;
  Eigen::MatrixXd precision_;
  double jitter_ = 0.0;
};

inline SiteField build_covariance(std::vector<UserSite> user_sites,
                                  std::vector<Location> grid_sites,
                                  const KernelSpec& kernel) {
  return SiteField(std::move(user_sites), std::move(grid_sites), kernel);
}

namespace detail {

inline void check_sites(const SiteField& field, const SiteSubset& s,
                        const char* what) {
  if (!s.empty() && s.members().back() >= field.num_sites()) {
    throw std::out_of_range(std::string(what) + ": site index out of range");
  }
}

inline void check_user_sites(const SiteField& field, const SiteSubset& s,
                             const char* what) {
  if (!s.empty() && s.members().back() >= field.num_users()) {
    throw std::out_of_range(std::string(what) + ": not a user site");
  }
}

inline Eigen::VectorXd cross_covariance(const SiteField& field,
                                        std::size_t target,
                                        const SiteSubset& given) {
  Eigen::VectorXd k(static_cast<Eigen::Index>(given.size()));
  for (std::size_t r = 0; r < given.size(); ++r) {
    k(static_cast<Eigen::Index>(r)) = field.covariance(given[r], target);
  }
  return k;
}

// Conditional variance of a site given `given`, entirely on the working
// (jittered) covariance. Entropy and MI queries use this form so that all of
// them describe the same Gaussian.
inline double working_conditional_variance(const SiteField& field,
                                           std::size_t target,
                                           const SiteSubset& given) {
  const auto& w = field.working_covariance();
  const auto t = static_cast<Eigen::Index>(target);
  if (given.empty()) return w(t, t);
  Eigen::LLT<Eigen::MatrixXd> llt(gather(w, given.members()));
  if (llt.info() != Eigen::Success) {
    throw NumericalDegenerateError("conditional variance: singular block");
  }
  Eigen::VectorXd k(static_cast<Eigen::Index>(given.size()));
  for (std::size_t r = 0; r < given.size(); ++r) {
    k(static_cast<Eigen::Index>(r)) = w(static_cast<Eigen::Index>(given[r]), t);
  }
  return w(t, t) - k.dot(llt.solve(k));
}

}  // namespace detail

// sigma_ii - Sigma_Ai^T Sigma_AA^{-1} Sigma_Ai. Only the inverted block carries
// the jitter, so an empty conditioning set returns sigma_ii exactly.
inline double conditional_variance(const SiteField& field, std::size_t target,
                                   const SiteSubset& given) {
  detail::check_sites(field, given, "conditional_variance");
  if (target >= field.num_sites()) {
    throw std::out_of_range("conditional_variance: target out of range");
  }
  if (given.contains(target)) {
    throw std::invalid_argument("conditional_variance: target is conditioned on");
  }
  const double prior = field.covariance(target, target);
  if (given.empty()) return prior;
  Eigen::LLT<Eigen::MatrixXd> llt(
      detail::gather(field.working_covariance(), given.members()));
  if (llt.info() != Eigen::Success) {
    throw NumericalDegenerateError("conditional_variance: singular block");
  }
  const Eigen::VectorXd k = detail::cross_covariance(field, target, given);
  return prior - k.dot(llt.solve(k));
}

// Posterior mean under the zero-mean prior: Sigma_Ai^T Sigma_AA^{-1} z_A.
inline double conditional_mean(const SiteField& field, std::size_t target,
                               const SiteSubset& given,
                               std::span<const double> measurements) {
  detail::check_sites(field, given, "conditional_mean");
  if (target >= field.num_sites()) {
    throw std::out_of_range("conditional_mean: target out of range");
  }
  if (measurements.size() != given.size()) {
    throw std::invalid_argument(
        "conditional_mean: one measurement per conditioning site required");
  }
  if (given.empty()) return 0.0;
  if (given.contains(target)) {
    throw std::invalid_argument("conditional_mean: target is conditioned on");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(
      detail::gather(field.working_covariance(), given.members()));
  if (llt.info() != Eigen::Success) {
    throw NumericalDegenerateError("conditional_mean: singular block");
  }
  Eigen::VectorXd z(static_cast<Eigen::Index>(measurements.size()));
  for (std::size_t r = 0; r < measurements.size(); ++r) {
    z(static_cast<Eigen::Index>(r)) = measurements[r];
  }
  const Eigen::VectorXd k = detail::cross_covariance(field, target, given);
  return k.dot(llt.solve(z));
}

// Joint differential entropy (nats) of the sites in `subset`.
inline double gaussian_entropy(const SiteField& field, const SiteSubset& subset) {
  if (subset.empty()) {
    throw std::invalid_argument("gaussian_entropy: subset must be non-empty");
  }
  detail::check_sites(field, subset, "gaussian_entropy");
  const double logdet = detail::log_det_spd(
      detail::gather(field.working_covariance(), subset.members()),
      "gaussian_entropy");
  return 0.5 * static_cast<double>(subset.size()) * detail::kLog2PiE +
         0.5 * logdet;
}

// MI(A) = H(Z_{V\A}) + H(Z_A) - H(Z_V), evaluated through the precision
// matrix P: H(Z_{V\A}) - H(Z_V) = -H(Z_A | Z_{V\A}) and Cov(Z_A | Z_{V\A}) is
// (P_AA)^{-1}, so MI(A) = 1/2 logdet(Sigma_AA) + 1/2 logdet(P_AA). Cost is
// O(|A|^3) per query once P is known.
inline double mutual_information(const SiteField& field, const SiteSubset& a) {
  detail::check_user_sites(field, a, "mutual_information");
  if (a.empty() || a.size() == field.num_sites()) return 0.0;
  const double logdet_cov = detail::log_det_spd(
      detail::gather(field.working_covariance(), a.members()),
      "mutual_information");
  const double logdet_prec = detail::log_det_spd(
      detail::gather(field.precision(), a.members()), "mutual_information");
  return 0.5 * (logdet_cov + logdet_prec);
}

// MI(i | A) = H(Z_i | Z_A) - H(Z_i | Z_{V \ (A u {i})}).
inline double marginal_mi(const SiteField& field, std::size_t i,
                          const SiteSubset& a) {
  detail::check_user_sites(field, a, "marginal_mi");
  if (i >= field.num_users()) {
    throw std::out_of_range("marginal_mi: not a user site");
  }
  if (a.contains(i)) {
    throw std::invalid_argument("marginal_mi: site already in the set");
  }
  const double given_a = detail::working_conditional_variance(field, i, a);

  const SiteSubset block = a.with(i);
  double given_rest;
  if (block.size() == field.num_sites()) {
    given_rest = field.working_covariance()(static_cast<Eigen::Index>(i),
                                            static_cast<Eigen::Index>(i));
  } else {
    // Cov(Z_C | Z_{V\C}) = (P_CC)^{-1}; read off the entry for i.
    Eigen::LLT<Eigen::MatrixXd> llt(
        detail::gather(field.precision(), block.members()));
    if (llt.info() != Eigen::Success) {
      throw NumericalDegenerateError("marginal_mi: singular precision block");
    }
    const auto pos = static_cast<Eigen::Index>(
        std::lower_bound(block.begin(), block.end(), i) - block.begin());
    Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(block.size()));
    e(pos) = 1.0;
    given_rest = llt.solve(e)(pos);
  }
  return 0.5 * (std::log(given_a) - std::log(given_rest));
}

}  // namespace crowdsense

#endif  // CROWDSENSE_SPATIAL_GP_HPP_
