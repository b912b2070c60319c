#include "eduopt/optimizer.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "eduopt/error.hpp"
#include "eduopt/random.hpp"

namespace eduopt {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct BudgetExhausted {};

// Objective in unit-box coordinates with evaluation accounting.
class Scaled {
 public:
  Scaled(const Objective& f, VectorXd lo, VectorXd hi, int budget, MinimizeResult& out)
      : f_(f), lo_(std::move(lo)), hi_(std::move(hi)), budget_(budget), out_(out) {}

  double operator()(const VectorXd& u, int restart) {
    if (out_.evaluations >= budget_) throw BudgetExhausted{};
    const VectorXd x = to_x(u);
    const double v = f_(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
    if (!std::isfinite(v)) fail(ErrorCode::Numeric, "objective returned a non-finite value");
    ++out_.evaluations;
    if (out_.x.empty() || v < out_.value) {
      out_.value = v;
      out_.x.assign(x.data(), x.data() + x.size());
      best_u_ = u;
    }
    out_.trace.push_back({out_.evaluations, restart, v, out_.value});
    return v;
  }

  VectorXd to_x(const VectorXd& u) const {
    VectorXd x = lo_ + u.cwiseProduct(hi_ - lo_);
    return x.cwiseMax(lo_).cwiseMin(hi_);
  }
  VectorXd to_u(const VectorXd& x) const {
    VectorXd u(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) u[i] = hi_[i] > lo_[i] ? (x[i] - lo_[i]) / (hi_[i] - lo_[i]) : 0.0;
    return u;
  }
  const VectorXd& best_u() const { return best_u_; }

 private:
  const Objective& f_;
  VectorXd lo_, hi_;
  int budget_;
  MinimizeResult& out_;
  VectorXd best_u_;
};

// Approximately minimize g's + s'Hs/2 over |s| <= delta and 0 <= c+s <= 1
// by conjugate gradients, fixing variables as they reach a bound.
VectorXd box_trust_step(const VectorXd& g, const MatrixXd& H, double delta, const VectorXd& c) {
  const Eigen::Index n = g.size();
  VectorXd s = VectorXd::Zero(n);
  std::vector<bool> fixed(static_cast<std::size_t>(n), false);
  for (Eigen::Index i = 0; i < n; ++i)
    if ((c[i] <= 0.0 && g[i] > 0.0) || (c[i] >= 1.0 && g[i] < 0.0)) fixed[static_cast<std::size_t>(i)] = true;
  auto project = [&](VectorXd v) {
    for (Eigen::Index i = 0; i < n; ++i)
      if (fixed[static_cast<std::size_t>(i)]) v[i] = 0.0;
    return v;
  };
  for (Eigen::Index outer = 0; outer <= n; ++outer) {
    VectorXd r = project(-(g + H * s));
    VectorXd d = r;
    bool restart = false;
    for (Eigen::Index it = 0; it < 2 * n + 2; ++it) {
      const double rr = r.squaredNorm();
      if (rr <= 1e-30 || d.squaredNorm() == 0.0) return s;
      const double dd = d.squaredNorm(), sd = s.dot(d), ss = s.squaredNorm();
      const double alpha_tr = (-sd + std::sqrt(std::max(0.0, sd * sd + dd * (delta * delta - ss)))) / dd;
      double alpha_b = std::numeric_limits<double>::infinity();
      Eigen::Index hit = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (d[i] == 0.0) continue;
        const double room = d[i] > 0.0 ? (1.0 - c[i] - s[i]) / d[i] : (-c[i] - s[i]) / d[i];
        if (room < alpha_b) {
          alpha_b = std::max(0.0, room);
          hit = i;
        }
      }
      const double dHd = d.dot(H * d);
      const double alpha_cg = dHd > 0.0 ? r.dot(d) / dHd : std::numeric_limits<double>::infinity();
      const double alpha = std::min({alpha_cg, alpha_tr, alpha_b});
      s += alpha * d;
      if (alpha == alpha_tr) return s;
      if (alpha == alpha_b && hit >= 0) {
        s[hit] = d[hit] > 0.0 ? 1.0 - c[hit] : -c[hit];
        fixed[static_cast<std::size_t>(hit)] = true;
        restart = true;
        break;
      }
      const VectorXd r_new = project(-(g + H * s));
      d = r_new + (r_new.squaredNorm() / rr) * d;
      r = r_new;
    }
    if (!restart) return s;
  }
  return s;
}

struct Model {
  VectorXd g;
  MatrixXd H;
  bool ok = false;
};

// Quadratic through all points whose Hessian differs least (Frobenius) from
// the previous one. Offsets y are relative to the center point; the system is
// solved in units of the largest offset to keep it well conditioned.
Model fit_model(const std::vector<VectorXd>& ys, const std::vector<double>& fs, double f_center, const MatrixXd& H_old) {
  const Eigen::Index m = static_cast<Eigen::Index>(ys.size()), n = ys.front().size();
  double scale = 0.0;
  for (const auto& y : ys) scale = std::max(scale, y.norm());
  Model out;
  if (scale <= 0.0) return out;
  std::vector<VectorXd> zs;
  for (const auto& y : ys) zs.push_back(y / scale);
  const MatrixXd Hs = H_old * (scale * scale);
  MatrixXd K = MatrixXd::Zero(m + 1 + n, m + 1 + n);
  VectorXd rhs = VectorXd::Zero(m + 1 + n);
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto& z = zs[static_cast<std::size_t>(j)];
    for (Eigen::Index k = 0; k < m; ++k) {
      const double zz = z.dot(zs[static_cast<std::size_t>(k)]);
      K(j, k) = 0.5 * zz * zz;
    }
    K(j, m) = K(m, j) = 1.0;
    K.block(j, m + 1, 1, n) = z.transpose();
    K.block(m + 1, j, n, 1) = z;
    rhs[j] = fs[static_cast<std::size_t>(j)] - f_center - 0.5 * z.dot(Hs * z);
  }
  Eigen::FullPivLU<MatrixXd> lu(K);
  lu.setThreshold(1e-10);
  if (lu.rank() < K.rows()) return out;
  const VectorXd sol = lu.solve(rhs);
  if (!sol.allFinite()) return out;
  MatrixXd H = Hs;
  for (Eigen::Index j = 0; j < m; ++j) H += sol[j] * zs[static_cast<std::size_t>(j)] * zs[static_cast<std::size_t>(j)].transpose();
  out.g = sol.tail(n) / scale;
  out.H = H / (scale * scale);
  out.ok = true;
  return out;
}

class LocalRun {
 public:
  LocalRun(Scaled& f, int restart, const MinimizeOptions& opts) : f_(f), restart_(restart), opts_(opts) {}

  void run(VectorXd start) {
    const Eigen::Index n = start.size();
    rho_ = std::min(opts_.rho_begin, 0.25);
    delta_ = rho_;
    center_ = start.cwiseMax(0.0).cwiseMin(1.0);
    f_center_ = f_(center_, restart_);
    H_ = MatrixXd::Zero(n, n);
    seed_points();
    int geometry_axis = 0;
    while (true) {
      Model model = fit_model(offsets(), fs_, f_center_, H_);
      if (!model.ok) {
        if (fresh_) return;  // degenerate even on a fresh stencil
        seed_points();
        continue;
      }
      fresh_ = false;
      H_ = model.H;
      const VectorXd s = box_trust_step(model.g, H_, delta_, center_);
      const double snorm = s.norm();
      if (snorm < 0.5 * rho_) {
        if (rho_ <= opts_.rho_end) return;
        shrink_rho();
        seed_points();
        continue;
      }
      const VectorXd trial = (center_ + s).cwiseMax(0.0).cwiseMin(1.0);
      const double f_trial = f_(trial, restart_);
      const double predicted = -(model.g.dot(s) + 0.5 * s.dot(H_ * s));
      const double ratio = predicted > 0.0 ? (f_center_ - f_trial) / predicted : -1.0;
      if (ratio <= 0.1) delta_ = std::max(0.5 * delta_, rho_);
      else if (ratio <= 0.7) delta_ = std::max(0.5 * delta_, snorm);
      else delta_ = std::min(std::max(0.5 * delta_, 2.0 * snorm), 0.5);

      if (f_trial < f_center_) {
        // Old center becomes an ordinary point; drop the one farthest from the new center.
        pts_.push_back(center_);
        fs_.push_back(f_center_);
        center_ = trial;
        f_center_ = f_trial;
        drop_farthest();
      } else {
        const std::size_t far = farthest();
        if ((pts_[far] - center_).norm() > snorm) {
          pts_[far] = trial;
          fs_[far] = f_trial;
        }
      }
      if (ratio < 0.1 && delta_ <= rho_) {
        const std::size_t far = farthest();
        if ((pts_[far] - center_).norm() > 2.0 * delta_) {
          // Poor geometry: replace the stale point by a fresh axis step.
          VectorXd y = center_;
          const Eigen::Index i = geometry_axis++ % n;
          y[i] += center_[i] + delta_ <= 1.0 ? delta_ : -delta_;
          pts_[far] = y;
          fs_[far] = f_(y, restart_);
        } else if (rho_ > opts_.rho_end) {
          shrink_rho();
        } else {
          return;
        }
      }
    }
  }

 private:
  void seed_points() {
    const Eigen::Index n = center_.size();
    pts_.clear();
    fs_.clear();
    const double step = delta_;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double a = center_[i] + step <= 1.0 ? step : -step;
      const double b = center_[i] - a >= 0.0 && center_[i] - a <= 1.0 ? -a : 2.0 * a;
      for (double off : {a, b}) {
        VectorXd y = center_;
        y[i] += off;
        pts_.push_back(y);
        fs_.push_back(f_(y, restart_));
      }
    }
    H_ = MatrixXd::Zero(n, n);
    fresh_ = true;
  }

  void shrink_rho() {
    const double ratio = rho_ / opts_.rho_end;
    const double next = ratio <= 16.0 ? opts_.rho_end : ratio <= 250.0 ? std::sqrt(ratio) * opts_.rho_end : 0.1 * rho_;
    delta_ = std::max(0.5 * rho_, next);
    rho_ = next;
  }

  std::vector<VectorXd> offsets() const {
    std::vector<VectorXd> ys;
    ys.reserve(pts_.size());
    for (const auto& p : pts_) ys.push_back(p - center_);
    return ys;
  }

  std::size_t farthest() const {
    std::size_t far = 0;
    double dist = -1.0;
    for (std::size_t j = 0; j < pts_.size(); ++j) {
      const double d = (pts_[j] - center_).squaredNorm();
      if (d > dist) {
        dist = d;
        far = j;
      }
    }
    return far;
  }

  void drop_farthest() {
    const std::size_t far = farthest();
    pts_.erase(pts_.begin() + static_cast<std::ptrdiff_t>(far));
    fs_.erase(fs_.begin() + static_cast<std::ptrdiff_t>(far));
  }

  Scaled& f_;
  int restart_;
  const MinimizeOptions& opts_;
  double rho_ = 0.1, delta_ = 0.1;
  VectorXd center_;
  double f_center_ = 0.0;
  MatrixXd H_;
  std::vector<VectorXd> pts_;  // interpolation points other than the center
  std::vector<double> fs_;
  bool fresh_ = false;
};

}  // namespace

MinimizeResult minimize(const Objective& f, std::span<const double> start, std::span<const double> lower,
                        std::span<const double> upper, const MinimizeOptions& opts) {
  const std::size_t n = start.size();
  require(n > 0, "nothing to optimize");
  require(lower.size() == n && upper.size() == n, "bounds must match the start vector");
  require(opts.budget > 0 && opts.restarts > 0, "budget and restarts must be positive");
  require(opts.rho_begin > 0.0 && opts.rho_end > 0.0 && opts.rho_end <= opts.rho_begin, "need 0 < rho_end <= rho_begin");
  VectorXd lo(static_cast<Eigen::Index>(n)), hi(static_cast<Eigen::Index>(n)), x0(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    require(lower[i] < upper[i], "lower bound must be below upper bound");
    require(start[i] >= lower[i] && start[i] <= upper[i], "start lies outside the bounds");
    lo[static_cast<Eigen::Index>(i)] = lower[i];
    hi[static_cast<Eigen::Index>(i)] = upper[i];
    x0[static_cast<Eigen::Index>(i)] = start[i];
  }
  MinimizeResult out;
  Scaled scaled(f, lo, hi, opts.budget, out);
  try {
    for (int r = 0; r < opts.restarts; ++r) {
      VectorXd u = r == 0 ? scaled.to_u(x0) : scaled.best_u();
      // Odd restarts re-open the trust region at the incumbent itself.
      if (r > 0 && r % 2 == 0)
        for (Eigen::Index i = 0; i < u.size(); ++i) {
          const double z = uniform01(opts.seed, Stream::Optimizer, static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(i));
          u[i] = std::clamp(u[i] + (2.0 * z - 1.0) * opts.restart_spread, 0.0, 1.0);
        }
      LocalRun(scaled, r, opts).run(u);
    }
  } catch (const BudgetExhausted&) {
    out.budget_exhausted = true;
  }
  return out;
}

}  // namespace eduopt
