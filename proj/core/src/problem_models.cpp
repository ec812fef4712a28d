#include "strigs/problem_models.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "strigs/error.hpp"

namespace strigs {

ConvexProblem::ConvexProblem(std::string name, std::shared_ptr<const Objective> objective,
                             int dim, double lipschitz, double inf_value,
                             std::optional<Vec> min_norm_minimizer,
                             RegularizedArgmin regularized_argmin)
    : name_(std::move(name)),
      objective_(std::move(objective)),
      dim_(dim),
      lipschitz_(lipschitz),
      inf_value_(inf_value),
      min_norm_minimizer_(std::move(min_norm_minimizer)),
      regularized_argmin_(std::move(regularized_argmin)) {
  if (dim_ < 1) throw Error(ErrorCode::kInvalidArgument, "problem dimension must be >= 1");
  if (!objective_) throw Error(ErrorCode::kInvalidArgument, "problem needs an objective");
  if (min_norm_minimizer_ && min_norm_minimizer_->size() != dim_) {
    throw Error(ErrorCode::kDimensionMismatch, "x* has the wrong dimension");
  }
}

Vec ConvexProblem::grad(const Vec& x) const {
  Vec g(dim_);
  objective_->gradient(x, g);
  return g;
}

Vec ConvexProblem::regularized_argmin(double eps) const {
  if (!regularized_argmin_) {
    throw Error(ErrorCode::kInvalidArgument, name_ + " has no closed-form regularized argmin");
  }
  return regularized_argmin_(eps);
}

namespace {

class ShiftedQuadratic final : public Objective {
 public:
  explicit ShiftedQuadratic(Vec p) : p_(std::move(p)) {}
  double value(const Vec& x) const override { return 0.5 * (x - p_).squaredNorm(); }
  void gradient(const Vec& x, Vec& g) const override { g = x - p_; }

 private:
  Vec p_;
};

class LeastSquares final : public Objective {
 public:
  LeastSquares(Mat A, Vec b) : A_(std::move(A)), b_(std::move(b)) {}
  double value(const Vec& x) const override { return 0.5 * (A_ * x - b_).squaredNorm(); }
  void gradient(const Vec& x, Vec& g) const override {
    thread_local Vec r;  // problems are shared across ensemble workers
    r.resize(b_.size());
    r.noalias() = A_ * x;
    r -= b_;
    g.resize(A_.cols());
    g.noalias() = A_.transpose() * r;
  }

 private:
  Mat A_;
  Vec b_;
};

class Huber final : public Objective {
 public:
  Huber(double tau, Vec center) : tau_(tau), c_(std::move(center)) {}
  double value(const Vec& x) const override {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double u = std::abs(x[i] - c_[i]);
      s += u <= tau_ ? 0.5 * u * u : tau_ * (u - 0.5 * tau_);
    }
    return s;
  }
  void gradient(const Vec& x, Vec& g) const override {
    g.resize(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double u = x[i] - c_[i];
      g[i] = std::clamp(u, -tau_, tau_);
    }
  }

 private:
  double tau_;
  Vec c_;
};

class SymmetricLogSumExp final : public Objective {
 public:
  SymmetricLogSumExp(double mu, Mat anchors) : mu_(mu), anchors_(std::move(anchors)) {}

  double value(const Vec& x) const override {
    const Vec s = anchors_ * x / mu_;
    const double m = s.cwiseAbs().maxCoeff();
    double acc = 0.0;
    for (Eigen::Index j = 0; j < s.size(); ++j) {
      acc += std::exp(s[j] - m) + std::exp(-s[j] - m);
    }
    return mu_ * (m + std::log(acc));
  }

  void gradient(const Vec& x, Vec& g) const override {
    const Vec s = anchors_ * x / mu_;
    const double m = s.cwiseAbs().maxCoeff();
    Vec w(s.size());
    double total = 0.0;
    for (Eigen::Index j = 0; j < s.size(); ++j) {
      const double plus = std::exp(s[j] - m);
      const double minus = std::exp(-s[j] - m);
      w[j] = plus - minus;
      total += plus + minus;
    }
    g.noalias() = anchors_.transpose() * (w / total);
  }

 private:
  double mu_;
  Mat anchors_;
};

class Zero final : public Objective {
 public:
  double value(const Vec&) const override { return 0.0; }
  void gradient(const Vec& x, Vec& g) const override { g = Vec::Zero(x.size()); }
};

}  // namespace

ConvexProblem make_shifted_quadratic(const Vec& p) {
  if (p.size() < 1) throw Error(ErrorCode::kInvalidArgument, "shifted quadratic needs d >= 1");
  return ConvexProblem("quadratic", std::make_shared<ShiftedQuadratic>(p),
                       static_cast<int>(p.size()), 1.0, 0.0, p,
                       [p](double eps) -> Vec { return p / (1.0 + eps); });
}

ConvexProblem make_least_squares(const Mat& A, const Vec& b) {
  if (A.rows() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "least squares: A has " +
                                                   std::to_string(A.rows()) + " rows but b has " +
                                                   std::to_string(b.size()) + " entries");
  }
  if (A.size() == 0 || A.isZero(0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "least squares: A must be nonzero");
  }
  const Mat AtA = A.transpose() * A;
  const Vec Atb = A.transpose() * b;
  Eigen::SelfAdjointEigenSolver<Mat> eig(AtA, Eigen::EigenvaluesOnly);
  const double L = eig.eigenvalues().maxCoeff();

  Eigen::CompleteOrthogonalDecomposition<Mat> cod(A);
  const Vec x_star = cod.pseudoInverse() * b;
  const double inf_value = 0.5 * (A * x_star - b).squaredNorm();

  auto regularized = [AtA, Atb](double eps) -> Vec {
    Mat M = AtA;
    M.diagonal().array() += eps;
    return M.ldlt().solve(Atb);
  };
  return ConvexProblem("least_squares", std::make_shared<LeastSquares>(A, b),
                       static_cast<int>(A.cols()), L, inf_value, x_star, regularized);
}

ConvexProblem make_smoothed_norm(const SmoothedNormParams& params) {
  if (const auto* huber = std::get_if<HuberParams>(&params)) {
    if (!(huber->threshold > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "huber threshold must be positive");
    }
    Vec center = huber->center.size() > 0 ? huber->center : Vec::Zero(huber->dim);
    if (center.size() < 1) throw Error(ErrorCode::kInvalidArgument, "huber needs d >= 1");
    const int dim = static_cast<int>(center.size());
    return ConvexProblem("huber", std::make_shared<Huber>(huber->threshold, center), dim, 1.0,
                         0.0, center);
  }
  const auto& lse = std::get<LogSumExpParams>(params);
  if (!(lse.smoothing > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "log-sum-exp smoothing must be positive");
  }
  if (lse.anchors.rows() < 1 || lse.anchors.cols() < 1) {
    throw Error(ErrorCode::kInvalidArgument, "log-sum-exp needs at least one anchor");
  }
  const int dim = static_cast<int>(lse.anchors.cols());
  const double max_sq = lse.anchors.rowwise().squaredNorm().maxCoeff();
  const double m = static_cast<double>(lse.anchors.rows());
  return ConvexProblem("lse", std::make_shared<SymmetricLogSumExp>(lse.smoothing, lse.anchors),
                       dim, max_sq / lse.smoothing, lse.smoothing * std::log(2.0 * m),
                       Vec::Zero(dim));
}

ConvexProblem make_zero_problem(int dim) {
  return ConvexProblem("zero", std::make_shared<Zero>(), dim, 0.0, 0.0, Vec::Zero(dim),
                       [dim](double) -> Vec { return Vec::Zero(dim); });
}

}  // namespace strigs
