// Copyright 2026 The byzdp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "byzdp/model.h"

#include <algorithm>
#include <cmath>
#include <unordered_set>
#include <utility>

#include "absl/strings/str_cat.h"

namespace byzdp {
namespace {

// log(1 + exp(z)) without overflow.
double Softplus(double z) {
  if (z > 0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

// 1 / (1 + exp(-z)).
double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double SignedLabel(const DataPoint& x) { return x.label > 0.5 ? 1.0 : -1.0; }

}  // namespace

absl::string_view ModelKindName(ModelKind kind) {
  switch (kind) {
    case ModelKind::kQuadratic:
      return "quadratic";
    case ModelKind::kLogistic:
      return "logistic";
    case ModelKind::kMlp1:
      return "mlp1";
  }
  return "unknown";
}

absl::StatusOr<ModelKind> ParseModelKind(absl::string_view name) {
  if (name == "quadratic") return ModelKind::kQuadratic;
  if (name == "logistic") return ModelKind::kLogistic;
  if (name == "mlp1") return ModelKind::kMlp1;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown model kind '", name,
                   "' (expected quadratic, logistic or mlp1)"));
}

absl::StatusOr<Model> Model::Quadratic(Eigen::MatrixXd hessian, double lambda) {
  if (hessian.rows() < 1 || hessian.rows() != hessian.cols()) {
    return absl::InvalidArgumentError("quadratic Hessian must be square, d >= 1");
  }
  if (!(lambda >= 0.0)) {
    return absl::InvalidArgumentError("regularization lambda must be >= 0");
  }
  if (!hessian.isApprox(hessian.transpose(), 1e-12)) {
    return absl::InvalidArgumentError("quadratic Hessian must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hessian,
                                                     Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff())) {
    return absl::InvalidArgumentError(
        "quadratic Hessian must be positive semidefinite");
  }
  Model model;
  model.kind_ = ModelKind::kQuadratic;
  model.dimension_ = static_cast<int>(hessian.rows());
  model.feature_dim_ = model.dimension_;
  model.lambda_ = lambda;
  model.hessian_ = std::move(hessian);
  return model;
}

absl::StatusOr<Model> Model::Logistic(int features, double lambda) {
  if (features < 1) {
    return absl::InvalidArgumentError("logistic model needs >= 1 feature");
  }
  if (!(lambda >= 0.0)) {
    return absl::InvalidArgumentError("regularization lambda must be >= 0");
  }
  Model model;
  model.kind_ = ModelKind::kLogistic;
  model.dimension_ = features;
  model.feature_dim_ = features;
  model.lambda_ = lambda;
  return model;
}

absl::StatusOr<Model> Model::Mlp1(int features, int hidden, double lambda) {
  if (features < 1 || hidden < 1) {
    return absl::InvalidArgumentError(
        "mlp1 needs >= 1 feature and hidden width >= 1");
  }
  if (!(lambda >= 0.0)) {
    return absl::InvalidArgumentError("regularization lambda must be >= 0");
  }
  Model model;
  model.kind_ = ModelKind::kMlp1;
  model.feature_dim_ = features;
  model.hidden_ = hidden;
  // W1 (hidden x features, row-major), b1 (hidden), w2 (hidden), b2.
  model.dimension_ = hidden * features + 2 * hidden + 1;
  model.lambda_ = lambda;
  return model;
}

absl::Status Model::CheckTheta(const Vector& theta) const {
  if (theta.size() != dimension_) {
    return absl::InvalidArgumentError(
        absl::StrCat("dimension mismatch: parameter vector has ", theta.size(),
                     " entries, model expects ", dimension_));
  }
  return absl::OkStatus();
}

absl::Status Model::CheckDataset(const Dataset& dataset) const {
  if (dataset.feature_dim() != feature_dim_) {
    return absl::InvalidArgumentError(
        absl::StrCat("dimension mismatch: data points have ",
                     dataset.feature_dim(), " features, model expects ",
                     feature_dim_));
  }
  return absl::OkStatus();
}

double Model::ScoreUnchecked(const Vector& theta, const DataPoint& x) const {
  switch (kind_) {
    case ModelKind::kQuadratic:
      return 0.0;
    case ModelKind::kLogistic:
      return theta.dot(x.features);
    case ModelKind::kMlp1: {
      const int p = feature_dim_;
      const int h = hidden_;
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                     Eigen::RowMajor>>
          w1(theta.data(), h, p);
      const auto b1 = theta.segment(h * p, h);
      const auto w2 = theta.segment(h * p + h, h);
      const double b2 = theta[h * p + 2 * h];
      const Vector act = (w1 * x.features + b1).array().tanh().matrix();
      return w2.dot(act) + b2;
    }
  }
  return 0.0;
}

double Model::PointLossUnchecked(const Vector& theta,
                                 const DataPoint& x) const {
  const double reg = 0.5 * lambda_ * theta.squaredNorm();
  if (kind_ == ModelKind::kQuadratic) {
    const Vector diff = theta - x.features;
    return 0.5 * diff.dot(hessian_ * diff) + reg;
  }
  return Softplus(-SignedLabel(x) * ScoreUnchecked(theta, x)) + reg;
}

Vector Model::PointGradUnchecked(const Vector& theta,
                                 const DataPoint& x) const {
  Vector grad;
  switch (kind_) {
    case ModelKind::kQuadratic:
      grad = hessian_ * (theta - x.features);
      break;
    case ModelKind::kLogistic: {
      const double y = SignedLabel(x);
      grad = (-y * Sigmoid(-y * theta.dot(x.features))) * x.features;
      break;
    }
    case ModelKind::kMlp1: {
      const int p = feature_dim_;
      const int h = hidden_;
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                     Eigen::RowMajor>>
          w1(theta.data(), h, p);
      const auto b1 = theta.segment(h * p, h);
      const auto w2 = theta.segment(h * p + h, h);
      const double b2 = theta[h * p + 2 * h];
      const Vector act = (w1 * x.features + b1).array().tanh().matrix();
      const double z = w2.dot(act) + b2;
      const double y = SignedLabel(x);
      const double dz = -y * Sigmoid(-y * z);
      // d act / d pre = 1 - act^2.
      const Vector dpre =
          (dz * w2.array() * (1.0 - act.array().square())).matrix();
      grad.resize(dimension_);
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                               Eigen::RowMajor>>
          dw1(grad.data(), h, p);
      dw1.noalias() = dpre * x.features.transpose();
      grad.segment(h * p, h) = dpre;
      grad.segment(h * p + h, h) = dz * act;
      grad[h * p + 2 * h] = dz;
      break;
    }
  }
  if (lambda_ != 0.0) grad += lambda_ * theta;
  return grad;
}

absl::StatusOr<Vector> PointGrad(const Model& model, const Vector& theta,
                                 const DataPoint& x) {
  if (absl::Status s = model.CheckTheta(theta); !s.ok()) return s;
  if (x.features.size() != model.feature_dim()) {
    return absl::InvalidArgumentError(
        absl::StrCat("dimension mismatch: data point has ", x.features.size(),
                     " features, model expects ", model.feature_dim()));
  }
  return model.PointGradUnchecked(theta, x);
}

absl::StatusOr<Vector> FullGrad(const Model& model, const Vector& theta,
                                const Dataset& dataset) {
  if (absl::Status s = model.CheckTheta(theta); !s.ok()) return s;
  if (absl::Status s = model.CheckDataset(dataset); !s.ok()) return s;
  Vector sum = Vector::Zero(model.dimension());
  for (const DataPoint& x : dataset.points()) {
    sum += model.PointGradUnchecked(theta, x);
  }
  return Vector(sum / static_cast<double>(dataset.size()));
}

absl::StatusOr<double> EmpiricalLoss(const Model& model, const Vector& theta,
                                     const Dataset& dataset) {
  if (absl::Status s = model.CheckTheta(theta); !s.ok()) return s;
  if (absl::Status s = model.CheckDataset(dataset); !s.ok()) return s;
  double sum = 0.0;
  for (const DataPoint& x : dataset.points()) {
    sum += model.PointLossUnchecked(theta, x);
  }
  return sum / static_cast<double>(dataset.size());
}

absl::StatusOr<double> Accuracy(const Model& model, const Vector& theta,
                                const Dataset& dataset) {
  if (!model.is_classifier()) {
    return absl::FailedPreconditionError(
        "accuracy is defined for classification models only");
  }
  if (absl::Status s = model.CheckTheta(theta); !s.ok()) return s;
  if (absl::Status s = model.CheckDataset(dataset); !s.ok()) return s;
  std::size_t correct = 0;
  for (const DataPoint& x : dataset.points()) {
    const bool predicted = model.ScoreUnchecked(theta, x) > 0.0;
    if (predicted == (x.label > 0.5)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

Vector Clip(const Vector& g, const ClipParams& clip) {
  double norm = g.norm();
  if (norm <= clip.bound) return g;
  // The plain norm overflows once ||g||^2 exceeds the double range.
  if (std::isinf(norm)) norm = g.stableNorm();
  return g * (clip.bound / norm);
}

absl::StatusOr<std::vector<std::size_t>> SampleBatch(const Dataset& dataset,
                                                     int b,
                                                     RandomStream& stream) {
  const std::size_t m = dataset.size();
  if (b < 1 || static_cast<std::size_t>(b) > m) {
    return absl::InvalidArgumentError(absl::StrCat(
        "batch size b=", b, " must satisfy 1 <= b <= m=", m));
  }
  std::vector<std::size_t> chosen;
  chosen.reserve(b);
  // Floyd's algorithm: uniform over size-b subsets with b draws.
  std::unordered_set<std::size_t> seen;
  seen.reserve(2 * b);
  for (std::size_t j = m - b; j < m; ++j) {
    std::uniform_int_distribution<std::size_t> pick(0, j);
    const std::size_t t = pick(stream);
    const std::size_t v = seen.insert(t).second ? t : j;
    if (v == j) seen.insert(j);
    chosen.push_back(v);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

absl::StatusOr<double> PopulationVariance(const Model& model,
                                          const Vector& theta,
                                          const Dataset& dataset) {
  if (absl::Status s = model.CheckTheta(theta); !s.ok()) return s;
  if (absl::Status s = model.CheckDataset(dataset); !s.ok()) return s;
  const std::size_t m = dataset.size();
  std::vector<Vector> grads;
  grads.reserve(m);
  for (const DataPoint& x : dataset.points()) {
    grads.push_back(model.PointGradUnchecked(theta, x));
  }
  // Canonical summation order makes the result independent of point order.
  std::sort(grads.begin(), grads.end(), [](const Vector& a, const Vector& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(),
                                        b.data(), b.data() + b.size());
  });
  Vector mean = Vector::Zero(model.dimension());
  for (const Vector& g : grads) mean += g;
  mean /= static_cast<double>(m);
  std::vector<double> sq;
  sq.reserve(m);
  for (const Vector& g : grads) sq.push_back((g - mean).squaredNorm());
  std::sort(sq.begin(), sq.end());
  double total = 0.0;
  for (double v : sq) total += v;
  return total / static_cast<double>(m);
}

absl::StatusOr<double> SmoothnessConstant(const Model& model,
                                          const Dataset& dataset) {
  switch (model.kind()) {
    case ModelKind::kQuadratic: {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
          model.hessian(), Eigen::EigenvaluesOnly);
      return eig.eigenvalues().maxCoeff() + model.lambda();
    }
    case ModelKind::kLogistic: {
      if (absl::Status s = model.CheckDataset(dataset); !s.ok()) return s;
      double max_sq = 0.0;
      for (const DataPoint& x : dataset.points()) {
        max_sq = std::max(max_sq, x.features.squaredNorm());
      }
      return 0.25 * max_sq + model.lambda();
    }
    case ModelKind::kMlp1:
      return absl::UnimplementedError(
          "mlp1 has no global smoothness constant");
  }
  return absl::InternalError("unreachable");
}

absl::StatusOr<Vector> QuadraticMinimizer(const Model& model,
                                          const Dataset& dataset) {
  if (model.kind() != ModelKind::kQuadratic) {
    return absl::FailedPreconditionError(
        "closed-form minimizer exists for the quadratic model only");
  }
  if (absl::Status s = model.CheckDataset(dataset); !s.ok()) return s;
  Vector mean = Vector::Zero(model.dimension());
  for (const DataPoint& x : dataset.points()) mean += x.features;
  mean /= static_cast<double>(dataset.size());
  const Eigen::MatrixXd system =
      model.hessian() +
      model.lambda() *
          Eigen::MatrixXd::Identity(model.dimension(), model.dimension());
  // Least-norm solution when H is singular and lambda = 0.
  return Vector(system.completeOrthogonalDecomposition().solve(
      model.hessian() * mean));
}

}  // namespace byzdp
