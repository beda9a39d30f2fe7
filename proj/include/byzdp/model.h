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

#ifndef BYZDP_MODEL_H_
#define BYZDP_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "byzdp/rng.h"

namespace byzdp {

// A model parameter vector, a gradient, or a worker submission.
using Vector = Eigen::VectorXd;

struct DataPoint {
  Vector features;
  // Class label in {0, 1} for classification kinds; ignored by quadratic.
  double label = 0.0;
};

// Immutable set of m >= 1 points. Copies share storage.
class Dataset {
 public:
  static absl::StatusOr<Dataset> Create(std::vector<DataPoint> points,
                                        std::uint64_t generator_seed = 0);

  std::span<const DataPoint> points() const { return *points_; }
  const DataPoint& point(std::size_t i) const { return (*points_)[i]; }
  std::size_t size() const { return points_->size(); }
  int feature_dim() const {
    return static_cast<int>((*points_)[0].features.size());
  }
  std::uint64_t generator_seed() const { return generator_seed_; }

  // Copy holding points [0, count). Used for train/test splits.
  Dataset Head(std::size_t count) const;
  Dataset Tail(std::size_t from) const;

 private:
  Dataset(std::shared_ptr<const std::vector<DataPoint>> points,
          std::uint64_t generator_seed)
      : points_(std::move(points)), generator_seed_(generator_seed) {}

  std::shared_ptr<const std::vector<DataPoint>> points_;
  std::uint64_t generator_seed_ = 0;
};

// Isotropic Gaussian cloud N(center, spread^2 I) used as quadratic targets.
struct TargetCloudOptions {
  std::size_t m = 1000;
  int dim = 10;
  double center = 0.0;
  double spread = 1.0;
  std::uint64_t seed = 0;
};
absl::StatusOr<Dataset> MakeTargetCloud(const TargetCloudOptions& options);

// Two-class Gaussian blobs. Class k in {0, 1} has mean (2k - 1) * separation/2
// along a unit direction drawn from the seed, and identity covariance scaled
// by spread^2. Labels are flipped with probability label_noise.
struct BlobOptions {
  std::size_t m = 1000;
  int dim = 20;
  double separation = 2.0;
  double spread = 1.0;
  double label_noise = 0.0;
  std::uint64_t seed = 0;
};
absl::StatusOr<Dataset> MakeGaussianBlobs(const BlobOptions& options);

// One point per row: comma-separated floats; when has_label is set the last
// column is the label. A first row that does not parse is taken as a header.
absl::StatusOr<Dataset> LoadCsvDataset(const std::string& path, bool has_label);
absl::StatusOr<Dataset> ParseCsvDataset(absl::string_view text, bool has_label);

enum class ModelKind { kQuadratic, kLogistic, kMlp1 };

absl::string_view ModelKindName(ModelKind kind);
absl::StatusOr<ModelKind> ParseModelKind(absl::string_view name);

// Point-wise loss q(theta, x) and its gradient, with the l2 term
// (lambda/2) * ||theta||^2 folded into every point so that the empirical loss
// keeps its plain-average structure.
//
//   quadratic: q = 1/2 (theta - x)^T H (theta - x)   (H symmetric PSD)
//   logistic:  q = log(1 + exp(-y theta^T x)),        y = 2 * label - 1
//   mlp1:      q = log(1 + exp(-y z)),  z = w2^T tanh(W1 x + b1) + b2
class Model {
 public:
  static absl::StatusOr<Model> Quadratic(Eigen::MatrixXd hessian,
                                         double lambda = 0.0);
  static absl::StatusOr<Model> Logistic(int features, double lambda = 0.0);
  static absl::StatusOr<Model> Mlp1(int features, int hidden,
                                    double lambda = 0.0);

  ModelKind kind() const { return kind_; }
  // Number of parameters d.
  int dimension() const { return dimension_; }
  // Expected feature width of data points.
  int feature_dim() const { return feature_dim_; }
  int hidden() const { return hidden_; }
  double lambda() const { return lambda_; }
  const Eigen::MatrixXd& hessian() const { return hessian_; }
  bool is_classifier() const { return kind_ != ModelKind::kQuadratic; }

  // Unchecked hot paths: callers guarantee theta.size() == dimension() and
  // x.features.size() == feature_dim().
  double PointLossUnchecked(const Vector& theta, const DataPoint& x) const;
  Vector PointGradUnchecked(const Vector& theta, const DataPoint& x) const;
  // Classifier margin score; positive predicts label 1.
  double ScoreUnchecked(const Vector& theta, const DataPoint& x) const;

  absl::Status CheckTheta(const Vector& theta) const;
  absl::Status CheckDataset(const Dataset& dataset) const;

 private:
  Model() = default;

  ModelKind kind_ = ModelKind::kQuadratic;
  int dimension_ = 0;
  int feature_dim_ = 0;
  int hidden_ = 0;
  double lambda_ = 0.0;
  Eigen::MatrixXd hessian_;
};

struct ClipParams {
  double bound = 1.0;  // C > 0
};

absl::StatusOr<Vector> PointGrad(const Model& model, const Vector& theta,
                                 const DataPoint& x);

// Exact mean of PointGrad over all points, summed in index order.
absl::StatusOr<Vector> FullGrad(const Model& model, const Vector& theta,
                                const Dataset& dataset);

absl::StatusOr<double> EmpiricalLoss(const Model& model, const Vector& theta,
                                     const Dataset& dataset);

// Fraction of points whose predicted class matches the label.
absl::StatusOr<double> Accuracy(const Model& model, const Vector& theta,
                                const Dataset& dataset);

// g if ||g|| <= C, else g * C / ||g||.
Vector Clip(const Vector& g, const ClipParams& clip);

// b distinct indices in [0, m), uniform over size-b subsets, returned in
// ascending order.
absl::StatusOr<std::vector<std::size_t>> SampleBatch(const Dataset& dataset,
                                                     int b,
                                                     RandomStream& stream);

// (1/m) sum_x ||grad q(theta, x) - grad Q(theta)||^2. The result does not
// depend on the order of points in the dataset.
absl::StatusOr<double> PopulationVariance(const Model& model,
                                          const Vector& theta,
                                          const Dataset& dataset);

// Global smoothness constant L of the empirical loss. Quadratic: the top
// Hessian eigenvalue plus lambda. Logistic: max_x ||x||^2 / 4 plus lambda.
absl::StatusOr<double> SmoothnessConstant(const Model& model,
                                          const Dataset& dataset);

// Closed-form minimizer (H + lambda I)^{-1} H mean(x) of the quadratic loss.
absl::StatusOr<Vector> QuadraticMinimizer(const Model& model,
                                          const Dataset& dataset);

}  // namespace byzdp

#endif  // BYZDP_MODEL_H_
