// Copyright 2026 The invlab Authors
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

#pragma once

#include <map>
#include <numeric>
#include <span>

#include "invlab/core/image.hpp"
#include "invlab/core/rng.hpp"
#include "invlab/invariance/whitening.hpp"
#include "invlab/transforms/transform.hpp"

namespace invlab {

/// Invariance of one encoder to one transform (or to within-group variation).
/// Per-sample lists are kept so that tests can be run without recomputation.
struct InvarianceEntry {
  std::string encoder;
  std::string transform;
  std::vector<double> cosine;
  std::vector<double> distance;
  double mean_cosine = 0;
  double mean_distance = 0;
  double alignment = 0;
  Metadata meta;

  std::size_t samples() const noexcept { return cosine.size(); }
};

namespace detail {

inline double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline Eigen::VectorXd unit_row(const Eigen::MatrixXd& m, Eigen::Index i) {
  const double n = m.row(i).norm();
  require(n > 0, ErrorCategory::numeric, "feature row " + std::to_string(i) + " has zero norm");
  return m.row(i).transpose() / n;
}

}  // namespace detail

/// Mean over paired rows of ‖ẑ_x − ẑ_tx‖² with ẑ the L2-normalized row.
inline double alignment(const Eigen::MatrixXd& fx, const Eigen::MatrixXd& ftx) {
  require(fx.rows() == ftx.rows() && fx.cols() == ftx.cols() && fx.rows() >= 1, ErrorCategory::validation,
          "alignment needs equally shaped, non-empty feature matrices");
  double total = 0;
  for (Eigen::Index i = 0; i < fx.rows(); ++i)
    total += (detail::unit_row(fx, i) - detail::unit_row(ftx, i)).squaredNorm();
  return total / static_cast<double>(fx.rows());
}

inline double alignment(const FeatureMatrix& fx, const FeatureMatrix& ftx) {
  return alignment(fx.to_eigen(), ftx.to_eigen());
}

/// log of the mean over distinct row pairs of exp(−t ‖ẑ_i − ẑ_j‖²),
/// evaluated in log-sum-exp form.
inline double uniformity(const Eigen::MatrixXd& f, double t = 2.0) {
  require(f.rows() >= 2, ErrorCategory::validation, "uniformity needs at least two rows");
  Eigen::MatrixXd u(f.rows(), f.cols());
  for (Eigen::Index i = 0; i < f.rows(); ++i) u.row(i) = detail::unit_row(f, i).transpose();
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(f.rows() * (f.rows() - 1) / 2));
  for (Eigen::Index i = 0; i < u.rows(); ++i)
    for (Eigen::Index j = i + 1; j < u.rows(); ++j) terms.push_back(-t * (u.row(i) - u.row(j)).squaredNorm());
  const double top = *std::max_element(terms.begin(), terms.end());
  double s = 0;
  for (double x : terms) s += std::exp(x - top);
  return std::min(0.0, top + std::log(s / static_cast<double>(terms.size())));
}

inline double uniformity(const FeatureMatrix& f, double t = 2.0) { return uniformity(f.to_eigen(), t); }

/// Synthetic protocol on precomputed embeddings. `base` holds one row per
/// image; `transformed` holds |Φ| rows per image, image-major (row
/// i * |Φ| + j is image i under the j-th parameter).
inline InvarianceEntry invariance_from_features(const Eigen::MatrixXd& base, const Eigen::MatrixXd& transformed,
                                                std::size_t grid_size, const WhiteningTransform& w) {
  require(grid_size >= 1, ErrorCategory::validation, "grid must be non-empty");
  require(transformed.rows() == base.rows() * static_cast<Eigen::Index>(grid_size) &&
              transformed.cols() == base.cols(),
          ErrorCategory::alignment,
          "transformed features must have |images| x |grid| rows and matching width");
  InvarianceEntry e;
  e.cosine.reserve(static_cast<std::size_t>(transformed.rows()));
  e.distance.reserve(static_cast<std::size_t>(transformed.rows()));
  Eigen::MatrixXd repeated(transformed.rows(), base.cols());
  for (Eigen::Index i = 0; i < base.rows(); ++i) {
    const Eigen::VectorXd fx = base.row(i).transpose();
    const Eigen::VectorXd z = w.standardize(fx);
    for (std::size_t j = 0; j < grid_size; ++j) {
      const Eigen::Index r = i * static_cast<Eigen::Index>(grid_size) + static_cast<Eigen::Index>(j);
      const Eigen::VectorXd ftx = transformed.row(r).transpose();
      e.cosine.push_back(cosine_of_standardized(z, w.standardize(ftx)));
      e.distance.push_back(mahalanobis_variance(w, fx, ftx));
      repeated.row(r) = base.row(i);
    }
  }
  e.mean_cosine = detail::mean_of(e.cosine);
  e.mean_distance = detail::mean_of(e.distance);
  e.alignment = alignment(repeated, transformed);
  return e;
}

/// Applies every grid parameter to every image. Stochastic transforms draw
/// from a stream derived from (seed, image, parameter index); `first_index`
/// is the position of images[0] in the full image list, so chunked calls
/// reproduce a single call.
inline std::vector<Image> transform_images(std::span<const Image> images, TransformKind kind,
                                           const std::vector<TransformParam>& grid, std::uint64_t seed,
                                           std::size_t first_index = 0) {
  std::vector<Image> out;
  out.reserve(images.size() * grid.size());
  const SeededRng root(seed);
  for (std::size_t i = 0; i < images.size(); ++i)
    for (std::size_t j = 0; j < grid.size(); ++j) {
      SeededRng rng = root.derive(static_cast<std::uint64_t>(first_index + i) * grid.size() + j);
      out.push_back(apply_transform(images[i], kind, grid[j], rng));
    }
  return out;
}

/// Embeds untransformed and transformed images with `embed` (a callable
/// span<const Image> -> FeatureMatrix) and averages both metrics over all
/// (image, parameter) pairs. `base` may be passed when the untransformed
/// embeddings are already known.
template <class EmbedFn>
InvarianceEntry synthetic_invariance(EmbedFn&& embed, std::span<const Image> images, TransformKind kind,
                                     const std::vector<TransformParam>& grid, const WhiteningTransform& w,
                                     std::uint64_t seed = 0, const FeatureMatrix* base = nullptr) {
  require(!images.empty(), ErrorCategory::validation, "no images to measure");
  const FeatureMatrix base_features = base ? *base : embed(images);
  require(base_features.rows() == images.size(), ErrorCategory::alignment, "base features do not match images");
  // One image at a time keeps only |grid| transformed images in memory.
  Eigen::MatrixXd tf(static_cast<Eigen::Index>(images.size() * grid.size()),
                     static_cast<Eigen::Index>(base_features.cols()));
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto transformed = transform_images(images.subspan(i, 1), kind, grid, seed, i);
    tf.middleRows(static_cast<Eigen::Index>(i * grid.size()), static_cast<Eigen::Index>(grid.size())) =
        embed(std::span<const Image>(transformed)).to_eigen();
  }
  auto e = invariance_from_features(base_features.to_eigen(), tf, grid.size(), w);
  e.transform = std::string(transform_name(kind));
  return e;
}

/// All unordered within-group pairs; metrics are averaged flat over pairs.
/// Singleton groups are skipped and noted in meta["warning"].
inline InvarianceEntry pairwise_invariance(const FeatureMatrix& features, const std::vector<int>& group_ids,
                                           const WhiteningTransform& w) {
  require(group_ids.size() == features.rows(), ErrorCategory::alignment, "one group id per feature row is required");
  const Eigen::MatrixXd f = features.to_eigen();
  std::map<int, std::vector<Eigen::Index>> groups;
  for (std::size_t i = 0; i < group_ids.size(); ++i) groups[group_ids[i]].push_back(static_cast<Eigen::Index>(i));
  InvarianceEntry e;
  e.transform = "pairwise";
  std::size_t singletons = 0;
  std::vector<Eigen::Index> left, right;
  for (const auto& [id, members] : groups) {
    if (members.size() < 2) {
      ++singletons;
      continue;
    }
    for (std::size_t a = 0; a < members.size(); ++a)
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        const Eigen::VectorXd fa = f.row(members[a]).transpose(), fb = f.row(members[b]).transpose();
        e.cosine.push_back(cosine_invariance(w, fa, fb));
        e.distance.push_back(mahalanobis_variance(w, fa, fb));
        left.push_back(members[a]);
        right.push_back(members[b]);
      }
  }
  require(!e.cosine.empty(), ErrorCategory::validation, "no group has two or more members");
  if (singletons) e.meta["warning"] = "skipped " + std::to_string(singletons) + " singleton group(s)";
  e.mean_cosine = detail::mean_of(e.cosine);
  e.mean_distance = detail::mean_of(e.distance);
  e.alignment = alignment(f(left, Eigen::all), f(right, Eigen::all));
  return e;
}

}  // namespace invlab
