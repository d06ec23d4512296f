// latrescore/pq.hpp
//
// Copyright 2026 The latrescore Authors
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

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "latrescore/common.hpp"

namespace latrescore {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

namespace detail {

struct KMeansResult {
  Mat centers;                    // k' x d, k' <= k (duplicates dropped)
  std::vector<std::uint8_t> assign;
  double inertia = 0.0;
  std::vector<double> inertia_history;
};

/// Lloyd's algorithm with k-means++ seeding.  Deterministic for a given rng
/// state.  Stops after `iters` rounds or when the relative inertia change
/// drops below 1e-6.  Clusters that end up empty are removed.
inline KMeansResult kmeans(const Mat& data, int k, int iters, Rng& rng) {
  const int n = static_cast<int>(data.rows());
  const int d = static_cast<int>(data.cols());
  LR_CHECK(n > 0 && k >= 1, "kmeans: need data and k >= 1");
  k = std::min(k, n);

  // k-means++ seeding.
  Mat centers(k, d);
  std::vector<double> dist2(n);
  centers.row(0) = data.row(rng.uniform_int(n));
  int chosen = 1;
  for (int i = 0; i < n; ++i) {
    dist2[i] = (data.row(i) - centers.row(0)).squaredNorm();
  }
  while (chosen < k) {
    double total = 0.0;
    for (double v : dist2) total += v;
    if (total <= 0.0) break;  // all remaining points coincide with a center
    double r = rng.uniform() * total;
    int pick = n - 1;
    for (int i = 0; i < n; ++i) {
      r -= dist2[i];
      if (r <= 0.0) {
        pick = i;
        break;
      }
    }
    centers.row(chosen) = data.row(pick);
    for (int i = 0; i < n; ++i) {
      dist2[i] = std::min(dist2[i],
                          (data.row(i) - centers.row(chosen)).squaredNorm());
    }
    ++chosen;
  }
  centers.conservativeResize(chosen, d);
  k = chosen;

  KMeansResult res;
  res.assign.resize(n);
  double prev = kInfCost;
  for (int iter = 0; iter < std::max(iters, 1); ++iter) {
    // Assign.
    double inertia = 0.0;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double bestd = (data.row(i) - centers.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double dd = (data.row(i) - centers.row(c)).squaredNorm();
        if (dd < bestd) {
          bestd = dd;
          best = c;
        }
      }
      res.assign[i] = static_cast<std::uint8_t>(best);
      inertia += bestd;
    }
    res.inertia = inertia;
    res.inertia_history.push_back(inertia);
    if (prev != kInfCost &&
        std::abs(prev - inertia) <= 1e-6 * std::max(prev, 1e-30)) {
      break;
    }
    prev = inertia;
    // Update.
    Mat sums = Mat::Zero(k, d);
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) {
      sums.row(res.assign[i]) += data.row(i);
      ++counts[res.assign[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) centers.row(c) = sums.row(c) / counts[c];
    }
  }

  // Drop empty clusters, remap codes.
  std::vector<int> counts(k, 0);
  for (int i = 0; i < n; ++i) ++counts[res.assign[i]];
  std::vector<int> remap(k, -1);
  int kept = 0;
  for (int c = 0; c < k; ++c) {
    if (counts[c] > 0) remap[c] = kept++;
  }
  res.centers.resize(kept, d);
  for (int c = 0; c < k; ++c) {
    if (remap[c] >= 0) res.centers.row(remap[c]) = centers.row(c);
  }
  for (int i = 0; i < n; ++i) {
    res.assign[i] = static_cast<std::uint8_t>(remap[res.assign[i]]);
  }
  return res;
}

}  // namespace detail

/// Product quantization of a rows x dim matrix: the columns are cut into
/// equal chunks, each chunk vector-quantized with its own codebook, and each
/// row stored as one center index per chunk.  When chunk_size does not divide
/// dim the rows are zero-padded (padding recorded, stripped on reconstruct).
struct PQCodebook {
  int rows = 0;
  int dim = 0;
  int chunk_size = 0;
  int num_chunks = 0;
  int centers_requested = 0;
  std::vector<Mat> centers;            // per chunk: n_centers x chunk_size
  std::vector<std::uint8_t> codes;     // rows x num_chunks, row-major

  int code_at(int row, int chunk) const {
    return codes[static_cast<std::size_t>(row) * num_chunks + chunk];
  }

  /// Bits per stored index, from the requested center count.
  int code_bits() const {
    int bits = 1;
    while ((1 << bits) < centers_requested) ++bits;
    return bits;
  }

  /// Exact storage: centers as 32-bit floats plus packed indices.
  double compressed_bytes() const {
    double b = 0.0;
    for (const Mat& c : centers) {
      b += static_cast<double>(c.rows()) * chunk_size * 4.0;
    }
    b += static_cast<double>(rows) * num_chunks * code_bits() / 8.0;
    return b;
  }

  Vec reconstruct_row(int row) const {
    Vec v(dim);
    for (int j = 0; j < num_chunks; ++j) {
      const int width = std::min(chunk_size, dim - j * chunk_size);
      v.segment(j * chunk_size, width) =
          centers[j].row(code_at(row, j)).head(width);
    }
    return v;
  }

  Mat reconstruct() const {
    Mat m(rows, dim);
    for (int i = 0; i < rows; ++i) m.row(i) = reconstruct_row(i);
    return m;
  }

  /// Row logits <row_i, r> + bias_i via the per-chunk lookup table: dot
  /// products are computed once per (chunk, center) instead of per row.
  Vec logits(const Vec& r, const Vec& bias) const {
    LR_CHECK(r.size() == dim, "pq logits: dimension mismatch, got "
                                  << r.size() << " want " << dim);
    LR_CHECK(bias.size() == rows, "pq logits: bias size mismatch");
    std::vector<Vec> table(num_chunks);
    for (int j = 0; j < num_chunks; ++j) {
      const int width = std::min(chunk_size, dim - j * chunk_size);
      table[j] = centers[j].leftCols(width) * r.segment(j * chunk_size, width);
    }
    Vec out = bias;
    for (int i = 0; i < rows; ++i) {
      double acc = 0.0;
      for (int j = 0; j < num_chunks; ++j) acc += table[j][code_at(i, j)];
      out[i] += acc;
    }
    return out;
  }

  /// Single-row logit without the table (cheap for arc-at-a-time scoring).
  double logit(int row, const Vec& r, double bias) const {
    double acc = bias;
    for (int j = 0; j < num_chunks; ++j) {
      const int width = std::min(chunk_size, dim - j * chunk_size);
      acc += centers[j].row(code_at(row, j)).head(width).dot(
          r.segment(j * chunk_size, width));
    }
    return acc;
  }
};

inline PQCodebook pq_train(const Mat& matrix, int chunk_size, int n_centers,
                           int iters, std::uint64_t seed) {
  LR_CHECK(matrix.rows() > 0 && matrix.cols() > 0, "pq_train: empty matrix");
  LR_CHECK(chunk_size >= 1, "pq_train: chunk_size must be >= 1");
  LR_CHECK(n_centers >= 1 && n_centers <= 256,
           "pq_train: centers must be in [1, 256] (8-bit codes)");
  LR_CHECK(n_centers <= matrix.rows(),
           "pq_train: more centers than matrix rows");

  PQCodebook cb;
  cb.rows = static_cast<int>(matrix.rows());
  cb.dim = static_cast<int>(matrix.cols());
  cb.chunk_size = chunk_size;
  cb.num_chunks = (cb.dim + chunk_size - 1) / chunk_size;
  cb.centers_requested = n_centers;
  cb.centers.resize(cb.num_chunks);
  cb.codes.assign(static_cast<std::size_t>(cb.rows) * cb.num_chunks, 0);

  Rng rng(seed);
  for (int j = 0; j < cb.num_chunks; ++j) {
    Mat slice = Mat::Zero(cb.rows, chunk_size);  // zero padding on last chunk
    const int width = std::min(chunk_size, cb.dim - j * chunk_size);
    slice.leftCols(width) = matrix.middleCols(j * chunk_size, width);
    auto km = detail::kmeans(slice, n_centers, iters, rng);
    cb.centers[j] = std::move(km.centers);
    for (int i = 0; i < cb.rows; ++i) {
      cb.codes[static_cast<std::size_t>(i) * cb.num_chunks + j] = km.assign[i];
    }
  }
  return cb;
}

inline Mat pq_reconstruct(const PQCodebook& cb) { return cb.reconstruct(); }

/// Byte accounting for a set of quantized matrices.
struct CompressionReport {
  double original_bytes = 0.0;    // 32-bit float storage of the inputs
  double compressed_bytes = 0.0;  // indices + codebook centers
  double ratio = 0.0;
  double embedding_mse = 0.0;
  double softmax_mse = 0.0;
};

inline double matrix_mse(const Mat& a, const Mat& b) {
  return (a - b).squaredNorm() / static_cast<double>(a.size());
}

}  // namespace latrescore
