// Copyright 2026 The DeepBall Authors. All Rights Reserved.
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

#include "gemm.hpp"

#include <algorithm>

namespace deepball::detail {

namespace {

constexpr int kRows = 4;
constexpr int kCols = 32;

// 4 x 32 register tile; the accumulators stay in vector registers across k.
inline void micro_tile(int k, const float* a, int a_row, int a_col, const float* __restrict b, int ldb,
                       float* __restrict c, int ldc) {
  float acc[kRows][kCols] = {};
  for (int p = 0; p < k; ++p) {
    const float* __restrict brow = b + static_cast<long>(p) * ldb;
    for (int r = 0; r < kRows; ++r) {
      const float av = a[static_cast<long>(r) * a_row + static_cast<long>(p) * a_col];
      for (int t = 0; t < kCols; ++t) acc[r][t] += av * brow[t];
    }
  }
  for (int r = 0; r < kRows; ++r) {
    float* __restrict crow = c + static_cast<long>(r) * ldc;
    for (int t = 0; t < kCols; ++t) crow[t] += acc[r][t];
  }
}

inline void edge_tile(int rows, int cols, int k, const float* a, int a_row, int a_col, const float* b,
                      int ldb, float* c, int ldc) {
  for (int r = 0; r < rows; ++r) {
    float* __restrict crow = c + static_cast<long>(r) * ldc;
    for (int p = 0; p < k; ++p) {
      const float av = a[static_cast<long>(r) * a_row + static_cast<long>(p) * a_col];
      const float* __restrict brow = b + static_cast<long>(p) * ldb;
      for (int t = 0; t < cols; ++t) crow[t] += av * brow[t];
    }
  }
}

}  // namespace

void gemm_acc(int m, int n, int k, const float* a, int a_row, int a_col, const float* b, int ldb,
              float* c, int ldc) {
  constexpr int kDepth = 256;
  for (int p0 = 0; p0 < k; p0 += kDepth) {
    const int kb = std::min(kDepth, k - p0);
    const float* ap = a + static_cast<long>(p0) * a_col;
    const float* bp = b + static_cast<long>(p0) * ldb;
    for (int j = 0; j < n; j += kCols) {
      const int nb = std::min(kCols, n - j);
      int i = 0;
      if (nb == kCols) {
        for (; i + kRows <= m; i += kRows) {
          micro_tile(kb, ap + static_cast<long>(i) * a_row, a_row, a_col, bp + j, ldb,
                     c + static_cast<long>(i) * ldc + j, ldc);
        }
      }
      if (i < m) {
        edge_tile(m - i, nb, kb, ap + static_cast<long>(i) * a_row, a_row, a_col, bp + j, ldb,
                  c + static_cast<long>(i) * ldc + j, ldc);
      }
    }
  }
}

void gemm_acc_nt(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
                 int ldc) {
  constexpr int kLanes = 8;
  constexpr int kTileA = 4;
  constexpr int kTileB = 2;
  const int k_vec = k - k % kLanes;
  auto tail_dot = [&](const float* x, const float* y, double s) {
    for (int p = k_vec; p < k; ++p) s += static_cast<double>(x[p]) * y[p];
    return s;
  };
  int i = 0;
  for (; i + kTileA <= m; i += kTileA) {
    int j = 0;
    for (; j + kTileB <= n; j += kTileB) {
      float acc[kTileA][kTileB][kLanes] = {};
      for (int p = 0; p < k_vec; p += kLanes) {
        for (int r = 0; r < kTileA; ++r) {
          const float* __restrict ar = a + static_cast<long>(i + r) * lda + p;
          for (int q = 0; q < kTileB; ++q) {
            const float* __restrict bq = b + static_cast<long>(j + q) * ldb + p;
            for (int t = 0; t < kLanes; ++t) acc[r][q][t] += ar[t] * bq[t];
          }
        }
      }
      for (int r = 0; r < kTileA; ++r) {
        for (int q = 0; q < kTileB; ++q) {
          double s = 0.0;
          for (int t = 0; t < kLanes; ++t) s += acc[r][q][t];
          s = tail_dot(a + static_cast<long>(i + r) * lda, b + static_cast<long>(j + q) * ldb, s);
          c[static_cast<long>(i + r) * ldc + j + q] += static_cast<float>(s);
        }
      }
    }
    for (; j < n; ++j) {
      for (int r = 0; r < kTileA; ++r) {
        const float* ar = a + static_cast<long>(i + r) * lda;
        const float* bj = b + static_cast<long>(j) * ldb;
        float acc[kLanes] = {};
        for (int p = 0; p < k_vec; p += kLanes) {
          for (int t = 0; t < kLanes; ++t) acc[t] += ar[p + t] * bj[p + t];
        }
        double s = 0.0;
        for (int t = 0; t < kLanes; ++t) s += acc[t];
        c[static_cast<long>(i + r) * ldc + j] += static_cast<float>(tail_dot(ar, bj, s));
      }
    }
  }
  for (; i < m; ++i) {
    const float* ar = a + static_cast<long>(i) * lda;
    for (int j = 0; j < n; ++j) {
      const float* bj = b + static_cast<long>(j) * ldb;
      float acc[kLanes] = {};
      for (int p = 0; p < k_vec; p += kLanes) {
        for (int t = 0; t < kLanes; ++t) acc[t] += ar[p + t] * bj[p + t];
      }
      double s = 0.0;
      for (int t = 0; t < kLanes; ++t) s += acc[t];
      c[static_cast<long>(i) * ldc + j] += static_cast<float>(tail_dot(ar, bj, s));
    }
  }
}

}  // namespace deepball::detail
