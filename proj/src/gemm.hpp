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

#pragma once

// Single-threaded float GEMM kernels used by the convolution layers.

namespace deepball::detail {

/// C[M x N] += A[M x K] * B[K x N].  A(i, k) lives at a[i * a_row + k * a_col],
/// so a transposed operand is passed by swapping the strides.
void gemm_acc(int m, int n, int k, const float* a, int a_row, int a_col, const float* b, int ldb,
              float* c, int ldc);

/// C[M x N] += A[M x K] * B[N x K]^T, both operands row-major and contiguous
/// along K.
void gemm_acc_nt(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
                 int ldc);

}  // namespace deepball::detail
