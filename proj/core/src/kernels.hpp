// Copyright 2026 The STNet Toolkit Authors. All Rights Reserved.
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

#include <cstddef>

namespace stnet::kernels {

// Row-major single-threaded GEMM variants. All accumulate into C in a
// fixed order so results are reproducible bit-for-bit.

// C(MxN) += A(MxK) * B(KxN). Columns are processed in blocks so the four
// accumulating C rows stay in L1; every element still sums over p in order.
template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const T* __restrict a,
             const T* __restrict b, T* __restrict c) {
  constexpr std::size_t kColBlock = 256;
  for (std::size_t j0 = 0; j0 < n; j0 += kColBlock) {
    const std::size_t nb = n - j0 < kColBlock ? n - j0 : kColBlock;
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) {
      const T* a0 = a + (i + 0) * k;
      const T* a1 = a + (i + 1) * k;
      const T* a2 = a + (i + 2) * k;
      const T* a3 = a + (i + 3) * k;
      T* c0 = c + (i + 0) * n + j0;
      T* c1 = c + (i + 1) * n + j0;
      T* c2 = c + (i + 2) * n + j0;
      T* c3 = c + (i + 3) * n + j0;
      for (std::size_t p = 0; p < k; ++p) {
        const T* brow = b + p * n + j0;
        const T v0 = a0[p], v1 = a1[p], v2 = a2[p], v3 = a3[p];
        for (std::size_t j = 0; j < nb; ++j) {
          const T bv = brow[j];
          c0[j] += v0 * bv;
          c1[j] += v1 * bv;
          c2[j] += v2 * bv;
          c3[j] += v3 * bv;
        }
      }
    }
    for (; i < m; ++i) {
      const T* arow = a + i * k;
      T* crow = c + i * n + j0;
      for (std::size_t p = 0; p < k; ++p) {
        const T* brow = b + p * n + j0;
        const T v = arow[p];
        for (std::size_t j = 0; j < nb; ++j) crow[j] += v * brow[j];
      }
    }
  }
}

// C(KxN) += A(MxK)^T * B(MxN)
template <typename T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const T* __restrict a,
             const T* __restrict b, T* __restrict c) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    const T* brow = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T v = arow[p];
      T* crow = c + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += v * brow[j];
    }
  }
}

// dst(cols x rows) = src(rows x cols)^T
template <typename T>
void transpose(std::size_t rows, std::size_t cols, const T* src, T* dst) {
  constexpr std::size_t kBlock = 32;
  for (std::size_t r0 = 0; r0 < rows; r0 += kBlock) {
    for (std::size_t c0 = 0; c0 < cols; c0 += kBlock) {
      const std::size_t r1 = r0 + kBlock < rows ? r0 + kBlock : rows;
      const std::size_t c1 = c0 + kBlock < cols ? c0 + kBlock : cols;
      for (std::size_t r = r0; r < r1; ++r) {
        for (std::size_t cc = c0; cc < c1; ++cc) dst[cc * rows + r] = src[r * cols + cc];
      }
    }
  }
}

}  // namespace stnet::kernels
