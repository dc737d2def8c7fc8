// include/bisep/tensor.hpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef BISEP_TENSOR_HPP_
#define BISEP_TENSOR_HPP_

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "bisep/errors.hpp"

namespace bisep {

// 64-byte-aligned storage for tensor payloads.  Vectorized kernels split
// their peel/steady/tail loops by pointer alignment, so keeping every
// buffer identically aligned makes floating-point results independent of
// where the allocator happened to place them — a requirement for
// bit-reproducible training runs.
template <typename T, std::size_t Alignment = 64>
struct AlignedAllocator {
  using value_type = T;

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U, Alignment>&) {}

  T* allocate(std::size_t n) {
    if (n == 0) return nullptr;
    return static_cast<T*>(
        ::operator new(n * sizeof(T), std::align_val_t(Alignment)));
  }
  void deallocate(T* p, std::size_t) {
    ::operator delete(p, std::align_val_t(Alignment));
  }

  template <typename U>
  struct rebind {
    using other = AlignedAllocator<U, Alignment>;
  };

  friend bool operator==(const AlignedAllocator&, const AlignedAllocator&) {
    return true;
  }
  friend bool operator!=(const AlignedAllocator&, const AlignedAllocator&) {
    return false;
  }
};

// Dense row-major matrix; row index is the channel, column index the frame
// (a 1 x T row holds a raw signal, a 1 x 1 holds a scalar).
template <typename T>
struct TensorT {
  int rows = 0;
  int cols = 0;
  std::vector<T, AlignedAllocator<T>> data;

  TensorT() = default;
  TensorT(int r, int c) : rows(r), cols(c) {
    if (r < 0 || c < 0) throw ShapeError("tensor: negative dimension");
    data.assign(static_cast<std::size_t>(r) * static_cast<std::size_t>(c),
                T(0));
  }

  static TensorT scalar(T v) {
    TensorT t(1, 1);
    t.data[0] = v;
    return t;
  }

  std::size_t numel() const { return data.size(); }

  T& at(int r, int c) {
    return data[static_cast<std::size_t>(r) * cols + c];
  }
  T at(int r, int c) const {
    return data[static_cast<std::size_t>(r) * cols + c];
  }

  bool same_shape(const TensorT& other) const {
    return rows == other.rows && cols == other.cols;
  }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  using EigenMatrix =
      Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Eigen::Map<EigenMatrix> map() {
    return Eigen::Map<EigenMatrix>(data.data(), rows, cols);
  }
  Eigen::Map<const EigenMatrix> map() const {
    return Eigen::Map<const EigenMatrix>(data.data(), rows, cols);
  }
};

using Tensor = TensorT<float>;

}  // namespace bisep

#endif  // BISEP_TENSOR_HPP_
