#pragma once

#include <cstdint>
#include <vector>

#include "liquidseg/image.hpp"
#include "liquidseg/tensor.hpp"

// Data-parallel compute kernels. The default entry points are OpenMP-parallel
// over output (or accumulation-target) indices, so results are independent of
// the thread count. liquidseg::kernels::ref holds naive serial versions of
// the same contracts, kept as the reference implementation for testing and
// benchmarking.

namespace liquidseg::kernels {

enum class PadMode { zero, reflect };

using nn::Tensor;

Tensor pad2d(const Tensor& x, int pad, PadMode mode);
// Adjoint of pad2d: folds padded-border gradients back onto the interior.
Tensor pad2d_backward(const Tensor& dxp, int pad, PadMode mode, int h, int w);

// Valid cross-correlation, weight layout (OC, IC, K, K).
Tensor conv2d_valid(const Tensor& xp, const Tensor& w, const Tensor& b, int stride);
Tensor conv2d_valid_backward_input(const Tensor& dy, const Tensor& w, int stride,
                                   int in_h, int in_w);
void conv2d_valid_backward_params(const Tensor& dy, const Tensor& xp, int stride,
                                  int ksize, Tensor& gw, Tensor& gb);

// 2x2 max pooling, stride 2; argmax in {0,1,2,3} per output element.
Tensor maxpool2(const Tensor& x, std::vector<uint8_t>& argmax);
Tensor maxpool2_backward(const Tensor& dy, const std::vector<uint8_t>& argmax,
                         int in_h, int in_w);

// x2 bilinear upsampling (half-pixel centers) and its adjoint.
Tensor bilinear_up2(const Tensor& x);
Tensor bilinear_up2_backward(const Tensor& dy);

// Morphology with a square all-true structuring element (odd side).
BinaryMask erode(const BinaryMask& m, int ksize);
BinaryMask dilate(const BinaryMask& m, int ksize);

namespace ref {
Tensor conv2d_valid(const Tensor& xp, const Tensor& w, const Tensor& b, int stride);
Tensor conv2d_valid_backward_input(const Tensor& dy, const Tensor& w, int stride,
                                   int in_h, int in_w);
void conv2d_valid_backward_params(const Tensor& dy, const Tensor& xp, int stride,
                                  int ksize, Tensor& gw, Tensor& gb);
Tensor maxpool2(const Tensor& x, std::vector<uint8_t>& argmax);
Tensor bilinear_up2(const Tensor& x);
BinaryMask erode(const BinaryMask& m, int ksize);
BinaryMask dilate(const BinaryMask& m, int ksize);
}  // namespace ref

}  // namespace liquidseg::kernels
