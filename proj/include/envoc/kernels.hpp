#pragma once

#include <complex>
#include <vector>

#include "envoc/tensor.hpp"

namespace envoc::kernels {

// Runtime switch between the OpenMP kernels and the serial reference path.
// Both paths compute outputs element-by-element in the same order, so results
// are bit-identical; the serial versions stay as the comparison baseline for
// tests and the benchmark tool.
void set_parallel(bool enabled);
bool parallel_enabled();
int thread_count();

// C = A(MxK) * B(KxN)
void gemm_serial(const Tensor& a, const Tensor& b, Tensor& c);
void gemm_parallel(const Tensor& a, const Tensor& b, Tensor& c);
void gemm(const Tensor& a, const Tensor& b, Tensor& c);

// C = A(MxK) * B(NxK)^T  -> MxN
void gemm_nt_serial(const Tensor& a, const Tensor& b, Tensor& c);
void gemm_nt_parallel(const Tensor& a, const Tensor& b, Tensor& c);
void gemm_nt(const Tensor& a, const Tensor& b, Tensor& c);

// C = A(MxK)^T * B(MxN) -> KxN
void gemm_tn_serial(const Tensor& a, const Tensor& b, Tensor& c);
void gemm_tn_parallel(const Tensor& a, const Tensor& b, Tensor& c);
void gemm_tn(const Tensor& a, const Tensor& b, Tensor& c);

// 1-D convolution over time. x is T x Cin, w is Cout x (Cin*K), bias Cout.
// Output T_out x Cout with T_out = (T + 2*pad - K) / stride + 1.
void conv1d_forward_serial(const Tensor& x, const Tensor& w, const std::vector<double>& bias,
                           int kernel, int stride, int pad, Tensor& y);
void conv1d_forward_parallel(const Tensor& x, const Tensor& w, const std::vector<double>& bias,
                             int kernel, int stride, int pad, Tensor& y);
void conv1d_forward(const Tensor& x, const Tensor& w, const std::vector<double>& bias,
                    int kernel, int stride, int pad, Tensor& y);

// Gradients for conv1d: dy is T_out x Cout; accumulates into dx/dw/dbias.
void conv1d_backward(const Tensor& x, const Tensor& w, const Tensor& dy, int kernel, int stride,
                     int pad, Tensor& dx, Tensor& dw, std::vector<double>& dbias);

// In-place iterative radix-2 FFT; size must be a power of two.
void fft_serial(std::vector<std::complex<double>>& a, bool inverse);
void fft_parallel(std::vector<std::complex<double>>& a, bool inverse);
void fft(std::vector<std::complex<double>>& a, bool inverse);

size_t next_pow2(size_t n);

// Linear convolution of two real sequences via FFT, full length n + m - 1.
std::vector<double> fft_convolve_serial(const std::vector<double>& x, const std::vector<double>& h);
std::vector<double> fft_convolve_parallel(const std::vector<double>& x, const std::vector<double>& h);
std::vector<double> fft_convolve(const std::vector<double>& x, const std::vector<double>& h);

}  // namespace envoc::kernels
