#include "envoc/kernels.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace envoc::kernels {

namespace {
std::atomic<bool> g_parallel{true};

constexpr double kPi = 3.14159265358979323846;

void check_gemm(const Tensor& a, const Tensor& b, Tensor& c, int m, int n, int k_a, int k_b) {
  if (k_a != k_b) throw std::invalid_argument("gemm: inner dimension mismatch");
  if (c.rows != m || c.cols != n) c = Tensor(m, n);
}
}  // namespace

void set_parallel(bool enabled) { g_parallel.store(enabled); }
bool parallel_enabled() { return g_parallel.load(); }

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// ---------------------------------------------------------------------------
// GEMM. Each output row is accumulated serially by one thread, so the
// parallel and serial paths produce bit-identical results.
// ---------------------------------------------------------------------------

void gemm_serial(const Tensor& a, const Tensor& b, Tensor& c) {
  const int m = a.rows, k = a.cols, n = b.cols;
  check_gemm(a, b, c, m, n, k, b.rows);
  for (int i = 0; i < m; ++i) {
    double* ci = c.row(i);
    for (int j = 0; j < n; ++j) ci[j] = 0.0;
    const double* ai = a.row(i);
    for (int p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = b.row(p);
      for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void gemm_parallel(const Tensor& a, const Tensor& b, Tensor& c) {
  const int m = a.rows, k = a.cols, n = b.cols;
  check_gemm(a, b, c, m, n, k, b.rows);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    double* ci = c.row(i);
    for (int j = 0; j < n; ++j) ci[j] = 0.0;
    const double* ai = a.row(i);
    for (int p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = b.row(p);
      for (int j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void gemm(const Tensor& a, const Tensor& b, Tensor& c) {
  if (g_parallel.load() && static_cast<long>(a.rows) * a.cols * b.cols > 16384)
    gemm_parallel(a, b, c);
  else
    gemm_serial(a, b, c);
}

void gemm_nt_serial(const Tensor& a, const Tensor& b, Tensor& c) {
  const int m = a.rows, k = a.cols, n = b.rows;
  check_gemm(a, b, c, m, n, k, b.cols);
  for (int i = 0; i < m; ++i) {
    const double* ai = a.row(i);
    double* ci = c.row(i);
    for (int j = 0; j < n; ++j) {
      const double* bj = b.row(j);
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] = s;
    }
  }
}

void gemm_nt_parallel(const Tensor& a, const Tensor& b, Tensor& c) {
  const int m = a.rows, k = a.cols, n = b.rows;
  check_gemm(a, b, c, m, n, k, b.cols);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    const double* ai = a.row(i);
    double* ci = c.row(i);
    for (int j = 0; j < n; ++j) {
      const double* bj = b.row(j);
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] = s;
    }
  }
}

void gemm_nt(const Tensor& a, const Tensor& b, Tensor& c) {
  if (g_parallel.load() && static_cast<long>(a.rows) * a.cols * b.rows > 16384)
    gemm_nt_parallel(a, b, c);
  else
    gemm_nt_serial(a, b, c);
}

void gemm_tn_serial(const Tensor& a, const Tensor& b, Tensor& c) {
  const int k = a.cols, m = a.rows, n = b.cols;
  if (b.rows != m) throw std::invalid_argument("gemm_tn: inner dimension mismatch");
  if (c.rows != k || c.cols != n) c = Tensor(k, n);
  for (int i = 0; i < k; ++i) {
    double* ci = c.row(i);
    for (int j = 0; j < n; ++j) ci[j] = 0.0;
    for (int p = 0; p < m; ++p) {
      const double api = a(p, i);
      const double* bp = b.row(p);
      for (int j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

void gemm_tn_parallel(const Tensor& a, const Tensor& b, Tensor& c) {
  const int k = a.cols, m = a.rows, n = b.cols;
  if (b.rows != m) throw std::invalid_argument("gemm_tn: inner dimension mismatch");
  if (c.rows != k || c.cols != n) c = Tensor(k, n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < k; ++i) {
    double* ci = c.row(i);
    for (int j = 0; j < n; ++j) ci[j] = 0.0;
    for (int p = 0; p < m; ++p) {
      const double api = a(p, i);
      const double* bp = b.row(p);
      for (int j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

void gemm_tn(const Tensor& a, const Tensor& b, Tensor& c) {
  if (g_parallel.load() && static_cast<long>(a.cols) * a.rows * b.cols > 16384)
    gemm_tn_parallel(a, b, c);
  else
    gemm_tn_serial(a, b, c);
}

// ---------------------------------------------------------------------------
// Conv1d
// ---------------------------------------------------------------------------

namespace {
inline void conv1d_row(const Tensor& x, const Tensor& w, const std::vector<double>& bias,
                       int kernel, int stride, int pad, Tensor& y, int t) {
  const int cin = x.cols, cout = y.cols, tin = x.rows;
  const int t0 = t * stride - pad;
  double* yt = y.row(t);
  for (int co = 0; co < cout; ++co) {
    const double* wr = w.row(co);
    double s = bias.empty() ? 0.0 : bias[co];
    for (int kk = 0; kk < kernel; ++kk) {
      const int ti = t0 + kk;
      if (ti < 0 || ti >= tin) continue;
      const double* xt = x.row(ti);
      const double* wk = wr + kk * cin;
      for (int ci = 0; ci < cin; ++ci) s += wk[ci] * xt[ci];
    }
    yt[co] = s;
  }
}
}  // namespace

void conv1d_forward_serial(const Tensor& x, const Tensor& w, const std::vector<double>& bias,
                           int kernel, int stride, int pad, Tensor& y) {
  const int tout = (x.rows + 2 * pad - kernel) / stride + 1;
  const int cout = w.rows;
  if (w.cols != x.cols * kernel) throw std::invalid_argument("conv1d: weight shape mismatch");
  if (y.rows != tout || y.cols != cout) y = Tensor(tout, cout);
  for (int t = 0; t < tout; ++t) conv1d_row(x, w, bias, kernel, stride, pad, y, t);
}

void conv1d_forward_parallel(const Tensor& x, const Tensor& w, const std::vector<double>& bias,
                             int kernel, int stride, int pad, Tensor& y) {
  const int tout = (x.rows + 2 * pad - kernel) / stride + 1;
  const int cout = w.rows;
  if (w.cols != x.cols * kernel) throw std::invalid_argument("conv1d: weight shape mismatch");
  if (y.rows != tout || y.cols != cout) y = Tensor(tout, cout);
#pragma omp parallel for schedule(static)
  for (int t = 0; t < tout; ++t) conv1d_row(x, w, bias, kernel, stride, pad, y, t);
}

void conv1d_forward(const Tensor& x, const Tensor& w, const std::vector<double>& bias, int kernel,
                    int stride, int pad, Tensor& y) {
  if (g_parallel.load() && static_cast<long>(x.rows) * w.rows * w.cols > 16384)
    conv1d_forward_parallel(x, w, bias, kernel, stride, pad, y);
  else
    conv1d_forward_serial(x, w, bias, kernel, stride, pad, y);
}

void conv1d_backward(const Tensor& x, const Tensor& w, const Tensor& dy, int kernel, int stride,
                     int pad, Tensor& dx, Tensor& dw, std::vector<double>& dbias) {
  const int cin = x.cols, cout = w.rows, tin = x.rows, tout = dy.rows;
  if (dx.rows != tin || dx.cols != cin) dx = Tensor(tin, cin);
  if (dw.rows != cout || dw.cols != cin * kernel) dw = Tensor(cout, cin * kernel);
  if (static_cast<int>(dbias.size()) != cout) dbias.assign(cout, 0.0);

  // dbias and dw: reduce over output positions.
  for (int t = 0; t < tout; ++t) {
    const double* dyt = dy.row(t);
    const int t0 = t * stride - pad;
    for (int co = 0; co < cout; ++co) {
      const double g = dyt[co];
      if (g == 0.0) continue;
      dbias[co] += g;
      double* dwr = dw.row(co);
      for (int kk = 0; kk < kernel; ++kk) {
        const int ti = t0 + kk;
        if (ti < 0 || ti >= tin) continue;
        const double* xt = x.row(ti);
        double* dwk = dwr + kk * cin;
        for (int ci = 0; ci < cin; ++ci) dwk[ci] += g * xt[ci];
      }
    }
  }
  // dx: scatter contributions, one input row owned per iteration.
  const bool par = g_parallel.load() && static_cast<long>(tin) * cout * kernel > 16384;
#pragma omp parallel for schedule(static) if (par)
  for (int ti = 0; ti < tin; ++ti) {
    double* dxt = dx.row(ti);
    for (int kk = 0; kk < kernel; ++kk) {
      const int num = ti + pad - kk;
      if (num < 0 || num % stride != 0) continue;
      const int t = num / stride;
      if (t >= tout) continue;
      const double* dyt = dy.row(t);
      for (int co = 0; co < cout; ++co) {
        const double g = dyt[co];
        const double* wk = w.row(co) + kk * cin;
        for (int ci = 0; ci < cin; ++ci) dxt[ci] += g * wk[ci];
      }
    }
  }
}

// ---------------------------------------------------------------------------
// FFT
// ---------------------------------------------------------------------------

size_t next_pow2(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

namespace {
void fft_impl(std::vector<std::complex<double>>& a, bool inverse, bool parallel) {
  const size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0) throw std::invalid_argument("fft: size must be a power of two");

  // bit-reversal permutation
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }

  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * kPi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    const long nblocks = static_cast<long>(n / len);
#pragma omp parallel for schedule(static) if (parallel && nblocks >= 4 && n >= 4096)
    for (long blk = 0; blk < nblocks; ++blk) {
      const size_t i = static_cast<size_t>(blk) * len;
      std::complex<double> w(1.0, 0.0);
      for (size_t j = 0; j < len / 2; ++j) {
        const std::complex<double> u = a[i + j];
        const std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& x : a) x *= inv;
  }
}
}  // namespace

void fft_serial(std::vector<std::complex<double>>& a, bool inverse) { fft_impl(a, inverse, false); }
void fft_parallel(std::vector<std::complex<double>>& a, bool inverse) { fft_impl(a, inverse, true); }
void fft(std::vector<std::complex<double>>& a, bool inverse) {
  fft_impl(a, inverse, g_parallel.load());
}

namespace {
std::vector<double> fft_convolve_impl(const std::vector<double>& x, const std::vector<double>& h,
                                      bool parallel) {
  if (x.empty() || h.empty()) throw std::invalid_argument("fft_convolve: empty input");
  const size_t out_len = x.size() + h.size() - 1;
  const size_t n = next_pow2(out_len);
  std::vector<std::complex<double>> fx(n), fh(n);
  for (size_t i = 0; i < x.size(); ++i) fx[i] = x[i];
  for (size_t i = 0; i < h.size(); ++i) fh[i] = h[i];
  fft_impl(fx, false, parallel);
  fft_impl(fh, false, parallel);
  for (size_t i = 0; i < n; ++i) fx[i] *= fh[i];
  fft_impl(fx, true, parallel);
  std::vector<double> out(out_len);
  for (size_t i = 0; i < out_len; ++i) out[i] = fx[i].real();
  return out;
}
}  // namespace

std::vector<double> fft_convolve_serial(const std::vector<double>& x, const std::vector<double>& h) {
  return fft_convolve_impl(x, h, false);
}
std::vector<double> fft_convolve_parallel(const std::vector<double>& x,
                                          const std::vector<double>& h) {
  return fft_convolve_impl(x, h, true);
}
std::vector<double> fft_convolve(const std::vector<double>& x, const std::vector<double>& h) {
  return fft_convolve_impl(x, h, g_parallel.load());
}

}  // namespace envoc::kernels
