#pragma once

#include <cstddef>
#include <string>

// Dense inner loops used by the codec, the reference embedder and the policies.
// Two backends with the same 4-lane blocked summation order: results are
// bit-identical, so the dispatcher never changes simulation output.
namespace semran::kernels {

enum class Backend { Scalar, Avx2 };

bool avx2_supported();
Backend active_backend();
void set_backend(Backend b);  // throws std::runtime_error when unsupported
std::string backend_name(Backend b);

double dot(const double* a, const double* b, std::size_t n);
double sqdist(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
// y[r] = sum_c A[r*cols + c] * x[c]
void gemv(const double* A, std::size_t rows, std::size_t cols, const double* x, double* y);
// y[c] += sum_r A[r*cols + c] * x[r], accumulated row by row
void gemv_t_acc(const double* A, std::size_t rows, std::size_t cols, const double* x, double* y);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double sqdist(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace scalar

namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double sqdist(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace avx2

}  // namespace semran::kernels
