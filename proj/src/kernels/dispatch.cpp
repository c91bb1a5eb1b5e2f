#include <stdexcept>

#include "semran/kernels/kernels.hpp"

namespace semran::kernels {

namespace {

struct Table {
    double (*dot)(const double*, const double*, std::size_t);
    double (*sqdist)(const double*, const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
};

constexpr Table kScalar{scalar::dot, scalar::sqdist, scalar::axpy};
constexpr Table kAvx2{avx2::dot, avx2::sqdist, avx2::axpy};

bool detect_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

Backend g_backend = detect_avx2() ? Backend::Avx2 : Backend::Scalar;
const Table* g_table = detect_avx2() ? &kAvx2 : &kScalar;

}  // namespace

bool avx2_supported() {
    static const bool ok = detect_avx2();
    return ok;
}

Backend active_backend() { return g_backend; }

void set_backend(Backend b) {
    if (b == Backend::Avx2 && !avx2_supported()) throw std::runtime_error("AVX2 backend not supported on this CPU");
    g_backend = b;
    g_table = (b == Backend::Avx2) ? &kAvx2 : &kScalar;
}

std::string backend_name(Backend b) { return b == Backend::Avx2 ? "avx2" : "scalar"; }

double dot(const double* a, const double* b, std::size_t n) { return g_table->dot(a, b, n); }
double sqdist(const double* a, const double* b, std::size_t n) { return g_table->sqdist(a, b, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { g_table->axpy(alpha, x, y, n); }

void gemv(const double* A, std::size_t rows, std::size_t cols, const double* x, double* y) {
    for (std::size_t r = 0; r < rows; ++r) y[r] = g_table->dot(A + r * cols, x, cols);
}

void gemv_t_acc(const double* A, std::size_t rows, std::size_t cols, const double* x, double* y) {
    for (std::size_t r = 0; r < rows; ++r) g_table->axpy(x[r], A + r * cols, y, cols);
}

}  // namespace semran::kernels
