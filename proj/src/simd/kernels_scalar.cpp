#include <cmath>

#include "phpol/simd/kernels.hpp"

namespace phpol::simd::detail {
namespace {

double light_objective_scalar(const double* i1, const double* i2, const double* zx,
                              const double* zy, std::size_t n, const LightCoefficients& l) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double u = i1[k] * l.t3 - i2[k] * l.s3;
        const double w = zx[k] * (i2[k] * l.s1 - i1[k] * l.t1) + zy[k] * (i2[k] * l.s2 - i1[k] * l.t2);
        const double d = std::fabs(u) - std::fabs(w);
        acc += d * d;
    }
    return acc;
}

void modulate_scalar(const double* base, const double* a, const double* b, double c, double s,
                     double* out, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) out[k] = base[k] * (1.0 + a[k] * c + b[k] * s);
}

void accumulate_moments_scalar(const double* x, double c, double s, double* s0, double* sc,
                               double* ss, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
        s0[k] += x[k];
        sc[k] += c * x[k];
        ss[k] += s * x[k];
    }
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{Isa::Scalar, &light_objective_scalar, &modulate_scalar,
                                   &accumulate_moments_scalar};
    return table;
}

}  // namespace phpol::simd::detail
