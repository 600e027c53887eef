// Compiled with -mavx2 -mfma; only reached after a CPUID check.

#include <immintrin.h>

#include <cmath>

#include "phpol/simd/kernels.hpp"

namespace phpol::simd::detail {
namespace {

inline __m256d abs_pd(__m256d v) {
    return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v);
}

inline double hsum_pd(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double light_objective_avx2(const double* i1, const double* i2, const double* zx,
                            const double* zy, std::size_t n, const LightCoefficients& l) {
    const __m256d s1 = _mm256_set1_pd(l.s1), s2 = _mm256_set1_pd(l.s2), s3 = _mm256_set1_pd(l.s3);
    const __m256d t1 = _mm256_set1_pd(l.t1), t2 = _mm256_set1_pd(l.t2), t3 = _mm256_set1_pd(l.t3);
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 8 <= n; k += 8) {
        for (int half = 0; half < 2; ++half) {
            const std::size_t o = k + 4 * half;
            const __m256d a = _mm256_loadu_pd(i1 + o);
            const __m256d b = _mm256_loadu_pd(i2 + o);
            const __m256d gx = _mm256_loadu_pd(zx + o);
            const __m256d gy = _mm256_loadu_pd(zy + o);
            const __m256d u = _mm256_fmsub_pd(a, t3, _mm256_mul_pd(b, s3));
            const __m256d cx = _mm256_fmsub_pd(b, s1, _mm256_mul_pd(a, t1));
            const __m256d cy = _mm256_fmsub_pd(b, s2, _mm256_mul_pd(a, t2));
            const __m256d w = _mm256_fmadd_pd(gx, cx, _mm256_mul_pd(gy, cy));
            const __m256d d = _mm256_sub_pd(abs_pd(u), abs_pd(w));
            if (half == 0)
                acc0 = _mm256_fmadd_pd(d, d, acc0);
            else
                acc1 = _mm256_fmadd_pd(d, d, acc1);
        }
    }
    double acc = hsum_pd(_mm256_add_pd(acc0, acc1));
    for (; k < n; ++k) {
        const double u = i1[k] * l.t3 - i2[k] * l.s3;
        const double w = zx[k] * (i2[k] * l.s1 - i1[k] * l.t1) + zy[k] * (i2[k] * l.s2 - i1[k] * l.t2);
        const double d = std::fabs(u) - std::fabs(w);
        acc += d * d;
    }
    return acc;
}

void modulate_avx2(const double* base, const double* a, const double* b, double c, double s,
                   double* out, std::size_t n) {
    const __m256d vc = _mm256_set1_pd(c), vs = _mm256_set1_pd(s), one = _mm256_set1_pd(1.0);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d f = _mm256_fmadd_pd(_mm256_loadu_pd(b + k), vs,
                                          _mm256_fmadd_pd(_mm256_loadu_pd(a + k), vc, one));
        _mm256_storeu_pd(out + k, _mm256_mul_pd(_mm256_loadu_pd(base + k), f));
    }
    for (; k < n; ++k) out[k] = base[k] * (1.0 + a[k] * c + b[k] * s);
}

void accumulate_moments_avx2(const double* x, double c, double s, double* s0, double* sc,
                             double* ss, std::size_t n) {
    const __m256d vc = _mm256_set1_pd(c), vs = _mm256_set1_pd(s);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d v = _mm256_loadu_pd(x + k);
        _mm256_storeu_pd(s0 + k, _mm256_add_pd(_mm256_loadu_pd(s0 + k), v));
        _mm256_storeu_pd(sc + k, _mm256_fmadd_pd(v, vc, _mm256_loadu_pd(sc + k)));
        _mm256_storeu_pd(ss + k, _mm256_fmadd_pd(v, vs, _mm256_loadu_pd(ss + k)));
    }
    for (; k < n; ++k) {
        s0[k] += x[k];
        sc[k] += c * x[k];
        ss[k] += s * x[k];
    }
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable table{Isa::Avx2, &light_objective_avx2, &modulate_avx2,
                                   &accumulate_moments_avx2};
    return table;
}

}  // namespace phpol::simd::detail
