#pragma once

// Data-parallel inner loops shared by the renderer, the polarisation fit and
// the light-direction objective. Every kernel has a scalar reference and, on
// x86-64, an AVX2/FMA variant picked at runtime from CPUID.

#include <cstddef>
#include <span>
#include <string_view>

namespace phpol::simd {

enum class Isa { Scalar, Avx2 };

const char* to_string(Isa isa);
/// Accepts "scalar", "avx2" or "auto" (best supported).
Isa parse_isa(std::string_view name);
bool isa_supported(Isa isa);
Isa best_isa();

/// Selects the kernels used by the free functions below. Throws
/// std::invalid_argument when the CPU lacks the instruction set.
void set_active_isa(Isa isa);
Isa active_isa();

/// Light components entering the two-source residuals.
struct LightCoefficients {
    double s1, s2, s3;
    double t1, t2, t3;
};

struct KernelTable {
    Isa isa;
    double (*light_objective)(const double* i1, const double* i2, const double* zx,
                              const double* zy, std::size_t n, const LightCoefficients& l);
    void (*modulate)(const double* base, const double* a, const double* b, double c, double s,
                     double* out, std::size_t n);
    void (*accumulate_moments)(const double* x, double c, double s, double* s0, double* sc,
                               double* ss, std::size_t n);
};

/// Kernel table for a specific instruction set (for equivalence testing).
const KernelTable& kernels_for(Isa isa);
const KernelTable& kernels();

/// Sum over entries of min(r^2, q^2), where with u = i1 t3 - i2 s3 and
/// w = zx (i2 s1 - i1 t1) + zy (i2 s2 - i1 t2) the two sign branches are
/// r = u + w and q = u - w, so min(r^2, q^2) = (|u| - |w|)^2.
double light_objective(std::span<const double> i1, std::span<const double> i2,
                       std::span<const double> zx, std::span<const double> zy,
                       const LightCoefficients& l);

/// out[p] = base[p] * (1 + a[p] c + b[p] s): one polariser sample of the
/// transmitted radiance sinusoid with c = cos 2v, s = sin 2v.
void modulate(std::span<const double> base, std::span<const double> a, std::span<const double> b,
              double c, double s, std::span<double> out);

/// s0 += x, sc += c x, ss += s x (moments of one polariser image).
void accumulate_moments(std::span<const double> x, double c, double s, std::span<double> s0,
                        std::span<double> sc, std::span<double> ss);

namespace detail {
const KernelTable& scalar_table();
#if defined(PHPOL_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
}  // namespace detail

}  // namespace phpol::simd
