#include <atomic>
#include <stdexcept>
#include <string>

#include "phpol/simd/kernels.hpp"

namespace phpol::simd {
namespace {

std::atomic<int>& active_slot() {
    static std::atomic<int> slot{static_cast<int>(best_isa())};
    return slot;
}

void require_same_size(std::size_t a, std::size_t b) {
    if (a != b) throw std::invalid_argument("kernel operands differ in length");
}

}  // namespace

const char* to_string(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
    }
    return "unknown";
}

Isa parse_isa(std::string_view name) {
    if (name == "scalar") return Isa::Scalar;
    if (name == "avx2") return Isa::Avx2;
    if (name == "auto") return best_isa();
    throw std::invalid_argument("unknown instruction set '" + std::string(name) + "'");
}

bool isa_supported(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return true;
        case Isa::Avx2:
#if defined(PHPOL_HAVE_AVX2)
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
    }
    return false;
}

Isa best_isa() { return isa_supported(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar; }

void set_active_isa(Isa isa) {
    if (!isa_supported(isa))
        throw std::invalid_argument(std::string("instruction set not supported here: ") + to_string(isa));
    active_slot().store(static_cast<int>(isa));
}

Isa active_isa() { return static_cast<Isa>(active_slot().load()); }

const KernelTable& kernels_for(Isa isa) {
    if (!isa_supported(isa))
        throw std::invalid_argument(std::string("instruction set not supported here: ") + to_string(isa));
#if defined(PHPOL_HAVE_AVX2)
    if (isa == Isa::Avx2) return detail::avx2_table();
#endif
    return detail::scalar_table();
}

const KernelTable& kernels() { return kernels_for(active_isa()); }

double light_objective(std::span<const double> i1, std::span<const double> i2,
                       std::span<const double> zx, std::span<const double> zy,
                       const LightCoefficients& l) {
    require_same_size(i1.size(), i2.size());
    require_same_size(i1.size(), zx.size());
    require_same_size(i1.size(), zy.size());
    return kernels().light_objective(i1.data(), i2.data(), zx.data(), zy.data(), i1.size(), l);
}

void modulate(std::span<const double> base, std::span<const double> a, std::span<const double> b,
              double c, double s, std::span<double> out) {
    require_same_size(base.size(), a.size());
    require_same_size(base.size(), b.size());
    require_same_size(base.size(), out.size());
    kernels().modulate(base.data(), a.data(), b.data(), c, s, out.data(), base.size());
}

void accumulate_moments(std::span<const double> x, double c, double s, std::span<double> s0,
                        std::span<double> sc, std::span<double> ss) {
    require_same_size(x.size(), s0.size());
    require_same_size(x.size(), sc.size());
    require_same_size(x.size(), ss.size());
    kernels().accumulate_moments(x.data(), c, s, s0.data(), sc.data(), ss.data(), x.size());
}

}  // namespace phpol::simd
