#pragma once

#include <cmath>
#include <complex>
#include <numbers>

#include "ssqmc/rng.hpp"

namespace ssqmc {

using cplx = std::complex<double>;

// One sampled stochastic increment together with the moment it is engineered
// to reproduce: order 2 means E[value^2] = target, order 3 means the sample
// itself satisfies value^3 = target while E[value] = E[value^2] = 0.
struct NoiseIncrement {
    cplx value{0.0, 0.0};
    int order = 2;
    cplx target_moment{0.0, 0.0};
};

// value = sqrt(target) * g with g a real standard normal, so value^2/g^2
// equals the target exactly sample by sample.
inline NoiseIncrement sample_second_order(cplx target, RngStream& rng) {
    const double g = rng.normal();
    return NoiseIncrement{std::sqrt(target) * g, 2, target};
}

inline constexpr cplx cube_omega{-0.5, 0.8660254037844386467637231707529362};

// Uniform over the three cube roots of the target: c, c*w, c*w^2 with
// w = exp(2*pi*i/3). Each sample cubes to the target; the first, second and
// fourth moments vanish identically.
inline NoiseIncrement sample_third_order(cplx target, RngStream& rng) {
    const double r = std::cbrt(std::abs(target));
    const double th = std::arg(target) / 3.0;
    cplx c = r * cplx{std::cos(th), std::sin(th)};
    switch (rng.roll3()) {
        case 1: c *= cube_omega; break;
        case 2: c *= cube_omega * cube_omega; break;
        default: break;
    }
    return NoiseIncrement{c, 3, target};
}

} // namespace ssqmc
