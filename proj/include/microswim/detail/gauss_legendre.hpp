#pragma once

#include <array>

namespace microswim::detail {

// Gauss-Legendre nodes/weights on [-1, 1].
inline constexpr std::array<double, 16> gl16_nodes = {
    -0.98940093499164994,
    -0.9445750230732326,
    -0.86563120238783176,
    -0.755404408355003,
    -0.61787624440264377,
    -0.45801677765722737,
    -0.28160355077925892,
    -0.095012509837637454,
    0.095012509837637454,
    0.28160355077925892,
    0.45801677765722737,
    0.61787624440264377,
    0.755404408355003,
    0.86563120238783176,
    0.9445750230732326,
    0.98940093499164994,
};

inline constexpr std::array<double, 16> gl16_weights = {
    0.027152459411754037,
    0.062253523938647706,
    0.095158511682492591,
    0.12462897125553403,
    0.14959598881657676,
    0.16915651939500262,
    0.18260341504492361,
    0.18945061045506859,
    0.18945061045506859,
    0.18260341504492361,
    0.16915651939500262,
    0.14959598881657676,
    0.12462897125553403,
    0.095158511682492591,
    0.062253523938647706,
    0.027152459411754037,
};

inline constexpr std::array<double, 32> gl32_nodes = {
    -0.99726386184948157,
    -0.98561151154526838,
    -0.96476225558750639,
    -0.93490607593773967,
    -0.8963211557660522,
    -0.84936761373256997,
    -0.79448379596794239,
    -0.73218211874028971,
    -0.66304426693021523,
    -0.5877157572407623,
    -0.50689990893222936,
    -0.42135127613063533,
    -0.33186860228212767,
    -0.23928736225213706,
    -0.14447196158279649,
    -0.04830766568773831,
    0.04830766568773831,
    0.14447196158279649,
    0.23928736225213706,
    0.33186860228212767,
    0.42135127613063533,
    0.50689990893222936,
    0.5877157572407623,
    0.66304426693021523,
    0.73218211874028971,
    0.79448379596794239,
    0.84936761373256997,
    0.8963211557660522,
    0.93490607593773967,
    0.96476225558750639,
    0.98561151154526838,
    0.99726386184948157,
};

inline constexpr std::array<double, 32> gl32_weights = {
    0.0070186100094692984,
    0.016274394730905965,
    0.025392065309262427,
    0.034273862913021626,
    0.042835898022226426,
    0.050998059262376244,
    0.058684093478535704,
    0.065822222776361752,
    0.072345794108848449,
    0.078193895787070311,
    0.083311924226946846,
    0.087652093004403908,
    0.091173878695763863,
    0.093844399080804566,
    0.095638720079274833,
    0.096540088514727812,
    0.096540088514727812,
    0.095638720079274833,
    0.093844399080804566,
    0.091173878695763863,
    0.087652093004403908,
    0.083311924226946846,
    0.078193895787070311,
    0.072345794108848449,
    0.065822222776361752,
    0.058684093478535704,
    0.050998059262376244,
    0.042835898022226426,
    0.034273862913021626,
    0.025392065309262427,
    0.016274394730905965,
    0.0070186100094692984,
};

// Composite Gauss-Legendre 16 over [a, b] split into `panels` equal panels.
template <typename F>
double gauss16(F&& f, double a, double b, int panels = 8) {
    const double width = (b - a) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * width;
        const double mid = lo + 0.5 * width;
        double acc = 0.0;
        for (int k = 0; k < 16; ++k) acc += gl16_weights[k] * f(mid + 0.5 * width * gl16_nodes[k]);
        total += 0.5 * width * acc;
    }
    return total;
}

}  // namespace microswim::detail
