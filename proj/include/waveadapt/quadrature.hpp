#pragma once

#include <array>
#include <cmath>

namespace waveadapt::quad {

/// Gauss-Legendre rule on [-1, 1].
template <int N>
struct GaussLegendre;

template <>
struct GaussLegendre<3> {
    static constexpr std::array<double, 3> nodes{-0.774596669241483377035853079956, 0.0,
                                                 0.774596669241483377035853079956};
    static constexpr std::array<double, 3> weights{0.555555555555555555555555555556,
                                                   0.888888888888888888888888888889,
                                                   0.555555555555555555555555555556};
};

template <>
struct GaussLegendre<5> {
    static constexpr std::array<double, 5> nodes{
        -0.906179845938663992797626878299, -0.538469310105683091036314420700, 0.0,
        0.538469310105683091036314420700, 0.906179845938663992797626878299};
    static constexpr std::array<double, 5> weights{
        0.236926885056189087514264040720, 0.478628670499366468041291514836,
        0.568888888888888888888888888889, 0.478628670499366468041291514836,
        0.236926885056189087514264040720};
};

/// Integrates f over [a, b] with an N-point Gauss-Legendre rule.
template <int N, class F>
double integrate(F&& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double sum = 0.0;
    for (int i = 0; i < N; ++i) {
        sum += GaussLegendre<N>::weights[i] * f(mid + half * GaussLegendre<N>::nodes[i]);
    }
    return sum * half;
}

}  // namespace waveadapt::quad
