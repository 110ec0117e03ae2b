#pragma once

/**
 * @file jet.hpp
 * @brief Truncated bivariate Taylor polynomials (jets).
 *
 * A Jet2<N> holds the coefficients c_ab of
 *     sum_{a+b<=N} c_ab dx^a dy^b
 * about an implicit expansion point. Products truncate at total degree N and
 * elementary functions are composed through their univariate Taylor series,
 * so every partial derivative d^a_x d^b_y f(x0) = a! b! c_ab is exact up to
 * rounding.
 */

#include <array>
#include <cmath>
#include <cstddef>

namespace sge {

template <int N>
class Jet2 {
public:
    static constexpr int degree = N;
    static constexpr std::size_t size = static_cast<std::size_t>((N + 1) * (N + 2) / 2);

    /// Storage position of dx^a dy^b (graded by total degree).
    static constexpr std::size_t index(int a, int b)
    {
        const int d = a + b;
        return static_cast<std::size_t>(d * (d + 1) / 2 + b);
    }

    constexpr Jet2() = default;
    constexpr Jet2(double constant) { c_[0] = constant; }  // NOLINT: implicit embedding of constants

    /// The coordinate x evaluated at x0 (first variable) as a jet.
    static constexpr Jet2 variable_x(double x0)
    {
        Jet2 j(x0);
        if constexpr (N >= 1) j.c_[index(1, 0)] = 1.0;
        return j;
    }
    static constexpr Jet2 variable_y(double y0)
    {
        Jet2 j(y0);
        if constexpr (N >= 1) j.c_[index(0, 1)] = 1.0;
        return j;
    }

    [[nodiscard]] constexpr double coeff(int a, int b) const
    {
        return (a < 0 || b < 0 || a + b > N) ? 0.0 : c_[index(a, b)];
    }
    constexpr double& coeff(int a, int b) { return c_[index(a, b)]; }

    [[nodiscard]] constexpr double value() const { return c_[0]; }

    /// d^a/dx^a d^b/dy^b at the expansion point.
    [[nodiscard]] double derivative(int a, int b) const
    {
        return coeff(a, b) * factorial(a) * factorial(b);
    }

    [[nodiscard]] const std::array<double, size>& coefficients() const { return c_; }

    Jet2& operator+=(const Jet2& o)
    {
        for (std::size_t i = 0; i < size; ++i) c_[i] += o.c_[i];
        return *this;
    }
    Jet2& operator-=(const Jet2& o)
    {
        for (std::size_t i = 0; i < size; ++i) c_[i] -= o.c_[i];
        return *this;
    }
    Jet2& operator*=(double s)
    {
        for (double& v : c_) v *= s;
        return *this;
    }
    Jet2& operator*=(const Jet2& o) { return *this = *this * o; }

    friend Jet2 operator+(Jet2 a, const Jet2& b) { return a += b; }
    friend Jet2 operator-(Jet2 a, const Jet2& b) { return a -= b; }
    friend Jet2 operator-(Jet2 a)
    {
        for (double& v : a.c_) v = -v;
        return a;
    }
    friend Jet2 operator*(Jet2 a, double s) { return a *= s; }
    friend Jet2 operator*(double s, Jet2 a) { return a *= s; }
    friend Jet2 operator/(Jet2 a, double s) { return a *= 1.0 / s; }

    friend Jet2 operator*(const Jet2& a, const Jet2& b)
    {
        Jet2 r;
        for (int da = 0; da <= N; ++da) {
            for (int ia = 0; ia <= da; ++ia) {
                const double ca = a.c_[index(da - ia, ia)];
                if (ca == 0.0) continue;
                for (int db = 0; db <= N - da; ++db) {
                    for (int ib = 0; ib <= db; ++ib) {
                        r.c_[index(da - ia + db - ib, ia + ib)] += ca * b.c_[index(db - ib, ib)];
                    }
                }
            }
        }
        return r;
    }

    /// f(a) = sum_k f^(k)(a0)/k! (a - a0)^k, given derivs[k] = f^(k)(a0).
    [[nodiscard]] Jet2 compose(const std::array<double, N + 1>& derivs) const
    {
        Jet2 shifted = *this;
        shifted.c_[0] = 0.0;
        Jet2 power(1.0);
        Jet2 r;
        double inv_fact = 1.0;
        for (int k = 0; k <= N; ++k) {
            if (k > 0) {
                power = power * shifted;
                inv_fact /= k;
            }
            r += power * (derivs[static_cast<std::size_t>(k)] * inv_fact);
        }
        return r;
    }

private:
    static double factorial(int k)
    {
        double f = 1.0;
        for (int i = 2; i <= k; ++i) f *= i;
        return f;
    }

    std::array<double, size> c_{};
};

template <int N>
Jet2<N> exp(const Jet2<N>& a)
{
    std::array<double, N + 1> d;
    d.fill(std::exp(a.value()));
    return a.compose(d);
}

template <int N>
Jet2<N> sin(const Jet2<N>& a)
{
    const double s = std::sin(a.value());
    const double c = std::cos(a.value());
    std::array<double, N + 1> d;
    for (int k = 0; k <= N; ++k) {
        const double cycle[4] = {s, c, -s, -c};
        d[static_cast<std::size_t>(k)] = cycle[k % 4];
    }
    return a.compose(d);
}

template <int N>
Jet2<N> cos(const Jet2<N>& a)
{
    const double s = std::sin(a.value());
    const double c = std::cos(a.value());
    std::array<double, N + 1> d;
    for (int k = 0; k <= N; ++k) {
        const double cycle[4] = {c, -s, -c, s};
        d[static_cast<std::size_t>(k)] = cycle[k % 4];
    }
    return a.compose(d);
}

/// Non-negative integer power by repeated multiplication.
template <int N>
Jet2<N> pow(const Jet2<N>& a, int k)
{
    Jet2<N> r(1.0);
    for (int i = 0; i < k; ++i) r = r * a;
    return r;
}

inline double pow(double a, int k) { return std::pow(a, k); }

using Jet4 = Jet2<4>;

} // namespace sge
