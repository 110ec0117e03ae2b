#pragma once

/**
 * @file quadrature.hpp
 * @brief Symmetric triangle rules (Dunavant, positive-weight subset) and
 *        Gauss-Legendre rules on [0,1].
 */

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace sge {

/// Barycentric points with weights summing to 1; scale by |K| at use.
struct QuadratureRule {
    std::vector<std::array<double, 3>> points;
    std::vector<double> weights;
    int exact_degree = 0;

    [[nodiscard]] std::size_t size() const { return points.size(); }
};

/// 1D rule on [0,1] with weights summing to 1.
struct LineRule {
    std::vector<double> points;
    std::vector<double> weights;
    int exact_degree = 0;

    [[nodiscard]] std::size_t size() const { return points.size(); }
};

namespace detail {

class RuleBuilder {
public:
    explicit RuleBuilder(int degree) { rule_.exact_degree = degree; }

    RuleBuilder& centroid(double w)
    {
        add({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, w);
        return *this;
    }

    /// Orbit of (a, a, 1-2a).
    RuleBuilder& orbit3(double a, double w)
    {
        const double b = 1.0 - 2.0 * a;
        add({a, a, b}, w);
        add({a, b, a}, w);
        add({b, a, a}, w);
        return *this;
    }

    /// Orbit of (a, b, 1-a-b).
    RuleBuilder& orbit6(double a, double b, double w)
    {
        const double c = 1.0 - a - b;
        add({a, b, c}, w);
        add({a, c, b}, w);
        add({b, a, c}, w);
        add({b, c, a}, w);
        add({c, a, b}, w);
        add({c, b, a}, w);
        return *this;
    }

    QuadratureRule build() { return std::move(rule_); }

private:
    void add(std::array<double, 3> p, double w)
    {
        rule_.points.push_back(p);
        rule_.weights.push_back(w);
    }

    QuadratureRule rule_;
};

// Dunavant's rules of degree 1, 2, 4, 5, 6, 8, 9, 10 and 12; all weights
// positive and all points interior. Degrees 3, 7 and 11 are served by the
// next rule up (Dunavant 3 and 7 have a negative weight, 11 has exterior points).
inline QuadratureRule dunavant(int degree)
{
    switch (degree) {
    case 1:
        return RuleBuilder(1).centroid(1.0).build();
    case 2:
        return RuleBuilder(2).orbit3(1.0 / 6.0, 1.0 / 3.0).build();
    case 4:
        return RuleBuilder(4)
            .orbit3(0.44594849091596488631832925388305, 0.22338158967801146569500700843312)
            .orbit3(0.09157621350977074345957146340220, 0.10995174365532186763832632490021)
            .build();
    case 5:
        return RuleBuilder(5)
            .centroid(0.225)
            .orbit3(0.47014206410511508977044120951345, 0.13239415278850618073764938783315)
            .orbit3(0.10128650732345633880098736191512, 0.12593918054482715259568394550018)
            .build();
    case 6:
        return RuleBuilder(6)
            .orbit3(0.24928674517091042129163855310702, 0.11678627572637936602528961138558)
            .orbit3(0.06308901449150222834033160287082, 0.05084490637020681692093680910686)
            .orbit6(0.31035245103378440541660773395655, 0.63650249912139864723014259441205,
                    0.08285107561837357519355345642044)
            .build();
    case 8:
        return RuleBuilder(8)
            .centroid(0.14431560767778716825109111048906)
            .orbit3(0.17056930775176020662229350149146, 0.10321737053471825028179155029212)
            .orbit3(0.05054722831703097545842355059660, 0.03245849762319808031092592834178)
            .orbit3(0.45929258829272315602881551449417, 0.09509163426728462479389610438858)
            .orbit6(0.26311282963463811342178578628464, 0.72849239295540428124100037917606,
                    0.02723031417443499426484469007390)
            .build();
    case 9:
        return RuleBuilder(9)
            .centroid(0.09713579628279609890744676309485)
            .orbit3(0.48968251919873762778370692483619, 0.03133470022713983234393199080984)
            .orbit3(0.43708959149293663726993036443535, 0.07782754100477543338465495857972)
            .orbit3(0.18820353561903273024096128046733, 0.07964773892720910288013526957424)
            .orbit3(0.04472951339445297061024247196780, 0.02557767565869810438673914467637)
            .orbit6(0.22196298916076569567510252769319, 0.74119859878449802069007987352342,
                    0.04328353937728937728937728937729)
            .build();
    case 10:
        return RuleBuilder(10)
            .centroid(0.090817990382754)
            .orbit3(0.485577633383657, 0.036725957756467)
            .orbit3(0.109481575485037, 0.045321059435528)
            .orbit6(0.141707219414880, 0.307939838764121, 0.072757916845420)
            .orbit6(0.025003534762686, 0.246672560639903, 0.028327242531057)
            .orbit6(0.009540815400299, 0.066803251012200, 0.009421666963733)
            .build();
    case 12:
        return RuleBuilder(12)
            .orbit3(0.488217389773805, 0.025731066440455)
            .orbit3(0.439724392294460, 0.043692544538038)
            .orbit3(0.271210385012116, 0.062858224217885)
            .orbit3(0.127576145541586, 0.034796112930709)
            .orbit3(0.021317350453210, 0.006166261051559)
            .orbit6(0.115343494534698, 0.275713269685514, 0.040371557766381)
            .orbit6(0.022838332222257, 0.281325580989940, 0.022356773202303)
            .orbit6(0.025734050548330, 0.116251915907597, 0.017316231108659)
            .build();
    default:
        throw std::invalid_argument("dunavant: unsupported degree");
    }
}

inline void normalize(QuadratureRule& rule)
{
    double sum = 0.0;
    for (double w : rule.weights) sum += w;
    for (double& w : rule.weights) w /= sum;
}

} // namespace detail

/// Symmetric triangle rule exact for polynomials of total degree <= deg.
inline QuadratureRule rule_for_degree(int deg)
{
    if (deg < 1 || deg > 12) {
        throw std::invalid_argument("rule_for_degree: degree must be in [1, 12]");
    }
    static const std::array<int, 13> served_by = {1, 1, 2, 4, 4, 5, 6, 8, 8, 9, 10, 12, 12};
    QuadratureRule rule = detail::dunavant(served_by[static_cast<std::size_t>(deg)]);
    // The degree-10 and degree-12 tables carry 15 digits; renormalize so that
    // constants integrate to rounding precision.
    detail::normalize(rule);
    return rule;
}

/// Gauss-Legendre rule on [0,1] with `npoints` nodes (exact to 2*npoints-1).
inline LineRule gauss_legendre(int npoints)
{
    if (npoints < 1) throw std::invalid_argument("gauss_legendre: need at least one point");
    LineRule rule;
    rule.exact_degree = 2 * npoints - 1;
    rule.points.resize(static_cast<std::size_t>(npoints));
    rule.weights.resize(static_cast<std::size_t>(npoints));
    const int n = npoints;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        const auto lo = static_cast<std::size_t>(i);
        const auto hi = static_cast<std::size_t>(n - 1 - i);
        rule.points[lo] = 0.5 * (1.0 - x);
        rule.points[hi] = 0.5 * (1.0 + x);
        rule.weights[lo] = 0.5 * w;
        rule.weights[hi] = 0.5 * w;
    }
    return rule;
}

/// Gauss-Legendre rule exact to polynomial degree `deg` on a segment.
inline LineRule line_rule_for_degree(int deg)
{
    if (deg < 0) throw std::invalid_argument("line_rule_for_degree: negative degree");
    return gauss_legendre((deg + 2) / 2);
}

} // namespace sge
