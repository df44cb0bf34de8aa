#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "drfuse/error.hpp"
#include "drfuse/features/feature_vector.hpp"
#include "drfuse/image.hpp"

namespace drfuse {

/// Central moments mu_pq for p + q <= 3, indexed [p][q].
using CentralMoments = std::array<std::array<double, 4>, 4>;

struct MaskMoments {
    double m00 = 0.0;
    CentralMoments mu{};
};

// Central moments are accumulated in exact integer arithmetic as
// sum (m00*x - Sx)^p (m00*y - Sy)^q, which is invariant under integer
// translation and maps exactly under 90-degree grid rotations.
inline MaskMoments central_moments(const BinaryMask& mask)
{
    std::int64_t n = 0, sx = 0, sy = 0;
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.at(x, y)) {
                ++n;
                sx += x;
                sy += y;
            }
    if (n == 0)
        fail(Errc::EmptyImage, "moments of an empty mask");

    MaskMoments out;
    out.m00 = static_cast<double>(n);
    const std::int64_t extent = std::max(mask.width, mask.height);
    const bool exact = n < (std::int64_t{1} << 31) / std::max<std::int64_t>(extent, 1);
    if (exact) {
        __int128 acc[4][4] = {};
        for (int y = 0; y < mask.height; ++y)
            for (int x = 0; x < mask.width; ++x) {
                if (!mask.at(x, y))
                    continue;
                const __int128 dx = static_cast<__int128>(n) * x - sx;
                const __int128 dy = static_cast<__int128>(n) * y - sy;
                __int128 px = 1;
                for (int p = 0; p <= 3; ++p) {
                    __int128 term = px;
                    for (int q = 0; p + q <= 3; ++q) {
                        acc[p][q] += term;
                        term *= dy;
                    }
                    px *= dx;
                }
            }
        for (int p = 0; p <= 3; ++p)
            for (int q = 0; p + q <= 3; ++q)
                out.mu[p][q] = static_cast<double>(acc[p][q]) / std::pow(out.m00, p + q);
        return out;
    }
    const double cx = static_cast<double>(sx) / n, cy = static_cast<double>(sy) / n;
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) {
            if (!mask.at(x, y))
                continue;
            const double dx = x - cx, dy = y - cy;
            double px = 1.0;
            for (int p = 0; p <= 3; ++p) {
                double term = px;
                for (int q = 0; p + q <= 3; ++q) {
                    out.mu[p][q] += term;
                    term *= dy;
                }
                px *= dx;
            }
        }
    return out;
}

/// The seven raw Hu invariants.
inline std::array<double, 7> hu_invariants(const MaskMoments& m)
{
    auto eta = [&](int p, int q) { return m.mu[p][q] / std::pow(m.m00, 1.0 + (p + q) / 2.0); };
    const double n20 = eta(2, 0), n02 = eta(0, 2), n11 = eta(1, 1);
    const double n30 = eta(3, 0), n03 = eta(0, 3), n21 = eta(2, 1), n12 = eta(1, 2);

    const double a = n30 + n12, b = n21 + n03;
    const double c = n30 - 3.0 * n12, d = 3.0 * n21 - n03;
    std::array<double, 7> h{};
    h[0] = n20 + n02;
    h[1] = (n20 - n02) * (n20 - n02) + 4.0 * n11 * n11;
    h[2] = c * c + d * d;
    h[3] = a * a + b * b;
    h[4] = c * a * (a * a - 3.0 * b * b) + d * b * (3.0 * a * a - b * b);
    h[5] = (n20 - n02) * (a * a - b * b) + 4.0 * n11 * a * b;
    h[6] = d * a * (a * a - 3.0 * b * b) - c * b * (3.0 * a * a - b * b);
    return h;
}

inline constexpr double kHuLogEpsilon = 1e-30;

/// -sign(h) * log10(|h| + eps); compresses the ten-decade spread of raw values.
inline double signed_log(double h) noexcept
{
    const double s = h > 0.0 ? 1.0 : (h < 0.0 ? -1.0 : 0.0);
    return -s * std::log10(std::abs(h) + kHuLogEpsilon);
}

inline FeatureVector hu_moments(const BinaryMask& mask)
{
    const auto h = hu_invariants(central_moments(mask));
    FeatureVector fv{Block::Hu, {}, kFlagNone};
    fv.values.reserve(7);
    for (double v : h)
        fv.values.push_back(signed_log(v));
    return fv;
}

/// Number of (n, m) pairs with n <= max_order, 0 <= m <= n, n - m even.
constexpr std::size_t zernike_dim(int max_order) noexcept
{
    std::size_t d = 0;
    for (int n = 0; n <= max_order; ++n)
        d += static_cast<std::size_t>(n / 2 + 1);
    return d;
}

/// Coefficients of the radial polynomial R_nm, indexed by power of rho.
inline std::vector<double> zernike_radial_coefficients(int n, int m)
{
    auto fact = [](int k) {
        double f = 1.0;
        for (int i = 2; i <= k; ++i)
            f *= i;
        return f;
    };
    std::vector<double> c(static_cast<std::size_t>(n) + 1, 0.0);
    for (int s = 0; s <= (n - m) / 2; ++s) {
        const double sign = (s % 2) ? -1.0 : 1.0;
        c[n - 2 * s] = sign * fact(n - s) / (fact(s) * fact((n + m) / 2 - s) * fact((n - m) / 2 - s));
    }
    return c;
}

/// |Z(n,m)| over the unit disk centred at the foreground centroid, radius equal
/// to the farthest foreground pixel, ordered by (n, m) ascending.
inline FeatureVector zernike_moments(const BinaryMask& mask, int max_order = 8)
{
    if (max_order < 0)
        fail(Errc::InvalidOrder, "max_order must be >= 0, got " + std::to_string(max_order));

    std::int64_t count = 0;
    double sx = 0.0, sy = 0.0;
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.at(x, y)) {
                ++count;
                sx += x;
                sy += y;
            }
    if (count == 0)
        fail(Errc::EmptyImage, "zernike moments of an empty mask");
    const double cx = sx / count, cy = sy / count;

    double radius = 0.0;
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.at(x, y))
                radius = std::max(radius, std::hypot(x - cx, y - cy));
    if (radius <= 0.0)
        radius = 1.0;

    struct Term {
        int n, m;
        std::vector<double> coef;
    };
    std::vector<Term> terms;
    for (int n = 0; n <= max_order; ++n)
        for (int m = n % 2; m <= n; m += 2)
            terms.push_back({n, m, zernike_radial_coefficients(n, m)});

    std::vector<std::complex<double>> acc(terms.size());
    std::vector<double> rho_pow(static_cast<std::size_t>(max_order) + 1);
    std::vector<std::complex<double>> phase(static_cast<std::size_t>(max_order) + 1);
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) {
            if (!mask.at(x, y))
                continue;
            const double dx = (x - cx) / radius, dy = (y - cy) / radius;
            const double rho = std::hypot(dx, dy);
            // e^{-i m theta} as powers of the conjugate unit direction.
            const std::complex<double> u = rho > 0.0 ? std::complex<double>(dx / rho, -dy / rho) : 1.0;
            rho_pow[0] = 1.0;
            phase[0] = 1.0;
            for (int k = 1; k <= max_order; ++k) {
                rho_pow[k] = rho_pow[k - 1] * rho;
                phase[k] = phase[k - 1] * u;
            }
            for (std::size_t t = 0; t < terms.size(); ++t) {
                double radial = 0.0;
                for (int k = terms[t].m; k <= terms[t].n; k += 2)
                    radial += terms[t].coef[k] * rho_pow[k];
                acc[t] += radial * phase[terms[t].m];
            }
        }

    FeatureVector fv{Block::Zernike, {}, kFlagNone};
    fv.values.reserve(terms.size());
    const double area = 1.0 / (radius * radius);
    for (std::size_t t = 0; t < terms.size(); ++t)
        fv.values.push_back((terms[t].n + 1) / std::numbers::pi * area * std::abs(acc[t]));
    return fv;
}

} // namespace drfuse
