#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "ancl/errors.hpp"
#include "ancl/rng.hpp"

namespace ancl {

using TimeSeries = std::vector<double>;

/// Gaussian AR(3): X_t = phi_1 X_{t-1} + phi_2 X_{t-2} + phi_3 X_{t-3} + eps_t,
/// eps_t ~ N(0, sigma2). Valid when the characteristic polynomial
/// 1 - phi_1 z - phi_2 z^2 - phi_3 z^3 has all roots outside the unit circle.
struct ARSpec {
    std::array<double, 3> phi{};
    double sigma2 = 1.0;
};

/// Partial autocorrelations, each strictly inside (-1, 1). Any such triple
/// maps to a causal AR(3) through the Durbin-Levinson recursion.
struct PACFSpec {
    std::array<double, 3> kappa{};
};

/// GARCH(1,1) with standardized Student-t innovations (nu > 2).
/// alpha + beta < 1 gives second-order stationarity and, via Jensen,
/// strict stationarity as well.
struct GARCHSpec {
    double omega = 1e-5;
    double alpha = 0.1;
    double beta = 0.85;
    double nu = 10000.0;
};

/// SETAR(2,1,1): AR(1) in each regime, switched on the lagged value against
/// the threshold. max(|phi_1|, |phi_2|) < 1 suffices for strict stationarity.
struct SETARSpec {
    double phi_regime1 = 0.0;
    double phi_regime2 = 0.0;
    double threshold_r = 0.0;
};

// Burn-in defaults used by the scenario generators; geometric memory decay
// makes initialization effects negligible at these lengths.
inline constexpr std::size_t kArBurnIn = 500;
inline constexpr std::size_t kGarchBurnIn = 1000;

/// True iff every root of 1 - phi_1 z - phi_2 z^2 - phi_3 z^3 lies strictly
/// outside the unit circle. The reciprocal roots are the eigenvalues of the
/// companion matrix of z^3 - phi_1 z^2 - phi_2 z - phi_3, so the test is
/// |lambda| < 1/(1 + 1e-10) for all eigenvalues, which classifies boundary
/// cases deterministically.
inline bool check_ar_stationary(const std::array<double, 3>& phi) {
    Eigen::Matrix3d companion;
    companion << phi[0], phi[1], phi[2],
                 1.0,    0.0,    0.0,
                 0.0,    1.0,    0.0;
    const Eigen::Vector3cd lambda = companion.eigenvalues();
    const double bound = 1.0 / (1.0 + 1e-10);
    for (int i = 0; i < 3; ++i) {
        if (std::abs(lambda[i]) >= bound) return false;
    }
    return true;
}

/// Durbin-Levinson recursion from partial autocorrelations to AR(3)
/// coefficients: phi_{m,m} = kappa_m, phi_{m,j} = phi_{m-1,j} -
/// kappa_m phi_{m-1,m-j}. The output (phi_{3,1}, phi_{3,2}, phi_{3,3})
/// is causal for any kappa inside (-1,1)^3.
inline std::array<double, 3> durbin_levinson(const PACFSpec& pacf) {
    for (const double k : pacf.kappa) {
        if (!(std::abs(k) < 1.0)) {
            throw ConfigError("durbin_levinson: partial autocorrelations must lie strictly in (-1, 1)");
        }
    }
    std::array<double, 3> prev{pacf.kappa[0], 0.0, 0.0};
    for (std::size_t m = 2; m <= 3; ++m) {
        std::array<double, 3> cur{};
        cur[m - 1] = pacf.kappa[m - 1];
        for (std::size_t j = 1; j < m; ++j) {
            cur[j - 1] = prev[j - 1] - pacf.kappa[m - 1] * prev[m - j - 1];
        }
        prev = cur;
    }
    return prev;
}

namespace detail {

inline void require_length(std::size_t length) {
    if (length == 0) throw ConfigError("simulate: series length must be at least 1");
}

}  // namespace detail

/// Simulates a Gaussian AR(3) path: zero-initialized, run burn_in extra steps,
/// last `length` values returned.
inline TimeSeries simulate_ar(const ARSpec& spec, std::size_t length, std::size_t burn_in, Rng& rng) {
    detail::require_length(length);
    if (spec.sigma2 <= 0.0) throw ConfigError("simulate_ar: innovation variance must be positive");
    if (!check_ar_stationary(spec.phi)) throw ConfigError("simulate_ar: coefficients are not causal");
    const double sd = std::sqrt(spec.sigma2);
    double x1 = 0.0, x2 = 0.0, x3 = 0.0;
    TimeSeries out;
    out.reserve(length);
    const std::size_t total = burn_in + length;
    for (std::size_t t = 0; t < total; ++t) {
        const double x = spec.phi[0] * x1 + spec.phi[1] * x2 + spec.phi[2] * x3 + sd * rng.normal();
        x3 = x2;
        x2 = x1;
        x1 = x;
        if (t >= burn_in) out.push_back(x);
    }
    return out;
}

/// One draw from the standardized Student-t: t_nu rescaled by sqrt((nu-2)/nu)
/// so the result has zero mean and unit variance.
inline double sample_student_t_std(double nu, Rng& rng) {
    if (!(nu > 2.0)) throw ConfigError("sample_student_t_std: degrees of freedom must exceed 2");
    const double z = rng.normal();
    const double v = rng.chi_squared(nu);
    return z * std::sqrt((nu - 2.0) / v);
}

/// Simulates GARCH(1,1): X_t = sigma_t eps_t with
/// sigma_t^2 = omega + alpha X_{t-1}^2 + beta sigma_{t-1}^2, eps_t ~ t_nu
/// standardized. The variance recursion starts at the unconditional variance
/// omega / (1 - alpha - beta); burn_in steps are discarded.
inline TimeSeries simulate_garch(const GARCHSpec& spec, std::size_t length, std::size_t burn_in, Rng& rng) {
    detail::require_length(length);
    if (spec.omega <= 0.0) throw ConfigError("simulate_garch: omega must be positive");
    if (spec.alpha < 0.0 || spec.beta < 0.0) throw ConfigError("simulate_garch: alpha and beta must be nonnegative");
    if (spec.alpha + spec.beta >= 1.0) throw ConfigError("simulate_garch: requires alpha + beta < 1");
    if (!(spec.nu > 2.0)) throw ConfigError("simulate_garch: degrees of freedom must exceed 2");
    double sigma2 = spec.omega / (1.0 - spec.alpha - spec.beta);
    TimeSeries out;
    out.reserve(length);
    const std::size_t total = burn_in + length;
    for (std::size_t t = 0; t < total; ++t) {
        const double x = std::sqrt(sigma2) * sample_student_t_std(spec.nu, rng);
        if (t >= burn_in) out.push_back(x);
        sigma2 = spec.omega + spec.alpha * x * x + spec.beta * sigma2;
    }
    return out;
}

/// Simulates SETAR(2,1,1) with standard Gaussian innovations. The regime is
/// chosen by X_{t-1} <= r versus X_{t-1} > r; zero-initialized with burn_in
/// steps discarded.
inline TimeSeries simulate_setar(const SETARSpec& spec, std::size_t length, std::size_t burn_in, Rng& rng) {
    detail::require_length(length);
    if (std::max(std::abs(spec.phi_regime1), std::abs(spec.phi_regime2)) >= 1.0) {
        throw ConfigError("simulate_setar: requires max(|phi_1|, |phi_2|) < 1");
    }
    double prev = 0.0;
    TimeSeries out;
    out.reserve(length);
    const std::size_t total = burn_in + length;
    for (std::size_t t = 0; t < total; ++t) {
        const double phi = prev <= spec.threshold_r ? spec.phi_regime1 : spec.phi_regime2;
        const double x = phi * prev + rng.normal();
        if (t >= burn_in) out.push_back(x);
        prev = x;
    }
    return out;
}

}  // namespace ancl
