#include "varnews/distributions.hpp"

#include "varnews/common.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace varnews::dist {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // 0.5 * ln(2 pi)

double student_scale(double nu) { return std::sqrt((nu - 2.0) / nu); }

double gaussian_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double student_cdf(double nu, double z) {
    boost::math::students_t_distribution<double> t(nu);
    const double x = z / student_scale(nu);
    return x < 0 ? boost::math::cdf(t, x) : 1.0 - boost::math::cdf(boost::math::complement(t, x));
}

double ged_cdf(double nu, double z) {
    const double u = 0.5 * std::pow(std::abs(z) / ged_lambda(nu), nu);
    const double tail = 0.5 * boost::math::gamma_q(1.0 / nu, u);
    return z < 0 ? tail : 1.0 - tail;
}

// Bracketed TOMS748 on the CDF; used when the closed inverse throws.
double invert_cdf(const ErrorLaw& law, double tau) {
    auto f = [&](double z) { return cdf(law, z) - tau; };
    double lo = -1.0;
    double hi = 1.0;
    while (f(lo) > 0) {
        lo *= 2.0;
        if (lo < -1e6) break;
    }
    while (f(hi) < 0) {
        hi *= 2.0;
        if (hi > 1e6) break;
    }
    if (f(lo) > 0 || f(hi) < 0) {
        std::ostringstream msg;
        msg << "quantile: could not bracket tau=" << tau << " in [" << lo << ", " << hi << "]";
        throw NumericalError(msg.str());
    }
    boost::uintmax_t max_iter = 200;
    auto tol = [](double a, double b) { return std::abs(b - a) < 1e-12; };
    const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, tol, max_iter);
    if (max_iter >= 200) {
        std::ostringstream msg;
        msg << "quantile: root finder did not converge, bracket [" << a << ", " << b << "]";
        throw NumericalError(msg.str());
    }
    return 0.5 * (a + b);
}

}  // namespace

std::string_view to_string(LawKind kind) {
    switch (kind) {
        case LawKind::Gaussian: return "N";
        case LawKind::StudentT: return "T";
        case LawKind::GED: return "GED";
    }
    return "?";
}

LawKind law_kind_from_string(std::string_view name) {
    if (name == "N" || name == "gaussian" || name == "normal") return LawKind::Gaussian;
    if (name == "T" || name == "student_t" || name == "t") return LawKind::StudentT;
    if (name == "GED" || name == "ged") return LawKind::GED;
    throw ValidationError("unknown error law '" + std::string(name) + "'");
}

bool shape_in_domain(const ErrorLaw& law) noexcept {
    switch (law.kind) {
        case LawKind::Gaussian: return true;
        case LawKind::StudentT: return std::isfinite(law.shape) && law.shape > kMinStudentShape;
        case LawKind::GED: return std::isfinite(law.shape) && law.shape > 0.0;
    }
    return false;
}

void validate(const ErrorLaw& law) {
    if (!shape_in_domain(law)) {
        std::ostringstream msg;
        msg << "error law " << to_string(law.kind) << ": shape " << law.shape << " outside domain";
        throw ValidationError(msg.str());
    }
}

double ged_lambda(double nu) {
    return std::sqrt(std::pow(2.0, -2.0 / nu) * std::exp(std::lgamma(1.0 / nu) - std::lgamma(3.0 / nu)));
}

LogDensity::LogDensity(const ErrorLaw& law) : kind_(law.kind), shape_(law.shape) {
    validate(law);
    switch (kind_) {
        case LawKind::Gaussian: constant_ = -kLogSqrt2Pi; break;
        case LawKind::StudentT:
            scale_ = student_scale(shape_);
            constant_ = std::lgamma(0.5 * (shape_ + 1.0)) - std::lgamma(0.5 * shape_) -
                        0.5 * std::log(shape_ * std::numbers::pi) - std::log(scale_);
            break;
        case LawKind::GED:
            scale_ = ged_lambda(shape_);
            constant_ = std::log(shape_) - std::log(scale_) - (1.0 + 1.0 / shape_) * std::numbers::ln2 -
                        std::lgamma(1.0 / shape_);
            break;
    }
}

double LogDensity::operator()(double z) const noexcept {
    switch (kind_) {
        case LawKind::Gaussian: return constant_ - 0.5 * z * z;
        case LawKind::StudentT: {
            const double x = z / scale_;
            return constant_ - 0.5 * (shape_ + 1.0) * std::log1p(x * x / shape_);
        }
        case LawKind::GED: {
            const double a = std::abs(z) / scale_;
            // exponent 2 and 1 are common enough to skip pow
            const double p = shape_ == 2.0 ? a * a : (shape_ == 1.0 ? a : std::pow(a, shape_));
            return constant_ - 0.5 * p;
        }
    }
    return 0.0;
}

double log_pdf(const ErrorLaw& law, double z) { return LogDensity(law)(z); }

double pdf(const ErrorLaw& law, double z) { return std::exp(log_pdf(law, z)); }

double cdf(const ErrorLaw& law, double z) {
    validate(law);
    switch (law.kind) {
        case LawKind::Gaussian: return gaussian_cdf(z);
        case LawKind::StudentT: return student_cdf(law.shape, z);
        case LawKind::GED: return ged_cdf(law.shape, z);
    }
    return 0.0;
}

double quantile(const ErrorLaw& law, double tau) {
    validate(law);
    if (!(tau > 0.0 && tau < 1.0)) throw ValidationError("quantile: tau must lie in (0,1)");
    if (tau == 0.5) return 0.0;
    try {
        switch (law.kind) {
            case LawKind::Gaussian:
                return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * tau);
            case LawKind::StudentT: {
                boost::math::students_t_distribution<double> t(law.shape);
                return boost::math::quantile(t, tau) * student_scale(law.shape);
            }
            case LawKind::GED: {
                const double nu = law.shape;
                const double u = boost::math::gamma_q_inv(1.0 / nu, 2.0 * std::min(tau, 1.0 - tau));
                const double mag = ged_lambda(nu) * std::pow(2.0 * u, 1.0 / nu);
                return tau < 0.5 ? -mag : mag;
            }
        }
    } catch (const std::exception&) {
        return invert_cdf(law, tau);
    }
    return invert_cdf(law, tau);
}

double abs_moment(const ErrorLaw& law) {
    validate(law);
    switch (law.kind) {
        case LawKind::Gaussian: return std::sqrt(2.0 / std::numbers::pi);
        case LawKind::StudentT: {
            const double nu = law.shape;
            return 2.0 * std::sqrt(nu - 2.0) / ((nu - 1.0) * std::sqrt(std::numbers::pi)) *
                   std::exp(std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu));
        }
        case LawKind::GED: {
            const double nu = law.shape;
            return ged_lambda(nu) * std::pow(2.0, 1.0 / nu) *
                   std::exp(std::lgamma(2.0 / nu) - std::lgamma(1.0 / nu));
        }
    }
    return 0.0;
}

double prob_negative(const ErrorLaw& law) {
    validate(law);
    return 0.5;  // every implemented law is symmetric about zero
}

std::vector<double> sample(const ErrorLaw& law, std::uint64_t seed, std::size_t n) {
    validate(law);
    if (n == 0) throw ValidationError("sample: n must be >= 1");
    std::mt19937_64 rng(seed);
    std::vector<double> out(n);
    switch (law.kind) {
        case LawKind::Gaussian: {
            std::normal_distribution<double> normal;
            for (auto& v : out) v = normal(rng);
            break;
        }
        case LawKind::StudentT: {
            const double nu = law.shape;
            const double s = student_scale(nu);
            std::normal_distribution<double> normal;
            std::chi_squared_distribution<double> chi2(nu);
            for (auto& v : out) {
                const double z = normal(rng);
                v = s * z / std::sqrt(chi2(rng) / nu);
            }
            break;
        }
        case LawKind::GED: {
            // |z| = lambda * (2 G)^(1/nu) with G ~ Gamma(1/nu, 1), random sign.
            const double nu = law.shape;
            const double lambda = ged_lambda(nu);
            std::gamma_distribution<double> gamma(1.0 / nu, 1.0);
            std::bernoulli_distribution coin(0.5);
            for (auto& v : out) {
                const double mag = lambda * std::pow(2.0 * gamma(rng), 1.0 / nu);
                v = coin(rng) ? mag : -mag;
            }
            break;
        }
    }
    return out;
}

}  // namespace varnews::dist
