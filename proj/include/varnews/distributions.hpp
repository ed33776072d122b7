#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace varnews::dist {

enum class LawKind { Gaussian, StudentT, GED };

[[nodiscard]] std::string_view to_string(LawKind kind);
[[nodiscard]] LawKind law_kind_from_string(std::string_view name);

/// Smallest admissible Student-t degrees of freedom; variance standardization needs nu > 2.
inline constexpr double kMinStudentShape = 2.0 + 1e-6;

/// A zero-mean, unit-variance error law. `shape` is nu for StudentT and GED and unused for
/// Gaussian. The Student-t is the classical t scaled by sqrt((nu-2)/nu).
struct ErrorLaw {
    LawKind kind = LawKind::Gaussian;
    double shape = 0.0;

    [[nodiscard]] static ErrorLaw gaussian() { return {LawKind::Gaussian, 0.0}; }
    [[nodiscard]] static ErrorLaw student_t(double nu) { return {LawKind::StudentT, nu}; }
    [[nodiscard]] static ErrorLaw ged(double nu) { return {LawKind::GED, nu}; }

    [[nodiscard]] bool has_shape() const noexcept { return kind != LawKind::Gaussian; }
    bool operator==(const ErrorLaw&) const = default;
};

/// Throws ValidationError when the shape lies outside the law's domain.
void validate(const ErrorLaw& law);
[[nodiscard]] bool shape_in_domain(const ErrorLaw& law) noexcept;

[[nodiscard]] double pdf(const ErrorLaw& law, double z);
/// Evaluated in log space directly; stays finite far into the tails.
[[nodiscard]] double log_pdf(const ErrorLaw& law, double z);
[[nodiscard]] double cdf(const ErrorLaw& law, double z);
/// The tau-quantile of the standardized law, tau in (0,1).
[[nodiscard]] double quantile(const ErrorLaw& law, double tau);
/// E|z| in closed form.
[[nodiscard]] double abs_moment(const ErrorLaw& law);
/// P(z < 0). All implemented laws are symmetric, so this is 1/2, but callers take it from here.
[[nodiscard]] double prob_negative(const ErrorLaw& law);

/// n i.i.d. draws; the generator is seeded from `seed` and owned by the call.
[[nodiscard]] std::vector<double> sample(const ErrorLaw& law, std::uint64_t seed, std::size_t n);

/// Log-density with the law's constants precomputed once; for inner loops.
class LogDensity {
public:
    explicit LogDensity(const ErrorLaw& law);
    [[nodiscard]] double operator()(double z) const noexcept;

private:
    LawKind kind_;
    double shape_ = 0.0;
    double constant_ = 0.0;
    double scale_ = 1.0;  // student: sqrt((nu-2)/nu); GED: lambda
};

/// Scale of the GED kernel: z / lambda enters exp(-|.|^nu / 2).
[[nodiscard]] double ged_lambda(double nu);

}  // namespace varnews::dist
