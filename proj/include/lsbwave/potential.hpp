#pragma once

#include "lsbwave/errors.hpp"
#include "lsbwave/linalg.hpp"
#include "lsbwave/spline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

namespace lsbwave {

// ---------------------------------------------------------------------------
// Symmetry transforms
// ---------------------------------------------------------------------------

enum class SymmetryKind { Inversion, Translation, None };

inline const char* to_string(SymmetryKind k) {
    switch (k) {
        case SymmetryKind::Inversion: return "inversion";
        case SymmetryKind::Translation: return "translation";
        case SymmetryKind::None: return "none";
    }
    return "?";
}

/// Linear isometry x -> sigma*x + rho. Inversion through alpha has
/// sigma = -1, rho = 2 alpha; translation by L has sigma = +1, rho = L.
struct SymmetryTransform {
    SymmetryKind kind = SymmetryKind::None;
    double alpha = 0.0;
    double length = 0.0;
    int sigma = 0;
    double rho = 0.0;

    static SymmetryTransform inversion(double alpha) {
        return {SymmetryKind::Inversion, alpha, 0.0, -1, 2.0 * alpha};
    }
    static SymmetryTransform translation(double length) {
        return {SymmetryKind::Translation, 0.0, length, +1, length};
    }
    static SymmetryTransform none() { return {}; }
};

inline double transform_point(const SymmetryTransform& t, double x) {
    if (t.kind == SymmetryKind::None) throw InputError("potential", 0, "transform", "no transform declared");
    return t.sigma * x + t.rho;
}

inline double inverse_transform_point(const SymmetryTransform& t, double y) {
    if (t.kind == SymmetryKind::None) throw InputError("potential", 0, "transform", "no transform declared");
    return t.sigma * (y - t.rho);
}

// ---------------------------------------------------------------------------
// Cell profiles
// ---------------------------------------------------------------------------

namespace profile {
struct Constant {
    double value = 0.0;
};
/// offset + amplitude * cos(2 pi x / period + phase)
struct Cosine {
    double amplitude = 0.0, period = 1.0, phase = 0.0, offset = 0.0;
};
/// height * exp(-(x - center)^2 / (2 width^2))
struct Gaussian {
    double height = 0.0, center = 0.0, width = 1.0;
};
struct Linear {
    double intercept = 0.0, slope = 0.0;
};
/// offset + amplitude * cos(2 pi ln(x) / ln(base) + phase); invariant under x -> base*x.
struct LogCosine {
    double amplitude = 0.0, base = 2.0, phase = 0.0, offset = 0.0;
};
struct Samples {
    ClampedCubicSpline spline;
};
}  // namespace profile

/// Potential shape on the first cell of a domain, in absolute coordinates.
class CellProfile {
public:
    using Variant = std::variant<profile::Constant, profile::Cosine, profile::Gaussian, profile::Linear,
                                 profile::LogCosine, profile::Samples>;

    CellProfile() : v_(profile::Constant{}) {}
    template <class P>
        requires std::is_constructible_v<Variant, P>
    CellProfile(P p) : v_(std::move(p)) {}

    static CellProfile constant(double value) { return profile::Constant{value}; }
    static CellProfile cosine(double amplitude, double period, double phase = 0.0, double offset = 0.0) {
        if (!(period > 0.0)) throw InputError("potential", 0, "profile", "cosine period must be > 0");
        return profile::Cosine{amplitude, period, phase, offset};
    }
    static CellProfile gaussian(double height, double center, double width) {
        if (!(width > 0.0)) throw InputError("potential", 0, "profile", "gaussian width must be > 0");
        return profile::Gaussian{height, center, width};
    }
    static CellProfile linear(double intercept, double slope) { return profile::Linear{intercept, slope}; }
    static CellProfile log_cosine(double amplitude, double base, double phase = 0.0, double offset = 0.0) {
        if (!(base > 0.0) || base == 1.0)
            throw InputError("potential", 0, "profile", "log_cosine base must be positive and != 1");
        return profile::LogCosine{amplitude, base, phase, offset};
    }
    static CellProfile samples(std::vector<double> x, std::vector<double> v) {
        return profile::Samples{ClampedCubicSpline(std::move(x), std::move(v))};
    }

    const Variant& variant() const { return v_; }
    bool is_samples() const { return std::holds_alternative<profile::Samples>(v_); }

    std::string kind_name() const {
        return std::visit(
            [](const auto& p) -> std::string {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, profile::Constant>) return "constant";
                else if constexpr (std::is_same_v<T, profile::Cosine>) return "cosine";
                else if constexpr (std::is_same_v<T, profile::Gaussian>) return "gaussian";
                else if constexpr (std::is_same_v<T, profile::Linear>) return "linear";
                else if constexpr (std::is_same_v<T, profile::LogCosine>) return "log_cosine";
                else return "samples";
            },
            v_);
    }

    double value(double x) const {
        return std::visit(
            [x](const auto& p) -> double {
                using T = std::decay_t<decltype(p)>;
                constexpr double two_pi = 2.0 * std::numbers::pi;
                if constexpr (std::is_same_v<T, profile::Constant>) return p.value;
                else if constexpr (std::is_same_v<T, profile::Cosine>)
                    return p.offset + p.amplitude * std::cos(two_pi * x / p.period + p.phase);
                else if constexpr (std::is_same_v<T, profile::Gaussian>) {
                    const double u = (x - p.center) / p.width;
                    return p.height * std::exp(-0.5 * u * u);
                } else if constexpr (std::is_same_v<T, profile::Linear>)
                    return p.intercept + p.slope * x;
                else if constexpr (std::is_same_v<T, profile::LogCosine>)
                    return p.offset + p.amplitude * std::cos(two_pi * std::log(x) / std::log(p.base) + p.phase);
                else
                    return p.spline.value(x);
            },
            v_);
    }

    double slope(double x) const {
        return std::visit(
            [x](const auto& p) -> double {
                using T = std::decay_t<decltype(p)>;
                constexpr double two_pi = 2.0 * std::numbers::pi;
                if constexpr (std::is_same_v<T, profile::Constant>) return 0.0;
                else if constexpr (std::is_same_v<T, profile::Cosine>)
                    return -p.amplitude * two_pi / p.period * std::sin(two_pi * x / p.period + p.phase);
                else if constexpr (std::is_same_v<T, profile::Gaussian>) {
                    const double u = (x - p.center) / p.width;
                    return -p.height * u / p.width * std::exp(-0.5 * u * u);
                } else if constexpr (std::is_same_v<T, profile::Linear>)
                    return p.slope;
                else if constexpr (std::is_same_v<T, profile::LogCosine>) {
                    const double lb = std::log(p.base);
                    return -p.amplitude * two_pi / (lb * x) * std::sin(two_pi * std::log(x) / lb + p.phase);
                } else
                    return p.spline.slope(x);
            },
            v_);
    }

    /// True when the profile is defined and finite on the whole interval.
    bool covers(const Interval& iv) const {
        if (const auto* s = std::get_if<profile::Samples>(&v_)) {
            const double slack = coordinate_slack(iv);
            if (s->spline.lo() > iv.lo + slack || s->spline.hi() < iv.hi - slack) return false;
        }
        if (const auto* lc = std::get_if<profile::LogCosine>(&v_); lc && iv.lo <= 0.0) return false;
        constexpr int probes = 16;
        for (int i = 0; i <= probes; ++i) {
            const double x = iv.lo + iv.length() * i / probes;
            if (!std::isfinite(value(x)) || !std::isfinite(slope(x))) return false;
        }
        return true;
    }

private:
    Variant v_;
};

// ---------------------------------------------------------------------------
// Domains
// ---------------------------------------------------------------------------

struct DomainSpec {
    int index = 0;  // 1-based position in the potential, assigned by PotentialSpec
    Interval bounds;
    SymmetryTransform transform;
    int cell_count = 1;
    CellProfile first_cell_profile;
    /// Externally sampled profile covering the whole domain. When present it
    /// replaces the generative first-cell construction and the declared
    /// symmetry has to be checked with validate_symmetry.
    std::optional<CellProfile> sampled_profile;

    double cell_length() const { return bounds.length() / cell_count; }
    SymmetryKind kind() const { return transform.kind; }
    bool symmetric() const { return transform.kind != SymmetryKind::None; }
    int sigma() const { return transform.sigma; }

    static DomainSpec inversion(Interval bounds, CellProfile profile) {
        DomainSpec d;
        d.bounds = bounds;
        d.transform = SymmetryTransform::inversion(bounds.mid());
        d.cell_count = 2;
        d.first_cell_profile = std::move(profile);
        return d;
    }
    static DomainSpec translation(Interval bounds, int cells, CellProfile profile) {
        if (cells < 2) throw InputError("potential", 0, "cells", "translation domain needs at least 2 cells");
        DomainSpec d;
        d.bounds = bounds;
        d.transform = SymmetryTransform::translation(bounds.length() / cells);
        d.cell_count = cells;
        d.first_cell_profile = std::move(profile);
        return d;
    }
    static DomainSpec plain(Interval bounds, CellProfile profile) {
        DomainSpec d;
        d.bounds = bounds;
        d.transform = SymmetryTransform::none();
        d.cell_count = 1;
        d.first_cell_profile = std::move(profile);
        return d;
    }
};

inline Interval cell_bounds(const DomainSpec& d, int l) {
    if (l < 1 || l > d.cell_count)
        throw InputError("potential", d.index, "cell index",
                         "cell " + std::to_string(l) + " outside 1.." + std::to_string(d.cell_count));
    const double c = d.cell_length();
    const double lo = d.bounds.lo + (l - 1) * c;
    const double hi = l == d.cell_count ? d.bounds.hi : d.bounds.lo + l * c;
    return {lo, hi};
}

/// 1-based cell containing x; a shared cell boundary belongs to the left cell.
inline int locate_cell(const DomainSpec& d, double x) {
    const double c = d.cell_length();
    int l = static_cast<int>(std::ceil((x - d.bounds.lo) / c));
    return std::clamp(l, 1, d.cell_count);
}

/// Maps x in cell l back to the first cell, F^{-(l-1)}(x).
inline double to_first_cell(const DomainSpec& d, int l, double x) {
    if (l == 1) return x;
    switch (d.kind()) {
        case SymmetryKind::Translation: return x - (l - 1) * d.transform.length;
        case SymmetryKind::Inversion: return 2.0 * d.transform.alpha - x;
        case SymmetryKind::None: break;
    }
    throw InputError("potential", d.index, "cell index", "domain without symmetry has a single cell");
}

inline double cell_potential(const DomainSpec& d, int l, double x) {
    if (d.sampled_profile) return d.sampled_profile->value(x);
    return d.first_cell_profile.value(to_first_cell(d, l, x));
}

inline double cell_potential_slope(const DomainSpec& d, int l, double x) {
    if (d.sampled_profile) return d.sampled_profile->slope(x);
    const double s = d.first_cell_profile.slope(to_first_cell(d, l, x));
    return (l - 1) % 2 == 1 && d.sigma() == -1 ? -s : s;
}

inline double domain_potential(const DomainSpec& d, double x) { return cell_potential(d, locate_cell(d, x), x); }

/// Potential restricted to one cell, with one-sided values at its edges.
struct CellPotential {
    const DomainSpec* domain = nullptr;
    int cell = 1;

    double value(double x) const { return cell_potential(*domain, cell, x); }
    double slope(double x) const { return cell_potential_slope(*domain, cell, x); }
};

// ---------------------------------------------------------------------------
// Full potential
// ---------------------------------------------------------------------------

class PotentialSpec {
public:
    PotentialSpec(std::vector<DomainSpec> domains, double lead_left, double lead_right)
        : domains_(std::move(domains)), lead_left_(lead_left), lead_right_(lead_right) {
        if (domains_.empty()) throw InputError("potential", 0, "domains", "at least one domain is required");
        if (!std::isfinite(lead_left_) || !std::isfinite(lead_right_))
            throw InputError("potential", 0, "leads", "lead potentials must be finite");
        for (std::size_t i = 0; i < domains_.size(); ++i) {
            auto& d = domains_[i];
            d.index = static_cast<int>(i) + 1;
            check_domain(d);
            if (i > 0) {
                const auto& prev = domains_[i - 1];
                if (std::abs(prev.bounds.hi - d.bounds.lo) > coordinate_slack(d.bounds))
                    throw InputError("potential", d.index, "bounds",
                                     "domains must be contiguous and non-overlapping");
                d.bounds.lo = prev.bounds.hi;
            }
        }
    }

    const std::vector<DomainSpec>& domains() const { return domains_; }
    int domain_count() const { return static_cast<int>(domains_.size()); }
    const DomainSpec& domain(int d) const {
        if (d < 1 || d > domain_count())
            throw InputError("potential", d, "domain index", "domain index out of range");
        return domains_[d - 1];
    }
    double lead_left() const { return lead_left_; }
    double lead_right() const { return lead_right_; }
    Interval region() const { return {domains_.front().bounds.lo, domains_.back().bounds.hi}; }

    /// 1-based domain containing x, 0 outside the interaction region. A shared
    /// boundary belongs to the left domain.
    int locate_domain(double x) const {
        if (x < region().lo || x > region().hi) return 0;
        for (const auto& d : domains_)
            if (x <= d.bounds.hi) return d.index;
        return domain_count();
    }

private:
    static void check_domain(DomainSpec& d) {
        if (!(d.bounds.hi > d.bounds.lo) || !std::isfinite(d.bounds.lo) || !std::isfinite(d.bounds.hi))
            throw InputError("potential", d.index, "bounds", "domain bounds must be finite with lo < hi");
        const double slack = coordinate_slack(d.bounds);
        switch (d.kind()) {
            case SymmetryKind::Inversion:
                if (d.cell_count != 2) throw InputError("potential", d.index, "cells", "inversion domain has 2 cells");
                if (std::abs(d.transform.alpha - d.bounds.mid()) > slack)
                    throw InputError("potential", d.index, "alpha", "inversion center must be the domain midpoint");
                if (d.transform.sigma != -1 || std::abs(d.transform.rho - 2.0 * d.transform.alpha) > slack)
                    throw InputError("potential", d.index, "sigma", "inversion needs sigma=-1, rho=2 alpha");
                break;
            case SymmetryKind::Translation:
                if (d.cell_count < 2)
                    throw InputError("potential", d.index, "cells", "translation domain needs >= 2 cells");
                if (!(d.transform.length > 0.0) ||
                    std::abs(d.cell_count * d.transform.length - d.bounds.length()) > slack * d.cell_count)
                    throw InputError("potential", d.index, "period", "domain length must equal cells * period");
                if (d.transform.sigma != 1 || std::abs(d.transform.rho - d.transform.length) > slack)
                    throw InputError("potential", d.index, "sigma", "translation needs sigma=+1, rho=L");
                break;
            case SymmetryKind::None:
                if (d.cell_count != 1)
                    throw InputError("potential", d.index, "cells", "domain without symmetry has a single cell");
                break;
        }
        if (d.sampled_profile) {
            if (!d.sampled_profile->covers(d.bounds))
                throw InputError("potential", d.index, "profile", "sampled profile must cover the whole domain");
        } else if (!d.first_cell_profile.covers(cell_bounds(d, 1))) {
            throw InputError("potential", d.index, "profile", "profile must be finite on the full first cell");
        }
    }

    std::vector<DomainSpec> domains_;
    double lead_left_ = 0.0;
    double lead_right_ = 0.0;
};

inline double evaluate_potential(const PotentialSpec& p, double x) {
    const int d = p.locate_domain(x);
    if (d == 0) return x < p.region().lo ? p.lead_left() : p.lead_right();
    return domain_potential(p.domain(d), x);
}

// ---------------------------------------------------------------------------
// Symmetry validation
// ---------------------------------------------------------------------------

struct SymmetryReport {
    double max_abs_deviation = 0.0;
    bool pass = true;
};

/// Points where the declared transform applies: the whole domain for an
/// inversion, all but the last cell for a translation.
inline Interval transform_region(const DomainSpec& d) {
    if (d.kind() == SymmetryKind::Translation) return {d.bounds.lo, d.bounds.hi - d.transform.length};
    return d.bounds;
}

inline SymmetryReport validate_symmetry(const PotentialSpec& p, const DomainSpec& d, int n_samples, double tol) {
    (void)p;
    if (n_samples < 2) throw InputError("potential", d.index, "n_samples", "need at least 2 samples");
    if (!d.symmetric()) return {0.0, true};

    const Interval region = transform_region(d);
    const double slack = coordinate_slack(d.bounds);
    std::vector<double> xs;
    xs.reserve(static_cast<std::size_t>(n_samples));
    for (int i = 0; i < n_samples; ++i) xs.push_back(region.lo + region.length() * i / (n_samples - 1));
    // Sample tables are only exact at their knots, so probe the knots and
    // their preimages as well.
    if (d.sampled_profile && d.sampled_profile->is_samples()) {
        const auto& knots = std::get<profile::Samples>(d.sampled_profile->variant()).spline.knots();
        for (double k : knots) {
            if (region.contains(k, slack)) xs.push_back(k);
            const double pre = inverse_transform_point(d.transform, k);
            if (region.contains(pre, slack)) xs.push_back(pre);
        }
    }

    SymmetryReport r;
    for (double x : xs) {
        x = std::clamp(x, region.lo, region.hi);
        const double xbar = std::clamp(transform_point(d.transform, x), d.bounds.lo, d.bounds.hi);
        r.max_abs_deviation = std::max(r.max_abs_deviation, std::abs(domain_potential(d, xbar) - domain_potential(d, x)));
    }
    r.pass = r.max_abs_deviation <= tol;
    return r;
}

/// Builds a potential from externally sampled domain profiles and rejects it
/// when a declared symmetry does not hold on the samples.
inline PotentialSpec import_potential(std::vector<DomainSpec> domains, double lead_left, double lead_right,
                                      int n_samples = 400, double tol = 1e-9) {
    PotentialSpec p(std::move(domains), lead_left, lead_right);
    for (const auto& d : p.domains()) {
        if (!d.sampled_profile) continue;
        const auto rep = validate_symmetry(p, d, n_samples, tol);
        if (!rep.pass)
            throw InputError("potential", d.index, "symmetry",
                             "declared " + std::string(to_string(d.kind())) + " symmetry violated, max deviation " +
                                 std::to_string(rep.max_abs_deviation));
    }
    return p;
}

}  // namespace lsbwave
