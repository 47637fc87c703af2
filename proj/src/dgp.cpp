#include "margex/dgp.hpp"

#include "margex/error.hpp"
#include "margex/quadrature.hpp"
#include "margex/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

namespace margex {

namespace {

void require_finite(double v, const char* what) {
    if (!std::isfinite(v))
        throw Error(ErrorKind::Validation, std::string(what) + " must be finite");
}

std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

// ---------------------------------------------------------------- distribution

ProductivityDistribution ProductivityDistribution::log_normal(double mu, double sigma) {
    require_finite(mu, "lognormal mu");
    require_finite(sigma, "lognormal sigma");
    if (sigma <= 0.0)
        throw Error(ErrorKind::Validation, "lognormal sigma must be > 0");
    ProductivityDistribution d;
    d.family_ = Family::LogNormal;
    d.a_ = mu;
    d.b_ = sigma;
    return d;
}

ProductivityDistribution ProductivityDistribution::exponential(double rate) {
    require_finite(rate, "exponential rate");
    if (rate <= 0.0)
        throw Error(ErrorKind::Validation, "exponential rate must be > 0");
    ProductivityDistribution d;
    d.family_ = Family::Exponential;
    d.a_ = rate;
    return d;
}

ProductivityDistribution ProductivityDistribution::discrete(std::vector<double> support,
                                                            std::vector<double> masses) {
    if (support.empty() || support.size() != masses.size())
        throw Error(ErrorKind::Validation,
                    "discrete distribution needs equally many support points and masses");
    std::vector<size_t> order(support.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t i, size_t j) { return support[i] < support[j]; });

    ProductivityDistribution d;
    d.family_ = Family::Discrete;
    d.support_.reserve(support.size());
    d.masses_.reserve(masses.size());
    for (size_t idx : order) {
        require_finite(support[idx], "discrete support point");
        require_finite(masses[idx], "discrete mass");
        if (support[idx] < 0.0)
            throw Error(ErrorKind::Validation, "discrete support must be nonnegative");
        if (masses[idx] <= 0.0)
            throw Error(ErrorKind::Validation, "discrete masses must be > 0");
        if (!d.support_.empty() && support[idx] == d.support_.back())
            throw Error(ErrorKind::Validation, "discrete support points must be distinct");
        d.support_.push_back(support[idx]);
        d.masses_.push_back(masses[idx]);
    }
    double total = std::accumulate(d.masses_.begin(), d.masses_.end(), 0.0);
    if (std::fabs(total - 1.0) > 1e-12)
        throw Error(ErrorKind::Validation, "discrete masses must sum to 1 (got " +
                                               fmt_g17(total) + ")");
    d.cum_.resize(d.masses_.size());
    double run = 0.0;
    for (size_t i = 0; i < d.masses_.size(); ++i) {
        d.masses_[i] /= total;
        run += d.masses_[i];
        d.cum_[i] = run;
    }
    d.cum_.back() = 1.0;
    return d;
}

double ProductivityDistribution::density(double theta) const {
    if (theta < 0.0)
        throw Error(ErrorKind::Domain, "density: theta must be nonnegative");
    switch (family_) {
    case Family::LogNormal: {
        if (theta == 0.0) return 0.0;
        const double z = (std::log(theta) - a_) / b_;
        return std::exp(-0.5 * z * z) / (theta * b_ * std::sqrt(2.0 * M_PI));
    }
    case Family::Exponential:
        return a_ * std::exp(-a_ * theta);
    case Family::Discrete: {
        auto it = std::lower_bound(support_.begin(), support_.end(), theta);
        if (it != support_.end() && *it == theta)
            return masses_[static_cast<size_t>(it - support_.begin())];
        return 0.0;
    }
    }
    return 0.0;
}

double ProductivityDistribution::cdf(double theta) const {
    if (theta < 0.0)
        throw Error(ErrorKind::Domain, "cdf: theta must be nonnegative");
    switch (family_) {
    case Family::LogNormal:
        if (theta == 0.0) return 0.0;
        return normal_cdf((std::log(theta) - a_) / b_);
    case Family::Exponential:
        return -std::expm1(-a_ * theta);
    case Family::Discrete: {
        // Mass at or below theta (right-continuous step function).
        auto it = std::upper_bound(support_.begin(), support_.end(), theta);
        if (it == support_.begin()) return 0.0;
        return cum_[static_cast<size_t>(it - support_.begin()) - 1];
    }
    }
    return 0.0;
}

double ProductivityDistribution::quantile(double q) const {
    switch (family_) {
    case Family::LogNormal:
        return std::exp(a_ + b_ * normal_quantile(q));
    case Family::Exponential:
        if (!(q > 0.0 && q < 1.0))
            throw Error(ErrorKind::Domain, "quantile: q must lie in (0,1)");
        return -std::log1p(-q) / a_;
    case Family::Discrete: {
        if (!(q >= 0.0 && q <= 1.0))
            throw Error(ErrorKind::Domain, "quantile: q must lie in [0,1]");
        auto it = std::lower_bound(cum_.begin(), cum_.end(), q);
        if (it == cum_.end()) return support_.back();
        return support_[static_cast<size_t>(it - cum_.begin())];
    }
    }
    return 0.0;
}

std::string ProductivityDistribution::describe() const {
    std::ostringstream os;
    switch (family_) {
    case Family::LogNormal:
        os << "lognormal(" << fmt_g17(a_) << "," << fmt_g17(b_) << ")";
        break;
    case Family::Exponential:
        os << "exponential(" << fmt_g17(a_) << ")";
        break;
    case Family::Discrete:
        os << "discrete(";
        for (size_t i = 0; i < support_.size(); ++i)
            os << (i ? ";" : "") << fmt_g17(support_[i]) << ":" << fmt_g17(masses_[i]);
        os << ")";
        break;
    }
    return os.str();
}

// ------------------------------------------------------------- hiring function

HiringFunction HiringFunction::logistic(double intercept, double slope) {
    require_finite(intercept, "logistic intercept");
    require_finite(slope, "logistic slope");
    HiringFunction h;
    h.family_ = Family::Logistic;
    h.a_ = intercept;
    h.b_ = slope; // slope < 0 is representable; validate_spec flags it
    return h;
}

HiringFunction HiringFunction::ratio_shift(double shift) {
    require_finite(shift, "ratio shift");
    if (shift < 0.0)
        throw Error(ErrorKind::Validation,
                    "ratio shift must be >= 0 to keep p(theta) within [0,1]");
    HiringFunction h;
    h.family_ = Family::RatioShift;
    h.a_ = shift;
    return h;
}

HiringFunction HiringFunction::piecewise(std::vector<double> grid,
                                         std::vector<double> values) {
    if (grid.empty() || grid.size() != values.size())
        throw Error(ErrorKind::Validation,
                    "piecewise hiring function needs matching grid and values");
    for (size_t i = 0; i < grid.size(); ++i) {
        require_finite(grid[i], "piecewise grid point");
        require_finite(values[i], "piecewise value");
        if (i > 0 && grid[i] <= grid[i - 1])
            throw Error(ErrorKind::Validation, "piecewise grid must be strictly increasing");
        if (values[i] < 0.0 || values[i] > 1.0)
            throw Error(ErrorKind::Validation, "piecewise values must lie in [0,1]");
    }
    HiringFunction h;
    h.family_ = Family::PiecewiseConstant;
    h.grid_ = std::move(grid);
    h.values_ = std::move(values);
    return h;
}

double HiringFunction::operator()(double theta) const {
    switch (family_) {
    case Family::Logistic: {
        const double t = a_ + b_ * theta;
        if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
        const double e = std::exp(t);
        return e / (1.0 + e);
    }
    case Family::RatioShift:
        return (theta + a_) / (theta + a_ + 1.0);
    case Family::PiecewiseConstant: {
        auto it = std::upper_bound(grid_.begin(), grid_.end(), theta);
        if (it == grid_.begin()) return values_.front();
        return values_[static_cast<size_t>(it - grid_.begin()) - 1];
    }
    }
    return 0.0;
}

std::string HiringFunction::describe() const {
    std::ostringstream os;
    switch (family_) {
    case Family::Logistic:
        os << "logistic(" << fmt_g17(a_) << "," << fmt_g17(b_) << ")";
        break;
    case Family::RatioShift:
        os << "ratio_shift(" << fmt_g17(a_) << ")";
        break;
    case Family::PiecewiseConstant:
        os << "piecewise(";
        for (size_t i = 0; i < grid_.size(); ++i)
            os << (i ? ";" : "") << fmt_g17(grid_[i]) << ":" << fmt_g17(values_[i]);
        os << ")";
        break;
    }
    return os.str();
}

// ------------------------------------------------------------ outcome function

OutcomeFunction::OutcomeFunction(double c0, double c1, double c2)
    : c0_(c0), c1_(c1), c2_(c2) {
    require_finite(c0, "outcome c0");
    require_finite(c1, "outcome c1");
    require_finite(c2, "outcome c2");
}

std::string OutcomeFunction::describe() const {
    return "poly(" + fmt_g17(c0_) + "," + fmt_g17(c1_) + "," + fmt_g17(c2_) + ")";
}

// ------------------------------------------------------------- covariate model

CovariateModel CovariateModel::identity() {
    return CovariateModel{};
}

CovariateModel CovariateModel::binned(int cells) {
    if (cells < 2)
        throw Error(ErrorKind::Validation, "binned covariate needs at least 2 cells");
    CovariateModel cm;
    cm.mode_ = Mode::Binned;
    cm.cells_ = cells;
    return cm;
}

CovariateModel CovariateModel::binned_with_edges(std::vector<double> interior_edges) {
    if (interior_edges.empty())
        throw Error(ErrorKind::Validation, "binned covariate needs at least one edge");
    for (size_t i = 1; i < interior_edges.size(); ++i)
        if (interior_edges[i] <= interior_edges[i - 1])
            throw Error(ErrorKind::Validation, "covariate edges must be strictly increasing");
    CovariateModel cm;
    cm.mode_ = Mode::Binned;
    cm.cells_ = static_cast<int>(interior_edges.size()) + 1;
    cm.edges_ = std::move(interior_edges);
    return cm;
}

CovariateModel CovariateModel::noisy_proxy(double noise_sd) {
    require_finite(noise_sd, "noise sd");
    if (noise_sd < 0.0)
        throw Error(ErrorKind::Validation, "noise sd must be >= 0");
    CovariateModel cm;
    cm.mode_ = Mode::NoisyProxy;
    cm.sd_ = noise_sd;
    return cm;
}

void CovariateModel::bind_edges(const ProductivityDistribution& dist) {
    if (mode_ != Mode::Binned || !edges_.empty()) return;
    edges_.reserve(static_cast<size_t>(cells_) - 1);
    for (int k = 1; k < cells_; ++k) {
        double e = dist.quantile(static_cast<double>(k) / cells_);
        // Duplicate quantiles (discrete distributions) leave some cells empty.
        if (!edges_.empty() && e <= edges_.back()) continue;
        edges_.push_back(e);
    }
    if (edges_.empty())
        edges_.push_back(dist.quantile(0.5) + 1.0);
}

std::string CovariateModel::describe() const {
    switch (mode_) {
    case Mode::Identity: return "identity";
    case Mode::Binned: return "binned(" + std::to_string(cells_) + ")";
    case Mode::NoisyProxy: return "noisy(" + fmt_g17(sd_) + ")";
    }
    return "";
}

// ----------------------------------------------------------------------- spec

DGPSpec::DGPSpec(ProductivityDistribution dist, HiringFunction pre, HiringFunction post,
                 OutcomeFunction y_pre, OutcomeFunction y_post, CovariateModel cov)
    : distribution(std::move(dist)), p0(std::move(pre)), p1(std::move(post)),
      y0(y_pre), y1(y_post), covariate(std::move(cov)) {
    covariate.bind_edges(distribution);
}

const HiringFunction& DGPSpec::p(int regime) const {
    if (regime != 0 && regime != 1)
        throw Error(ErrorKind::Domain, "regime must be 0 or 1");
    return regime == 0 ? p0 : p1;
}

const OutcomeFunction& DGPSpec::y(int regime) const {
    if (regime != 0 && regime != 1)
        throw Error(ErrorKind::Domain, "regime must be 0 or 1");
    return regime == 0 ? y0 : y1;
}

std::string DGPSpec::digest() const {
    const std::string canon = distribution.describe() + "|" + p0.describe() + "|" +
                              p1.describe() + "|" + y0.describe() + "|" +
                              y1.describe() + "|" + covariate.describe();
    uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ------------------------------------------------------------------ operations

double eval_density(const ProductivityDistribution& dist, double theta) {
    return dist.density(theta);
}

double eval_cdf(const ProductivityDistribution& dist, double theta) {
    return dist.cdf(theta);
}

double eval_p(const HiringFunction& h, double theta) {
    if (theta < 0.0)
        throw Error(ErrorKind::Domain, "eval_p: theta must be nonnegative");
    return h(theta);
}

double eval_tau(const DGPSpec& spec, double theta) {
    if (theta < 0.0)
        throw Error(ErrorKind::Domain, "eval_tau: theta must be nonnegative");
    return spec.y1(theta) - spec.y0(theta);
}

double eval_covariate(const CovariateModel& cm, double theta, double noise) {
    if (theta < 0.0)
        throw Error(ErrorKind::Domain, "eval_covariate: theta must be nonnegative");
    switch (cm.mode()) {
    case CovariateModel::Mode::Identity:
        return theta;
    case CovariateModel::Mode::Binned: {
        const auto& e = cm.edges();
        if (e.empty())
            throw Error(ErrorKind::Validation, "binned covariate has unbound edges");
        auto it = std::upper_bound(e.begin(), e.end(), theta);
        return static_cast<double>(it - e.begin());
    }
    case CovariateModel::Mode::NoisyProxy:
        return theta + cm.noise_sd() * noise;
    }
    return theta;
}

double support_upper_bound(const ProductivityDistribution& dist, double quantile) {
    if (dist.is_discrete()) return dist.support().back();
    return dist.quantile(quantile);
}

std::string ValidationReport::joined() const {
    std::string out;
    for (const auto& v : violations) {
        if (!out.empty()) out += "; ";
        out += v;
    }
    return out;
}

ValidationReport validate_spec(const DGPSpec& spec) {
    ValidationReport report;
    constexpr int kGridPoints = 1024;
    constexpr double kSlack = 1e-12;

    double hi;
    try {
        hi = support_upper_bound(spec.distribution, 1.0 - 1e-10);
    } catch (const Error& e) {
        report.violations.emplace_back(std::string("truncation point failed: ") + e.what());
        return report;
    }

    std::vector<double> grid(kGridPoints);
    for (int j = 0; j < kGridPoints; ++j)
        grid[j] = hi * static_cast<double>(j) / (kGridPoints - 1);

    auto check_monotone = [&](const HiringFunction& h, const char* name) {
        double prev = h(grid[0]);
        for (int j = 1; j < kGridPoints; ++j) {
            double cur = h(grid[j]);
            if (cur < prev - kSlack) {
                report.violations.push_back(std::string(name) +
                                            " is not nondecreasing at theta=" +
                                            fmt_g17(grid[j]));
                return;
            }
            prev = cur;
        }
    };
    check_monotone(spec.p0, "p0");
    check_monotone(spec.p1, "p1");

    for (int j = 0; j < kGridPoints; ++j) {
        if (spec.p1(grid[j]) < spec.p0(grid[j]) - kSlack) {
            report.violations.push_back("p1 does not dominate p0 at theta=" +
                                        fmt_g17(grid[j]));
            break;
        }
    }

    for (int j = 0; j < kGridPoints; ++j) {
        if (!std::isfinite(spec.y0(grid[j])) || !std::isfinite(spec.y1(grid[j]))) {
            report.violations.push_back("outcome function not finite at theta=" +
                                        fmt_g17(grid[j]));
            break;
        }
    }

    QuadratureConfig qcfg;
    try {
        const double norm =
            integrate_dF(spec.distribution, [](double) { return 1.0; }, qcfg, {});
        if (std::fabs(norm - 1.0) > 1e-8)
            report.violations.push_back("density does not integrate to 1 (got " +
                                        fmt_g17(norm) + ")");
        const auto& d = spec.distribution;
        const double n0 = integrate_dF(d, [&](double t) { return spec.p0(t); }, qcfg,
                                       spec.p0.knots());
        const double n1 = integrate_dF(d, [&](double t) { return spec.p1(t); }, qcfg,
                                       spec.p1.knots());
        if (n1 < n0 - kSlack)
            report.violations.push_back("implied entrant mass shrinks: N1=" + fmt_g17(n1) +
                                        " < N0=" + fmt_g17(n0));
    } catch (const Error& e) {
        report.violations.emplace_back(std::string("quadrature check failed: ") + e.what());
    }

    return report;
}

} // namespace margex
