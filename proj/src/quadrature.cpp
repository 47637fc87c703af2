#include "margex/quadrature.hpp"

#include "margex/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace margex {

void QuadratureConfig::validate() const {
    if (!(abs_tol > 0.0))
        throw Error(ErrorKind::Validation, "quadrature tolerance must be > 0");
    if (max_subdivisions < 16)
        throw Error(ErrorKind::Validation, "quadrature needs at least 16 subdivisions");
    if (!(truncation_quantile > 0.0 && truncation_quantile < 1.0))
        throw Error(ErrorKind::Validation, "truncation quantile must lie in (0,1)");
}

namespace {

struct Interval {
    double a, b;
    double fa, fm, fb; // f at ends and midpoint
    double coarse;     // Simpson over [a,b]
    double refined;    // Simpson over both halves
    double flm, frm;   // f at the quarter points
    double err;        // Richardson estimate |refined - coarse| / 15
    double value;      // refined + (refined - coarse) / 15

    void compute(const std::function<double(double)>& f) {
        const double m = 0.5 * (a + b);
        const double lm = 0.5 * (a + m);
        const double rm = 0.5 * (m + b);
        flm = f(lm);
        frm = f(rm);
        const double h = b - a;
        coarse = h / 6.0 * (fa + 4.0 * fm + fb);
        const double left = h / 12.0 * (fa + 4.0 * flm + fm);
        const double right = h / 12.0 * (fm + 4.0 * frm + fb);
        refined = left + right;
        err = std::fabs(refined - coarse) / 15.0;
        value = refined + (refined - coarse) / 15.0;
    }
};

} // namespace

double integrate_interval(const std::function<double(double)>& f, double a, double b,
                          const QuadratureConfig& cfg,
                          const std::vector<double>& breakpoints) {
    cfg.validate();
    if (!(b > a)) return 0.0;

    std::vector<double> edges;
    edges.push_back(a);
    for (double x : breakpoints)
        if (x > a && x < b) edges.push_back(x);
    edges.push_back(b);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    std::vector<Interval> segs;
    segs.reserve(static_cast<size_t>(cfg.max_subdivisions) + edges.size());
    for (size_t i = 0; i + 1 < edges.size(); ++i) {
        Interval iv;
        iv.a = edges[i];
        iv.b = edges[i + 1];
        iv.fa = f(iv.a);
        iv.fm = f(0.5 * (iv.a + iv.b));
        iv.fb = f(iv.b);
        iv.compute(f);
        segs.push_back(iv);
    }

    const double min_width = (b - a) * std::numeric_limits<double>::epsilon();
    int subdivisions = 0;
    while (true) {
        double total_err = 0.0;
        size_t worst = segs.size();
        double worst_err = 0.0;
        for (size_t i = 0; i < segs.size(); ++i) {
            total_err += segs[i].err;
            if (segs[i].err > worst_err && segs[i].b - segs[i].a > min_width) {
                worst_err = segs[i].err;
                worst = i;
            }
        }
        if (total_err <= cfg.abs_tol || worst == segs.size()) {
            double sum = 0.0;
            for (const auto& s : segs) sum += s.value;
            if (total_err > cfg.abs_tol)
                throw NonConvergenceError(
                    "quadrature hit minimum interval width before tolerance", sum);
            return sum;
        }
        if (subdivisions >= cfg.max_subdivisions) {
            double sum = 0.0;
            for (const auto& s : segs) sum += s.value;
            throw NonConvergenceError("quadrature exceeded subdivision limit", sum);
        }
        ++subdivisions;

        Interval parent = segs[worst];
        const double m = 0.5 * (parent.a + parent.b);
        Interval left, right;
        left.a = parent.a;
        left.b = m;
        left.fa = parent.fa;
        left.fm = parent.flm;
        left.fb = parent.fm;
        right.a = m;
        right.b = parent.b;
        right.fa = parent.fm;
        right.fm = parent.frm;
        right.fb = parent.fb;
        left.compute(f);
        right.compute(f);
        segs[worst] = left;
        segs.push_back(right);
    }
}

namespace {

// Initial panels at mass quantiles. Without them a single Simpson panel over
// a long truncated support can probe only points where the density is
// negligible, report a near-zero error estimate, and never refine.
std::vector<double> mass_seeded(const ProductivityDistribution& dist,
                                const std::vector<double>& breakpoints) {
    constexpr int kPanels = 32;
    std::vector<double> pts = breakpoints;
    pts.reserve(pts.size() + kPanels);
    for (int k = 1; k < kPanels; ++k)
        pts.push_back(dist.quantile(static_cast<double>(k) / kPanels));
    return pts;
}

} // namespace

double integrate_dF(const ProductivityDistribution& dist,
                    const std::function<double(double)>& g,
                    const QuadratureConfig& cfg,
                    const std::vector<double>& breakpoints) {
    if (dist.is_discrete()) {
        const auto& sup = dist.support();
        const auto& mass = dist.masses();
        double sum = 0.0;
        for (size_t i = 0; i < sup.size(); ++i) sum += g(sup[i]) * mass[i];
        return sum;
    }
    const double hi = support_upper_bound(dist, cfg.truncation_quantile);
    return integrate_interval([&](double t) { return g(t) * dist.density(t); }, 0.0, hi,
                              cfg, mass_seeded(dist, breakpoints));
}

double integrate_dF_range(const ProductivityDistribution& dist,
                          const std::function<double(double)>& g, double lo, double hi,
                          const QuadratureConfig& cfg,
                          const std::vector<double>& breakpoints) {
    if (dist.is_discrete()) {
        const auto& sup = dist.support();
        const auto& mass = dist.masses();
        double sum = 0.0;
        for (size_t i = 0; i < sup.size(); ++i)
            if (sup[i] > lo && sup[i] <= hi) sum += g(sup[i]) * mass[i];
        return sum;
    }
    const double top = std::min(hi, support_upper_bound(dist, cfg.truncation_quantile));
    const double bottom = std::max(lo, 0.0);
    if (top <= bottom) return 0.0;
    return integrate_interval([&](double t) { return g(t) * dist.density(t); }, bottom,
                              top, cfg, mass_seeded(dist, breakpoints));
}

} // namespace margex
