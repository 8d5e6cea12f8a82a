#include "handover/stats.hpp"

#include "handover/error.hpp"

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace handover::stats {

double mean(std::span<const double> xs)
{
    if (xs.empty()) fail(ErrorKind::Parameter, "mean of an empty sample");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs)
{
    if (xs.size() < 2) fail(ErrorKind::Parameter, "variance needs at least 2 samples");
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return ss / static_cast<double>(xs.size() - 1);
}

double pearson(std::span<const double> xs, std::span<const double> ys)
{
    if (xs.size() != ys.size()) fail(ErrorKind::Parameter, "pearson: sequences differ in length");
    if (xs.size() < 3) fail(ErrorKind::Parameter, "pearson: need at least 3 pairs");
    const double mx = mean(xs);
    const double my = mean(ys);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    // Constant up to rounding counts as zero variance.
    auto flat = [](std::span<const double> v) {
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        return *hi - *lo <= 1e-12 * std::max({1.0, std::abs(*lo), std::abs(*hi)});
    };
    if (sxx == 0.0 || syy == 0.0 || flat(xs) || flat(ys)) fail(ErrorKind::MetricUndefined, "undefined correlation: zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double t_two_sided_p(double t, double df)
{
    if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
    if (std::isinf(t)) return 0.0;
    boost::math::students_t dist(df);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

double f_upper_p(double f, double df1, double df2)
{
    if (std::isinf(f)) return 0.0;
    if (f <= 0.0) return 1.0;
    boost::math::fisher_f dist(df1, df2);
    return boost::math::cdf(boost::math::complement(dist, f));
}

AnovaResult one_way_anova(std::span<const std::vector<double>> groups)
{
    if (groups.size() < 2) fail(ErrorKind::Parameter, "ANOVA needs at least 2 groups");
    std::size_t total = 0;
    double grand = 0.0;
    for (const auto& g : groups) {
        if (g.size() < 2) fail(ErrorKind::Parameter, "ANOVA groups need at least 2 samples each");
        for (double x : g) grand += x;
        total += g.size();
    }
    grand /= static_cast<double>(total);

    AnovaResult r;
    for (const auto& g : groups) {
        const double m = mean(g);
        r.ss_between += static_cast<double>(g.size()) * (m - grand) * (m - grand);
        for (double x : g) r.ss_within += (x - m) * (x - m);
    }
    r.df_between = static_cast<int>(groups.size()) - 1;
    r.df_within = static_cast<int>(total - groups.size());
    const double ms_between = r.ss_between / r.df_between;
    const double ms_within = r.ss_within / r.df_within;
    if (ms_within == 0.0) {
        if (ms_between == 0.0) fail(ErrorKind::Parameter, "ANOVA is degenerate: all observations equal");
        r.f = std::numeric_limits<double>::infinity();
        r.p = 0.0;
        return r;
    }
    r.f = ms_between / ms_within;
    r.p = f_upper_p(r.f, r.df_between, r.df_within);
    return r;
}

namespace {

TTestResult finish(double num, double se, double df)
{
    TTestResult r;
    r.df = df;
    if (se == 0.0) {
        r.t = num == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), num);
        r.p = num == 0.0 ? 1.0 : 0.0;
        return r;
    }
    r.t = num / se;
    r.p = t_two_sided_p(r.t, df);
    return r;
}

}  // namespace

TTestResult one_sample_t_test(std::span<const double> xs, double mu0)
{
    if (xs.size() < 2) fail(ErrorKind::Parameter, "t-test needs at least 2 samples");
    const double n = static_cast<double>(xs.size());
    return finish(mean(xs) - mu0, std::sqrt(variance(xs) / n), n - 1.0);
}

TTestResult t_test(std::span<const double> xs, std::span<const double> ys, TTestKind kind)
{
    if (kind == TTestKind::Paired) {
        if (xs.size() != ys.size()) fail(ErrorKind::Parameter, "paired t-test needs equal lengths");
        if (xs.size() < 2) fail(ErrorKind::Parameter, "paired t-test needs at least 2 pairs");
        std::vector<double> d(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) d[i] = xs[i] - ys[i];
        return one_sample_t_test(d, 0.0);
    }
    if (xs.size() < 2 || ys.size() < 2) fail(ErrorKind::Parameter, "t-test needs at least 2 samples per group");
    const double nx = static_cast<double>(xs.size());
    const double ny = static_cast<double>(ys.size());
    const double vx = variance(xs);
    const double vy = variance(ys);
    const double diff = mean(xs) - mean(ys);
    if (kind == TTestKind::Student) {
        const double pooled = ((nx - 1.0) * vx + (ny - 1.0) * vy) / (nx + ny - 2.0);
        return finish(diff, std::sqrt(pooled * (1.0 / nx + 1.0 / ny)), nx + ny - 2.0);
    }
    const double ax = vx / nx;
    const double ay = vy / ny;
    const double se2 = ax + ay;
    const double df = se2 == 0.0 ? nx + ny - 2.0 : se2 * se2 / (ax * ax / (nx - 1.0) + ay * ay / (ny - 1.0));
    return finish(diff, std::sqrt(se2), df);
}

TTestResult t_test(std::span<const double> xs, std::span<const double> ys, bool paired)
{
    return t_test(xs, ys, paired ? TTestKind::Paired : TTestKind::Welch);
}

Summary summarize(std::span<const double> xs)
{
    Summary s;
    s.n = xs.size();
    if (xs.empty()) return s;
    s.mean = mean(xs);
    s.sd = xs.size() > 1 ? std::sqrt(variance(xs)) : 0.0;
    auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    s.min = *lo;
    s.max = *hi;
    return s;
}

}  // namespace handover::stats
