#pragma once

// Dataset-level statistics: correlation, one-way ANOVA and t-tests.

#include <span>
#include <vector>

namespace handover::stats {

double mean(std::span<const double> xs);
// Sample variance (n - 1 denominator).
double variance(std::span<const double> xs);

// Sample Pearson correlation. Throws Error(Parameter) on fewer than 3 pairs or
// mismatched lengths, Error(MetricUndefined) on zero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

struct AnovaResult {
    double f = 0.0;
    double p = 1.0;
    double ss_between = 0.0;
    double ss_within = 0.0;
    int df_between = 0;
    int df_within = 0;
};

AnovaResult one_way_anova(std::span<const std::vector<double>> groups);

enum class TTestKind { Paired, Student, Welch };

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    double df = 0.0;
};

// Two-sided. Unpaired tests use the Welch variant.
TTestResult t_test(std::span<const double> xs, std::span<const double> ys, bool paired);
TTestResult t_test(std::span<const double> xs, std::span<const double> ys, TTestKind kind);
TTestResult one_sample_t_test(std::span<const double> xs, double mu0 = 0.0);

// Two-sided p for a t statistic; upper-tail p for an F statistic.
double t_two_sided_p(double t, double df);
double f_upper_p(double f, double df1, double df2);

struct Summary {
    std::size_t n = 0;
    double mean = 0.0;
    double sd = 0.0;
    double min = 0.0;
    double max = 0.0;
};

Summary summarize(std::span<const double> xs);

}  // namespace handover::stats
