#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hbtm/core.hpp"

namespace hbtm::stats {

struct KMeansResult {
    std::vector<std::size_t> labels;
    Matrix centroids;  // k x dim
    double wcss = 0.0;
    std::size_t iterations = 0;
    /// WCSS after each Lloyd iteration of the winning restart.
    std::vector<double> wcss_history;
};

struct KMeansOptions {
    std::size_t max_iters = 300;
    std::size_t restarts = 10;
};

/// Lloyd's algorithm from k-means++ seeds; the restart with the smallest
/// within-cluster sum of squares wins.  Labels are canonicalized so that
/// cluster 0 is the largest, ties broken by lexicographic centroid order.
KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, const KMeansOptions& options = {});

/// Two-sided p-value of a Student-t statistic with `df` degrees of freedom.
double student_t_two_sided_p(double t, double df);

struct TTestResult {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;
    double mean_a = 0.0;
    double mean_b = 0.0;
    std::size_t n_a = 0;
    std::size_t n_b = 0;
    /// Both groups have zero variance; t and p follow the convention
    /// (equal means: t = 0, p = 1; otherwise t = +/-inf, p = 0).
    bool degenerate = false;
};

/// Welch's unequal-variance t-test with Welch-Satterthwaite degrees of freedom.
TTestResult welch_t_test(std::span<const double> a, std::span<const double> b);

struct CorrelationResult {
    double r = 0.0;
    double p = 1.0;
    std::size_t n = 0;
};

/// Pearson correlation and two-sided p from t = r sqrt((n-2)/(1-r^2)).
/// Throws InputError for n < 3, unequal lengths or a constant vector.
CorrelationResult pearson(std::span<const double> x, std::span<const double> y);

}  // namespace hbtm::stats
