#include "hbtm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "hbtm/random.hpp"

namespace hbtm::stats {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        d += diff * diff;
    }
    return d;
}

double mean(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v, double mu) {
    double ss = 0.0;
    for (double x : v) ss += (x - mu) * (x - mu);
    return ss / static_cast<double>(v.size() - 1);
}

Matrix kmeanspp_seeds(const Matrix& points, std::size_t k, CounterStream& stream) {
    const std::size_t M = points.rows();
    Matrix centroids(k, points.cols());
    std::vector<double> nearest(M, std::numeric_limits<double>::infinity());
    std::size_t pick = std::min(static_cast<std::size_t>(stream.next_uniform() * static_cast<double>(M)), M - 1);
    for (std::size_t c = 0; c < k; ++c) {
        std::copy(points.row(pick).begin(), points.row(pick).end(), centroids.row(c).begin());
        for (std::size_t m = 0; m < M; ++m) {
            nearest[m] = std::min(nearest[m], squared_distance(points.row(m), centroids.row(c)));
        }
        if (c + 1 == k) break;
        const double total = std::accumulate(nearest.begin(), nearest.end(), 0.0);
        const double u = stream.next_uniform();
        if (total > 0.0) {
            pick = sample_categorical(nearest, u);
        } else {
            // All points coincide with a centroid already; any point will do.
            pick = std::min(static_cast<std::size_t>(u * static_cast<double>(M)), M - 1);
        }
    }
    return centroids;
}

KMeansResult lloyd(const Matrix& points, Matrix centroids, std::size_t max_iters) {
    const std::size_t M = points.rows();
    const std::size_t k = centroids.rows();
    const std::size_t dim = points.cols();
    KMeansResult r;
    r.labels.assign(M, 0);
    bool first = true;
    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        bool changed = first;
        first = false;
        for (std::size_t m = 0; m < M; ++m) {
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double d = squared_distance(points.row(m), centroids.row(c));
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (best != r.labels[m]) {
                changed = true;
                r.labels[m] = best;
            }
        }
        if (!changed) {
            break;
        }
        // Update step; an emptied cluster keeps its previous centroid.
        Matrix sums(k, dim, 0.0);
        std::vector<std::size_t> sizes(k, 0);
        for (std::size_t m = 0; m < M; ++m) {
            ++sizes[r.labels[m]];
            for (std::size_t d = 0; d < dim; ++d) sums(r.labels[m], d) += points(m, d);
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (sizes[c] == 0) continue;
            for (std::size_t d = 0; d < dim; ++d) centroids(c, d) = sums(c, d) / static_cast<double>(sizes[c]);
        }
        r.iterations = iter + 1;
        double updated = 0.0;
        for (std::size_t m = 0; m < M; ++m) updated += squared_distance(points.row(m), centroids.row(r.labels[m]));
        r.wcss_history.push_back(updated);
    }
    r.centroids = std::move(centroids);
    r.wcss = 0.0;
    for (std::size_t m = 0; m < M; ++m) r.wcss += squared_distance(points.row(m), r.centroids.row(r.labels[m]));
    return r;
}

void canonicalize(KMeansResult& r) {
    const std::size_t k = r.centroids.rows();
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t label : r.labels) ++sizes[label];
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (sizes[a] != sizes[b]) return sizes[a] > sizes[b];
        const auto ra = r.centroids.row(a);
        const auto rb = r.centroids.row(b);
        return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
    });
    std::vector<std::size_t> relabel(k);
    Matrix centroids(k, r.centroids.cols());
    for (std::size_t new_label = 0; new_label < k; ++new_label) {
        relabel[order[new_label]] = new_label;
        const auto src = r.centroids.row(order[new_label]);
        std::copy(src.begin(), src.end(), centroids.row(new_label).begin());
    }
    for (auto& label : r.labels) label = relabel[label];
    r.centroids = std::move(centroids);
}

}  // namespace

KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, const KMeansOptions& options) {
    const std::size_t M = points.rows();
    if (k < 1) {
        throw InputError("k-means needs k >= 1");
    }
    if (M < k) {
        throw InputError("k-means needs at least k points (have " + std::to_string(M) + ", k=" + std::to_string(k) +
                         ")");
    }
    for (double v : points.data()) {
        if (!std::isfinite(v)) throw InputError("k-means input contains non-finite values");
    }
    const std::size_t restarts = std::max<std::size_t>(options.restarts, 1);
    KMeansResult best;
    best.wcss = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < restarts; ++r) {
        CounterStream stream(stream_key(seed, {0x4B4D4541ULL, r}));
        KMeansResult candidate = lloyd(points, kmeanspp_seeds(points, k, stream), std::max<std::size_t>(options.max_iters, 1));
        if (candidate.wcss < best.wcss) {
            best = std::move(candidate);
        }
    }
    canonicalize(best);
    return best;
}

double student_t_two_sided_p(double t, double df) {
    if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
    if (std::isinf(t)) return 0.0;
    const boost::math::students_t dist(df);
    const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
    return std::clamp(p, 0.0, 1.0);
}

TTestResult welch_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() < 2 || b.size() < 2) {
        throw InputError("t-test needs at least two observations per group");
    }
    TTestResult r;
    r.n_a = a.size();
    r.n_b = b.size();
    r.mean_a = mean(a);
    r.mean_b = mean(b);
    const double va = sample_variance(a, r.mean_a) / static_cast<double>(a.size());
    const double vb = sample_variance(b, r.mean_b) / static_cast<double>(b.size());
    const double se2 = va + vb;
    const double diff = r.mean_a - r.mean_b;
    if (se2 == 0.0) {
        r.degenerate = true;
        r.df = static_cast<double>(a.size() + b.size() - 2);
        if (diff == 0.0) {
            r.t = 0.0;
            r.p = 1.0;
        } else {
            r.t = std::copysign(std::numeric_limits<double>::infinity(), diff);
            r.p = 0.0;
        }
        return r;
    }
    r.t = diff / std::sqrt(se2);
    r.df = se2 * se2 /
           (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
    r.p = student_t_two_sided_p(r.t, r.df);
    return r;
}

CorrelationResult pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw InputError("pearson inputs differ in length");
    }
    if (x.size() < 3) {
        throw InputError("pearson needs at least three pairs");
    }
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw InputError("correlation undefined for a constant vector");
    }
    CorrelationResult r;
    r.n = x.size();
    r.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    const double df = static_cast<double>(r.n - 2);
    const double one_minus = 1.0 - r.r * r.r;
    if (one_minus <= 0.0) {
        r.p = 0.0;
    } else {
        r.p = student_t_two_sided_p(r.r * std::sqrt(df / one_minus), df);
    }
    return r;
}

}  // namespace hbtm::stats
