#include "lesionsynth/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lesionsynth/error.hpp"

namespace lesionsynth::stats {
namespace {

struct Ranked {
    std::vector<double> ranks;  // mid-ranks, pooled order x then y
    double tie_term = 0.0;      // sum of t^3 - t over tie groups
};

Ranked mid_ranks(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> pooled(x);
    pooled.insert(pooled.end(), y.begin(), y.end());
    std::vector<std::size_t> order(pooled.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
    Ranked r;
    r.ranks.resize(pooled.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && pooled[order[j + 1]] == pooled[order[i]]) {
            ++j;
        }
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            r.ranks[order[k]] = rank;
        }
        const double t = static_cast<double>(j - i + 1);
        r.tie_term += t * t * t - t;
        i = j + 1;
    }
    return r;
}

double exact_p(const std::vector<double>& ranks, std::size_t n, double observed) {
    // Doubled mid-ranks are integers, so the null distribution of the rank
    // sum is a subset-sum count over them.
    std::vector<int> doubled(ranks.size());
    int total = 0;
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        doubled[i] = static_cast<int>(std::lround(2.0 * ranks[i]));
        total += doubled[i];
    }
    const auto width = static_cast<std::size_t>(total) + 1;
    std::vector<double> dp((n + 1) * width, 0.0);
    dp[0] = 1.0;
    std::size_t used = 0;
    for (int v : doubled) {
        ++used;
        for (std::size_t k = std::min(n, used); k >= 1; --k) {
            double* row = &dp[k * width];
            const double* prev = &dp[(k - 1) * width];
            for (std::size_t s = width; s-- > static_cast<std::size_t>(v);) {
                row[s] += prev[s - static_cast<std::size_t>(v)];
            }
        }
    }
    const long w2 = std::lround(2.0 * observed);
    const double* row = &dp[n * width];
    double all = 0.0, low = 0.0, high = 0.0;
    for (std::size_t s = 0; s < width; ++s) {
        all += row[s];
        if (static_cast<long>(s) <= w2) low += row[s];
        if (static_cast<long>(s) >= w2) high += row[s];
    }
    return std::min(1.0, 2.0 * std::min(low, high) / all);
}

}  // namespace

const char* method_name(TestResult::Method m) {
    return m == TestResult::Method::exact ? "exact" : "normal-approx";
}

TestResult wilcoxon_rank_sum(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.empty() || y.empty()) {
        throw Error("wilcoxon_rank_sum: empty sample");
    }
    for (const auto* s : {&x, &y}) {
        for (double v : *s) {
            if (!std::isfinite(v)) {
                throw Error("wilcoxon_rank_sum: non-finite value");
            }
        }
    }
    const Ranked r = mid_ranks(x, y);
    TestResult res;
    res.n = x.size();
    res.m = y.size();
    res.statistic = std::accumulate(r.ranks.begin(), r.ranks.begin() + static_cast<std::ptrdiff_t>(x.size()), 0.0);

    if (res.n <= kExactLimit && res.m <= kExactLimit) {
        res.method = TestResult::Method::exact;
        res.p_two_sided = exact_p(r.ranks, res.n, res.statistic);
        return res;
    }
    res.method = TestResult::Method::normal_approx;
    const double n = static_cast<double>(res.n);
    const double m = static_cast<double>(res.m);
    const double big_n = n + m;
    const double u = res.statistic - n * (n + 1.0) / 2.0;
    const double mean = n * m / 2.0;
    const double var = n * m / 12.0 * ((big_n + 1.0) - r.tie_term / (big_n * (big_n - 1.0)));
    if (var <= 0.0) {
        res.p_two_sided = 1.0;
        return res;
    }
    const double z = std::max(0.0, std::abs(u - mean) - 0.5) / std::sqrt(var);
    res.p_two_sided = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
    return res;
}

std::vector<double> bh_adjust(const std::vector<double>& pvals) {
    const std::size_t n = pvals.size();
    for (double p : pvals) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw Error("bh_adjust: p-value outside [0,1]");
        }
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pvals[a] < pvals[b]; });
    std::vector<double> out(n);
    double running = 1.0;
    for (std::size_t r = n; r-- > 0;) {
        const double q = pvals[order[r]] * static_cast<double>(n) / static_cast<double>(r + 1);
        running = std::min(running, q);
        out[order[r]] = std::min(1.0, running);
    }
    return out;
}

std::string stars(double p) {
    if (p < 0.001) return "***";
    if (p < 0.01) return "**";
    if (p < 0.05) return "*";
    return "ns";
}

BlandAltman bland_altman(const std::vector<double>& gt_vol, const std::vector<double>& pred_vol) {
    if (gt_vol.size() != pred_vol.size()) {
        throw Error("bland_altman: length mismatch");
    }
    if (gt_vol.size() < 2) {
        throw Error("bland_altman: need at least 2 cases");
    }
    BlandAltman ba;
    const std::size_t n = gt_vol.size();
    for (std::size_t i = 0; i < n; ++i) {
        ba.means.push_back(0.5 * (gt_vol[i] + pred_vol[i]));
        ba.differences.push_back(gt_vol[i] - pred_vol[i]);
    }
    ba.bias = std::accumulate(ba.differences.begin(), ba.differences.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double d : ba.differences) {
        ss += (d - ba.bias) * (d - ba.bias);
    }
    ba.sd = std::sqrt(ss / static_cast<double>(n - 1));
    ba.loa_low = ba.bias - 1.96 * ba.sd;
    ba.loa_high = ba.bias + 1.96 * ba.sd;
    return ba;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) {
        throw Error("quantile of empty sample");
    }
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double median(const std::vector<double>& values) {
    return quantile(values, 0.5);
}

Summary summarize(const std::vector<double>& values) {
    Summary s;
    s.n = values.size();
    if (values.empty()) {
        s.median = s.q1 = s.q3 = std::nan("");
        return s;
    }
    s.median = quantile(values, 0.5);
    s.q1 = quantile(values, 0.25);
    s.q3 = quantile(values, 0.75);
    return s;
}

}  // namespace lesionsynth::stats
