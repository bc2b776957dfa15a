#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lesionsynth::stats {

struct TestResult {
    enum class Method { exact, normal_approx };

    double statistic = 0.0;  // rank sum of x over pooled mid-ranks
    double p_two_sided = 1.0;
    Method method = Method::exact;
    std::size_t n = 0;
    std::size_t m = 0;
};

const char* method_name(TestResult::Method m);

inline constexpr std::size_t kExactLimit = 12;

/// Two-sided Wilcoxon rank-sum test. Exact (tie-aware) null distribution
/// when both samples have at most kExactLimit values, otherwise a normal
/// approximation with tie-corrected variance and continuity correction.
TestResult wilcoxon_rank_sum(const std::vector<double>& x, const std::vector<double>& y);

/// Benjamini-Hochberg step-up adjustment, returned in input order.
std::vector<double> bh_adjust(const std::vector<double>& pvals);

/// "***" p < 0.001, "**" p < 0.01, "*" p < 0.05, else "ns".
std::string stars(double p);

struct BlandAltman {
    double bias = 0.0;
    double sd = 0.0;
    double loa_low = 0.0;
    double loa_high = 0.0;
    std::vector<double> means;
    std::vector<double> differences;  // gt - pred
};

BlandAltman bland_altman(const std::vector<double>& gt_vol, const std::vector<double>& pred_vol);

/// Linear-interpolation (type 7) quantile; q in [0,1].
double quantile(std::vector<double> values, double q);
double median(const std::vector<double>& values);

struct Summary {
    std::size_t n = 0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double iqr() const { return q3 - q1; }
};

Summary summarize(const std::vector<double>& values);

// ---- report aggregation -------------------------------------------------

/// One per-case metrics table, as written by `eval`. Empty cells are null.
struct CaseTable {
    std::string method;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::optional<std::size_t> column(const std::string& name) const;
};

CaseTable read_case_table(const std::filesystem::path& csv, const std::string& method);

struct ReportOptions {
    /// Columns whose joined values define a group; missing columns are
    /// treated as a single "all" group.
    std::vector<std::string> group_by{"dataset"};
};

struct MedianRow {
    std::string method, group, metric;
    Summary summary;
};

struct ComparisonRow {
    std::string group, metric, method_a, method_b;
    TestResult test;
    double q = 1.0;
    std::string stars;  // from q
};

struct BlandAltmanRow {
    std::string method, group;
    BlandAltman result;
    std::vector<std::string> case_ids;
};

struct Report {
    std::vector<MedianRow> medians;
    std::vector<ComparisonRow> comparisons;
    std::vector<BlandAltmanRow> bland_altman;
};

/// Metric columns are every column other than case_id, method, pred_empty,
/// the volume columns and the grouping keys. Null cells are skipped, which
/// leaves distances aggregated over non-empty predictions only. All
/// pairwise p-values in one invocation form a single BH family.
Report aggregate_report(const std::vector<CaseTable>& tables, const ReportOptions& opts = {});

/// medians.csv, comparisons.csv, bland_altman_summary.csv and
/// bland_altman_<method>.csv.
void write_report(const Report& report, const std::filesystem::path& out_dir);

}  // namespace lesionsynth::stats
