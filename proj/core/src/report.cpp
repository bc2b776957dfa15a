#include <algorithm>
#include <fstream>
#include <set>

#include "lesionsynth/csv.hpp"
#include "lesionsynth/error.hpp"
#include "lesionsynth/stats.hpp"

namespace lesionsynth::stats {
namespace {

const std::set<std::string> kNonMetric{"case_id", "method", "pred_empty", "gt_volume_mm3", "pred_volume_mm3"};

std::string group_of(const CaseTable& t, const std::vector<std::string>& row, const ReportOptions& opts) {
    std::string g;
    for (const auto& key : opts.group_by) {
        if (const auto c = t.column(key)) {
            if (!g.empty()) g += "/";
            g += row[*c];
        }
    }
    return g.empty() ? "all" : g;
}

std::vector<std::string> metric_columns(const CaseTable& t, const ReportOptions& opts) {
    std::vector<std::string> out;
    for (const auto& c : t.columns) {
        if (!kNonMetric.contains(c) && std::find(opts.group_by.begin(), opts.group_by.end(), c) == opts.group_by.end()) {
            out.push_back(c);
        }
    }
    return out;
}

// values[group][metric] for one table, nulls dropped.
using Columns = std::map<std::string, std::map<std::string, std::vector<double>>>;

Columns collect(const CaseTable& t, const std::vector<std::string>& metrics, const ReportOptions& opts) {
    Columns out;
    for (const auto& row : t.rows) {
        auto& g = out[group_of(t, row, opts)];
        for (const auto& metric : metrics) {
            const auto idx = t.column(metric);
            auto& vec = g[metric];
            if (!idx) continue;
            if (const auto v = csv::parse_optional(row[*idx])) {
                vec.push_back(*v);
            }
        }
    }
    return out;
}

}  // namespace

std::optional<std::size_t> CaseTable::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - columns.begin());
}

CaseTable read_case_table(const std::filesystem::path& path, const std::string& method) {
    csv::Table raw = csv::read(path);
    CaseTable t;
    t.method = method;
    t.columns = std::move(raw.header);
    t.rows = std::move(raw.rows);
    return t;
}

Report aggregate_report(const std::vector<CaseTable>& tables, const ReportOptions& opts) {
    if (tables.empty()) {
        throw ConfigError("report needs at least one metrics table");
    }
    std::set<std::string> seen;
    for (const auto& t : tables) {
        if (!seen.insert(t.method).second) {
            throw ConfigError("duplicate method name: " + t.method);
        }
    }
    const std::vector<std::string> metrics = metric_columns(tables.front(), opts);
    for (const auto& t : tables) {
        if (metric_columns(t, opts) != metrics) {
            throw ConfigError("inconsistent metric columns in " + t.method);
        }
    }

    std::vector<Columns> data;
    for (const auto& t : tables) {
        data.push_back(collect(t, metrics, opts));
    }

    Report rep;
    for (std::size_t i = 0; i < tables.size(); ++i) {
        for (const auto& [group, cols] : data[i]) {
            for (const auto& metric : metrics) {
                rep.medians.push_back({tables[i].method, group, metric, summarize(cols.at(metric))});
            }
        }
    }

    std::set<std::string> groups;
    for (const auto& d : data) {
        for (const auto& [g, _] : d) groups.insert(g);
    }
    for (const auto& group : groups) {
        for (const auto& metric : metrics) {
            for (std::size_t a = 0; a < tables.size(); ++a) {
                for (std::size_t b = a + 1; b < tables.size(); ++b) {
                    const auto ga = data[a].find(group);
                    const auto gb = data[b].find(group);
                    if (ga == data[a].end() || gb == data[b].end()) continue;
                    const auto& xa = ga->second.at(metric);
                    const auto& xb = gb->second.at(metric);
                    if (xa.empty() || xb.empty()) continue;
                    ComparisonRow row{group, metric, tables[a].method, tables[b].method, wilcoxon_rank_sum(xa, xb), 1.0, ""};
                    rep.comparisons.push_back(std::move(row));
                }
            }
        }
    }
    std::vector<double> ps;
    for (const auto& c : rep.comparisons) ps.push_back(c.test.p_two_sided);
    const auto qs = bh_adjust(ps);
    for (std::size_t i = 0; i < qs.size(); ++i) {
        rep.comparisons[i].q = qs[i];
        rep.comparisons[i].stars = stars(qs[i]);
    }

    for (const auto& t : tables) {
        const auto gi = t.column("gt_volume_mm3");
        const auto pi = t.column("pred_volume_mm3");
        const auto ci = t.column("case_id");
        if (!gi || !pi) continue;
        std::map<std::string, BlandAltmanRow> by_group;
        std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> vols;
        for (const auto& row : t.rows) {
            const auto g = csv::parse_optional(row[*gi]);
            const auto p = csv::parse_optional(row[*pi]);
            if (!g || !p) continue;
            const std::string group = group_of(t, row, opts);
            vols[group].first.push_back(*g);
            vols[group].second.push_back(*p);
            by_group[group].case_ids.push_back(ci ? row[*ci] : std::to_string(by_group[group].case_ids.size()));
        }
        for (auto& [group, v] : vols) {
            if (v.first.size() < 2) continue;
            BlandAltmanRow row = std::move(by_group[group]);
            row.method = t.method;
            row.group = group;
            row.result = bland_altman(v.first, v.second);
            rep.bland_altman.push_back(std::move(row));
        }
    }
    return rep;
}

void write_report(const Report& rep, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    csv::Table med{{"method", "group", "metric", "n", "median", "q1", "q3", "iqr"}, {}};
    for (const auto& r : rep.medians) {
        med.rows.push_back({r.method, r.group, r.metric, std::to_string(r.summary.n), csv::format(r.summary.median),
                            csv::format(r.summary.q1), csv::format(r.summary.q3), csv::format(r.summary.iqr())});
    }
    csv::write(dir / "medians.csv", med);

    csv::Table cmp{{"group", "metric", "method_a", "method_b", "n_a", "n_b", "statistic", "test", "p", "q", "stars"}, {}};
    for (const auto& r : rep.comparisons) {
        cmp.rows.push_back({r.group, r.metric, r.method_a, r.method_b, std::to_string(r.test.n), std::to_string(r.test.m),
                            csv::format(r.test.statistic), method_name(r.test.method), csv::format(r.test.p_two_sided),
                            csv::format(r.q), r.stars});
    }
    csv::write(dir / "comparisons.csv", cmp);

    csv::Table summary{{"method", "group", "n", "bias", "sd", "loa_low", "loa_high"}, {}};
    std::map<std::string, csv::Table> points;
    for (const auto& r : rep.bland_altman) {
        summary.rows.push_back({r.method, r.group, std::to_string(r.result.means.size()), csv::format(r.result.bias),
                                csv::format(r.result.sd), csv::format(r.result.loa_low), csv::format(r.result.loa_high)});
        auto& pts = points[r.method];
        pts.header = {"group", "case_id", "mean_mm3", "difference_mm3"};
        for (std::size_t i = 0; i < r.result.means.size(); ++i) {
            pts.rows.push_back({r.group, r.case_ids[i], csv::format(r.result.means[i]), csv::format(r.result.differences[i])});
        }
    }
    csv::write(dir / "bland_altman_summary.csv", summary);
    for (const auto& [method, table] : points) {
        csv::write(dir / ("bland_altman_" + method + ".csv"), table);
    }
}

}  // namespace lesionsynth::stats
