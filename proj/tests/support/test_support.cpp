#include "test_support.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>

namespace testsupport {
namespace fs = std::filesystem;
using lesionsynth::Geometry;

TempDir::TempDir(const std::string& tag) {
    static std::random_device rd;
    path_ = fs::temp_directory_path() / ("lesionsynth-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

std::vector<std::uint8_t> read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool files_equal(const fs::path& a, const fs::path& b) {
    return fs::exists(a) && fs::exists(b) && read_file(a) == read_file(b);
}

namespace {

template <typename T>
void put(std::vector<std::uint8_t>& buf, std::size_t off, T v, bool swap) {
    std::uint8_t bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    if (swap) std::reverse(bytes, bytes + sizeof(T));
    std::memcpy(buf.data() + off, bytes, sizeof(T));
}

}  // namespace

void write_reference_nifti(const fs::path& path, const Dims& dims, const Eigen::Matrix4d& affine, short datatype,
                           const std::vector<std::uint8_t>& payload, float slope, float inter, bool swap) {
    std::vector<std::uint8_t> h(352, 0);
    short bitpix = 0;
    switch (datatype) {
        case 2: bitpix = 8; break;
        case 4: bitpix = 16; break;
        case 8: case 16: bitpix = 32; break;
        case 64: bitpix = 64; break;
        default: bitpix = 8;
    }
    put<int>(h, 0, 348, swap);
    put<short>(h, 40, 3, swap);
    for (int a = 0; a < 3; ++a) put<short>(h, 42 + 2 * a, static_cast<short>(dims[a]), swap);
    for (int a = 3; a < 8; ++a) put<short>(h, 42 + 2 * a, 1, swap);
    put<short>(h, 70, datatype, swap);
    put<short>(h, 72, bitpix, swap);
    put<float>(h, 76, 1.0f, swap);
    for (int a = 0; a < 3; ++a) {
        put<float>(h, 80 + 4 * a, static_cast<float>(affine.block<3, 1>(0, a).norm()), swap);
    }
    put<float>(h, 108, 352.0f, swap);
    put<float>(h, 112, slope, swap);
    put<float>(h, 116, inter, swap);
    put<short>(h, 252, 0, swap);  // qform_code
    put<short>(h, 254, 1, swap);  // sform_code
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 4; ++c) {
            put<float>(h, 280 + 16 * r + 4 * c, static_cast<float>(affine(r, c)), swap);
        }
    }
    std::memcpy(h.data() + 344, "n+1\0", 4);
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(h.data()), static_cast<std::streamsize>(h.size()));
    const std::size_t elem = static_cast<std::size_t>(bitpix / 8);
    std::vector<std::uint8_t> body(payload);
    if (swap && elem > 1) {
        for (std::size_t i = 0; i + elem <= body.size(); i += elem) std::reverse(body.begin() + i, body.begin() + i + elem);
    }
    out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
}

LesionMask random_mask(const Geometry& g, double p, lesionsynth::RngStream& rng) {
    LesionMask m(g, 0);
    for (auto& v : m.data()) v = rng.uniform() < p ? 1 : 0;
    return m;
}

LesionMask random_blobs(const Geometry& g, int blobs, int steps, lesionsynth::RngStream& rng) {
    LesionMask m(g, 0);
    const Dims d = g.dims();
    for (int b = 0; b < blobs; ++b) {
        int x = static_cast<int>(rng.below(static_cast<std::uint64_t>(d[0])));
        int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(d[1])));
        int z = static_cast<int>(rng.below(static_cast<std::uint64_t>(d[2])));
        for (int s = 0; s < steps; ++s) {
            m.at(x, y, z) = 1;
            const int dir = static_cast<int>(rng.below(6));
            const int delta = dir % 2 ? 1 : -1;
            int* c = dir / 2 == 0 ? &x : (dir / 2 == 1 ? &y : &z);
            *c = std::clamp(*c + delta, 0, d[static_cast<std::size_t>(dir / 2)] - 1);
        }
    }
    return m;
}

namespace {

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
    std::size_t find(std::size_t a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

std::vector<std::size_t> uf_labels(const LesionMask& m, int conn) {
    const Dims d = m.dims();
    UnionFind uf(m.size());
    for (int k = 0; k < d[2]; ++k)
        for (int j = 0; j < d[1]; ++j)
            for (int i = 0; i < d[0]; ++i) {
                if (!m.at(i, j, k)) continue;
                for (int dz = -1; dz <= 1; ++dz)
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dx = -1; dx <= 1; ++dx) {
                            const int order = std::abs(dx) + std::abs(dy) + std::abs(dz);
                            if (order == 0) continue;
                            if (conn == 6 && order > 1) continue;
                            if (conn == 18 && order > 2) continue;
                            if (m.contains(i + dx, j + dy, k + dz) && m.at(i + dx, j + dy, k + dz)) {
                                uf.unite(m.index(i, j, k), m.index(i + dx, j + dy, k + dz));
                            }
                        }
            }
    std::vector<std::size_t> roots(m.size(), SIZE_MAX);
    for (std::size_t n = 0; n < m.size(); ++n) {
        if (m[n]) roots[n] = uf.find(n);
    }
    return roots;
}

}  // namespace

int count_components_union_find(const LesionMask& m, int conn) {
    std::set<std::size_t> roots;
    for (auto r : uf_labels(m, conn)) {
        if (r != SIZE_MAX) roots.insert(r);
    }
    return static_cast<int>(roots.size());
}

std::vector<Surfel> oracle_surfels(const LesionMask& m) {
    const Dims d = m.dims();
    const Geometry& g = m.geometry();
    const auto sp = g.spacing();
    std::vector<Surfel> out;
    auto fg = [&](int i, int j, int k) { return m.contains(i, j, k) && m.at(i, j, k) != 0; };
    for (int k = -1; k <= d[2]; ++k)
        for (int j = -1; j <= d[1]; ++j)
            for (int i = -1; i <= d[0]; ++i) {
                if (fg(i, j, k)) continue;
                const int nb[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
                for (const auto& o : nb) {
                    if (!fg(i + o[0], j + o[1], k + o[2])) continue;
                    const Eigen::Vector3d mid(i + 0.5 * o[0], j + 0.5 * o[1], k + 0.5 * o[2]);
                    const Eigen::Vector3d w = (g.affine() * mid.homogeneous()).head<3>();
                    const double area = o[0] ? sp[1] * sp[2] : (o[1] ? sp[0] * sp[2] : sp[0] * sp[1]);
                    out.push_back({w, area});
                }
            }
    return out;
}

namespace {

std::vector<std::pair<double, double>> all_pairs(const std::vector<Surfel>& a, const std::vector<Surfel>& b) {
    std::vector<std::pair<double, double>> out;
    for (const auto& s : a) {
        double best = INFINITY;
        for (const auto& t : b) best = std::min(best, (s.pos - t.pos).norm());
        out.emplace_back(best, s.area);
    }
    return out;
}

}  // namespace

double oracle_directed_hd(const std::vector<Surfel>& a, const std::vector<Surfel>& b, double fraction) {
    const auto d = all_pairs(a, b);
    double total = 0.0;
    for (const auto& [_, area] : d) total += area;
    std::set<double> candidates;
    for (const auto& [dist, _] : d) candidates.insert(dist);
    for (double zeta : candidates) {
        double within = 0.0;
        for (const auto& [dist, area] : d) {
            if (dist <= zeta) within += area;
        }
        if (within / total >= fraction) return zeta;
    }
    return *candidates.rbegin();
}

double oracle_hd95(const std::vector<Surfel>& a, const std::vector<Surfel>& b) {
    return std::max(oracle_directed_hd(a, b), oracle_directed_hd(b, a));
}

double oracle_assd(const std::vector<Surfel>& a, const std::vector<Surfel>& b) {
    double num = 0.0, den = 0.0;
    for (const auto& [dist, area] : all_pairs(a, b)) { num += dist * area; den += area; }
    for (const auto& [dist, area] : all_pairs(b, a)) { num += dist * area; den += area; }
    return num / den;
}

double oracle_lesional_dsc(const LesionMask& gt, const LesionMask& pred, double min_mm3) {
    const double vox = gt.geometry().voxel_volume_mm3();
    auto components = [&](const LesionMask& m) {
        std::map<std::size_t, std::vector<std::size_t>> comps;
        const auto roots = uf_labels(m, 26);
        for (std::size_t n = 0; n < roots.size(); ++n) {
            if (roots[n] != SIZE_MAX) comps[roots[n]].push_back(n);
        }
        std::vector<std::set<std::size_t>> kept;
        for (auto& [_, voxels] : comps) {
            if (static_cast<double>(voxels.size()) * vox > min_mm3) kept.emplace_back(voxels.begin(), voxels.end());
        }
        return kept;
    };
    const auto g = components(gt);
    const auto p = components(pred);
    if (g.empty() && p.empty()) return 1.0;
    if (g.empty() || p.empty()) return 0.0;
    auto overlaps = [](const std::set<std::size_t>& a, const std::set<std::size_t>& b) {
        for (auto v : a) {
            if (b.contains(v)) return true;
        }
        return false;
    };
    int tp = 0, fn = 0, fp = 0;
    for (const auto& gc : g) {
        bool hit = false;
        for (const auto& pc : p) hit = hit || overlaps(gc, pc);
        (hit ? tp : fn)++;
    }
    for (const auto& pc : p) {
        bool hit = false;
        for (const auto& gc : g) hit = hit || overlaps(pc, gc);
        if (!hit) fp++;
    }
    return 2.0 * tp / (2.0 * tp + fp + fn);
}

namespace {

std::vector<double> pooled_midranks(const std::vector<double>& pooled) {
    std::vector<double> r(pooled.size());
    for (std::size_t i = 0; i < pooled.size(); ++i) {
        double less = 0, equal = 0;
        for (double v : pooled) {
            if (v < pooled[i]) less++;
            if (v == pooled[i]) equal++;
        }
        r[i] = less + (equal + 1.0) / 2.0;
    }
    return r;
}

}  // namespace

double oracle_wilcoxon_exact(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> pooled(x);
    pooled.insert(pooled.end(), y.begin(), y.end());
    const auto r = pooled_midranks(pooled);
    const std::size_t N = pooled.size(), n = x.size();
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i) w += r[i];
    double le = 0, ge = 0, all = 0;
    for (std::uint32_t mask = 0; mask < (1u << N); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != n) continue;
        double s = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            if (mask & (1u << i)) s += r[i];
        }
        all++;
        if (s <= w + 1e-9) le++;
        if (s >= w - 1e-9) ge++;
    }
    return std::min(1.0, 2.0 * std::min(le, ge) / all);
}

double oracle_wilcoxon_normal(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
    double u = 0.0;
    for (double a : x)
        for (double b : y) u += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
    std::map<double, int> ties;
    for (double v : x) ties[v]++;
    for (double v : y) ties[v]++;
    double t = 0.0;
    for (const auto& [_, c] : ties) t += static_cast<double>(c) * c * c - c;
    const double N = n + m;
    const double var = n * m / 12.0 * (N + 1.0 - t / (N * (N - 1.0)));
    const double z = (std::abs(u - n * m / 2.0) - 0.5) / std::sqrt(var);
    return std::min(1.0, std::erfc(std::max(z, 0.0) / std::sqrt(2.0)));
}

double oracle_quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const double lo = std::floor(pos);
    const double hi = std::ceil(pos);
    return v[static_cast<std::size_t>(lo)] * (1.0 - (pos - lo)) + v[static_cast<std::size_t>(hi)] * (pos - lo);
}

double ks_uniform(std::vector<double> v, double lo, double hi) {
    std::sort(v.begin(), v.end());
    double d = 0.0;
    const double n = static_cast<double>(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double f = std::clamp((v[i] - lo) / (hi - lo), 0.0, 1.0);
        d = std::max({d, f - i / n, (i + 1) / n - f});
    }
    return d;
}

double ks_normal(std::vector<double> v, double mu, double sd) {
    std::sort(v.begin(), v.end());
    double d = 0.0;
    const double n = static_cast<double>(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double f = 0.5 * std::erfc(-(v[i] - mu) / (sd * std::sqrt(2.0)));
        d = std::max({d, f - i / n, (i + 1) / n - f});
    }
    return d;
}

}  // namespace testsupport
