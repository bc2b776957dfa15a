#include "lesionsynth/morphology.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <string>

namespace lesionsynth::morph {
namespace {

std::vector<std::array<int, 3>> neighbour_offsets(int connectivity) {
    int max_l1 = 0;
    switch (connectivity) {
        case 6: max_l1 = 1; break;
        case 18: max_l1 = 2; break;
        case 26: max_l1 = 3; break;
        default: throw ConfigError("connectivity must be 6, 18 or 26, got " + std::to_string(connectivity));
    }
    std::vector<std::array<int, 3>> out;
    for (int dz = -1; dz <= 1; ++dz) {
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const int l1 = std::abs(dx) + std::abs(dy) + std::abs(dz);
                if (l1 > 0 && l1 <= max_l1) {
                    out.push_back({dx, dy, dz});
                }
            }
        }
    }
    return out;
}

constexpr std::array<std::array<int, 3>, 6> kFaces{{{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}}};

BinaryPatch erode_once(const BinaryPatch& in) {
    BinaryPatch out = in;
    const Dims& d = in.dims();
    for (int k = 0; k < d[2]; ++k) {
        for (int j = 0; j < d[1]; ++j) {
            for (int i = 0; i < d[0]; ++i) {
                if (!in.get(i, j, k)) {
                    continue;
                }
                for (const auto& f : kFaces) {
                    const int x = i + f[0];
                    const int y = j + f[1];
                    const int z = k + f[2];
                    if (x < 0 || y < 0 || z < 0 || x >= d[0] || y >= d[1] || z >= d[2] || !in.get(x, y, z)) {
                        out.set(i, j, k, 0);
                        break;
                    }
                }
            }
        }
    }
    return out;
}

BinaryPatch dilate_once(const BinaryPatch& in) {
    BinaryPatch out = in;
    const Dims& d = in.dims();
    for (int k = 0; k < d[2]; ++k) {
        for (int j = 0; j < d[1]; ++j) {
            for (int i = 0; i < d[0]; ++i) {
                if (!in.get(i, j, k)) {
                    continue;
                }
                for (const auto& f : kFaces) {
                    const int x = i + f[0];
                    const int y = j + f[1];
                    const int z = k + f[2];
                    if (x >= 0 && y >= 0 && z >= 0 && x < d[0] && y < d[1] && z < d[2]) {
                        out.set(x, y, z, 1);
                    }
                }
            }
        }
    }
    return out;
}

void require_iterations(int iterations) {
    if (iterations < 1) {
        throw ConfigError("morphology iterations must be >= 1");
    }
}

}  // namespace

LesionMask ComponentMap::foreground() const {
    LesionMask mask(geom);
    for (std::size_t n = 0; n < labels.size(); ++n) {
        mask[n] = labels[n] != 0 ? 1 : 0;
    }
    return mask;
}

ComponentMap connected_components(const LesionMask& mask, int connectivity) {
    const auto offsets = neighbour_offsets(connectivity);
    const Dims& d = mask.dims();
    ComponentMap cm;
    cm.geom = mask.geometry();
    cm.labels.assign(mask.size(), 0);

    std::vector<std::size_t> queue;
    std::int32_t next_id = 0;
    for (int k = 0; k < d[2]; ++k) {
        for (int j = 0; j < d[1]; ++j) {
            for (int i = 0; i < d[0]; ++i) {
                const std::size_t seed = mask.index(i, j, k);
                if (!mask[seed] || cm.labels[seed] != 0) {
                    continue;
                }
                const std::int32_t id = ++next_id;
                Box box{{i, j, k}, {i + 1, j + 1, k + 1}};
                std::size_t count = 0;
                queue.clear();
                queue.push_back(seed);
                cm.labels[seed] = id;
                for (std::size_t head = 0; head < queue.size(); ++head) {
                    const std::size_t cur = queue[head];
                    const int ci = static_cast<int>(cur % d[0]);
                    const int cj = static_cast<int>((cur / d[0]) % d[1]);
                    const int ck = static_cast<int>(cur / (static_cast<std::size_t>(d[0]) * d[1]));
                    ++count;
                    box.lo = {std::min(box.lo[0], ci), std::min(box.lo[1], cj), std::min(box.lo[2], ck)};
                    box.hi = {std::max(box.hi[0], ci + 1), std::max(box.hi[1], cj + 1), std::max(box.hi[2], ck + 1)};
                    for (const auto& o : offsets) {
                        const int x = ci + o[0];
                        const int y = cj + o[1];
                        const int z = ck + o[2];
                        if (!mask.contains(x, y, z)) {
                            continue;
                        }
                        const std::size_t nb = mask.index(x, y, z);
                        if (mask[nb] && cm.labels[nb] == 0) {
                            cm.labels[nb] = id;
                            queue.push_back(nb);
                        }
                    }
                }
                cm.voxel_counts.push_back(count);
                cm.volumes_mm3.push_back(component_volume_mm3(count, cm.geom));
                cm.boxes.push_back(box);
            }
        }
    }
    return cm;
}

BinaryPatch::BinaryPatch(Dims parent_dims, Dims origin, Dims dims)
    : parent_(parent_dims), origin_(origin), dims_(dims),
      bits_(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], 0) {}

BinaryPatch BinaryPatch::from_mask(const LesionMask& mask) {
    BinaryPatch p(mask.dims(), {0, 0, 0}, mask.dims());
    for (std::size_t n = 0; n < mask.size(); ++n) {
        p.bits_[n] = mask[n] ? 1 : 0;
    }
    return p;
}

BinaryPatch BinaryPatch::from_component(const ComponentMap& cm, int id, int pad) {
    if (id < 1 || id > cm.count()) {
        throw ConfigError("component id out of range");
    }
    const Box& b = cm.boxes[static_cast<std::size_t>(id - 1)];
    const Dims& pd = cm.geom.dims();
    Dims lo{};
    Dims dims{};
    for (int a = 0; a < 3; ++a) {
        lo[a] = std::max(0, b.lo[a] - pad);
        dims[a] = std::min(pd[a], b.hi[a] + pad) - lo[a];
    }
    BinaryPatch p(pd, lo, dims);
    for (int k = 0; k < dims[2]; ++k) {
        for (int j = 0; j < dims[1]; ++j) {
            for (int i = 0; i < dims[0]; ++i) {
                const std::size_t n = static_cast<std::size_t>(lo[0] + i) +
                                      static_cast<std::size_t>(pd[0]) *
                                          (static_cast<std::size_t>(lo[1] + j) + static_cast<std::size_t>(pd[1]) * (lo[2] + k));
                if (cm.labels[n] == id) {
                    p.set(i, j, k, 1);
                }
            }
        }
    }
    return p;
}

std::size_t BinaryPatch::count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

void BinaryPatch::paste_into(LesionMask& mask) const {
    if (mask.dims() != parent_) {
        throw GeometryError("patch parent dims do not match target mask");
    }
    for (int k = 0; k < dims_[2]; ++k) {
        for (int j = 0; j < dims_[1]; ++j) {
            for (int i = 0; i < dims_[0]; ++i) {
                if (get(i, j, k)) {
                    mask.at(origin_[0] + i, origin_[1] + j, origin_[2] + k) = 1;
                }
            }
        }
    }
}

BinaryPatch erode(const BinaryPatch& set, int iterations) {
    require_iterations(iterations);
    BinaryPatch cur = set;
    for (int it = 0; it < iterations; ++it) {
        cur = erode_once(cur);
    }
    return cur;
}

BinaryPatch dilate(const BinaryPatch& set, int iterations) {
    require_iterations(iterations);
    BinaryPatch cur = set;
    for (int it = 0; it < iterations; ++it) {
        cur = dilate_once(cur);
    }
    return cur;
}

LesionMask erode(const LesionMask& mask, int iterations) {
    LesionMask out(mask.geometry());
    erode(BinaryPatch::from_mask(mask), iterations).paste_into(out);
    return out;
}

LesionMask dilate(const LesionMask& mask, int iterations) {
    LesionMask out(mask.geometry());
    dilate(BinaryPatch::from_mask(mask), iterations).paste_into(out);
    return out;
}

}  // namespace lesionsynth::morph
