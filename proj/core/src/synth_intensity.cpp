#include <algorithm>
#include <cmath>

#include "lesionsynth/synthgen.hpp"

namespace lesionsynth::synth {

GmmParams GmmParams::sample(int num_classes, const Range& mu, const Range& sigma, RngStream& rng) {
    GmmParams p;
    p.mean.resize(static_cast<std::size_t>(num_classes));
    p.stddev.resize(static_cast<std::size_t>(num_classes));
    for (int k = 0; k < num_classes; ++k) {
        p.mean[static_cast<std::size_t>(k)] = mu.sample(rng);
        p.stddev[static_cast<std::size_t>(k)] = sigma.sample(rng);
    }
    return p;
}

ScalarVolume sample_gmm_image(const LabelVolume& parc, const GmmParams& params, const RngStream& rng) {
    if (params.mean.size() != params.stddev.size()) {
        throw ConfigError("GMM parameter vectors differ in length");
    }
    const auto k_max = static_cast<std::int32_t>(params.mean.size());
    for (std::int32_t v : parc.data()) {
        if (v >= k_max) {
            throw ConfigError("missing GMM parameters for class " + std::to_string(v));
        }
    }
    for (double s : params.stddev) {
        if (s < 0) {
            throw ConfigError("GMM standard deviations must be >= 0");
        }
    }
    const Dims& d = parc.dims();
    const std::size_t slice = static_cast<std::size_t>(d[0]) * d[1];
    ScalarVolume img(parc.geometry());
    for (int z = 0; z < d[2]; ++z) {
        RngStream slice_rng = rng.child(static_cast<std::uint64_t>(z));
        const std::size_t base = slice * static_cast<std::size_t>(z);
        for (std::size_t n = base; n < base + slice; ++n) {
            const auto label = static_cast<std::size_t>(parc[n]);
            const double sd = params.stddev[label];
            img[n] = sd == 0.0 ? params.mean[label] : slice_rng.normal(params.mean[label], sd);
        }
    }
    return img;
}

ScalarVolume sample_bias_field(const Geometry& geom, double bias_std, const Dims& grid, RngStream& rng) {
    if (bias_std < 0) {
        throw ConfigError("bias field standard deviation must be >= 0");
    }
    for (int g : grid) {
        if (g < 1) {
            throw ConfigError("bias_grid entries must be >= 1");
        }
    }
    std::vector<double> nodes(static_cast<std::size_t>(grid[0]) * grid[1] * grid[2]);
    for (double& c : nodes) {
        c = rng.normal(0.0, bias_std);
    }
    std::vector<double> field = upsample_control_grid(nodes, grid, geom.dims());
    for (double& v : field) {
        v = std::exp(v);
    }
    return ScalarVolume(geom, std::move(field));
}

ScalarVolume apply_bias_field(const ScalarVolume& img, double bias_std, const Dims& grid, RngStream& rng) {
    if (bias_std == 0.0) {
        return img;
    }
    const ScalarVolume field = sample_bias_field(img.geometry(), bias_std, grid, rng);
    ScalarVolume out = img;
    for (std::size_t n = 0; n < out.size(); ++n) {
        out[n] *= field[n];
    }
    return out;
}

ScalarVolume simulate_thick_slices(const ScalarVolume& img, int axis, double spacing_mm, double thickness_mm) {
    if (axis < 0 || axis > 2) {
        throw ConfigError("axis must be 0, 1 or 2");
    }
    const Dims& d = img.dims();
    const double native = img.geometry().spacing()[static_cast<std::size_t>(axis)];
    const int n = d[static_cast<std::size_t>(axis)];
    const double sigma = thickness_mm / (2.0 * std::sqrt(2.0 * std::log(2.0))) / native;
    const double step = spacing_mm / native;
    const int n_low = std::max(1, static_cast<int>(std::ceil(n / step - 1e-9)));

    std::vector<double> kernel;
    int radius = 0;
    if (sigma > 1e-3) {
        radius = static_cast<int>(std::ceil(3.0 * sigma));
        kernel.resize(static_cast<std::size_t>(2 * radius + 1));
        double total = 0.0;
        for (int r = -radius; r <= radius; ++r) {
            const double w = std::exp(-0.5 * r * r / (sigma * sigma));
            kernel[static_cast<std::size_t>(r + radius)] = w;
            total += w;
        }
        for (double& w : kernel) {
            w /= total;
        }
    }

    const std::array<std::size_t, 3> stride{1, static_cast<std::size_t>(d[0]), static_cast<std::size_t>(d[0]) * d[1]};
    const std::size_t s = stride[static_cast<std::size_t>(axis)];
    ScalarVolume out(img.geometry());
    std::vector<double> line(static_cast<std::size_t>(n));
    std::vector<double> blurred(static_cast<std::size_t>(n));
    std::vector<double> low(static_cast<std::size_t>(n_low));

    // Visit every line along `axis`: iterate the other two axes.
    const int a1 = axis == 0 ? 1 : 0;
    const int a2 = axis == 2 ? 1 : 2;
    for (int q = 0; q < d[static_cast<std::size_t>(a2)]; ++q) {
        for (int p = 0; p < d[static_cast<std::size_t>(a1)]; ++p) {
            const std::size_t base = static_cast<std::size_t>(p) * stride[static_cast<std::size_t>(a1)] +
                                     static_cast<std::size_t>(q) * stride[static_cast<std::size_t>(a2)];
            for (int x = 0; x < n; ++x) {
                line[static_cast<std::size_t>(x)] = img[base + static_cast<std::size_t>(x) * s];
            }
            if (kernel.empty()) {
                blurred = line;
            } else {
                for (int x = 0; x < n; ++x) {
                    double acc = 0.0;
                    for (int r = -radius; r <= radius; ++r) {
                        const int src = std::clamp(x + r, 0, n - 1);
                        acc += kernel[static_cast<std::size_t>(r + radius)] * line[static_cast<std::size_t>(src)];
                    }
                    blurred[static_cast<std::size_t>(x)] = acc;
                }
            }
            auto lerp_at = [](const std::vector<double>& v, double pos) {
                const int m = static_cast<int>(v.size());
                pos = std::clamp(pos, 0.0, static_cast<double>(m - 1));
                const int lo = std::min(static_cast<int>(std::floor(pos)), m - 1);
                const int hi = std::min(lo + 1, m - 1);
                const double t = pos - lo;
                return v[static_cast<std::size_t>(lo)] * (1 - t) + v[static_cast<std::size_t>(hi)] * t;
            };
            for (int j = 0; j < n_low; ++j) {
                low[static_cast<std::size_t>(j)] = lerp_at(blurred, j * step);
            }
            for (int x = 0; x < n; ++x) {
                out[base + static_cast<std::size_t>(x) * s] = lerp_at(low, x / step);
            }
        }
    }
    return out;
}

ResolutionSample randomize_resolution(const ScalarVolume& img, const GmmSynthConfig& cfg, RngStream& rng) {
    ResolutionSample r{img};
    if (!(rng.uniform() < cfg.aniso_prob)) {
        return r;
    }
    r.axis = static_cast<int>(rng.below(3));
    const double native = img.geometry().spacing()[static_cast<std::size_t>(r.axis)];
    const double max_spacing = std::max(native, cfg.aniso_max_spacing_mm);
    r.spacing_mm = rng.uniform(native, max_spacing);
    r.thickness_mm = rng.uniform(native, r.spacing_mm);
    r.image = simulate_thick_slices(img, r.axis, r.spacing_mm, r.thickness_mm);
    r.applied = true;
    return r;
}

ScalarVolume clip_intensity(const ScalarVolume& img, double max_value) {
    if (!(max_value > 0)) {
        throw ConfigError("clip maximum must be > 0");
    }
    ScalarVolume out = img;
    for (double& v : out.data()) {
        v = std::min(v, max_value);
    }
    return out;
}

}  // namespace lesionsynth::synth
