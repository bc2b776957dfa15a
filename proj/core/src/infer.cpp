#include "lesionsynth/infer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <string>

#include "lesionsynth/error.hpp"
#include "lesionsynth/parallel.hpp"

namespace lesionsynth::infer {
namespace {

std::size_t voxels(const Dims& d) {
    return static_cast<std::size_t>(d[0]) * static_cast<std::size_t>(d[1]) * static_cast<std::size_t>(d[2]);
}

class ConstantPredictor final : public Predictor {
public:
    ConstantPredictor(double c, Dims patch) : c_(c), patch_(patch) {}
    Dims patch_shape() const override { return patch_; }
    std::vector<double> predict(const PatchInput& p) const override { return std::vector<double>(p.size(), c_); }

private:
    double c_;
    Dims patch_;
};

class CopyPriorPredictor final : public Predictor {
public:
    explicit CopyPriorPredictor(Dims patch) : patch_(patch) {}
    Dims patch_shape() const override { return patch_; }
    std::vector<double> predict(const PatchInput& p) const override { return p.prior; }

private:
    Dims patch_;
};

class ThresholdPredictor final : public Predictor {
public:
    ThresholdPredictor(double t, Dims patch) : t_(t), patch_(patch) {}
    Dims patch_shape() const override { return patch_; }
    std::vector<double> predict(const PatchInput& p) const override {
        std::vector<double> out(p.size());
        for (std::size_t n = 0; n < out.size(); ++n) {
            out[n] = p.image[n] >= t_ ? 1.0 : 0.0;
        }
        return out;
    }

private:
    double t_;
    Dims patch_;
};

std::vector<double> flipped(const std::vector<double>& v, const Dims& d, unsigned axes) {
    if (axes == 0) {
        return v;
    }
    std::vector<double> out(v.size());
    std::size_t n = 0;
    for (int k = 0; k < d[2]; ++k) {
        const int kk = (axes & 4u) ? d[2] - 1 - k : k;
        for (int j = 0; j < d[1]; ++j) {
            const int jj = (axes & 2u) ? d[1] - 1 - j : j;
            for (int i = 0; i < d[0]; ++i, ++n) {
                const int ii = (axes & 1u) ? d[0] - 1 - i : i;
                out[n] = v[static_cast<std::size_t>(ii) +
                           static_cast<std::size_t>(d[0]) *
                               (static_cast<std::size_t>(jj) + static_cast<std::size_t>(d[1]) * static_cast<std::size_t>(kk))];
            }
        }
    }
    return out;
}

class MirrorTta final : public Predictor {
public:
    explicit MirrorTta(PredictorPtr base) : base_(std::move(base)) {}
    Dims patch_shape() const override { return base_->patch_shape(); }
    std::vector<double> predict(const PatchInput& p) const override {
        std::vector<double> acc(p.size(), 0.0);
        for (unsigned axes = 0; axes < 8; ++axes) {
            PatchInput f{p.dims, flipped(p.image, p.dims, axes), flipped(p.prior, p.dims, axes)};
            const auto out = base_->predict(f);
            if (out.size() != p.size()) {
                throw Error("predictor output shape mismatch");
            }
            // A flip is its own inverse.
            const auto back = flipped(out, p.dims, axes);
            for (std::size_t n = 0; n < acc.size(); ++n) {
                acc[n] += back[n];
            }
        }
        for (double& v : acc) {
            v /= 8.0;
        }
        return acc;
    }

private:
    PredictorPtr base_;
};

double parse_number(std::string_view text, std::string_view spec) {
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || text.empty()) {
        throw ConfigError("bad predictor parameter in '" + std::string(spec) + "'");
    }
    return v;
}

}  // namespace

PredictorPtr make_predictor(std::string_view spec, Dims patch) {
    for (int d : patch) {
        if (d < 1) {
            throw ConfigError("patch dimensions must be positive");
        }
    }
    if (spec == "copy-prior") {
        return std::make_shared<CopyPriorPredictor>(patch);
    }
    if (spec.starts_with("constant:")) {
        const double c = parse_number(spec.substr(9), spec);
        if (!(c >= 0.0 && c <= 1.0)) {
            throw ConfigError("constant predictor value must lie in [0,1]");
        }
        return std::make_shared<ConstantPredictor>(c, patch);
    }
    if (spec.starts_with("threshold:")) {
        return std::make_shared<ThresholdPredictor>(parse_number(spec.substr(10), spec), patch);
    }
    throw ConfigError("unknown predictor '" + std::string(spec) +
                      "' (valid: constant:<c>, copy-prior, threshold:<t>)");
}

PredictorPtr mirror_tta(PredictorPtr base) {
    if (!base) {
        throw ConfigError("mirror_tta: null predictor");
    }
    return std::make_shared<MirrorTta>(std::move(base));
}

ScalarVolume preprocess(const ScalarVolume& img, const Vec3& spacing) {
    return resample(zscore_normalize(reorient_ras(img)), spacing, Interp::tricubic);
}

TwoChannelInput pack_input(const ScalarVolume& img, const std::optional<LesionMask>& prior) {
    TwoChannelInput in{img, LesionMask(img.geometry(), 0)};
    if (prior) {
        in.prior = prior->geometry().same_grid(img.geometry()) ? LesionMask(img.geometry(), prior->values())
                                                              : resample_to(*prior, img.geometry());
        for (auto& v : in.prior.data()) {
            v = v != 0 ? 1 : 0;
        }
    }
    return in;
}

std::vector<int> window_starts(int n, int patch, double step_fraction) {
    if (n < patch) {
        throw Error("window_starts: volume smaller than patch");
    }
    const int stride = std::max(1, static_cast<int>(std::floor(step_fraction * patch)));
    std::vector<int> starts;
    const int last = n - patch;
    for (int s = 0; s < last; s += stride) {
        starts.push_back(s);
    }
    starts.push_back(last);
    return starts;
}

std::vector<double> gaussian_weights(const Dims& patch) {
    std::array<std::vector<double>, 3> axis;
    for (int a = 0; a < 3; ++a) {
        const int p = patch[static_cast<std::size_t>(a)];
        const double sigma = p / 8.0;
        const double centre = (p - 1) / 2.0;
        auto& w = axis[static_cast<std::size_t>(a)];
        for (int i = 0; i < p; ++i) {
            const double d = (i - centre) / sigma;
            w.push_back(std::exp(-0.5 * d * d));
        }
    }
    std::vector<double> out(voxels(patch));
    std::size_t n = 0;
    for (int k = 0; k < patch[2]; ++k) {
        for (int j = 0; j < patch[1]; ++j) {
            for (int i = 0; i < patch[0]; ++i, ++n) {
                out[n] = axis[0][static_cast<std::size_t>(i)] * axis[1][static_cast<std::size_t>(j)] *
                         axis[2][static_cast<std::size_t>(k)];
            }
        }
    }
    return out;
}

ScalarVolume sliding_window_predict(const TwoChannelInput& input, const Predictor& pred, const WindowOptions& opts) {
    require_same_grid(input.image.geometry(), input.prior.geometry(), "image vs prior channel");
    if (!(opts.step_fraction > 0.0 && opts.step_fraction <= 1.0)) {
        throw ConfigError("step_fraction must lie in (0,1]");
    }
    const Dims patch = pred.patch_shape();
    const Dims& dims = input.image.dims();
    Dims padded{};
    Dims before{};
    for (std::size_t a = 0; a < 3; ++a) {
        padded[a] = std::max(dims[a], patch[a]);
        before[a] = (padded[a] - dims[a]) / 2;
    }
    const auto pidx = [&](int i, int j, int k) {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(padded[0]) *
                   (static_cast<std::size_t>(j) + static_cast<std::size_t>(padded[1]) * static_cast<std::size_t>(k));
    };
    std::vector<double> image(voxels(padded), 0.0);
    std::vector<double> prior(voxels(padded), 0.0);
    for (int k = 0; k < dims[2]; ++k) {
        for (int j = 0; j < dims[1]; ++j) {
            for (int i = 0; i < dims[0]; ++i) {
                const std::size_t dst = pidx(i + before[0], j + before[1], k + before[2]);
                image[dst] = input.image.at(i, j, k);
                prior[dst] = input.prior.at(i, j, k);
            }
        }
    }

    const auto sx = window_starts(padded[0], patch[0], opts.step_fraction);
    const auto sy = window_starts(padded[1], patch[1], opts.step_fraction);
    const auto sz = window_starts(padded[2], patch[2], opts.step_fraction);
    std::vector<std::array<int, 3>> windows;
    for (int z : sz) {
        for (int y : sy) {
            for (int x : sx) {
                windows.push_back({x, y, z});
            }
        }
    }
    const std::vector<double> weight = gaussian_weights(patch);
    std::vector<double> value_acc(voxels(padded), 0.0);
    std::vector<double> weight_acc(voxels(padded), 0.0);

    const unsigned workers = opts.workers == 0 ? default_worker_count() : opts.workers;
    const std::size_t batch = std::max<std::size_t>(1, workers);
    std::vector<std::vector<double>> outputs(batch);
    for (std::size_t first = 0; first < windows.size(); first += batch) {
        const std::size_t count = std::min(batch, windows.size() - first);
        parallel_for(count, workers, [&](std::size_t b) {
            const auto& w = windows[first + b];
            PatchInput p{patch, std::vector<double>(voxels(patch)), std::vector<double>(voxels(patch))};
            std::size_t n = 0;
            for (int k = 0; k < patch[2]; ++k) {
                for (int j = 0; j < patch[1]; ++j) {
                    const std::size_t row = pidx(w[0], w[1] + j, w[2] + k);
                    std::copy_n(image.begin() + static_cast<std::ptrdiff_t>(row), patch[0], p.image.begin() + static_cast<std::ptrdiff_t>(n));
                    std::copy_n(prior.begin() + static_cast<std::ptrdiff_t>(row), patch[0], p.prior.begin() + static_cast<std::ptrdiff_t>(n));
                    n += static_cast<std::size_t>(patch[0]);
                }
            }
            outputs[b] = pred.predict(p);
            if (outputs[b].size() != p.size()) {
                throw Error("predictor output shape mismatch");
            }
        });
        // Accumulate in window order so the sums are schedule independent.
        for (std::size_t b = 0; b < count; ++b) {
            const auto& w = windows[first + b];
            const auto& out = outputs[b];
            std::size_t n = 0;
            for (int k = 0; k < patch[2]; ++k) {
                for (int j = 0; j < patch[1]; ++j) {
                    std::size_t dst = pidx(w[0], w[1] + j, w[2] + k);
                    for (int i = 0; i < patch[0]; ++i, ++n, ++dst) {
                        value_acc[dst] += weight[n] * out[n];
                        weight_acc[dst] += weight[n];
                    }
                }
            }
        }
    }

    ScalarVolume result(input.image.geometry(), 0.0);
    for (int k = 0; k < dims[2]; ++k) {
        for (int j = 0; j < dims[1]; ++j) {
            for (int i = 0; i < dims[0]; ++i) {
                const std::size_t src = pidx(i + before[0], j + before[1], k + before[2]);
                result.at(i, j, k) = value_acc[src] / weight_acc[src];
            }
        }
    }
    return result;
}

ScalarVolume fuse_modalities(const std::vector<ScalarVolume>& probs, const std::optional<std::vector<double>>& weights) {
    if (probs.empty()) {
        throw ConfigError("fuse_modalities: no inputs");
    }
    std::vector<double> w = weights.value_or(std::vector<double>(probs.size(), 1.0));
    if (w.size() != probs.size()) {
        throw ConfigError("fuse_modalities: weight count does not match modality count");
    }
    double total = 0.0;
    for (double v : w) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw ConfigError("fuse_modalities: weights must be finite and non-negative");
        }
        total += v;
    }
    if (total <= 0.0) {
        throw ConfigError("fuse_modalities: weights are all zero");
    }
    ScalarVolume out(probs.front().geometry(), 0.0);
    for (std::size_t m = 0; m < probs.size(); ++m) {
        require_same_grid(probs.front().geometry(), probs[m].geometry(), "modalities");
        const double f = w[m] / total;
        for (std::size_t n = 0; n < out.size(); ++n) {
            out[n] += f * probs[m][n];
        }
    }
    return out;
}

LesionMask binarize(const ScalarVolume& prob, double threshold) {
    LesionMask out(prob.geometry(), 0);
    for (std::size_t n = 0; n < out.size(); ++n) {
        out[n] = prob[n] >= threshold ? 1 : 0;
    }
    return out;
}

std::vector<LesionMask> propagate_longitudinal(const std::vector<ScalarVolume>& scans, const Predictor& pred,
                                               const LongitudinalOptions& opts) {
    if (scans.empty()) {
        throw Error("propagate_longitudinal: empty scan list");
    }
    std::vector<LesionMask> masks;
    std::optional<LesionMask> prior = opts.initial_prior;
    for (const auto& raw : scans) {
        const ScalarVolume img = opts.preprocess_inputs ? preprocess(raw) : raw;
        const TwoChannelInput in = pack_input(img, prior);
        masks.push_back(binarize(sliding_window_predict(in, pred, opts.window), opts.threshold));
        prior = masks.back();
    }
    return masks;
}

}  // namespace lesionsynth::infer
