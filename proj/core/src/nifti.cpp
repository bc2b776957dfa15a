#include "lesionsynth/nifti.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <type_traits>

#include "lesionsynth/version.hpp"

namespace lesionsynth {
namespace {

static_assert(std::endian::native == std::endian::little, "NIfTI writer assumes a little-endian host");

#pragma pack(push, 1)
struct Nifti1Header {
    std::int32_t sizeof_hdr;
    char data_type[10];
    char db_name[18];
    std::int32_t extents;
    std::int16_t session_error;
    char regular;
    char dim_info;
    std::int16_t dim[8];
    float intent_p1;
    float intent_p2;
    float intent_p3;
    std::int16_t intent_code;
    std::int16_t datatype;
    std::int16_t bitpix;
    std::int16_t slice_start;
    float pixdim[8];
    float vox_offset;
    float scl_slope;
    float scl_inter;
    std::int16_t slice_end;
    char slice_code;
    char xyzt_units;
    float cal_max;
    float cal_min;
    float slice_duration;
    float toffset;
    std::int32_t glmax;
    std::int32_t glmin;
    char descrip[80];
    char aux_file[24];
    std::int16_t qform_code;
    std::int16_t sform_code;
    float quatern_b;
    float quatern_c;
    float quatern_d;
    float qoffset_x;
    float qoffset_y;
    float qoffset_z;
    float srow_x[4];
    float srow_y[4];
    float srow_z[4];
    char intent_name[16];
    char magic[4];
};
#pragma pack(pop)
static_assert(sizeof(Nifti1Header) == 348);

constexpr std::int32_t kEcodeComment = 6;
constexpr std::string_view kAffineTag = "lesionsynth-affine ";

template <typename T>
void swap_in_place(T& v) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    v = std::bit_cast<T>(bytes);
}

template <typename T, std::size_t N>
void swap_array(T (&arr)[N]) {
    for (auto& v : arr) {
        swap_in_place(v);
    }
}

void swap_header(Nifti1Header& h) {
    swap_in_place(h.sizeof_hdr);
    swap_in_place(h.extents);
    swap_in_place(h.session_error);
    swap_array(h.dim);
    swap_in_place(h.intent_p1);
    swap_in_place(h.intent_p2);
    swap_in_place(h.intent_p3);
    swap_in_place(h.intent_code);
    swap_in_place(h.datatype);
    swap_in_place(h.bitpix);
    swap_in_place(h.slice_start);
    swap_array(h.pixdim);
    swap_in_place(h.vox_offset);
    swap_in_place(h.scl_slope);
    swap_in_place(h.scl_inter);
    swap_in_place(h.slice_end);
    swap_in_place(h.cal_max);
    swap_in_place(h.cal_min);
    swap_in_place(h.slice_duration);
    swap_in_place(h.toffset);
    swap_in_place(h.glmax);
    swap_in_place(h.glmin);
    swap_in_place(h.qform_code);
    swap_in_place(h.sform_code);
    swap_in_place(h.quatern_b);
    swap_in_place(h.quatern_c);
    swap_in_place(h.quatern_d);
    swap_in_place(h.qoffset_x);
    swap_in_place(h.qoffset_y);
    swap_in_place(h.qoffset_z);
    swap_array(h.srow_x);
    swap_array(h.srow_y);
    swap_array(h.srow_z);
}

int bytes_per_voxel(std::int16_t datatype) {
    switch (static_cast<NiftiDatatype>(datatype)) {
        case NiftiDatatype::uint8: return 1;
        case NiftiDatatype::int16: return 2;
        case NiftiDatatype::int32: return 4;
        case NiftiDatatype::float32: return 4;
        case NiftiDatatype::float64: return 8;
    }
    return 0;
}

bool is_integer_type(std::int16_t datatype) {
    const auto dt = static_cast<NiftiDatatype>(datatype);
    return dt == NiftiDatatype::uint8 || dt == NiftiDatatype::int16 || dt == NiftiDatatype::int32;
}

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw IoError("no such file: " + path.string());
    }
    gzFile f = gzopen(path.string().c_str(), "rb");
    if (f == nullptr) {
        throw IoError("cannot open " + path.string());
    }
    std::vector<unsigned char> out;
    std::vector<unsigned char> chunk(1 << 20);
    for (;;) {
        const int n = gzread(f, chunk.data(), static_cast<unsigned>(chunk.size()));
        if (n < 0) {
            int errnum = 0;
            const std::string msg = gzerror(f, &errnum);
            gzclose(f);
            throw IoError("corrupt compressed stream in " + path.string() + ": " + msg);
        }
        if (n == 0) {
            break;
        }
        out.insert(out.end(), chunk.begin(), chunk.begin() + n);
    }
    gzclose(f);
    return out;
}

std::optional<Eigen::Matrix4d> parse_affine_extension(const std::vector<unsigned char>& buf, std::size_t vox_offset,
                                                      bool swapped) {
    if (buf.size() < 352 || buf[348] == 0) {
        return std::nullopt;
    }
    std::size_t pos = 352;
    while (pos + 8 <= vox_offset && pos + 8 <= buf.size()) {
        std::int32_t esize = 0;
        std::int32_t ecode = 0;
        std::memcpy(&esize, &buf[pos], 4);
        std::memcpy(&ecode, &buf[pos + 4], 4);
        if (swapped) {
            swap_in_place(esize);
            swap_in_place(ecode);
        }
        if (esize < 8 || pos + static_cast<std::size_t>(esize) > buf.size()) {
            return std::nullopt;
        }
        if (ecode == kEcodeComment) {
            const std::string text(reinterpret_cast<const char*>(&buf[pos + 8]), static_cast<std::size_t>(esize - 8));
            if (text.starts_with(kAffineTag)) {
                std::istringstream in(text.substr(kAffineTag.size()));
                Eigen::Matrix4d a = Eigen::Matrix4d::Identity();
                for (int r = 0; r < 3; ++r) {
                    for (int c = 0; c < 4; ++c) {
                        if (!(in >> a(r, c))) {
                            return std::nullopt;
                        }
                    }
                }
                return a;
            }
        }
        pos += static_cast<std::size_t>(esize);
    }
    return std::nullopt;
}

Eigen::Matrix4d qform_affine(const Nifti1Header& h) {
    const double b = h.quatern_b;
    const double c = h.quatern_c;
    const double d = h.quatern_d;
    const double a = std::sqrt(std::max(0.0, 1.0 - (b * b + c * c + d * d)));
    const Eigen::Matrix3d rot = Eigen::Quaterniond(a, b, c, d).normalized().toRotationMatrix();
    const double qfac = h.pixdim[0] < 0 ? -1.0 : 1.0;
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    for (int col = 0; col < 3; ++col) {
        double s = h.pixdim[col + 1] > 0 ? h.pixdim[col + 1] : 1.0;
        if (col == 2) {
            s *= qfac;
        }
        m.block<3, 1>(0, col) = rot.col(col) * s;
    }
    m(0, 3) = h.qoffset_x;
    m(1, 3) = h.qoffset_y;
    m(2, 3) = h.qoffset_z;
    return m;
}

Eigen::Matrix4d header_affine(const Nifti1Header& h) {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    if (h.sform_code > 0) {
        for (int c = 0; c < 4; ++c) {
            m(0, c) = h.srow_x[c];
            m(1, c) = h.srow_y[c];
            m(2, c) = h.srow_z[c];
        }
        return m;
    }
    if (h.qform_code > 0) {
        return qform_affine(h);
    }
    for (int c = 0; c < 3; ++c) {
        m(c, c) = h.pixdim[c + 1] > 0 ? h.pixdim[c + 1] : 1.0;
    }
    return m;
}

struct RawImage {
    Geometry geom;
    std::int16_t datatype = 0;
    double slope = 1.0;
    double inter = 0.0;
    std::vector<double> values;
};

template <typename T>
void decode(const unsigned char* src, std::size_t n, bool swapped, std::vector<double>& out) {
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        T v;
        std::memcpy(&v, src + i * sizeof(T), sizeof(T));
        if (swapped) {
            swap_in_place(v);
        }
        out[i] = static_cast<double>(v);
    }
}

RawImage read_raw(const std::filesystem::path& path) {
    const std::vector<unsigned char> buf = slurp(path);
    const std::string where = path.string();
    if (buf.size() < sizeof(Nifti1Header)) {
        throw IoError("corrupt header: file too short: " + where);
    }
    Nifti1Header h;
    std::memcpy(&h, buf.data(), sizeof(h));
    bool swapped = false;
    if (h.sizeof_hdr != 348) {
        swap_header(h);
        swapped = true;
        if (h.sizeof_hdr != 348) {
            throw IoError("corrupt header: sizeof_hdr is not 348: " + where);
        }
    }
    if (std::memcmp(h.magic, "n+1\0", 4) != 0) {
        throw IoError("corrupt header: not a single-file NIfTI-1 image: " + where);
    }
    const int ndim = h.dim[0];
    if (ndim < 1 || ndim > 7) {
        throw IoError("corrupt header: dim[0] = " + std::to_string(ndim) + ": " + where);
    }
    if (ndim > 4 || (ndim == 4 && h.dim[4] != 1)) {
        throw IoError("unsupported dimensionality: dim[0] = " + std::to_string(ndim) + ": " + where);
    }
    Dims dims{1, 1, 1};
    for (int i = 0; i < std::min(ndim, 3); ++i) {
        if (h.dim[i + 1] < 1) {
            throw IoError("corrupt header: non-positive dimension: " + where);
        }
        dims[i] = h.dim[i + 1];
    }
    const int bpv = bytes_per_voxel(h.datatype);
    if (bpv == 0) {
        throw IoError("unsupported datatype " + std::to_string(h.datatype) + ": " + where);
    }
    const auto vox_offset = static_cast<std::size_t>(h.vox_offset);
    if (h.vox_offset < 352.0f) {
        throw IoError("corrupt header: vox_offset < 352: " + where);
    }
    const std::size_t n = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    if (buf.size() < vox_offset + n * static_cast<std::size_t>(bpv)) {
        throw IoError("truncated voxel payload: " + where);
    }

    Eigen::Matrix4d affine = header_affine(h);
    if (h.sform_code > 0) {
        if (auto exact = parse_affine_extension(buf, vox_offset, swapped)) {
            // Only trust the exact copy while it still describes the float sform.
            const double scale = std::max(1.0, affine.cwiseAbs().maxCoeff());
            if ((*exact - affine).cwiseAbs().maxCoeff() <= 1e-5 * scale) {
                affine = *exact;
            }
        }
    }

    RawImage raw;
    try {
        raw.geom = Geometry(dims, affine);
    } catch (const GeometryError& e) {
        throw IoError(std::string(e.what()) + ": " + where);
    }
    raw.datatype = h.datatype;
    if (h.scl_slope != 0.0f && std::isfinite(h.scl_slope)) {
        raw.slope = h.scl_slope;
        raw.inter = std::isfinite(h.scl_inter) ? h.scl_inter : 0.0;
    }
    const unsigned char* src = buf.data() + vox_offset;
    switch (static_cast<NiftiDatatype>(h.datatype)) {
        case NiftiDatatype::uint8: decode<std::uint8_t>(src, n, swapped, raw.values); break;
        case NiftiDatatype::int16: decode<std::int16_t>(src, n, swapped, raw.values); break;
        case NiftiDatatype::int32: decode<std::int32_t>(src, n, swapped, raw.values); break;
        case NiftiDatatype::float32: decode<float>(src, n, swapped, raw.values); break;
        case NiftiDatatype::float64: decode<double>(src, n, swapped, raw.values); break;
    }
    return raw;
}

bool fits_label_volume(const RawImage& raw) {
    if (!is_integer_type(raw.datatype) || raw.slope != 1.0 || raw.inter != 0.0) {
        return false;
    }
    return std::all_of(raw.values.begin(), raw.values.end(), [](double v) { return v >= 0; });
}

LabelVolume to_labels(const RawImage& raw) {
    std::vector<std::int32_t> labels(raw.values.size());
    std::int32_t max_label = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        labels[i] = static_cast<std::int32_t>(raw.values[i]);
        max_label = std::max(max_label, labels[i]);
    }
    return LabelVolume(raw.geom, std::move(labels), std::max(2, max_label + 1));
}

ScalarVolume to_scalar(RawImage raw) {
    if (raw.slope != 1.0 || raw.inter != 0.0) {
        for (double& v : raw.values) {
            v = v * raw.slope + raw.inter;
        }
    }
    return ScalarVolume(raw.geom, std::move(raw.values));
}

Eigen::Quaterniond rotation_of(const Eigen::Matrix3d& linear, double& qfac) {
    Eigen::Matrix3d r = linear;
    for (int c = 0; c < 3; ++c) {
        r.col(c).normalize();
    }
    qfac = r.determinant() < 0 ? -1.0 : 1.0;
    r.col(2) *= qfac;
    // Nearest proper rotation (polar factor) in case the columns are not orthogonal.
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d rot = svd.matrixU() * svd.matrixV().transpose();
    Eigen::Quaterniond q(rot);
    if (q.w() < 0) {
        q.coeffs() *= -1.0;
    }
    return q;
}

template <typename T>
void append_values(std::vector<unsigned char>& out, std::span<const double> values) {
    const std::size_t start = out.size();
    out.resize(start + values.size() * sizeof(T));
    for (std::size_t i = 0; i < values.size(); ++i) {
        T v;
        if constexpr (std::is_integral_v<T>) {
            v = static_cast<T>(std::llround(values[i]));
        } else {
            v = static_cast<T>(values[i]);
        }
        std::memcpy(&out[start + i * sizeof(T)], &v, sizeof(T));
    }
}

void write_raw(const Geometry& geom, std::span<const double> values, NiftiDatatype dt,
               const std::filesystem::path& path, int level) {
    Nifti1Header h{};
    h.sizeof_hdr = 348;
    h.regular = 'r';
    h.dim[0] = 3;
    for (int i = 0; i < 3; ++i) {
        h.dim[i + 1] = static_cast<std::int16_t>(geom.dims()[i]);
        if (geom.dims()[i] > 32767) {
            throw IoError("dimension too large for NIfTI-1: " + path.string());
        }
    }
    for (int i = 4; i < 8; ++i) {
        h.dim[i] = 1;
    }
    h.datatype = static_cast<std::int16_t>(dt);
    h.bitpix = static_cast<std::int16_t>(8 * bytes_per_voxel(h.datatype));
    const Eigen::Matrix4d& a = geom.affine();
    double qfac = 1.0;
    const Eigen::Quaterniond q = rotation_of(a.topLeftCorner<3, 3>(), qfac);
    h.pixdim[0] = static_cast<float>(qfac);
    for (int i = 0; i < 3; ++i) {
        h.pixdim[i + 1] = static_cast<float>(geom.spacing()[i]);
    }
    for (int i = 4; i < 8; ++i) {
        h.pixdim[i] = 1.0f;
    }
    h.scl_slope = 1.0f;
    h.scl_inter = 0.0f;
    h.xyzt_units = 2;  // millimetres
    const std::string descrip = std::string("lesionsynth ") + kToolVersion;
    std::memcpy(h.descrip, descrip.data(), std::min(descrip.size(), sizeof(h.descrip) - 1));
    h.qform_code = 1;
    h.sform_code = 1;
    h.quatern_b = static_cast<float>(q.x());
    h.quatern_c = static_cast<float>(q.y());
    h.quatern_d = static_cast<float>(q.z());
    h.qoffset_x = static_cast<float>(a(0, 3));
    h.qoffset_y = static_cast<float>(a(1, 3));
    h.qoffset_z = static_cast<float>(a(2, 3));
    for (int c = 0; c < 4; ++c) {
        h.srow_x[c] = static_cast<float>(a(0, c));
        h.srow_y[c] = static_cast<float>(a(1, c));
        h.srow_z[c] = static_cast<float>(a(2, c));
    }
    std::memcpy(h.magic, "n+1\0", 4);

    std::ostringstream text;
    text << kAffineTag;
    text.precision(17);
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 4; ++c) {
            text << a(r, c) << (r == 2 && c == 3 ? "" : " ");
        }
    }
    std::string ext = text.str();
    const std::size_t esize = ((ext.size() + 8 + 15) / 16) * 16;
    ext.resize(esize - 8, '\0');
    h.vox_offset = static_cast<float>(352 + esize);

    std::vector<unsigned char> out(sizeof(h));
    std::memcpy(out.data(), &h, sizeof(h));
    const unsigned char extender[4] = {1, 0, 0, 0};
    out.insert(out.end(), extender, extender + 4);
    const auto esize32 = static_cast<std::int32_t>(esize);
    const std::int32_t ecode = kEcodeComment;
    out.insert(out.end(), reinterpret_cast<const unsigned char*>(&esize32),
               reinterpret_cast<const unsigned char*>(&esize32) + 4);
    out.insert(out.end(), reinterpret_cast<const unsigned char*>(&ecode),
               reinterpret_cast<const unsigned char*>(&ecode) + 4);
    out.insert(out.end(), ext.begin(), ext.end());

    switch (dt) {
        case NiftiDatatype::uint8: append_values<std::uint8_t>(out, values); break;
        case NiftiDatatype::int16: append_values<std::int16_t>(out, values); break;
        case NiftiDatatype::int32: append_values<std::int32_t>(out, values); break;
        case NiftiDatatype::float32: append_values<float>(out, values); break;
        case NiftiDatatype::float64: append_values<double>(out, values); break;
    }

    const std::string p = path.string();
    if (p.ends_with(".gz")) {
        const std::string mode = "wb" + std::to_string(std::clamp(level, 0, 9));
        gzFile f = gzopen(p.c_str(), mode.c_str());
        if (f == nullptr) {
            throw IoError("cannot open for writing: " + p);
        }
        std::size_t written = 0;
        while (written < out.size()) {
            const auto chunk = static_cast<unsigned>(std::min<std::size_t>(out.size() - written, 1u << 30));
            if (gzwrite(f, out.data() + written, chunk) != static_cast<int>(chunk)) {
                gzclose(f);
                throw IoError("write failed: " + p);
            }
            written += chunk;
        }
        if (gzclose(f) != Z_OK) {
            throw IoError("write failed: " + p);
        }
    } else {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) {
            throw IoError("cannot open for writing: " + p);
        }
        f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
        if (!f) {
            throw IoError("write failed: " + p);
        }
    }
}

template <typename T>
std::vector<double> widen(std::span<const T> values) {
    return std::vector<double>(values.begin(), values.end());
}

}  // namespace

NiftiVolume read_nifti(const std::filesystem::path& path) {
    RawImage raw = read_raw(path);
    if (fits_label_volume(raw)) {
        return to_labels(raw);
    }
    return to_scalar(std::move(raw));
}

ScalarVolume read_nifti_scalar(const std::filesystem::path& path) {
    return to_scalar(read_raw(path));
}

LabelVolume read_nifti_labels(const std::filesystem::path& path) {
    RawImage raw = read_raw(path);
    if (!fits_label_volume(raw)) {
        throw IoError("expected a non-negative integer label volume: " + path.string());
    }
    return to_labels(raw);
}

LesionMask read_nifti_mask(const std::filesystem::path& path) {
    const RawImage raw = read_raw(path);
    LesionMask mask(raw.geom);
    for (std::size_t i = 0; i < raw.values.size(); ++i) {
        mask[i] = (raw.values[i] * raw.slope + raw.inter) != 0.0 ? 1 : 0;
    }
    return mask;
}

void write_nifti(const ScalarVolume& vol, const std::filesystem::path& path, const NiftiWriteOptions& opts) {
    write_raw(vol.geometry(), vol.data(), opts.datatype.value_or(NiftiDatatype::float32), path,
              opts.compression_level);
}

void write_nifti(const LabelVolume& vol, const std::filesystem::path& path, const NiftiWriteOptions& opts) {
    NiftiDatatype dt = NiftiDatatype::int32;
    if (vol.num_classes() <= 256) {
        dt = NiftiDatatype::uint8;
    } else if (vol.num_classes() <= 32768) {
        dt = NiftiDatatype::int16;
    }
    write_raw(vol.geometry(), widen(vol.data()), opts.datatype.value_or(dt), path, opts.compression_level);
}

void write_nifti(const LesionMask& vol, const std::filesystem::path& path, const NiftiWriteOptions& opts) {
    write_raw(vol.geometry(), widen(vol.data()), opts.datatype.value_or(NiftiDatatype::uint8), path,
              opts.compression_level);
}

}  // namespace lesionsynth
