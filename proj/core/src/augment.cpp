#include "seqlab/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "seqlab/errors.hpp"

namespace seqlab::aug {

namespace {

constexpr std::uint8_t kFillGray = 128;

std::uint8_t clamp_round(double v) {
    const long r = std::lround(v);
    return static_cast<std::uint8_t>(std::clamp(r, 0L, 255L));
}

double luma(const Image& img, int y, int x) {
    if (img.channels == 1) return img.at(y, x, 0);
    return 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);
}

// out = degenerate*(1-f) + original*f, exact at f = 0 and f = 1.
Image blend(const Image& degenerate, const Image& original, double f) {
    Image out(original.height, original.width, original.channels);
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
        out.pixels[i] = clamp_round(degenerate.pixels[i] * (1.0 - f) + original.pixels[i] * f);
    }
    return out;
}

double enhance_factor(double magnitude, RngStream& rng, const AugmentOptions& opts) {
    if (!opts.bidirectional_enhance) return magnitude;
    const double sign = rng.next_bernoulli(0.5) ? 1.0 : -1.0;
    return 1.0 + sign * magnitude;
}

Image degenerate_black(const Image& img) { return Image(img.height, img.width, img.channels, 0); }

Image degenerate_grayscale(const Image& img) {
    Image out(img.height, img.width, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const std::uint8_t g = clamp_round(luma(img, y, x));
            for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = g;
        }
    return out;
}

Image degenerate_mean_gray(const Image& img) {
    double sum = 0.0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) sum += luma(img, y, x);
    const std::uint8_t mean = clamp_round(sum / (static_cast<double>(img.height) * img.width));
    return Image(img.height, img.width, img.channels, mean);
}

// 3x3 smooth kernel [[1,1,1],[1,5,1],[1,1,1]]/13 on the interior; border
// pixels keep their original value.
Image degenerate_smooth(const Image& img) {
    Image out = img;
    for (int y = 1; y + 1 < img.height; ++y)
        for (int x = 1; x + 1 < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                double acc = 5.0 * img.at(y, x, c);
                acc += img.at(y - 1, x - 1, c) + img.at(y - 1, x, c) + img.at(y - 1, x + 1, c);
                acc += img.at(y, x - 1, c) + img.at(y, x + 1, c);
                acc += img.at(y + 1, x - 1, c) + img.at(y + 1, x, c) + img.at(y + 1, x + 1, c);
                out.at(y, x, c) = clamp_round(acc / 13.0);
            }
    return out;
}

Image autocontrast(const Image& img) {
    Image out = img;
    for (int c = 0; c < img.channels; ++c) {
        std::uint8_t lo = 255, hi = 0;
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                lo = std::min(lo, img.at(y, x, c));
                hi = std::max(hi, img.at(y, x, c));
            }
        if (lo >= hi) continue;
        const double scale = 255.0 / (hi - lo);
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                out.at(y, x, c) = clamp_round((img.at(y, x, c) - lo) * scale);
    }
    return out;
}

// Classic histogram equalization with the integer-step LUT.
Image equalize(const Image& img) {
    Image out = img;
    for (int c = 0; c < img.channels; ++c) {
        long hist[256] = {};
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) ++hist[img.at(y, x, c)];

        long total = 0, last_nonzero = 0;
        int nonzero_bins = 0;
        for (int i = 0; i < 256; ++i)
            if (hist[i] > 0) {
                total += hist[i];
                last_nonzero = hist[i];
                ++nonzero_bins;
            }
        if (nonzero_bins <= 1) continue;
        const long step = (total - last_nonzero) / 255;
        if (step == 0) continue;

        std::uint8_t lut[256];
        long n = step / 2;
        for (int i = 0; i < 256; ++i) {
            lut[i] = static_cast<std::uint8_t>(std::min(255L, n / step));
            n += hist[i];
        }
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) out.at(y, x, c) = lut[img.at(y, x, c)];
    }
    return out;
}

Image posterize(const Image& img, double magnitude) {
    const int bits = static_cast<int>(std::clamp(std::lround(magnitude), 1L, 8L));
    const std::uint8_t mask = static_cast<std::uint8_t>(0xFF << (8 - bits));
    Image out = img;
    for (auto& p : out.pixels) p = static_cast<std::uint8_t>(p & mask);
    return out;
}

Image solarize(const Image& img, double threshold_frac) {
    const double thr = threshold_frac * 255.0;
    Image out = img;
    for (auto& p : out.pixels)
        if (p > thr) p = static_cast<std::uint8_t>(255 - p);
    return out;
}

// Inverse affine sampling: dst(x, y) reads src at
//   sx = m00*(x-cx) + m01*(y-cy) + cx + tx
//   sy = m10*(x-cx) + m11*(y-cy) + cy + ty
// nearest-neighbor, out-of-bounds filled with mid-gray.
Image affine_inverse(const Image& img, double m00, double m01, double m10, double m11,
                     double tx = 0.0, double ty = 0.0) {
    Image out(img.height, img.width, img.channels, kFillGray);
    const double cx = (img.width - 1) / 2.0;
    const double cy = (img.height - 1) / 2.0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double dx = x - cx;
            const double dy = y - cy;
            const long sx = std::lround(m00 * dx + m01 * dy + cx + tx);
            const long sy = std::lround(m10 * dx + m11 * dy + cy + ty);
            if (sx < 0 || sx >= img.width || sy < 0 || sy >= img.height) continue;
            for (int c = 0; c < img.channels; ++c)
                out.at(y, x, c) = img.at(static_cast<int>(sy), static_cast<int>(sx), c);
        }
    return out;
}

Image rotate(const Image& img, double degrees) {
    if (degrees == 0.0) return img;
    const double rad = degrees * std::numbers::pi / 180.0;
    const double c = std::cos(rad);
    const double s = std::sin(rad);
    return affine_inverse(img, c, s, -s, c);
}

}  // namespace

const std::array<TransformSpec, kNumTransformKinds>& transform_table() {
    static const std::array<TransformSpec, kNumTransformKinds> table = {{
        {TransformKind::Autocontrast, 0.0, 0.0},
        {TransformKind::Brightness, 0.05, 0.95},
        {TransformKind::Color, 0.05, 0.95},
        {TransformKind::Contrast, 0.05, 0.95},
        {TransformKind::Equalize, 0.0, 0.0},
        {TransformKind::Identity, 0.0, 0.0},
        {TransformKind::Posterize, 4.0, 8.0},
        {TransformKind::Rotate, -30.0, 30.0},
        {TransformKind::Sharpness, 0.05, 0.95},
        {TransformKind::ShearX, -0.3, 0.3},
        {TransformKind::ShearY, -0.3, 0.3},
        {TransformKind::Solarize, 0.0, 1.0},
        {TransformKind::TranslateX, -0.3, 0.3},
        {TransformKind::TranslateY, -0.3, 0.3},
    }};
    return table;
}

const TransformSpec& table_entry(TransformKind kind) {
    for (const auto& spec : transform_table())
        if (spec.kind == kind) return spec;
    throw std::logic_error("unknown transform kind");
}

std::string kind_name(TransformKind kind) {
    switch (kind) {
        case TransformKind::Autocontrast: return "autocontrast";
        case TransformKind::Brightness: return "brightness";
        case TransformKind::Color: return "color";
        case TransformKind::Contrast: return "contrast";
        case TransformKind::Equalize: return "equalize";
        case TransformKind::Identity: return "identity";
        case TransformKind::Posterize: return "posterize";
        case TransformKind::Rotate: return "rotate";
        case TransformKind::Sharpness: return "sharpness";
        case TransformKind::ShearX: return "shear_x";
        case TransformKind::ShearY: return "shear_y";
        case TransformKind::Solarize: return "solarize";
        case TransformKind::TranslateX: return "translate_x";
        case TransformKind::TranslateY: return "translate_y";
    }
    throw std::logic_error("unknown transform kind");
}

void AugmentPolicy::validate() const {
    switch (level) {
        case AugmentLevel::Weak:
            if (rand_augment_n != 0 || use_cutout)
                throw ParameterError("weak policy must have n=0 and no cutout");
            return;
        case AugmentLevel::Medium:
            if (rand_augment_n != 1 || !use_cutout)
                throw ParameterError("medium policy must have n=1 and cutout");
            return;
        case AugmentLevel::Strong:
            if (rand_augment_n != 3 || !use_cutout)
                throw ParameterError("strong policy must have n=3 and cutout");
            return;
    }
    throw ParameterError("invalid augment level");
}

Image flip_horizontal(const Image& img) {
    Image out(img.height, img.width, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(y, x, c) = img.at(y, img.width - 1 - x, c);
    return out;
}

Image translate_px(const Image& img, int dx, int dy) {
    if (dx == 0 && dy == 0) return img;
    Image out(img.height, img.width, img.channels, kFillGray);
    for (int y = 0; y < img.height; ++y) {
        const int sy = y - dy;
        if (sy < 0 || sy >= img.height) continue;
        for (int x = 0; x < img.width; ++x) {
            const int sx = x - dx;
            if (sx < 0 || sx >= img.width) continue;
            for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = img.at(sy, sx, c);
        }
    }
    return out;
}

Image apply_transform(const Image& img, const TransformSpec& spec, double magnitude,
                      RngStream& rng, const AugmentOptions& opts) {
    img.validate();
    if (magnitude < spec.param_low || magnitude > spec.param_high)
        throw ParameterError(kind_name(spec.kind) + " magnitude " + std::to_string(magnitude) +
                             " outside [" + std::to_string(spec.param_low) + ", " +
                             std::to_string(spec.param_high) + "]");

    switch (spec.kind) {
        case TransformKind::Autocontrast:
            return autocontrast(img);
        case TransformKind::Brightness:
            return blend(degenerate_black(img), img, enhance_factor(magnitude, rng, opts));
        case TransformKind::Color:
            if (img.channels == 1) return img;
            return blend(degenerate_grayscale(img), img, enhance_factor(magnitude, rng, opts));
        case TransformKind::Contrast:
            return blend(degenerate_mean_gray(img), img, enhance_factor(magnitude, rng, opts));
        case TransformKind::Equalize:
            return equalize(img);
        case TransformKind::Identity:
            return img;
        case TransformKind::Posterize:
            return posterize(img, magnitude);
        case TransformKind::Rotate:
            return rotate(img, magnitude);
        case TransformKind::Sharpness:
            return blend(degenerate_smooth(img), img, enhance_factor(magnitude, rng, opts));
        case TransformKind::ShearX:
            return affine_inverse(img, 1.0, magnitude, 0.0, 1.0);
        case TransformKind::ShearY:
            return affine_inverse(img, 1.0, 0.0, magnitude, 1.0);
        case TransformKind::Solarize:
            return solarize(img, magnitude);
        case TransformKind::TranslateX:
            return translate_px(img, static_cast<int>(std::lround(magnitude * img.width)), 0);
        case TransformKind::TranslateY:
            return translate_px(img, 0, static_cast<int>(std::lround(magnitude * img.height)));
    }
    throw std::logic_error("unknown transform kind");
}

Image cutout_at(const Image& img, int side, int center_y, int center_x) {
    if (side <= 0) return img;
    Image out = img;
    const int y0 = std::max(0, center_y - side / 2);
    const int x0 = std::max(0, center_x - side / 2);
    const int y1 = std::min(img.height, center_y - side / 2 + side);
    const int x1 = std::min(img.width, center_x - side / 2 + side);
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x)
            for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = kFillGray;
    return out;
}

Image cutout(const Image& img, double size_fraction, RngStream& rng) {
    img.validate();
    if (size_fraction <= 0.0 || size_fraction > 1.0)
        throw ParameterError("cutout size_fraction must be in (0, 1]");
    const int side =
        static_cast<int>(std::lround(size_fraction * std::min(img.height, img.width)));
    if (side == 0) return img;
    const int cy = static_cast<int>(rng.next_int(0, img.height - 1));
    const int cx = static_cast<int>(rng.next_int(0, img.width - 1));
    return cutout_at(img, side, cy, cx);
}

Image rand_augment(const Image& img, int n, RngStream& rng, const AugmentOptions& opts) {
    if (n < 0) throw ParameterError("rand_augment n must be >= 0");
    const auto& table = transform_table();
    Image out = img;
    for (int i = 0; i < n; ++i) {
        const auto& spec = table[static_cast<std::size_t>(rng.next_int(0, kNumTransformKinds - 1))];
        const double magnitude = rng.next_uniform(spec.param_low, spec.param_high);
        out = apply_transform(out, spec, magnitude, rng, opts);
    }
    return out;
}

Image augment(const Image& img, const AugmentPolicy& policy, RngStream& rng,
              const AugmentOptions& opts) {
    policy.validate();
    img.validate();

    // Weak stage: flip draw, then dx, then dy.
    const bool flip = rng.next_bernoulli(opts.weak_flip_p);
    const int tx = static_cast<int>(opts.weak_translate_frac * img.width);
    const int ty = static_cast<int>(opts.weak_translate_frac * img.height);
    const int dx = static_cast<int>(rng.next_int(-tx, tx));
    const int dy = static_cast<int>(rng.next_int(-ty, ty));
    Image out = flip ? flip_horizontal(img) : img;
    out = translate_px(out, dx, dy);

    if (policy.rand_augment_n > 0) out = rand_augment(out, policy.rand_augment_n, rng, opts);
    if (policy.use_cutout) out = cutout(out, opts.cutout_fraction, rng);
    return out;
}

}  // namespace seqlab::aug
