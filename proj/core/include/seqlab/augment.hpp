#pragma once

#include <array>
#include <string>

#include "seqlab/image.hpp"
#include "seqlab/rng.hpp"

namespace seqlab::aug {

enum class TransformKind {
    Autocontrast,
    Brightness,
    Color,
    Contrast,
    Equalize,
    Identity,
    Posterize,
    Rotate,
    Sharpness,
    ShearX,
    ShearY,
    Solarize,
    TranslateX,
    TranslateY,
};

constexpr int kNumTransformKinds = 14;

struct TransformSpec {
    TransformKind kind;
    double param_low;
    double param_high;
};

/// The 14-entry transform table. Parameterless kinds carry a [0, 0] range and
/// ignore the magnitude.
const std::array<TransformSpec, kNumTransformKinds>& transform_table();

const TransformSpec& table_entry(TransformKind kind);
std::string kind_name(TransformKind kind);

enum class AugmentLevel { Weak, Medium, Strong };

struct AugmentPolicy {
    AugmentLevel level;
    int rand_augment_n;  // 0 weak, 1 medium, 3 strong
    bool use_cutout;     // false weak, true otherwise

    static AugmentPolicy weak() { return {AugmentLevel::Weak, 0, false}; }
    static AugmentPolicy medium() { return {AugmentLevel::Medium, 1, true}; }
    static AugmentPolicy strong() { return {AugmentLevel::Strong, 3, true}; }

    void validate() const;
};

/// Tunables that the table leaves open. Defaults match the main presets.
struct AugmentOptions {
    double cutout_fraction = 0.5;       // of the shorter image side
    double weak_flip_p = 0.5;           // horizontal flip probability
    double weak_translate_frac = 0.125; // max |shift| as a fraction of W / H
    bool bidirectional_enhance = false; // factor 1 +/- m instead of m for
                                        // Brightness/Color/Contrast/Sharpness
};

/// Apply one table transform at the given magnitude.
///
/// Pixel arithmetic runs in double, rounds to nearest and clamps to [0, 255].
/// Geometric transforms use nearest-neighbor sampling and fill vacated pixels
/// with mid-gray 128. With the default options the rng is untouched; the
/// bidirectional enhancement flag draws one sign per enhancement application.
Image apply_transform(const Image& img, const TransformSpec& spec, double magnitude,
                      RngStream& rng, const AugmentOptions& opts = {});

/// Square cutout patch of side round(size_fraction * min(H, W)), centered at
/// a uniformly drawn pixel (y then x), filled with 128 and clipped at the
/// borders. A zero side returns the image unchanged without consuming draws.
Image cutout(const Image& img, double size_fraction, RngStream& rng);

/// Deterministic core of cutout with an explicit center.
Image cutout_at(const Image& img, int side, int center_y, int center_x);

/// n transforms drawn uniformly with replacement from the table, each with a
/// magnitude uniform in its range, applied in draw order. Every slot consumes
/// exactly two draws (kind, magnitude), including parameterless kinds.
Image rand_augment(const Image& img, int n, RngStream& rng, const AugmentOptions& opts = {});

/// Full policy pipeline.
///
/// Weak: horizontal flip with probability weak_flip_p, then an integer
/// translation drawn uniformly in +/- floor(weak_translate_frac * dim) per
/// axis (three draws: flip, dx, dy). Medium/Strong: weak, then
/// rand_augment(n), then cutout.
Image augment(const Image& img, const AugmentPolicy& policy, RngStream& rng,
              const AugmentOptions& opts = {});

/// Horizontal mirror.
Image flip_horizontal(const Image& img);

/// Integer pixel shift with mid-gray fill; (dx, dy) move the content right/down.
Image translate_px(const Image& img, int dx, int dy);

}  // namespace seqlab::aug
