#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace seqlab {

/// 8-bit image, row-major H x W x C. C is 1 (gray) or 3 (RGB).
struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<std::uint8_t> pixels;

    Image() = default;
    Image(int h, int w, int c, std::uint8_t fill = 0);

    std::uint8_t& at(int y, int x, int c) {
        return pixels[static_cast<std::size_t>((y * width + x) * channels + c)];
    }
    std::uint8_t at(int y, int x, int c) const {
        return pixels[static_cast<std::size_t>((y * width + x) * channels + c)];
    }

    std::size_t size() const { return pixels.size(); }
    bool same_shape(const Image& other) const {
        return height == other.height && width == other.width && channels == other.channels;
    }

    /// Throws ParameterError if the pixel buffer does not match H*W*C or C is
    /// not 1 or 3.
    void validate() const;
};

/// Read a binary PGM (P5) or PPM (P6) file with maxval 255.
Image read_pnm(const std::filesystem::path& path);

/// Write as P5 for one channel, P6 for three.
void write_pnm(const Image& img, const std::filesystem::path& path);

}  // namespace seqlab
