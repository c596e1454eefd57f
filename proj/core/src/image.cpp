#include "seqlab/image.hpp"

#include <fstream>
#include <string>

#include "seqlab/errors.hpp"

namespace seqlab {

Image::Image(int h, int w, int c, std::uint8_t fill)
    : height(h),
      width(w),
      channels(c),
      pixels(static_cast<std::size_t>(h) * static_cast<std::size_t>(w) * static_cast<std::size_t>(c),
             fill) {
    validate();
}

void Image::validate() const {
    if (height <= 0 || width <= 0)
        throw ParameterError("image dimensions must be positive");
    if (channels != 1 && channels != 3)
        throw ParameterError("image channels must be 1 or 3");
    const auto expected = static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
                          static_cast<std::size_t>(channels);
    if (pixels.size() != expected)
        throw ParameterError("pixel buffer size " + std::to_string(pixels.size()) +
                             " does not match H*W*C = " + std::to_string(expected));
}

namespace {

// Next whitespace-delimited token, skipping '#' comments to end of line.
std::string next_token(std::istream& in, const std::filesystem::path& path) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    if (tok.empty()) throw DataError(path.string() + ": truncated PNM header");
    return tok;
}

int parse_int(const std::string& tok, const std::filesystem::path& path) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw DataError(path.string() + ": bad PNM header token '" + tok + "'");
    }
}

}  // namespace

Image read_pnm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(path.string() + ": cannot open");

    const std::string magic = next_token(in, path);
    int channels = 0;
    if (magic == "P5")
        channels = 1;
    else if (magic == "P6")
        channels = 3;
    else
        throw DataError(path.string() + ": unsupported PNM magic '" + magic + "'");

    const int width = parse_int(next_token(in, path), path);
    const int height = parse_int(next_token(in, path), path);
    const int maxval = parse_int(next_token(in, path), path);
    if (width <= 0 || height <= 0)
        throw DataError(path.string() + ": non-positive dimensions");
    if (maxval != 255)
        throw DataError(path.string() + ": only maxval 255 is supported, got " +
                        std::to_string(maxval));

    Image img(height, width, channels);
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
        throw DataError(path.string() + ": truncated pixel data");
    return img;
}

void write_pnm(const Image& img, const std::filesystem::path& path) {
    img.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(path.string() + ": cannot open for writing");
    out << (img.channels == 1 ? "P5" : "P6") << "\n"
        << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.pixels.data()),
              static_cast<std::streamsize>(img.pixels.size()));
    if (!out) throw DataError(path.string() + ": write failed");
}

}  // namespace seqlab
