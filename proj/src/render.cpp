#include "itm/render.hpp"

#include "itm/error.hpp"

#ifdef ITM_HAVE_PNG
#include <png.h>
#endif

namespace itm {

RGB fingerprint_color(const Fingerprint& f, const Palette& pal)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : f.str()) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    h ^= h >> 29;
    RGB c{std::uint8_t(64 + (h & 0xbf)), std::uint8_t(64 + ((h >> 8) & 0xbf)), std::uint8_t(64 + ((h >> 16) & 0xbf))};
    while (c == pal.unstable || c == pal.undetermined || c == pal.outside) c[0] = std::uint8_t(c[0] ^ 1);
    return c;
}

Image render_scan(const ScanResult& sr, const Palette& pal)
{
    Image img;
    img.width = img.height = sr.res;
    img.rgb.resize(std::size_t(sr.res) * std::size_t(sr.res) * 3);
    for (std::size_t k = 0; k < img.rgb.size(); k += 3)
        for (int ch = 0; ch < 3; ++ch) img.rgb[k + std::size_t(ch)] = pal.outside[std::size_t(ch)];
    for (const auto& c : sr.cells) {
        RGB col = c.cls.tag == CellTag::FiniteStable     ? fingerprint_color(*c.cls.fingerprint, pal)
                  : c.cls.tag == CellTag::FiniteUnstable ? pal.unstable
                                                         : pal.undetermined;
        std::size_t off = (std::size_t(sr.res - 1 - c.j) * std::size_t(sr.res) + std::size_t(c.i)) * 3;
        for (int ch = 0; ch < 3; ++ch) img.rgb[off + std::size_t(ch)] = col[std::size_t(ch)];
    }
    return img;
}

std::string encode_ppm(const Image& img)
{
    std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(img.rgb.data()), img.rgb.size());
    return out;
}

#ifdef ITM_HAVE_PNG

bool png_available() { return true; }

namespace {

void png_append(png_structp png, png_bytep data, png_size_t len)
{
    auto* out = static_cast<std::string*>(png_get_io_ptr(png));
    out->append(reinterpret_cast<const char*>(data), len);
}

void png_noop_flush(png_structp) {}

}  // namespace

std::string encode_png(const Image& img)
{
    std::string out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw Error(ErrorCode::RangeViolation, "png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, info ? &info : nullptr);
        throw Error(ErrorCode::RangeViolation, "PNG encoding failed");
    }
    png_set_write_fn(png, &out, png_append, png_noop_flush);
    png_set_IHDR(png, info, png_uint_32(img.width), png_uint_32(img.height), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height; ++y)
        png_write_row(png, const_cast<png_bytep>(img.rgb.data() + std::size_t(y) * std::size_t(img.width) * 3));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

#else

bool png_available() { return false; }

std::string encode_png(const Image&) { throw Error(ErrorCode::RangeViolation, "built without PNG support"); }

#endif

}  // namespace itm
