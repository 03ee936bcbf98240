#include "stylestruct/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "stylestruct/error.hpp"

namespace stylestruct {

namespace {

// Reads a netpbm header ("P6 W H MAXVAL" with optional comments) and leaves
// the stream at the first raster byte.
void read_header(std::istream& f, const std::string& path, const char* magic, Index& w, Index& h, int& maxval) {
    std::string m;
    f >> m;
    if (m != magic) throw DataError(path + ": expected " + magic + " image, found '" + m + "'");
    auto next_int = [&](const char* what) {
        while (f >> std::ws && f.peek() == '#') f.ignore(1 << 20, '\n');
        long long v = 0;
        if (!(f >> v)) throw DataError(path + ": malformed header (" + what + ")");
        return v;
    };
    w = next_int("width");
    h = next_int("height");
    maxval = static_cast<int>(next_int("maxval"));
    f.get();
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) throw DataError(path + ": invalid header values");
}

}  // namespace

void write_ppm(const std::string& path, const Image8& img) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write '" + path + "'");
    f << "P6\n" << img.width << ' ' << img.height << "\n255\n";
    f.write(reinterpret_cast<const char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
    if (!f) throw DataError("cannot write '" + path + "'");
}

Image8 read_ppm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open '" + path + "'");
    Image8 img;
    int maxval = 0;
    read_header(f, path, "P6", img.width, img.height, maxval);
    if (maxval != 255) throw DataError(path + ": only 8-bit PPM is supported");
    img.data.resize(static_cast<std::size_t>(img.width * img.height * 3));
    f.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
    if (f.gcount() != static_cast<std::streamsize>(img.data.size())) throw DataError(path + ": truncated raster");
    return img;
}

void write_pgm16(const std::string& path, const Image16& img) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write '" + path + "'");
    f << "P5\n" << img.width << ' ' << img.height << "\n65535\n";
    std::vector<unsigned char> raw(img.data.size() * 2);
    for (std::size_t i = 0; i < img.data.size(); ++i) {  // netpbm stores big-endian
        raw[2 * i] = static_cast<unsigned char>(img.data[i] >> 8);
        raw[2 * i + 1] = static_cast<unsigned char>(img.data[i] & 0xff);
    }
    f.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!f) throw DataError("cannot write '" + path + "'");
}

Image16 read_pgm16(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open '" + path + "'");
    Image16 img;
    int maxval = 0;
    read_header(f, path, "P5", img.width, img.height, maxval);
    if (maxval < 256) throw DataError(path + ": expected a 16-bit PGM");
    const std::size_t n = static_cast<std::size_t>(img.width * img.height);
    std::vector<unsigned char> raw(2 * n);
    f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (f.gcount() != static_cast<std::streamsize>(raw.size())) throw DataError(path + ": truncated raster");
    img.data.resize(n);
    for (std::size_t i = 0; i < n; ++i) img.data[i] = static_cast<std::uint16_t>(raw[2 * i] << 8 | raw[2 * i + 1]);
    return img;
}

std::uint8_t encode_unit(double c) {
    const double v = std::floor((std::clamp(c, -1.0, 1.0) + 1.0) * 127.5 + 0.5);
    return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

double decode_unit(std::uint8_t v) { return static_cast<double>(v) / 127.5 - 1.0; }

Image8 encode_normal_image(const float* n, Index width, Index height) {
    const Index hw = width * height;
    Image8 img{width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(hw * 3))};
    for (Index k = 0; k < hw; ++k) {
        double x = n[k], y = n[hw + k], z = n[2 * hw + k];
        const double len = std::sqrt(x * x + y * y + z * z);
        if (len > 0) {
            x /= len;
            y /= len;
            z /= len;
        } else {
            x = y = 0;
            z = 1;
        }
        img.data[static_cast<std::size_t>(3 * k)] = encode_unit(z);
        img.data[static_cast<std::size_t>(3 * k + 1)] = encode_unit(y);
        img.data[static_cast<std::size_t>(3 * k + 2)] = encode_unit(x);
    }
    return img;
}

std::vector<float> decode_normal_image(const Image8& img) {
    const Index hw = img.width * img.height;
    std::vector<float> out(static_cast<std::size_t>(3 * hw));
    for (Index k = 0; k < hw; ++k) {
        const double z = decode_unit(img.data[static_cast<std::size_t>(3 * k)]);
        const double y = decode_unit(img.data[static_cast<std::size_t>(3 * k + 1)]);
        const double x = decode_unit(img.data[static_cast<std::size_t>(3 * k + 2)]);
        const double len = std::sqrt(x * x + y * y + z * z);
        const double s = len > 0 ? 1.0 / len : 0.0;
        out[static_cast<std::size_t>(k)] = static_cast<float>(len > 0 ? x * s : 0.0);
        out[static_cast<std::size_t>(hw + k)] = static_cast<float>(len > 0 ? y * s : 0.0);
        out[static_cast<std::size_t>(2 * hw + k)] = static_cast<float>(len > 0 ? z * s : 1.0);
    }
    return out;
}

Image8 encode_rgb_image(const float* rgb, Index width, Index height) {
    const Index hw = width * height;
    Image8 img{width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(hw * 3))};
    for (Index k = 0; k < hw; ++k)
        for (Index c = 0; c < 3; ++c) img.data[static_cast<std::size_t>(3 * k + c)] = encode_unit(rgb[c * hw + k]);
    return img;
}

std::vector<float> decode_rgb_image(const Image8& img) {
    const Index hw = img.width * img.height;
    std::vector<float> out(static_cast<std::size_t>(3 * hw));
    for (Index k = 0; k < hw; ++k)
        for (Index c = 0; c < 3; ++c)
            out[static_cast<std::size_t>(c * hw + k)] =
                static_cast<float>(decode_unit(img.data[static_cast<std::size_t>(3 * k + c)]));
    return out;
}

Image8 contact_sheet(const std::vector<Image8>& frames, Index gap) {
    if (frames.empty()) return {};
    const Index w = frames[0].width, h = frames[0].height;
    const Index n = static_cast<Index>(frames.size());
    Image8 sheet{n * w + (n - 1) * gap, h, {}};
    sheet.data.assign(static_cast<std::size_t>(sheet.width * h * 3), 255);
    for (Index f = 0; f < n; ++f) {
        if (frames[static_cast<std::size_t>(f)].width != w || frames[static_cast<std::size_t>(f)].height != h)
            throw ConfigError("contact_sheet: frames differ in size");
        for (Index i = 0; i < h; ++i)
            std::copy_n(frames[static_cast<std::size_t>(f)].data.begin() + i * w * 3, w * 3,
                        sheet.data.begin() + (i * sheet.width + f * (w + gap)) * 3);
    }
    return sheet;
}

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace stylestruct
