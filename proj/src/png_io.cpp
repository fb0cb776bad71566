#include "liquidseg/png_io.hpp"

#include <zlib.h>

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

// Minimal PNG codec over zlib. Writes color type 0 (gray) or 2 (RGB),
// bit depth 8, no interlace, filter 0 on every scanline, fixed zlib level,
// so identical pixels always produce identical bytes. The reader handles
// all five scanline filters for robustness but only color types 0 and 2.

namespace liquidseg {
namespace {

const std::array<uint8_t, 8> kPngSig = {137, 80, 78, 71, 13, 10, 26, 10};

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

uint32_t read_u32(const uint8_t* p) {
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) |
           (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

void write_chunk(std::vector<uint8_t>& out, const char type[4],
                 const std::vector<uint8_t>& payload) {
    put_u32(out, static_cast<uint32_t>(payload.size()));
    size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    uint32_t crc = crc32(0, out.data() + start, static_cast<uInt>(out.size() - start));
    put_u32(out, crc);
}

std::vector<uint8_t> zlib_compress(const std::vector<uint8_t>& in) {
    uLongf bound = compressBound(static_cast<uLong>(in.size()));
    std::vector<uint8_t> out(bound);
    if (compress2(out.data(), &bound, in.data(), static_cast<uLong>(in.size()), 6) != Z_OK)
        throw std::runtime_error("png: zlib compression failed");
    out.resize(bound);
    return out;
}

std::vector<uint8_t> zlib_decompress(const uint8_t* data, size_t size, size_t expected) {
    std::vector<uint8_t> out(expected);
    uLongf len = static_cast<uLongf>(expected);
    if (uncompress(out.data(), &len, data, static_cast<uLong>(size)) != Z_OK || len != expected)
        throw std::runtime_error("png: zlib decompression failed");
    return out;
}

void write_png_file(const std::string& path, int height, int width, int channels,
                    const std::vector<uint8_t>& pixels) {
    std::vector<uint8_t> raw;
    raw.reserve(static_cast<size_t>(height) * (static_cast<size_t>(width) * channels + 1));
    for (int y = 0; y < height; ++y) {
        raw.push_back(0);  // filter: none
        const uint8_t* row = pixels.data() + static_cast<size_t>(y) * width * channels;
        raw.insert(raw.end(), row, row + static_cast<size_t>(width) * channels);
    }

    std::vector<uint8_t> file(kPngSig.begin(), kPngSig.end());
    std::vector<uint8_t> ihdr;
    put_u32(ihdr, static_cast<uint32_t>(width));
    put_u32(ihdr, static_cast<uint32_t>(height));
    ihdr.push_back(8);                                    // bit depth
    ihdr.push_back(channels == 3 ? 2 : 0);                // color type
    ihdr.push_back(0);                                    // compression
    ihdr.push_back(0);                                    // filter method
    ihdr.push_back(0);                                    // no interlace
    write_chunk(file, "IHDR", ihdr);
    write_chunk(file, "IDAT", zlib_compress(raw));
    write_chunk(file, "IEND", {});

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("png: cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(file.data()),
            static_cast<std::streamsize>(file.size()));
    if (!f) throw std::runtime_error("png: write failed: " + path);
}

struct DecodedPng {
    int height = 0, width = 0, channels = 0;
    std::vector<uint8_t> pixels;  // unfiltered, row-major
};

DecodedPng read_png_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("png: cannot open: " + path);
    std::vector<uint8_t> file((std::istreambuf_iterator<char>(f)),
                              std::istreambuf_iterator<char>());
    if (file.size() < 8 || !std::equal(kPngSig.begin(), kPngSig.end(), file.begin()))
        throw std::runtime_error("png: bad signature: " + path);

    int width = 0, height = 0, channels = 0;
    std::vector<uint8_t> idat;
    size_t pos = 8;
    while (pos + 8 <= file.size()) {
        uint32_t len = read_u32(&file[pos]);
        if (pos + 12 + len > file.size()) throw std::runtime_error("png: truncated chunk");
        std::string type(reinterpret_cast<const char*>(&file[pos + 4]), 4);
        const uint8_t* payload = &file[pos + 8];
        if (type == "IHDR") {
            width = static_cast<int>(read_u32(payload));
            height = static_cast<int>(read_u32(payload + 4));
            int depth = payload[8], color = payload[9], interlace = payload[12];
            if (depth != 8 || interlace != 0 || (color != 0 && color != 2))
                throw std::runtime_error("png: unsupported format (need 8-bit gray or RGB)");
            channels = (color == 2) ? 3 : 1;
        } else if (type == "IDAT") {
            idat.insert(idat.end(), payload, payload + len);
        } else if (type == "IEND") {
            break;
        }
        pos += 12 + len;
    }
    if (width <= 0 || height <= 0 || channels == 0 || idat.empty())
        throw std::runtime_error("png: missing IHDR/IDAT: " + path);

    size_t stride = static_cast<size_t>(width) * channels;
    std::vector<uint8_t> raw = zlib_decompress(idat.data(), idat.size(),
                                               static_cast<size_t>(height) * (stride + 1));

    DecodedPng out;
    out.height = height;
    out.width = width;
    out.channels = channels;
    out.pixels.assign(static_cast<size_t>(height) * stride, 0);
    int bpp = channels;
    for (int y = 0; y < height; ++y) {
        uint8_t filter = raw[static_cast<size_t>(y) * (stride + 1)];
        const uint8_t* src = &raw[static_cast<size_t>(y) * (stride + 1) + 1];
        uint8_t* cur = &out.pixels[static_cast<size_t>(y) * stride];
        const uint8_t* up = y > 0 ? &out.pixels[static_cast<size_t>(y - 1) * stride] : nullptr;
        for (size_t i = 0; i < stride; ++i) {
            int a = i >= static_cast<size_t>(bpp) ? cur[i - bpp] : 0;
            int b = up ? up[i] : 0;
            int c = (up && i >= static_cast<size_t>(bpp)) ? up[i - bpp] : 0;
            int x = src[i];
            int v;
            switch (filter) {
                case 0: v = x; break;
                case 1: v = x + a; break;
                case 2: v = x + b; break;
                case 3: v = x + (a + b) / 2; break;
                case 4: {
                    int p = a + b - c;
                    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
                    int pred = (pa <= pb && pa <= pc) ? a : (pb <= pc ? b : c);
                    v = x + pred;
                    break;
                }
                default: throw std::runtime_error("png: bad filter byte");
            }
            cur[i] = static_cast<uint8_t>(v & 0xff);
        }
    }
    return out;
}

uint8_t to_byte(float v) {
    float s = std::round(std::fmin(std::fmax(v, 0.0f), 1.0f) * 255.0f);
    return static_cast<uint8_t>(s);
}

}  // namespace

void save_png(const std::string& path, const Image& img) {
    std::vector<uint8_t> px(static_cast<size_t>(img.height()) * img.width() * 3);
    for (size_t i = 0; i < px.size(); ++i) px[i] = to_byte(img.data()[i]);
    write_png_file(path, img.height(), img.width(), 3, px);
}

Image load_png(const std::string& path) {
    DecodedPng d = read_png_file(path);
    Image img(d.height, d.width);
    if (d.channels == 3) {
        for (size_t i = 0; i < d.pixels.size(); ++i)
            img.data()[i] = static_cast<float>(d.pixels[i]) / 255.0f;
    } else {
        for (size_t i = 0; i < d.pixels.size(); ++i) {
            float v = static_cast<float>(d.pixels[i]) / 255.0f;
            img.data()[3 * i] = img.data()[3 * i + 1] = img.data()[3 * i + 2] = v;
        }
    }
    return img;
}

void save_mask_png(const std::string& path, const BinaryMask& mask) {
    std::vector<uint8_t> px(mask.data().size());
    for (size_t i = 0; i < px.size(); ++i) px[i] = mask.data()[i] ? 255 : 0;
    write_png_file(path, mask.height(), mask.width(), 1, px);
}

BinaryMask load_mask_png(const std::string& path) {
    DecodedPng d = read_png_file(path);
    BinaryMask mask(d.height, d.width);
    size_t n = static_cast<size_t>(d.height) * d.width;
    for (size_t i = 0; i < n; ++i) {
        // any nonzero intensity counts as liquid; RGB masks use the red plane
        uint8_t v = d.channels == 3 ? d.pixels[3 * i] : d.pixels[i];
        mask.data()[i] = v >= 128 ? 1 : 0;
    }
    return mask;
}

}  // namespace liquidseg
