#include "nudgesim/pgm.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace nudgesim {

void write_pgm16(const std::string& path, const LabelImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    char header[64];
    const int n = std::snprintf(header, sizeof(header), "P5\n%d %d\n65535\n", img.width, img.height);
    out.write(header, n);
    std::vector<unsigned char> buf(img.size() * 2);
    for (size_t i = 0; i < img.size(); ++i) {
        buf[2 * i] = static_cast<unsigned char>(img.data[i] >> 8);
        buf[2 * i + 1] = static_cast<unsigned char>(img.data[i] & 0xff);
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("short write: " + path);
}

namespace {

int next_token(std::istream& in) {
    // Skips whitespace and '#' comments, then parses one unsigned integer.
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    if (c == EOF || !std::isdigit(c)) throw std::runtime_error("pgm: malformed header");
    int value = 0;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        c = in.get();
    }
    return value;
}

} // namespace

LabelImage read_pgm16(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    char magic[2];
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || magic[1] != '5') throw std::runtime_error("pgm: bad magic");
    const int w = next_token(in);
    const int h = next_token(in);
    const int maxval = next_token(in);
    if (maxval != 65535) throw std::runtime_error("pgm: expected 16-bit maxval");
    LabelImage img(w, h);
    std::vector<unsigned char> buf(img.size() * 2);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!in) throw std::runtime_error("pgm: truncated file");
    for (size_t i = 0; i < img.size(); ++i)
        img.data[i] = static_cast<uint16_t>((buf[2 * i] << 8) | buf[2 * i + 1]);
    return img;
}

} // namespace nudgesim
