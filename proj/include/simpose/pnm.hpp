#pragma once

// Netpbm readers/writers: P6 (8-bit RGB), P5 with maxval 65535 (16-bit
// grayscale, big-endian samples), and P7 PAM (8-bit RGBA). Chosen as the
// frame container because they are lossless, byte-stable, and inspectable
// with stock tools.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "simpose/image.hpp"

namespace simpose::pnm {

namespace detail {

inline void skip_space_and_comments(std::istream& in) {
    for (;;) {
        const int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            return;
        }
    }
}

inline int read_header_int(std::istream& in, const std::string& path) {
    skip_space_and_comments(in);
    int v = 0;
    if (!(in >> v) || v <= 0) throw Error("bad header value in " + path);
    return v;
}

}  // namespace detail

inline void write_ppm(const ImageU8& img, const std::string& path) {
    if (img.channels != 3) throw Error("write_ppm: image must have 3 channels: " + path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for write: " + path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
    if (!out) throw Error("short write: " + path);
}

inline ImageU8 read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open: " + path);
    std::string magic;
    in >> magic;
    if (magic != "P6") throw Error("not a P6 ppm: " + path);
    const int w = detail::read_header_int(in, path);
    const int h = detail::read_header_int(in, path);
    const int maxval = detail::read_header_int(in, path);
    if (maxval != 255) throw Error("unsupported ppm maxval in " + path);
    in.get();  // single whitespace after maxval
    ImageU8 img(w, h, 3);
    in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
    if (!in) throw Error("truncated ppm: " + path);
    return img;
}

/// 16-bit PGM, network byte order per the format spec.
inline void write_pgm16(const ImageU16& img, const std::string& path) {
    if (img.channels != 1) throw Error("write_pgm16: image must have 1 channel: " + path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for write: " + path);
    out << "P5\n" << img.width << " " << img.height << "\n65535\n";
    for (std::uint16_t v : img.data) {
        const char bytes[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xFF)};
        out.write(bytes, 2);
    }
    if (!out) throw Error("short write: " + path);
}

inline ImageU16 read_pgm16(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open: " + path);
    std::string magic;
    in >> magic;
    if (magic != "P5") throw Error("not a P5 pgm: " + path);
    const int w = detail::read_header_int(in, path);
    const int h = detail::read_header_int(in, path);
    const int maxval = detail::read_header_int(in, path);
    if (maxval != 65535) throw Error("expected 16-bit pgm in " + path);
    in.get();
    ImageU16 img(w, h, 1);
    for (auto& v : img.data) {
        unsigned char bytes[2];
        in.read(reinterpret_cast<char*>(bytes), 2);
        v = static_cast<std::uint16_t>((bytes[0] << 8) | bytes[1]);
    }
    if (!in) throw Error("truncated pgm: " + path);
    return img;
}

/// PAM with RGBA tuples, 8-bit.
inline void write_pam_rgba(const ImageU8& img, const std::string& path) {
    if (img.channels != 4) throw Error("write_pam_rgba: image must have 4 channels: " + path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for write: " + path);
    out << "P7\nWIDTH " << img.width << "\nHEIGHT " << img.height
        << "\nDEPTH 4\nMAXVAL 255\nTUPLTYPE RGB_ALPHA\nENDHDR\n";
    out.write(reinterpret_cast<const char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
    if (!out) throw Error("short write: " + path);
}

inline ImageU8 read_pam_rgba(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open: " + path);
    std::string line;
    std::getline(in, line);
    if (line != "P7") throw Error("not a P7 pam: " + path);
    int w = 0, h = 0, depth = 0, maxval = 0;
    for (;;) {
        if (!std::getline(in, line)) throw Error("truncated pam header: " + path);
        if (line == "ENDHDR") break;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "WIDTH") ls >> w;
        else if (key == "HEIGHT") ls >> h;
        else if (key == "DEPTH") ls >> depth;
        else if (key == "MAXVAL") ls >> maxval;
        // TUPLTYPE is informational
    }
    if (w <= 0 || h <= 0 || depth != 4 || maxval != 255)
        throw Error("unsupported pam header in " + path);
    ImageU8 img(w, h, 4);
    in.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
    if (!in) throw Error("truncated pam: " + path);
    return img;
}

/// 16-bit label export used for superpixel stacks.
inline void write_label_image(const Image<std::uint32_t>& labels, const std::string& path) {
    ImageU16 img(labels.width, labels.height, 1);
    for (std::size_t i = 0; i < labels.data.size(); ++i) {
        if (labels.data[i] > 0xFFFF) throw Error("label does not fit 16 bits: " + path);
        img.data[i] = static_cast<std::uint16_t>(labels.data[i]);
    }
    write_pgm16(img, path);
}

}  // namespace simpose::pnm
