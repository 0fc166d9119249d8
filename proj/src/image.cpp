#include "glmbim/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace glmbim {

double ImageGrid::sample(double x, double y) const {
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, width - 1);
    const int y1 = std::min(y0 + 1, height - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double top = at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx;
    const double bot = at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx;
    return top * (1.0 - fy) + bot * fy;
}

int Patch::count_valid() const {
    int n = 0;
    for (unsigned char f : valid) n += f;
    return n;
}

bool Patch::all_zero() const {
    for (size_t i = 0; i < v.size(); ++i)
        if (valid[i] && v[i] != 0.0) return false;
    return true;
}

Patch extract_patch(const ImageGrid& img, double cx, double cy, int size) {
    Patch p(size);
    const int r = size / 2;
    for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
            const double x = cx + dx;
            const double y = cy + dy;
            const size_t idx = static_cast<size_t>(dy + r) * size + (dx + r);
            if (img.inside(x, y)) {
                p.v[idx] = img.sample(x, y);
            } else {
                p.valid[idx] = 0;
            }
        }
    }
    return p;
}

double patch_distance_sq(const Patch& a, const Patch& b) {
    if (a.size != b.size) throw std::invalid_argument("patch_distance_sq: size mismatch");
    double d2 = 0.0;
    int n_valid = 0;
    const int n_full = a.size * a.size;
    for (int i = 0; i < n_full; ++i) {
        if (a.valid[i] && b.valid[i]) {
            const double d = a.v[i] - b.v[i];
            d2 += d * d;
            ++n_valid;
        }
    }
    if (n_valid == 0) throw std::invalid_argument("patch_distance_sq: no jointly valid pixels");
    return d2 * static_cast<double>(n_full) / n_valid;
}

void write_pgm(const ImageGrid& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_pgm: cannot open " + path);
    double vmax = 0.0;
    for (double x : img.v) vmax = std::max(vmax, x);
    if (vmax <= 0.0) vmax = 1.0;
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    for (double x : img.v) {
        const int q = std::clamp(static_cast<int>(std::lround(x / vmax * 255.0)), 0, 255);
        out.put(static_cast<char>(q));
    }
}

ImageGrid read_pgm_normalized(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_pgm: cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic != "P5" && magic != "P2") throw std::runtime_error("read_pgm: unsupported format " + magic);
    auto next_token = [&in]() {
        std::string tok;
        while (in >> tok) {
            if (tok[0] == '#') {
                std::string rest;
                std::getline(in, rest);
                continue;
            }
            return tok;
        }
        throw std::runtime_error("read_pgm: truncated header");
    };
    const int w = std::stoi(next_token());
    const int h = std::stoi(next_token());
    const int maxval = std::stoi(next_token());
    if (w <= 0 || h <= 0 || maxval <= 0) throw std::runtime_error("read_pgm: bad header");
    ImageGrid img(w, h);
    if (magic == "P5") {
        in.get();  // single whitespace after maxval
        for (auto& x : img.v) {
            int q = in.get();
            if (maxval > 255) q = (q << 8) | in.get();
            if (!in) throw std::runtime_error("read_pgm: truncated data");
            x = static_cast<double>(q) / maxval;
        }
    } else {
        for (auto& x : img.v) {
            int q;
            if (!(in >> q)) throw std::runtime_error("read_pgm: truncated data");
            x = static_cast<double>(q) / maxval;
        }
    }
    return img;
}

}  // namespace glmbim
