#include "nudgesim/image.hpp"

#include <cmath>
#include <deque>

namespace nudgesim {

namespace {

BinaryImage morph3x3(const BinaryImage& img, bool erode) {
    BinaryImage out(img.width, img.height, 0);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            bool acc = erode;
            for (int dy = -1; dy <= 1 && (erode ? acc : !acc); ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = x + dx, ny = y + dy;
                    const bool v = img.in_bounds(nx, ny) && img.at(nx, ny) != 0;
                    if (erode) {
                        if (!v) { acc = false; break; }
                    } else {
                        if (v) { acc = true; break; }
                    }
                }
            }
            out.at(x, y) = acc ? 1 : 0;
        }
    }
    return out;
}

} // namespace

BinaryImage erode3x3(const BinaryImage& img) { return morph3x3(img, true); }
BinaryImage dilate3x3(const BinaryImage& img) { return morph3x3(img, false); }

std::vector<std::vector<int>> connected_components8(const BinaryImage& img) {
    std::vector<std::vector<int>> comps;
    std::vector<uint8_t> seen(img.size(), 0);
    const int w = img.width, h = img.height;
    for (int y0 = 0; y0 < h; ++y0) {
        for (int x0 = 0; x0 < w; ++x0) {
            const int idx0 = y0 * w + x0;
            if (img.data[idx0] == 0 || seen[idx0]) continue;
            std::vector<int> comp;
            std::deque<int> queue{idx0};
            seen[idx0] = 1;
            while (!queue.empty()) {
                const int idx = queue.front();
                queue.pop_front();
                comp.push_back(idx);
                const int x = idx % w, y = idx / w;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        const int nx = x + dx, ny = y + dy;
                        if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                        const int nidx = ny * w + nx;
                        if (img.data[nidx] != 0 && !seen[nidx]) {
                            seen[nidx] = 1;
                            queue.push_back(nidx);
                        }
                    }
                }
            }
            comps.push_back(std::move(comp));
        }
    }
    return comps;
}

RealImage gaussian_blur(const RealImage& img, double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += kernel[i + radius];
    }
    for (double& k : kernel) k /= sum;

    RealImage tmp(img.width, img.height, 0.0);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int nx = x + i;
                if (nx >= 0 && nx < img.width) acc += kernel[i + radius] * img.at(nx, y);
            }
            tmp.at(x, y) = acc;
        }
    }
    RealImage out(img.width, img.height, 0.0);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                const int ny = y + i;
                if (ny >= 0 && ny < img.height) acc += kernel[i + radius] * tmp.at(x, ny);
            }
            out.at(x, y) = acc;
        }
    }
    return out;
}

} // namespace nudgesim
