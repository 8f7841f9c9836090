#pragma once

#include <cstdint>
#include <vector>

namespace nudgesim {

template <typename T>
struct Image {
    int width = 0;
    int height = 0;
    std::vector<T> data;

    Image() = default;
    Image(int w, int h, T fill = T{}) : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

    T& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    const T& at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
    size_t size() const { return data.size(); }

    bool operator==(const Image& o) const {
        return width == o.width && height == o.height && data == o.data;
    }
};

using LabelImage = Image<uint16_t>;
using BinaryImage = Image<uint8_t>;
using RealImage = Image<double>;

/// 3x3 square structuring element, outside-of-frame treated as background.
BinaryImage erode3x3(const BinaryImage& img);
BinaryImage dilate3x3(const BinaryImage& img);
inline BinaryImage open3x3(const BinaryImage& img) { return dilate3x3(erode3x3(img)); }
inline BinaryImage close3x3(const BinaryImage& img) { return erode3x3(dilate3x3(img)); }

/// 8-connected components of the nonzero pixels, in row-major discovery
/// order. Each component is a list of row-major pixel indices.
std::vector<std::vector<int>> connected_components8(const BinaryImage& img);

/// Separable Gaussian blur, zero padding at the border. Kernel radius 3*sigma.
RealImage gaussian_blur(const RealImage& img, double sigma);

} // namespace nudgesim
