#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace liquidseg {

// RGB image, channel-last float data in [0,1]. Dimensions fixed at construction.
class Image {
public:
    Image() = default;
    // Pipeline images are at least 8x8; crops may be smaller, so the type
    // itself only requires positive dimensions.
    Image(int height, int width, float fill = 0.0f)
        : height_(height), width_(width),
          data_(static_cast<size_t>(height) * width * 3, fill) {
        if (height < 1 || width < 1)
            throw std::invalid_argument("Image: dimensions must be positive");
    }

    int height() const { return height_; }
    int width() const { return width_; }
    static constexpr int channels() { return 3; }

    float& at(int y, int x, int c) {
        return data_[(static_cast<size_t>(y) * width_ + x) * 3 + c];
    }
    float at(int y, int x, int c) const {
        return data_[(static_cast<size_t>(y) * width_ + x) * 3 + c];
    }

    const std::vector<float>& data() const { return data_; }
    std::vector<float>& data() { return data_; }

    void clamp01();

    bool same_size(const Image& o) const {
        return height_ == o.height_ && width_ == o.width_;
    }

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<float> data_;
};

class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int height, int width, bool fill = false)
        : height_(height), width_(width),
          data_(static_cast<size_t>(height) * width, fill ? 1 : 0) {}

    int height() const { return height_; }
    int width() const { return width_; }

    bool at(int y, int x) const {
        return data_[static_cast<size_t>(y) * width_ + x] != 0;
    }
    void set(int y, int x, bool v) {
        data_[static_cast<size_t>(y) * width_ + x] = v ? 1 : 0;
    }

    const std::vector<uint8_t>& data() const { return data_; }
    std::vector<uint8_t>& data() { return data_; }

    size_t count() const;

    bool same_size(const BinaryMask& o) const {
        return height_ == o.height_ && width_ == o.width_;
    }
    bool operator==(const BinaryMask& o) const {
        return height_ == o.height_ && width_ == o.width_ && data_ == o.data_;
    }

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<uint8_t> data_;  // 0 or 1
};

// Inclusive pixel coordinates; y grows downward, so the top edge is y_min.
struct BoundingBox {
    int x_min = 0;
    int y_min = 0;
    int x_max = 0;
    int y_max = 0;

    int width() const { return x_max - x_min + 1; }
    int height() const { return y_max - y_min + 1; }

    void validate() const {
        if (x_min > x_max || y_min > y_max)
            throw std::invalid_argument("BoundingBox: min must not exceed max");
    }
    bool operator==(const BoundingBox& o) const = default;
};

// |a ∩ b| / |a ∪ b|; two empty masks count as perfect agreement (1.0).
double iou(const BinaryMask& a, const BinaryMask& b);

// Sub-image of bbox expanded by `padding` on all sides, clamped to bounds.
Image crop(const Image& img, const BoundingBox& bbox, int padding = 10);

// Tightest axis-aligned box over true pixels; nullopt for an empty mask.
std::optional<BoundingBox> bounding_box_of(const BinaryMask& mask);

}  // namespace liquidseg
