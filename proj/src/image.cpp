#include "liquidseg/image.hpp"

#include <algorithm>

namespace liquidseg {

void Image::clamp01() {
    for (float& v : data_) v = std::clamp(v, 0.0f, 1.0f);
}

size_t BinaryMask::count() const {
    size_t n = 0;
    for (uint8_t v : data_) n += v;
    return n;
}

double iou(const BinaryMask& a, const BinaryMask& b) {
    if (!a.same_size(b)) throw std::invalid_argument("iou: dimension mismatch");
    size_t inter = 0, uni = 0;
    const auto& da = a.data();
    const auto& db = b.data();
    for (size_t i = 0; i < da.size(); ++i) {
        bool pa = da[i] != 0, pb = db[i] != 0;
        inter += (pa && pb);
        uni += (pa || pb);
    }
    if (uni == 0) return 1.0;  // both empty: perfect agreement on "no liquid"
    return static_cast<double>(inter) / static_cast<double>(uni);
}

Image crop(const Image& img, const BoundingBox& bbox, int padding) {
    bbox.validate();
    if (bbox.x_min < 0 || bbox.y_min < 0 || bbox.x_max >= img.width() ||
        bbox.y_max >= img.height())
        throw std::invalid_argument("crop: bbox outside image");
    int x0 = std::max(0, bbox.x_min - padding);
    int y0 = std::max(0, bbox.y_min - padding);
    int x1 = std::min(img.width() - 1, bbox.x_max + padding);
    int y1 = std::min(img.height() - 1, bbox.y_max + padding);
    Image out(y1 - y0 + 1, x1 - x0 + 1);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            for (int c = 0; c < 3; ++c)
                out.at(y - y0, x - x0, c) = img.at(y, x, c);
    return out;
}

std::optional<BoundingBox> bounding_box_of(const BinaryMask& mask) {
    int x0 = mask.width(), y0 = mask.height(), x1 = -1, y1 = -1;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask.at(y, x)) continue;
            x0 = std::min(x0, x);
            y0 = std::min(y0, y);
            x1 = std::max(x1, x);
            y1 = std::max(y1, y);
        }
    }
    if (x1 < 0) return std::nullopt;
    return BoundingBox{x0, y0, x1, y1};
}

}  // namespace liquidseg
