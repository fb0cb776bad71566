#include "liquidseg/postprocess.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "liquidseg/kernels.hpp"

namespace liquidseg::post {

BinaryMask morphological_open(const BinaryMask& mask, int kernel) {
    return kernels::dilate(kernels::erode(mask, kernel), kernel);
}

BinaryMask largest_component(const BinaryMask& mask) {
    const int h = mask.height(), w = mask.width();
    std::vector<int> label(static_cast<size_t>(h) * w, -1);
    int best_label = -1;
    size_t best_size = 0;
    int next_label = 0;
    std::vector<int> stack;

    for (int start = 0; start < h * w; ++start) {
        if (!mask.data()[start] || label[start] >= 0) continue;
        size_t size = 0;
        stack.push_back(start);
        label[start] = next_label;
        while (!stack.empty()) {
            int p = stack.back();
            stack.pop_back();
            ++size;
            int y = p / w, x = p % w;
            const int ny[4] = {y - 1, y + 1, y, y};
            const int nx[4] = {x, x, x - 1, x + 1};
            for (int t = 0; t < 4; ++t) {
                if (ny[t] < 0 || ny[t] >= h || nx[t] < 0 || nx[t] >= w) continue;
                int q = ny[t] * w + nx[t];
                if (mask.data()[q] && label[q] < 0) {
                    label[q] = next_label;
                    stack.push_back(q);
                }
            }
        }
        // strict > keeps the earlier (smaller top-left index) component on ties
        if (size > best_size) {
            best_size = size;
            best_label = next_label;
        }
        ++next_label;
    }

    BinaryMask out(h, w);
    if (best_label < 0) return out;
    for (int p = 0; p < h * w; ++p)
        if (label[p] == best_label) out.data()[p] = 1;
    return out;
}

FillEstimate estimate_fill(const BinaryMask& mask, const BoundingBox& cup_bbox, int kernel) {
    cup_bbox.validate();
    if (cup_bbox.height() < 1)
        throw std::invalid_argument("estimate_fill: degenerate cup bbox");

    BinaryMask inside(mask.height(), mask.width());
    for (int y = std::max(0, cup_bbox.y_min); y <= std::min(mask.height() - 1, cup_bbox.y_max); ++y)
        for (int x = std::max(0, cup_bbox.x_min); x <= std::min(mask.width() - 1, cup_bbox.x_max); ++x)
            if (mask.at(y, x)) inside.set(y, x, true);

    FillEstimate est;
    est.cup_height_px = cup_bbox.height();
    est.filtered_mask = largest_component(morphological_open(inside, kernel));

    auto box = bounding_box_of(est.filtered_mask);
    if (!box) {
        est.liquid_height_px = 0;
        est.level = 0.0;
        return est;
    }
    est.liquid_height_px = cup_bbox.y_max - box->y_min + 1;
    est.level = std::clamp(static_cast<double>(est.liquid_height_px) / est.cup_height_px,
                           0.0, 1.0);
    return est;
}

}  // namespace liquidseg::post
