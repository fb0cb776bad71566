#pragma once

#include "liquidseg/image.hpp"

namespace liquidseg::post {

struct FillEstimate {
    int liquid_height_px = 0;  // cup-bottom-referenced
    int cup_height_px = 0;
    double level = 0.0;  // liquid_height_px / cup_height_px, clamped to [0,1]
    BinaryMask filtered_mask;
};

// erosion then dilation with a square all-true structuring element
BinaryMask morphological_open(const BinaryMask& mask, int kernel = 5);

// keeps the 4-connected component with the most pixels; ties go to the
// component whose smallest row-major pixel index is smallest
BinaryMask largest_component(const BinaryMask& mask);

// Filter chain: restrict to the cup box, open, keep the largest blob, then
// read the fill level off the top edge of the surviving pixels' bounding box.
FillEstimate estimate_fill(const BinaryMask& mask, const BoundingBox& cup_bbox,
                           int kernel = 5);

}  // namespace liquidseg::post
