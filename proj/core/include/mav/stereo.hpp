#pragma once

#include "mav/camera.hpp"
#include "mav/image.hpp"

namespace mav {

// Rectified grayscale pair with horizontal-only disparity.
struct StereoPair {
    Image left;   // 1ch
    Image right;  // 1ch
    double baseline = 0;  // meters
    double focal = 0;     // pixels
};

struct DisparityMap {
    Image disparity;  // 1ch, pixels
    Image valid;      // 1ch, 1 = passes the left-right consistency check
};

// SAD block matching over integer shifts in [0, max_disp], with a left-right
// consistency check at 1 px tolerance.
DisparityMap block_match_disparity(const StereoPair& pair, int window, int max_disp);

// depth = f * b / disp on valid pixels; invalid pixels get depth 0 and stay
// invalid.
Image disparity_to_depth(const DisparityMap& disp, double focal, double baseline);

// Central-difference tangents of the unprojected depth, normal toward the
// camera (n_z < 0). Pixels without valid neighbors are (0,0,0).
Image depth_to_normal(const Image& depth, const Camera& intrinsics);

Image to_grayscale(const Image& img);

}  // namespace mav
