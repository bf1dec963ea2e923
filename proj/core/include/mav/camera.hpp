#pragma once

#include <string>

#include "mav/vecmath.hpp"

namespace mav {

struct Ray {
    Vec3 origin;
    Vec3 dir;  // unit
};

// Pinhole camera. Camera space looks down +z with x right and y down, so
// pixel (x, y) maps to direction ((x + 0.5 - cx)/fx, (y + 0.5 - cy)/fy, 1).
struct Camera {
    double fx = 0, fy = 0, cx = 0, cy = 0;
    int width = 0, height = 0;
    RigidTransform world_from_camera;

    void validate() const;

    Ray pixel_ray(int x, int y) const;
    Ray pixel_ray(double px, double py) const;

    Vec3 to_camera_point(const Vec3& world) const {
        return world_from_camera.inverse().apply(world);
    }
    Vec3 to_camera_vector(const Vec3& world_v) const {
        return world_from_camera.R.transposed() * world_v;
    }

    // Camera-space point back to continuous pixel coordinates.
    Vec2 project(const Vec3& cam_point) const {
        return {fx * cam_point.x / cam_point.z + cx, fy * cam_point.y / cam_point.z + cy};
    }

    Vec3 unproject(double px, double py, double depth) const {
        return {(px + 0.5 - cx) / fx * depth, (py + 0.5 - cy) / fy * depth, depth};
    }
};

// Positions a camera at `eye` looking at `target`; `up` is world up (-y image).
Camera look_at_camera(const Vec3& eye, const Vec3& target, const Vec3& up, double fov_y,
                      int width, int height);

// Text format: "fx fy cx cy w h" then 3 rows of the 3x4 world-from-camera
// matrix.
void save_camera(const std::string& path, const Camera& cam);
Camera load_camera(const std::string& path);

}  // namespace mav
