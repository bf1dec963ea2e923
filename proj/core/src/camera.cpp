#include "mav/camera.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mav {

void Camera::validate() const {
    if (fx <= 0 || fy <= 0) throw std::invalid_argument("Camera: fx, fy must be positive");
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("Camera: image size must be positive");
    const Mat3& R = world_from_camera.R;
    Mat3 RtR = R.transposed() * R;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (std::abs(RtR(i, j) - (i == j ? 1.0 : 0.0)) > 1e-6)
                throw std::invalid_argument("Camera: rotation not orthonormal");
}

Ray Camera::pixel_ray(int x, int y) const { return pixel_ray(x + 0.5, y + 0.5); }

Ray Camera::pixel_ray(double px, double py) const {
    Vec3 d{(px - cx) / fx, (py - cy) / fy, 1.0};
    return {world_from_camera.t, normalize(world_from_camera.apply_vector(d))};
}

Camera look_at_camera(const Vec3& eye, const Vec3& target, const Vec3& up, double fov_y,
                      int width, int height) {
    Vec3 fwd = normalize(target - eye);
    Vec3 right = normalize(cross(fwd, up));
    Vec3 down = cross(fwd, right);  // y points down in camera space
    Camera cam;
    cam.width = width;
    cam.height = height;
    cam.fy = 0.5 * height / std::tan(0.5 * fov_y);
    cam.fx = cam.fy;
    cam.cx = 0.5 * width;
    cam.cy = 0.5 * height;
    cam.world_from_camera = {Mat3::from_cols(right, down, fwd), eye};
    cam.validate();
    return cam;
}

void save_camera(const std::string& path, const Camera& cam) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_camera: cannot open " + path);
    out.precision(17);
    out << cam.fx << " " << cam.fy << " " << cam.cx << " " << cam.cy << " " << cam.width
        << " " << cam.height << "\n";
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) out << cam.world_from_camera.R(r, c) << " ";
        out << cam.world_from_camera.t[r] << "\n";
    }
}

Camera load_camera(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_camera: cannot open " + path);
    Camera cam;
    in >> cam.fx >> cam.fy >> cam.cx >> cam.cy >> cam.width >> cam.height;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) in >> cam.world_from_camera.R(r, c);
        in >> cam.world_from_camera.t[r];
    }
    if (!in) throw std::runtime_error("load_camera: malformed camera file " + path);
    cam.validate();
    return cam;
}

}  // namespace mav
