#include "mav/skeleton.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mav/marching_tet.hpp"
#include "mav/sdfgrid.hpp"
#include "mav/tetgrid.hpp"

namespace mav {

namespace {

Mat3 quat_to_mat(double w, double x, double y, double z) {
    double n = std::sqrt(w * w + x * x + y * y + z * z);
    if (n < 1e-12) throw std::runtime_error("degenerate quaternion");
    w /= n; x /= n; y /= n; z /= n;
    Mat3 m;
    m.m = {1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
           2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
           2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)};
    return m;
}

std::array<double, 4> mat_to_quat(const Mat3& m) {
    double tr = m(0, 0) + m(1, 1) + m(2, 2);
    double w, x, y, z;
    if (tr > 0) {
        double s = std::sqrt(tr + 1.0) * 2;
        w = 0.25 * s;
        x = (m(2, 1) - m(1, 2)) / s;
        y = (m(0, 2) - m(2, 0)) / s;
        z = (m(1, 0) - m(0, 1)) / s;
    } else if (m(0, 0) > m(1, 1) && m(0, 0) > m(2, 2)) {
        double s = std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2)) * 2;
        w = (m(2, 1) - m(1, 2)) / s;
        x = 0.25 * s;
        y = (m(0, 1) + m(1, 0)) / s;
        z = (m(0, 2) + m(2, 0)) / s;
    } else if (m(1, 1) > m(2, 2)) {
        double s = std::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2)) * 2;
        w = (m(0, 2) - m(2, 0)) / s;
        x = (m(0, 1) + m(1, 0)) / s;
        y = 0.25 * s;
        z = (m(1, 2) + m(2, 1)) / s;
    } else {
        double s = std::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1)) * 2;
        w = (m(1, 0) - m(0, 1)) / s;
        x = (m(0, 2) + m(2, 0)) / s;
        y = (m(1, 2) + m(2, 1)) / s;
        z = 0.25 * s;
    }
    return {w, x, y, z};
}

bool is_rotation(const Mat3& R, double tol) {
    Mat3 should_be_identity = R * R.transposed();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double target = i == j ? 1.0 : 0.0;
            if (std::abs(should_be_identity(i, j) - target) > tol) return false;
        }
    return std::abs(R.det() - 1.0) <= tol;
}

}  // namespace

void Skeleton::validate() const {
    if (joints.empty()) throw std::invalid_argument("skeleton has no joints");
    if (joints[0].parent != -1) throw std::invalid_argument("joint 0 must be the root");
    for (int i = 0; i < joint_count(); ++i) {
        const Joint& j = joints[i];
        if (i > 0 && (j.parent < 0 || j.parent >= i))
            throw std::invalid_argument("joint parents must be topologically sorted");
        if (i == 0 && j.parent != -1)
            throw std::invalid_argument("skeleton must have exactly one root");
        if (!is_rotation(j.rest_local.R, 1e-6))
            throw std::invalid_argument("rest transform of joint " + j.name +
                                        " is not a rigid rotation");
        if (!is_finite(j.rest_local.t))
            throw std::invalid_argument("rest translation of joint " + j.name +
                                        " is not finite");
    }
}

std::vector<RigidTransform> Skeleton::rest_globals() const {
    std::vector<RigidTransform> globals(joints.size());
    for (size_t i = 0; i < joints.size(); ++i) {
        const Joint& j = joints[i];
        globals[i] = j.parent < 0 ? j.rest_local : globals[j.parent].compose(j.rest_local);
    }
    return globals;
}

void Pose::validate(int joint_count) const {
    if (int(axis_angle.size()) != joint_count)
        throw std::invalid_argument("pose has wrong joint count");
    for (const Vec3& aa : axis_angle) {
        if (!is_finite(aa)) throw std::invalid_argument("pose contains non-finite entries");
        if (length(aa) >= kPi + 1e-6)
            throw std::invalid_argument("axis-angle magnitude exceeds pi");
    }
    if (!is_finite(root_translation))
        throw std::invalid_argument("root translation is not finite");
}

std::vector<RigidTransform> joint_transforms(const Skeleton& skeleton, const Pose& pose) {
    skeleton.validate();
    pose.validate(skeleton.joint_count());

    std::vector<RigidTransform> posed_globals(skeleton.joint_count());
    for (int i = 0; i < skeleton.joint_count(); ++i) {
        const auto& j = skeleton.joints[i];
        RigidTransform local = j.rest_local.compose({rodrigues(pose.axis_angle[i]), {}});
        posed_globals[i] =
            j.parent < 0 ? local : posed_globals[j.parent].compose(local);
    }
    posed_globals[0].t += pose.root_translation;
    // Root translation shifts the whole chain.
    for (int i = 1; i < skeleton.joint_count(); ++i) {
        const auto& j = skeleton.joints[i];
        RigidTransform local = j.rest_local.compose({rodrigues(pose.axis_angle[i]), {}});
        posed_globals[i] = posed_globals[j.parent].compose(local);
    }

    std::vector<RigidTransform> rest = skeleton.rest_globals();
    std::vector<RigidTransform> out(skeleton.joint_count());
    for (int i = 0; i < skeleton.joint_count(); ++i)
        out[i] = posed_globals[i].compose(rest[i].inverse());
    return out;
}

RigidTransform blend_transforms(const double* weights,
                                const std::vector<RigidTransform>& transforms) {
    RigidTransform blend;
    blend.R = Mat3::zero();
    for (size_t i = 0; i < transforms.size(); ++i) {
        blend.R += transforms[i].R * weights[i];
        blend.t += transforms[i].t * weights[i];
    }
    return blend;
}

std::vector<Vec3> lbs_transform(const std::vector<Vec3>& points,
                                const std::vector<double>& weights,
                                const std::vector<RigidTransform>& transforms) {
    size_t J = transforms.size();
    if (weights.size() != points.size() * J)
        throw std::invalid_argument("lbs_transform: weight array size mismatch");
    std::vector<Vec3> out(points.size());
    for (size_t n = 0; n < points.size(); ++n) {
        const double* w = weights.data() + n * J;
        double sum = 0;
        for (size_t i = 0; i < J; ++i) sum += w[i];
        if (std::abs(sum - 1.0) > 1e-4)
            throw std::invalid_argument("lbs_transform: weight row does not sum to 1");
        out[n] = blend_transforms(w, transforms).apply(points[n]);
    }
    return out;
}

void TemplateSurface::validate() const {
    if (joint_count <= 0) throw std::invalid_argument("template has no joints");
    if (surface_weights.size() != mesh.vertices.size() * size_t(joint_count))
        throw std::invalid_argument("template weight array size mismatch");
    for (size_t n = 0; n < mesh.vertices.size(); ++n) {
        double sum = 0;
        for (int j = 0; j < joint_count; ++j) {
            double w = surface_weights[n * joint_count + j];
            if (w < -1e-9) throw std::invalid_argument("negative template weight");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-6)
            throw std::invalid_argument("template weight row does not sum to 1");
    }
    if (!is_watertight(mesh))
        throw std::invalid_argument("template mesh is not closed/manifold");
}

namespace {

struct Capsule {
    Vec3 a, b;
    double radius;
    int joint;
};

double capsule_distance(const Vec3& p, const Capsule& c) {
    Vec3 ab = c.b - c.a;
    double t = std::clamp(dot(p - c.a, ab) / dot(ab, ab), 0.0, 1.0);
    return length(p - (c.a + ab * t)) - c.radius;
}

const std::vector<Capsule>& body_capsules() {
    static const std::vector<Capsule> capsules = {
        {{0, -0.05, 0}, {0, 0.25, 0}, 0.13, 0},    // pelvis
        {{0, 0.25, 0}, {0, 0.50, 0}, 0.12, 1},     // spine/chest
        {{0.15, 0.45, 0}, {0.50, 0.45, 0}, 0.055, 2},   // left arm
        {{-0.15, 0.45, 0}, {-0.50, 0.45, 0}, 0.055, 3}, // right arm
        {{0.09, -0.05, 0}, {0.09, -0.55, 0}, 0.07, 4},  // left leg
    };
    return capsules;
}

}  // namespace

double capsule_body_sdf(const Vec3& p) {
    double d = 1e30;
    for (const Capsule& c : body_capsules()) d = std::min(d, capsule_distance(p, c));
    return d;
}

CapsuleBody make_capsule_body(int surface_resolution) {
    CapsuleBody body;

    auto& joints = body.skeleton.joints;
    joints.push_back({"pelvis", -1, RigidTransform::identity()});
    joints.push_back({"spine", 0, RigidTransform::translation({0, 0.25, 0})});
    joints.push_back({"arm_l", 1, RigidTransform::translation({0.15, 0.20, 0})});
    joints.push_back({"arm_r", 1, RigidTransform::translation({-0.15, 0.20, 0})});
    joints.push_back({"leg_l", 0, RigidTransform::translation({0.09, -0.05, 0})});
    body.skeleton.validate();

    Box3 box;
    for (const Capsule& c : body_capsules()) {
        box.expand(c.a - Vec3(c.radius));
        box.expand(c.a + Vec3(c.radius));
        box.expand(c.b - Vec3(c.radius));
        box.expand(c.b + Vec3(c.radius));
    }
    box = box.dilated(0.08);

    TetGrid grid = build_grid(surface_resolution, box);
    SdfGrid sdf(grid);
    for (size_t i = 0; i < grid.vertices.size(); ++i)
        sdf.values[i] = capsule_body_sdf(grid.vertices[i]);
    ExtractedMesh extracted = marching_tetrahedra(sdf);

    body.surface.mesh.vertices = extracted.vertices;
    body.surface.mesh.faces = extracted.faces;
    body.surface.joint_count = body.skeleton.joint_count();

    // Smooth per-capsule weights: softmin over capsule distances.
    const double tau = 0.08;
    size_t J = body_capsules().size();
    body.surface.surface_weights.assign(body.surface.mesh.vertices.size() * J, 0.0);
    for (size_t n = 0; n < body.surface.mesh.vertices.size(); ++n) {
        const Vec3& v = body.surface.mesh.vertices[n];
        double dmin = 1e30;
        std::vector<double> d(J);
        for (size_t c = 0; c < J; ++c) {
            d[c] = capsule_distance(v, body_capsules()[c]);
            dmin = std::min(dmin, d[c]);
        }
        double sum = 0;
        for (size_t c = 0; c < J; ++c) {
            double w = std::exp(-(d[c] - dmin) / tau);
            body.surface.surface_weights[n * J + body_capsules()[c].joint] += w;
            sum += w;
        }
        for (size_t j = 0; j < J; ++j) body.surface.surface_weights[n * J + j] /= sum;
    }
    body.surface.validate();
    return body;
}

void write_skeleton(const std::string& path, const Skeleton& skeleton) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_skeleton: cannot open " + path);
    out.precision(17);
    for (const auto& j : skeleton.joints) {
        auto q = mat_to_quat(j.rest_local.R);
        out << j.name << " " << j.parent << " " << q[0] << " " << q[1] << " " << q[2]
            << " " << q[3] << " " << j.rest_local.t.x << " " << j.rest_local.t.y << " "
            << j.rest_local.t.z << "\n";
    }
}

Skeleton read_skeleton(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_skeleton: cannot open " + path);
    Skeleton sk;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        Skeleton::Joint j;
        double qw, qx, qy, qz;
        if (!(ss >> j.name >> j.parent >> qw >> qx >> qy >> qz >> j.rest_local.t.x >>
              j.rest_local.t.y >> j.rest_local.t.z))
            throw std::runtime_error("read_skeleton: bad line: " + line);
        j.rest_local.R = quat_to_mat(qw, qx, qy, qz);
        sk.joints.push_back(j);
    }
    sk.validate();
    return sk;
}

void write_template(const std::string& path, const TemplateSurface& surface) {
    write_ply(path, surface.mesh, &surface.surface_weights, surface.joint_count);
}

TemplateSurface read_template(const std::string& path) {
    TemplateSurface surface;
    surface.mesh = read_ply(path, &surface.surface_weights, &surface.joint_count);
    // Weights are stored as float32; renormalize rows to exact unity.
    int J = surface.joint_count;
    for (size_t n = 0; J > 0 && n < surface.mesh.vertices.size(); ++n) {
        double sum = 0;
        for (int j = 0; j < J; ++j) sum += surface.surface_weights[n * J + j];
        if (sum > 0.5)
            for (int j = 0; j < J; ++j) surface.surface_weights[n * J + j] /= sum;
    }
    surface.validate();
    return surface;
}

void write_pose(const std::string& path, const Pose& pose) {
    nlohmann::json j;
    std::vector<double> theta;
    for (const Vec3& aa : pose.axis_angle) {
        theta.push_back(aa.x);
        theta.push_back(aa.y);
        theta.push_back(aa.z);
    }
    j["theta"] = theta;
    j["root_translation"] = {pose.root_translation.x, pose.root_translation.y,
                             pose.root_translation.z};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_pose: cannot open " + path);
    out << j.dump(2) << "\n";
}

Pose read_pose(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_pose: cannot open " + path);
    nlohmann::json j;
    in >> j;
    std::vector<double> theta = j.at("theta").get<std::vector<double>>();
    if (theta.size() % 3 != 0) throw std::runtime_error("read_pose: theta size not 3J");
    Pose pose;
    for (size_t i = 0; i < theta.size(); i += 3)
        pose.axis_angle.push_back({theta[i], theta[i + 1], theta[i + 2]});
    if (j.contains("root_translation")) {
        auto t = j["root_translation"].get<std::vector<double>>();
        pose.root_translation = {t.at(0), t.at(1), t.at(2)};
    }
    return pose;
}

}  // namespace mav
