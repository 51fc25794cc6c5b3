#include <doctest.h>

#include <cmath>

#include "udepth/geometry.hpp"
#include "udepth/random.hpp"

using namespace udepth;

namespace {

Pose random_pose(Rng& rng, double angle, double trans) {
  return Pose::from_axis_angle({rng.uniform(-angle, angle), rng.uniform(-angle, angle), rng.uniform(-angle, angle)},
                               {rng.uniform(-trans, trans), rng.uniform(-trans, trans), rng.uniform(-trans, trans)});
}

}  // namespace

TEST_CASE("optical axis projects to the principal point") {
  const PixelCoord j = project(CameraIntrinsics(1, 1, 0, 0), {0, 0, 1});
  CHECK(j.x == 0.0);
  CHECK(j.y == 0.0);
}

TEST_CASE("project by hand arithmetic") {
  const PixelCoord j = project(CameraIntrinsics(100, 100, 50, 50), {1, 2, 2});
  CHECK(j.x == doctest::Approx(100.0).epsilon(1e-15));
  CHECK(j.y == doctest::Approx(150.0).epsilon(1e-15));
}

TEST_CASE("project behind the camera throws") {
  CHECK_THROWS_AS(project(CameraIntrinsics(1, 1, 0, 0), {0, 0, -1}), GeometryError);
  CHECK_THROWS_AS(project(CameraIntrinsics(1, 1, 0, 0), {0, 0, 1e-7}), GeometryError);
}

TEST_CASE("backproject principal ray") {
  const Vec3 p = backproject(CameraIntrinsics(1, 1, 0, 0), {0, 0}, 5);
  CHECK(p == Vec3{0, 0, 5});
}

TEST_CASE("backproject inverts the project example") {
  const Vec3 p = backproject(CameraIntrinsics(100, 100, 50, 50), {100, 150}, 2);
  CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(p[2] == 2.0);
}

TEST_CASE("backproject rejects nonpositive depth") {
  CHECK_THROWS_AS(backproject(CameraIntrinsics(1, 1, 0, 0), {0, 0}, 0.0), GeometryError);
}

TEST_CASE("intrinsics require positive focal lengths") {
  CHECK_THROWS_AS(CameraIntrinsics(0, 1, 0, 0), GeometryError);
  CHECK_THROWS_AS(CameraIntrinsics(1, -1, 0, 0), GeometryError);
}

TEST_CASE("project after backproject is the identity for random inputs") {
  Rng rng(3);
  for (int k = 0; k < 1000; ++k) {
    const CameraIntrinsics K(rng.uniform(10, 500), rng.uniform(10, 500), rng.uniform(0, 100), rng.uniform(0, 100));
    const PixelCoord j{rng.uniform(-50, 150), rng.uniform(-50, 150)};
    const double d = rng.uniform(0.01, 100);
    const PixelCoord back = project(K, backproject(K, j, d));
    CHECK(std::abs(back.x - j.x) < 1e-6);
    CHECK(std::abs(back.y - j.y) < 1e-6);
  }
}

TEST_CASE("identity warp returns the pixel exactly") {
  const CameraIntrinsics K(48, 48, 31.5, 31.5);
  Rng rng(4);
  for (int k = 0; k < 200; ++k) {
    const PixelCoord j{rng.uniform(0, 63), rng.uniform(0, 63)};
    const WarpResult r = warp_pixel(j, rng.uniform(0.1, 80), K, Pose::identity(), 64, 64);
    CHECK(r.valid);
    CHECK(r.pixel.x == j.x);
    CHECK(r.pixel.y == j.y);
  }
}

TEST_CASE("warp with pure backward translation by hand") {
  const CameraIntrinsics K(100, 100, 50, 50);
  const WarpResult r = warp_pixel({50, 50}, 2.0, K, Pose::from_translation({0, 0, -1}), 101, 101);
  CHECK(r.valid);
  CHECK(r.pixel.x == doctest::Approx(50.0).epsilon(1e-15));
  CHECK(r.pixel.y == doctest::Approx(50.0).epsilon(1e-15));
  const WarpResult off = warp_pixel({60, 50}, 2.0, K, Pose::from_translation({0, 0, -1}), 101, 101);
  CHECK(off.pixel.x == doctest::Approx(70.0).epsilon(1e-14));
}

TEST_CASE("warp pushing the point behind the camera is invalid") {
  const CameraIntrinsics K(100, 100, 50, 50);
  CHECK_FALSE(warp_pixel({50, 50}, 2.0, K, Pose::from_translation({0, 0, -3}), 101, 101).valid);
  CHECK_FALSE(warp_pixel({50, 50}, 2.0, K, Pose::from_translation({200, 0, 0}), 101, 101).valid);
}

TEST_CASE("warp jacobian matches finite differences") {
  const CameraIntrinsics K(48, 52, 31.5, 30.0);
  Rng rng(8);
  for (int k = 0; k < 100; ++k) {
    const Pose g = random_pose(rng, 0.05, 2.0);
    const PixelCoord j{rng.uniform(10, 50), rng.uniform(10, 50)};
    const double d = rng.uniform(10, 40), h = 1e-5 * d;
    const WarpJacobian wj = warp_pixel_jacobian(j, d, K, g, 64, 64);
    const WarpResult a = warp_pixel(j, d + h, K, g, 64, 64);
    const WarpResult b = warp_pixel(j, d - h, K, g, 64, 64);
    if (!wj.warp.valid || !a.valid || !b.valid) continue;
    CHECK(wj.warp.pixel.x == warp_pixel(j, d, K, g, 64, 64).pixel.x);
    CHECK(wj.dx_dd == doctest::Approx((a.pixel.x - b.pixel.x) / (2 * h)).epsilon(1e-6).scale(1e-9));
    CHECK(wj.dy_dd == doctest::Approx((a.pixel.y - b.pixel.y) / (2 * h)).epsilon(1e-6).scale(1e-9));
  }
}

TEST_CASE("warp by g then by its inverse returns to the start on a plane") {
  // Fronto-parallel plane z = 20 in the first camera.
  const CameraIntrinsics K(48, 48, 31.5, 31.5);
  Rng rng(9);
  for (int k = 0; k < 100; ++k) {
    const Pose g = random_pose(rng, 0.02, 1.0);
    const PixelCoord j{rng.uniform(20, 44), rng.uniform(20, 44)};
    const WarpResult fwd = warp_pixel(j, 20.0, K, g, 64, 64);
    REQUIRE(fwd.valid);
    const Vec3 p2 = g.apply(backproject(K, j, 20.0));  // oracle depth in the second camera
    const WarpResult back = warp_pixel(fwd.pixel, p2[2], K, g.inverse(), 64, 64);
    REQUIRE(back.valid);
    CHECK(std::abs(back.pixel.x - j.x) < 1e-4);
    CHECK(std::abs(back.pixel.y - j.y) < 1e-4);
  }
}

TEST_CASE("pose group laws") {
  Rng rng(10);
  for (int k = 0; k < 100; ++k) {
    const Pose a = random_pose(rng, 1.0, 5), b = random_pose(rng, 1.0, 5), c = random_pose(rng, 1.0, 5);
    CHECK(pose_distance((a * b) * c, a * (b * c)) < 1e-9);
    CHECK(pose_distance(a * a.inverse(), Pose::identity()) < 1e-9);
    CHECK(pose_distance(a.inverse() * a, Pose::identity()) < 1e-9);
  }
}

TEST_CASE("pose rejects non-orthonormal or reflecting rotations") {
  CHECK_THROWS_AS(Pose(Mat3{1, 0, 0, 0, 1, 0, 0, 0, 1.001}, {0, 0, 0}), GeometryError);
  CHECK_THROWS_AS(Pose(Mat3{1, 0, 0, 0, 1, 0, 0, 0, -1}, {0, 0, 0}), GeometryError);
}

TEST_CASE("identity warp reproduces the source image") {
  const CameraIntrinsics K(8, 8, 3.5, 3.5);
  std::vector<double> v(8 * 8 * 3);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = double(i % 17) / 16.0;
  const Image src(8, 8, 3, v);
  const WarpedImage w = synthesize_warped_image(src, DepthMap(8, 8, 5.0), Pose::identity(), K);
  CHECK(w.image == src);
  CHECK(count_valid(w.valid) == 64);
}

TEST_CASE("large translation invalidates border pixels") {
  const CameraIntrinsics K(8, 8, 3.5, 3.5);
  const Image src(8, 8, 1, 0.5);
  const WarpedImage w = synthesize_warped_image(src, DepthMap(8, 8, 5.0), Pose::from_translation({2.0, 0, 0}), K);
  // Shift of 8 * 2 / 5 = 3.2 px to the right.
  for (int y = 0; y < 8; ++y) {
    CHECK(w.valid(0, y) != 0);
    CHECK(w.valid(7, y) == 0);
    CHECK(w.valid(4, y) == 0);
    CHECK(w.valid(3, y) != 0);
  }
  CHECK_THROWS_AS(synthesize_warped_image(src, DepthMap(4, 4, 5.0), Pose::identity(), K), RasterError);
}
