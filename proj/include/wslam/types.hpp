#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace wslam {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using VecX = Eigen::VectorXd;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using MatX = Eigen::MatrixXd;
using Quat = Eigen::Quaterniond;

using FrameIndex = int;
using KeyframeId = int;
using TrackId = std::int64_t;

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// geometry
struct DegenerateConfiguration : Error { using Error::Error; };
struct InsufficientInliers : Error { using Error::Error; };
struct LowParallax : Error { using Error::Error; };
struct BehindCamera : Error { using Error::Error; };
struct DegenerateSet : Error { using Error::Error; };

struct CheiralityTie : Error {
  // All four (R, t) candidates from the essential decomposition, kept so the
  // caller can inspect what failed to disambiguate.
  std::array<std::pair<Mat3, Vec3>, 4> candidates;
  explicit CheiralityTie(const std::string& msg) : Error(msg) {}
};

// tracking
struct EmptyImage : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct NonContiguousFrame : Error { using Error::Error; };

// view graph
struct DisconnectedGraph : Error { using Error::Error; };
struct InsufficientKeyframes : Error { using Error::Error; };
struct NoSharedTracks : Error { using Error::Error; };

// averaging
struct Disconnected : Error { using Error::Error; };
struct Underconstrained : Error { using Error::Error; };

// bundle
struct NoTriangulablePoints : Error { using Error::Error; };
struct SingularNormalEquations : Error { using Error::Error; };
struct NoAnchors : Error { using Error::Error; };

// eval
struct EmptyVisibility : Error { using Error::Error; };
struct NoAssociations : Error { using Error::Error; };

// files / cli
struct IoError : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

// 64-bit mix used to derive per-task RNG streams from (seed, a, b) so results
// do not depend on scheduling or iteration order.
inline std::uint64_t hash_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  auto mix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  return mix(mix(mix(seed) ^ a) ^ b);
}

}  // namespace wslam
