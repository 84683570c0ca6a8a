#pragma once

#include "selfnerf/camera.hpp"
#include "selfnerf/image.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace selfnerf {

struct View {
  Camera camera;
  Image image;
  std::string name;
};

struct SceneDataset {
  std::string name;
  std::string split;
  Real near = 2.0;
  Real far = 6.0;
  std::vector<View> views;
  /// Views not selected by select_few_shot; ground truth for evaluation.
  std::vector<View> held_out;
};

/// Raised for malformed scene files; message carries file and location.
class DatasetError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Reads `transforms_<split>.json` (camera_angle_x plus per-frame
/// file_path / 4x4 transform_matrix) and the referenced PNGs. Poses are
/// world-from-camera in the -z-forward convention; focal = 0.5 W / tan(0.5
/// camera_angle_x). RGBA images are composited onto `background`.
SceneDataset load_nerf_synthetic(const std::filesystem::path &dir, const std::string &split, Real near = 2.0,
                                 Real far = 6.0, Real background = 1.0);

/// Writes the same layout (images as 8-bit RGB PNG under ./<split>/).
void write_nerf_synthetic(const std::filesystem::path &dir, const std::string &split,
                          const std::vector<View> &views);

/// Deterministic k-subset; the remaining views move to `held_out`.
SceneDataset select_few_shot(const SceneDataset &dataset, std::size_t k, std::uint64_t seed);

Real focal_from_fov(Real camera_angle_x, int width);
Real fov_from_focal(Real focal, int width);

} // namespace selfnerf
