#pragma once

#include "selfnerf/field.hpp"
#include "selfnerf/optimizer.hpp"

#include <filesystem>
#include <stdexcept>

namespace selfnerf {

struct Checkpoint {
  FieldParams params;
  AdamState adam;
};

class CheckpointError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Binary layout, little-endian:
///   char[8] "SNCKPT01", uint32 version,
///   uint64 n + n bytes of FieldConfig JSON,
///   uint64 count + count float64 parameters,
///   uint64 adam step, uint64 m count + values, uint64 v count + values.
/// Doubles are stored verbatim, so a round trip is bit-exact.
void save_checkpoint(const std::filesystem::path &path, const FieldParams &params, const AdamState &adam);
Checkpoint load_checkpoint(const std::filesystem::path &path);

/// JSON form of the field configuration shared by checkpoints and run configs.
std::string field_config_to_json(const FieldConfig &cfg);
FieldConfig field_config_from_json(const std::string &text);

} // namespace selfnerf
