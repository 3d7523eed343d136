#pragma once

#include <optional>
#include <string>

#include "seqsel/qnet.hpp"

namespace seqsel {

struct Checkpoint {
  QNetParams params;
  std::optional<OptState<float>> opt;
  long long epoch = 0;
};

/// Write manifest.json + params.bin (+ opt.bin when optimizer state is
/// given) into `dir`, creating it if needed. Tensors are concatenated
/// row-major as little-endian 32-bit floats in manifest order; opt.bin holds
/// all first moments followed by all second moments with the same layout.
void save_checkpoint(const std::string& dir, const QNetParams& params,
                     const OptState<float>* opt, long long epoch);

Checkpoint load_checkpoint(const std::string& dir);

}  // namespace seqsel
