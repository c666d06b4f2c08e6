#pragma once

#include <cstdint>

#include "hpfl/dataset.hpp"

namespace hpfl {

// Deterministic stand-in for a handwritten-digit set: ten seeded stroke
// prototypes rendered at 28x28, each sample shifted, intensity-scaled and
// pixel-noised, then quantized to the 8-bit grid. Useful for hermetic tests
// and smoke experiments when the real scans are unavailable.
LabeledSet make_synthetic_digits(int n, std::uint64_t seed);

// Same data as 8-bit IDX tensors (n x 28 x 28 images + n labels).
std::pair<RawTensor, RawTensor> make_synthetic_idx(int n, std::uint64_t seed);

}  // namespace hpfl
