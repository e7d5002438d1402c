#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lmsc {

// Element type of all tensor buffers. Verification tests assume the
// 64-bit build (the default); configure with -DLMSC_FLOAT32=ON for 32-bit.
#ifdef LMSC_SCALAR_FLOAT32
using scalar = float;
#else
using scalar = double;
#endif

// Accumulator type for reductions; kept at the widest precision so that
// long sums do not drift when scalar is 32-bit.
using accum = double;

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct GeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// SplitMix64; used to derive independent per-(seed, epoch, sample) RNG
// streams so augmentation does not depend on iteration order.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    return mix64(mix64(seed ^ mix64(a)) ^ mix64(b + 0x51ed2701ULL));
}

} // namespace lmsc
