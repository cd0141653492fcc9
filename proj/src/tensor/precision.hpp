#pragma once

// The engine and the networks are compiled once in single precision for
// training and inference, and once more in double precision (with
// FOCUSFUSE_F64 defined) for the finite-difference gradient suite. The two
// builds live in different inline namespaces so they can share a binary.
#ifdef FOCUSFUSE_F64
#define FOCUSFUSE_PRECISION f64
#else
#define FOCUSFUSE_PRECISION f32
#endif

namespace focusfuse {
inline namespace FOCUSFUSE_PRECISION {
#ifdef FOCUSFUSE_F64
using real = double;
#else
using real = float;
#endif
}  // namespace FOCUSFUSE_PRECISION
}  // namespace focusfuse
