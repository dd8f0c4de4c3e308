#pragma once

// Scalar type of the graph engine. The libraries are normally built with
// double. Defining ADSEP_EXTENDED_REAL builds a long double variant whose
// symbols live in a separate inline namespace, so both can be linked into one
// program; tests use it as a low-noise finite-difference oracle.
#ifdef ADSEP_EXTENDED_REAL
#define ADSEP_REAL_NS extended
#else
#define ADSEP_REAL_NS standard
#endif

namespace adsep::graph::inline ADSEP_REAL_NS {

#ifdef ADSEP_EXTENDED_REAL
using Real = long double;
#else
using Real = double;
#endif

}  // namespace adsep::graph::inline ADSEP_REAL_NS
