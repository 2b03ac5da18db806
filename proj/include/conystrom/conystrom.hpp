#pragma once

// Umbrella header: the full library surface.

#include "conystrom/counters.hpp"    // IWYU pragma: export
#include "conystrom/matrix.hpp"      // IWYU pragma: export
#include "conystrom/kernels.hpp"     // IWYU pragma: export
#include "conystrom/rng.hpp"         // IWYU pragma: export
#include "conystrom/reference.hpp"   // IWYU pragma: export
#include "conystrom/landmarks.hpp"   // IWYU pragma: export
#include "conystrom/continual.hpp"   // IWYU pragma: export
#include "conystrom/stream.hpp"      // IWYU pragma: export
#include "conystrom/costs.hpp"       // IWYU pragma: export
#include "conystrom/csv.hpp"         // IWYU pragma: export
#include "conystrom/snapshot.hpp"    // IWYU pragma: export
