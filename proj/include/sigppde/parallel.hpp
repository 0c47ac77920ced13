#pragma once

#include <optional>

namespace sigppde {

// Sets the OpenMP thread count from the request, else SIGPPDE_THREADS, else the runtime default.
// Returns the count in effect. Throws std::invalid_argument on a non-positive request.
int configure_threads(std::optional<int> requested);

}  // namespace sigppde
