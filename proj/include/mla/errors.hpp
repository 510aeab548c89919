#pragma once
#include <stdexcept>

namespace mla {

// A ray bundle that cannot produce a result (every ray vignetted, chief ray
// dead, and similar).
struct TraceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A near-axis ray that never crosses the axis inside the search range.
struct NoFocusError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A focus bracket whose minimum sits on the boundary; widen and retry.
struct BracketError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A fit whose design matrix cannot identify the requested coefficients.
struct RankDeficiencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mla
