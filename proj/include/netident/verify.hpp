#pragma once

#include <ostream>

namespace netident {

/// Fast end-to-end property suite behind the CLI `verify` verb: closed-form
/// probe-matrix inverse, exact recovery on linear systems, the rigidity
/// guarantee, restricted-probing rank, disturbance containment and rerun
/// determinism. Prints one pass/fail line per property; returns true when
/// everything passed.
bool run_verification(std::ostream& out);

}  // namespace netident
