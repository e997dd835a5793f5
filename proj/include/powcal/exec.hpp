#pragma once

namespace powcal {

/// Execution mode for batched kernels. Serial is the straightforward loop
/// kept as the reference implementation; Parallel runs the same elementwise
/// computation under OpenMP and reduces in index order, so both modes return
/// bit-identical results.
enum class Exec { Serial, Parallel };

}  // namespace powcal
