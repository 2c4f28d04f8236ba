"""Network identification for diffusively-coupled systems.

Thin wrapper over the compiled extension; see the project README for the
scenario schema and the CLI.
"""

from ._core import (  # noqa: F401
    __version__,
    delta_w_inverse_apply,
    estimate_reachable_rank,
    incidence_matrix,
    preset_scenario,
    random_graph,
    rigidity_threshold,
    run_scenario_json,
    weighted_laplacian,
)
