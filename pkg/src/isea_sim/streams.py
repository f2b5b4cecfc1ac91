"""Counter-based random stream derivation.

Every Monte Carlo trial draws from its own generator, keyed by
``(master_seed, stream_id)`` with ``(point_index, trial_index)`` placed in
the high words of the Philox counter.  Each trial therefore owns a disjoint
2**128 block of the counter space, and results are bit-identical no matter
how trials are chunked across workers or in what order they run.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1

# Stream identifiers.  Scenario synthesis and estimator trials must never
# share a Philox key, so the id spaces are kept apart.
STREAM_TRIALS = 0
STREAM_CENTROIDS = 1001
STREAM_OBSERVATION = 1002
STREAM_EXPECTED_OBS = 1003

# Harness experiments get one stream id each; all pipelines at a given
# (experiment, point, trial) share the stream so comparisons are paired.
EXPERIMENT_STREAMS = {
    "sweep-k": 11,
    "sweep-n": 12,
    "snr-dist": 13,
    "bnorm-dist": 14,
    "bounds": 15,
    "crossing": 16,
    "aloss": 17,
}


def substream(master_seed, stream_id, point_index=0, trial_index=0):
    """Return a ``numpy.random.Generator`` for one (stream, point, trial) cell.

    Args:
        master_seed: experiment-wide seed, any value in [0, 2**64).
        stream_id: purpose tag, see the module-level constants.
        point_index: sweep-point index within the stream.
        trial_index: trial index within the sweep point.
    """
    bitgen = np.random.Philox(
        key=[master_seed & _MASK64, stream_id & _MASK64],
        counter=[0, 0, trial_index & _MASK64, point_index & _MASK64],
    )
    return np.random.Generator(bitgen)
