"""Counter-based noise streams for reproducible parallel Monte Carlo.

Every Gaussian kick consumed by an integrator is addressed by the triple
(master seed, lane id, step index), where a lane is a particle or a Brownian
path.  Draws are random-access: the value for one lane never depends on which
other lanes are alive or on the order in which workers process them, so runs
are bit-reproducible under any scheduling.
"""

import numpy as np

_INV_2_53 = 2.0 ** -53
_TWO_PI = 2.0 * np.pi


def _raw_block(seed, step, n_words):
    # One Philox stream per (seed, step); lanes index into it by position.
    key = np.array([np.uint64(seed), np.uint64(0)], dtype=np.uint64)
    counter = np.array([0, 0, np.uint64(step), 0], dtype=np.uint64)
    bg = np.random.Philox(counter=counter, key=key)
    return bg.random_raw(n_words)


def uniform_pairs(seed, ids, step, n_lanes=None):
    """Two uniforms in (0, 1) per lane id, keyed by (seed, id, step)."""
    ids = np.asarray(ids, dtype=np.intp)
    if n_lanes is None:
        n_lanes = int(ids.max()) + 1 if ids.size else 0
    raw = _raw_block(seed, step, 2 * n_lanes)
    w0 = raw[2 * ids]
    w1 = raw[2 * ids + 1]
    u0 = ((w0 >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53
    u1 = ((w1 >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53
    return u0, u1


def normal_pairs(seed, ids, step, n_lanes=None):
    """One 2-vector of independent standard normals per lane id.

    Parameters
    ----------
    seed : int
        Master seed of the run.
    ids : array of int
        Lane ids (particle or path ids) to draw for.  Draws for an id are
        identical whether it is requested alone or together with others.
    step : int
        Time step index.
    n_lanes : int, optional
        Total number of lanes in the run (= max id + 1).  Passing it avoids
        recomputing from ``ids`` and keeps subset requests aligned.

    Returns
    -------
    (len(ids), 2) float64 array of N(0, 1) samples.
    """
    u0, u1 = uniform_pairs(seed, ids, step, n_lanes)
    r = np.sqrt(-2.0 * np.log(u0))
    th = _TWO_PI * u1
    return np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)
