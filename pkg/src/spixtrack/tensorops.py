"""Third-order tensor algebra: unfoldings, mode products, truncated HOSVD and
sequential per-mode subspace updates with a forgetting factor.

Tensors are plain float64 ndarrays of shape (d1, d2, d3).  The unfolding
convention is fixed so results are bit-reproducible: mode-m fibers become
columns, with the remaining indices cycling lower-numbered-mode fastest.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ParameterError


def _check_tensor(t) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 3:
        raise ParameterError(f"expected a 3-order tensor, got shape {t.shape}")
    return t


def unfold(t, mode: int) -> np.ndarray:
    """Mode-m unfolding: (d_m, prod of the others), lower free mode fastest."""
    t = _check_tensor(t)
    if mode == 1:
        return t.reshape(t.shape[0], -1, order="F")
    if mode == 2:
        return np.moveaxis(t, 1, 0).reshape(t.shape[1], -1, order="F")
    if mode == 3:
        return np.moveaxis(t, 2, 0).reshape(t.shape[2], -1, order="F")
    raise ParameterError(f"mode must be 1, 2 or 3, got {mode}")


def fold(m, mode: int, dims) -> np.ndarray:
    """Inverse of unfold for a tensor of the given dims (new mode extent from m)."""
    m = np.asarray(m, dtype=np.float64)
    d1, d2, d3 = dims
    if mode == 1:
        return m.reshape((m.shape[0], d2, d3), order="F")
    if mode == 2:
        return np.moveaxis(m.reshape((m.shape[0], d1, d3), order="F"), 0, 1)
    if mode == 3:
        return np.moveaxis(m.reshape((m.shape[0], d1, d2), order="F"), 0, 2)
    raise ParameterError(f"mode must be 1, 2 or 3, got {mode}")


def mode_product(t, m, mode: int) -> np.ndarray:
    """Multiply matrix m onto the given tensor mode (m columns match that extent)."""
    t = _check_tensor(t)
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ParameterError(f"expected a matrix, got shape {m.shape}")
    if mode not in (1, 2, 3):
        raise ParameterError(f"mode must be 1, 2 or 3, got {mode}")
    axis = mode - 1
    if m.shape[1] != t.shape[axis]:
        raise ParameterError(
            f"matrix columns {m.shape[1]} do not match mode-{mode} extent {t.shape[axis]}"
        )
    out = np.tensordot(m, t, axes=([1], [axis]))  # new axis lands in front
    return np.moveaxis(out, 0, axis)


@dataclass(frozen=True)
class SubspaceModel:
    """Mean slice plus orthonormal mode bases and their singular values.

    u1/u2 carry the dominant left singular vectors of the centered mode-1/2
    unfoldings; v3 spans the mode-3 row space.  ``ranks`` is the truncation
    target kept across updates (bases may hold fewer columns early on);
    ``n_obs`` counts absorbed slices and ``n_eff`` is its forgetting-weighted
    counterpart used for mean updates.
    """

    mean: np.ndarray  # (d1, d2)
    u1: np.ndarray  # (d1, r1)
    u2: np.ndarray  # (d2, r2)
    v3: np.ndarray  # (d1*d2, r3)
    sv1: np.ndarray
    sv2: np.ndarray
    sv3: np.ndarray
    ranks: tuple[int, int, int]
    n_obs: int
    n_eff: float

    @property
    def dims(self) -> tuple[int, int]:
        return self.mean.shape

    def with_ranks(self, ranks) -> "SubspaceModel":
        return replace(self, ranks=tuple(ranks))


def empty_model(mean, ranks) -> SubspaceModel:
    """Rank-0 model around a fixed mean slice (projectors are zero maps)."""
    mean = np.asarray(mean, dtype=np.float64)
    d1, d2 = mean.shape
    return SubspaceModel(
        mean=mean,
        u1=np.zeros((d1, 0)),
        u2=np.zeros((d2, 0)),
        v3=np.zeros((d1 * d2, 0)),
        sv1=np.zeros(0),
        sv2=np.zeros(0),
        sv3=np.zeros(0),
        ranks=tuple(ranks),
        n_obs=0,
        n_eff=0.0,
    )


def hosvd(t, ranks) -> SubspaceModel:
    """Truncated per-mode SVD of the mean-centered tensor.

    The mean is the average over mode-3 slices; u1/u2 are top left singular
    vectors of the centered mode-1/2 unfoldings and v3 holds top right
    singular vectors of the centered mode-3 unfolding.
    """
    t = _check_tensor(t)
    d1, d2, d3 = t.shape
    r1, r2, r3 = ranks
    for r, d, name in ((r1, d1, "r1"), (r2, d2, "r2"), (r3, d3, "r3")):
        if not 1 <= r <= d:
            raise ParameterError(f"{name}={r} outside [1, {d}]")

    mean = t.mean(axis=2)
    tc = t - mean[:, :, None]
    u1, s1, _ = np.linalg.svd(unfold(tc, 1), full_matrices=False)
    u2, s2, _ = np.linalg.svd(unfold(tc, 2), full_matrices=False)
    _, s3, vt3 = np.linalg.svd(unfold(tc, 3), full_matrices=False)
    return SubspaceModel(
        mean=mean,
        u1=u1[:, :r1].copy(),
        u2=u2[:, :r2].copy(),
        v3=vt3[:r3].T.copy(),
        sv1=s1[:r1].copy(),
        sv2=s2[:r2].copy(),
        sv3=s3[:r3].copy(),
        ranks=(r1, r2, r3),
        n_obs=d3,
        n_eff=float(d3),
    )


def incremental_update(model: SubspaceModel, batch, forgetting: float = 1.0) -> SubspaceModel:
    """Absorb a (d1, d2, u) batch into the model (sequential Karhunen-Loeve).

    The running mean is forgetting-weighted; each mode augments its retained
    basis-times-singular-values with the batch's centered unfolding plus the
    mean-shift correction block, then truncates the SVD of the augmented
    matrix back to the configured rank.  With forgetting 1 and ranks covering
    every nonzero singular value this reproduces the batch HOSVD of the
    concatenated data exactly.
    """
    batch = _check_tensor(batch)
    d1, d2, u = batch.shape
    if (d1, d2) != model.dims:
        raise ParameterError(
            f"batch slice dims {(d1, d2)} do not match model dims {model.dims}"
        )
    if not 0.0 < forgetting <= 1.0:
        raise ParameterError(f"forgetting must lie in (0, 1], got {forgetting}")
    r1, r2, r3 = model.ranks

    f_n = forgetting * model.n_eff
    batch_mean = batch.mean(axis=2)
    denom = f_n + u
    new_mean = (f_n * model.mean + u * batch_mean) / denom
    w_corr = np.sqrt(f_n * u / denom)
    mean_shift = model.mean - batch_mean  # (d1, d2)

    centered = batch - batch_mean[:, :, None]

    aug1 = np.hstack(
        [model.u1 * (forgetting * model.sv1), unfold(centered, 1), w_corr * mean_shift]
    )
    u1, s1, _ = np.linalg.svd(aug1, full_matrices=False)

    aug2 = np.hstack(
        [model.u2 * (forgetting * model.sv2), unfold(centered, 2), w_corr * mean_shift.T]
    )
    u2, s2, _ = np.linalg.svd(aug2, full_matrices=False)

    aug3 = np.vstack(
        [
            (forgetting * model.sv3)[:, None] * model.v3.T,
            unfold(centered, 3),
            w_corr * mean_shift.ravel(order="F")[None, :],
        ]
    )
    _, s3, vt3 = np.linalg.svd(aug3, full_matrices=False)

    return SubspaceModel(
        mean=new_mean,
        u1=u1[:, :r1].copy(),
        u2=u2[:, :r2].copy(),
        v3=vt3[:r3].T.copy(),
        sv1=s1[:r1].copy(),
        sv2=s2[:r2].copy(),
        sv3=s3[:r3].copy(),
        ranks=model.ranks,
        n_obs=model.n_obs + u,
        n_eff=denom,
    )


def subspace_angles_max(a: np.ndarray, b: np.ndarray) -> float:
    """Largest principal angle (radians) between two orthonormal column spans.

    Computed from the residual of projecting one basis onto the other
    (sin of the angle), which stays accurate for tiny angles where the
    cosine form saturates.
    """
    if a.shape != b.shape:
        raise ParameterError(f"subspace shapes differ: {a.shape} vs {b.shape}")
    if a.shape[1] == 0:
        return 0.0
    resid = a - b @ (b.T @ a)
    sines = np.linalg.svd(resid, compute_uv=False)
    return float(np.arcsin(np.clip(sines.max(), -1.0, 1.0)))
