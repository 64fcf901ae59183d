"""Dictionary learning and LASSO sparse coding of superpixel features.

The dictionary is learned once, by k-means over first-frame feature vectors,
and its normalized centroids become unit-norm atoms (columns of a B x z
matrix).  Codes minimize ||a - D h||^2 + lambda * ||h||_1 by cyclic coordinate
descent with soft thresholding; the batch solver runs many columns at once
with identical per-column iterates, dropping columns as they converge.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, ParameterError
from .features import patch_feature_batch
from .media import Patch
from .snic import LabelMap

CD_TOL = 1e-8
CD_MAX_SWEEPS = 1000
POLISH_ROUNDS = 50
_POLISH_KKT_TOL = 1e-10
KMEANS_TOL = 1e-6
KMEANS_MAX_ITER = 100


@dataclass(frozen=True)
class Dictionary:
    """Unit-norm atoms as columns of a (B, z) matrix."""

    atoms: np.ndarray

    def __post_init__(self):
        a = self.atoms
        if a.ndim != 2 or a.shape[1] < 1:
            raise ParameterError(f"atoms must be a (B, z) matrix, got {a.shape}")
        norms = np.linalg.norm(a, axis=0)
        if np.abs(norms - 1.0).max() > 1e-10:
            raise ParameterError("every atom must have unit Euclidean norm")

    @property
    def n_features(self) -> int:
        return self.atoms.shape[0]

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[1]


def _kmeans_plusplus(x: np.ndarray, z: int, rng: np.random.Generator) -> np.ndarray:
    n = len(x)
    centers = np.empty((z, x.shape[1]))
    first = int(rng.integers(n))
    centers[0] = x[first]
    d2 = ((x - centers[0]) ** 2).sum(axis=1)
    for j in range(1, z):
        total = d2.sum()
        if total <= 0.0:
            # all remaining points coincide with a chosen center
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=d2 / total))
        centers[j] = x[idx]
        d2 = np.minimum(d2, ((x - centers[j]) ** 2).sum(axis=1))
    return centers


def learn_dictionary(samples, z: int, rng_seed: int) -> Dictionary:
    """k-means the sample vectors into z clusters and normalize the centroids.

    Lloyd iterations run until the largest centroid movement drops below 1e-6
    or 100 iterations pass; empty clusters are reseeded to the sample farthest
    from its assigned center.  Deterministic for a fixed seed.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 2:
        raise ParameterError(f"samples must form an (N, B) matrix, got {x.shape}")
    n = len(x)
    if z < 1:
        raise ParameterError(f"z must be >= 1, got {z}")
    if n < z:
        raise ParameterError(f"need at least z={z} samples, got {n}")
    rng = np.random.default_rng(rng_seed)
    centers = _kmeans_plusplus(x, z, rng)

    x_sq = (x**2).sum(axis=1)
    for _ in range(KMEANS_MAX_ITER):
        d2 = x_sq[:, None] - 2.0 * x @ centers.T + (centers**2).sum(axis=1)[None, :]
        assign = np.argmin(d2, axis=1)
        new_centers = centers.copy()
        counts = np.bincount(assign, minlength=z)
        sums = np.zeros_like(centers)
        np.add.at(sums, assign, x)
        nonempty = counts > 0
        new_centers[nonempty] = sums[nonempty] / counts[nonempty, None]

        if (~nonempty).any():
            # reseed each empty cluster to the currently worst-fit sample
            fit = d2[np.arange(n), assign].copy()
            for j in np.flatnonzero(~nonempty):
                far = int(np.argmax(fit))
                new_centers[j] = x[far]
                fit[far] = -np.inf

        movement = np.linalg.norm(new_centers - centers, axis=1).max()
        centers = new_centers
        if movement < KMEANS_TOL:
            break

    norms = np.linalg.norm(centers, axis=1)
    degenerate = norms <= 0.0
    if degenerate.any():
        centers[degenerate] = 0.0
        centers[degenerate, 0] = 1.0
        norms[degenerate] = 1.0
    return Dictionary(atoms=(centers / norms[:, None]).T)


def sparse_encode_batch(
    a: np.ndarray,
    dictionary: Dictionary,
    lam: float,
    tol: float = CD_TOL,
    max_sweeps: int = CD_MAX_SWEEPS,
    polish_rounds: int = POLISH_ROUNDS,
) -> np.ndarray:
    """Solve the LASSO for every column of ``a`` (a (B, N) matrix) at once.

    Cyclic coordinate descent, zero-initialized; a column stops iterating as
    soon as its own largest coordinate change falls below ``tol``, exactly as
    the single-vector solver would.  Coordinate-change stopping alone can
    leave coherent instances short of true optimality, so converged codes are
    refined by exact solves on their (sign-fixed) supports until the
    subgradient conditions hold; see ``_polish_batch``.  Returns the (z, N)
    code matrix.
    """
    if lam < 0:
        raise ParameterError(f"lambda must be nonnegative, got {lam}")
    a = np.asarray(a, dtype=np.float64)
    squeeze = a.ndim == 1
    if squeeze:
        a = a[:, None]
    if not np.isfinite(a).all():
        raise InvalidInputError("feature vectors contain non-finite values")
    d = dictionary.atoms
    if a.shape[0] != d.shape[0]:
        raise ParameterError(
            f"feature length {a.shape[0]} does not match dictionary {d.shape[0]}"
        )
    z = d.shape[1]
    n = a.shape[1]
    thresh = lam / 2.0

    # covariance form: Gauss-Seidel sweeps touch only the z x z Gram matrix
    # and the code matrix, instead of streaming the (B, N) residual per atom
    gram = d.T @ d
    diag = np.diag(gram).copy()
    c = d.T @ a  # (z, N)

    h_out = np.zeros((z, n))
    h = np.zeros((z, n))
    active = np.arange(n)  # original indices of the working columns
    alive = np.ones(n, dtype=bool)  # frozen columns stop moving immediately
    delta_buf = np.empty((z, n))
    for _ in range(max_sweeps):
        width = h.shape[1]
        q = gram @ h  # correlations at sweep start
        changed: list[int] = []
        max_delta = np.zeros(width)
        for j in range(z):
            nj = diag[j]
            if nj == 0.0:
                continue
            rho = c[j] - q[j] + nj * h[j]
            if changed:
                # fold in the coordinates already updated this sweep
                rho -= gram[j, changed] @ delta_buf[: len(changed)]
            hj = np.sign(rho) * np.maximum(np.abs(rho) - thresh, 0.0) / nj
            delta = np.where(alive, hj - h[j], 0.0)
            if (delta != 0.0).any():
                delta_buf[len(changed)] = delta
                changed.append(j)
                h[j] += delta
            np.maximum(max_delta, np.abs(delta), out=max_delta)
        alive &= max_delta >= tol
        n_alive = int(alive.sum())
        if n_alive == 0:
            break
        if n_alive < 0.7 * width:
            # park the converged columns and keep only live ones in play
            done = ~alive
            h_out[:, active[done]] = h[:, done]
            active = active[alive]
            h = h[:, alive].copy()
            c = c[:, alive].copy()
            delta_buf = np.empty((z, n_alive))
            alive = np.ones(n_alive, dtype=bool)
    h_out[:, active] = h
    if polish_rounds > 0:
        _polish_batch(a, d, gram, lam, h_out, polish_rounds)
    return h_out[:, 0] if squeeze else h_out


def _polish_batch(a, d, gram, lam, h, max_rounds):
    """Refine codes in place by exact solves on sign-fixed supports.

    Each round: drop columns already satisfying the subgradient conditions,
    activate the worst-violating zero coordinate of the rest, group columns by
    their (support, sign) signature, solve each group's restricted normal
    equations in one least-squares call, and accept the result directly when
    signs hold or via a zero-crossing line search when they flip.  Updates are
    only ever accepted when they do not increase the objective, so the loop is
    a descent method; support changes are finite and in practice a handful of
    rounds reach machine-level optimality.
    """
    c = d.T @ a if a.ndim == 2 else (d.T @ a)[:, None]
    half = lam / 2.0
    diag_gram = np.diag(gram)
    n = h.shape[1]
    pending = np.arange(n)
    for _ in range(max_rounds):
        grad_half = gram @ h[:, pending] - c[:, pending]  # half-gradient
        codes = h[:, pending]
        nonzero = codes != 0.0
        viol_on = np.abs(grad_half + half * np.sign(codes)) * nonzero
        viol_off = np.maximum(np.abs(grad_half) - half, 0.0) * ~nonzero
        kkt = np.maximum(viol_on, viol_off).max(axis=0) if len(pending) else np.zeros(0)
        scale = np.maximum(1.0, np.abs(c[:, pending]).max(axis=0)) if len(pending) else 1.0
        keep = kkt > _POLISH_KKT_TOL * scale
        pending = pending[keep]
        if len(pending) == 0:
            break
        grad_half = grad_half[:, keep]
        signs = np.sign(h[:, pending]).astype(np.int8)
        support_clean = (viol_on[:, keep] <= _POLISH_KKT_TOL * scale[keep]).all(axis=0)
        # grow the support only once the current one is internally optimal
        # (activating earlier livelocks: the new coordinate keeps winning the
        # round while the unresolved support violation never gets re-solved);
        # the activated coordinate takes its exact descent step immediately so
        # later sign-fixed solves see a true interior point
        off_viol = np.where(signs == 0, np.abs(grad_half) - half, -np.inf)
        worst = np.argmax(off_viol, axis=0)
        cols = np.arange(len(pending))
        has_off = (
            support_clean
            & (off_viol[worst, cols] > 0.0)
            & (diag_gram[worst] > 0.0)
        )
        act_j = worst[has_off]
        act_cols = cols[has_off]
        rho = -grad_half[act_j, act_cols]
        val = np.sign(rho) * np.maximum(np.abs(rho) - half, 0.0) / diag_gram[act_j]
        h[act_j, pending[act_cols]] = val
        signs[act_j, act_cols] = np.sign(val).astype(np.int8)

        _, group_ids = np.unique(signs, axis=1, return_inverse=True)
        for gid in range(group_ids.max() + 1):
            cols = np.flatnonzero(group_ids == gid)
            sig = signs[:, cols[0]]
            support = np.flatnonzero(sig)
            col_idx = pending[cols]
            if len(support) == 0:
                h[:, col_idx] = 0.0
                continue
            g_ss = gram[np.ix_(support, support)]
            rhs = c[np.ix_(support, col_idx)] - half * sig[support, None]
            sol, *_ = np.linalg.lstsq(g_ss, rhs, rcond=None)
            # a nonzero lstsq residual means the restricted problem has no
            # stationary point on this support: the objective descends
            # linearly along a null direction of the support atoms until a
            # coordinate crosses zero and leaves the support
            null_part = rhs - g_ss @ sol
            inconsistent = np.abs(null_part).max(axis=0) > 1e-11 * np.maximum(
                1.0, np.abs(rhs).max(axis=0)
            )
            if inconsistent.any():
                for k in np.flatnonzero(inconsistent):
                    _null_descent_column(
                        a, d, lam, h, int(col_idx[k]), support, null_part[:, k]
                    )
            consistent = ~inconsistent
            if consistent.any():
                _accept_or_line_search(
                    a, d, lam, h, col_idx[consistent], support, sol[:, consistent]
                )


def _lasso_objective_cols(a, d, lam, h_cols, col_idx):
    r = a[:, col_idx] - d @ h_cols
    return (r * r).sum(axis=0) + lam * np.abs(h_cols).sum(axis=0)


def _accept_or_line_search(a, d, lam, h, col_idx, support, sol):
    """Move columns toward their restricted solutions without ascent.

    Columns whose proposed support values keep (or shrink) their signs adopt
    the solution outright when it does not increase the objective; columns
    with sign flips evaluate the objective at every zero-crossing along the
    segment and keep the best point, zeroing crossed coordinates exactly.
    """
    if a.ndim == 1:
        a = a[:, None]
    old = h[np.ix_(support, col_idx)]
    obj_old = _lasso_objective_cols(a, d, lam, _expand(h, support, old, col_idx), col_idx)
    obj_new = _lasso_objective_cols(a, d, lam, _expand(h, support, sol, col_idx), col_idx)
    flipped = ((old * sol) < 0.0).any(axis=0)
    direct = ~flipped & (obj_new <= obj_old + 1e-15 * np.maximum(1.0, obj_old))
    if direct.any():
        cols = col_idx[direct]
        h[:, cols] = 0.0
        h[np.ix_(support, cols)] = sol[:, direct]
    for k in np.flatnonzero(~direct):
        _line_search_column(a, d, lam, h, int(col_idx[k]), support, old[:, k], sol[:, k])


def _expand(h, support, values, col_idx):
    out = np.zeros((h.shape[0], len(col_idx)))
    out[support] = values
    return out


def _null_descent_column(a, d, lam, h, col, support, direction):
    """Walk along a support null direction to the first zero crossing.

    ``direction`` is the lstsq residual, which lies in the null space of the
    support Gram (and of the support atoms), so the quadratic term is constant
    and the objective falls linearly until a coordinate hits zero.
    """
    old = h[support, col]
    moving = direction != 0.0
    if not moving.any():
        return
    t = np.where(moving & (old * direction < 0.0), -old / np.where(moving, direction, 1.0), np.inf)
    t_star = t.min()
    if not np.isfinite(t_star) or t_star <= 0.0:
        return
    point = old + t_star * direction
    point[np.abs(point) < 1e-14 * np.maximum(1.0, np.abs(old))] = 0.0
    full = np.zeros(h.shape[0])
    full[support] = point
    cols = np.array([col])
    if a.ndim == 1:
        a = a[:, None]
    obj_new = _lasso_objective_cols(a, d, lam, full[:, None], cols)[0]
    obj_old = _lasso_objective_cols(a, d, lam, _expand(h, support, old[:, None], cols), cols)[0]
    if obj_new < obj_old - 1e-15:
        h[:, col] = full


def _line_search_column(a, d, lam, h, col, support, old, new):
    diff = new - old
    crossing = np.zeros(0)
    moving = diff != 0.0
    if moving.any():
        t = -old[moving] / diff[moving]
        crossing = t[(t > 0.0) & (t < 1.0)]
    candidates = np.unique(np.concatenate([crossing, [1.0]]))
    full_old = np.zeros(h.shape[0])
    full_old[support] = old
    best_obj = _lasso_objective_cols(a, d, lam, full_old[:, None], np.array([col]))[0]
    best = None
    for t in candidates:
        point = old + t * diff
        point[np.abs(point) < 1e-15] = 0.0
        full = np.zeros(h.shape[0])
        full[support] = point
        obj = _lasso_objective_cols(a, d, lam, full[:, None], np.array([col]))[0]
        if obj < best_obj - 1e-15:
            best_obj = obj
            best = full
    if best is not None:
        h[:, col] = best


def sparse_encode(a, dictionary: Dictionary, lam: float) -> np.ndarray:
    """LASSO code of a single feature vector (length-z array)."""
    return sparse_encode_batch(a, dictionary, lam)


def lasso_objective(a, dictionary: Dictionary, h, lam: float) -> float:
    a = np.asarray(a, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    r = a - dictionary.atoms @ h
    return float(r @ r + lam * np.abs(h).sum())


def pool_candidate(
    patch: Patch, labels: LabelMap, dictionary: Dictionary, lam: float, n_bins: int
) -> np.ndarray:
    """Sparse codes of every superpixel, assembled into a (z, s) slice.

    Columns follow the seed-grid raster order of the label map, so equal
    slots across candidates occupy the same tensor position.
    """
    feats = patch_feature_batch(patch, labels, n_bins)
    return sparse_encode_batch(feats, dictionary, lam)


def save_dictionary(dictionary: Dictionary, path) -> None:
    """Persist atoms to ``path``: text matrix for .txt, else raw binary.

    The binary layout is z rows of B little-endian float64 values (one atom
    per row, row-major), so a run can be reproduced elsewhere.
    """
    p = Path(path)
    rows = np.ascontiguousarray(dictionary.atoms.T)
    if p.suffix == ".txt":
        np.savetxt(p, rows, fmt="%.17g")
    else:
        rows.astype("<f8").tofile(p)


def load_dictionary(path, z: int | None = None) -> Dictionary:
    """Load a dictionary written by save_dictionary.

    Text files carry their own shape; raw binary files need the atom count z.
    """
    p = Path(path)
    if p.suffix == ".txt":
        rows = np.loadtxt(p, dtype=np.float64, ndmin=2)
    else:
        if z is None:
            raise ParameterError("binary dictionary files require the atom count z")
        flat = np.fromfile(p, dtype="<f8")
        if z < 1 or flat.size % z != 0:
            raise ParameterError(
                f"file of {flat.size} values does not divide into z={z} atoms"
            )
        rows = flat.reshape(z, flat.size // z)
    return Dictionary(atoms=rows.T.copy())
