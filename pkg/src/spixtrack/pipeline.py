"""Shared per-candidate processing: warp, segment, histogram, sparse-encode.

Both candidate scoring and negative-sample harvesting run this chain; the
LASSO step is batched across every superpixel of every state in one call,
which is where most of the per-frame time goes.  With ``workers > 1`` the
state list is chunked across a process pool (the per-frame candidate loop is
an embarrassingly parallel map); results are gathered in submission order, so
runs are reproducible for a fixed worker count.
"""

from __future__ import annotations

import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import snic
from .coding import CD_MAX_SWEEPS, CD_TOL, POLISH_ROUNDS, Dictionary, sparse_encode_batch
from .features import patch_feature_batch
from .media import ImageRGB, extract_template
from .motion import AffineState

_EXECUTORS: dict[int, ProcessPoolExecutor] = {}


def _worker_init():
    # worker GEMMs must not multiply the process count into BLAS threads
    try:
        from threadpoolctl import threadpool_limits

        threadpool_limits(1)
    except ImportError:
        pass


def _get_executor(workers: int) -> ProcessPoolExecutor:
    ex = _EXECUTORS.get(workers)
    if ex is None:
        try:
            ctx = multiprocessing.get_context("fork")
        except ValueError:
            ctx = multiprocessing.get_context()
        ex = ProcessPoolExecutor(
            max_workers=workers, mp_context=ctx, initializer=_worker_init
        )
        _EXECUTORS[workers] = ex
    return ex


def _pool_chunk(payload):
    pipeline, frame_data, states = payload
    return pipeline._pool_states_serial(ImageRGB(frame_data), states)


@dataclass(frozen=True)
class PoolingPipeline:
    """Immutable context turning affine states into (z, s) code slices."""

    dictionary: Dictionary
    template_w: int
    template_h: int
    superpixels: int
    compactness: float
    n_bins: int
    lam: float
    code_tol: float = CD_TOL
    code_max_sweeps: int = CD_MAX_SWEEPS
    code_polish_rounds: int = POLISH_ROUNDS
    workers: int = 1

    def state_features(self, frame: ImageRGB, state: AffineState) -> np.ndarray:
        """Feature matrix (B, s) of one state's template."""
        patch = extract_template(frame, state, self.template_w, self.template_h)
        labels = snic.segment(patch, self.superpixels, self.compactness)
        return patch_feature_batch(patch, labels, self.n_bins)

    def pool_states(self, frame: ImageRGB, states: np.ndarray) -> np.ndarray:
        """Code slices of many states at once, shape (n_states, z, s)."""
        states = np.asarray(states, dtype=np.float64)
        if states.ndim == 1:
            states = states[None, :]
        if self.workers > 1 and len(states) >= 2 * self.workers:
            chunks = np.array_split(states, self.workers)
            futures = [
                _get_executor(self.workers).submit(
                    _pool_chunk, (self, frame.data, chunk)
                )
                for chunk in chunks
            ]
            return np.concatenate([f.result() for f in futures], axis=0)
        return self._pool_states_serial(frame, states)

    def _pool_states_serial(self, frame: ImageRGB, states: np.ndarray) -> np.ndarray:
        n = len(states)
        s = self.superpixels
        feats = np.empty((self.dictionary.n_features, n * s))
        for i in range(n):
            feats[:, i * s : (i + 1) * s] = self.state_features(
                frame, AffineState.from_array(states[i])
            )
        codes = sparse_encode_batch(
            feats,
            self.dictionary,
            self.lam,
            tol=self.code_tol,
            max_sweeps=self.code_max_sweeps,
            polish_rounds=self.code_polish_rounds,
        )
        z = self.dictionary.n_atoms
        return np.moveaxis(codes.reshape(z, n, s), 1, 0)

    def pool_state(self, frame: ImageRGB, state: AffineState) -> np.ndarray:
        """Code slice (z, s) of a single state."""
        return self.pool_states(frame, state.as_array())[0]
