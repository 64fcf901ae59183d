"""Random-walk particle motion over 6-parameter affine states.

Candidates are drawn i.i.d. from a diagonal Gaussian centred on the previous
best state; every particle is re-drawn fresh each frame, so the prior factor
is uniform across particles and the MAP estimate reduces to the argmax of the
observation log-likelihood.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidStateError, ParameterError

# floor applied to scale/aspect when redraws keep violating positivity
_POSITIVITY_FLOOR = 1e-6
_MAX_REDRAWS = 100


@dataclass(frozen=True)
class AffineState:
    """Target pose: translation, rotation, area scale, aspect ratio, skew."""

    x: float
    y: float
    theta: float = 0.0
    scale: float = 1.0
    aspect: float = 1.0
    skew: float = 0.0

    def __post_init__(self):
        vals = (self.x, self.y, self.theta, self.scale, self.aspect, self.skew)
        if not all(np.isfinite(v) for v in vals):
            raise InvalidStateError(f"non-finite affine state: {vals}")
        if self.scale <= 0 or self.aspect <= 0:
            raise InvalidStateError(
                f"scale and aspect must be positive, got scale={self.scale} "
                f"aspect={self.aspect}"
            )

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.x, self.y, self.theta, self.scale, self.aspect, self.skew],
            dtype=np.float64,
        )

    @staticmethod
    def from_array(a) -> "AffineState":
        a = np.asarray(a, dtype=np.float64)
        return AffineState(a[0], a[1], a[2], a[3], a[4], a[5])


@dataclass(frozen=True)
class NoiseSpec:
    """Per-parameter standard deviations of the random walk."""

    sigma_x: float = 4.0
    sigma_y: float = 4.0
    sigma_theta: float = 0.02
    sigma_scale: float = 0.01
    sigma_aspect: float = 0.002
    sigma_skew: float = 0.001

    def __post_init__(self):
        if any(s < 0 for s in self.as_array()):
            raise ParameterError("noise sigmas must be nonnegative")

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                self.sigma_x,
                self.sigma_y,
                self.sigma_theta,
                self.sigma_scale,
                self.sigma_aspect,
                self.sigma_skew,
            ],
            dtype=np.float64,
        )


@dataclass
class ParticleSet:
    """States as a (b, 6) array plus per-particle log weights."""

    states: np.ndarray
    log_weights: np.ndarray

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=np.float64)
        self.log_weights = np.asarray(self.log_weights, dtype=np.float64)
        if self.states.ndim != 2 or self.states.shape[1] != 6:
            raise ParameterError("states must have shape (b, 6)")
        if len(self.states) != len(self.log_weights) or len(self.states) == 0:
            raise ParameterError("states and log_weights must match and be nonempty")

    def __len__(self):
        return len(self.states)

    def state(self, i: int) -> AffineState:
        return AffineState.from_array(self.states[i])


def propagate(anchor: AffineState, b: int, noise: NoiseSpec, rng_seed: int) -> ParticleSet:
    """Draw b particles from the diagonal Gaussian centred on ``anchor``.

    Particles with nonpositive scale or aspect are redrawn (up to 100 rounds),
    then clamped to a small positive floor so the positivity invariant always
    holds.  Log weights start at zero; the caller fills them in.
    """
    if b < 1:
        raise ParameterError(f"particle count must be >= 1, got {b}")
    rng = np.random.default_rng(rng_seed)
    sigmas = noise.as_array()
    states = anchor.as_array()[None, :] + sigmas[None, :] * rng.standard_normal((b, 6))
    bad = (states[:, 3] <= 0) | (states[:, 4] <= 0)
    for _ in range(_MAX_REDRAWS):
        if not bad.any():
            break
        n_bad = int(bad.sum())
        states[bad] = anchor.as_array()[None, :] + sigmas[None, :] * rng.standard_normal(
            (n_bad, 6)
        )
        bad = (states[:, 3] <= 0) | (states[:, 4] <= 0)
    states[:, 3] = np.maximum(states[:, 3], _POSITIVITY_FLOOR)
    states[:, 4] = np.maximum(states[:, 4], _POSITIVITY_FLOOR)
    return ParticleSet(states=states, log_weights=np.zeros(b))


def map_estimate(particles: ParticleSet) -> tuple[AffineState, float]:
    """Return the particle with the largest log weight (ties: lowest index)."""
    if len(particles) == 0:
        raise ParameterError("empty particle set")
    idx = int(np.argmax(particles.log_weights))
    return particles.state(idx), float(particles.log_weights[idx])
