"""Tracker configuration and the flat key-value config file format."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import ParameterError
from .motion import NoiseSpec


@dataclass(frozen=True)
class TrackerConfig:
    """Every tunable of the tracker; defaults follow the reference setup."""

    template_w: int = 32
    template_h: int = 32
    superpixels: int = 30
    compactness: float = 20.0
    bins: int = 8
    dictionary_size: int = 50
    lam: float = 0.01
    particles: int = 600
    negatives: int = 200
    update_rate: int = 5
    gamma: float = 0.5
    threshold: float = 0.0
    sigma_x: float = 4.0
    sigma_y: float = 4.0
    sigma_theta: float = 0.02
    sigma_scale: float = 0.01
    sigma_aspect: float = 0.002
    sigma_skew: float = 0.001
    rank1: int = 8
    rank2: int = 8
    rank3: int = 5
    forgetting: float = 0.99
    annulus_inner: float = 8.0
    annulus_outer: float = 16.0
    rng_seed: int = 0
    # solver budget for the per-frame pooling path; the standalone encoder
    # keeps its tighter library defaults (full tolerance plus exact-support
    # refinement), which candidate scoring does not need and cannot afford
    code_tol: float = 1e-4
    code_max_sweeps: int = 60
    code_polish_rounds: int = 0
    # process count for the per-frame candidate map (1 = serial)
    workers: int = 1

    def __post_init__(self):
        counts = {
            "template_w": self.template_w,
            "template_h": self.template_h,
            "superpixels": self.superpixels,
            "bins": self.bins,
            "dictionary_size": self.dictionary_size,
            "particles": self.particles,
            "negatives": self.negatives,
            "update_rate": self.update_rate,
            "rank1": self.rank1,
            "rank2": self.rank2,
            "rank3": self.rank3,
            "code_max_sweeps": self.code_max_sweeps,
            "workers": self.workers,
        }
        for name, value in counts.items():
            if value < 1:
                raise ParameterError(f"{name} must be >= 1, got {value}")
        if self.superpixels > self.template_w * self.template_h:
            raise ParameterError("superpixels cannot exceed template pixel count")
        if self.compactness < 0:
            raise ParameterError("compactness must be nonnegative")
        if self.lam < 0:
            raise ParameterError("lam must be nonnegative")
        if not 0.0 <= self.gamma <= 1.0:
            raise ParameterError("gamma must lie in [0, 1]")
        if not 0.0 < self.forgetting <= 1.0:
            raise ParameterError("forgetting must lie in (0, 1]")
        if not 0.0 < self.annulus_inner < self.annulus_outer:
            raise ParameterError("annulus must satisfy 0 < inner < outer")
        if any(
            s < 0
            for s in (
                self.sigma_x,
                self.sigma_y,
                self.sigma_theta,
                self.sigma_scale,
                self.sigma_aspect,
                self.sigma_skew,
            )
        ):
            raise ParameterError("noise sigmas must be nonnegative")
        if self.rank1 > self.dictionary_size:
            raise ParameterError("rank1 cannot exceed dictionary_size")
        if self.rank2 > self.superpixels:
            raise ParameterError("rank2 cannot exceed superpixels")
        if self.code_tol <= 0:
            raise ParameterError("code_tol must be positive")
        if self.code_polish_rounds < 0:
            raise ParameterError("code_polish_rounds must be nonnegative")
        if self.workers < 1:
            raise ParameterError("workers must be >= 1")

    def noise(self) -> NoiseSpec:
        return NoiseSpec(
            sigma_x=self.sigma_x,
            sigma_y=self.sigma_y,
            sigma_theta=self.sigma_theta,
            sigma_scale=self.sigma_scale,
            sigma_aspect=self.sigma_aspect,
            sigma_skew=self.sigma_skew,
        )

    def ranks(self) -> tuple[int, int, int]:
        return (self.rank1, self.rank2, self.rank3)

    def to_dict(self) -> dict:
        return asdict(self)

    def with_overrides(self, **kwargs) -> "TrackerConfig":
        return replace(self, **kwargs)


_FIELD_TYPES = {f.name: f.type for f in fields(TrackerConfig)}
_ALIASES = {"lambda": "lam"}
_INT_FIELDS = {
    name for name, tp in _FIELD_TYPES.items() if tp in (int, "int")
}


def config_from_dict(values: dict) -> TrackerConfig:
    kwargs = {}
    for raw_key, value in values.items():
        key = _ALIASES.get(raw_key, raw_key)
        if key not in _FIELD_TYPES:
            raise ParameterError(f"unknown config key: {raw_key}")
        try:
            kwargs[key] = int(value) if key in _INT_FIELDS else float(value)
        except (TypeError, ValueError) as exc:
            raise ParameterError(f"bad value for {raw_key}: {value!r}") from exc
    return TrackerConfig(**kwargs)


def parse_config_file(path) -> TrackerConfig:
    """Read a flat ``key = value`` file ('#' starts a comment)."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ParameterError(f"cannot read config file {p}: {exc}") from exc
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" in stripped:
            key, _, value = stripped.partition("=")
        else:
            parts = stripped.split(None, 1)
            if len(parts) != 2:
                raise ParameterError(f"{p}:{lineno}: expected 'key = value', got {line!r}")
            key, value = parts
        values[key.strip()] = value.strip()
    return config_from_dict(values)


def write_config_file(config: TrackerConfig, path) -> None:
    lines = [f"{name} = {value}" for name, value in config.to_dict().items()]
    Path(path).write_text("\n".join(lines) + "\n")
