"""Angle-sample ingestion, the embedded camera-trap datasets, and
synthetic generators for simulation studies.
"""

from __future__ import annotations

import io
import math
import os
import warnings
from dataclasses import dataclass

import numpy as np

from .projection import TWO_PI, cartesian_to_polar, wrap_angle

__all__ = [
    "AngleSample",
    "AngleParseError",
    "MixtureSpec",
    "DEFAULT_MIXTURE",
    "load_angles",
    "save_angles",
    "triunfo",
    "TRIUNFO_SPECIES",
    "simulate_mixture",
    "simulate_projected_normal",
]


@dataclass(frozen=True)
class AngleSample:
    """A named sample of angles, all in (0, 2*pi]."""

    name: str
    angles: np.ndarray

    def __post_init__(self):
        th = np.asarray(self.angles, dtype=float)
        if th.size == 0:
            raise ValueError("angle sample cannot be empty")
        if np.any(~np.isfinite(th)) or np.any((th <= 0.0) | (th > TWO_PI)):
            raise ValueError("angles must lie in (0, 2*pi]")
        object.__setattr__(self, "angles", th)

    @property
    def n(self) -> int:
        return self.angles.size


class AngleParseError(ValueError):
    """A record could not be parsed; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


_UNITS = ("radians", "degrees", "clock24")


def _convert(values: np.ndarray, unit: str) -> np.ndarray:
    if unit == "radians":
        return values
    if unit == "degrees":
        return values * math.pi / 180.0
    if unit == "clock24":
        # hours h in (0, 24] -> 2*pi*h/24; out-of-range hours reduce below
        return values * TWO_PI / 24.0
    raise ValueError(f"unknown unit {unit!r}; expected one of {_UNITS}")


def load_angles(source, unit: str = "radians", name: str = "sample") -> AngleSample:
    """Read one angle per row from a text stream or path.

    Rows are comma- or whitespace-delimited with a single value each; a
    non-numeric first line is treated as a header. Values are converted
    from `unit` and reduced to (0, 2*pi], with a warning when any value
    needed reduction.

    Raises
    ------
    AngleParseError
        On a non-numeric record (with its line number) or an empty file.
    """
    if unit not in _UNITS:
        raise ValueError(f"unknown unit {unit!r}; expected one of {_UNITS}")
    if isinstance(source, (str, bytes, os.PathLike)):
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = source.read()
    values = []
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        tokens = raw.replace(",", " ").split()
        if not tokens:
            continue
        if len(tokens) > 1:
            raise AngleParseError(lineno, f"expected one angle per row, got {len(tokens)} values")
        try:
            values.append(float(tokens[0]))
        except ValueError:
            if lineno == 1 and not values:
                continue  # header line
            raise AngleParseError(lineno, f"could not parse {tokens[0]!r} as a number") from None
    if not values:
        raise AngleParseError(1, "no angles found in input")
    raw = _convert(np.asarray(values, dtype=float), unit)
    reduced = wrap_angle(raw)
    n_out = int(np.sum(reduced != raw))
    if n_out:
        warnings.warn(f"{n_out} angle(s) outside (0, 2*pi] were reduced modulo 2*pi", stacklevel=2)
    return AngleSample(name, reduced)


def save_angles(sample: AngleSample, target) -> None:
    """Write a sample in the ingestion format (header plus one angle per row)."""
    lines = ["theta"] + [repr(float(t)) for t in sample.angles]
    text = "\n".join(lines) + "\n"
    if isinstance(target, (str, bytes, os.PathLike)):
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        target.write(text)


# Temporal activity (radians) of three mammal species from camera traps
# at the El Triunfo biosphere reserve, 2015.
_PECCARY = (
    3.0757, 2.7422, 3.2214, 0.8017, 2.3065, 2.6849, 4.5517, 4.3300,
    2.3421, 4.6541, 2.2754, 2.4580, 3.3150, 4.0887, 4.4092, 4.2632,
)

_TAPIR = (
    3.3352, 4.6813, 4.7835, 5.4591, 5.4929, 3.6559, 4.9567, 4.5505,
    3.7114, 4.6214, 5.5011, 0.7815, 0.4264, 5.6929, 4.6098, 0.0712,
    4.7340, 4.7583, 0.8511, 4.5465, 4.0871, 1.3747, 4.8558, 0.9962,
    4.9629, 2.7328, 5.9844, 0.6099, 5.9213, 1.9393, 6.2521, 4.7322,
    4.8155, 5.1034, 0.5203,
)

_DEER = (
    4.5338, 4.9636, 2.3963, 0.1049, 0.6435, 1.6665, 2.7504, 0.5619,
    5.2474, 4.5670, 4.4406, 5.3001, 4.6440, 0.8320, 1.5593, 2.6858,
    5.3614, 1.5104, 2.1596, 4.5811, 4.9057, 6.1155, 1.9216, 3.6685,
    4.7676, 4.1158, 3.3225, 1.0981, 4.7476, 2.0472, 4.0766, 4.4075,
    4.4901, 5.6538, 5.4914, 2.0064, 5.8532, 0.0833, 2.3170, 0.6101,
    5.3250, 0.7459, 3.4606, 4.8188, 4.4032, 4.2024, 1.5408, 5.3556,
    5.2969, 5.9074, 5.1198, 4.7095, 4.9927, 1.5943, 4.8544, 0.9802,
    4.7600, 4.8139, 4.9786, 2.3377, 5.0841, 4.1202, 6.2377, 2.7648,
    4.7023, 4.3310, 2.5126, 6.0751, 2.2459, 1.2403, 2.7941, 5.0400,
    5.3202, 1.4342, 3.2619, 1.9663, 4.7633, 5.7232, 2.1505, 3.9069,
    0.8642, 3.5219, 4.9393, 2.3317, 4.0359, 2.0050, 5.4570, 4.6069,
    6.0874, 0.1445, 0.9540, 3.4935, 1.6002, 5.2741, 0.5729, 6.1006,
    1.0324, 4.8253, 5.9624, 3.5083, 4.3276, 4.6632, 0.6040, 0.7223,
    3.4750, 5.1140, 4.9180, 4.2155, 4.5710, 0.5368, 5.1135, 3.1823,
    3.1831, 4.4513, 5.5457,
)

_TRIUNFO = {"peccary": _PECCARY, "tapir": _TAPIR, "deer": _DEER}
TRIUNFO_SPECIES = tuple(_TRIUNFO)

assert len(_PECCARY) == 16 and len(_TAPIR) == 35 and len(_DEER) == 115


def triunfo(species: str) -> AngleSample:
    """Embedded activity-time sample for peccary, tapir, or deer."""
    try:
        values = _TRIUNFO[species]
    except KeyError:
        raise ValueError(f"unknown species {species!r}; expected one of {TRIUNFO_SPECIES}") from None
    return AngleSample(species, np.asarray(values, dtype=float))


@dataclass(frozen=True)
class MixtureSpec:
    """Weights and locations of a four-component plane normal mixture."""

    weights: tuple
    locations: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        loc = np.asarray(self.locations, dtype=float)
        if w.shape != (4,) or np.any(w < 0.0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be 4 nonnegative values summing to 1")
        if loc.shape != (4, 2):
            raise ValueError("locations must be 4 plane points")
        object.__setattr__(self, "weights", tuple(map(float, w)))
        object.__setattr__(self, "locations", tuple(map(tuple, loc.tolist())))


DEFAULT_MIXTURE = MixtureSpec(
    weights=(0.1, 0.2, 0.4, 0.3),
    locations=((1.5, 1.5), (-1.0, 1.0), (-1.0, -2.0), (1.5, -1.5)),
)


def simulate_mixture(n: int, spec: MixtureSpec = DEFAULT_MIXTURE, rng: np.random.Generator | None = None, name: str = "mixture") -> AngleSample:
    """Project n draws of a unit-precision plane normal mixture to angles."""
    if n < 1:
        raise ValueError("need n >= 1")
    rng = np.random.default_rng() if rng is None else rng
    comp = rng.choice(4, size=n, p=np.asarray(spec.weights))
    x = np.asarray(spec.locations)[comp] + rng.standard_normal((n, 2))
    theta, _ = cartesian_to_polar(x[:, 0], x[:, 1])
    return AngleSample(name, np.atleast_1d(theta))


def simulate_projected_normal(n: int, mu, rng: np.random.Generator | None = None, name: str = "projnormal") -> AngleSample:
    """Project n draws of a unit-precision plane normal at mu to angles."""
    if n < 1:
        raise ValueError("need n >= 1")
    rng = np.random.default_rng() if rng is None else rng
    mu = np.asarray(mu, dtype=float).reshape(2)
    x = mu + rng.standard_normal((n, 2))
    theta, _ = cartesian_to_polar(x[:, 0], x[:, 1])
    return AngleSample(name, np.atleast_1d(theta))
