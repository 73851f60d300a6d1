"""Two-path optical fields.

A beam is a superposition over two orthogonal spatial modes (paths) u_a, u_b,
each carrying its own complex amplitude and transverse spin (polarization)
state.  Spatial modes are treated as abstract orthonormal labels; propagation
phases are absorbed into the path amplitudes, and the translation-stage phase
enters the interference term additively.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

SPIN_NORM_TOL = 1e-12
CLASSIFY_TOL = 1e-9
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SpinState:
    """Unit 2-vector of complex amplitudes over the {x, y} polarization basis."""

    cx: complex
    cy: complex

    def __post_init__(self):
        object.__setattr__(self, "cx", complex(self.cx))
        object.__setattr__(self, "cy", complex(self.cy))
        norm = abs(self.cx) ** 2 + abs(self.cy) ** 2
        if abs(norm - 1.0) > SPIN_NORM_TOL:
            raise ValueError(f"spin state is not normalized: |cx|^2+|cy|^2 = {norm!r}")

    @classmethod
    def x(cls) -> "SpinState":
        return cls(1.0, 0.0)

    @classmethod
    def y(cls) -> "SpinState":
        return cls(0.0, 1.0)

    @classmethod
    def from_angles(cls, theta: float, xi: float = 0.0) -> "SpinState":
        """e^{i xi} cos(theta) x + sin(theta) y."""
        return cls(cmath.exp(1j * xi) * math.cos(theta), math.sin(theta))

    def inner(self, other: "SpinState") -> complex:
        """Hermitian inner product <self|other>."""
        return self.cx.conjugate() * other.cx + self.cy.conjugate() * other.cy

    def as_vector(self) -> np.ndarray:
        return np.array([self.cx, self.cy], dtype=complex)

    def to_json_dict(self) -> dict:
        return {"cx": [self.cx.real, self.cx.imag], "cy": [self.cy.real, self.cy.imag]}

    @classmethod
    def from_json_dict(cls, d: dict) -> "SpinState":
        return cls(complex(d["cx"][0], d["cx"][1]), complex(d["cy"][0], d["cy"][1]))


@dataclass(frozen=True)
class TwoPathBeam:
    """Two-path field: amplitudes A, B on paths a, b plus per-path spin states."""

    amp_a: complex
    amp_b: complex
    spin_a: SpinState
    spin_b: SpinState

    def __post_init__(self):
        object.__setattr__(self, "amp_a", complex(self.amp_a))
        object.__setattr__(self, "amp_b", complex(self.amp_b))
        if self.amp_a == 0 and self.amp_b == 0:
            raise ValueError("beam carries no signal: both path amplitudes vanish")

    @property
    def intensity_a(self) -> float:
        return abs(self.amp_a) ** 2

    @property
    def intensity_b(self) -> float:
        return abs(self.amp_b) ** 2

    @property
    def total_intensity(self) -> float:
        return self.intensity_a + self.intensity_b

    def to_json_dict(self) -> dict:
        return {
            "amp_a": [self.amp_a.real, self.amp_a.imag],
            "amp_b": [self.amp_b.real, self.amp_b.imag],
            "spin_a": self.spin_a.to_json_dict(),
            "spin_b": self.spin_b.to_json_dict(),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "TwoPathBeam":
        return cls(
            complex(d["amp_a"][0], d["amp_a"][1]),
            complex(d["amp_b"][0], d["amp_b"][1]),
            SpinState.from_json_dict(d["spin_a"]),
            SpinState.from_json_dict(d["spin_b"]),
        )


class ExtremeKind(enum.Enum):
    FULLY_COHERENT_BALANCED = "fully_coherent_balanced"
    SINGLE_PATH = "single_path"
    BELL_LIKE = "bell_like"
    GENERIC = "generic"


@dataclass(frozen=True)
class ExtremeClass:
    kind: ExtremeKind
    # For the fully coherent balanced case: the phase that factors out of the
    # spatial superposition, arg(gamma) + arg(A* B).
    factored_phase: Optional[float] = None


def mutual_coherence(beam: TwoPathBeam) -> complex:
    """gamma = <s_a|s_b>; |gamma| <= 1 by Cauchy-Schwarz."""
    return beam.spin_a.inner(beam.spin_b)


def _cross_term(beam: TwoPathBeam) -> complex:
    # gamma * conj(A) * B; its magnitude is |gamma| sqrt(I_a I_b)
    return mutual_coherence(beam) * beam.amp_a.conjugate() * beam.amp_b


def intensity_at_phase(beam: TwoPathBeam, delta: float) -> float:
    """Screen intensity with an extra stage phase delta in the cosine argument."""
    if not math.isfinite(delta):
        raise ValueError(f"stage phase must be finite, got {delta!r}")
    cross = _cross_term(beam)
    return beam.total_intensity + 2.0 * (cross * cmath.exp(1j * delta)).real


def fringe_scan(beam: TwoPathBeam, n_points: int,
                delta_range: tuple[float, float] = (0.0, TWO_PI)) -> np.ndarray:
    """Intensity trace over a uniform stage-phase grid; shape (n_points, 2)."""
    if n_points < 2:
        raise ValueError(f"a scan needs at least 2 points, got {n_points}")
    lo, hi = delta_range
    deltas = np.linspace(lo, hi, n_points)
    cross = _cross_term(beam)
    values = beam.total_intensity + 2.0 * (cross * np.exp(1j * deltas)).real
    return np.column_stack([deltas, values])


def visibility_from_scan(scan: np.ndarray) -> float:
    """Fringe contrast (max - min) / (max + min) of a scanned trace."""
    values = np.asarray(scan)[:, 1]
    hi = float(values.max())
    lo = float(values.min())
    if hi + lo <= 0.0:
        raise ValueError("scan carries no intensity")
    return (hi - lo) / (hi + lo)


def classify_extreme(beam: TwoPathBeam, tol: float = CLASSIFY_TOL) -> ExtremeClass:
    """Sort a beam into the three extreme cases or the generic one.

    V = 1: the field factorizes into (spatial superposition) x (common spin);
    D = 1: a single lit path, fully separable; V = D = 0: the balanced
    incoherent superposition, maximally entangled between path and spin.
    """
    ia = beam.intensity_a
    ib = beam.intensity_b
    total = ia + ib
    gamma = mutual_coherence(beam)
    v = 2.0 * abs(gamma) * math.sqrt(ia * ib) / total
    d = abs(ia - ib) / total
    if abs(v - 1.0) <= tol:
        phase = cmath.phase(gamma) + cmath.phase(beam.amp_a.conjugate() * beam.amp_b)
        return ExtremeClass(ExtremeKind.FULLY_COHERENT_BALANCED, factored_phase=phase)
    if abs(d - 1.0) <= tol:
        return ExtremeClass(ExtremeKind.SINGLE_PATH)
    if v <= tol and d <= tol:
        return ExtremeClass(ExtremeKind.BELL_LIKE)
    return ExtremeClass(ExtremeKind.GENERIC)


def to_coherence_matrix(beam: TwoPathBeam):
    """Rank-1 joint coherence matrix of the (pure) beam, unit trace.

    Basis order {u_a x, u_a y, u_b x, u_b y}.
    """
    from .tomography import CoherenceMatrix  # deferred: tomography sits above field

    total = beam.total_intensity
    if total <= 0.0:
        raise ValueError("beam carries no intensity")
    psi = np.array(
        [
            beam.amp_a * beam.spin_a.cx,
            beam.amp_a * beam.spin_a.cy,
            beam.amp_b * beam.spin_b.cx,
            beam.amp_b * beam.spin_b.cy,
        ],
        dtype=complex,
    ) / math.sqrt(total)
    return CoherenceMatrix(np.outer(psi, psi.conj()))
