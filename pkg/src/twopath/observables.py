"""The complementarity observables of a two-path beam.

Visibility V (fringe contrast), path distinguishability D (intensity
imbalance), concurrence C (path-spin entanglement of the pure field), and
degree of polarization P.  For every pure two-path beam the triple satisfies
V^2 + D^2 + C^2 = 1, and P obeys P^2 = V^2 + D^2 and P^2 + C^2 = 1.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from . import cxmat
from .field import TwoPathBeam, mutual_coherence, to_coherence_matrix

COMPONENT_TOL = 1e-12
P_CONSISTENCY_TOL = 1e-10

CSV_HEADER = ("V", "D", "C", "SUM")


@dataclass(frozen=True)
class ObservableTriple:
    """(V, D, C) with the derived P and identity sum."""

    v: float
    d: float
    c: float

    def __post_init__(self):
        for name in ("v", "d", "c"):
            x = float(getattr(self, name))
            if x < -COMPONENT_TOL or x > 1.0 + COMPONENT_TOL:
                raise ValueError(f"{name} = {x!r} lies outside [0, 1]")
            object.__setattr__(self, name, min(max(x, 0.0), 1.0))

    @property
    def p(self) -> float:
        return math.hypot(self.v, self.d)

    @property
    def sum(self) -> float:
        return self.v * self.v + self.d * self.d + self.c * self.c

    def to_json_dict(self) -> dict:
        return {"v": self.v, "d": self.d, "c": self.c, "p": self.p, "sum": self.sum}

    @classmethod
    def from_json_dict(cls, d: dict) -> "ObservableTriple":
        return cls(d["v"], d["d"], d["c"])

    def csv_row(self) -> tuple[float, float, float, float]:
        """Row in benchmark-table column order (V, D, C, SUM)."""
        return (self.v, self.d, self.c, self.sum)


def triple_to_json(triple: ObservableTriple) -> str:
    return json.dumps(triple.to_json_dict())


def triple_from_json(text: str) -> ObservableTriple:
    return ObservableTriple.from_json_dict(json.loads(text))


def triple_to_csv(triple: ObservableTriple) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(CSV_HEADER)
    writer.writerow(triple.csv_row())
    return buf.getvalue()


def visibility(beam: TwoPathBeam) -> float:
    """Fringe contrast 2|gamma| sqrt(I_a I_b) / (I_a + I_b)."""
    ia = beam.intensity_a
    ib = beam.intensity_b
    return 2.0 * abs(mutual_coherence(beam)) * math.sqrt(ia * ib) / (ia + ib)


def distinguishability(beam: TwoPathBeam) -> float:
    """Normalized path-intensity imbalance |I_a - I_b| / (I_a + I_b)."""
    ia = beam.intensity_a
    ib = beam.intensity_b
    return abs(ia - ib) / (ia + ib)


def concurrence_pure(beam: TwoPathBeam) -> float:
    """Path-spin concurrence of the pure beam: 2 sqrt((1-|gamma|^2) I_a I_b) / (I_a+I_b)."""
    ia = beam.intensity_a
    ib = beam.intensity_b
    g2 = abs(mutual_coherence(beam)) ** 2
    return 2.0 * math.sqrt(max(0.0, 1.0 - g2) * ia * ib) / (ia + ib)


def stokes_length(rho: np.ndarray) -> float:
    """Degree of polarization of a unit-trace 2x2 matrix.

    Length of the Stokes vector (Tr rho sigma_1, Tr rho sigma_2, Tr rho
    sigma_3); identical to sqrt(2 Tr(rho^2) - 1) but free of the
    cancellation that formula suffers near zero polarization.
    """
    s1 = 2.0 * rho[0, 1].real
    s2 = -2.0 * rho[0, 1].imag
    s3 = (rho[0, 0] - rho[1, 1]).real
    return math.sqrt(s1 * s1 + s2 * s2 + s3 * s3)


def degree_of_polarization(beam: TwoPathBeam) -> float:
    """Degree of polarization, computed two ways that must agree.

    Route (i): sqrt(V^2 + D^2).  Route (ii): from the reduced 2x2
    polarization matrix obtained by tracing the coherence matrix over the
    spatial degree of freedom.  The returned value is route (ii); a
    disagreement beyond 1e-10 raises.
    """
    p_vd = math.hypot(visibility(beam), distinguishability(beam))
    w = to_coherence_matrix(beam)
    rho = cxmat.partial_trace(w.matrix, "spatial")
    p_matrix = stokes_length(rho)
    if abs(p_matrix - p_vd) > P_CONSISTENCY_TOL:
        raise ValueError(
            "polarization routes disagree: sqrt(V^2+D^2) = "
            f"{p_vd!r}, reduced-matrix value = {p_matrix!r}")
    return p_matrix


def identity_sum(triple: ObservableTriple) -> float:
    """V^2 + D^2 + C^2; equals 1 for every pure two-path beam."""
    return triple.sum


def duality_defect(beam: TwoPathBeam) -> float:
    """1 - V^2 - D^2, the amount by which the duality bound is not saturated.

    Equals 4 I_a I_b (1 - |gamma|^2) / (I_a + I_b)^2, which is exactly C^2
    for a pure beam.
    """
    v = visibility(beam)
    d = distinguishability(beam)
    return 1.0 - v * v - d * d


def triple_from_beam(beam: TwoPathBeam) -> ObservableTriple:
    return ObservableTriple(visibility(beam), distinguishability(beam),
                            concurrence_pure(beam))
