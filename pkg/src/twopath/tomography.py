"""Joint spatial-polarization tomography of the 4x4 coherence matrix.

The measurement projects the beam onto the full 6 x 6 product set of
single-DOF bases (36 joint projections), mirrors the Stokes-parameter
inversion of standard two-qubit tomography, and reconstructs the coherence
matrix by linear inversion followed by a positivity projection.  A calibrated
noise model degrades the spatial coherences by a systematic factor and adds
per-detector relative Gaussian noise.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import IO, Optional

import numpy as np

from . import cxmat
from .observables import ObservableTriple

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-9

# Noise floor for eigenvalues of the concurrence kernel; the square root
# amplifies rounding residue in structural zeros to O(1e-8) otherwise.
_CONC_FLOOR_ABS = 1e-25
_CONC_FLOOR_REL = 1e-12

SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
_PAULI = (
    np.eye(2, dtype=complex),
    np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    SIGMA_Y,
    np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
)
_SYY = cxmat.tensor_product(SIGMA_Y, SIGMA_Y)

_SQ2 = math.sqrt(2.0)
# Six measurement vectors per degree of freedom, eigenvectors of sigma_z,
# sigma_x, sigma_y in (+, -) pairs.
_BASIS_VECTORS = (
    np.array([1.0, 0.0], dtype=complex),
    np.array([0.0, 1.0], dtype=complex),
    np.array([1.0, 1.0], dtype=complex) / _SQ2,
    np.array([1.0, -1.0], dtype=complex) / _SQ2,
    np.array([1.0, 1.0j], dtype=complex) / _SQ2,
    np.array([1.0, -1.0j], dtype=complex) / _SQ2,
)
SPATIAL_LABELS = ("a", "b", "a+b", "a-b", "a+ib", "a-ib")
POLARIZATION_LABELS = ("x", "y", "x+y", "x-y", "x+iy", "x-iy")
# (plus, minus) basis indices for each Pauli axis 1..3
_AXIS_PAIRS = {1: (2, 3), 2: (4, 5), 3: (0, 1)}


@dataclass(frozen=True)
class ReconstructionDiagnostics:
    """Raw linear-inversion spectrum before the positivity projection."""

    raw_eigenvalues: tuple[float, ...]
    flagged: bool

    @property
    def min_eigenvalue(self) -> float:
        return min(self.raw_eigenvalues)


@dataclass(frozen=True)
class CoherenceMatrix:
    """Hermitian, PSD, unit-trace 4x4 matrix in basis {u_a x, u_a y, u_b x, u_b y}."""

    matrix: np.ndarray
    diagnostics: Optional[ReconstructionDiagnostics] = field(default=None, compare=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise ValueError(f"coherence matrix must be 4x4, got {m.shape}")
        defect = cxmat.hermitian_defect(m)
        if defect > HERMITIAN_TOL:
            raise ValueError(f"coherence matrix is not Hermitian: defect {defect:.3e}")
        tr = m.trace()
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"coherence matrix must have unit trace, got {tr!r}")
        lo = cxmat.eigvals_hermitian(m)[-1]
        if lo < -PSD_TOL:
            raise ValueError(
                f"coherence matrix is not positive semidefinite: eigenvalue {lo:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def purity(self) -> float:
        m = self.matrix
        return float((m @ m).trace().real)


@dataclass(frozen=True)
class ProjectionBasis:
    """One joint rank-1 projection: a spatial vector times a polarization vector."""

    spatial_label: str
    polarization_label: str
    spatial: np.ndarray
    polarization: np.ndarray

    def joint_vector(self) -> np.ndarray:
        return np.kron(self.spatial, self.polarization)

    def projector(self) -> np.ndarray:
        v = self.joint_vector()
        return np.outer(v, v.conj())


def projection_set() -> list[ProjectionBasis]:
    """The 36 joint projections in fixed spatial-major order."""
    out = []
    for i, sl in enumerate(SPATIAL_LABELS):
        for j, pl in enumerate(POLARIZATION_LABELS):
            out.append(ProjectionBasis(sl, pl, _BASIS_VECTORS[i], _BASIS_VECTORS[j]))
    return out


@dataclass(frozen=True)
class NoiseModel:
    """Calibrated detection noise.

    sigma_rel is the relative standard deviation of each recorded intensity
    (Gaussian, independent per detector reading, clipped at zero); f_sys is
    the systematic interferometer visibility factor that scales the spatial
    off-diagonal coherences before detection.
    """

    sigma_rel: float = 0.0
    f_sys: float = 0.981
    seed: int = 0

    def __post_init__(self):
        if self.sigma_rel < 0.0:
            raise ValueError(f"sigma_rel must be nonnegative, got {self.sigma_rel!r}")
        if not 0.0 < self.f_sys <= 1.0:
            raise ValueError(f"f_sys must lie in (0, 1], got {self.f_sys!r}")


@dataclass(frozen=True)
class TomographyRecord:
    """The 36 recorded intensities, indexed [spatial basis, polarization basis]."""

    intensities: np.ndarray  # shape (6, 6), spatial-major
    noise: Optional[NoiseModel] = None

    def __post_init__(self):
        m = np.array(self.intensities, dtype=float)
        if m.shape != (6, 6):
            raise ValueError(f"record must hold a 6x6 intensity table, got {m.shape}")
        if np.any(m < 0.0):
            raise ValueError("recorded intensities must be nonnegative")
        m.setflags(write=False)
        object.__setattr__(self, "intensities", m)


def _degrade(m: np.ndarray, f_sys: float) -> np.ndarray:
    out = np.array(m, dtype=complex)
    out[0:2, 2:4] *= f_sys
    out[2:4, 0:2] *= f_sys
    return out


def measure(w: CoherenceMatrix, noise: Optional[NoiseModel] = None) -> TomographyRecord:
    """Record the 36 joint projection intensities Tr(w P).

    With a noise model, the spatial coherences are first scaled by f_sys,
    then each intensity picks up independent Gaussian relative error
    sigma_rel and is clipped at zero.  Deterministic for a given seed.
    """
    m = w.matrix if noise is None else _degrade(w.matrix, noise.f_sys)
    table = np.empty((6, 6))
    for i, sv in enumerate(_BASIS_VECTORS):
        for j, pv in enumerate(_BASIS_VECTORS):
            v = np.kron(sv, pv)
            table[i, j] = float(np.real(v.conj() @ m @ v))
    # projector expectations of a PSD matrix; chop sub-epsilon negatives
    table = np.clip(table, 0.0, None)
    if noise is not None and noise.sigma_rel > 0.0:
        rng = np.random.default_rng(noise.seed)
        table = table * (1.0 + noise.sigma_rel * rng.standard_normal((6, 6)))
        table = np.clip(table, 0.0, None)
    return TomographyRecord(table, noise=noise)


def _stokes_parameters(p: np.ndarray) -> np.ndarray:
    """All 16 Stokes-like parameters from the overcomplete 6x6 intensity table.

    Parameters with redundant estimates (the marginals and the total) are
    averaged over them.
    """
    s = np.zeros((4, 4))
    pairs = _AXIS_PAIRS
    for i, (ip, im) in pairs.items():
        for j, (jp, jm) in pairs.items():
            s[i, j] = p[ip, jp] - p[ip, jm] - p[im, jp] + p[im, jm]
    for i, (ip, im) in pairs.items():
        s[i, 0] = np.mean([p[ip, jp] + p[ip, jm] - p[im, jp] - p[im, jm]
                           for (jp, jm) in pairs.values()])
        s[0, i] = np.mean([p[jp, ip] - p[jp, im] + p[jm, ip] - p[jm, im]
                           for (jp, jm) in pairs.values()])
    s[0, 0] = np.mean([p[ip, jp] + p[ip, jm] + p[im, jp] + p[im, jm]
                       for (ip, im) in pairs.values() for (jp, jm) in pairs.values()])
    return s


def _project_psd(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Clip negative eigenvalues to zero and renormalize the trace to one.

    Returns (projected matrix, raw eigenvalues descending).
    """
    vals, vecs = cxmat.eig_hermitian(m)
    clipped = np.clip(vals, 0.0, None)
    total = clipped.sum()
    if total <= 0.0:
        raise ValueError("matrix has no positive spectral weight")
    clipped /= total
    return (vecs * clipped) @ vecs.conj().T, vals


def reconstruct(record: TomographyRecord) -> CoherenceMatrix:
    """Linear-inversion reconstruction from a 36-intensity record.

    The Stokes parameters are inverted as w = (1/4) sum S_ij sigma_i x sigma_j,
    the result is normalized to unit trace and projected onto the PSD cone.
    A raw spectrum dipping below -1e-9 flags the reconstruction as
    non-physical in the attached diagnostics; the projected matrix is still
    returned.
    """
    p = record.intensities
    total = float(p.sum())
    if total <= 0.0:
        raise ValueError("record carries no signal: all intensities vanish")
    s = _stokes_parameters(p)
    w = np.zeros((4, 4), dtype=complex)
    for i in range(4):
        for j in range(4):
            if s[i, j] != 0.0:
                w += s[i, j] * cxmat.tensor_product(_PAULI[i], _PAULI[j])
    w /= 4.0
    w /= w.trace().real
    w = (w + w.conj().T) / 2.0  # exact Hermitian part against rounding drift
    projected, raw = _project_psd(w)
    diag = ReconstructionDiagnostics(
        raw_eigenvalues=tuple(float(x) for x in raw),
        flagged=bool(raw[-1] < -PSD_TOL),
    )
    return CoherenceMatrix(projected, diagnostics=diag)


def correct_systematic(w: CoherenceMatrix, f_sys: float) -> CoherenceMatrix:
    """Undo the systematic coherence degradation on a reconstructed matrix.

    Divides the spatial off-diagonal blocks by f_sys (the inverse of the
    degradation applied at measurement time) and re-projects onto the PSD
    cone, since noise can push the corrected coherences past physicality.
    """
    if not 0.0 < f_sys <= 1.0:
        raise ValueError(f"f_sys must lie in (0, 1], got {f_sys!r}")
    if f_sys == 1.0:
        return w
    m = np.array(w.matrix, dtype=complex)
    m[0:2, 2:4] /= f_sys
    m[2:4, 0:2] /= f_sys
    projected, raw = _project_psd(m)
    diag = ReconstructionDiagnostics(
        raw_eigenvalues=tuple(float(x) for x in raw),
        flagged=bool(raw[-1] < -PSD_TOL),
    )
    return CoherenceMatrix(projected, diagnostics=diag)


def wootters_concurrence(w: CoherenceMatrix) -> float:
    """Concurrence of the coherence matrix.

    The lambda_i are the square roots of the eigenvalues of w w~ with
    w~ = (sy x sy) conj(w) (sy x sy), obtained through the Hermitian form
    sqrt(w) w~ sqrt(w), and C = max(0, l1 - l2 - l3 - l4).

    The Hermitian kernel is evaluated in the eigenbasis of w, where it reads
    L^1/2 (G L G^dagger) L^1/2 with L the (clipped) spectrum of w and
    G = V^dagger (sy x sy) conj(V) unitary.  In that basis rank deficiency
    of w zeroes whole rows exactly and rounding noise scales with the
    eigenvalues, which keeps nearly separable states accurate; forming
    sqrt(w) w~ sqrt(w) as dense products instead leaves O(eps) absolute
    residue whose square root wrecks small concurrences.
    """
    vals, vecs = cxmat.eig_hermitian(w.matrix)
    if vals[-1] < -PSD_TOL:
        raise ValueError(
            f"matrix is not positive semidefinite: eigenvalue {vals[-1]:.3e}")
    snap = 64.0 * np.finfo(float).eps * max(float(vals[0]), 0.0)
    spectrum = np.where(vals > snap, vals, 0.0)
    g = vecs.conj().T @ _SYY @ vecs.conj()
    core = (g * spectrum) @ g.conj().T
    roots = np.sqrt(spectrum)
    kernel = core * np.outer(roots, roots)
    kernel = (kernel + kernel.conj().T) / 2.0
    kvals = cxmat.eigvals_hermitian(kernel)
    floor = _CONC_FLOOR_ABS + _CONC_FLOOR_REL * max(float(kvals[0]), 0.0)
    lam = np.sqrt(np.where(kvals > floor, kvals, 0.0))
    return max(0.0, float(lam[0] - lam[1] - lam[2] - lam[3]))


def observables_from_matrix(w: CoherenceMatrix) -> ObservableTriple:
    """(V, D, C) read off a coherence matrix.

    D is the spatial population imbalance, V twice the magnitude of the
    polarization-traced spatial coherence, C the concurrence.
    """
    m = w.matrix
    d = abs(float((m[0, 0] + m[1, 1] - m[2, 2] - m[3, 3]).real))
    v = 2.0 * abs(m[0, 2] + m[1, 3])
    # AM-GM bounds v <= 1 for any PSD unit-trace matrix; clamp rounding spill
    return ObservableTriple(min(v, 1.0), min(d, 1.0), wootters_concurrence(w))


def polarization_from_matrix(w: CoherenceMatrix) -> float:
    """Degree of polarization of the reduced 2x2 polarization matrix."""
    from .observables import stokes_length

    return stokes_length(cxmat.partial_trace(w.matrix, "spatial"))


def uhlmann_fidelity(a: CoherenceMatrix, b: CoherenceMatrix) -> float:
    """(Tr sqrt(sqrt(a) b sqrt(a)))^2."""
    ra = cxmat.sqrt_psd(a.matrix)
    inner = ra @ b.matrix @ ra
    inner = (inner + inner.conj().T) / 2.0
    vals = cxmat.eigvals_hermitian(inner)
    # rounding residue in structural zeros inflates Tr sqrt by O(sqrt(eps))
    floor = _CONC_FLOOR_ABS + 1e-13 * max(float(vals[0]), 0.0)
    return float(np.sum(np.sqrt(np.where(vals > floor, vals, 0.0))) ** 2)


@dataclass(frozen=True)
class TomographyRun:
    """A full simulated tomography pass over one coherence matrix."""

    record: TomographyRecord
    reconstructed: CoherenceMatrix
    triple: ObservableTriple


def run_tomography(w: CoherenceMatrix, noise: Optional[NoiseModel] = None,
                   correct: bool = True) -> TomographyRun:
    """measure -> reconstruct -> (systematic correction) -> observables.

    When a noise model with f_sys < 1 is supplied and ``correct`` is true,
    the systematic coherence degradation is undone on the reconstructed
    matrix before the observables are read off, mirroring how measured
    visibilities are referenced to the systematic maximum.
    """
    record = measure(w, noise)
    recon = reconstruct(record)
    if correct and noise is not None and noise.f_sys < 1.0:
        recon = correct_systematic(recon, noise.f_sys)
    return TomographyRun(record, recon, observables_from_matrix(recon))


# --- file formats -----------------------------------------------------------

RECORD_CSV_HEADER = ("spatial_basis_label", "polarization_basis_label", "intensity")


def write_record_csv(record: TomographyRecord, stream: IO[str],
                     fmt=lambda x: f"{x:.6g}") -> None:
    writer = csv.writer(stream)
    writer.writerow(RECORD_CSV_HEADER)
    for i, sl in enumerate(SPATIAL_LABELS):
        for j, pl in enumerate(POLARIZATION_LABELS):
            writer.writerow([sl, pl, fmt(record.intensities[i, j])])


def read_record_csv(stream: IO[str]) -> TomographyRecord:
    reader = csv.DictReader(row for row in stream if not row.startswith("#"))
    table = np.zeros((6, 6))
    seen = 0
    for rec in reader:
        i = SPATIAL_LABELS.index(rec["spatial_basis_label"])
        j = POLARIZATION_LABELS.index(rec["polarization_basis_label"])
        table[i, j] = float(rec["intensity"])
        seen += 1
    if seen != 36:
        raise ValueError(f"expected 36 record rows, got {seen}")
    return TomographyRecord(table)


def matrix_to_json(w: CoherenceMatrix) -> str:
    """4x4 array of [re, im] pairs."""
    data = [[[z.real, z.imag] for z in row] for row in np.asarray(w.matrix)]
    return json.dumps(data)


def matrix_from_json(text: str) -> CoherenceMatrix:
    """Read a matrix export; tolerates reduced-precision (rounded) entries.

    Rounding can leave the stored matrix slightly non-Hermitian, off unit
    trace, or marginally indefinite, so the reader takes the Hermitian part,
    renormalizes, and re-projects before validating.
    """
    data = json.loads(text)
    m = np.array([[complex(z[0], z[1]) for z in row] for row in data])
    if m.shape != (4, 4):
        raise ValueError(f"matrix export must be 4x4, got {m.shape}")
    m = (m + m.conj().T) / 2.0
    tr = m.trace().real
    if tr <= 0.0:
        raise ValueError("matrix export has nonpositive trace")
    m /= tr
    projected, _ = _project_psd(m)
    return CoherenceMatrix(projected)
