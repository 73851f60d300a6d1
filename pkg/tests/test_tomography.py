import io
import math

import numpy as np
import pytest

from twopath import (
    CoherenceMatrix,
    NoiseModel,
    TomographyRecord,
    correct_systematic,
    grid_states,
    measure,
    observables_from_matrix,
    polarization_from_matrix,
    projection_set,
    realize,
    reconstruct,
    run_tomography,
    to_coherence_matrix,
    triple_from_beam,
    uhlmann_fidelity,
    wootters_concurrence,
)
from twopath.tomography import (
    POLARIZATION_LABELS,
    SPATIAL_LABELS,
    matrix_from_json,
    matrix_to_json,
    read_record_csv,
    write_record_csv,
)

from conftest import random_beam, random_density

INV_SQ2 = 1.0 / math.sqrt(2.0)

SYY = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))


def concurrence_bruteforce(m: np.ndarray) -> float:
    """Independent oracle: non-Hermitian eigensolve of w w~."""
    m_tilde = SYY @ m.conj() @ SYY
    ev = np.linalg.eigvals(m @ m_tilde)
    lam = np.sort(np.sqrt(np.clip(ev.real, 0.0, None)))[::-1]
    return max(0.0, lam[0] - lam[1] - lam[2] - lam[3])


def bell_matrix() -> CoherenceMatrix:
    psi = np.array([1.0, 0.0, 0.0, 1.0], dtype=complex) * INV_SQ2
    return CoherenceMatrix(np.outer(psi, psi.conj()))


def werner(p: float) -> CoherenceMatrix:
    return CoherenceMatrix(p * bell_matrix().matrix + (1 - p) * np.eye(4) / 4)


class TestCoherenceMatrixType:
    def test_rejects_non_hermitian(self):
        m = np.eye(4, dtype=complex)
        m[0, 1] = 0.5
        with pytest.raises(ValueError, match="Hermitian"):
            CoherenceMatrix(m)

    def test_rejects_wrong_trace(self):
        with pytest.raises(ValueError, match="trace"):
            CoherenceMatrix(np.eye(4, dtype=complex))

    def test_rejects_indefinite(self):
        m = np.diag([0.7, 0.4, 0.0, -0.1]).astype(complex)
        with pytest.raises(ValueError, match="semidefinite"):
            CoherenceMatrix(m)

    def test_matrix_is_frozen(self):
        w = bell_matrix()
        with pytest.raises(ValueError):
            w.matrix[0, 0] = 0.0


class TestProjectionSet:
    def test_count(self):
        assert len(projection_set()) == 36

    def test_spatial_major_order(self):
        bases = projection_set()
        labels = [(b.spatial_label, b.polarization_label) for b in bases]
        expected = [(s, p) for s in SPATIAL_LABELS for p in POLARIZATION_LABELS]
        assert labels == expected

    def test_factors_normalized(self):
        for b in projection_set():
            assert np.linalg.norm(b.spatial) == pytest.approx(1.0, abs=1e-15)
            assert np.linalg.norm(b.polarization) == pytest.approx(1.0, abs=1e-15)

    def test_spatial_vector_structure(self):
        bases = projection_set()
        ua = bases[0].spatial
        ub = bases[6].spatial
        assert abs(np.vdot(ua, ub)) < 1e-15
        for b in (bases[12], bases[18], bases[24], bases[30]):
            assert np.allclose(np.abs(b.spatial), INV_SQ2, atol=1e-15)

    def test_projectors_are_rank_one(self):
        for b in projection_set():
            pr = b.projector()
            assert np.allclose(pr @ pr, pr, atol=1e-14)
            assert np.trace(pr).real == pytest.approx(1.0)


class TestMeasure:
    def test_bell_direct_basis(self):
        record = measure(bell_matrix())
        assert record.intensities[0, 0] == pytest.approx(0.5)  # (u_a, x)

    def test_bell_joint_superposition(self):
        # <(a+b)/sqrt2 (x+y)/sqrt2 | psi> = 1/sqrt2 -> intensity 0.5
        record = measure(bell_matrix())
        assert record.intensities[2, 2] == pytest.approx(0.5)

    def test_single_path_dark_port(self):
        beam_matrix = np.zeros((4, 4), dtype=complex)
        beam_matrix[0, 0] = 1.0
        record = measure(CoherenceMatrix(beam_matrix))
        assert np.all(record.intensities[1, :] == 0.0)  # u_b row dark

    def test_noise_deterministic_per_seed(self):
        w = bell_matrix()
        noise = NoiseModel(0.05, 0.981, seed=7)
        r1 = measure(w, noise)
        r2 = measure(w, noise)
        assert np.array_equal(r1.intensities, r2.intensities)
        r3 = measure(w, NoiseModel(0.05, 0.981, seed=8))
        assert not np.array_equal(r1.intensities, r3.intensities)

    def test_noise_clipped_nonnegative(self):
        w = bell_matrix()
        record = measure(w, NoiseModel(5.0, 1.0, seed=3))
        assert np.all(record.intensities >= 0.0)

    def test_degradation_scales_coherence(self):
        # f_sys scales the visibility read out of the record
        w = bell_matrix()
        f = 0.9
        record = measure(w, NoiseModel(0.0, f, seed=0))
        recon = reconstruct(record)
        v = 2 * abs(recon.matrix[0, 2] + recon.matrix[1, 3])
        ideal = reconstruct(measure(w))
        v0 = 2 * abs(ideal.matrix[0, 2] + ideal.matrix[1, 3])
        assert v == pytest.approx(f * v0, abs=1e-10)


class TestReconstruct:
    def test_rejects_empty_record(self):
        with pytest.raises(ValueError, match="no signal"):
            reconstruct(TomographyRecord(np.zeros((6, 6))))

    def test_single_path_round_trip(self):
        m = np.zeros((4, 4), dtype=complex)
        m[0, 0] = 1.0
        w = CoherenceMatrix(m)
        recon = reconstruct(measure(w))
        assert np.linalg.norm(recon.matrix - m) < 1e-10

    def test_grid_state_round_trips(self):
        for state in grid_states():
            w = to_coherence_matrix(realize(state.params))
            recon = reconstruct(measure(w))
            assert uhlmann_fidelity(w, recon) >= 1.0 - 1e-10

    def test_random_mixed_round_trips(self, rng):
        for _ in range(100):
            w = CoherenceMatrix(random_density(rng))
            recon = reconstruct(measure(w))
            assert uhlmann_fidelity(w, recon) >= 1.0 - 1e-10

    def test_scale_invariance(self):
        # relative intensities: a common factor drops out
        w = bell_matrix()
        record = measure(w)
        scaled = TomographyRecord(record.intensities * 37.5)
        assert np.linalg.norm(reconstruct(scaled).matrix - w.matrix) < 1e-10

    def test_noisy_frobenius_envelope(self):
        # sigma_rel = 0.01: reconstruction error stays well inside 0.05
        worst = 0.0
        for state in grid_states():
            w = to_coherence_matrix(realize(state.params))
            for seed in range(8):
                recon = reconstruct(measure(w, NoiseModel(0.01, 1.0, seed)))
                worst = max(worst, float(np.linalg.norm(recon.matrix - w.matrix)))
        assert worst < 0.05

    def test_noisy_reconstruction_flagged_with_diagnostics(self):
        w = bell_matrix()
        recon = reconstruct(measure(w, NoiseModel(0.02, 0.981, seed=1)))
        diag = recon.diagnostics
        assert diag is not None
        assert diag.flagged
        assert diag.min_eigenvalue < 0.0
        assert len(diag.raw_eigenvalues) == 4

    def test_psd_projection_output_physical(self, rng):
        for seed in range(20):
            w = CoherenceMatrix(random_density(rng))
            recon = reconstruct(measure(w, NoiseModel(0.05, 0.95, seed)))
            vals = np.linalg.eigvalsh(recon.matrix)
            assert vals.min() >= -1e-12
            assert recon.matrix.trace().real == pytest.approx(1.0, abs=1e-10)


class TestWootters:
    def test_maximally_mixed(self):
        assert wootters_concurrence(CoherenceMatrix(np.eye(4) / 4)) == 0.0

    def test_bell(self):
        assert wootters_concurrence(bell_matrix()) == pytest.approx(1.0, abs=1e-12)

    def test_werner_point(self):
        assert wootters_concurrence(werner(0.8)) == pytest.approx(0.7, abs=1e-12)

    def test_werner_curve_vs_bruteforce_oracle(self):
        for p in np.linspace(0.0, 1.0, 101):
            w = werner(float(p))
            expected = max(0.0, (3 * p - 1) / 2)
            assert wootters_concurrence(w) == pytest.approx(expected, abs=1e-9)
            assert concurrence_bruteforce(w.matrix) == pytest.approx(expected, abs=1e-7)

    def test_matches_pure_formula(self, rng):
        for _ in range(300):
            beam = random_beam(rng)
            w = to_coherence_matrix(beam)
            assert wootters_concurrence(w) == pytest.approx(
                triple_from_beam(beam).c, abs=1e-9)

    def test_local_unitary_invariance(self, rng):
        from twopath import cxmat

        for _ in range(100):
            w = CoherenceMatrix(random_density(rng))
            c0 = wootters_concurrence(w)
            us, _ = np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
            up, _ = np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
            u = cxmat.tensor_product(us, up)
            rotated = CoherenceMatrix(u @ w.matrix @ u.conj().T)
            assert wootters_concurrence(rotated) == pytest.approx(c0, abs=1e-9)

    def test_pure_matches_reduced_determinant(self, rng):
        from twopath import cxmat

        for _ in range(200):
            w = to_coherence_matrix(random_beam(rng))
            rho = cxmat.partial_trace(w.matrix, "spatial")
            expected = 2.0 * math.sqrt(max(0.0, np.linalg.det(rho).real))
            assert wootters_concurrence(w) == pytest.approx(expected, abs=1e-9)


class TestObservablesFromMatrix:
    def test_pure_state6(self):
        state = grid_states()[5]
        w = to_coherence_matrix(realize(state.params))
        t = observables_from_matrix(w)
        assert t.v == pytest.approx(0.75, abs=1e-10)
        assert t.d == pytest.approx(math.sqrt(3) / 4, abs=1e-10)
        assert t.c == pytest.approx(0.5, abs=1e-10)

    def test_single_path(self):
        m = np.zeros((4, 4), dtype=complex)
        m[1, 1] = 1.0
        t = observables_from_matrix(CoherenceMatrix(m))
        assert (t.v, t.d, t.c) == (0.0, 1.0, 0.0)

    def test_pure_identity_sum(self, rng):
        for _ in range(200):
            w = to_coherence_matrix(random_beam(rng))
            assert observables_from_matrix(w).sum == pytest.approx(1.0, abs=1e-9)

    def test_sum_degrades_gracefully_with_mixing(self, rng):
        # f_sys < 1, no correction: V^2+D^2+C^2 never exceeds 1
        for state in grid_states()[::3]:
            w = to_coherence_matrix(realize(state.params))
            run = run_tomography(w, NoiseModel(0.0, 0.9, seed=0), correct=False)
            assert run.triple.sum <= 1.0 + 1e-9

    def test_polarization_from_matrix(self):
        assert polarization_from_matrix(bell_matrix()) == pytest.approx(0.0, abs=1e-7)
        state = grid_states()[5]
        w = to_coherence_matrix(realize(state.params))
        assert polarization_from_matrix(w) == pytest.approx(math.sqrt(3) / 2, abs=1e-10)


class TestSystematicCorrection:
    def test_round_trip_on_pure_states(self):
        for state in grid_states()[::4]:
            w = to_coherence_matrix(realize(state.params))
            run = run_tomography(w, NoiseModel(0.0, 0.981, seed=0), correct=True)
            assert uhlmann_fidelity(w, run.reconstructed) >= 1.0 - 1e-9
            assert run.triple.sum == pytest.approx(1.0, abs=1e-8)

    def test_identity_factor_is_noop(self):
        w = bell_matrix()
        assert correct_systematic(w, 1.0) is w

    def test_rejects_bad_factor(self):
        with pytest.raises(ValueError):
            correct_systematic(bell_matrix(), 0.0)


class TestFidelity:
    def test_identical(self, rng):
        w = CoherenceMatrix(random_density(rng))
        assert uhlmann_fidelity(w, w) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_pure(self):
        a = np.zeros((4, 4), dtype=complex)
        a[0, 0] = 1.0
        b = np.zeros((4, 4), dtype=complex)
        b[3, 3] = 1.0
        assert uhlmann_fidelity(CoherenceMatrix(a), CoherenceMatrix(b)) == pytest.approx(
            0.0, abs=1e-12)

    def test_pure_overlap(self, rng):
        # against |<psi|phi>|^2 for pure states
        for _ in range(20):
            b1 = random_beam(rng)
            b2 = random_beam(rng)
            w1 = to_coherence_matrix(b1)
            w2 = to_coherence_matrix(b2)
            psi1 = w1.matrix[:, 0] / np.linalg.norm(w1.matrix[:, 0]) \
                if np.linalg.norm(w1.matrix[:, 0]) > 1e-12 else None
            f = uhlmann_fidelity(w1, w2)
            overlap = float(np.real(np.trace(w1.matrix @ w2.matrix)))
            assert f == pytest.approx(overlap, abs=1e-9)

    def test_symmetry(self, rng):
        a = CoherenceMatrix(random_density(rng))
        b = CoherenceMatrix(random_density(rng))
        assert uhlmann_fidelity(a, b) == pytest.approx(uhlmann_fidelity(b, a), abs=1e-10)


class TestRecordSerialization:
    def test_csv_round_trip(self):
        record = measure(bell_matrix(), NoiseModel(0.01, 0.981, seed=2))
        buf = io.StringIO()
        write_record_csv(record, buf, fmt=lambda x: repr(float(x)))
        back = read_record_csv(io.StringIO(buf.getvalue()))
        assert np.allclose(back.intensities, record.intensities, atol=1e-15)

    def test_csv_has_36_rows_in_fixed_order(self):
        buf = io.StringIO()
        write_record_csv(measure(bell_matrix()), buf)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0] == "spatial_basis_label,polarization_basis_label,intensity"
        assert len(lines) == 37
        assert lines[1].startswith("a,x,")
        assert lines[-1].startswith("a-ib,x-iy,")

    def test_rejects_truncated(self):
        buf = io.StringIO()
        write_record_csv(measure(bell_matrix()), buf)
        truncated = "\n".join(buf.getvalue().splitlines()[:20])
        with pytest.raises(ValueError, match="36"):
            read_record_csv(io.StringIO(truncated))

    def test_matrix_json_round_trip(self):
        w = reconstruct(measure(bell_matrix(), NoiseModel(0.01, 0.981, seed=4)))
        back = matrix_from_json(matrix_to_json(w))
        assert np.linalg.norm(back.matrix - w.matrix) < 1e-12

    def test_matrix_json_accepts_rounded(self):
        w = to_coherence_matrix(realize(grid_states()[5].params))
        data = [[[float(f"{z.real:.6g}"), float(f"{z.imag:.6g}")] for z in row]
                for row in np.asarray(w.matrix)]
        import json

        back = matrix_from_json(json.dumps(data))
        assert np.linalg.norm(back.matrix - w.matrix) < 1e-4
