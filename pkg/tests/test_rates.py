import numpy as np
import pytest

from entlab.operators import (
    DensityMatrix,
    HermitianOperator,
    Spectrum,
    trace_norm,
)
from entlab.rates import (
    AdmissiblePair,
    BipartiteState,
    BOUND_CONSTANTS,
    admissible_from_state,
    bucket_eigenvalues,
    entanglement_rate,
    extract_contraction,
    lambda_eigenbasis,
    lambda_functional,
    maximize_over_hamiltonian,
    proof_decomposition,
    sie_lambda_bound,
    sie_rate_bound,
    sim_bound,
)
from entlab.rates import AdmissibilityError, _bucket_index
from entlab.search import sample_admissible_pair


def rand_unit_herm(rng, d):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    m = (g + g.conj().T) / 2
    return m / np.abs(np.linalg.eigvalsh(m)).max()


class TestAdmissiblePair:
    def test_accepts_valid(self):
        X = HermitianOperator(np.diag([0.05, 0.05]))
        Y = HermitianOperator(np.diag([0.6, 0.4]))
        pair = AdmissiblePair(X, Y, 0.1)
        assert pair.dim == 2

    def test_rejects_trace_mismatch(self):
        X = HermitianOperator(np.diag([0.05, 0.05]))
        Y = HermitianOperator(np.diag([0.6, 0.4]))
        with pytest.raises(AdmissibilityError):
            AdmissiblePair(X, Y, 0.2)

    def test_rejects_x_above_y(self):
        X = HermitianOperator(np.diag([0.5, 0.0]))
        Y = HermitianOperator(np.diag([0.4, 0.6]))
        with pytest.raises(AdmissibilityError):
            AdmissiblePair(X, Y, 0.5)

    def test_rejects_negative_x(self):
        X = HermitianOperator(np.diag([0.2, -0.1]))
        Y = HermitianOperator(np.diag([0.6, 0.4]))
        with pytest.raises(AdmissibilityError):
            AdmissiblePair(X, Y, 0.1)

    def test_json_round_trip(self):
        pair = sample_admissible_pair(4, 0.1, 11)
        back = AdmissiblePair.from_json(pair.to_json())
        assert np.allclose(back.X.mat, pair.X.mat)
        assert np.allclose(back.Y.mat, pair.Y.mat)


class TestBoundFunctions:
    def test_sie_lambda_values(self):
        p = np.exp(-2.0)
        assert sie_lambda_bound(p) == pytest.approx(18.0 * np.exp(-2.0))
        assert sie_lambda_bound(0.01) == pytest.approx(0.09 * np.log(100.0))

    def test_sie_lambda_regime(self):
        with pytest.raises(ValueError):
            sie_lambda_bound(0.2)
        with pytest.raises(ValueError):
            sie_lambda_bound(0.0)

    def test_sie_rate_values(self):
        assert sie_rate_bound(3, 1.0) == pytest.approx(18.0 * np.log(3.0))
        assert sie_rate_bound(1, 5.0) == 0.0
        with pytest.raises(ValueError):
            sie_rate_bound(0, 1.0)

    def test_sim_values(self):
        assert sim_bound(0.5) == pytest.approx(np.log(2.0))
        assert sim_bound(0.1) == pytest.approx(
            -0.1 * np.log(0.1) - 0.9 * np.log(0.9)
        )
        assert sim_bound(0.3) == pytest.approx(sim_bound(0.7))
        with pytest.raises(ValueError):
            sim_bound(1.0)

    def test_constants_registry(self):
        assert BOUND_CONSTANTS.c_sie == 18.0
        assert BOUND_CONSTANTS.c_sim == 1.0
        assert BOUND_CONSTANTS.beta == 1.9123


class TestLambdaFunctional:
    def hand_pair(self):
        # X with off-diagonal 0.05, Y diagonal (0.8, 0.2): the commutator with
        # log Y is purely off-diagonal and the maximum works out by hand
        X = HermitianOperator(np.array([[0.05, 0.05], [0.05, 0.05]]))
        Y = HermitianOperator(np.diag([0.8, 0.2]))
        return AdmissiblePair(X, Y, 0.1)

    def test_hand_computed_maximum(self):
        lam, H_opt = maximize_over_hamiltonian(self.hand_pair())
        assert lam == pytest.approx(2.0 * 0.05 * np.log(4.0), abs=1e-12)
        assert np.abs(np.linalg.eigvalsh(H_opt.mat)).max() == pytest.approx(1.0)

    def test_maximum_is_attained(self):
        rng = np.random.default_rng(21)
        for dim in (2, 3, 6):
            pair = sample_admissible_pair(dim, 0.08, int(rng.integers(1 << 30)))
            lam, H_opt = maximize_over_hamiltonian(pair)
            assert lambda_functional(H_opt, pair) == pytest.approx(lam, abs=1e-10)

    def test_maximum_dominates_random_h(self):
        rng = np.random.default_rng(22)
        for dim in (2, 4, 7):
            pair = sample_admissible_pair(dim, 0.05, int(rng.integers(1 << 30)))
            lam, _ = maximize_over_hamiltonian(pair)
            for _ in range(50):
                H = HermitianOperator(rand_unit_herm(rng, dim))
                assert abs(lambda_functional(H, pair)) <= lam * (1 + 1e-10)

    def test_equals_trace_norm_of_commutator(self):
        from entlab.operators import matrix_log_on_support, commutator

        rng = np.random.default_rng(23)
        for dim in (2, 5, 9):
            pair = sample_admissible_pair(dim, 0.1, int(rng.integers(1 << 30)))
            lam, _ = maximize_over_hamiltonian(pair)
            logY = matrix_log_on_support(pair.Y).mat
            C = HermitianOperator(1j * commutator(pair.X.mat, logY))
            assert lam == pytest.approx(trace_norm(C), abs=1e-12)

    def test_commuting_pair_gives_zero(self):
        # X proportional to Y commutes with log Y, so the functional vanishes
        Y = HermitianOperator(np.diag([0.7, 0.3]))
        X = HermitianOperator(0.1 * Y.mat)
        pair = AdmissiblePair(X, Y, 0.1)
        lam, H_opt = maximize_over_hamiltonian(pair)
        assert lam == 0.0
        assert np.allclose(H_opt.mat, np.eye(2))

    def test_eigenbasis_sum_matches_commutator_form(self):
        rng = np.random.default_rng(24)
        for dim in (2, 4, 8):
            pair = sample_admissible_pair(dim, 0.09, int(rng.integers(1 << 30)))
            g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
            w, v = np.linalg.eigh((g + g.conj().T) / 2)
            P = HermitianOperator(
                (v * rng.uniform(0.0, 1.0, size=dim)) @ v.conj().T
            )
            direct = lambda_eigenbasis(P, pair)
            assert direct == pytest.approx(
                2.0 * abs(lambda_functional(P, pair)), abs=1e-9
            )

    def test_eigenbasis_rejects_bad_projector(self):
        pair = sample_admissible_pair(3, 0.1, 5)
        with pytest.raises(ValueError):
            lambda_eigenbasis(HermitianOperator(2.0 * np.eye(3)), pair)


class TestEntanglementRate:
    def _finite_difference_rate(self, state, H, dt=1e-5):
        """Oracle: entropy of the aA factor after evolving by exp(iHt)."""
        from entlab.operators import partial_trace_matrix

        d_a, d_A, d_B, d_b = state.dims
        Hfull = np.kron(
            np.kron(np.eye(d_a), H.mat), np.eye(d_b)
        )
        w, v = np.linalg.eigh(Hfull)

        def entropy_at(t):
            u = (v * np.exp(1j * w * t)) @ v.conj().T
            psi = u @ state.amplitudes
            rho = np.outer(psi, psi.conj())
            rho_aA = partial_trace_matrix(rho, [d_a * d_A, d_B * d_b], [0])
            lam = np.linalg.eigvalsh(rho_aA)
            lam = lam[lam > 1e-14]
            return -np.sum(lam * np.log(lam))

        return (entropy_at(dt) - entropy_at(-dt)) / (2 * dt)

    def test_matches_finite_difference(self):
        rng = np.random.default_rng(31)
        for dims in ((1, 2, 2, 1), (2, 2, 3, 1), (1, 3, 2, 2)):
            n = int(np.prod(dims))
            amp = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            amp /= np.linalg.norm(amp)
            state = BipartiteState(dims, amp)
            dAB = dims[1] * dims[2]
            g = rng.standard_normal((dAB, dAB)) + 1j * rng.standard_normal((dAB, dAB))
            H = HermitianOperator((g + g.conj().T) / 2)
            rate = entanglement_rate(state, H)
            fd = self._finite_difference_rate(state, H)
            assert rate == pytest.approx(fd, abs=1e-5)

    def test_product_state_zero_rate_when_h_local(self):
        # H acting on A alone cannot build aA|Bb entanglement
        rng = np.random.default_rng(32)
        a = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        b = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        amp = np.kron(a / np.linalg.norm(a), b / np.linalg.norm(b))
        state = BipartiteState((1, 2, 3, 1), amp)
        hA = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        H = HermitianOperator(np.kron((hA + hA.conj().T) / 2, np.eye(3)))
        assert entanglement_rate(state, H) == pytest.approx(0.0, abs=1e-9)

    def test_dimension_mismatch(self):
        state = BipartiteState((1, 2, 2, 1), np.array([1.0, 0, 0, 0]))
        with pytest.raises(ValueError):
            entanglement_rate(state, HermitianOperator(np.eye(6)))


class TestAdmissibleFromState:
    def test_pair_shape(self):
        rng = np.random.default_rng(41)
        g = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        m = g @ g.conj().T
        rho = DensityMatrix(HermitianOperator(m / np.trace(m).real))
        pair = admissible_from_state(rho, 3, 2)
        assert pair.p == 0.25
        assert pair.dim == 6
        assert np.allclose(pair.X.mat, rho.mat / 4)

    def test_many_random_states(self):
        # admissibility here is the operator inequality rho_AB <= d_B rho_A x I
        rng = np.random.default_rng(42)
        for _ in range(100):
            dA, dB = int(rng.integers(2, 5)), int(rng.integers(2, 5))
            d = dA * dB
            g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            m = g @ g.conj().T
            rho = DensityMatrix(HermitianOperator(m / np.trace(m).real))
            pair = admissible_from_state(rho, dA, dB)
            assert pair.p == pytest.approx(1.0 / dB**2)


class TestContraction:
    def test_factorization_round_trip(self):
        rng = np.random.default_rng(51)
        for dim in (2, 4, 8):
            pair = sample_admissible_pair(dim, 0.1, int(rng.integers(1 << 30)))
            Z = extract_contraction(pair)
            wz = np.linalg.eigvalsh(Z.mat)
            assert wz[0] > -1e-9
            assert wz[-1] < 1.0 + 1e-9
            wy, vy = np.linalg.eigh(pair.Y.mat)
            sq = (vy * np.sqrt(np.clip(wy, 0, None))) @ vy.conj().T
            assert np.max(np.abs(sq @ Z.mat @ sq - pair.X.mat)) < 1e-10


class TestBuckets:
    def test_index_examples(self):
        # p = 0.25: [0.25, 1) is bucket 1, [0.0625, 0.25) is bucket 2
        assert _bucket_index(0.5, 0.25) == 1
        assert _bucket_index(0.3, 0.25) == 1
        assert _bucket_index(0.2, 0.25) == 2
        assert _bucket_index(1.0, 0.25) == 1
        assert _bucket_index(0.25, 0.25) == 1
        assert _bucket_index(0.0625, 0.25) == 2
        assert _bucket_index(1e-6, 0.25) == 10

    def test_weights_sum_to_p(self):
        rng = np.random.default_rng(61)
        for dim in (3, 6, 10):
            pair = sample_admissible_pair(dim, 0.1, int(rng.integers(1 << 30)))
            w, v = np.linalg.eigh(pair.Y.mat)
            spec = Spectrum(w[::-1].copy(), v[:, ::-1].copy())
            buckets = bucket_eigenvalues(spec, pair.X, pair.p)
            assert np.sum(buckets.weights) == pytest.approx(pair.p, abs=1e-10)
            assert np.all(buckets.weights > -1e-12)
            # ranges tile the spectrum in order
            hi_prev = 0
            for lo, hi in buckets.index_ranges:
                assert lo == hi_prev
                hi_prev = hi
            assert hi_prev == dim

    def test_rejects_large_p(self):
        pair = sample_admissible_pair(3, 0.1, 1)
        w, v = np.linalg.eigh(pair.Y.mat)
        spec = Spectrum(w[::-1].copy(), v[:, ::-1].copy())
        with pytest.raises(ValueError):
            bucket_eigenvalues(spec, pair.X, 0.7)


class TestProofDecomposition:
    def audit(self, dim, p, seed):
        pair = sample_admissible_pair(dim, p, seed)
        _, H_opt = maximize_over_hamiltonian(pair)
        P = HermitianOperator(0.5 * (np.eye(dim) - H_opt.mat))
        return pair, proof_decomposition(pair, P)

    def test_identity_and_bounds(self):
        rng = np.random.default_rng(71)
        for dim in (3, 8, 16):
            for _ in range(20):
                pair, rep = self.audit(dim, 0.1, int(rng.integers(1 << 30)))
                assert rep.reassembled_total == pytest.approx(
                    rep.direct_lambda, abs=1e-9
                )
                assert rep.all_bounds_hold()
                assert np.min(rep.margins) > -1e-9
                assert rep.total_bound == pytest.approx(sie_lambda_bound(0.1))

    def test_direct_matches_eigenbasis_sum(self):
        pair = sample_admissible_pair(6, 0.05, 99)
        _, H_opt = maximize_over_hamiltonian(pair)
        P = HermitianOperator(0.5 * (np.eye(6) - H_opt.mat))
        rep = proof_decomposition(pair, P)
        assert rep.direct_lambda == pytest.approx(
            lambda_eigenbasis(P, pair), abs=1e-9
        )

    def test_optimal_projector_halves_the_maximum(self):
        # P = (I - H_opt)/2 turns the closed-form maximum into 2|Tr(P[X,logY])|
        pair = sample_admissible_pair(5, 0.08, 100)
        lam, H_opt = maximize_over_hamiltonian(pair)
        P = HermitianOperator(0.5 * (np.eye(5) - H_opt.mat))
        rep = proof_decomposition(pair, P)
        assert rep.direct_lambda == pytest.approx(lam, abs=1e-9)

    def test_rejects_out_of_regime_p(self):
        pair = sample_admissible_pair(3, 0.2, 3)
        with pytest.raises(ValueError):
            proof_decomposition(pair, HermitianOperator(np.eye(3) / 2))

    def test_json_keys(self):
        _, rep = self.audit(4, 0.1, 17)
        blob = rep.to_json()
        assert set(blob) == {
            "brackets_line1",
            "brackets_line3",
            "separated",
            "total",
            "direct",
            "margins",
            "p",
            "dim",
        }
