"""Tests for entropic quantities and hypothesis-testing divergences.

Every optimized quantity is checked against an independent route that does
not share code with the solver: classical formulas on commuting instances,
linear programming, spectral characterizations, restricted measurement
families, and brute-force grids.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qoneshot.divergences import (
    StateEnsemble,
    TestOperator,
    best_qubit_two_level_test,
    bloch_density,
    classical_np_value,
    d_max,
    divergence_record,
    hypothesis_test_divergence,
    i_h,
    i_h_hat,
    i_h_tilde,
    i_max,
    min_dh_over_bloch_grid,
    min_dh_over_weight_grids,
    relative_entropy,
    relative_entropy_variance,
)
from qoneshot.qcore import (
    ComplexMatrix,
    DensityMatrix,
    LayoutError,
    RegisterLayout,
    haar_unitary,
    maximally_entangled,
    random_density,
    rng_from,
    tensor_product,
)


def _probs(rng, d):
    p = rng.random(d) + 0.05
    return p / p.sum()


def _rotated_pair(rng, d):
    """A commuting pair diagonal in a common Haar basis, plus its spectra."""
    p, q = _probs(rng, d), _probs(rng, d)
    u = haar_unitary(d, rng)
    return (u * p) @ u.conj().T, (u * q) @ u.conj().T, p, q


def _qubit_layout():
    return RegisterLayout.of("a:2 b:2")


# ---------------------------------------------------------------------------
# relative entropy and its variance
# ---------------------------------------------------------------------------

class TestRelativeEntropy:
    def test_matches_classical_kl_on_commuting_pairs(self):
        rng = rng_from(11)
        for _ in range(50):
            d = int(rng.integers(2, 7))
            r, s, p, q = _rotated_pair(rng, d)
            kl = float(np.sum(p * (np.log2(p) - np.log2(q))))
            assert abs(relative_entropy(r, s) - kl) <= 1e-9

    def test_known_values(self):
        ket0 = np.diag([1.0, 0.0])
        assert relative_entropy(ket0, np.eye(2) / 2) == pytest.approx(1.0, abs=1e-12)
        assert relative_entropy(np.eye(2) / 2, np.eye(2) / 2) == pytest.approx(0.0, abs=1e-12)
        assert relative_entropy(ket0, np.diag([0.0, 1.0])) == math.inf

    def test_unitary_invariance(self):
        rng = rng_from(12)
        r, s, _, _ = _rotated_pair(rng, 4)
        u = haar_unitary(4, rng)
        before = relative_entropy(r, s)
        after = relative_entropy(u @ r @ u.conj().T, u @ s @ u.conj().T)
        assert abs(before - after) <= 1e-9

    @given(
        st.floats(0.05, 0.95),
        st.floats(0.05, 0.95),
    )
    @settings(max_examples=60, deadline=None)
    def test_binary_kl_formula(self, a, b):
        r = np.diag([a, 1.0 - a])
        s = np.diag([b, 1.0 - b])
        kl = a * math.log2(a / b) + (1.0 - a) * math.log2((1.0 - a) / (1.0 - b))
        assert abs(relative_entropy(r, s) - max(kl, 0.0)) <= 1e-10


class TestRelativeEntropyVariance:
    def test_matches_classical_on_commuting_pairs(self):
        rng = rng_from(21)
        for _ in range(50):
            d = int(rng.integers(2, 7))
            r, s, p, q = _rotated_pair(rng, d)
            logs = np.log2(p) - np.log2(q)
            mean = float(np.sum(p * logs))
            var = float(np.sum(p * logs**2)) - mean**2
            assert abs(relative_entropy_variance(r, s) - var) <= 1e-8

    def test_zero_for_equal_states_and_pure_vs_flat(self):
        rng = rng_from(22)
        rho = random_density(3, rng).a
        assert relative_entropy_variance(rho, rho) == pytest.approx(0.0, abs=1e-9)
        psi = random_density(4, rng, rank=1).a
        assert relative_entropy_variance(psi, np.eye(4) / 4) == pytest.approx(0.0, abs=1e-9)

    def test_nonnegative(self):
        rng = rng_from(23)
        for _ in range(30):
            d = int(rng.integers(2, 6))
            r = random_density(d, rng).a
            s = random_density(d, rng).a
            assert relative_entropy_variance(r, s) >= -1e-9


class TestDMax:
    def test_matches_spectral_oracle(self):
        from qoneshot.qcore import psd_inv_sqrt

        rng = rng_from(31)
        for _ in range(100):
            d = int(rng.integers(2, 7))
            r = random_density(d, rng).a
            s = random_density(d, rng).a
            isq = psd_inv_sqrt(s)
            oracle = math.log2(float(np.linalg.eigvalsh(isq @ r @ isq)[-1]))
            assert abs(d_max(r, s) - oracle) <= 1e-9

    def test_classical_value_and_support_violation(self):
        r = np.diag([0.9, 0.1])
        s = np.diag([0.45, 0.55])
        assert d_max(r, s) == pytest.approx(1.0, abs=1e-10)
        assert d_max(np.diag([1.0, 0.0]), np.diag([0.0, 1.0])) == math.inf

    def test_dominates_relative_entropy(self):
        rng = rng_from(32)
        for _ in range(30):
            d = int(rng.integers(2, 6))
            r = random_density(d, rng).a
            s = random_density(d, rng).a
            assert d_max(r, s) >= relative_entropy(r, s) - 1e-9

    def test_i_max_of_maximally_entangled(self):
        for d in (2, 3):
            phi = maximally_entangled(d).density()
            assert i_max(phi) == pytest.approx(2 * math.log2(d), abs=1e-9)


class TestVarianceVersusDMax:
    def test_variance_can_exceed_squared_dmax(self):
        """Frozen classical counterexample: the second moment is not
        controlled by the squared operator-dominance exponent, because the
        log-likelihood can be large and negative without affecting it."""
        r = np.diag([0.9, 0.1])
        s = np.diag([0.45, 0.55])
        k = d_max(r, s)
        v = relative_entropy_variance(r, s)
        assert k == pytest.approx(1.0, abs=1e-10)
        assert v > k**2 + 0.05, f"expected a strict violation, got V={v} vs k^2={k**2}"


# ---------------------------------------------------------------------------
# plain hypothesis-testing divergence
# ---------------------------------------------------------------------------

class TestHypothesisTestDivergence:
    def test_equal_states(self):
        rng = rng_from(41)
        rho = random_density(3, rng).a
        for eps in (0.1, 0.25, 0.5):
            value, test = hypothesis_test_divergence(rho, rho, eps)
            assert abs(value - (-math.log2(1.0 - eps))) <= 1e-10
            assert test.type1_error <= eps + 1e-9

    def test_classical_known_values(self):
        ket0 = np.diag([1.0, 0.0])
        flat = np.eye(2) / 2
        v1, _ = hypothesis_test_divergence(ket0, flat, 0.5)
        assert v1 == pytest.approx(2.0, abs=1e-10)
        v2, _ = hypothesis_test_divergence(ket0, flat, 0.25)
        assert v2 == pytest.approx(3.0 - math.log2(3.0), abs=1e-10)

    def test_orthogonal_supports_give_infinity(self):
        v, test = hypothesis_test_divergence(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]), 0.3)
        assert v == math.inf
        assert test.type2_bound <= 1e-300
        assert classical_np_value(np.array([1.0, 0.0]), np.array([0.0, 1.0]), 0.3) == math.inf

    def test_matches_linear_program_on_commuting_pairs(self):
        rng = rng_from(42)
        for _ in range(30):
            d = int(rng.integers(2, 9))
            r, s, p, q = _rotated_pair(rng, d)
            for eps in (0.1, 0.3):
                value, test = hypothesis_test_divergence(r, s, eps)
                assert abs(value - classical_np_value(p, q, eps)) <= 1e-8
                assert test.type1_error <= eps + 1e-9

    def test_matches_two_level_family_on_noncommuting_qubits(self):
        rng = rng_from(43)
        for _ in range(3):
            r = random_density(2, rng).a
            s = random_density(2, rng).a
            value, _ = hypothesis_test_divergence(r, s, 0.2)
            family = best_qubit_two_level_test(r, s, 0.2)
            assert family <= value + 1e-6  # restricted family cannot beat the optimum
            assert value - family <= 1e-4

    def test_type1_saturates_on_full_rank_pairs(self):
        rng = rng_from(44)
        for _ in range(20):
            d = int(rng.integers(2, 6))
            r = random_density(d, rng).a
            s = random_density(d, rng).a
            _, test = hypothesis_test_divergence(r, s, 0.15)
            assert test.type1_error <= 0.15 + 1e-9
            assert abs(test.type1_error - 0.15) <= 1e-6

    def test_optimal_test_commutes_with_threshold_matrix(self):
        rng = rng_from(45)
        for _ in range(10):
            r = random_density(4, rng).a
            s = random_density(4, rng).a
            _, test = hypothesis_test_divergence(r, s, 0.2)
            assert test.threshold is not None
            gap = r - test.threshold * s
            comm = test.a @ gap - gap @ test.a
            assert float(np.max(np.abs(comm))) <= 1e-8

    def test_monotone_in_epsilon(self):
        rng = rng_from(46)
        r = random_density(3, rng).a
        s = random_density(3, rng).a
        values = [hypothesis_test_divergence(r, s, e)[0] for e in (0.05, 0.2, 0.5, 0.8)]
        assert all(b >= a - 1e-9 for a, b in zip(values, values[1:]))

    @given(st.floats(0.05, 0.95))
    @settings(max_examples=30, deadline=None)
    def test_equal_state_value_formula(self, eps):
        rho = np.diag([0.7, 0.3])
        value, _ = hypothesis_test_divergence(rho, rho, eps)
        assert abs(value - (-math.log2(1.0 - eps))) <= 1e-9

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            hypothesis_test_divergence(np.eye(2) / 2, np.eye(2) / 2, 0.0)
        with pytest.raises(LayoutError):
            hypothesis_test_divergence(np.eye(2) / 2, np.eye(3) / 3, 0.1)


# ---------------------------------------------------------------------------
# divergences minimized over one register
# ---------------------------------------------------------------------------

class TestIH:
    def test_product_state_collapses_to_epsilon_term(self):
        rng = rng_from(51)
        rho_a = random_density(2, rng, layout=RegisterLayout.of("a:2"))
        rho_b = random_density(2, rng, layout=RegisterLayout.of("b:2"))
        rho = tensor_product(rho_a, rho_b)
        for eps in (0.1, 0.3):
            value, test = i_h(rho, eps)
            assert abs(value - (-math.log2(1.0 - eps))) <= 1e-6
            assert test.certificate_gap_bits <= 1e-6

    def test_maximally_entangled_value(self):
        phi = maximally_entangled(2).density()
        for eps in (0.05, 0.1, 0.25):
            value, test = i_h(phi, eps)
            assert abs(value - (2.0 - math.log2(1.0 - eps))) <= 1e-6
            assert test.type1_error <= eps + 1e-9
            assert test.certificate_gap_bits <= 1e-6

    def test_certified_uniform_bound(self):
        """The returned test must satisfy its advertised Type-2 bound for
        arbitrary states on the minimized register, not just the optimizer."""
        rng = rng_from(52)
        rho = random_density(4, rng, layout=_qubit_layout())
        value, test = i_h(rho, 0.2)
        rho_b = rho.marginal({"b"}).a
        bound = 2.0 ** (-value)
        for _ in range(50):
            sigma = random_density(2, rng).a
            overlap = float(np.trace(test.a @ np.kron(sigma, rho_b)).real)
            assert overlap <= bound * (1.0 + 1e-9) + 1e-15

    def test_upper_bounded_by_unminimized_divergence(self):
        rng = rng_from(53)
        for _ in range(5):
            rho = random_density(4, rng, layout=_qubit_layout())
            prod = np.kron(rho.marginal({"a"}).a, rho.marginal({"b"}).a)
            dh, _ = hypothesis_test_divergence(rho.a, prod, 0.2)
            value, _ = i_h(rho, 0.2)
            assert value <= dh + 1e-9

    def test_matches_bloch_grid_oracle(self):
        rng = rng_from(54)
        rho = random_density(4, rng, rank=2, layout=_qubit_layout())
        value, _ = i_h(rho, 0.2)
        grid_value, _ = min_dh_over_bloch_grid(rho, 0.2)
        assert grid_value >= value - 2e-9  # grid scans a subset of states
        assert grid_value - value <= 5e-4

    def test_monotone_in_epsilon(self):
        rng = rng_from(55)
        rho = random_density(4, rng, layout=_qubit_layout())
        v1, _ = i_h(rho, 0.1)
        v2, _ = i_h(rho, 0.25)
        assert v2 >= v1 - 1e-9

    def test_rejects_non_bipartite_layout(self):
        rho = random_density(8, rng_from(56), layout=RegisterLayout.of("a:2 b:2 c:2"))
        with pytest.raises(LayoutError):
            i_h(rho, 0.2)


class TestIHTilde:
    def test_singleton_reduces_to_plain_divergence(self):
        rng = rng_from(61)
        rho = random_density(4, rng, layout=_qubit_layout())
        rho_a = rho.marginal({"a"})
        rho_b = rho.marginal({"b"})
        restricted = StateEnsemble((rho_a,))
        value, test = i_h_tilde(rho, rho_b, restricted, 0.2)
        direct, _ = hypothesis_test_divergence(rho.a, np.kron(rho_a.a, rho_b.a), 0.2)
        assert abs(value - direct) <= 1e-9
        assert test.certificate_gap_bits <= 1e-9

    def test_maximally_entangled_over_basis_states(self):
        lay = RegisterLayout.of("s:2")
        ens = StateEnsemble(
            (
                DensityMatrix.of(np.diag([1.0, 0.0]), lay),
                DensityMatrix.of(np.diag([0.0, 1.0]), lay),
            )
        )
        phi = maximally_entangled(2).density()
        flat = DensityMatrix.of(np.eye(2) / 2, lay)
        eps = 0.25
        value, test = i_h_tilde(phi, flat, ens, eps)
        assert abs(value - (2.0 - math.log2(1.0 - eps))) <= 1e-9
        # the certificate is uniform over the whole restricted set
        bound = 2.0 ** (-value)
        for w in np.linspace(0.0, 1.0, 11):
            sigma = ens.mix([w, 1.0 - w])
            overlap = float(np.trace(test.a @ np.kron(sigma, flat.a)).real)
            assert overlap <= bound + 1e-12

    def test_restriction_cannot_decrease_value(self):
        rng = rng_from(62)
        rho = random_density(4, rng, layout=_qubit_layout())
        rho_b = rho.marginal({"b"})
        ens = StateEnsemble(
            (
                random_density(2, rng, layout=RegisterLayout.of("s:2")),
                random_density(2, rng, layout=RegisterLayout.of("s:2")),
            )
        )
        unrestricted, _ = i_h(rho, 0.2)
        restricted, _ = i_h_tilde(rho, rho_b, ens, 0.2)
        assert restricted >= unrestricted - 1e-6


class TestIHHat:
    def test_singletons_reduce_to_tilde(self):
        rng = rng_from(71)
        rho = random_density(4, rng, layout=_qubit_layout())
        s_a = StateEnsemble((random_density(2, rng, layout=RegisterLayout.of("s:2")),))
        s_b = StateEnsemble((random_density(2, rng, layout=RegisterLayout.of("t:2")),))
        hat, _ = i_h_hat(rho, s_a, s_b, 0.2)
        tilde, _ = i_h_tilde(rho, s_b.vertices[0], s_a, 0.2)
        assert abs(hat - tilde) <= 1e-12

    def test_matches_weight_grid_oracle(self):
        rng = rng_from(72)
        rho = random_density(4, rng, layout=_qubit_layout())
        mk = lambda lbl: random_density(2, rng, layout=RegisterLayout.of(lbl))
        s_a = StateEnsemble((mk("s:2"), mk("s:2")))
        s_b = StateEnsemble((mk("t:2"), mk("t:2")))
        hat, _ = i_h_hat(rho, s_a, s_b, 0.2, grid=0.05)
        oracle = min_dh_over_weight_grids(rho, s_a, s_b, 0.2, step=0.05)
        assert oracle >= hat - 1e-6  # the oracle scans a subset of mixtures
        assert oracle - hat <= 5e-3


# ---------------------------------------------------------------------------
# result plumbing
# ---------------------------------------------------------------------------

class TestResultTypes:
    def test_test_operator_validation(self):
        with pytest.raises(ValueError):
            TestOperator(ComplexMatrix(np.array([[0.0, 1.0], [0.0, 0.0]])), 0.1, 0.5)
        with pytest.raises(ValueError):
            TestOperator(ComplexMatrix(np.diag([1.5, 0.0])), 0.1, 0.5)

    def test_ensemble_validation_and_mixing(self):
        lay = RegisterLayout.of("s:2")
        v1 = DensityMatrix.of(np.diag([1.0, 0.0]), lay)
        v2 = DensityMatrix.of(np.diag([0.0, 1.0]), lay)
        ens = StateEnsemble((v1, v2))
        np.testing.assert_allclose(ens.mix([0.25, 0.75]), np.diag([0.25, 0.75]))
        np.testing.assert_allclose(ens.mix([1.0, 3.0]), np.diag([0.25, 0.75]))
        with pytest.raises(ValueError):
            StateEnsemble(())
        with pytest.raises(LayoutError):
            StateEnsemble((v1, random_density(3, rng_from(0), layout=RegisterLayout.of("u:3"))))
        with pytest.raises(ValueError):
            ens.mix([0.5])

    def test_divergence_record_shape(self):
        rng = rng_from(81)
        r = random_density(2, rng).a
        value, test = hypothesis_test_divergence(r, np.eye(2) / 2, 0.2)
        rec = divergence_record("dh", {"rho": r, "sigma": np.eye(2) / 2}, value, test)
        assert rec["quantity"] == "dh"
        assert set(rec["inputs"]) == {"rho", "sigma"}
        assert all(len(h) == 64 for h in rec["inputs"].values())
        assert rec["value_bits"] == value
        assert rec["residuals"]["type2_bound"] == test.type2_bound

    def test_bloch_density_matches_expected_parametrization(self):
        np.testing.assert_allclose(bloch_density(0, 0, 1), np.diag([1.0, 0.0]))
        np.testing.assert_allclose(
            bloch_density(1, 0, 0), np.array([[0.5, 0.5], [0.5, 0.5]])
        )
        rho = bloch_density(0.3, -0.4, 0.5)
        assert float(np.trace(rho).real) == pytest.approx(1.0)
        assert float(np.linalg.eigvalsh(rho)[0]) >= 0.0
