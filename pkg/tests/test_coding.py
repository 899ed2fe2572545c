"""Tests for entanglement-assisted coding over finite channel families.

Decoding errors reported by the simulators are re-derived by an independent
index-loop embedding oracle (no shared reshape/transpose machinery), rate
formulas are checked against hand-written penalty arithmetic plus direct
divergence calls, and the restricted-rate value is compared against a
nested weight-grid scan.  Operator inequalities are certified by explicit
eigenvalue computations.
"""

import math

import numpy as np
import pytest

from qoneshot.coding import (
    CodeParams,
    CompoundChannel,
    DilatedProjector,
    SimulationReport,
    _arrange,
    _channel_outputs,
    _embed,
    _informed_family,
    _uninformed_code,
    achievable_rate_uninformed,
    converse_rate,
    hayashi_nagaoka_check,
    informed_finite_blocking_bounds,
    neumark_dilate,
    pauli_compound_example,
    rate_informed,
    schmidt_state,
    shared_state_sweep,
    simulate_informed,
    simulate_uninformed,
)
from qoneshot.divergences import (
    StateEnsemble,
    TestOperator,
    hypothesis_test_divergence,
    i_h,
    min_dh_over_weight_grids,
)
from qoneshot.qcore import (
    ATOL,
    CapacityError,
    ComplexMatrix,
    DensityMatrix,
    LayoutError,
    RegisterLayout,
    maximally_entangled,
    random_density,
    rng_from,
    unitary_channel,
)

QUBIT_IN = RegisterLayout.of("a:2")
QUBIT_OUT = RegisterLayout.of("b:2")
IDENT = unitary_channel(np.eye(2), QUBIT_IN, QUBIT_OUT)
ZPHASE = unitary_channel(np.diag([1.0, -1.0]), QUBIT_IN, QUBIT_OUT)
XFLIP = unitary_channel(np.array([[0.0, 1.0], [1.0, 0.0]]), QUBIT_IN, QUBIT_OUT)
EPS, ETA = 0.2, 0.05


def random_test_operator(dim, rng, scale=0.9):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = a @ a.conj().T
    h = h / np.linalg.eigvalsh(h)[-1] * scale
    return TestOperator(matrix=ComplexMatrix(h), type1_error=0.0, type2_bound=1.0)


def slow_embed(op, dims, targets):
    """Index-loop embedding oracle: identity off the targets, no reshaping."""
    n = len(dims)
    total = math.prod(dims)
    rest = [i for i in range(n) if i not in targets]

    def unravel(x):
        idx = []
        for d in reversed(dims):
            idx.append(x % d)
            x //= d
        return list(reversed(idx))

    tdims = [dims[t] for t in targets]
    out = np.zeros((total, total), dtype=complex)
    for r in range(total):
        ri = unravel(r)
        for c in range(total):
            ci = unravel(c)
            if any(ri[k] != ci[k] for k in rest):
                continue
            ro = co = 0
            for td, t in zip(tdims, targets):
                ro = ro * td + ri[t]
                co = co * td + ci[t]
            out[r, c] = op[ro, co]
    return out


class TestDomainTypes:
    def test_compound_channel_requires_members(self):
        with pytest.raises(ValueError, match="at least one"):
            CompoundChannel(())

    def test_compound_channel_requires_common_layouts(self):
        other = unitary_channel(np.eye(2), QUBIT_IN, RegisterLayout.of("c:2"))
        with pytest.raises(LayoutError, match="share"):
            CompoundChannel((IDENT, other))

    def test_num_messages_rounds_rate_up(self):
        psi = maximally_entangled(2, ("a", "r"))
        assert CodeParams(1.0, EPS, ETA, psi).num_messages == 2
        assert CodeParams(0.0, EPS, ETA, psi).num_messages == 1
        assert CodeParams(-5.2, EPS, ETA, psi).num_messages == 1
        assert CodeParams(2.5, EPS, ETA, psi).num_messages == 8

    def test_explicit_num_messages_preserved(self):
        assert CodeParams(0.3, EPS, ETA, num_messages=4).num_messages == 4

    def test_parameter_ranges(self):
        with pytest.raises(ValueError, match="epsilon"):
            CodeParams(1.0, 0.0, ETA)
        with pytest.raises(ValueError, match="eta"):
            CodeParams(1.0, EPS, 1.0)

    def test_report_validates_errors(self):
        with pytest.raises(ValueError, match="outside"):
            SimulationReport((1.5,), 0.35, 1.0, (0,), 2, True, 0.0)
        rep = SimulationReport((0.1, -1e-12), 0.35, 1.0, (0, 1), 2, True, 0.0)
        assert rep.per_channel_error == (0.1, 0.0)
        rec = rep.to_record()
        assert rec["within_bound"] == [True, True]

    def test_dilated_projector_rejects_tampered_block(self):
        rng = rng_from(3)
        m = random_test_operator(2, rng)
        dil = neumark_dilate(m)
        other = random_test_operator(2, rng)
        with pytest.raises(ValueError, match="block"):
            DilatedProjector(dil.projector, 2, other)


class TestNeumarkDilate:
    def test_identity_test_dilates_to_ground_block(self):
        m = TestOperator(matrix=ComplexMatrix(np.eye(3)), type1_error=0.0, type2_bound=1.0)
        dil = neumark_dilate(m)
        expect = np.kron(np.eye(3), np.diag([1.0, 0.0]))
        assert np.max(np.abs(dil.projector.a - expect)) < 1e-12
        assert dil.ancilla_dim == 2

    def test_half_identity_accepts_with_probability_half(self):
        m = TestOperator(matrix=ComplexMatrix(0.5 * np.eye(2)), type1_error=0.5, type2_bound=0.5)
        dil = neumark_dilate(m)
        ground = np.diag([1.0, 0.0])
        rng = rng_from(11)
        for _ in range(100):
            rho = random_density(2, rng).a
            p = np.trace(dil.projector.a @ np.kron(rho, ground)).real
            assert abs(p - 0.5) < 1e-12

    def test_basis_projector_accepts_with_overlap(self):
        m = TestOperator(matrix=ComplexMatrix(np.diag([1.0, 0.0])), type1_error=0.0, type2_bound=1.0)
        dil = neumark_dilate(m)
        ground = np.diag([1.0, 0.0])
        rng = rng_from(12)
        for _ in range(50):
            rho = random_density(2, rng).a
            p = np.trace(dil.projector.a @ np.kron(rho, ground)).real
            assert abs(p - rho[0, 0].real) < 1e-12

    def test_trace_identity_for_random_tests(self):
        rng = rng_from(13)
        ground = np.diag([1.0, 0.0])
        for dim in (2, 3, 4):
            m = random_test_operator(dim, rng)
            dil = neumark_dilate(m)
            assert dil.projector.rank == dim
            for _ in range(100):
                rho = random_density(dim, rng).a
                lifted = np.trace(dil.projector.a @ np.kron(rho, ground)).real
                direct = np.trace(m.a @ rho).real
                assert abs(lifted - direct) < 1e-11


class TestHayashiNagaoka:
    def test_scalar_case(self):
        cert = hayashi_nagaoka_check(0.5 * np.eye(2), 0.5 * np.eye(2), 1.0)
        assert abs(cert["min_gap_eigenvalue"] - 2.5) < 1e-12

    def test_zero_confusion_reduces_to_posterior_gap(self):
        rng = rng_from(21)
        s = random_density(2, rng).a * 0.8
        c = 0.7
        cert = hayashi_nagaoka_check(s, np.zeros((2, 2)), c)
        # with T = 0 and S invertible the left side vanishes, so the gap is
        # exactly (1+c)(I-S)
        expect = (1.0 + c) * (1.0 - np.linalg.eigvalsh(s)[-1])
        assert abs(cert["min_gap_eigenvalue"] - expect) < 1e-10

    def test_random_instances(self):
        rng = rng_from(22)
        for _ in range(50):
            d = int(rng.integers(2, 9))
            s = random_density(d, rng).a * float(rng.uniform(0.05, 1.0))
            t = random_density(d, rng).a * float(rng.uniform(0.0, 3.0))
            c = float(rng.uniform(0.05, 5.0))
            cert = hayashi_nagaoka_check(s, t, c)
            assert cert["min_gap_eigenvalue"] >= -ATOL

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError, match="positive"):
            hayashi_nagaoka_check(0.5 * np.eye(2), np.zeros((2, 2)), 0.0)
        with pytest.raises(ValueError, match="0 <= S <= I"):
            hayashi_nagaoka_check(1.5 * np.eye(2), np.zeros((2, 2)), 1.0)
        with pytest.raises(ValueError, match="semidefinite"):
            hayashi_nagaoka_check(0.5 * np.eye(2), -0.1 * np.eye(2), 1.0)
        with pytest.raises(LayoutError):
            hayashi_nagaoka_check(0.5 * np.eye(2), np.zeros((3, 3)), 1.0)


class TestOperatorAssembly:
    def test_arrange_matches_permuted_kron(self):
        x = np.arange(9.0).reshape(3, 3)
        y = np.array([[1.0, 2.0], [3.0, 4.0]])
        out = _arrange([(x, [1]), (y, [0])], [2, 3])
        assert np.allclose(out, np.kron(y, x))

    def test_embed_matches_index_loop(self):
        rng = rng_from(31)
        dims = [2, 3, 2, 2]
        for targets in ([0, 2], [1, 3], [3, 1], [2, 0]):
            d = math.prod(dims[t] for t in targets)
            op = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            fast = _embed(op, dims, list(targets))
            slow = slow_embed(op, dims, list(targets))
            assert np.max(np.abs(fast - slow)) < 1e-13

    def test_arrange_requires_full_cover(self):
        with pytest.raises(ValueError, match="cover"):
            _arrange([(np.eye(2), [0])], [2, 2])


class TestRateFormulas:
    def test_achievable_is_divergence_plus_penalty(self):
        cc = CompoundChannel((IDENT,))
        psi = maximally_entangled(2, ("a", "r"))
        got = achievable_rate_uninformed(cc, psi, EPS, ETA)
        base, _ = i_h(_channel_outputs(cc, psi)[0], EPS, gap_tol=1e-6)
        penalty = 2.0 * math.log2(2.0) * math.log2(ETA / 6.0) + math.log2(EPS / 4.0)
        assert abs(got - (base + penalty)) < 1e-9

    def test_converse_is_worst_divergence(self):
        cc = CompoundChannel((IDENT, ZPHASE))
        psi = maximally_entangled(2, ("a", "r"))
        vals = [i_h(r, EPS, gap_tol=1e-6)[0] for r in _channel_outputs(cc, psi)]
        assert abs(converse_rate(cc, psi, EPS) - min(vals)) < 1e-9

    def test_converse_dominates_achievable(self):
        cc = CompoundChannel((IDENT, XFLIP))
        for psi in (maximally_entangled(2, ("a", "r")), schmidt_state(0.3)):
            assert converse_rate(cc, psi, EPS) > achievable_rate_uninformed(
                cc, psi, EPS, ETA
            )

    def test_rate_increases_with_eta_and_diverges_at_zero(self):
        cc = CompoundChannel((IDENT,))
        psi = maximally_entangled(2, ("a", "r"))
        r_small = achievable_rate_uninformed(cc, psi, EPS, 0.01)
        r_mid = achievable_rate_uninformed(cc, psi, EPS, 0.1)
        r_big = achievable_rate_uninformed(cc, psi, EPS, 0.9)
        assert r_small < r_mid < r_big
        assert achievable_rate_uninformed(cc, psi, EPS, 1e-6) < -35.0

    def test_parameter_validation(self):
        cc = CompoundChannel((IDENT,))
        psi = maximally_entangled(2, ("a", "r"))
        with pytest.raises(ValueError, match="eps"):
            achievable_rate_uninformed(cc, psi, 0.0, ETA)
        with pytest.raises(ValueError, match="eps"):
            converse_rate(cc, psi, 1.0)

    def test_informed_single_channel_is_plain_divergence(self):
        cc = CompoundChannel((IDENT,))
        psi = schmidt_state(0.3)
        got = rate_informed(cc, [psi], EPS, ETA)
        _, outputs, partners, _ = _informed_family(cc, [psi])
        joint = _channel_outputs(cc, psi)[0]
        ref = np.kron(outputs.vertices[0].a, partners.vertices[0].a)
        base, _ = hypothesis_test_divergence(joint.a, ref, EPS)
        penalty = math.log2(2.0) * math.log2(ETA / 6.0) + math.log2(EPS / 4.0)
        assert abs(got - (base + penalty)) < 1e-8

    def test_informed_identical_members_collapse(self):
        psi = maximally_entangled(2, ("a", "r"))
        one = rate_informed(CompoundChannel((IDENT,)), [psi], EPS, ETA)
        two = rate_informed(CompoundChannel((IDENT, IDENT)), [psi, psi], EPS, ETA)
        base_one = one - (math.log2(2.0) * math.log2(ETA / 6.0) + math.log2(EPS / 4.0))
        width = math.log2(4.0)
        base_two = two - (width * math.log2(ETA / (6.0 * width)) + math.log2(EPS / 16.0))
        assert abs(base_one - base_two) < 1e-8

    def test_informed_value_matches_weight_grid_oracle(self):
        cc = CompoundChannel((IDENT, XFLIP))
        states = [maximally_entangled(2, ("a", "r")), schmidt_state(0.3)]
        joints, outputs, partners, _ = _informed_family(cc, states)
        got = rate_informed(cc, states, EPS, ETA)
        width = math.log2(4.0)
        penalty = width * math.log2(ETA / (6.0 * width)) + math.log2(EPS / 16.0)
        oracle = min(
            min_dh_over_weight_grids(rho, outputs, partners, EPS, step=0.02)
            for rho in joints
        )
        diff = oracle - (got - penalty)
        assert -1e-9 < diff < 1e-4

    def test_informed_requires_one_state_per_channel(self):
        cc = CompoundChannel((IDENT, XFLIP))
        with pytest.raises(ValueError, match="per channel"):
            rate_informed(cc, [maximally_entangled(2, ("a", "r"))], EPS, ETA)


class TestSimulateUninformed:
    def test_single_member_single_message_error_is_test_type1(self):
        cc = CompoundChannel((IDENT,))
        psi = maximally_entangled(2, ("a", "r"))
        params = CodeParams(0.0, EPS, ETA, psi)
        rep = simulate_uninformed(cc, params)
        # one message, one member: the decoder is the lifted test itself,
        # so the exact error equals its acceptance deficit
        code = _uninformed_code(cc, psi, EPS, ETA, 1)
        assert abs(rep.per_channel_error[0] - code["tests"][0].type1_error) < 1e-12
        assert rep.per_channel_error[0] <= EPS + 3.0 * ETA
        assert rep.rate_ok is False or params.rate_bits <= 0
        assert rep.povm_gap_min_eig >= -1e-9

    def test_rate_satisfying_code_meets_guarantee(self):
        for cc in (CompoundChannel((IDENT,)), CompoundChannel((IDENT, ZPHASE))):
            psi = maximally_entangled(2, ("a", "r"))
            rate = achievable_rate_uninformed(cc, psi, EPS, ETA)
            params = CodeParams(rate, EPS, ETA, psi)
            rep = simulate_uninformed(cc, params)
            assert rep.rate_ok
            assert all(e <= EPS + 3.0 * ETA + 1e-12 for e in rep.per_channel_error)
            assert rep.povm_gap_min_eig >= -1e-9

    def test_two_message_error_matches_index_loop_oracle(self):
        cc = CompoundChannel((IDENT, ZPHASE))
        psi = maximally_entangled(2, ("a", "r"))
        params = CodeParams(1.0, EPS, ETA, psi)
        rep = simulate_uninformed(cc, params, true_channel=0)
        code = _uninformed_code(cc, psi, EPS, ETA, 2)
        dims = [2, 2, 2, 2]
        lams = [slow_embed(code["merged"].a, dims, [0, m, 3]) for m in (1, 2)]
        total = lams[0] + lams[1]
        w, v = np.linalg.eigh(total)
        inv = (v * np.where(w > 1e-12, 1.0 / np.sqrt(np.maximum(w, 1e-12)), 0.0)) @ v.conj().T
        omega = inv @ lams[0] @ inv
        joint = code["joints"][0].a
        partner = code["partner_marginal"]
        ground = np.diag([1.0, 0.0])
        theta = np.zeros((16, 16), dtype=complex)
        for r in range(16):
            b, a1, a2, p = r >> 3 & 1, r >> 2 & 1, r >> 1 & 1, r & 1
            for c in range(16):
                bc, a1c, a2c, pc = c >> 3 & 1, c >> 2 & 1, c >> 1 & 1, c & 1
                theta[r, c] = joint[2 * b + a1, 2 * bc + a1c] * partner[a2, a2c] * ground[p, pc]
        oracle = 1.0 - np.trace(omega @ theta).real
        assert abs(rep.per_channel_error[0] - oracle) < 1e-12

    def test_message_relabeling_symmetry(self):
        cc = CompoundChannel((IDENT, ZPHASE))
        psi = maximally_entangled(2, ("a", "r"))
        params = CodeParams(1.0, EPS, ETA, psi)
        first = simulate_uninformed(cc, params, message=1)
        second = simulate_uninformed(cc, params, message=2)
        for e1, e2 in zip(first.per_channel_error, second.per_channel_error):
            assert abs(e1 - e2) < 1e-12

    def test_input_validation(self):
        cc = CompoundChannel((IDENT,))
        psi = maximally_entangled(2, ("a", "r"))
        with pytest.raises(ValueError, match="shared_state"):
            simulate_uninformed(cc, CodeParams(0.0, EPS, ETA))
        params = CodeParams(0.0, EPS, ETA, psi)
        with pytest.raises(ValueError, match="true_channel"):
            simulate_uninformed(cc, params, true_channel=5)
        with pytest.raises(ValueError, match="message"):
            simulate_uninformed(cc, params, message=2)

    def test_dimension_cap_raises(self):
        cc = CompoundChannel((IDENT,))
        psi = maximally_entangled(2, ("a", "r"))
        with pytest.raises(CapacityError, match="cap"):
            simulate_uninformed(cc, CodeParams(12.0, EPS, ETA, psi))


class TestSimulateInformed:
    def test_single_member_reduces_to_uninformed(self):
        cc = CompoundChannel((IDENT,))
        psi = maximally_entangled(2, ("a", "r"))
        params = CodeParams(0.0, EPS, ETA, psi)
        uninf = simulate_uninformed(cc, params)
        inf = simulate_informed(cc, [psi], params)
        assert abs(uninf.per_channel_error[0] - inf.per_channel_error[0]) < 1e-9

    def test_band_code_meets_guarantee(self):
        cc = CompoundChannel((IDENT, XFLIP))
        states = [maximally_entangled(2, ("a", "r")), schmidt_state(0.3)]
        params = CodeParams(-30.0, EPS, ETA)
        rep = simulate_informed(cc, states, params)
        assert rep.rate_ok
        assert rep.num_messages == 1
        assert all(e <= EPS + 3.0 * ETA + 1e-12 for e in rep.per_channel_error)
        assert rep.povm_gap_min_eig >= -1e-9

    def test_band_error_matches_index_loop_oracle(self):
        from qoneshot.divergences import i_h_tilde
        from qoneshot.jordan import union_many

        cc = CompoundChannel((IDENT, XFLIP))
        states = [maximally_entangled(2, ("a", "r")), schmidt_state(0.3)]
        params = CodeParams(0.0, EPS, ETA)
        rep = simulate_informed(cc, states, params, true_channel=1)
        joints, outputs, partners, avg = _informed_family(cc, states)
        tests = [i_h_tilde(r, avg, outputs, EPS)[1] for r in joints]
        merged = union_many(
            [neumark_dilate(t).projector for t in tests], ETA / (3.0 * math.log2(4.0))
        )
        dims = [2, 2, 2, 2]
        lams = [slow_embed(merged.a, dims, [0, k, 3]) for k in (1, 2)]
        total = lams[0] + lams[1]
        w, v = np.linalg.eigh(total)
        inv = (v * np.where(w > 1e-12, 1.0 / np.sqrt(np.maximum(w, 1e-12)), 0.0)) @ v.conj().T
        omega = inv @ total @ inv
        joint = joints[1].a
        first = partners.vertices[0].a
        ground = np.diag([1.0, 0.0])
        theta = np.zeros((16, 16), dtype=complex)
        for r in range(16):
            b, a1, a2, p = r >> 3 & 1, r >> 2 & 1, r >> 1 & 1, r & 1
            for c in range(16):
                bc, a1c, a2c, pc = c >> 3 & 1, c >> 2 & 1, c >> 1 & 1, c & 1
                theta[r, c] = joint[2 * b + a2, 2 * bc + a2c] * first[a1, a1c] * ground[p, pc]
        oracle = 1.0 - np.trace(omega @ theta).real
        assert abs(rep.per_channel_error[0] - oracle) < 1e-12

    def test_band_message_relabeling_symmetry(self):
        cc = CompoundChannel((IDENT, XFLIP))
        states = [maximally_entangled(2, ("a", "r")), schmidt_state(0.3)]
        params = CodeParams(1.0, EPS, ETA)
        first = simulate_informed(cc, states, params, message=1)
        second = simulate_informed(cc, states, params, message=2)
        for e1, e2 in zip(first.per_channel_error, second.per_channel_error):
            assert abs(e1 - e2) < 1e-12

    def test_state_layout_validation(self):
        cc = CompoundChannel((IDENT, XFLIP))
        good = maximally_entangled(2, ("a", "r"))
        other = maximally_entangled(2, ("x", "y"))
        with pytest.raises(LayoutError, match="share"):
            simulate_informed(cc, [good, other], CodeParams(0.0, EPS, ETA))


class TestDecoderInequality:
    def test_povm_never_exceeds_identity_on_larger_code(self):
        cc = CompoundChannel((IDENT,))
        psi = maximally_entangled(2, ("a", "r"))
        params = CodeParams(2.0, EPS, ETA, psi)
        rep = simulate_uninformed(cc, params)
        assert rep.num_messages == 4
        assert rep.povm_gap_min_eig >= -1e-9

    def test_square_root_step_certified_on_actual_operators(self):
        cc = CompoundChannel((IDENT, ZPHASE))
        psi = maximally_entangled(2, ("a", "r"))
        code = _uninformed_code(cc, psi, EPS, ETA, 2)
        cert = hayashi_nagaoka_check(
            code["lams"][0], code["lams"][1], ETA / (EPS + ETA)
        )
        assert cert["min_gap_eigenvalue"] >= -ATOL


class TestDivergenceSandwich:
    def test_mutual_information_squeezed_by_product_divergence(self):
        rng = rng_from(404)
        eps = EPS
        for _ in range(8):
            rho = random_density(4, rng, layout=RegisterLayout.of("b:2 r:2"))
            prod = np.kron(rho.marginal(["b"]).a, rho.marginal(["r"]).a)
            for delta in (0.05, 0.1):
                lo, _ = hypothesis_test_divergence(rho.a, prod, eps)
                hi, _ = hypothesis_test_divergence(rho.a, prod, eps + delta)
                mid, _ = i_h(rho, eps + delta)
                assert mid >= lo - 2.0 * math.log2(eps / delta) - 1e-4
                assert mid <= hi + 1e-4


class TestPauliExample:
    def test_reference_value_disagrees_by_twice_the_log_term(self):
        rep = pauli_compound_example(1, 0.1)
        computed = 2.0 - math.log2(0.9)
        assert abs(rep["min_value"] - computed) < 1e-3
        spread = max(rep["per_channel_value"]) - min(rep["per_channel_value"])
        assert spread < 1e-6
        assert abs(rep["reference_gap"] + 2.0 * math.log2(0.9)) < 1e-3
        assert rep["average_channel_max_deviation"] < 1e-10

    def test_average_channel_kills_entanglement_one_sided(self):
        from qoneshot.qcore import apply_channel, pauli_channel_family

        psi = maximally_entangled(2, ("a", "r")).density()
        avg = np.zeros((4, 4), dtype=complex)
        for ch in pauli_channel_family(1, "a", "b"):
            avg += apply_channel(ch, psi, targets=["a"]).a
        assert np.max(np.abs(avg / 4.0 - np.eye(4) / 4.0)) < 1e-12

    def test_rejects_larger_families(self):
        with pytest.raises(CapacityError):
            pauli_compound_example(2, 0.1)


class TestFiniteBlocking:
    def test_single_member_is_tight(self):
        rng = rng_from(51)
        st = random_density(4, rng, layout=RegisterLayout.of("b:2 r:2"))
        cert = informed_finite_blocking_bounds([st], 2, 1)
        for side in cert["sides"].values():
            assert abs(side["vertex_min_eigenvalues"][0]) < 1e-12

    def test_two_member_certificates_hold(self):
        rng = rng_from(52)
        states = [
            random_density(4, rng, layout=RegisterLayout.of("b:2 r:2"))
            for _ in range(2)
        ]
        for n, ell in ((2, 1), (2, 2), (4, 2)):
            cert = informed_finite_blocking_bounds(states, n, ell)
            for side in cert["sides"].values():
                assert min(side["vertex_min_eigenvalues"]) >= -ATOL
                assert min(side["mixture_min_eigenvalues"]) >= -ATOL
            for entry in cert["variance"]:
                assert entry["value"] <= entry["bound"] + 1e-8

    def test_product_members_have_constant_bound(self):
        rng = rng_from(53)
        lay = RegisterLayout.of("b:2 r:2")
        states = []
        for _ in range(2):
            left = random_density(2, rng).a
            right = random_density(2, rng).a
            states.append(DensityMatrix(ComplexMatrix(np.kron(left, right)), lay))
        cert = informed_finite_blocking_bounds(states, 2, 1)
        for entry in cert["variance"]:
            assert abs(entry["bound"] - 4.0) < 1e-6
            assert entry["value"] <= 4.0

    def test_divisibility_and_capacity(self):
        rng = rng_from(54)
        st = random_density(4, rng, layout=RegisterLayout.of("b:2 r:2"))
        with pytest.raises(ValueError, match="divide"):
            informed_finite_blocking_bounds([st], 3, 2)
        with pytest.raises(CapacityError):
            informed_finite_blocking_bounds([st], 13, 1)


class TestSharedStateFamily:
    def test_sweep_contains_the_balanced_point(self):
        sweep = shared_state_sweep(0.05)
        assert len(sweep) == 19
        balanced = maximally_entangled(2, ("a", "r"))
        gaps = [np.max(np.abs(psi.a - balanced.a)) for psi in sweep]
        assert min(gaps) < 1e-12

    def test_schmidt_state_range(self):
        with pytest.raises(ValueError, match="Schmidt"):
            schmidt_state(0.0)
        with pytest.raises(ValueError, match="step"):
            shared_state_sweep(0.6)
