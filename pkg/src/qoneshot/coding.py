"""Entanglement-assisted coding over finite families of quantum channels.

The sender and receiver share one entangled state per message slot.  To send
a message the sender transmits her half of the matching slot through the
(unknown) channel; the receiver runs a binary acceptance test against every
slot and decodes with the square-root measurement built from the per-slot
operators.  Tests for the individual channels are first lifted to projectors
on a shared qubit ancilla, then merged into a single projector that accepts
the output of every channel in the family.

Two senders are modeled.  The uninformed sender uses the same shared state
everywhere; her tests come from the mutual-information-type divergence that
is uniform over all first-register states.  The informed sender knows which
channel acts, keeps one shared state per channel grouped into bands of size
s, and her tests are built against the averaged partner marginal, uniform
over the finite set of possible channel outputs.

All decoding-error probabilities are exact traces of explicitly assembled
operators; nothing is sampled.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Sequence

import numpy as np

from .qcore import (
    ATOL,
    DIM_CAP,
    CapacityError,
    Channel,
    ComplexMatrix,
    DensityMatrix,
    LayoutError,
    Projector,
    PureState,
    RegisterLayout,
    apply_channel,
    as_array,
    content_hash,
    maximally_entangled,
    pauli_channel_family,
    psd_inv_sqrt,
    random_density,
    rng_from,
)
from .divergences import (
    StateEnsemble,
    TestOperator,
    i_h,
    i_h_hat,
    i_h_tilde,
    i_max,
    relative_entropy_variance,
)
from .jordan import union_many

__all__ = [
    "CompoundChannel",
    "CodeParams",
    "DilatedProjector",
    "SimulationReport",
    "neumark_dilate",
    "hayashi_nagaoka_check",
    "achievable_rate_uninformed",
    "converse_rate",
    "rate_informed",
    "simulate_uninformed",
    "simulate_informed",
    "pauli_compound_example",
    "informed_finite_blocking_bounds",
    "schmidt_state",
    "shared_state_sweep",
]


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True, eq=False)
class CompoundChannel:
    """A finite family of channels sharing input and output layouts."""

    channels: tuple[Channel, ...]

    def __post_init__(self):
        chans = tuple(self.channels)
        if not chans:
            raise ValueError("compound channel needs at least one member")
        first = chans[0]
        for ch in chans[1:]:
            if ch.in_layout != first.in_layout or ch.out_layout != first.out_layout:
                raise LayoutError("all member channels must share in/out layouts")
        object.__setattr__(self, "channels", chans)

    @property
    def size(self) -> int:
        return len(self.channels)

    @property
    def dim_in(self) -> int:
        return self.channels[0].dim_in

    @property
    def dim_out(self) -> int:
        return self.channels[0].dim_out


@dataclasses.dataclass(frozen=True, eq=False)
class CodeParams:
    """Rate and error-budget parameters of one code instance.

    ``num_messages`` is derived as ``2^ceil(rate_bits)`` clamped below at one
    message; rate checks always use the unrounded ``rate_bits``.
    ``shared_state`` is the single shared entangled state of the uninformed
    protocol; informed simulations receive their per-channel states
    separately and ignore it.
    """

    rate_bits: float
    epsilon: float
    eta: float
    shared_state: PureState | None = None
    num_messages: int = 0

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must be in (0, 1), got {self.epsilon}")
        if not 0.0 < self.eta < 1.0:
            raise ValueError(f"eta must be in (0, 1), got {self.eta}")
        if self.num_messages == 0:
            e = math.ceil(self.rate_bits)
            object.__setattr__(self, "num_messages", 2**e if e > 0 else 1)
        if self.num_messages < 1:
            raise ValueError("need at least one message")
        if self.shared_state is not None and len(self.shared_state.layout.factors) != 2:
            raise LayoutError("shared state must live on exactly two registers")


@dataclasses.dataclass(frozen=True, eq=False)
class DilatedProjector:
    """A binary test lifted to a projector on system tensor qubit ancilla.

    The defining property: accepting the projector on ``rho (x) |0><0|``
    has the same probability as accepting the source test on ``rho``.  The
    ancilla-ground block of the projector is checked against the source
    operator at construction, which is equivalent to that trace identity
    holding for every input state.
    """

    projector: Projector
    ancilla_dim: int
    source: TestOperator

    def __post_init__(self):
        d = self.source.matrix.dim
        if self.projector.dim != d * self.ancilla_dim:
            raise LayoutError(
                f"projector dimension {self.projector.dim} != "
                f"{d} x ancilla {self.ancilla_dim}"
            )
        block = self.projector.a.reshape(d, self.ancilla_dim, d, self.ancilla_dim)[
            :, 0, :, 0
        ]
        err = float(np.max(np.abs(block - self.source.a)))
        if err > 4.0 * ATOL:
            raise ValueError(
                f"ancilla-ground block deviates from the source test by {err:.3e}"
            )


@dataclasses.dataclass(frozen=True, eq=False)
class SimulationReport:
    """Exact per-channel decoding errors of one simulated code.

    ``per_channel_error[j]`` is the exact probability of decoding any wrong
    message when ``channel_indices[j]`` is the true channel.  ``bound`` is
    the guarantee ``epsilon + 3 eta`` which applies whenever ``rate_ok`` (the
    unrounded rate satisfies the achievable-rate inequality of the protocol
    that produced this report).  ``povm_gap_min_eig`` is the smallest
    eigenvalue of ``I - sum_m Omega(m)``; decoder validity means it is not
    below ``-atol``.
    """

    per_channel_error: tuple[float, ...]
    bound: float
    rate_used: float
    channel_indices: tuple[int, ...]
    num_messages: int
    rate_ok: bool
    povm_gap_min_eig: float

    def __post_init__(self):
        errs = tuple(float(e) for e in self.per_channel_error)
        if len(errs) != len(self.channel_indices):
            raise ValueError("one error entry per simulated channel index")
        for e in errs:
            if e < -ATOL or e > 1.0 + ATOL:
                raise ValueError(f"error probability {e} outside [0, 1]")
        object.__setattr__(
            self, "per_channel_error", tuple(min(1.0, max(0.0, e)) for e in errs)
        )

    def to_record(self) -> dict:
        return {
            "channel_indices": list(self.channel_indices),
            "per_channel_error": list(self.per_channel_error),
            "bound": self.bound,
            "rate_used": self.rate_used,
            "num_messages": self.num_messages,
            "rate_ok": self.rate_ok,
            "povm_gap_min_eig": self.povm_gap_min_eig,
            "within_bound": [e <= self.bound + ATOL for e in self.per_channel_error],
        }


# ---------------------------------------------------------------------------
# operator assembly on many registers
# ---------------------------------------------------------------------------

def _arrange(pieces: Sequence[tuple[np.ndarray, Sequence[int]]], dims: Sequence[int]) -> np.ndarray:
    """Kron the pieces together and permute their tensor slots onto the
    named register positions; every register must be claimed exactly once."""
    order = [p for _, pos in pieces for p in pos]
    if sorted(order) != list(range(len(dims))):
        raise ValueError(f"register positions {order} must cover 0..{len(dims) - 1}")
    big = pieces[0][0]
    for op, _ in pieces[1:]:
        big = np.kron(big, op)
    n = len(dims)
    shape = [dims[i] for i in order]
    tensor = big.reshape(shape + shape)
    inv = np.argsort(np.array(order))
    perm = [*inv, *(inv + n)]
    d = math.prod(dims)
    return np.ascontiguousarray(tensor.transpose(perm).reshape(d, d))


def _embed(op: np.ndarray, dims: Sequence[int], targets: Sequence[int]) -> np.ndarray:
    """Act with ``op`` on the target registers and the identity elsewhere."""
    rest = [i for i in range(len(dims)) if i not in targets]
    if not rest:
        return _arrange([(op, list(targets))], dims)
    d_rest = math.prod(dims[i] for i in rest)
    return _arrange([(op, list(targets)), (np.eye(d_rest), rest)], dims)


def _kron_pow(a: np.ndarray, k: int) -> np.ndarray:
    out = a
    for _ in range(k - 1):
        out = np.kron(out, a)
    return out


# ---------------------------------------------------------------------------
# dilation and the square-root-decoder operator inequality
# ---------------------------------------------------------------------------

def neumark_dilate(m: TestOperator) -> DilatedProjector:
    """Lift a binary test to a projector on system tensor qubit ancilla.

    With ``A = sqrt(I - M)`` and ``B = sqrt(M)`` the block rotation
    ``[[A, -B], [B, A]]`` is unitary, and conjugating the ancilla-excited
    projector by it gives ``Pi = M (x) |0><0| + BA (x) (|0><1| + |1><0|)
    + (I - M) (x) |1><1|``.  All blocks are assembled from one spectral
    decomposition of ``M`` so the result is idempotent to working precision.
    """
    w, v = np.linalg.eigh(m.a)
    wc = np.clip(w, 0.0, 1.0)
    vh = v.conj().T
    accept = (v * wc) @ vh
    cross = (v * np.sqrt(wc * (1.0 - wc))) @ vh
    reject = (v * (1.0 - wc)) @ vh
    e00, e01, e10, e11 = (
        np.array([[1, 0], [0, 0]], dtype=float),
        np.array([[0, 1], [0, 0]], dtype=float),
        np.array([[0, 0], [1, 0]], dtype=float),
        np.array([[0, 0], [0, 1]], dtype=float),
    )
    pi = np.kron(accept, e00) + np.kron(cross, e01 + e10) + np.kron(reject, e11)
    return DilatedProjector(Projector(ComplexMatrix(pi)), 2, m)


def hayashi_nagaoka_check(s, t, c: float) -> dict:
    """Certify the square-root-decoder operator inequality.

    For ``0 <= S <= I``, ``T >= 0`` and ``c > 0``::

        I - (S+T)^(-1/2) S (S+T)^(-1/2)  <=  (1+c)(I-S) + (2+c+1/c) T

    The inverse square root is taken on the support of ``S+T``; on its
    kernel the left side is the identity and the right side dominates, so
    closed operator bounds (eigenvalues touching 0 or 1) are accepted.
    Returns an eigenvalue certificate of the gap; raises if the gap dips
    below ``-atol``.
    """
    ss, tt = as_array(s), as_array(t)
    if c <= 0.0:
        raise ValueError(f"constant c must be positive, got {c}")
    if ss.shape != tt.shape or ss.ndim != 2 or ss.shape[0] != ss.shape[1]:
        raise LayoutError(f"S and T must be square of equal size, got {ss.shape}, {tt.shape}")
    for name, x in (("S", ss), ("T", tt)):
        herm = float(np.max(np.abs(x - x.conj().T)))
        if herm > ATOL:
            raise ValueError(f"{name} is not Hermitian (|X - X^dag| = {herm:.3e})")
    ws = np.linalg.eigvalsh(ss)
    if ws[0] < -ATOL or ws[-1] > 1.0 + ATOL:
        raise ValueError(
            f"S must satisfy 0 <= S <= I, eigenvalues span [{ws[0]:.3e}, {ws[-1]:.3e}]"
        )
    wt = np.linalg.eigvalsh(tt)
    if wt[0] < -ATOL:
        raise ValueError(f"T must be positive semidefinite, min eigenvalue {wt[0]:.3e}")
    d = ss.shape[0]
    inv = psd_inv_sqrt(ss + tt)
    lhs = np.eye(d) - inv @ ss @ inv
    rhs = (1.0 + c) * (np.eye(d) - ss) + (2.0 + c + 1.0 / c) * tt
    gap = rhs - lhs
    gap = 0.5 * (gap + gap.conj().T)
    wg = np.linalg.eigvalsh(gap)
    if wg[0] < -ATOL:
        raise ValueError(f"operator inequality violated: min gap eigenvalue {wg[0]:.3e}")
    return {
        "min_gap_eigenvalue": float(wg[0]),
        "max_lhs_eigenvalue": float(np.linalg.eigvalsh(0.5 * (lhs + lhs.conj().T))[-1]),
        "c": float(c),
        "dim": d,
    }


# ---------------------------------------------------------------------------
# shared-state families and channel outputs
# ---------------------------------------------------------------------------

def schmidt_state(p: float, labels: tuple[str, str] = ("a", "r")) -> PureState:
    """The two-qubit pure state sqrt(p)|00> + sqrt(1-p)|11>."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"Schmidt weight must be in (0, 1), got {p}")
    v = np.zeros(4, dtype=np.complex128)
    v[0] = math.sqrt(p)
    v[3] = math.sqrt(1.0 - p)
    return PureState(v, RegisterLayout(((labels[0], 2), (labels[1], 2))))


def shared_state_sweep(step: float = 0.05, labels: tuple[str, str] = ("a", "r")) -> list[PureState]:
    """The documented family of candidate shared states: a Schmidt-weight
    grid ``p in {step, 2 step, ...}`` (the balanced point is the maximally
    entangled state)."""
    if not 0.0 < step < 0.5:
        raise ValueError(f"step must be in (0, 0.5), got {step}")
    n = int(round(1.0 / step))
    points = [i * step for i in range(1, n) if 0.0 < i * step < 1.0]
    return [schmidt_state(p, labels) for p in points]


def _require_bipartite(psi: PureState, cc: CompoundChannel) -> tuple[str, str]:
    if len(psi.layout.factors) != 2:
        raise LayoutError("shared state must live on exactly two registers")
    a_lbl, r_lbl = psi.layout.labels
    if psi.layout.dim_of(a_lbl) != cc.dim_in:
        raise LayoutError(
            f"first register dimension {psi.layout.dim_of(a_lbl)} != "
            f"channel input {cc.dim_in}"
        )
    if r_lbl in cc.channels[0].out_layout.labels:
        raise LayoutError(
            f"partner label {r_lbl!r} collides with the channel output; relabel"
        )
    return a_lbl, r_lbl


def _channel_outputs(cc: CompoundChannel, psi: PureState) -> list[DensityMatrix]:
    """Joint output-partner states, one per member channel."""
    a_lbl, _ = _require_bipartite(psi, cc)
    rho = psi.density()
    return [apply_channel(ch, rho, targets=[a_lbl]) for ch in cc.channels]


def _output_marginal(ch: Channel, psi: PureState) -> DensityMatrix:
    """The channel output on the transmitted half alone."""
    a_lbl = psi.layout.labels[0]
    return apply_channel(ch, psi.density().marginal([a_lbl]), targets=[a_lbl])


# ---------------------------------------------------------------------------
# rate formulas
# ---------------------------------------------------------------------------

_MIN_IH_CACHE: dict[tuple, tuple[float, ...]] = {}


def _compound_key(cc: CompoundChannel, psi: PureState) -> tuple:
    parts = []
    for ch in cc.channels:
        parts.extend(content_hash(k) for k in ch.kraus)
        parts.append(ch.in_layout.header())
        parts.append(ch.out_layout.header())
    return tuple(parts), content_hash(psi)


def _per_channel_ih(
    cc: CompoundChannel, psi: PureState, eps: float, gap_tol: float
) -> tuple[float, ...]:
    key = (*_compound_key(cc, psi), eps, gap_tol)
    hit = _MIN_IH_CACHE.get(key)
    if hit is None:
        hit = tuple(v for v, _ in (i_h(r, eps, gap_tol=gap_tol) for r in _channel_outputs(cc, psi)))
        _MIN_IH_CACHE[key] = hit
    return hit


def _uninformed_penalty(s: int, eps: float, eta: float) -> float:
    width = math.log2(2 * s)
    return 2.0 * width * math.log2(eta / (6.0 * width)) + math.log2(eps / (4.0 * s))


def _informed_penalty(s: int, eps: float, eta: float) -> float:
    width = math.log2(2 * s)
    return width * math.log2(eta / (6.0 * width)) + math.log2(eps / (4.0 * s * s))


def achievable_rate_uninformed(
    cc: CompoundChannel,
    psi: PureState,
    eps: float,
    eta: float,
    *,
    gap_tol: float = 1e-6,
) -> float:
    """Largest rate the uninformed protocol certifies for this shared state:
    the worst member channel's divergence value plus the (negative) merge and
    confusion penalties.  The caller supplies the shared state; sweeping
    candidates is the caller's (or the command-line driver's) job.
    """
    if not 0.0 < eps < 1.0 or not 0.0 < eta < 1.0:
        raise ValueError("eps and eta must be in (0, 1)")
    vals = _per_channel_ih(cc, psi, eps, gap_tol)
    return min(vals) + _uninformed_penalty(cc.size, eps, eta)


def converse_rate(
    cc: CompoundChannel, psi: PureState, eps: float, *, gap_tol: float = 1e-6
) -> float:
    """Upper bound on any achievable rate at the given shared state: the
    worst member channel's divergence value, with no penalty terms."""
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must be in (0, 1)")
    return min(_per_channel_ih(cc, psi, eps, gap_tol))


def _informed_family(
    cc: CompoundChannel, states: Sequence[PureState]
) -> tuple[list[DensityMatrix], StateEnsemble, StateEnsemble, DensityMatrix]:
    """Joint outputs, output ensemble, partner ensemble, averaged partner."""
    if len(states) != cc.size:
        raise ValueError(
            f"need one shared state per channel, got {len(states)} for {cc.size}"
        )
    lay0 = states[0].layout
    for st in states[1:]:
        if st.layout != lay0:
            raise LayoutError("per-channel shared states must share one layout")
    a_lbl, r_lbl = _require_bipartite(states[0], cc)
    joints = [
        apply_channel(ch, st.density(), targets=[a_lbl])
        for ch, st in zip(cc.channels, states)
    ]
    outputs = StateEnsemble(
        tuple(_output_marginal(ch, st) for ch, st in zip(cc.channels, states))
    )
    partners = StateEnsemble(
        tuple(st.density().marginal([r_lbl]) for st in states)
    )
    avg = DensityMatrix(
        ComplexMatrix(sum(v.a for v in partners.vertices) / cc.size),
        partners.vertices[0].layout,
    )
    return joints, outputs, partners, avg


def rate_informed(
    cc: CompoundChannel,
    states: Sequence[PureState],
    eps: float,
    eta: float,
    *,
    grid: float = 0.02,
) -> float:
    """Largest rate the informed protocol certifies for the given
    per-channel shared states: the worst channel's doubly restricted
    divergence (outputs restricted to the family's output set, partners to
    the family's partner set) plus the informed merge and confusion
    penalties."""
    if not 0.0 < eps < 1.0 or not 0.0 < eta < 1.0:
        raise ValueError("eps and eta must be in (0, 1)")
    joints, outputs, partners, _ = _informed_family(cc, states)
    vals = [i_h_hat(rho, outputs, partners, eps, grid=grid)[0] for rho in joints]
    return min(vals) + _informed_penalty(cc.size, eps, eta)


# ---------------------------------------------------------------------------
# exact simulation
# ---------------------------------------------------------------------------

def _merge_delta(s: int, eta: float) -> float:
    return eta / (3.0 * math.log2(2 * s))


def _uninformed_code(
    cc: CompoundChannel, psi: PureState, eps: float, eta: float, num_messages: int
) -> dict:
    """Assemble the uninformed code: per-channel tests, the merged projector,
    and the per-message slot operators on output x slots x ancilla."""
    _, r_lbl = _require_bipartite(psi, cc)
    d_r = psi.layout.dim_of(r_lbl)
    dims = [cc.dim_out] + [d_r] * num_messages + [2]
    total = math.prod(dims)
    if total > DIM_CAP:
        raise CapacityError(
            f"simulated dimension {total} exceeds the cap {DIM_CAP}"
        )
    joints = _channel_outputs(cc, psi)
    tested = [i_h(rho, eps) for rho in joints]
    dilated = [neumark_dilate(t) for _, t in tested]
    merged = union_many([d.projector for d in dilated], _merge_delta(cc.size, eta))
    lams = [
        _embed(merged.a, dims, [0, m, num_messages + 1])
        for m in range(1, num_messages + 1)
    ]
    return {
        "dims": dims,
        "joints": joints,
        "values": tuple(v for v, _ in tested),
        "tests": tuple(t for _, t in tested),
        "dilated": dilated,
        "merged": merged,
        "lams": lams,
        "partner_marginal": psi.density().marginal([r_lbl]).a,
    }


def _informed_code(
    cc: CompoundChannel,
    states: Sequence[PureState],
    eps: float,
    eta: float,
    num_messages: int,
) -> dict:
    """Assemble the informed code: tests against the averaged partner
    marginal (uniform over the family's outputs), one merged projector, and
    band-summed slot operators."""
    joints, outputs, partners, avg = _informed_family(cc, states)
    s = cc.size
    r_lbl = states[0].layout.labels[1]
    d_r = states[0].layout.dim_of(r_lbl)
    positions = s * num_messages
    dims = [cc.dim_out] + [d_r] * positions + [2]
    total = math.prod(dims)
    if total > DIM_CAP:
        raise CapacityError(
            f"simulated dimension {total} exceeds the cap {DIM_CAP}"
        )
    tested = [i_h_tilde(rho, avg, outputs, eps) for rho in joints]
    dilated = [neumark_dilate(t) for _, t in tested]
    merged = union_many([d.projector for d in dilated], _merge_delta(s, eta))
    slot = [
        _embed(merged.a, dims, [0, k, positions + 1]) for k in range(1, positions + 1)
    ]
    lams = [
        sum(slot[k] for k in range(s * m, s * (m + 1)))
        for m in range(num_messages)
    ]
    return {
        "dims": dims,
        "joints": joints,
        "values": tuple(v for v, _ in tested),
        "tests": tuple(t for _, t in tested),
        "dilated": dilated,
        "merged": merged,
        "lams": lams,
        "slot": slot,
        "positions": positions,
        "partner_marginals": [v.a for v in partners.vertices],
    }


def _decoder(lams: Sequence[np.ndarray]) -> tuple[list[np.ndarray], float]:
    """Square-root measurement from the per-message operators, plus the
    smallest eigenvalue of ``I - sum_m Omega(m)`` as a validity certificate."""
    total = sum(lams)
    inv = psd_inv_sqrt(total, cutoff=1e-12)
    omegas = [inv @ l @ inv for l in lams]
    resid = np.eye(total.shape[0]) - sum(omegas)
    resid = 0.5 * (resid + resid.conj().T)
    return omegas, float(np.linalg.eigvalsh(resid)[0])


def _ground(dim: int) -> np.ndarray:
    e = np.zeros((dim, dim))
    e[0, 0] = 1.0
    return e


def _indices(cc: CompoundChannel, true_channel: int | None) -> tuple[int, ...]:
    if true_channel is None:
        return tuple(range(cc.size))
    if not 0 <= true_channel < cc.size:
        raise ValueError(f"true_channel {true_channel} outside 0..{cc.size - 1}")
    return (true_channel,)


def simulate_uninformed(
    cc: CompoundChannel,
    params: CodeParams,
    true_channel: int | None = None,
    *,
    message: int = 1,
) -> SimulationReport:
    """Exact decoding error of the uninformed protocol.

    The sent message occupies one slot; every other slot holds the partner
    marginal of the shared state.  The reported error for each simulated
    true channel is ``1 - Tr[Omega(message) Theta]`` with all operators
    assembled explicitly.  ``rate_ok`` records whether the unrounded rate
    satisfies the uninformed achievable-rate inequality.
    """
    if params.shared_state is None:
        raise ValueError("uninformed simulation needs params.shared_state")
    n = params.num_messages
    if not 1 <= message <= n:
        raise ValueError(f"message {message} outside 1..{n}")
    code = _uninformed_code(cc, params.shared_state, params.epsilon, params.eta, n)
    omegas, povm_gap = _decoder(code["lams"])
    dims = code["dims"]
    indices = _indices(cc, true_channel)
    errors = []
    for i in indices:
        pieces = [(code["joints"][i].a, [0, message])]
        pieces += [
            (code["partner_marginal"], [k]) for k in range(1, n + 1) if k != message
        ]
        pieces.append((_ground(2), [n + 1]))
        theta = _arrange(pieces, dims)
        errors.append(1.0 - float(np.trace(omegas[message - 1] @ theta).real))
    bound = params.epsilon + 3.0 * params.eta
    limit = min(code["values"]) + _uninformed_penalty(cc.size, params.epsilon, params.eta)
    return SimulationReport(
        per_channel_error=tuple(errors),
        bound=bound,
        rate_used=params.rate_bits,
        channel_indices=indices,
        num_messages=n,
        rate_ok=bool(params.rate_bits <= limit + 1e-9),
        povm_gap_min_eig=povm_gap,
    )


def simulate_informed(
    cc: CompoundChannel,
    states: Sequence[PureState],
    params: CodeParams,
    true_channel: int | None = None,
    *,
    message: int = 1,
) -> SimulationReport:
    """Exact decoding error of the informed protocol.

    Slots are grouped into bands of size ``s``; the sender, knowing the true
    channel ``i``, transmits the ``i``-th member of the message's band.  The
    same merged projector is applied at every slot and the decoder sums each
    band before the square-root construction.  ``rate_ok`` records the rate
    inequality of this construction (tests against the averaged partner
    marginal); it is implied by the published doubly restricted bound, which
    is never larger.
    """
    n = params.num_messages
    if not 1 <= message <= n:
        raise ValueError(f"message {message} outside 1..{n}")
    code = _informed_code(cc, states, params.epsilon, params.eta, n)
    s = cc.size
    omegas, povm_gap = _decoder(code["lams"])
    dims = code["dims"]
    positions = code["positions"]
    indices = _indices(cc, true_channel)
    errors = []
    for i in indices:
        star = s * (message - 1) + i + 1
        pieces = [(code["joints"][i].a, [0, star])]
        pieces += [
            (code["partner_marginals"][(k - 1) % s], [k])
            for k in range(1, positions + 1)
            if k != star
        ]
        pieces.append((_ground(2), [positions + 1]))
        theta = _arrange(pieces, dims)
        errors.append(1.0 - float(np.trace(omegas[message - 1] @ theta).real))
    bound = params.epsilon + 3.0 * params.eta
    limit = min(code["values"]) + _informed_penalty(s, params.epsilon, params.eta)
    return SimulationReport(
        per_channel_error=tuple(errors),
        bound=bound,
        rate_used=params.rate_bits,
        channel_indices=indices,
        num_messages=n,
        rate_ok=bool(params.rate_bits <= limit + 1e-9),
        povm_gap_min_eig=povm_gap,
    )


# ---------------------------------------------------------------------------
# the unitary-family example and finite blocking certificates
# ---------------------------------------------------------------------------

def pauli_compound_example(num_qubits: int, eps: float) -> dict:
    """The family of all Pauli-word conjugations on one qubit with the
    maximally entangled shared state.

    Reports the computed per-channel divergence values together with the
    closed-form reference value ``2 num_qubits + log2(1 - eps)`` and the gap
    between the computed minimum and that reference, plus a check that the
    uniform average of the family sends five fixed random inputs to the
    maximally mixed state.
    """
    if num_qubits != 1:
        raise CapacityError("only num_qubits = 1 is supported")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must be in (0, 1), got {eps}")
    cc = CompoundChannel(tuple(pauli_channel_family(1, "a", "b")))
    psi = maximally_entangled(2, ("a", "r"))
    values = _per_channel_ih(cc, psi, eps, 1e-9)
    reference = 2.0 * num_qubits + math.log2(1.0 - eps)
    d = 2**num_qubits
    rng = rng_from(20260823)
    deviation = 0.0
    for _ in range(5):
        rho = random_density(d, rng).a
        avg = sum(
            k @ rho @ k.conj().T for ch in cc.channels for k in ch.kraus
        ) / cc.size
        deviation = max(deviation, float(np.max(np.abs(avg - np.eye(d) / d))))
    return {
        "num_qubits": num_qubits,
        "epsilon": eps,
        "per_channel_value": [float(v) for v in values],
        "min_value": float(min(values)),
        "reference_value": reference,
        "reference_gap": float(min(values) - reference),
        "average_channel_max_deviation": deviation,
    }


def informed_finite_blocking_bounds(
    states: Sequence[DensityMatrix], n: int, ell: int
) -> dict:
    """Blocked domination and variance certificates for a finite family.

    For bipartite states ``rho^(i)`` (output register first, partner
    second), the blocked averages ``mu`` (partner side) and ``omega``
    (output side) are the uniform means of the ``ell``-fold marginal powers.
    Certifies, and records eigenvalue/variance margins for:

    * every convex mixture of ``n``-fold marginal powers is dominated by
      ``s^(n/ell)`` times the ``(n/ell)``-fold power of the blocked average,
      on both sides (vertices checked exhaustively; random mixtures as
      belt and braces);
    * for each family member, the relative-entropy variance of its
      ``ell``-fold power against ``omega (x) mu`` is at most
      ``(2 log2 s + ell Imax)^2`` with ``Imax`` that member's max-divergence
      from its product of marginals.

    Raises ``ValueError`` if any certificate fails beyond ``atol``.
    """
    if not states:
        raise ValueError("need at least one state")
    if ell < 1 or n < 1 or n % ell != 0:
        raise ValueError(f"ell must divide n, got n={n}, ell={ell}")
    lay0 = states[0].layout
    if len(lay0.factors) != 2:
        raise LayoutError("states must live on exactly two registers")
    for st in states[1:]:
        if st.layout != lay0:
            raise LayoutError("states must share one layout")
    s = len(states)
    b_lbl, r_lbl = lay0.labels
    d_b, d_r = lay0.dims
    for d, k in ((d_r, n), (d_b, n), (d_b * d_r, ell)):
        if d**k > DIM_CAP:
            raise CapacityError(f"blocked dimension {d}^{k} exceeds the cap {DIM_CAP}")
    blocks = n // ell
    marg_b = [st.marginal([b_lbl]).a for st in states]
    marg_r = [st.marginal([r_lbl]).a for st in states]
    mu = sum(_kron_pow(m, ell) for m in marg_r) / s
    omega = sum(_kron_pow(m, ell) for m in marg_b) / s
    factor = float(s) ** blocks
    rng = rng_from(20260824)
    sides = {}
    for name, margs, blocked in (("partner", marg_r, mu), ("output", marg_b, omega)):
        bound = factor * _kron_pow(blocked, blocks)
        powers = [_kron_pow(m, n) for m in margs]
        vertex = [float(np.linalg.eigvalsh(bound - p)[0]) for p in powers]
        mixture = []
        for _ in range(3):
            w = rng.dirichlet(np.ones(s))
            mix = sum(wi * p for wi, p in zip(w, powers))
            mixture.append(float(np.linalg.eigvalsh(bound - mix)[0]))
        worst = min(vertex + mixture)
        if worst < -ATOL:
            raise ValueError(
                f"{name}-side blocked domination fails: min eigenvalue {worst:.3e}"
            )
        sides[name] = {
            "vertex_min_eigenvalues": vertex,
            "mixture_min_eigenvalues": mixture,
        }
    interleave = [pos for j in range(ell) for pos in (j, ell + j)]
    dims2 = [d_b] * ell + [d_r] * ell
    ref = np.kron(omega, mu)
    variance = []
    for i, st in enumerate(states):
        rho_l = _arrange([(_kron_pow(st.a, ell), interleave)], dims2)
        v = relative_entropy_variance(rho_l, ref)
        k = 2.0 * math.log2(s) + ell * i_max(st)
        if v > k * k + 1e-8:
            raise ValueError(
                f"variance certificate fails for state {i}: {v:.6f} > {k * k:.6f}"
            )
        variance.append({"value": float(v), "bound": float(k * k), "margin": float(k * k - v)})
    return {
        "num_states": s,
        "n": n,
        "ell": ell,
        "factor": factor,
        "sides": sides,
        "variance": variance,
    }
