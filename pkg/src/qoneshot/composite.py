"""Composite hypothesis testing between finite families of i.i.d. states.

Given finite sets ``S1`` and ``S2`` of states and a copy count ``n``, the
central quantity is the best Type-2 exponent achievable by a single test
that accepts every ``n``-fold product of an ``S1`` member with probability
at least ``1 - epsilon``:

    value = max over 0 <= L <= I with Tr[rho^(x n) L] >= 1 - eps for all
            rho in S1, of  min over mixtures sigma_n of n-fold S2 products
            of  -log2 Tr[sigma_n L].

``beta_exact`` solves this program at desk scale through its Lagrangian
dual — a jointly concave maximization over mixture weights on the
alternative hull and multipliers on the acceptance constraints — and then
rebuilds an explicit optimal test by a linear program in the eigenbasis of
the dual's threshold operator.  ``build_universal_test`` assembles a
single test for the whole family by the dilate/union/compress route: one
near-optimal test per prototype state, each lifted to a projector with a
shared ancilla qubit, merged by the projector-union construction, and
compressed back onto the ancilla ground block.  ``epsilon_net`` supplies
the finite prototype sets for qubit families: a Bloch-ball lattice plus a
golden-spiral surface layer, with the covering quality validated by
sampling rather than proved.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Sequence

import numpy as np
import scipy.optimize

from .coding import neumark_dilate
from .divergences import StateEnsemble, TestOperator
from .jordan import union_many
from .qcore import (
    ATOL,
    CapacityError,
    ComplexMatrix,
    DensityMatrix,
    RegisterLayout,
    content_hash,
    rng_from,
    root_fidelity,
)

MAX_VERTICES = 4
MAX_COPIES = 3
MAX_TOTAL_DIM = 64
TOL_OPT = 1e-4

QUBIT = RegisterLayout.of("a:2")

__all__ = [
    "CompositeInstance",
    "EpsilonNet",
    "beta_exact",
    "build_universal_test",
    "classical_composite_value",
    "composite_record",
    "epsilon_net",
    "net_covering_report",
]


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True, eq=False)
class CompositeInstance:
    """A finite composite discrimination problem: accept every n-fold
    product of an ``s1`` member, reject mixtures of n-fold ``s2`` products."""

    s1: StateEnsemble
    s2: StateEnsemble
    n: int
    epsilon: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"copy count must be >= 1, got {self.n}")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.s1.dim != self.s2.dim:
            raise CapacityError(
                f"families live on different spaces ({self.s1.dim} vs {self.s2.dim})"
            )

    @property
    def dim(self) -> int:
        return self.s1.dim

    @property
    def total_dim(self) -> int:
        return self.dim ** self.n


@dataclasses.dataclass(frozen=True, eq=False)
class EpsilonNet:
    """A finite set of states meant to approximate every state of the
    space to within the recorded fidelity deficit.

    The covering quality is an empirical calibration, not a theorem: use
    ``net_covering_report`` to measure it on sampled states.
    """

    points: tuple[DensityMatrix, ...]
    resolution: float

    def __post_init__(self):
        if not self.points:
            raise ValueError("net needs at least one point")
        if not 0.0 < self.resolution < 1.0:
            raise ValueError(f"resolution must lie in (0, 1), got {self.resolution}")


def composite_record(inst: CompositeInstance, value: float, test: TestOperator,
                     delta: float | None = None) -> dict:
    """Structured, JSON-ready record of a composite-testing computation."""
    powers1 = [_tensor_power(v.a, inst.n) for v in inst.s1.vertices]
    powers2 = [_tensor_power(v.a, inst.n) for v in inst.s2.vertices]
    rec = {
        "s1_hashes": [content_hash(v) for v in inst.s1.vertices],
        "s2_hashes": [content_hash(v) for v in inst.s2.vertices],
        "n": inst.n,
        "epsilon": inst.epsilon,
        "value_bits": value,
        "type1_residuals": [
            1.0 - float(np.trace(test.a @ r).real) for r in powers1
        ],
        "type2_per_vertex": [
            float(np.trace(test.a @ q).real) for q in powers2
        ],
        "iterations": test.iterations,
        "certificate_gap_bits": test.certificate_gap_bits,
    }
    if delta is not None:
        rec["delta"] = delta
    return rec


# ---------------------------------------------------------------------------
# exact program
# ---------------------------------------------------------------------------

def _tensor_power(a: np.ndarray, n: int) -> np.ndarray:
    out = a
    for _ in range(n - 1):
        out = np.kron(out, a)
    return out


def _check_caps(inst: CompositeInstance) -> None:
    if len(inst.s1.vertices) > MAX_VERTICES or len(inst.s2.vertices) > MAX_VERTICES:
        raise CapacityError(
            f"at most {MAX_VERTICES} vertices per family "
            f"(got {len(inst.s1.vertices)} and {len(inst.s2.vertices)})"
        )
    if inst.n > MAX_COPIES:
        raise CapacityError(f"at most {MAX_COPIES} copies, got {inst.n}")
    if inst.total_dim > MAX_TOTAL_DIM:
        raise CapacityError(
            f"total dimension {inst.total_dim} exceeds cap {MAX_TOTAL_DIM}"
        )


def _dual_ascent(rmats: list[np.ndarray], qmats: list[np.ndarray], eps: float):
    """Maximize the jointly concave dual

        g(w, lam) = (1-eps)*sum(lam) - Tr[(sum_i lam_i R_i - sum_j w_j Q_j)_+]

    over mixture weights w on the alternative vertices and multipliers
    lam >= 0 on the acceptance constraints.  Its optimum equals the
    smallest achievable worst-case Type-2 probability."""
    ni, nj = len(rmats), len(qmats)
    evals = 0

    def split(x):
        return x[:nj], x[nj:]

    def neg_value_and_grad(x):
        nonlocal evals
        evals += 1
        w, lam = split(x)
        d = sum(l * r for l, r in zip(lam, rmats))
        d = d - sum(wj * q for wj, q in zip(w, qmats))
        vals, vecs = np.linalg.eigh(d)
        keep = vals > 0.0
        vp = vecs[:, keep]
        g = (1.0 - eps) * float(np.sum(lam)) - float(np.sum(vals[keep]))
        grad_w = np.array([np.sum((vp.conj().T @ q) * vp.T).real for q in qmats])
        grad_l = np.array(
            [(1.0 - eps) - np.sum((vp.conj().T @ r) * vp.T).real for r in rmats]
        )
        return -g, -np.concatenate([grad_w, grad_l])

    cap = 2.0 / eps
    bounds = [(0.0, 1.0)] * nj + [(0.0, cap)] * ni
    simplex = {
        "type": "eq",
        "fun": lambda x: float(np.sum(x[:nj]) - 1.0),
        "jac": lambda x: np.concatenate([np.ones(nj), np.zeros(ni)]),
    }
    best = None
    for scale in (0.5, 1.0, min(2.0, 0.5 / eps)):
        x0 = np.concatenate([np.full(nj, 1.0 / nj), np.full(ni, scale)])
        res = scipy.optimize.minimize(
            neg_value_and_grad,
            x0,
            jac=True,
            method="SLSQP",
            bounds=bounds,
            constraints=[simplex],
            options={"maxiter": 400, "ftol": 1e-14},
        )
        if best is None or res.fun < best.fun:
            best = res
    w, lam = split(best.x)
    w = np.clip(w, 0.0, None)
    w = w / w.sum()
    return max(-best.fun, 0.0), w, np.clip(lam, 0.0, cap), evals


def _eigenbasis_test(rmats, qmats, eps, w, lam):
    """Rebuild an explicit test from the dual solution: diagonalize the
    threshold operator and optimize the acceptance weights of its
    eigenvectors by a linear program."""
    d = sum(l * r for l, r in zip(lam, rmats))
    d = d - sum(wj * q for wj, q in zip(w, qmats))
    _, vecs = np.linalg.eigh(d)
    p = np.stack([np.einsum("ki,ij,jk->k", vecs.conj().T, r, vecs).real for r in rmats])
    q = np.stack([np.einsum("ki,ij,jk->k", vecs.conj().T, s, vecs).real for s in qmats])
    dim = vecs.shape[0]
    # variables: acceptance weights c (dim of them), then the level t
    c_obj = np.concatenate([np.zeros(dim), [1.0]])
    a_ub = np.block([[q, -np.ones((len(qmats), 1))], [-p, np.zeros((len(rmats), 1))]])
    b_ub = np.concatenate([np.zeros(len(qmats)), -np.full(len(rmats), 1.0 - eps)])
    lp = scipy.optimize.linprog(
        c_obj,
        A_ub=a_ub,
        b_ub=b_ub,
        bounds=[(0.0, 1.0)] * dim + [(0.0, None)],
        method="highs",
    )
    if not lp.success:
        raise ArithmeticError(f"test reconstruction failed: {lp.message}")
    c = np.clip(lp.x[:dim], 0.0, 1.0)
    mat = (vecs * c) @ vecs.conj().T
    mat = 0.5 * (mat + mat.conj().T)
    level = max(float(np.trace(mat @ s).real) for s in qmats)
    return mat, level


def beta_exact(inst: CompositeInstance) -> tuple[float, TestOperator]:
    """Best Type-2 exponent of a common test for the instance, with an
    explicit optimal test.

    The returned value is the one achieved by the returned test; the gap
    to the dual estimate is recorded on the test's certificate field.
    """
    _check_caps(inst)
    rmats = [_tensor_power(v.a, inst.n) for v in inst.s1.vertices]
    qmats = [_tensor_power(v.a, inst.n) for v in inst.s2.vertices]
    g_star, w, lam, evals = _dual_ascent(rmats, qmats, inst.epsilon)
    mat, level = _eigenbasis_test(rmats, qmats, inst.epsilon, w, lam)
    value = -math.log2(level) if level > 0.0 else math.inf
    dual_bits = -math.log2(g_star) if g_star > 0.0 else math.inf
    type1 = max(1.0 - float(np.trace(mat @ r).real) for r in rmats)
    test = TestOperator(
        matrix=ComplexMatrix(mat),
        type1_error=type1,
        type2_bound=level,
        iterations=evals,
        certificate_gap_bits=max(0.0, dual_bits - value)
        if math.isfinite(dual_bits) and math.isfinite(value)
        else 0.0,
    )
    return value, test


def classical_composite_value(ps: Sequence[np.ndarray], qs: Sequence[np.ndarray],
                              eps: float) -> float:
    """Exact program value when every state is diagonal, by linear
    programming over the diagonal acceptance weights (independent of the
    operator solver; used as its commuting-case reference)."""
    ps = [np.asarray(p, dtype=float) for p in ps]
    qs = [np.asarray(q, dtype=float) for q in qs]
    dim = ps[0].size
    c_obj = np.concatenate([np.zeros(dim), [1.0]])
    a_ub = np.block(
        [
            [np.stack(qs), -np.ones((len(qs), 1))],
            [-np.stack(ps), np.zeros((len(ps), 1))],
        ]
    )
    b_ub = np.concatenate([np.zeros(len(qs)), -np.full(len(ps), 1.0 - eps)])
    lp = scipy.optimize.linprog(
        c_obj,
        A_ub=a_ub,
        b_ub=b_ub,
        bounds=[(0.0, 1.0)] * dim + [(0.0, None)],
        method="highs",
    )
    if not lp.success:
        raise ArithmeticError(f"classical program failed: {lp.message}")
    return -math.log2(lp.x[-1]) if lp.x[-1] > 0.0 else math.inf


# ---------------------------------------------------------------------------
# universal test for the whole family
# ---------------------------------------------------------------------------

def _nearest_point(state: DensityMatrix, net: EpsilonNet) -> DensityMatrix:
    best, best_f = None, -1.0
    for point in net.points:
        f = root_fidelity(state.a, point.a) ** 2
        if f > best_f:
            best, best_f = point, f
    return best


def build_universal_test(inst: CompositeInstance, delta: float,
                         net: EpsilonNet | None = None) -> TestOperator:
    """One test for the whole family: a near-optimal test per prototype,
    dilated to projectors over a shared ancilla qubit, merged by the
    projector union, and compressed back onto the ancilla ground block.

    With ``net=None`` the prototypes are the ``s1`` vertices themselves;
    with a net, each vertex is replaced by its closest net point (the net
    resolution must be at most ``delta**2 / n`` so that the n-fold
    approximation costs at most ``delta`` of acceptance).
    """
    _check_caps(inst)
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if net is None:
        prototypes = list(inst.s1.vertices)
    else:
        if net.resolution > delta ** 2 / inst.n + 1e-12:
            raise ValueError(
                f"net resolution {net.resolution} too coarse for "
                f"delta**2/n = {delta ** 2 / inst.n:.6g}"
            )
        if net.points[0].dim != inst.dim:
            raise CapacityError("net lives on a different space than the instance")
        prototypes = [_nearest_point(v, net) for v in inst.s1.vertices]
    # deduplicate prototypes that collide
    unique: list[DensityMatrix] = []
    seen = set()
    for p in prototypes:
        key = content_hash(p.a)
        if key not in seen:
            seen.add(key)
            unique.append(p)

    per_prototype = []
    evals = 0
    for p in unique:
        single = CompositeInstance(StateEnsemble((p,)), inst.s2, inst.n, inst.epsilon)
        value, test = beta_exact(single)
        per_prototype.append((value, test))
        evals += test.iterations
    floor_bits = min(v for v, _ in per_prototype)

    if len(unique) == 1:
        merged = neumark_dilate(per_prototype[0][1]).projector
        rounds = 0
    else:
        width = math.log2(2 * len(unique))
        merged = union_many(
            [neumark_dilate(t).projector for _, t in per_prototype],
            delta / width,
        )
        rounds = math.ceil(math.log2(len(unique)))

    dim_n = inst.total_dim
    block = np.ascontiguousarray(
        merged.a.reshape(dim_n, 2, dim_n, 2)[:, 0, :, 0]
    )
    block = 0.5 * (block + block.conj().T)
    rmats = [_tensor_power(v.a, inst.n) for v in inst.s1.vertices]
    qmats = [_tensor_power(v.a, inst.n) for v in inst.s2.vertices]
    type1 = max(1.0 - float(np.trace(block @ r).real) for r in rmats)
    level = max(float(np.trace(block @ q).real) for q in qmats)
    value = -math.log2(level) if level > 0.0 else math.inf
    size = len(unique)
    penalty = 4.0 * math.log2(size) * math.log2(max(math.log2(size), 1e-300) / delta) if size > 1 else 0.0
    return TestOperator(
        matrix=ComplexMatrix(block),
        type1_error=type1,
        type2_bound=level,
        iterations=rounds,
        certificate_gap_bits=max(0.0, value - (floor_bits - penalty)),
    )


# ---------------------------------------------------------------------------
# qubit nets
# ---------------------------------------------------------------------------

def _bloch_state(r: np.ndarray) -> DensityMatrix:
    x, y, z = (float(c) for c in r)
    mat = 0.5 * np.array([[1.0 + z, x - 1j * y], [x + 1j * y, 1.0 - z]])
    return DensityMatrix(ComplexMatrix(mat), QUBIT)


def _sphere_layer(count: int) -> np.ndarray:
    """Golden-spiral layout of ``count`` points on the unit sphere."""
    i = np.arange(count)
    z = 1.0 - (2.0 * i + 1.0) / count
    phi = i * math.pi * (3.0 - math.sqrt(5.0))
    rad = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    return np.stack([rad * np.cos(phi), rad * np.sin(phi), z], axis=1)


def epsilon_net(dim: int, deficit: float) -> EpsilonNet:
    """Finite qubit net: Bloch-ball cubic lattice (always containing the
    six axis points and the center) plus a golden-spiral surface layer,
    sized to stay within the (2/deficit)**2 point budget."""
    if dim != 2:
        raise CapacityError(f"nets are built for dimension 2 only, got {dim}")
    if not 0.0 < deficit < 0.5:
        raise ValueError(f"deficit must lie in (0, 0.5), got {deficit}")
    budget = int((2.0 / deficit) ** 2)

    def lattice(k: int) -> list[np.ndarray]:
        pts = []
        for i in range(-k, k + 1):
            for j in range(-k, k + 1):
                for l in range(-k, k + 1):
                    r = np.array([i, j, l], dtype=float) / k
                    if np.dot(r, r) <= 1.0 + 1e-12:
                        pts.append(r)
        return pts

    surface = max(8, math.ceil(6.0 / deficit))
    k = max(1, round(math.sqrt(1.0 / deficit)))
    while k > 1 and len(lattice(k)) + surface > budget:
        k -= 1
    while len(lattice(k)) + surface > budget and surface > 8:
        surface = max(8, surface // 2)

    vectors = lattice(k) + list(_sphere_layer(surface))
    seen = set()
    points = []
    for r in vectors:
        key = tuple(np.round(r, 10))
        if key not in seen:
            seen.add(key)
            points.append(_bloch_state(r))
    return EpsilonNet(points=tuple(points), resolution=deficit)


def net_covering_report(net: EpsilonNet, num_samples: int = 10_000,
                        seed=7) -> dict:
    """Measure the net's worst fidelity deficit over sampled qubit states."""
    rng = rng_from(seed)
    bloch = np.stack(
        [
            np.array(
                [
                    np.trace(rho.a @ np.array([[0, 1], [1, 0]])).real,
                    np.trace(rho.a @ np.array([[0, -1j], [1j, 0]])).real,
                    np.trace(rho.a @ np.array([[1, 0], [0, -1]])).real,
                ]
            )
            for rho in (_random_qubit(rng) for _ in range(num_samples))
        ]
    )
    pts = np.stack(
        [
            np.array(
                [
                    np.trace(p.a @ np.array([[0, 1], [1, 0]])).real,
                    np.trace(p.a @ np.array([[0, -1j], [1j, 0]])).real,
                    np.trace(p.a @ np.array([[1, 0], [0, -1]])).real,
                ]
            )
            for p in net.points
        ]
    )
    r2 = np.clip(1.0 - np.sum(bloch ** 2, axis=1), 0.0, None)
    s2 = np.clip(1.0 - np.sum(pts ** 2, axis=1), 0.0, None)
    # squared fidelity between qubit states in Bloch form
    fid = 0.5 * (1.0 + bloch @ pts.T + np.sqrt(np.outer(r2, s2)))
    deficit = 1.0 - np.max(fid, axis=1)
    budget = int((2.0 / net.resolution) ** 2)
    return {
        "size": len(net.points),
        "budget": budget,
        "within_budget": len(net.points) <= budget,
        "resolution": net.resolution,
        "samples": num_samples,
        "max_deficit": float(np.max(deficit)),
        "mean_deficit": float(np.mean(deficit)),
        "covered": bool(np.max(deficit) <= net.resolution),
    }


def _random_qubit(rng) -> DensityMatrix:
    g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    h = g @ g.conj().T
    return DensityMatrix(ComplexMatrix(h / np.trace(h).real), QUBIT)
