"""Entropic quantities and one-shot hypothesis-testing divergences.

The optimal-test solvers here come in certified pairs: the spectral
Neyman-Pearson routine for the plain hypothesis-testing divergence, and a
column-generation saddle solver for the mutual-information-like variants
that minimize over one marginal.  Every solver reports a value that is a
*certified* bound realized by the returned test operator, together with the
bracket between its lower and upper estimates; independent grid and linear
programming oracles live alongside for cross-checking and never share the
optimization path.

All logarithms are base 2; values are in bits.  A support violation in
``relative_entropy``, ``relative_entropy_variance``, or ``d_max`` yields
``math.inf`` rather than an exception.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable, Sequence

import numpy as np
import scipy.optimize

from .qcore import (
    ATOL,
    ComplexMatrix,
    DensityMatrix,
    LayoutError,
    as_array,
    content_hash,
    partial_trace,
    psd_sqrt,
)

#: eigenvalues within this band of zero count as the threshold boundary block
EDGE = 1e-12
#: relative tolerance for certified saddle values
TOL_SADDLE = 1e-4
#: tolerance for plain Neyman-Pearson values
TOL_NP = 1e-8


# ---------------------------------------------------------------------------
# result types
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True, eq=False)
class TestOperator:
    """A measurement operator 0 <= M <= I with its recorded error profile.

    ``type1_error`` is 1 - Tr[M rho] against the null state it was built
    for; ``type2_bound`` is the certified bound on Tr[M sigma] over the
    alternative family (a single state, or the worst case of an ensemble).
    ``threshold`` is the spectral threshold the test was built at, when the
    solver has one; ``iterations`` counts inner eigensolves or
    Neyman-Pearson calls; ``certificate_gap_bits`` brackets the distance
    between the reported value and the solver's matching upper estimate.
    """

    __test__ = False  # not a test class, despite the pytest-like name

    matrix: ComplexMatrix
    type1_error: float
    type2_bound: float
    threshold: float | None = None
    iterations: int = 0
    certificate_gap_bits: float = 0.0

    def __post_init__(self):
        a = self.matrix.entries
        if float(np.max(np.abs(a - a.conj().T))) > ATOL:
            raise ValueError("test operator is not Hermitian within tolerance")
        w = np.linalg.eigvalsh(a)
        if w[0] < -ATOL or w[-1] > 1 + ATOL:
            raise ValueError(
                f"test operator eigenvalues [{w[0]:.3e}, {w[-1]:.3e}] outside [0, 1]"
            )

    @property
    def a(self) -> np.ndarray:
        return self.matrix.entries


@dataclasses.dataclass(frozen=True, eq=False)
class StateEnsemble:
    """A convex set of states represented by its vertices."""

    vertices: tuple[DensityMatrix, ...]

    def __post_init__(self):
        if not self.vertices:
            raise ValueError("ensemble needs at least one vertex")
        d0, lay0 = self.vertices[0].dim, self.vertices[0].layout
        for v in self.vertices[1:]:
            if v.dim != d0 or v.layout != lay0:
                raise LayoutError("ensemble vertices must share one layout")

    @property
    def dim(self) -> int:
        return self.vertices[0].dim

    def mix(self, weights: Sequence[float]) -> np.ndarray:
        w = np.asarray(weights, dtype=float)
        if w.size != len(self.vertices) or np.any(w < -1e-12):
            raise ValueError("weights must be a distribution over the vertices")
        w = np.clip(w, 0.0, None)
        w = w / w.sum()
        return sum(wi * v.a for wi, v in zip(w, self.vertices))


def divergence_record(quantity: str, inputs: dict, value: float, test: TestOperator | None) -> dict:
    """Structured, JSON-ready record of a divergence computation."""
    rec = {
        "quantity": quantity,
        "inputs": {k: content_hash(v) for k, v in inputs.items()},
        "value_bits": value,
    }
    if test is not None:
        rec["iterations"] = test.iterations
        rec["residuals"] = {
            "type1_error": test.type1_error,
            "type2_bound": test.type2_bound,
            "certificate_gap_bits": test.certificate_gap_bits,
        }
    return rec


# ---------------------------------------------------------------------------
# entropic quantities
# ---------------------------------------------------------------------------

def _eig_state(a: np.ndarray):
    w, v = np.linalg.eigh(a)
    return np.clip(w, 0.0, None), v


def _kernel_weight(rho: np.ndarray, sigma: np.ndarray) -> float:
    """rho's weight on sigma's numerical kernel."""
    w, v = np.linalg.eigh(sigma)
    ker = v[:, w <= EDGE]
    if ker.shape[1] == 0:
        return 0.0
    return float(np.einsum("ij,ij->", ker.conj(), rho @ ker).real)


def relative_entropy(rho, sigma) -> float:
    """Tr[rho (log rho - log sigma)] in bits; inf on support violation."""
    r, s = as_array(rho), as_array(sigma)
    if r.shape != s.shape:
        raise LayoutError(f"dimension mismatch {r.shape} vs {s.shape}")
    if _kernel_weight(r, s) > ATOL:
        return math.inf
    p, vr = _eig_state(r)
    q, vs = _eig_state(s)
    overlap = np.abs(vr.conj().T @ vs) ** 2  # overlap[i, j] = |<r_i|s_j>|^2
    psel = p > EDGE
    qsel = q > EDGE
    term_r = float(np.sum(p[psel] * np.log2(p[psel])))
    term_s = float(p[psel] @ overlap[np.ix_(psel, qsel)] @ np.log2(q[qsel]))
    d = term_r - term_s
    return 0.0 if d < 0.0 else d


def _log_on_support(a: np.ndarray):
    w, v = np.linalg.eigh(a)
    lg = np.where(w > EDGE, np.log2(np.clip(w, EDGE, None)), 0.0)
    return (v * lg) @ v.conj().T


def relative_entropy_variance(rho, sigma) -> float:
    """Tr[rho (log rho - log sigma)^2] - D(rho||sigma)^2, in bits squared."""
    r, s = as_array(rho), as_array(sigma)
    if r.shape != s.shape:
        raise LayoutError(f"dimension mismatch {r.shape} vs {s.shape}")
    if _kernel_weight(r, s) > ATOL:
        return math.inf
    ell = _log_on_support(r) - _log_on_support(s)
    d = float(np.trace(r @ ell).real)
    second = float(np.trace(r @ ell @ ell).real)
    return second - d * d


def d_max(rho, sigma) -> float:
    """Smallest k with rho <= 2^k sigma, by bisection on the PSD certificate."""
    r, s = as_array(rho), as_array(sigma)
    if r.shape != s.shape:
        raise LayoutError(f"dimension mismatch {r.shape} vs {s.shape}")
    if _kernel_weight(r, s) > ATOL:
        return math.inf

    def holds(lam: float) -> bool:
        return float(np.linalg.eigvalsh((2.0**lam) * s - r)[0]) >= -1e-13

    hi = 1.0
    for _ in range(60):
        if holds(hi):
            break
        hi *= 2.0
    else:
        return math.inf
    lo = -1.0
    while holds(lo):
        hi = lo
        lo *= 2.0
        if lo < -4096:
            break
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if holds(mid):
            hi = mid
        else:
            lo = mid
    return hi


def i_max(rho: DensityMatrix) -> float:
    """Max-divergence of a bipartite state from the product of its marginals."""
    if len(rho.layout.factors) != 2:
        raise LayoutError("need a state on exactly two registers")
    a_lbl, b_lbl = rho.layout.labels
    prod = np.kron(partial_trace(rho, {a_lbl}).a, partial_trace(rho, {b_lbl}).a)
    return d_max(rho.a, prod)


# ---------------------------------------------------------------------------
# Neyman-Pearson solver
# ---------------------------------------------------------------------------

def _np_solve(r: np.ndarray, s: np.ndarray, eps: float):
    """Optimal test for Tr[M r] >= 1 - eps minimizing Tr[M s].

    Returns (beta, M, threshold, iterations).  The test is built from the
    spectral decomposition of r - t s: the strictly positive eigenspace plus
    a fractional weight on the boundary block chosen to meet the Type-1
    constraint exactly; when the Type-1 level varies continuously in t the
    bisection instead closes once its bracket is below 1e-12.
    """
    target = 1.0 - eps
    iters = 0

    def pieces(t: float, band: float):
        nonlocal iters
        iters += 1
        w, v = np.linalg.eigh(r - t * s)
        pos = v[:, w > band]
        bnd = v[:, np.abs(w) <= band]
        t_pos = float(np.einsum("ij,ij->", pos.conj(), r @ pos).real)
        t_bnd = float(np.einsum("ij,ij->", bnd.conj(), r @ bnd).real)
        return pos, bnd, t_pos, t_bnd

    def close(t: float, band: float):
        pos, bnd, t_pos, t_bnd = pieces(t, band)
        frac = 0.0
        if t_bnd > 1e-300:
            frac = min(1.0, max(0.0, (target - t_pos) / t_bnd))
        m = pos @ pos.conj().T
        if frac > 0.0 and bnd.shape[1]:
            m = m + frac * (bnd @ bnd.conj().T)
        return m

    # bracket the threshold
    lo, f_lo = 0.0, 1.0
    hi = 1.0
    for _ in range(200):
        _, _, t_pos, t_bnd = pieces(hi, EDGE)
        if t_pos + t_bnd < target:
            f_hi = t_pos + t_bnd
            break
        hi *= 2.0
    else:
        # no finite threshold: r keeps >= target weight outside supp(s)
        m = close(hi, EDGE)
        beta = float(np.trace(m @ s).real)
        return beta, m, hi, iters

    m = None
    for _ in range(300):
        mid = 0.5 * (lo + hi)
        pos, bnd, t_pos, t_bnd = pieces(mid, EDGE)
        if t_pos <= target <= t_pos + t_bnd:
            frac = 0.0 if t_bnd <= 1e-300 else (target - t_pos) / t_bnd
            m = pos @ pos.conj().T
            if bnd.shape[1] and frac > 0.0:
                m = m + frac * (bnd @ bnd.conj().T)
            thr = mid
            break
        if t_pos > target:
            lo, f_lo = mid, t_pos
        else:
            hi, f_hi = mid, t_pos + t_bnd
        if f_lo - f_hi <= 1e-12 or hi - lo <= 8e-16 * (1.0 + hi):
            # degenerate bracket: widen the boundary band to its scale
            band = max(EDGE, 4.0 * (hi - lo) * float(np.linalg.norm(s, 2)))
            m = close(lo, band)
            thr = lo
            break
    else:
        band = max(EDGE, 4.0 * (hi - lo) * float(np.linalg.norm(s, 2)))
        m = close(lo, band)
        thr = lo
    m = 0.5 * (m + m.conj().T)
    beta = float(np.trace(m @ s).real)
    return beta, m, thr, iters


def hypothesis_test_divergence(rho, sigma, eps: float) -> tuple[float, TestOperator]:
    """Best Type-2 exponent among tests with Type-1 error at most ``eps``.

    Returns the value in bits and the optimal test; the value is
    ``-log2 Tr[M sigma]`` for the returned M, optimal within ``TOL_NP``.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must be in (0, 1), got {eps}")
    r, s = as_array(rho), as_array(sigma)
    if r.shape != s.shape:
        raise LayoutError(f"dimension mismatch {r.shape} vs {s.shape}")
    beta, m, thr, iters = _np_solve(r, s, eps)
    value = math.inf if beta <= 1e-300 else -math.log2(beta)
    test = TestOperator(
        matrix=ComplexMatrix(m),
        type1_error=1.0 - float(np.trace(m @ r).real),
        type2_bound=beta,
        threshold=thr,
        iterations=iters,
    )
    return value, test


def classical_np_value(p: np.ndarray, q: np.ndarray, eps: float) -> float:
    """Classical Neyman-Pearson value by linear programming on diagonals.

    Independent check for commuting instances; never used by the quantum
    solver.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    res = scipy.optimize.linprog(
        c=q,
        A_ub=-p.reshape(1, -1),
        b_ub=[-(1.0 - eps)],
        bounds=[(0.0, 1.0)] * p.size,
        method="highs",
    )
    if not res.success:
        raise RuntimeError(f"classical Neyman-Pearson LP failed: {res.message}")
    beta = max(res.fun, 0.0)
    return math.inf if beta <= 1e-300 else -math.log2(beta)


# ---------------------------------------------------------------------------
# saddle solvers: minimize over one tensor factor
# ---------------------------------------------------------------------------

def _split_bipartite(rho: DensityMatrix):
    if len(rho.layout.factors) != 2:
        raise LayoutError("need a state on exactly two registers")
    (a_lbl, d_a), (b_lbl, d_b) = rho.layout.factors
    rho_a = partial_trace(rho, {a_lbl}).a
    rho_b = partial_trace(rho, {b_lbl}).a
    return d_a, d_b, rho_a, rho_b


def _conditional_operator(m: np.ndarray, sq_b: np.ndarray, d_a: int, d_b: int) -> np.ndarray:
    """G(M) = Tr_B[(I (x) sqrt(rho_B)) M (I (x) sqrt(rho_B))]; Hermitian, and
    max_sigma Tr[M (sigma (x) rho_B)] = lambda_max(G(M))."""
    big = np.kron(np.eye(d_a), sq_b)
    g = big @ m @ big
    t = g.reshape(d_a, d_b, d_a, d_b)
    out = np.einsum("ikjk->ij", t)
    return 0.5 * (out + out.conj().T)


def _best_mixture(r, fixed_b, atoms, eps, w0=None):
    """Maximize the concave map w -> beta(mix_w (x) fixed_b) over the simplex.

    beta(sigma) is the optimal Type-2 error against sigma (x) fixed_b at
    Type-1 level eps; it is concave in the mixture, and the optimal test's
    per-atom traces form a supergradient, so a local sequential solve from
    any start converges to the global maximum.  Evaluations are memoized
    because value and gradient are requested at the same points.
    Returns (w, beta, M, per_atom, solves).
    """
    k = len(atoms)
    prods = [np.kron(a, fixed_b) for a in atoms]
    solves = 0
    best = None  # (beta, w, m, per)
    memo: dict[bytes, tuple] = {}

    def evaluate(w):
        nonlocal solves, best
        w = np.clip(np.asarray(w, dtype=float), 0.0, None)
        tot = w.sum()
        w = np.ones(k) / k if tot <= 0 else w / tot
        key = np.round(w, 13).tobytes()
        if key not in memo:
            sigma = sum(wi * p for wi, p in zip(w, prods))
            beta, m, _, _ = _np_solve(r, sigma, eps)
            solves += 1
            per = np.array([float(np.trace(m @ p).real) for p in prods])
            memo[key] = (beta, m, per)
            if best is None or beta > best[0]:
                best = (beta, w, m, per)
        return memo[key]

    start = np.ones(k) / k if w0 is None else np.asarray(w0, dtype=float)
    evaluate(start)
    if k >= 2:
        scipy.optimize.minimize(
            lambda w: -evaluate(w)[0],
            best[1],
            jac=lambda w: -evaluate(w)[2],
            method="SLSQP",
            bounds=[(0.0, 1.0)] * k,
            constraints=[{"type": "eq", "fun": lambda w: np.sum(w) - 1.0}],
            options={"maxiter": 40, "ftol": 1e-13},
        )
    beta, w, m, per = best
    return w, beta, m, per, solves


def i_h(
    rho: DensityMatrix,
    eps: float,
    *,
    gap_tol: float = 1e-9,
    max_rounds: int = 40,
) -> tuple[float, TestOperator]:
    """Hypothesis-testing mutual information: minimize the divergence over
    states on the first register, with the second register's marginal fixed.

    Solved by column generation: the inner minimization over candidate
    first-register states grows an atom set from the top eigenvector of the
    conditional operator G(M) until lambda_max(G(M)) certifies optimality.
    The reported value is ``-log2 lambda_max(G(M*))``, a bound the returned
    test realizes *uniformly* over all first-register states.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must be in (0, 1), got {eps}")
    d_a, d_b, rho_a, rho_b = _split_bipartite(rho)
    r = rho.a
    sq_b = psd_sqrt(rho_b)
    atoms = [rho_a]
    w0 = None
    total_solves = 0
    lam_best = math.inf
    m_best = None
    beta_best = 0.0
    stale = 0
    for _ in range(max_rounds):
        w, beta, m, per, solves = _best_mixture(r, rho_b, atoms, eps, w0)
        total_solves += solves
        beta_best = max(beta_best, beta)
        g = _conditional_operator(m, sq_b, d_a, d_b)
        lam_all, vecs = np.linalg.eigh(g)
        lam = float(lam_all[-1])
        if m_best is None or lam < lam_best - 1e-12 * max(1.0, lam):
            lam_best, m_best, stale = lam, m, 0
        else:
            stale += 1
        if lam_best <= beta_best * (1.0 + gap_tol) + 1e-15 or stale >= 4:
            break
        top = vecs[:, -1:]
        atoms.append(top @ top.conj().T)
        w0 = np.append(w * (1.0 - 1e-3), 1e-3)
    value = math.inf if lam_best <= 1e-300 else -math.log2(lam_best)
    upper = math.inf if beta_best <= 1e-300 else -math.log2(beta_best)
    test = TestOperator(
        matrix=ComplexMatrix(m_best),
        type1_error=1.0 - float(np.trace(m_best @ r).real),
        type2_bound=lam_best,
        iterations=total_solves,
        certificate_gap_bits=max(0.0, upper - value),
    )
    return value, test


def i_h_tilde(
    rho: DensityMatrix,
    sigma_b: DensityMatrix,
    s_a: StateEnsemble,
    eps: float,
) -> tuple[float, TestOperator]:
    """Divergence minimized over a restricted convex set on the first
    register, with a fixed state on the second.

    The minimization over the convex hull is solved on the vertex simplex
    (the inner objective is linear in the mixture for a fixed test, so
    vertex verification suffices).  The reported value is certified by the
    returned test against every vertex simultaneously.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must be in (0, 1), got {eps}")
    d_a, d_b, _, _ = _split_bipartite(rho)
    if s_a.dim != d_a:
        raise LayoutError(f"ensemble dimension {s_a.dim} != first register {d_a}")
    if sigma_b.dim != d_b:
        raise LayoutError(f"fixed state dimension {sigma_b.dim} != second register {d_b}")
    atoms = [v.a for v in s_a.vertices]
    w, beta, m, per, solves = _best_mixture(rho.a, sigma_b.a, atoms, eps)
    worst = float(np.max(per))
    value = math.inf if worst <= 1e-300 else -math.log2(worst)
    upper = math.inf if beta <= 1e-300 else -math.log2(beta)
    test = TestOperator(
        matrix=ComplexMatrix(m),
        type1_error=1.0 - float(np.trace(m @ rho.a).real),
        type2_bound=worst,
        iterations=solves,
        certificate_gap_bits=max(0.0, upper - value),
    )
    return value, test


def i_h_hat(
    rho: DensityMatrix,
    s_a: StateEnsemble,
    s_b: StateEnsemble,
    eps: float,
    *,
    grid: float = 0.02,
) -> tuple[float, TestOperator]:
    """Divergence minimized over restricted sets on both registers.

    The outer minimization over second-register mixtures is a plain scan
    (the outer objective need not be convex): vertex points plus a weight
    grid at the given resolution, followed by a local golden-section polish
    for two-vertex ensembles.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must be in (0, 1), got {eps}")
    d_a, d_b, _, _ = _split_bipartite(rho)
    if s_b.dim != d_b:
        raise LayoutError(f"ensemble dimension {s_b.dim} != second register {d_b}")
    k = len(s_b.vertices)
    lay_b = s_b.vertices[0].layout

    def at_weights(wb) -> tuple[float, TestOperator]:
        sig = DensityMatrix(ComplexMatrix(s_b.mix(wb)), lay_b)
        return i_h_tilde(rho, sig, s_a, eps)

    if k == 1:
        return at_weights([1.0])

    def simplex_grid(k: int, step: float):
        n = max(1, int(round(1.0 / step)))
        if k == 2:
            for i in range(n + 1):
                yield np.array([i / n, 1.0 - i / n])
        else:
            # coarse lattice on the simplex for small vertex counts
            m = max(1, int(round(1.0 / max(step, 0.1))))
            def rec(prefix, left, slots):
                if slots == 1:
                    yield prefix + [left]
                    return
                for i in range(left + 1):
                    yield from rec(prefix + [i], left - i, slots - 1)
            for combo in rec([], m, k):
                yield np.array(combo, dtype=float) / m
    best_w, best = None, None
    for wb in simplex_grid(k, grid):
        val, test = at_weights(wb)
        if best is None or val < best[0]:
            best, best_w = (val, test), wb
    if k == 2:
        # golden-section polish around the best grid weight
        lo = max(0.0, best_w[0] - grid)
        hi = min(1.0, best_w[0] + grid)
        phi = (math.sqrt(5.0) - 1.0) / 2.0
        x1 = hi - phi * (hi - lo)
        x2 = lo + phi * (hi - lo)
        f1, t1 = at_weights([x1, 1.0 - x1])
        f2, t2 = at_weights([x2, 1.0 - x2])
        for _ in range(25):
            if f1 <= f2:
                hi, x2, f2, t2 = x2, x1, f1, t1
                x1 = hi - phi * (hi - lo)
                f1, t1 = at_weights([x1, 1.0 - x1])
            else:
                lo, x1, f1, t1 = x1, x2, f2, t2
                x2 = lo + phi * (hi - lo)
                f2, t2 = at_weights([x2, 1.0 - x2])
        cand = (f1, t1) if f1 <= f2 else (f2, t2)
        if cand[0] < best[0]:
            best = cand
    return best


# ---------------------------------------------------------------------------
# independent oracles
# ---------------------------------------------------------------------------

def bloch_density(x: float, y: float, z: float) -> np.ndarray:
    """Qubit state with the given Bloch vector (|r| <= 1)."""
    return 0.5 * np.array([[1.0 + z, x - 1j * y], [x + 1j * y, 1.0 - z]])


def _ball_lattice(res: float) -> np.ndarray:
    n = int(round(2.0 / res))
    coords = np.arange(n + 1) * (2.0 / n) - 1.0
    pts = np.array(np.meshgrid(coords, coords, coords)).reshape(3, -1).T
    return pts[np.einsum("ij,ij->i", pts, pts) <= 1.0 + 1e-12]

def min_dh_over_bloch_grid(
    rho: DensityMatrix,
    eps: float,
    *,
    fine: float = 0.02,
    coarse: float = 0.1,
) -> tuple[float, np.ndarray]:
    """Grid oracle for the first-register minimization (qubit first register).

    Minimizes the divergence against sigma (x) rho_B over a Bloch-ball
    lattice: a full pass at the coarse resolution, then a full
    fine-resolution box (two coarse cells wide) around the coarse winner.
    The minimized map is convex on the ball, so the refinement is sound.
    This path shares no optimization state with the saddle solver.
    """
    d_a, d_b, _, rho_b = _split_bipartite(rho)
    if d_a != 2:
        raise LayoutError("grid oracle needs a qubit first register")
    r = rho.a

    def value_at(pt) -> float:
        beta, _, _, _ = _np_solve(r, np.kron(bloch_density(*pt), rho_b), eps)
        return math.inf if beta <= 1e-300 else -math.log2(beta)

    best_v, best_p = math.inf, None
    for pt in _ball_lattice(coarse):
        v = value_at(pt)
        if v < best_v:
            best_v, best_p = v, pt

    def refine(center, half, step):
        nonlocal best_v, best_p
        n = int(round(half / step))
        offs = (np.arange(2 * n + 1) - n) * step
        for dx in offs:
            for dy in offs:
                for dz in offs:
                    pt = center + np.array([dx, dy, dz])
                    if pt @ pt > 1.0 + 1e-12:
                        continue
                    v = value_at(pt)
                    if v < best_v:
                        best_v, best_p = v, pt

    refine(best_p, coarse + 2 * fine, fine)
    refine(best_p, 1.5 * fine, fine / 4.0)
    return best_v, best_p


def min_dh_over_weight_grids(
    rho: DensityMatrix,
    s_a: StateEnsemble,
    s_b: StateEnsemble,
    eps: float,
    step: float = 0.02,
) -> float:
    """Nested-grid oracle for the doubly restricted divergence: a direct scan
    over weight grids on both vertex simplices, one plain Neyman-Pearson
    solve per pair.  Supports two-vertex ensembles (one weight each)."""
    if len(s_a.vertices) > 2 or len(s_b.vertices) > 2:
        raise ValueError("weight-grid oracle supports up to two vertices per set")

    def mixtures(ens: StateEnsemble):
        if len(ens.vertices) == 1:
            return [ens.vertices[0].a]
        n = int(round(1.0 / step))
        return [ens.mix([i / n, 1.0 - i / n]) for i in range(n + 1)]

    best = math.inf
    r = rho.a
    for ta in mixtures(s_a):
        for sb in mixtures(s_b):
            beta, _, _, _ = _np_solve(r, np.kron(ta, sb), eps)
            v = math.inf if beta <= 1e-300 else -math.log2(beta)
            best = min(best, v)
    return best


def best_qubit_two_level_test(
    rho, sigma, eps: float, num_directions: int = 10000
) -> float:
    """Best value over a family of qubit tests diagonal in a scanned basis.

    For each measurement direction on a two-stage Fibonacci sphere (coarse
    scan, then a refined cap around the winner), the optimal two-level
    weights solve a closed-form two-variable linear program.  The family
    contains the optimal test's eigenbasis in the limit, so its best value
    is an independent lower bound that approaches the true optimum.
    """
    r, s = as_array(rho), as_array(sigma)
    if r.shape != (2, 2):
        raise ValueError("test family is defined for qubits")
    target = 1.0 - eps

    def fib_sphere(n: int) -> np.ndarray:
        i = np.arange(n) + 0.5
        phi = np.arccos(1.0 - 2.0 * i / n)
        theta = np.pi * (1.0 + 5.0**0.5) * i
        return np.stack(
            [np.cos(theta) * np.sin(phi), np.sin(theta) * np.sin(phi), np.cos(phi)], axis=1
        )

    def best_for_directions(dirs: np.ndarray) -> tuple[float, np.ndarray]:
        best_beta, best_dir = math.inf, dirs[0]
        for u in dirs:
            proj = 0.5 * (np.eye(2) + u[0] * np.array([[0, 1], [1, 0]])
                          + u[1] * np.array([[0, -1j], [1j, 0]])
                          + u[2] * np.array([[1, 0], [0, -1]]))
            p1 = float(np.trace(proj @ r).real)
            p2 = float(np.trace(r).real) - p1
            q1 = float(np.trace(proj @ s).real)
            q2 = float(np.trace(s).real) - q1
            # minimize a q1 + b q2 over 0 <= a, b <= 1 with a p1 + b p2 >= target
            cands = []
            for a, b in ((1.0, 1.0), (1.0, 0.0), (0.0, 1.0)):
                if a * p1 + b * p2 >= target - 1e-12:
                    cands.append(a * q1 + b * q2)
            for a in (0.0, 1.0):  # boundary a p1 + b p2 = target
                if p2 > 1e-15:
                    b = (target - a * p1) / p2
                    if -1e-12 <= b <= 1.0 + 1e-12:
                        cands.append(a * q1 + min(1.0, max(0.0, b)) * q2)
            for b in (0.0, 1.0):
                if p1 > 1e-15:
                    a = (target - b * p2) / p1
                    if -1e-12 <= a <= 1.0 + 1e-12:
                        cands.append(min(1.0, max(0.0, a)) * q1 + b * q2)
            if cands and min(cands) < best_beta:
                best_beta, best_dir = min(cands), u
        return best_beta, best_dir

    n_coarse = max(1000, int(num_directions * 0.5))
    beta, u0 = best_for_directions(fib_sphere(n_coarse))
    # refine in shrinking caps around the running winner
    cap = 4.0 * math.sqrt(4.0 / n_coarse)
    k = 40
    for _ in range(3):
        basis = np.linalg.svd(u0.reshape(1, 3))[2][1:]  # two tangent directions
        ts = np.linspace(-cap, cap, k)
        local = []
        for a in ts:
            for b in ts:
                v = u0 + a * basis[0] + b * basis[1]
                local.append(v / np.linalg.norm(v))
        beta2, u2 = best_for_directions(np.array(local))
        if beta2 < beta:
            beta, u0 = beta2, u2
        cap = 4.0 * (2.0 * cap / (k - 1))
    return math.inf if beta <= 1e-300 else -math.log2(beta)
