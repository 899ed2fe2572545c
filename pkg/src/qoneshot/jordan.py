"""Joint block decomposition of two projectors and projector unions.

Any two orthogonal projectors share a decomposition of the space into
mutually orthogonal blocks of dimension one or two, on which each projector
restricts to rank at most one.  The decomposition here comes from the
singular values of the inner-product matrix between the two ranges
(principal angles), which is numerically stable.

The union construction turns the block structure into a single projector
that accepts almost as well as either input (additive delta loss) at the
cost of a multiplicative operator bound; a binary merge tree extends it to
many projectors.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .qcore import ATOL, LayoutError, Projector, as_array

FAR = "far"
NEAR = "near"

#: singular values closer to 1 than this count as aligned directions
_ALIGNED = 1e-12
#: singular values below this count as orthogonal directions
_ORTHO = 1e-12


@dataclasses.dataclass(frozen=True, eq=False)
class JordanBlock:
    """One invariant block shared by both projectors.

    ``p1_restricted`` and ``p2_restricted`` are the restrictions of the two
    input projectors to the block (rank at most one; the zero operator when
    the block lies outside a projector's range).  ``overlap`` is the trace
    of their product, and ``label`` classifies the block as ``NEAR`` when
    the overlap reaches ``1 - delta**2`` and ``FAR`` otherwise.
    """

    block_projector: Projector
    p1_restricted: Projector
    p2_restricted: Projector
    overlap: float
    label: str

    def __post_init__(self):
        if self.block_projector.rank not in (1, 2):
            raise ValueError(f"block rank must be 1 or 2, got {self.block_projector.rank}")
        if self.p1_restricted.rank > 1 or self.p2_restricted.rank > 1:
            raise ValueError("restricted projectors must have rank at most 1")
        if not -1e-12 <= self.overlap <= 1.0 + 1e-12:
            raise ValueError(f"overlap {self.overlap} outside [0, 1]")
        if self.label not in (FAR, NEAR):
            raise ValueError(f"unknown label {self.label!r}")

    @property
    def rank(self) -> int:
        return self.block_projector.rank


@dataclasses.dataclass(frozen=True, eq=False)
class JordanDecomposition:
    blocks: tuple[JordanBlock, ...]
    delta: float

    @property
    def dim(self) -> int:
        return self.blocks[0].block_projector.dim


def _range_basis(p: Projector) -> np.ndarray:
    """Orthonormal columns spanning the range of p."""
    w, v = np.linalg.eigh(p.a)
    return v[:, w > 0.5]


def _col(v: np.ndarray) -> np.ndarray:
    return np.outer(v, v.conj())


def jordan_decompose(p1: Projector, p2: Projector, delta: float) -> JordanDecomposition:
    """Decompose the space into one- and two-dimensional joint blocks.

    Block projectors are mutually orthogonal, sum to the identity, commute
    with both inputs, and carry the inputs' rank-<=1 restrictions; blocks
    whose restrictions overlap at least ``1 - delta**2`` are labeled NEAR.
    """
    if p1.dim != p2.dim:
        raise LayoutError(f"projector dims differ: {p1.dim} vs {p2.dim}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    d = p1.dim
    near_cut = 1.0 - delta * delta
    q1 = _range_basis(p1)
    q2 = _range_basis(p2)
    blocks: list[JordanBlock] = []
    zero = Projector.of(np.zeros((d, d)))

    def add(block: np.ndarray, r1: Projector, r2: Projector, overlap: float):
        label = NEAR if overlap >= near_cut else FAR
        blocks.append(JordanBlock(Projector.of(block), r1, r2, overlap, label))

    used = []  # columns spanning all assigned blocks, for the kernel complement
    if q1.shape[1] and q2.shape[1]:
        u, sv, vh = np.linalg.svd(q1.conj().T @ q2)
        a_vecs = q1 @ u  # principal directions in range(p1)
        b_vecs = q2 @ vh.conj().T  # matching directions in range(p2)
        npair = len(sv)
        for i in range(npair):
            s = float(min(sv[i], 1.0))
            a = a_vecs[:, i]
            b = b_vecs[:, i]
            if s >= 1.0 - _ALIGNED:
                # aligned direction: one-dimensional block shared by both
                add(_col(a), Projector.of(_col(a)), Projector.of(_col(a)), s * s)
                used.append(a)
            elif s <= _ORTHO:
                # orthogonal pair: two single-sided one-dimensional blocks
                add(_col(a), Projector.of(_col(a)), zero, 0.0)
                add(_col(b), zero, Projector.of(_col(b)), 0.0)
                used += [a, b]
            else:
                g = b - s * a
                g = g / np.linalg.norm(g)
                add(
                    _col(a) + _col(g),
                    Projector.of(_col(a)),
                    Projector.of(_col(b)),
                    s * s,
                )
                used += [a, g]
        for i in range(npair, a_vecs.shape[1]):
            add(_col(a_vecs[:, i]), Projector.of(_col(a_vecs[:, i])), zero, 0.0)
            used.append(a_vecs[:, i])
        for i in range(npair, b_vecs.shape[1]):
            add(_col(b_vecs[:, i]), zero, Projector.of(_col(b_vecs[:, i])), 0.0)
            used.append(b_vecs[:, i])
    else:
        # one projector is zero: every range direction of the other is a
        # single-sided one-dimensional block
        q, first = (q1, True) if q1.shape[1] else (q2, False)
        for i in range(q.shape[1]):
            col = Projector.of(_col(q[:, i]))
            add(_col(q[:, i]), col if first else zero, zero if first else col, 0.0)
            used.append(q[:, i])

    # joint kernel: one-dimensional blocks invisible to both projectors
    if used:
        basis = np.stack(used, axis=1)
        comp = np.eye(d) - basis @ basis.conj().T
    else:
        comp = np.eye(d)
    w, v = np.linalg.eigh(comp)
    for i in range(d):
        if w[i] > 0.5:
            add(_col(v[:, i]), zero, zero, 0.0)
    return JordanDecomposition(tuple(blocks), delta)


def decomposition_residuals(dec: JordanDecomposition, p1: Projector, p2: Projector) -> dict:
    """Worst-case deviations of the decomposition invariants, for checking.

    Keys: completeness (block sum vs identity), commutation (blocks vs both
    inputs), reconstruction (restriction sums vs inputs), orthogonality
    (pairwise block products).
    """
    d = p1.dim
    total = sum(b.block_projector.a for b in dec.blocks)
    completeness = float(np.max(np.abs(total - np.eye(d))))
    commutation = 0.0
    for b in dec.blocks:
        pa = b.block_projector.a
        for p in (p1.a, p2.a):
            commutation = max(commutation, float(np.max(np.abs(pa @ p - p @ pa))))
    rec1 = sum(b.p1_restricted.a for b in dec.blocks)
    rec2 = sum(b.p2_restricted.a for b in dec.blocks)
    reconstruction = max(
        float(np.max(np.abs(rec1 - p1.a))), float(np.max(np.abs(rec2 - p2.a)))
    )
    orthogonality = 0.0
    for i, bi in enumerate(dec.blocks):
        for bj in dec.blocks[i + 1 :]:
            orthogonality = max(
                orthogonality,
                float(np.max(np.abs(bi.block_projector.a @ bj.block_projector.a))),
            )
    return {
        "completeness": completeness,
        "commutation": commutation,
        "reconstruction": reconstruction,
        "orthogonality": orthogonality,
    }


def decomposition_report(dec: JordanDecomposition) -> dict:
    """JSON-ready diagnostic summary of a decomposition."""
    return {
        "delta": dec.delta,
        "num_blocks": len(dec.blocks),
        "blocks": [
            {
                "rank": b.rank,
                "overlap": b.overlap,
                "label": b.label,
                "p1_rank": b.p1_restricted.rank,
                "p2_rank": b.p2_restricted.rank,
            }
            for b in dec.blocks
        ],
    }


def union_pair(p1: Projector, p2: Projector, delta: float) -> Projector:
    """A projector accepting nearly as well as either input.

    FAR blocks contribute their whole (at most two-dimensional) subspace;
    NEAR blocks contribute the first input's restriction, which already
    captures the second to within delta.  Blocks outside both ranges
    contribute nothing.  The result loses at most delta in acceptance
    against either input and is dominated by (2/delta^2)(p1 + p2).
    """
    dec = jordan_decompose(p1, p2, delta)
    d = p1.dim
    out = np.zeros((d, d), dtype=complex)
    for b in dec.blocks:
        if b.label == NEAR:
            out += b.p1_restricted.a
        elif b.p1_restricted.rank or b.p2_restricted.rank:
            out += b.block_projector.a
    return Projector.of(out)


def union_many(projectors: list[Projector], delta: float) -> Projector:
    """Binary-tree union of up to 64 projectors with a shared delta.

    Consecutive projectors are merged pairwise per round (an odd leftover
    passes through unchanged), for ceil(log2 s) rounds.  Acceptance
    degrades by at most delta per round and the operator bound gains one
    factor of 2/delta^2 per round.
    """
    if not projectors:
        raise ValueError("need at least one projector")
    if len(projectors) > 64:
        raise ValueError(f"at most 64 projectors supported, got {len(projectors)}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    dims = {p.dim for p in projectors}
    if len(dims) != 1:
        raise LayoutError(f"projectors must share one dimension, got {sorted(dims)}")
    level = list(projectors)
    while len(level) > 1:
        merged = [
            union_pair(level[i], level[i + 1], delta)
            for i in range(0, len(level) - 1, 2)
        ]
        if len(level) % 2:
            merged.append(level[-1])
        level = merged
    return level[0]
