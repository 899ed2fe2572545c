"""Dense complex linear algebra and quantum state/channel primitives.

Operators live on explicitly tracked tensor-product registers: every state
carries a :class:`RegisterLayout` naming its factors, and structural
operations (tensor product, partial trace, register permutation, channel
application on a register subset) keep that bookkeeping consistent.

All values are immutable after construction and all operations are pure
functions, so they are safe to share across threads.  Basis ordering is
lexicographic over the registers in layout order, i.e. the usual Kronecker
convention: for factors ``a:2 b:3`` the basis is ``|00>, |01>, |02>, |10>,
|11>, |12>``.
"""

from __future__ import annotations

import dataclasses
import hashlib
import itertools
from typing import Iterable, Sequence

import numpy as np

#: absolute tolerance for structural checks (Hermiticity, traces, idempotence)
ATOL = 1e-9
#: relative tolerance for spectral reconstructions
RTOL = 1e-10
#: largest total Hilbert-space dimension any operation will accept
DIM_CAP = 4096

PAULI_I = np.eye(2, dtype=np.complex128)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
PAULIS = (PAULI_I, PAULI_X, PAULI_Y, PAULI_Z)


class CapacityError(RuntimeError):
    """Raised when an operation would exceed the supported dimension cap."""


class LayoutError(ValueError):
    """Raised on unknown, duplicate, or mismatched register labels."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


def as_array(x) -> np.ndarray:
    """Return the underlying ndarray of a matrix-like value."""
    if isinstance(x, np.ndarray):
        return x
    if isinstance(x, ComplexMatrix):
        return x.entries
    if isinstance(x, (DensityMatrix, Projector)):
        return x.matrix.entries
    if isinstance(x, PureState):
        return x.vector
    raise TypeError(f"cannot interpret {type(x).__name__} as an array")


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclasses.dataclass(frozen=True, eq=False)
class ComplexMatrix:
    """A dense square complex matrix in row-major order.

    Parameters
    ----------
    entries : array_like
        Square array; copied to complex128 and frozen.
    """

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=np.complex128, order="C")
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        if a.shape[0] > DIM_CAP:
            raise CapacityError(
                f"matrix dimension {a.shape[0]} exceeds the cap {DIM_CAP}"
            )
        object.__setattr__(self, "entries", _freeze(a))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def a(self) -> np.ndarray:
        """Entries as a read-only ndarray."""
        return self.entries

    def is_hermitian(self, atol: float = ATOL) -> bool:
        return bool(np.max(np.abs(self.entries - self.entries.conj().T)) <= atol)


@dataclasses.dataclass(frozen=True)
class RegisterLayout:
    """An ordered list of uniquely labeled tensor factors.

    ``factors`` is a tuple of ``(label, dimension)`` pairs.  The layout's
    total dimension is the product of the factor dimensions, and the basis
    of any operator it annotates is ordered lexicographically over the
    factors in this order.
    """

    factors: tuple[tuple[str, int], ...]

    def __post_init__(self):
        factors = tuple((str(l), int(d)) for l, d in self.factors)
        if not factors:
            raise LayoutError("layout needs at least one factor")
        labels = [l for l, _ in factors]
        if len(set(labels)) != len(labels):
            raise LayoutError(f"duplicate register labels in {labels}")
        if any(d < 1 for _, d in factors):
            raise LayoutError("register dimensions must be >= 1")
        if int(np.prod([d for _, d in factors])) > DIM_CAP:
            raise CapacityError(
                f"total layout dimension exceeds the cap {DIM_CAP}"
            )
        object.__setattr__(self, "factors", factors)

    @classmethod
    def of(cls, spec: str | Sequence[tuple[str, int]]) -> "RegisterLayout":
        """Build a layout from ``"a:2 b:3"`` or from (label, dim) pairs."""
        if isinstance(spec, str):
            pairs = []
            for tok in spec.split():
                label, _, dim = tok.partition(":")
                pairs.append((label, int(dim)))
            return cls(tuple(pairs))
        return cls(tuple(spec))

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(l for l, _ in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.factors)

    def position(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LayoutError(f"unknown register label {label!r} in {self.header()}")

    def dim_of(self, label: str) -> int:
        return self.factors[self.position(label)][1]

    def restricted(self, keep: Iterable[str]) -> "RegisterLayout":
        """Sub-layout of the kept labels, in this layout's order."""
        keep = set(keep)
        unknown = keep - set(self.labels)
        if unknown:
            raise LayoutError(f"unknown register labels {sorted(unknown)}")
        return RegisterLayout(tuple(f for f in self.factors if f[0] in keep))

    def concat(self, other: "RegisterLayout") -> "RegisterLayout":
        return RegisterLayout(self.factors + other.factors)

    def header(self) -> str:
        return " ".join(f"{l}:{d}" for l, d in self.factors)


@dataclasses.dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated quantum state: Hermitian, positive semidefinite, trace one.

    Parameters
    ----------
    matrix : ComplexMatrix
    layout : RegisterLayout
        Must have total dimension equal to the matrix dimension.

    Raises
    ------
    ValueError
        If any state invariant fails beyond the structural tolerance.
    """

    matrix: ComplexMatrix
    layout: RegisterLayout

    def __post_init__(self):
        a = self.matrix.entries
        if self.layout.dim != self.matrix.dim:
            raise LayoutError(
                f"layout dimension {self.layout.dim} != matrix dimension {self.matrix.dim}"
            )
        if not self.matrix.is_hermitian():
            raise ValueError("density matrix is not Hermitian within tolerance")
        if abs(np.trace(a).real - 1.0) > ATOL or abs(np.trace(a).imag) > ATOL:
            raise ValueError(f"density matrix trace {np.trace(a)} != 1")
        wmin = float(np.linalg.eigvalsh(a)[0])
        if wmin < -ATOL:
            raise ValueError(f"density matrix has negative eigenvalue {wmin}")

    @classmethod
    def of(cls, entries, layout: RegisterLayout | str) -> "DensityMatrix":
        if isinstance(layout, str):
            layout = RegisterLayout.of(layout)
        return cls(ComplexMatrix(entries), layout)

    @property
    def dim(self) -> int:
        return self.matrix.dim

    @property
    def a(self) -> np.ndarray:
        return self.matrix.entries

    def marginal(self, keep: Iterable[str]) -> "DensityMatrix":
        return partial_trace(self, keep)


@dataclasses.dataclass(frozen=True, eq=False)
class PureState:
    """A unit vector with register bookkeeping."""

    vector: np.ndarray
    layout: RegisterLayout

    def __post_init__(self):
        v = np.array(self.vector, dtype=np.complex128).reshape(-1)
        if v.size != self.layout.dim:
            raise LayoutError(
                f"vector length {v.size} != layout dimension {self.layout.dim}"
            )
        nrm = float(np.vdot(v, v).real)
        if abs(nrm - 1.0) > ATOL:
            raise ValueError(f"state vector squared norm {nrm} != 1")
        object.__setattr__(self, "vector", _freeze(v))

    @property
    def dim(self) -> int:
        return self.vector.size

    @property
    def a(self) -> np.ndarray:
        return self.vector

    def density(self) -> DensityMatrix:
        return DensityMatrix(ComplexMatrix(np.outer(self.vector, self.vector.conj())), self.layout)


@dataclasses.dataclass(frozen=True, eq=False)
class Projector:
    """An orthogonal projector: Hermitian and idempotent within tolerance."""

    matrix: ComplexMatrix

    def __post_init__(self):
        a = self.matrix.entries
        if not self.matrix.is_hermitian():
            raise ValueError("projector is not Hermitian within tolerance")
        err = float(np.max(np.abs(a @ a - a)))
        if err > ATOL:
            raise ValueError(f"projector is not idempotent (|P^2 - P| = {err:.3e})")

    @classmethod
    def of(cls, entries) -> "Projector":
        return cls(ComplexMatrix(entries))

    @property
    def dim(self) -> int:
        return self.matrix.dim

    @property
    def a(self) -> np.ndarray:
        return self.matrix.entries

    @property
    def rank(self) -> int:
        return int(round(float(np.trace(self.matrix.entries).real)))


@dataclasses.dataclass(frozen=True, eq=False)
class Channel:
    """A completely positive trace-preserving map given by Kraus operators.

    Each Kraus operator is a ``dim_out x dim_in`` complex matrix and the
    completeness relation ``sum_k K^dag K = I`` must hold within tolerance.
    """

    kraus: tuple[np.ndarray, ...]
    in_layout: RegisterLayout
    out_layout: RegisterLayout

    def __post_init__(self):
        ks = tuple(
            _freeze(np.array(k, dtype=np.complex128, order="C")) for k in self.kraus
        )
        if not ks:
            raise ValueError("channel needs at least one Kraus operator")
        din, dout = self.in_layout.dim, self.out_layout.dim
        for k in ks:
            if k.shape != (dout, din):
                raise LayoutError(
                    f"Kraus shape {k.shape} != (out {dout}, in {din})"
                )
        total = sum(k.conj().T @ k for k in ks)
        err = float(np.max(np.abs(total - np.eye(din))))
        if err > ATOL:
            raise ValueError(f"Kraus completeness violated (|sum K^dag K - I| = {err:.3e})")
        object.__setattr__(self, "kraus", ks)

    @property
    def dim_in(self) -> int:
        return self.in_layout.dim

    @property
    def dim_out(self) -> int:
        return self.out_layout.dim


# ---------------------------------------------------------------------------
# structural operations
# ---------------------------------------------------------------------------

def tensor_product(a, b):
    """Kronecker product with concatenated layouts.

    Accepts two values of the same kind (DensityMatrix, PureState,
    Projector, or ComplexMatrix) and returns that kind.  For layout-carrying
    values the factor labels must be disjoint.
    """
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(
            ComplexMatrix(np.kron(a.a, b.a)), a.layout.concat(b.layout)
        )
    if isinstance(a, PureState) and isinstance(b, PureState):
        return PureState(np.kron(a.vector, b.vector), a.layout.concat(b.layout))
    if isinstance(a, Projector) and isinstance(b, Projector):
        return Projector(ComplexMatrix(np.kron(a.a, b.a)))
    if isinstance(a, ComplexMatrix) and isinstance(b, ComplexMatrix):
        return ComplexMatrix(np.kron(a.a, b.a))
    raise TypeError(
        f"cannot tensor {type(a).__name__} with {type(b).__name__}"
    )


def partial_trace(rho: DensityMatrix, keep: Iterable[str]) -> DensityMatrix:
    """Trace out every register not named in ``keep``.

    Parameters
    ----------
    rho : DensityMatrix
    keep : iterable of register labels
        Labels to retain; the result's layout lists them in ``rho``'s order.

    Returns
    -------
    DensityMatrix on the kept registers, with the same total trace.
    """
    keep = set(keep)
    sub = rho.layout.restricted(keep)  # validates labels
    labels, dims = rho.layout.labels, rho.layout.dims
    n = len(dims)
    t = rho.a.reshape(dims + dims)
    row = list(range(n))
    col = [n + i if labels[i] in keep else i for i in range(n)]
    out = [i for i in range(n) if labels[i] in keep]
    out += [n + i for i in range(n) if labels[i] in keep]
    reduced = np.einsum(t, row + col, out)
    d = sub.dim
    return DensityMatrix(ComplexMatrix(reduced.reshape(d, d)), sub)


def permute_registers(x: DensityMatrix | PureState, order: Sequence[str]):
    """Reorder tensor factors into the given label order.

    This is the single permutation primitive the rest of the package builds
    on; ``order`` must list every label of ``x``'s layout exactly once.
    """
    layout = x.layout
    if sorted(order) != sorted(layout.labels):
        raise LayoutError(
            f"order {list(order)} is not a permutation of {list(layout.labels)}"
        )
    perm = [layout.position(l) for l in order]
    dims = layout.dims
    new_layout = RegisterLayout(tuple(layout.factors[p] for p in perm))
    if isinstance(x, PureState):
        v = x.vector.reshape(dims).transpose(perm).reshape(-1)
        return PureState(v, new_layout)
    n = len(dims)
    t = x.a.reshape(dims + dims).transpose(perm + [n + p for p in perm])
    d = layout.dim
    return DensityMatrix(ComplexMatrix(t.reshape(d, d)), new_layout)


def hermitian_eig(a) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Parameters
    ----------
    a : ComplexMatrix, ndarray, or any matrix-carrying value

    Returns
    -------
    (eigenvalues, eigenvectors)
        Real eigenvalues in descending order and a unitary whose columns are
        the matching eigenvectors, so ``a = V diag(w) V^dag``.

    Raises
    ------
    ValueError
        If the input is not Hermitian within tolerance.
    """
    m = as_array(a)
    herm_err = float(np.max(np.abs(m - m.conj().T)))
    if herm_err > ATOL:
        raise ValueError(f"input is not Hermitian (|A - A^dag| = {herm_err:.3e})")
    w, v = np.linalg.eigh(m)
    return w[::-1].copy(), np.ascontiguousarray(v[:, ::-1])


def apply_channel(
    channel: Channel, rho: DensityMatrix, targets: Sequence[str] | None = None
) -> DensityMatrix:
    """Apply a channel to a state, optionally on a subset of its registers.

    The target registers are permuted to the front, the Kraus conjugation is
    applied there, and the result is permuted back: the channel's output
    factors take the place of the first target factor and all untouched
    factors keep their relative order.  Output labels must not collide with
    the untouched labels.
    """
    if targets is None:
        targets = channel.in_layout.labels
    targets = list(targets)
    layout = rho.layout
    d_t = int(np.prod([layout.dim_of(l) for l in targets]))
    if d_t != channel.dim_in:
        raise LayoutError(
            f"target dimension {d_t} != channel input dimension {channel.dim_in}"
        )
    rest = [l for l in layout.labels if l not in targets]
    clash = set(channel.out_layout.labels) & set(rest)
    if clash:
        raise LayoutError(f"channel output labels {sorted(clash)} already in use")
    front = permute_registers(rho, targets + rest)
    d_r = front.dim // d_t
    arr = front.a
    ident = np.eye(d_r)
    out = np.zeros((channel.dim_out * d_r,) * 2, dtype=np.complex128)
    for k in channel.kraus:
        big = np.kron(k, ident)
        out += big @ arr @ big.conj().T
    if rest:
        mid_layout = channel.out_layout.concat(layout.restricted(rest))
    else:
        mid_layout = channel.out_layout
    mid = DensityMatrix(ComplexMatrix(out), mid_layout)
    # permute back: splice the output labels where the first target sat
    final: list[str] = []
    for l in layout.labels:
        if l == targets[0]:
            final.extend(channel.out_layout.labels)
        elif l in targets:
            continue
        else:
            final.append(l)
    return permute_registers(mid, final)


# ---------------------------------------------------------------------------
# metrics and standard states
# ---------------------------------------------------------------------------

def psd_sqrt(a) -> np.ndarray:
    """Square root of a positive-semidefinite matrix (negative noise clipped)."""
    w, v = np.linalg.eigh(as_array(a))
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def psd_inv_sqrt(a, cutoff: float = 1e-12) -> np.ndarray:
    """Inverse square root on the support; eigenvalues below ``cutoff`` are
    treated as kernel and pseudo-inverted to zero."""
    w, v = np.linalg.eigh(as_array(a))
    inv = np.where(w > cutoff, 1.0 / np.sqrt(np.clip(w, cutoff, None)), 0.0)
    return (v * inv) @ v.conj().T


def root_fidelity(rho, sigma) -> float:
    """Trace norm of sqrt(rho) sqrt(sigma), in [0, 1] for states."""
    r, s = as_array(rho), as_array(sigma)
    if r.shape != s.shape:
        raise LayoutError(f"dimension mismatch {r.shape} vs {s.shape}")
    sv = np.linalg.svd(psd_sqrt(r) @ psd_sqrt(s), compute_uv=False)
    return float(np.sum(sv))


def purified_distance(rho, sigma) -> float:
    """sqrt(1 - F^2) where F is the root fidelity; symmetric, in [0, 1]."""
    f = min(root_fidelity(rho, sigma), 1.0)
    return float(np.sqrt(max(0.0, 1.0 - f * f)))


def maximally_entangled(d: int, labels: tuple[str, str] = ("a", "b")) -> PureState:
    """The maximally entangled pure state sum_i |ii> / sqrt(d) on two registers."""
    if d < 2:
        raise ValueError(f"need local dimension >= 2, got {d}")
    v = np.zeros(d * d, dtype=np.complex128)
    v[:: d + 1] = 1.0 / np.sqrt(d)
    layout = RegisterLayout(((labels[0], d), (labels[1], d)))
    return PureState(v, layout)


def unitary_channel(u: np.ndarray, in_layout: RegisterLayout, out_layout: RegisterLayout) -> Channel:
    return Channel((np.array(u),), in_layout, out_layout)


def pauli_channel_family(
    num_qubits: int, in_label: str = "a", out_label: str = "b"
) -> list[Channel]:
    """All 4^n unitary channels built from tensor products of single-qubit Paulis.

    The uniform average of the family is the fully depolarizing channel: it
    sends every input to the maximally mixed state.
    """
    if num_qubits < 1:
        raise ValueError("num_qubits must be >= 1")
    d = 2**num_qubits
    in_layout = RegisterLayout(((in_label, d),))
    out_layout = RegisterLayout(((out_label, d),))
    out = []
    for combo in itertools.product(range(4), repeat=num_qubits):
        u = np.array([[1.0]], dtype=np.complex128)
        for i in combo:
            u = np.kron(u, PAULIS[i])
        out.append(unitary_channel(u, in_layout, out_layout))
    return out


# ---------------------------------------------------------------------------
# seeded sampling
# ---------------------------------------------------------------------------

def rng_from(seed: int | np.random.Generator) -> np.random.Generator:
    """Accept either a 64-bit seed or an existing generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(int(seed))


def haar_unitary(dim: int, seed: int | np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a Gaussian complex matrix.

    The R-diagonal phase fix makes the distribution exactly Haar rather than
    merely QR-of-Gaussian.
    """
    rng = rng_from(seed)
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    ph = np.diag(r).copy()
    ph /= np.abs(ph)
    return q * ph


def random_pure_state(
    dim: int, seed: int | np.random.Generator, layout: RegisterLayout | None = None
) -> PureState:
    rng = rng_from(seed)
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    v /= np.linalg.norm(v)
    if layout is None:
        layout = RegisterLayout((("r", dim),))
    return PureState(v, layout)


def random_density(
    dim: int,
    seed: int | np.random.Generator,
    rank: int | None = None,
    layout: RegisterLayout | None = None,
) -> DensityMatrix:
    """Random full-rank (or fixed-rank) state from a Gaussian square root."""
    rng = rng_from(seed)
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    m /= np.trace(m).real
    if layout is None:
        layout = RegisterLayout((("r", dim),))
    return DensityMatrix(ComplexMatrix(m), layout)


def random_projector(dim: int, rank: int, seed: int | np.random.Generator) -> Projector:
    """Projector onto the span of ``rank`` Haar-random orthonormal columns."""
    if not 1 <= rank <= dim:
        raise ValueError(f"rank {rank} out of range for dimension {dim}")
    q = haar_unitary(dim, seed)[:, :rank]
    return Projector(ComplexMatrix(q @ q.conj().T))


def random_hermitian(dim: int, seed: int | np.random.Generator) -> ComplexMatrix:
    rng = rng_from(seed)
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return ComplexMatrix((g + g.conj().T) / 2)


def random_channel(
    in_layout: RegisterLayout,
    out_layout: RegisterLayout,
    num_kraus: int,
    seed: int | np.random.Generator,
) -> Channel:
    """Random channel from a Haar isometry into output x environment.

    The Kraus operators are the environment slices of a random isometry, so
    completeness holds exactly up to floating point.  Requires
    ``dim_out * num_kraus >= dim_in`` for the isometry to exist.
    """
    din, dout = in_layout.dim, out_layout.dim
    if dout * num_kraus < din:
        raise ValueError(
            f"need dim_out * num_kraus >= dim_in, got {dout} * {num_kraus} < {din}"
        )
    v = haar_unitary(dout * num_kraus, seed)[:, :din]
    ks = tuple(v.reshape(dout, num_kraus, din)[:, e, :] for e in range(num_kraus))
    return Channel(ks, in_layout, out_layout)


# ---------------------------------------------------------------------------
# text serialization
# ---------------------------------------------------------------------------

def _format_rows(a: np.ndarray) -> list[str]:
    return [
        " ".join(f"{x.real:.17g},{x.imag:.17g}" for x in row) for row in a
    ]


def _parse_rows(lines: list[str], dim: int) -> np.ndarray:
    rows = []
    for line in lines:
        row = []
        for tok in line.split():
            re_s, _, im_s = tok.partition(",")
            row.append(complex(float(re_s), float(im_s)))
        if len(row) != dim:
            raise ValueError(f"expected {dim} entries per row, got {len(row)}")
        rows.append(row)
    if len(rows) != dim:
        raise ValueError(f"expected {dim} rows, got {len(rows)}")
    return np.array(rows, dtype=np.complex128)


def save_matrix(path, m) -> None:
    """Write a matrix as text: a ``dim`` header then rows of ``re,im`` pairs.

    Values round-trip bit-exactly (17 significant digits).
    """
    a = as_array(m)
    lines = [f"dim {a.shape[0]}"]
    if isinstance(m, DensityMatrix):
        lines.append(f"layout {m.layout.header()}")
    lines += _format_rows(a)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_matrix(path) -> ComplexMatrix:
    with open(path) as fh:
        lines = [ln for ln in (l.strip() for l in fh) if ln]
    if not lines or not lines[0].startswith("dim "):
        raise ValueError(f"{path}: missing 'dim <n>' header")
    dim = int(lines[0].split()[1])
    body = lines[2:] if len(lines) > 1 and lines[1].startswith("layout ") else lines[1:]
    return ComplexMatrix(_parse_rows(body, dim))


def load_state(path) -> DensityMatrix:
    """Read a density matrix; uses the ``layout`` header if present."""
    with open(path) as fh:
        lines = [ln for ln in (l.strip() for l in fh) if ln]
    if not lines or not lines[0].startswith("dim "):
        raise ValueError(f"{path}: missing 'dim <n>' header")
    dim = int(lines[0].split()[1])
    if len(lines) > 1 and lines[1].startswith("layout "):
        layout = RegisterLayout.of(lines[1][len("layout "):])
        body = lines[2:]
    else:
        layout = RegisterLayout((("r", dim),))
        body = lines[1:]
    return DensityMatrix(ComplexMatrix(_parse_rows(body, dim)), layout)


def save_channel(path, ch: Channel) -> None:
    lines = [
        f"channel kraus {len(ch.kraus)}",
        f"in_layout {ch.in_layout.header()}",
        f"out_layout {ch.out_layout.header()}",
    ]
    for i, k in enumerate(ch.kraus):
        lines.append(f"kraus {i}")
        lines += _format_rows(k)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_channel(path) -> Channel:
    with open(path) as fh:
        lines = [ln for ln in (l.strip() for l in fh) if ln]
    if not lines or not lines[0].startswith("channel kraus "):
        raise ValueError(f"{path}: missing 'channel kraus <k>' header")
    nk = int(lines[0].split()[2])
    in_layout = RegisterLayout.of(lines[1][len("in_layout "):])
    out_layout = RegisterLayout.of(lines[2][len("out_layout "):])
    dout, din = out_layout.dim, in_layout.dim
    ks, i = [], 3
    for _ in range(nk):
        if not lines[i].startswith("kraus "):
            raise ValueError(f"{path}: expected 'kraus <i>' at line {i + 1}")
        block = lines[i + 1 : i + 1 + dout]
        rows = []
        for line in block:
            row = []
            for tok in line.split():
                re_s, _, im_s = tok.partition(",")
                row.append(complex(float(re_s), float(im_s)))
            if len(row) != din:
                raise ValueError(f"{path}: expected {din} entries per Kraus row")
            rows.append(row)
        ks.append(np.array(rows, dtype=np.complex128))
        i += 1 + dout
    return Channel(tuple(ks), in_layout, out_layout)


def content_hash(x) -> str:
    """SHA-256 of the canonical 17-digit text form; stable across runs."""
    a = as_array(x)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    parts = _format_rows(a)
    if isinstance(x, (DensityMatrix, PureState)):
        parts.insert(0, x.layout.header())
    return hashlib.sha256("\n".join(parts).encode()).hexdigest()
