"""Finite-dimensional quantum state engine.

Pure states, density matrices, shift/clock (generalized Pauli) unitaries,
projective verification, standard qudit teleportation, and the tensor /
partial-trace / channel plumbing the cloning constructions need.  Everything
is dense complex128; dimensions are desk-scale (single qudit d <= 32,
composite spaces <= 4096), so no sparsity.

All randomness is drawn from caller-supplied numpy Generators; operations are
pure otherwise.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

ATOL = 1e-12  # algebraic identities
EIG_TOL = 1e-10  # eigenvalue positivity slack

MAX_SPACE_DIM = 4096  # largest state-vector space kept dense


class DimensionError(ValueError):
    """Shape or dimension mismatch between quantum objects."""


class VerifyOutcome(Enum):
    PASS = "pass"
    FAIL = "fail"


def as_rng(seed_or_rng) -> np.random.Generator:
    return np.random.default_rng(seed_or_rng)


@dataclass(frozen=True, eq=False)
class PureState:
    """A unit vector in C^d."""

    d: int
    vector: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=np.complex128)
        object.__setattr__(self, "vector", v)
        if self.d < 2:
            raise DimensionError(f"qudit dimension must be >= 2, got {self.d}")
        if self.d > MAX_SPACE_DIM:
            raise DimensionError(f"dimension {self.d} exceeds the dense cap {MAX_SPACE_DIM}")
        if v.shape != (self.d,):
            raise DimensionError(f"state vector shape {v.shape} != ({self.d},)")
        n = np.linalg.norm(v)
        if abs(n - 1.0) > 1e-12:
            raise DimensionError(f"state vector norm {n} is not 1 within 1e-12")

    def density_matrix(self) -> "DensityMatrix":
        return DensityMatrix(self.d, np.outer(self.vector, self.vector.conj()))

    def overlap(self, other: "PureState") -> complex:
        if self.d != other.d:
            raise DimensionError("overlap of states with different dimensions")
        return complex(np.vdot(self.vector, other.vector))

    def to_json(self) -> list:
        return [[float(c.real), float(c.imag)] for c in self.vector]


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A d x d density matrix: hermitian, unit trace, positive semidefinite."""

    d: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        object.__setattr__(self, "matrix", m)
        if m.shape != (self.d, self.d):
            raise DimensionError(f"density matrix shape {m.shape} != ({self.d},{self.d})")
        if np.abs(m - m.conj().T).max() > 1e-12:
            raise DimensionError("density matrix is not hermitian within 1e-12")
        tr = np.trace(m).real
        if abs(tr - 1.0) > 1e-12:
            raise DimensionError(f"density matrix trace {tr} is not 1 within 1e-12")
        evals = np.linalg.eigvalsh(m)
        if evals.min() < -EIG_TOL:
            raise DimensionError(f"density matrix has eigenvalue {evals.min()} < -{EIG_TOL}")

    @classmethod
    def maximally_mixed(cls, d: int) -> "DensityMatrix":
        return cls(d, np.eye(d, dtype=np.complex128) / d)

    def to_json(self) -> list:
        return [[[float(c.real), float(c.imag)] for c in row] for row in self.matrix]


def basis_state(d: int, k: int) -> PureState:
    v = np.zeros(d, dtype=np.complex128)
    v[k] = 1.0
    return PureState(d, v)


def haar_random_state(d: int, rng_seed) -> PureState:
    """Uniformly random pure state: normalized complex Gaussian vector."""
    if d < 2:
        raise DimensionError(f"qudit dimension must be >= 2, got {d}")
    rng = as_rng(rng_seed)
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return PureState(d, v / np.linalg.norm(v))


def fidelity_with_pure(rho: DensityMatrix, psi: PureState) -> float:
    """<psi|rho|psi>: the probability rho passes the projective test onto psi."""
    if rho.d != psi.d:
        raise DimensionError(f"fidelity dimension mismatch {rho.d} != {psi.d}")
    val = np.vdot(psi.vector, rho.matrix @ psi.vector)
    return float(val.real)


def projective_verify(expected: PureState, returned, rng) -> VerifyOutcome:
    """Sample the projective test of a returned state against the expected one.

    Passes with probability exactly fidelity_with_pure(returned, expected).
    """
    if isinstance(returned, PureState):
        if returned.d != expected.d:
            raise DimensionError("projective test dimension mismatch")
        p = abs(np.vdot(expected.vector, returned.vector)) ** 2
    else:
        p = fidelity_with_pure(returned, expected)
    return VerifyOutcome.PASS if as_rng(rng).random() < p else VerifyOutcome.FAIL


# ---------------------------------------------------------------------------
# Shift/clock (generalized Pauli) unitaries
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeylOperator:
    """X^a Z^b on C^d, indexed by j = a*d + b in {0, ..., d^2-1}."""

    d: int
    j: int

    def __post_init__(self):
        if not 0 <= self.j < self.d * self.d:
            raise DimensionError(f"operator index {self.j} out of range for d={self.d}")

    @property
    def a(self) -> int:
        return self.j // self.d

    @property
    def b(self) -> int:
        return self.j % self.d

    def matrix(self) -> np.ndarray:
        d = self.d
        omega = np.exp(2j * np.pi / d)
        m = np.zeros((d, d), dtype=np.complex128)
        for k in range(d):
            m[(k + self.a) % d, k] = omega ** (self.b * k)
        return m


def weyl(d: int, j: int) -> WeylOperator:
    return WeylOperator(d, j)


def weyl_apply(d: int, j: int, vector: np.ndarray) -> np.ndarray:
    """Apply X^a Z^b to a vector in O(d), without building the matrix."""
    a, b = divmod(j, d)
    phases = np.exp(2j * np.pi * b * np.arange(d) / d)
    return np.roll(phases * vector, a)


def weyl_apply_inverse(d: int, j: int, vector: np.ndarray) -> np.ndarray:
    a, b = divmod(j, d)
    shifted = np.roll(vector, -a)
    phases = np.exp(-2j * np.pi * b * np.arange(d) / d)
    return phases * shifted


def apply(op: WeylOperator, state: PureState) -> PureState:
    if op.d != state.d:
        raise DimensionError("operator/state dimension mismatch")
    return PureState(state.d, weyl_apply(op.d, op.j, state.vector))


def apply_inverse(op: WeylOperator, state: PureState) -> PureState:
    if op.d != state.d:
        raise DimensionError("operator/state dimension mismatch")
    return PureState(state.d, weyl_apply_inverse(op.d, op.j, state.vector))


# ---------------------------------------------------------------------------
# Teleportation
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TeleportResource:
    """A maximally entangled two-qudit pair pinned to two spacetime endpoints."""

    d: int
    source: object
    target: object
    vector: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.vector is None:
            v = np.zeros(self.d * self.d, dtype=np.complex128)
            v[:: self.d + 1] = 1.0 / np.sqrt(self.d)
            object.__setattr__(self, "vector", v)
        v = np.asarray(self.vector, dtype=np.complex128)
        object.__setattr__(self, "vector", v)
        if v.shape != (self.d * self.d,):
            raise DimensionError("resource vector has wrong shape")
        # reduced state on either side must be maximally mixed
        m = v.reshape(self.d, self.d)
        red = m @ m.conj().T
        if np.abs(red - np.eye(self.d) / self.d).max() > 1e-12:
            raise DimensionError("resource is not maximally entangled")


def teleport(input_state: PureState, resource: TeleportResource, rng):
    """Standard qudit teleportation through a maximally entangled pair.

    The joint measurement is in the basis {(W_j^dag x I)|Phi+>}; outcome j
    leaves the remote side holding exactly W_j applied to the input, so the
    correction is the inverse shift/clock operator.  Outcomes are uniform on
    {0, ..., d^2-1} whatever the input is, which is why broadcasting j leaks
    nothing.

    Returns (j, remote_state).
    """
    d = input_state.d
    if resource.d != d:
        raise DimensionError("teleport resource dimension mismatch")
    rng = as_rng(rng)
    # Born probabilities of the d^2 outcomes; each is ||W_j psi||^2 / d^2.
    probs = np.empty(d * d)
    remotes = []
    for j in range(d * d):
        w = weyl_apply(d, j, input_state.vector)
        probs[j] = float(np.vdot(w, w).real) / (d * d)
        remotes.append(w)
    probs /= probs.sum()
    j = int(rng.choice(d * d, p=probs))
    remote = remotes[j]
    remote = remote / np.linalg.norm(remote)
    return j, PureState(d, remote)


# ---------------------------------------------------------------------------
# Composite-system plumbing
# ---------------------------------------------------------------------------


def tensor(*operands) -> np.ndarray:
    """Kronecker product of vectors or matrices (ndarray in, ndarray out)."""
    arrays = [
        op.vector if isinstance(op, PureState) else op.matrix if isinstance(op, DensityMatrix) else np.asarray(op)
        for op in operands
    ]
    out = arrays[0]
    for a in arrays[1:]:
        out = np.kron(out, a)
    return out


def partial_trace(matrix, dims, keep) -> np.ndarray:
    """Trace out all subsystems except those in ``keep``.

    ``dims`` lists the subsystem dimensions in tensor order; ``keep`` is an
    index or sorted list of indices.  Returns the reduced matrix (ndarray).
    """
    if isinstance(matrix, DensityMatrix):
        matrix = matrix.matrix
    matrix = np.asarray(matrix)
    dims = list(dims)
    n = len(dims)
    if isinstance(keep, int):
        keep = [keep]
    keep = sorted(keep)
    total = int(np.prod(dims))
    if matrix.shape != (total, total):
        raise DimensionError(f"matrix shape {matrix.shape} incompatible with dims {dims}")
    t = matrix.reshape(dims + dims)
    for sub in sorted(set(range(n)) - set(keep), reverse=True):
        t = np.trace(t, axis1=sub, axis2=sub + (t.ndim // 2))
    return t.reshape(
        int(np.prod([dims[i] for i in keep])), int(np.prod([dims[i] for i in keep]))
    )


def choi_from_kraus(kraus_ops) -> np.ndarray:
    """Unnormalized Choi matrix sum_jk |j><k| x K(|j><k|), input slot first."""
    k0 = np.asarray(kraus_ops[0])
    d_in = k0.shape[1]
    d_out = k0.shape[0]
    choi = np.zeros((d_in * d_out, d_in * d_out), dtype=np.complex128)
    for op in kraus_ops:
        op = np.asarray(op, dtype=np.complex128)
        v = np.kron(np.eye(d_in), op) @ _max_ent_unnorm(d_in)
        choi += np.outer(v, v.conj())
    return choi


def _max_ent_unnorm(d: int) -> np.ndarray:
    v = np.zeros(d * d, dtype=np.complex128)
    v[:: d + 1] = 1.0
    return v


def choi_identity(d: int) -> np.ndarray:
    return choi_from_kraus([np.eye(d)])


def choi_depolarizing(d: int, strength: float = 1.0) -> np.ndarray:
    """Choi matrix of rho -> (1-s) rho + s I/d, built from shift/clock Kraus ops."""
    ident = choi_identity(d)
    ops = [weyl(d, j).matrix() / d for j in range(d * d)]
    full = choi_from_kraus(ops)
    return (1.0 - strength) * ident + strength * full


def validate_choi(choi: np.ndarray, d_in: int, d_out: int):
    """Reject Choi matrices that are not trace-preserving or not PSD."""
    choi = np.asarray(choi)
    if choi.shape != (d_in * d_out, d_in * d_out):
        raise DimensionError("Choi matrix shape mismatch")
    t = choi.reshape(d_in, d_out, d_in, d_out)
    tr_out = np.trace(t, axis1=1, axis2=3)
    if np.abs(tr_out - np.eye(d_in)).max() > 1e-10:
        raise DimensionError("Choi matrix is not trace-preserving within 1e-10")
    evals = np.linalg.eigvalsh(choi)
    if evals.min() < -EIG_TOL:
        raise DimensionError("Choi matrix is not positive semidefinite")


def apply_channel(choi: np.ndarray, rho, d_out: int = None) -> DensityMatrix:
    """Apply a channel given by its (input-first) Choi matrix to rho."""
    if isinstance(rho, PureState):
        rho = rho.density_matrix()
    d_in = rho.d
    choi = np.asarray(choi)
    if d_out is None:
        if choi.shape[0] % d_in != 0:
            raise DimensionError("Choi matrix incompatible with input dimension")
        d_out = choi.shape[0] // d_in
    validate_choi(choi, d_in, d_out)
    t = choi.reshape(d_in, d_out, d_in, d_out)
    out = np.einsum("jk,jakb->ab", rho.matrix, t)
    out = 0.5 * (out + out.conj().T)
    return DensityMatrix(d_out, out)


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    evals = np.linalg.eigvalsh(np.asarray(a) - np.asarray(b))
    return 0.5 * float(np.abs(evals).sum())
