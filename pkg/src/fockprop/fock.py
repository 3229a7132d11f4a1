"""Doubly-truncated bosonic Fock space: d modes, total quanta <= M.

States are occupation vectors (n_1 .. n_d) enumerated in graded
lexicographic order (by total quanta, then first mode heaviest), which
pins down serialization.  Ladder operators, multiplicative and tangential
second quantization of one-particle operators, and truncated coherent
vectors are all realized as dense complex matrices / vectors over this
basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .symbols import as_phase_point

HERMITIAN_TOL = 1e-12

__all__ = [
    "FockBasis",
    "enumerate_basis",
    "OperatorMatrix",
    "CoherentVector",
    "annihilator",
    "creator",
    "CcrDefect",
    "ccr_defect",
    "gamma_diag",
    "gamma_of",
    "dgamma",
    "coherent_vector",
    "coherent_overlap",
    "coherent_tail_bound",
    "min_quanta_for_tail",
    "hermitian_defect",
    "basis_to_json",
    "basis_from_json",
    "matrix_to_json",
    "matrix_from_json",
]


def _occupations(total: int, modes: int) -> Iterator[tuple[int, ...]]:
    # First mode takes the largest share first: (q,0,..), .., (0,..,q).
    if modes == 1:
        yield (total,)
        return
    for head in range(total, -1, -1):
        for rest in _occupations(total - head, modes - 1):
            yield (head,) + rest


class FockBasis:
    """Occupation-number basis of the truncated d-mode space."""

    def __init__(self, modes: int, max_quanta: int):
        if modes < 1:
            raise ValueError("modes must be >= 1")
        if max_quanta < 0:
            raise ValueError("max_quanta must be >= 0")
        self.modes = modes
        self.max_quanta = max_quanta
        states: list[tuple[int, ...]] = []
        for q in range(max_quanta + 1):
            states.extend(_occupations(q, modes))
        self.states: tuple[tuple[int, ...], ...] = tuple(states)
        self.occupations = np.array(states, dtype=np.int64)
        self.total_quanta = self.occupations.sum(axis=1)
        self._index = {s: i for i, s in enumerate(states)}
        assert len(self.states) == math.comb(max_quanta + modes, modes)

    @property
    def size(self) -> int:
        return len(self.states)

    def index(self, state: Sequence[int]) -> int:
        return self._index[tuple(state)]

    def protected_slice(self, layers: int = 1) -> np.ndarray:
        """Indices of states with total quanta <= M - layers (cutoff-safe)."""
        return np.nonzero(self.total_quanta <= self.max_quanta - layers)[0]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FockBasis)
            and self.modes == other.modes
            and self.max_quanta == other.max_quanta
        )

    def __repr__(self) -> str:
        return f"FockBasis(modes={self.modes}, max_quanta={self.max_quanta}, size={self.size})"


def enumerate_basis(modes: int, max_quanta: int) -> FockBasis:
    """Canonical truncated basis; size = binomial(M+d, d)."""
    return FockBasis(modes, max_quanta)


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense complex matrix over a FockBasis; treated as immutable."""

    basis: FockBasis
    mat: np.ndarray

    def __post_init__(self):
        mat = np.ascontiguousarray(self.mat, dtype=complex)
        if mat.shape != (self.basis.size, self.basis.size):
            raise ValueError(
                f"matrix shape {mat.shape} does not match basis size {self.basis.size}"
            )
        mat.flags.writeable = False
        object.__setattr__(self, "mat", mat)

    def hermitian_defect(self) -> float:
        return float(np.abs(self.mat - self.mat.conj().T).max())

    @property
    def is_hermitian(self) -> bool:
        return self.hermitian_defect() <= HERMITIAN_TOL

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        if self.basis != other.basis:
            raise ValueError("operands live on different bases")
        return OperatorMatrix(self.basis, self.mat @ other.mat)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.mat @ np.asarray(vec, dtype=complex)


@dataclass(frozen=True)
class CoherentVector:
    """Truncated unnormalized coherent vector: component prod a_i^n_i / sqrt(n_i!)."""

    basis: FockBasis
    alpha: np.ndarray
    components: np.ndarray

    @property
    def norm_tail_bound(self) -> float:
        """Bound on the squared norm lost to the quanta cutoff."""
        x = float((np.abs(self.alpha) ** 2).sum())
        return coherent_tail_bound(x, self.basis.max_quanta)


def annihilator(basis: FockBasis, mode: int) -> OperatorMatrix:
    """Matrix of a_mode: sqrt(n_mode) linking (n) -> (n - e_mode); 1-based mode."""
    if not 1 <= mode <= basis.modes:
        raise ValueError(f"mode {mode} out of range 1..{basis.modes}")
    i = mode - 1
    mat = np.zeros((basis.size, basis.size), dtype=complex)
    for col, state in enumerate(basis.states):
        n = state[i]
        if n > 0:
            lowered = state[:i] + (n - 1,) + state[i + 1 :]
            mat[basis.index(lowered), col] = math.sqrt(n)
    return OperatorMatrix(basis, mat)


def creator(basis: FockBasis, mode: int) -> OperatorMatrix:
    """Conjugate transpose of the annihilator."""
    return OperatorMatrix(basis, annihilator(basis, mode).mat.conj().T)


class CcrDefect(NamedTuple):
    """Max-norm of [a_i, a_j^dag] - delta_ij, on the protected block and overall."""

    protected: float
    full: float


def ccr_defect(basis: FockBasis, mode_i: int, mode_j: int) -> CcrDefect:
    """Commutator defect of the truncated ladder matrices.

    The protected value restricts rows and columns to states with total
    quanta <= M-1, where truncation cannot bite; the full value includes
    the boundary layer, whose defect is a property of the cutoff, not of
    the operators.
    """
    a_i = annihilator(basis, mode_i).mat
    c_j = creator(basis, mode_j).mat
    comm = a_i @ c_j - c_j @ a_i
    if mode_i == mode_j:
        comm = comm - np.eye(basis.size)
    keep = basis.protected_slice(layers=1)
    protected = float(np.abs(comm[np.ix_(keep, keep)]).max()) if len(keep) else 0.0
    return CcrDefect(protected=protected, full=float(np.abs(comm).max()))


def gamma_diag(basis: FockBasis, lambdas) -> OperatorMatrix:
    """Multiplicative quantization of a diagonal one-particle operator.

    Diagonal entry prod_i lambda_i^n_i at occupation (n); fixes the vacuum
    (0^0 = 1 convention).
    """
    lam = as_phase_point(lambdas, basis.modes)
    diag = np.ones(basis.size, dtype=complex)
    for i in range(basis.modes):
        exps = basis.occupations[:, i]
        diag *= np.where(exps == 0, 1.0 + 0j, lam[i] ** exps)
    return OperatorMatrix(basis, np.diag(diag))


def gamma_of(basis: FockBasis, o: np.ndarray) -> OperatorMatrix:
    """Multiplicative quantization of a general d x d one-particle operator.

    Columns are built by dynamic programming over the graded basis: the
    column for (n) is the transformed-mode creator applied to the column
    for (n - e_i), divided by sqrt(n_i).  Grade-preserving, hence exact on
    the truncated space.  Helper, quadratic memory and cubic time in the
    basis size; the diagonal fast path is gamma_diag.
    """
    o = np.asarray(o, dtype=complex)
    if o.shape != (basis.modes, basis.modes):
        raise ValueError(f"operator must be {basis.modes} x {basis.modes}")
    transformed = [
        sum(o[j, i] * creator(basis, j + 1).mat for j in range(basis.modes))
        for i in range(basis.modes)
    ]
    cols = np.zeros((basis.size, basis.size), dtype=complex)
    cols[0, 0] = 1.0
    for idx, state in enumerate(basis.states):
        if idx == 0:
            continue
        i = next(m for m, n in enumerate(state) if n > 0)
        parent = state[:i] + (state[i] - 1,) + state[i + 1 :]
        cols[:, idx] = (transformed[i] @ cols[:, basis.index(parent)]) / math.sqrt(
            state[i]
        )
    return OperatorMatrix(basis, cols)


def dgamma(basis: FockBasis, o: np.ndarray) -> OperatorMatrix:
    """Tangential quantization sum_ij o_ij a_i^dag a_j, filled directly.

    Annihilates the vacuum; Hermitian when o is; grade-preserving, so the
    truncated matrix is exact. In particular the diagonal of dgamma(I) is
    the integer quanta count, not a product of square roots.
    """
    o = np.asarray(o, dtype=complex)
    if o.shape != (basis.modes, basis.modes):
        raise ValueError(f"operator must be {basis.modes} x {basis.modes}")
    mat = np.zeros((basis.size, basis.size), dtype=complex)
    for col, state in enumerate(basis.states):
        for j in range(basis.modes):
            nj = state[j]
            if nj == 0:
                continue
            for i in range(basis.modes):
                if o[i, j] == 0:
                    continue
                if i == j:
                    mat[col, col] += o[i, j] * nj
                else:
                    target = list(state)
                    target[j] -= 1
                    target[i] += 1
                    mat[basis.index(target), col] += (
                        o[i, j] * math.sqrt(nj) * math.sqrt(state[i] + 1)
                    )
    return OperatorMatrix(basis, mat)


def coherent_vector(basis: FockBasis, alpha) -> CoherentVector:
    """Truncated coherent vector with vacuum component 1 (Bargmann convention)."""
    a = as_phase_point(alpha, basis.modes)
    if not np.all(np.isfinite(a)):
        raise ValueError("coherent amplitude must be finite")
    comp = np.ones(basis.size, dtype=complex)
    for i in range(basis.modes):
        exps = basis.occupations[:, i]
        powers = np.where(exps == 0, 1.0 + 0j, a[i] ** exps)
        facts = np.array([math.sqrt(math.factorial(int(e))) for e in exps])
        comp *= powers / facts
    return CoherentVector(basis=basis, alpha=a, components=comp)


def coherent_overlap(u: CoherentVector, v: CoherentVector) -> complex:
    """<u, v>; approximates exp(u.alpha* . v.alpha) up to the quanta tail."""
    return complex(np.vdot(u.components, v.components))


def coherent_tail_bound(x: float, max_quanta: int) -> float:
    """Geometric bound on sum_{k>M} x^k / k! for x >= 0 (inf if x >= M+2)."""
    if x < 0:
        raise ValueError("x must be non-negative")
    if x == 0.0:
        return 0.0
    if x >= max_quanta + 2:
        return math.inf
    # log of x^(M+1)/(M+1)! to dodge overflow at large M
    log_head = (max_quanta + 1) * math.log(x) - math.lgamma(max_quanta + 2)
    return math.exp(log_head) / (1.0 - x / (max_quanta + 2))


def min_quanta_for_tail(x: float, tol: float, cap: int = 10_000) -> int:
    """Smallest cutoff M with coherent_tail_bound(x, M) <= tol."""
    for m in range(cap + 1):
        if coherent_tail_bound(x, m) <= tol:
            return m
    raise ValueError(f"no cutoff below {cap} reaches tail {tol} for x={x}")


def hermitian_defect(mat: np.ndarray) -> float:
    return float(np.abs(mat - np.conj(mat.T)).max())


# -- JSON serialization (binary-free; used by the CLI cache) -------------


def basis_to_json(basis: FockBasis) -> dict:
    return {"modes": basis.modes, "max_quanta": basis.max_quanta, "size": basis.size}


def basis_from_json(data: dict) -> FockBasis:
    basis = FockBasis(int(data["modes"]), int(data["max_quanta"]))
    if "size" in data and int(data["size"]) != basis.size:
        raise ValueError("basis size mismatch in serialized data")
    return basis


def matrix_to_json(op: OperatorMatrix) -> dict:
    flat = op.mat.reshape(-1)
    return {
        "basis": basis_to_json(op.basis),
        "shape": list(op.mat.shape),
        "entries": [[z.real, z.imag] for z in flat],
    }


def matrix_from_json(data: dict) -> OperatorMatrix:
    basis = basis_from_json(data["basis"])
    shape = tuple(data["shape"])
    entries = np.array([complex(re, im) for re, im in data["entries"]])
    return OperatorMatrix(basis, entries.reshape(shape))
