"""Time evolution: exact spectral oracle and time-sliced anti-Wick products.

The oracle diagonalizes a certified-Hermitian matrix once and reuses the
spectrum for every time.  The sliced propagator multiplies N copies of the
anti-Wick operator of exp(-i f tau), a contraction up to the quadrature's
resolution defect; its N -> inf limit realizes the evolution generated by
the anti-Wick quantization of f.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fock import (
    FockBasis,
    HERMITIAN_TOL,
    OperatorMatrix,
    coherent_tail_bound,
    coherent_vector,
    min_quanta_for_tail,
)
from .quantize import QuadratureRule, antiwick_quantize_function, antiwick_quantize_poly
from .symbols import PolySymbol, as_phase_point

__all__ = [
    "SliceSchedule",
    "ConvergenceRecord",
    "ExactPropagator",
    "exact_evolution",
    "chernoff_step",
    "chernoff_propagator",
    "coherent_matrix_element",
    "feynman_convergence_table",
    "halving_ratios",
    "records_to_csv",
    "records_to_json",
]


@dataclass(frozen=True)
class SliceSchedule:
    """Total time split into N equal slices; tau is derived, so tau*N == t."""

    total_time: float
    slices: int

    def __post_init__(self):
        if self.slices < 1:
            raise ValueError("slices must be >= 1")
        if not np.isfinite(self.total_time):
            raise ValueError("total_time must be finite")

    @property
    def tau(self) -> float:
        return self.total_time / self.slices


@dataclass(frozen=True)
class ConvergenceRecord:
    """One row of a convergence study: observable value vs a reference."""

    parameter: int
    observable: str
    value: complex
    abs_error: float
    seconds: float


class ExactPropagator:
    """exp(-i h t) for certified-Hermitian h, by eigendecomposition.

    The spectrum is computed once and shared across times; the result is
    unitary to working precision.
    """

    def __init__(self, h: OperatorMatrix):
        defect = h.hermitian_defect()
        if defect > HERMITIAN_TOL:
            raise ValueError(
                f"matrix is not Hermitian: defect {defect:.3g} > {HERMITIAN_TOL:.0e}"
            )
        self.basis = h.basis
        self.eigenvalues, self.eigenvectors = np.linalg.eigh(h.mat)

    def operator(self, t: float) -> OperatorMatrix:
        phases = np.exp(-1j * self.eigenvalues * t)
        mat = (self.eigenvectors * phases) @ self.eigenvectors.conj().T
        return OperatorMatrix(self.basis, mat)

    def apply(self, state: np.ndarray, t: float) -> np.ndarray:
        coeffs = self.eigenvectors.conj().T @ np.asarray(state, dtype=complex)
        return self.eigenvectors @ (np.exp(-1j * self.eigenvalues * t) * coeffs)


def exact_evolution(h: OperatorMatrix, t: float) -> OperatorMatrix:
    """Unitary exp(-i h t); errors out on non-Hermitian input."""
    return ExactPropagator(h).operator(t)


def chernoff_step(
    a: PolySymbol, tau: float, basis: FockBasis, rule: QuadratureRule
) -> OperatorMatrix:
    """One slice operator: anti-Wick quantization of exp(-i a tau)."""
    if not a.is_real():
        raise ValueError("slice symbol must be real")
    return antiwick_quantize_function(
        basis, lambda pts: np.exp(-1j * tau * a.evaluate(pts).real), rule
    )


def chernoff_propagator(
    a: PolySymbol,
    sched: SliceSchedule,
    basis: FockBasis,
    rule: QuadratureRule,
) -> OperatorMatrix:
    """N-fold product of slice operators; spectral norm <= 1 + resolution defect."""
    if rule.order < basis.max_quanta + 1:
        raise ValueError(
            f"rule order {rule.order} < max_quanta + 1 = {basis.max_quanta + 1}"
        )
    step = chernoff_step(a, sched.tau, basis, rule)
    return OperatorMatrix(
        basis, np.linalg.matrix_power(step.mat, sched.slices)
    )


def coherent_matrix_element(
    op: OperatorMatrix, alpha, beta, tail_tol: float = 1e-10
) -> complex:
    """<F_alpha, Op F_beta> in the unnormalized convention (identity -> e^{a*b}).

    Refuses probe points whose quanta-cutoff tail exceeds tail_tol, with a
    hint for the cutoff that would suffice.
    """
    basis = op.basis
    a = as_phase_point(alpha, basis.modes)
    b = as_phase_point(beta, basis.modes)
    for point in (a, b):
        x = float((np.abs(point) ** 2).sum())
        tail = coherent_tail_bound(x, basis.max_quanta)
        if tail > tail_tol:
            needed = min_quanta_for_tail(x, tail_tol)
            raise ValueError(
                f"coherent tail {tail:.3g} > {tail_tol:.3g} at |alpha|^2={x:.3g}; "
                f"max_quanta >= {needed} required"
            )
    fa = coherent_vector(basis, a).components
    fb = coherent_vector(basis, b).components
    return complex(np.vdot(fa, op.mat @ fb))


def feynman_convergence_table(
    a: PolySymbol,
    t: float,
    Ns: Sequence[int],
    alpha,
    beta,
    basis: FockBasis,
    rule: QuadratureRule,
    tail_tol: float = 1e-10,
) -> list[ConvergenceRecord]:
    """Sliced-propagator coherent elements vs the spectral oracle, per N.

    The reference Hamiltonian is the anti-Wick quantization of `a` (the
    slicing is anti-normal, so that is the generator the product converges
    to).  Ns must be ascending.
    """
    Ns = list(Ns)
    if any(n2 <= n1 for n1, n2 in zip(Ns, Ns[1:])):
        raise ValueError("Ns must be strictly ascending")
    if not Ns:
        return []
    oracle = ExactPropagator(antiwick_quantize_poly(basis, a))
    reference = coherent_matrix_element(
        oracle.operator(t), alpha, beta, tail_tol=tail_tol
    )
    records = []
    for n in Ns:
        start = time.perf_counter()
        prop = chernoff_propagator(a, SliceSchedule(t, n), basis, rule)
        value = coherent_matrix_element(prop, alpha, beta, tail_tol=tail_tol)
        seconds = time.perf_counter() - start
        records.append(
            ConvergenceRecord(
                parameter=n,
                observable="coherent_element",
                value=value,
                abs_error=abs(value - reference),
                seconds=seconds,
            )
        )
    return records


def halving_ratios(records: Sequence[ConvergenceRecord]) -> list[tuple[int, float]]:
    """error(N) / error(2N) for consecutive doubling pairs in the table."""
    out = []
    for r1, r2 in zip(records, records[1:]):
        if r2.parameter == 2 * r1.parameter and r2.abs_error > 0:
            out.append((r1.parameter, r1.abs_error / r2.abs_error))
    return out


def records_to_csv(
    records: Sequence[ConvergenceRecord], path, include_timing: bool = True
) -> None:
    """Columns N,re,im,abs_error[,seconds]; timing is optional because it is
    the one non-deterministic column."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["N", "re", "im", "abs_error"]
        if include_timing:
            header.append("seconds")
        writer.writerow(header)
        for r in records:
            row = [r.parameter, repr(r.value.real), repr(r.value.imag),
                   repr(r.abs_error)]
            if include_timing:
                row.append(repr(r.seconds))
            writer.writerow(row)


def records_to_json(
    records: Sequence[ConvergenceRecord],
    metadata: dict,
    include_timing: bool = True,
) -> dict:
    rows = []
    for r in records:
        row = {
            "parameter": r.parameter,
            "observable": r.observable,
            "re": r.value.real,
            "im": r.value.imag,
            "abs_error": r.abs_error,
        }
        if include_timing:
            row["seconds"] = r.seconds
        rows.append(row)
    return {"metadata": dict(metadata), "records": rows}
