"""Symbols to operators: normal-ordered quantization and two anti-Wick routes.

Normal-ordered quantization of a polynomial symbol places all creators to
the left and is exact on the truncated basis.  Anti-Wick quantization of a
polynomial goes through the exact heat-series conversion.  Anti-Wick
quantization of a *function* (needed for unimodular slice factors
exp(-i f tau)) is a weighted sum of normalized coherent projectors over a
tensor Gauss-Hermite rule in (Re z, Im z) per mode; the Gaussian factor of
the phase-space measure is the Hermite weight, so rule weights sum to 1.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .fock import FockBasis, OperatorMatrix, coherent_tail_bound, coherent_vector
from .symbols import PolySymbol, as_phase_point, wick_from_antinormal

QUADRATURE_MAX_MODES = 3
DEFAULT_ORDER_MARGIN = 2  # default rule order Q = M + 2

__all__ = [
    "QuadratureRule",
    "gauss_hermite_rule",
    "integrate",
    "rule_to_csv",
    "wick_quantize",
    "wick_symbol_deviation",
    "antiwick_quantize_poly",
    "antiwick_quantize_function",
]


@dataclass(frozen=True)
class QuadratureRule:
    """Tensor Gauss-Hermite rule on d-mode phase space.

    nodes: (count, modes) complex points; weights: (count,) positive reals
    absorbing exp(-|z|^2) and the 1/pi^d normalization, summing to 1.
    axis_nodes / axis_weights are the underlying 1-D rule (order points).
    """

    modes: int
    order: int
    nodes: np.ndarray
    weights: np.ndarray
    log_weights: np.ndarray
    axis_nodes: np.ndarray
    axis_weights: np.ndarray

    @property
    def count(self) -> int:
        return len(self.weights)


def gauss_hermite_rule(modes: int, order: int) -> QuadratureRule:
    """Build the phase-space rule with `order` points per real coordinate.

    Node count is order^(2*modes); modes > 3 is refused (use the exact
    polynomial route or reduce modes first).  Exact for integrands of
    degree <= 2*order - 1 in each real coordinate.
    """
    if not 1 <= modes <= QUADRATURE_MAX_MODES:
        raise ValueError(
            f"quadrature supports 1..{QUADRATURE_MAX_MODES} modes, got {modes}"
        )
    if order < 1:
        raise ValueError("order must be >= 1")
    x, w = np.polynomial.hermite.hermgauss(order)
    logw = np.log(w) - 0.5 * math.log(math.pi)

    grids = np.meshgrid(*([np.arange(order)] * (2 * modes)), indexing="ij")
    idx = np.stack([g.reshape(-1) for g in grids])  # (2d, order^(2d))
    nodes = np.empty((idx.shape[1], modes), dtype=complex)
    log_weights = np.zeros(idx.shape[1])
    for m in range(modes):
        re_i, im_i = idx[2 * m], idx[2 * m + 1]
        nodes[:, m] = x[re_i] + 1j * x[im_i]
        log_weights += logw[re_i] + logw[im_i]
    return QuadratureRule(
        modes=modes,
        order=order,
        nodes=nodes,
        weights=np.exp(log_weights),
        log_weights=log_weights,
        axis_nodes=x,
        axis_weights=w,
    )


def integrate(rule: QuadratureRule, f: Callable[[np.ndarray], np.ndarray]) -> complex:
    """Normalized Gaussian phase-space integral of f (batch-vectorized callable)."""
    vals = np.asarray(f(rule.nodes))
    return complex(np.sum(rule.weights * vals))


def rule_to_csv(rule: QuadratureRule, path) -> None:
    """Audit dump: each mode's 2-D factor rule, columns mode,node_re,node_im,weight.

    The full tensor rule is the product of these per-mode factors.
    """
    x, w = rule.axis_nodes, rule.axis_weights
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mode", "node_re", "node_im", "weight"])
        for mode in range(1, rule.modes + 1):
            for i in range(rule.order):
                for j in range(rule.order):
                    writer.writerow(
                        [mode, repr(float(x[i])), repr(float(x[j])),
                         repr(float(w[i] * w[j] / math.pi))]
                    )


def _falling_products(values: np.ndarray, exps: np.ndarray) -> np.ndarray:
    # prod over modes of n_i (n_i - 1) ... (n_i - k_i + 1); exact in doubles
    # for the small exponents used here.
    out = np.ones(values.shape[0])
    kmax = int(exps.max()) if exps.size else 0
    for j in range(kmax):
        factor = np.where(j < exps[None, :], values - j, 1)
        out *= factor.prod(axis=1)
    return out


def wick_quantize(basis: FockBasis, w: PolySymbol) -> OperatorMatrix:
    """Normal-ordered operator of a polynomial symbol (creators to the left).

    Exact on the truncated basis: annihilators act first, so no
    intermediate state leaves the cutoff.  Hermitian iff the symbol is
    real.
    """
    if w.modes != basis.modes:
        raise ValueError(
            f"symbol has {w.modes} modes but basis has {basis.modes}"
        )
    occ = basis.occupations
    mat = np.zeros((basis.size, basis.size), dtype=complex)
    for (kstar, k), coeff in w.terms.items():
        ks_arr = np.array(kstar, dtype=np.int64)
        k_arr = np.array(k, dtype=np.int64)
        valid = (occ >= k_arr).all(axis=1)
        cols = np.nonzero(valid)[0]
        if not len(cols):
            continue
        src = occ[cols]
        dst = src - k_arr + ks_arr
        keep = dst.sum(axis=1) <= basis.max_quanta
        cols, src, dst = cols[keep], src[keep], dst[keep]
        if not len(cols):
            continue
        amp = np.sqrt(
            _falling_products(src, k_arr) * _falling_products(dst, ks_arr)
        )
        rows = [basis.index(tuple(int(v) for v in m)) for m in dst]
        mat[rows, cols] += coeff * amp
    return OperatorMatrix(basis, mat)


def wick_symbol_deviation(
    basis: FockBasis,
    op: OperatorMatrix,
    candidate: PolySymbol,
    probes: Sequence[tuple],
    tail_tol: float = 1e-10,
) -> float:
    """Verify a candidate normal symbol against coherent matrix elements.

    Evaluates <F_a, Op F_b> / exp(a* . b) at each probe pair and returns
    the max deviation from candidate(a*, b), relative when the candidate
    value exceeds 1 in modulus.  An oracle, not a fitter.
    """
    worst = 0.0
    for left, right in probes:
        a = as_phase_point(left, basis.modes)
        b = as_phase_point(right, basis.modes)
        for point in (a, b):
            x = float((np.abs(point) ** 2).sum())
            tail = coherent_tail_bound(x, basis.max_quanta)
            if tail > tail_tol:
                raise ValueError(
                    f"probe point with |alpha|^2={x:.3g} has coherent tail "
                    f"{tail:.3g} > {tail_tol:.3g}; increase max_quanta"
                )
        fa = coherent_vector(basis, a).components
        fb = coherent_vector(basis, b).components
        element = complex(np.vdot(fa, op.mat @ fb))
        measured = element * np.exp(-np.vdot(a, b))
        predicted = candidate.eval_bilinear(a, b)
        dev = abs(measured - predicted) / max(1.0, abs(predicted))
        worst = max(worst, dev)
    return worst


def antiwick_quantize_poly(basis: FockBasis, a: PolySymbol) -> OperatorMatrix:
    """Anti-Wick operator of a polynomial symbol via the exact heat-series route."""
    return wick_quantize(basis, wick_from_antinormal(a))


def antiwick_quantize_function(
    basis: FockBasis,
    f: Callable[[np.ndarray], np.ndarray],
    rule: QuadratureRule,
    chunk: int = 8192,
) -> OperatorMatrix:
    """Anti-Wick operator of a phase-space function by coherent quadrature.

    Returns sum_q W_q f(z_q) |z_q><z_q| with normalized coherent vectors;
    W_q is the rule weight with the projector normalization exp(|z_q|^2)
    folded back in, computed in log space so outer nodes neither overflow
    nor underflow.  `f` must accept an (n, d) complex array and return (n,)
    values, finite on every node.
    """
    if rule.modes != basis.modes:
        raise ValueError(
            f"rule has {rule.modes} modes but basis has {basis.modes}"
        )
    occ = basis.occupations
    max_occ = int(occ.max()) if basis.max_quanta > 0 else 0
    inv_sqrt_fact = np.ones(basis.size)
    for i in range(basis.modes):
        inv_sqrt_fact *= np.array(
            [1.0 / math.sqrt(math.factorial(int(e))) for e in occ[:, i]]
        )

    # keep the coherent-column buffer around a few tens of MB
    chunk = max(32, min(chunk, 2_000_000 // basis.size))
    acc = np.zeros((basis.size, basis.size), dtype=complex)
    for start in range(0, rule.count, chunk):
        nodes = rule.nodes[start : start + chunk]
        logw = rule.log_weights[start : start + chunk]
        vals = np.asarray(f(nodes), dtype=complex)
        if vals.shape != (len(nodes),):
            raise ValueError(
                f"f returned shape {vals.shape}, expected ({len(nodes)},)"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("f is non-finite at a quadrature node")
        norm_sq = (np.abs(nodes) ** 2).sum(axis=1)
        # normalized coherent columns: damp by exp(-|z|^2 / 2)
        cols = np.tile(inv_sqrt_fact[:, None], (1, len(nodes))).astype(complex)
        for i in range(basis.modes):
            powers = np.empty((max_occ + 1, len(nodes)), dtype=complex)
            powers[0] = 1.0
            for e in range(1, max_occ + 1):
                powers[e] = powers[e - 1] * nodes[:, i]
            cols *= powers[occ[:, i]]
        cols *= np.exp(-0.5 * norm_sq)[None, :]
        weight = np.exp(logw + norm_sq)
        acc += (cols * (weight * vals)[None, :]) @ cols.conj().T
    return OperatorMatrix(basis, acc)
