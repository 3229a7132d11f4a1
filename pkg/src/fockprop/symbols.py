"""Polynomial phase-space symbols over conjugate mode variables.

A symbol is a finite complex polynomial in the 2d variables
(z*_1 .. z*_d, z_1 .. z_d).  Normal-ordered and anti-normal-ordered
operator symbols both live in this representation; the two calculi are
connected by the heat flow of the mode Laplacian sum_i d^2/dz*_i dz_i,
which on polynomials truncates to a finite series.

Terms are keyed by exponent pairs (kstar, k), each a length-d tuple of
non-negative ints.  Coefficients are complex doubles; exact zeros are
never stored, and terms are kept in graded-lexicographic order on the
concatenated (kstar, k) so that serialization is byte-stable.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

TermKey = tuple[tuple[int, ...], tuple[int, ...]]

__all__ = [
    "PolySymbol",
    "variable",
    "conj_variable",
    "gross_laplacian",
    "wick_from_antinormal",
    "antinormal_from_wick",
    "restrict_symbol",
    "truncate_modes",
    "PhaseGrid",
    "infimum_estimate",
    "random_symbol",
    "to_term_list",
    "from_term_list",
    "symbol_digest",
    "max_coeff_difference",
    "as_phase_point",
]


def as_phase_point(values, modes: int) -> np.ndarray:
    """Coerce to a complex vector of the given length (a phase-space point)."""
    z = np.atleast_1d(np.asarray(values, dtype=complex))
    if z.shape != (modes,):
        raise ValueError(f"phase point has shape {z.shape}, expected ({modes},)")
    return z


def _term_order(item):
    (kstar, k), _ = item
    combined = kstar + k
    return (sum(combined), combined)


class PolySymbol:
    """Immutable polynomial in d conjugate variable pairs."""

    __slots__ = ("_modes", "_terms")

    def __init__(self, modes: int, terms: Mapping[TermKey, complex] | Iterable = ()):
        if modes < 1:
            raise ValueError("modes must be >= 1")
        items = terms.items() if isinstance(terms, Mapping) else terms
        merged: dict[TermKey, complex] = {}
        for (kstar, k), coeff in items:
            kstar = tuple(int(e) for e in kstar)
            k = tuple(int(e) for e in k)
            if len(kstar) != modes or len(k) != modes:
                raise ValueError(f"exponent tuples must have length {modes}")
            if any(e < 0 for e in kstar + k):
                raise ValueError("exponents must be non-negative")
            c = complex(coeff)
            if c != 0:
                merged[(kstar, k)] = merged.get((kstar, k), 0j) + c
        merged = {key: c for key, c in merged.items() if c != 0}
        object.__setattr__(self, "_modes", modes)
        object.__setattr__(
            self, "_terms", dict(sorted(merged.items(), key=_term_order))
        )

    def __setattr__(self, name, value):
        raise AttributeError("PolySymbol is immutable")

    # -- basic structure ------------------------------------------------

    @property
    def modes(self) -> int:
        return self._modes

    @property
    def terms(self) -> Mapping[TermKey, complex]:
        return MappingProxyType(self._terms)

    @property
    def degree(self) -> int:
        """Total degree; -1 for the zero symbol."""
        if not self._terms:
            return -1
        return max(sum(ks) + sum(k) for ks, k in self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    @classmethod
    def zero(cls, modes: int) -> "PolySymbol":
        return cls(modes)

    @classmethod
    def constant(cls, modes: int, value: complex) -> "PolySymbol":
        zero = (0,) * modes
        return cls(modes, {(zero, zero): value})

    @classmethod
    def monomial(cls, kstar, k, coeff: complex = 1.0) -> "PolySymbol":
        kstar = tuple(kstar)
        return cls(len(kstar), {(kstar, tuple(k)): coeff})

    # -- algebra ---------------------------------------------------------

    def _coerce(self, other) -> "PolySymbol":
        if isinstance(other, PolySymbol):
            if other.modes != self.modes:
                raise ValueError("mode counts differ")
            return other
        return PolySymbol.constant(self.modes, other)

    def __add__(self, other) -> "PolySymbol":
        other = self._coerce(other)
        acc = dict(self._terms)
        for key, c in other._terms.items():
            acc[key] = acc.get(key, 0j) + c
        return PolySymbol(self.modes, acc)

    __radd__ = __add__

    def __neg__(self) -> "PolySymbol":
        return PolySymbol(self.modes, {k: -c for k, c in self._terms.items()})

    def __sub__(self, other) -> "PolySymbol":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "PolySymbol":
        return self._coerce(other) - self

    def __mul__(self, other) -> "PolySymbol":
        if not isinstance(other, PolySymbol):
            c = complex(other)
            return PolySymbol(
                self.modes, {k: c * v for k, v in self._terms.items()}
            )
        other = self._coerce(other)
        acc: dict[TermKey, complex] = {}
        for (ks1, k1), c1 in self._terms.items():
            for (ks2, k2), c2 in other._terms.items():
                key = (
                    tuple(a + b for a, b in zip(ks1, ks2)),
                    tuple(a + b for a, b in zip(k1, k2)),
                )
                acc[key] = acc.get(key, 0j) + c1 * c2
        return PolySymbol(self.modes, acc)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "PolySymbol":
        if not isinstance(n, int) or n < 0:
            raise ValueError("power must be a non-negative integer")
        result = PolySymbol.constant(self.modes, 1.0)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PolySymbol)
            and self.modes == other.modes
            and self._terms == other._terms
        )

    __hash__ = None

    def adjoint(self) -> "PolySymbol":
        """Symbol of the Hermitian-adjoint operator: swap exponents, conjugate."""
        return PolySymbol(
            self.modes,
            {(k, ks): c.conjugate() for (ks, k), c in self._terms.items()},
        )

    def is_real(self) -> bool:
        """True iff the coefficient of (kstar,k) conjugates to that of (k,kstar)."""
        for (ks, k), c in self._terms.items():
            partner = self._terms.get((k, ks))
            if partner is None or partner != c.conjugate():
                return False
        return True

    # -- evaluation -------------------------------------------------------

    def _power_tables(self, values: np.ndarray) -> list[np.ndarray]:
        # values: (n, modes); tables[i][e] = values[:, i]**e, e <= degree
        deg = max(self.degree, 0)
        tables = []
        for i in range(self.modes):
            col = values[:, i]
            tab = np.empty((deg + 1, len(col)), dtype=complex)
            tab[0] = 1.0
            for e in range(1, deg + 1):
                tab[e] = tab[e - 1] * col
            tables.append(tab)
        return tables

    def _eval_tables(self, conj_tabs, plain_tabs, n: int) -> np.ndarray:
        out = np.zeros(n, dtype=complex)
        for (ks, k), c in self._terms.items():
            term = np.full(n, c, dtype=complex)
            for i, e in enumerate(ks):
                if e:
                    term *= conj_tabs[i][e]
            for i, e in enumerate(k):
                if e:
                    term *= plain_tabs[i][e]
            out += term
        return out

    def evaluate(self, points) -> complex | np.ndarray:
        """Evaluate at one phase point (shape (d,)) or a batch (n, d).

        Returns sum_terms c * prod_i conj(z_i)^kstar_i * z_i^k_i.
        """
        pts = np.asarray(points, dtype=complex)
        single = pts.ndim == 1
        if single:
            pts = pts[None, :]
        if pts.ndim != 2 or pts.shape[1] != self.modes:
            raise ValueError(
                f"points have shape {np.shape(points)}, expected (..., {self.modes})"
            )
        tabs = self._power_tables(pts)
        ctabs = self._power_tables(pts.conj())
        out = self._eval_tables(ctabs, tabs, pts.shape[0])
        return complex(out[0]) if single else out

    def eval_bilinear(self, left, right) -> complex:
        """Evaluate with conjugated exponents taken at `left`, plain at `right`.

        For a normal symbol this is W(left*, right), the coherent-matrix
        numerator <F_left, Op F_right> / exp(left* . right).
        """
        zl = as_phase_point(left, self.modes)[None, :]
        zr = as_phase_point(right, self.modes)[None, :]
        ctabs = self._power_tables(zl.conj())
        tabs = self._power_tables(zr)
        return complex(self._eval_tables(ctabs, tabs, 1)[0])

    def __repr__(self) -> str:
        return f"PolySymbol(modes={self.modes}, terms={len(self._terms)}, degree={self.degree})"

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        bits = []
        for (ks, k), c in self._terms.items():
            factors = [f"z*{i+1}^{e}" if e > 1 else f"z*{i+1}"
                       for i, e in enumerate(ks) if e]
            factors += [f"z{i+1}^{e}" if e > 1 else f"z{i+1}"
                        for i, e in enumerate(k) if e]
            body = "·".join(factors) if factors else "1"
            bits.append(f"({c})·{body}")
        return " + ".join(bits)


def variable(modes: int, mode: int) -> PolySymbol:
    """The linear symbol z_mode (1-based mode index)."""
    if not 1 <= mode <= modes:
        raise ValueError(f"mode {mode} out of range 1..{modes}")
    k = tuple(1 if i == mode - 1 else 0 for i in range(modes))
    return PolySymbol(modes, {((0,) * modes, k): 1.0})


def conj_variable(modes: int, mode: int) -> PolySymbol:
    """The linear symbol z*_mode (1-based mode index)."""
    if not 1 <= mode <= modes:
        raise ValueError(f"mode {mode} out of range 1..{modes}")
    ks = tuple(1 if i == mode - 1 else 0 for i in range(modes))
    return PolySymbol(modes, {(ks, (0,) * modes): 1.0})


def _decrement(exps: tuple[int, ...], i: int) -> tuple[int, ...]:
    return exps[:i] + (exps[i] - 1,) + exps[i + 1 :]


def gross_laplacian(s: PolySymbol) -> PolySymbol:
    """Mixed Laplacian sum_i d2/dz*_i dz_i, term by term.

    Drops total degree by exactly 2 on every surviving term.
    """
    acc: dict[TermKey, complex] = {}
    for (ks, k), c in s.terms.items():
        for i in range(s.modes):
            a, b = ks[i], k[i]
            if a and b:
                key = (_decrement(ks, i), _decrement(k, i))
                acc[key] = acc.get(key, 0j) + c * (a * b)
    return PolySymbol(s.modes, acc)


def _heat_series(s: PolySymbol, sign: float) -> PolySymbol:
    total = s
    cur = s
    m = 0
    while not cur.is_zero():
        m += 1
        cur = gross_laplacian(cur) * (sign / m)
        total = total + cur
    return total


def wick_from_antinormal(a: PolySymbol) -> PolySymbol:
    """Normal symbol of the operator whose anti-normal symbol is `a`.

    The heat series sum_m L^m a / m! terminates because each Laplacian
    application lowers the degree by 2.  Degree is preserved and the
    difference from `a` has degree lower by at least 2.
    """
    return _heat_series(a, +1.0)


def antinormal_from_wick(w: PolySymbol) -> PolySymbol:
    """Exact inverse of wick_from_antinormal: alternating heat series."""
    return _heat_series(w, -1.0)


def restrict_symbol(s: PolySymbol, n: int) -> PolySymbol:
    """Zero out every term touching a mode index > n (1-based); keeps d modes."""
    if not 0 <= n <= s.modes:
        raise ValueError(f"n={n} out of range 0..{s.modes}")
    kept = {
        (ks, k): c
        for (ks, k), c in s.terms.items()
        if all(ks[i] == 0 and k[i] == 0 for i in range(n, s.modes))
    }
    return PolySymbol(s.modes, kept)


def truncate_modes(s: PolySymbol, n: int) -> PolySymbol:
    """Restrict to the first n modes and re-declare the symbol over n modes."""
    if not 1 <= n <= s.modes:
        raise ValueError(f"n={n} out of range 1..{s.modes}")
    restricted = restrict_symbol(s, n)
    return PolySymbol(
        n, {(ks[:n], k[:n]): c for (ks, k), c in restricted.terms.items()}
    )


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform polar sampling grid, identical in every mode.

    radius R is the outer radial extent; radial points include 0 and R.
    Heuristic only: a scan, not a minimizer.
    """

    radius: float
    radial: int = 25
    angular: int = 16

    def mode_points(self) -> np.ndarray:
        radii = np.linspace(0.0, self.radius, self.radial)
        angles = 2.0 * np.pi * np.arange(self.angular) / self.angular
        pts = [0j]
        for r in radii[1:]:
            pts.extend(r * np.exp(1j * angles))
        return np.asarray(pts, dtype=complex)

    def points(self, modes: int) -> np.ndarray:
        per_mode = self.mode_points()
        if len(per_mode) ** modes > 5_000_000:
            raise ValueError(
                f"grid would have {len(per_mode) ** modes} points; reduce counts"
            )
        if modes == 1:
            return per_mode[:, None]
        combos = itertools.product(per_mode, repeat=modes)
        return np.asarray(list(combos), dtype=complex)


def infimum_estimate(s: PolySymbol, grid: PhaseGrid,
                     extra_points: np.ndarray | None = None) -> float:
    """Minimum of Re s over the sampled grid: an UPPER bound on the infimum.

    Requires a real symbol.  `extra_points` (n, d) are scanned in addition
    to the grid (e.g. quadrature nodes whose sign matters downstream).
    """
    if not s.is_real():
        raise ValueError("infimum_estimate requires a real symbol")
    values = s.evaluate(grid.points(s.modes)).real
    best = float(values.min())
    if extra_points is not None and len(extra_points):
        best = min(best, float(s.evaluate(extra_points).real.min()))
    return best


def random_symbol(
    rng: np.random.Generator,
    modes: int,
    max_degree: int,
    n_terms: int,
    real: bool = False,
    coeff_scale: float = 1.0,
) -> PolySymbol:
    """Random polynomial symbol with O(coeff_scale) complex coefficients."""
    acc: dict[TermKey, complex] = {}
    for _ in range(n_terms):
        deg = int(rng.integers(0, max_degree + 1))
        split = rng.multinomial(deg, np.full(2 * modes, 1.0 / (2 * modes)))
        key = (tuple(int(e) for e in split[:modes]),
               tuple(int(e) for e in split[modes:]))
        c = coeff_scale * complex(rng.standard_normal(), rng.standard_normal())
        acc[key] = acc.get(key, 0j) + c
    s = PolySymbol(modes, acc)
    if real:
        s = (s + s.adjoint()) * 0.5
    return s


def to_term_list(s: PolySymbol) -> list[dict]:
    """Canonical JSON-ready term list; round-trips bit-exactly."""
    return [
        {"kstar": list(ks), "k": list(k), "re": c.real, "im": c.imag}
        for (ks, k), c in s.terms.items()
    ]


def from_term_list(data, modes: int | None = None) -> PolySymbol:
    if not isinstance(data, list):
        raise ValueError("symbol literal must be a list of terms")
    if modes is None:
        if not data:
            raise ValueError("cannot infer mode count from an empty term list")
        modes = len(data[0].get("kstar", []))
    acc: dict[TermKey, complex] = {}
    for i, term in enumerate(data):
        if not isinstance(term, dict):
            raise ValueError(f"term {i} is not an object")
        for field in ("kstar", "k"):
            if field not in term or not isinstance(term[field], list):
                raise ValueError(f"term {i} missing integer list '{field}'")
        key = (tuple(term["kstar"]), tuple(term["k"]))
        c = complex(float(term.get("re", 0.0)), float(term.get("im", 0.0)))
        acc[key] = acc.get(key, 0j) + c
    return PolySymbol(modes, acc)


def symbol_digest(s: PolySymbol) -> str:
    """Stable content hash of the canonical serialization."""
    payload = json.dumps({"modes": s.modes, "terms": to_term_list(s)},
                         sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()


def max_coeff_difference(s1: PolySymbol, s2: PolySymbol) -> float:
    """Max absolute coefficient deviation over the union of term keys."""
    if s1.modes != s2.modes:
        raise ValueError("mode counts differ")
    keys = set(s1.terms) | set(s2.terms)
    if not keys:
        return 0.0
    return max(abs(s1.terms.get(k, 0j) - s2.terms.get(k, 0j)) for k in keys)
