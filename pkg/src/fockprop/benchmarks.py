"""Shipped benchmark Hamiltonian symbols and ready-to-run CLI configs.

The mode weights 1/i in the coupled quartic are what make the reduction
error genuinely n-dependent: with equal weights every mode contributes the
same and the error does not decay along a flag.

Run `python -m fockprop.benchmarks <dir>` to write the standard experiment
configs.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .symbols import PolySymbol, conj_variable, to_term_list, variable

__all__ = ["quartic_oscillator", "coupled_quartic", "standard_configs"]


def _symmetrized(s: PolySymbol) -> PolySymbol:
    # expansion order can leave 1-ulp conjugate-pair mismatches; averaging
    # with the adjoint restores exact reality
    return (s + s.adjoint()) * 0.5


def quartic_oscillator(coupling: float = 0.1) -> PolySymbol:
    """Single-mode z*z + coupling (z* + z)^4."""
    x = conj_variable(1, 1) + variable(1, 1)
    return _symmetrized(conj_variable(1, 1) * variable(1, 1) + coupling * x**4)


def coupled_quartic(
    modes: int = 4,
    coupling: float = 0.1,
    frequencies: tuple[float, ...] | None = None,
) -> PolySymbol:
    """sum_i w_i z*_i z_i + coupling (sum_i (1/i)(z*_i + z_i))^4."""
    if frequencies is None:
        frequencies = tuple(1.0 + 0.1 * i for i in range(modes))
    if len(frequencies) != modes:
        raise ValueError("need one frequency per mode")
    h = PolySymbol.zero(modes)
    mix = PolySymbol.zero(modes)
    for i in range(1, modes + 1):
        h = h + frequencies[i - 1] * conj_variable(modes, i) * variable(modes, i)
        mix = mix + (1.0 / i) * (conj_variable(modes, i) + variable(modes, i))
    return _symmetrized(h + coupling * mix**4)


def standard_configs() -> dict[str, dict]:
    """The experiment configs exercised by the acceptance suite."""
    quartic = quartic_oscillator()
    coupled = coupled_quartic()
    return {
        "ccr_check": {
            "schema": 1,
            "kind": "ccr-check",
            "d": 2,
            "M": 8,
            "seed": 0,
        },
        "symbol_roundtrip": {
            "schema": 1,
            "kind": "symbol-roundtrip",
            "d": 3,
            "degree": 6,
            "count": 200,
            "seed": 7,
        },
        "lower_bound": {
            "schema": 1,
            "kind": "lower-bound",
            "d": 1,
            "M": 10,
            "Q": 12,
            "degree": 4,
            "count": 50,
            "radius": 6.0,
            "seed": 11,
        },
        "chernoff_sweep": {
            "schema": 1,
            "kind": "chernoff-sweep",
            "d": 1,
            "M": 10,
            "Q": 12,
            "t": 0.5,
            "Ns": [8, 16, 32, 64, 128],
            "symbol": to_term_list(quartic),
            "probes": [
                {"alpha": [[0.3, 0.0]], "beta": [[0.2, 0.1]]}
            ],
            "halving_window": [1.6, 2.4],
            "seed": 0,
        },
        "galerkin_sweep": {
            "schema": 1,
            "kind": "galerkin-sweep",
            "d": 4,
            "M": 8,
            "t": 0.3,
            "flag": [1, 2, 3],
            "symbol": to_term_list(coupled),
            "probes": [
                {"alpha": [[0.35, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
                 "beta": [[0.25, 0.15], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]}
            ],
            "slope_threshold": -0.8,
            "t_scaling": {"base_t": 0.05, "factor": 2.0, "window": [2.5, 6.0]},
            "seed": 0,
        },
        "evolve": {
            "schema": 1,
            "kind": "evolve",
            "d": 1,
            "M": 16,
            "t_grid": [0.0, 0.25, 0.5, 0.75, 1.0],
            "symbol": to_term_list(quartic_oscillator(coupling=0.0)),
            "initial": {"type": "coherent", "alpha": [[0.5, 0.0]]},
            "route": "wick",
            "method": "oracle",
            "seed": 0,
        },
    }


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="write the standard benchmark configs as JSON files"
    )
    parser.add_argument("out_dir", type=Path)
    args = parser.parse_args(argv)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for name, cfg in standard_configs().items():
        path = args.out_dir / f"{name}.json"
        path.write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
