import csv
import math

import numpy as np
import pytest

from fockprop.fock import enumerate_basis
from fockprop.quantize import (
    antiwick_quantize_function,
    antiwick_quantize_poly,
    gauss_hermite_rule,
    integrate,
    rule_to_csv,
    wick_quantize,
    wick_symbol_deviation,
)
from fockprop.symbols import PolySymbol, conj_variable, random_symbol, variable


def zz(d=1):
    return conj_variable(d, 1) * variable(d, 1)


def exact_gaussian_moment(k: int, m: int) -> float:
    # independent oracle: int dmu z^k z*^m = delta_km k! for the normalized
    # one-mode Gaussian; standard polar-coordinates result
    return float(math.factorial(k)) if k == m else 0.0


class TestQuadratureRule:
    def test_weights_normalized(self):
        for d, q in [(1, 5), (1, 12), (2, 6), (3, 4)]:
            rule = gauss_hermite_rule(d, q)
            assert abs(rule.weights.sum() - 1.0) <= 1e-10

    def test_node_count(self):
        assert gauss_hermite_rule(1, 7).count == 49
        assert gauss_hermite_rule(2, 5).count == 625

    def test_rejects_too_many_modes(self):
        with pytest.raises(ValueError):
            gauss_hermite_rule(4, 5)

    @pytest.mark.parametrize("k,m", [(0, 0), (1, 1), (2, 2), (3, 3), (2, 1), (0, 3)])
    def test_complex_moments(self, k, m):
        rule = gauss_hermite_rule(1, 8)
        val = integrate(rule, lambda p: p[:, 0] ** k * np.conj(p[:, 0]) ** m)
        assert abs(val - exact_gaussian_moment(k, m)) <= 1e-10

    def test_real_coordinate_exactness_up_to_degree(self):
        # exact through degree 2Q-1 per coordinate; double-factorial oracle
        q = 5
        rule = gauss_hermite_rule(1, q)

        def real_moment(a):
            if a % 2:
                return 0.0
            out = 1.0
            for j in range(1, a, 2):
                out *= j
            return out / 2 ** (a // 2)

        for a in range(0, 2 * q):
            val = integrate(rule, lambda p: p[:, 0].real ** a)
            assert abs(val - real_moment(a)) <= 1e-10, f"degree {a}"

    def test_csv_dump(self, tmp_path):
        rule = gauss_hermite_rule(2, 4)
        path = tmp_path / "rule.csv"
        rule_to_csv(rule, path)
        with open(path) as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 2 * 16
        per_mode = sum(float(r["weight"]) for r in rows if r["mode"] == "1")
        assert per_mode == pytest.approx(1.0, abs=1e-10)


class TestWickQuantize:
    def test_number_operator(self):
        basis = enumerate_basis(1, 3)
        np.testing.assert_allclose(
            wick_quantize(basis, zz()).mat, np.diag([0.0, 1, 2, 3]), atol=0
        )

    def test_constant_is_identity(self):
        basis = enumerate_basis(2, 2)
        np.testing.assert_array_equal(
            wick_quantize(basis, PolySymbol.constant(2, 1.0)).mat,
            np.eye(basis.size),
        )

    def test_quartic_is_n_times_n_minus_one(self):
        basis = enumerate_basis(1, 4)
        np.testing.assert_allclose(
            wick_quantize(basis, zz() ** 2).mat,
            np.diag([0.0, 0, 2, 6, 12]),
            atol=0,
        )

    def test_hermitian_iff_real(self):
        basis = enumerate_basis(2, 4)
        rng = np.random.default_rng(23)
        s = random_symbol(rng, 2, 4, 8)
        real = (s + s.adjoint()) * 0.5
        assert wick_quantize(basis, real).is_hermitian
        assert not wick_quantize(basis, variable(2, 1)).is_hermitian

    def test_mode_mismatch(self):
        with pytest.raises(ValueError):
            wick_quantize(enumerate_basis(2, 2), zz(1))

    def test_off_diagonal_term(self):
        # z*_1 z_2 hops a quantum from mode 2 to mode 1
        basis = enumerate_basis(2, 1)
        s = conj_variable(2, 1) * variable(2, 2)
        mat = wick_quantize(basis, s).mat
        expected = np.zeros((3, 3))
        expected[basis.index((1, 0)), basis.index((0, 1))] = 1.0
        np.testing.assert_array_equal(mat, expected)


class TestWickSymbolOracle:
    def test_number_operator_symbol(self):
        basis = enumerate_basis(1, 25)
        op = wick_quantize(basis, zz())
        probes = [([0.8], [0.6 + 0.4j]), ([1.0], [-0.9j]), ([0.2 + 0.9j], [1.0])]
        assert wick_symbol_deviation(basis, op, zz(), probes) <= 1e-9

    def test_identity_symbol(self):
        basis = enumerate_basis(1, 25)
        op = wick_quantize(basis, PolySymbol.constant(1, 1.0))
        probes = [([0.5], [0.5]), ([1.0], [0.7j])]
        assert wick_symbol_deviation(
            basis, op, PolySymbol.constant(1, 1.0), probes
        ) <= 1e-12

    def test_creator_symbol(self):
        basis = enumerate_basis(1, 25)
        op = wick_quantize(basis, conj_variable(1, 1))
        probes = [([0.9], [0.8]), ([0.4 - 0.6j], [1.0])]
        assert wick_symbol_deviation(basis, op, conj_variable(1, 1), probes) <= 1e-9

    def test_rejects_probe_outside_tail_tolerance(self):
        basis = enumerate_basis(1, 6)
        op = wick_quantize(basis, zz())
        with pytest.raises(ValueError, match="tail"):
            wick_symbol_deviation(basis, op, zz(), [([2.5], [2.5])])


class TestAntiwickPoly:
    def test_number_symbol_shifts_by_one(self):
        basis = enumerate_basis(1, 3)
        np.testing.assert_allclose(
            antiwick_quantize_poly(basis, zz()).mat,
            np.diag([1.0, 2, 3, 4]),
            atol=1e-14,
        )

    def test_constant(self):
        basis = enumerate_basis(1, 3)
        np.testing.assert_array_equal(
            antiwick_quantize_poly(basis, PolySymbol.constant(1, 1.0)).mat,
            np.eye(4),
        )

    def test_quartic(self):
        # N(N-1) + 4N + 2 on number states
        basis = enumerate_basis(1, 4)
        expected = np.diag([n * (n - 1) + 4 * n + 2.0 for n in range(5)])
        np.testing.assert_allclose(
            antiwick_quantize_poly(basis, zz() ** 2).mat, expected, atol=1e-12
        )


class TestAntiwickFunction:
    def test_resolution_of_identity(self):
        for M in (4, 8, 12):
            basis = enumerate_basis(1, M)
            rule = gauss_hermite_rule(1, M + 1)
            op = antiwick_quantize_function(basis, lambda p: np.ones(len(p)), rule)
            assert np.abs(op.mat - np.eye(basis.size)).max() <= 1e-8

    def test_matches_exact_route_for_polynomials(self):
        basis = enumerate_basis(1, 8)
        rule = gauss_hermite_rule(1, 10)
        rng = np.random.default_rng(31)
        s = random_symbol(rng, 1, 4, 6, real=True)
        op_quad = antiwick_quantize_function(
            basis, lambda p: s.evaluate(p), rule
        ).mat
        op_poly = antiwick_quantize_poly(basis, s).mat
        keep = basis.protected_slice(layers=s.degree)
        sub = np.ix_(keep, keep)
        assert np.abs(op_quad[sub] - op_poly[sub]).max() <= 1e-8

    def test_two_mode_agreement(self):
        basis = enumerate_basis(2, 4)
        rule = gauss_hermite_rule(2, 6)
        s = zz(2) + conj_variable(2, 2) * variable(2, 2)
        op_quad = antiwick_quantize_function(basis, lambda p: s.evaluate(p), rule).mat
        op_poly = antiwick_quantize_poly(basis, s).mat
        keep = basis.protected_slice(layers=2)
        sub = np.ix_(keep, keep)
        assert np.abs(op_quad[sub] - op_poly[sub]).max() <= 1e-8

    def test_unimodular_contraction(self):
        basis = enumerate_basis(1, 10)
        rule = gauss_hermite_rule(1, 11)
        op = antiwick_quantize_function(
            basis, lambda p: np.exp(-0.4j * (np.abs(p[:, 0]) ** 2)), rule
        )
        assert np.linalg.norm(op.mat, ord=2) <= 1 + 1e-6

    def test_positivity(self):
        basis = enumerate_basis(1, 8)
        rule = gauss_hermite_rule(1, 10)
        op = antiwick_quantize_function(
            basis, lambda p: (np.abs(p[:, 0]) ** 2), rule
        )
        assert np.linalg.eigvalsh(op.mat).min() >= -1e-10

    def test_lower_bound_from_node_floor(self):
        # a >= 0.3 everywhere, so the quadrature operator is >= 0.3 - eps
        basis = enumerate_basis(1, 8)
        rule = gauss_hermite_rule(1, 10)
        a = (zz() - 1.0) ** 2 + 0.3
        op = antiwick_quantize_function(basis, lambda p: a.evaluate(p).real, rule)
        assert np.linalg.eigvalsh(op.mat).min() >= 0.3 - 1e-8

    def test_rejects_non_finite_values(self):
        basis = enumerate_basis(1, 4)
        rule = gauss_hermite_rule(1, 5)
        with pytest.raises(ValueError, match="non-finite"):
            antiwick_quantize_function(
                basis, lambda p: np.where(np.abs(p[:, 0]) > 1, np.inf, 1.0), rule
            )

    def test_mode_mismatch(self):
        with pytest.raises(ValueError):
            antiwick_quantize_function(
                enumerate_basis(2, 3),
                lambda p: np.ones(len(p)),
                gauss_hermite_rule(1, 5),
            )
