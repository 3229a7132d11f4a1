import numpy as np
import pytest

from fockprop.benchmarks import quartic_oscillator
from fockprop.fock import OperatorMatrix, enumerate_basis
from fockprop.propagate import (
    ExactPropagator,
    SliceSchedule,
    chernoff_propagator,
    chernoff_step,
    coherent_matrix_element,
    exact_evolution,
    feynman_convergence_table,
    halving_ratios,
    records_to_csv,
    records_to_json,
)
from fockprop.quantize import gauss_hermite_rule, wick_quantize
from fockprop.symbols import PolySymbol, conj_variable, variable


def zz(d=1):
    return conj_variable(d, 1) * variable(d, 1)


class TestExactEvolution:
    def test_zero_time_is_identity(self):
        basis = enumerate_basis(1, 5)
        h = wick_quantize(basis, zz())
        np.testing.assert_allclose(
            exact_evolution(h, 0.0).mat, np.eye(basis.size), atol=1e-12
        )

    def test_number_operator_phases(self):
        basis = enumerate_basis(1, 5)
        h = wick_quantize(basis, zz())
        t = 0.9
        expected = np.diag([np.exp(-1j * n * t) for n in range(6)])
        np.testing.assert_allclose(exact_evolution(h, t).mat, expected, atol=1e-12)

    def test_group_law(self):
        basis = enumerate_basis(1, 8)
        h = wick_quantize(basis, zz() + 0.2 * (zz() ** 2))
        u1, u2 = exact_evolution(h, 0.4).mat, exact_evolution(h, 0.7).mat
        u12 = exact_evolution(h, 1.1).mat
        assert np.abs(u1 @ u2 - u12).max() <= 1e-9

    def test_unitarity(self):
        basis = enumerate_basis(2, 6)
        h = wick_quantize(basis, zz(2) + conj_variable(2, 2) * variable(2, 2))
        u = exact_evolution(h, 1.7).mat
        assert np.abs(u.conj().T @ u - np.eye(basis.size)).max() <= 1e-10

    def test_rejects_non_hermitian(self):
        basis = enumerate_basis(1, 3)
        with pytest.raises(ValueError, match="Hermitian"):
            exact_evolution(OperatorMatrix(basis, np.diag([1j, 0, 0, 0])), 1.0)

    def test_apply_matches_operator(self):
        basis = enumerate_basis(1, 6)
        h = wick_quantize(basis, zz())
        prop = ExactPropagator(h)
        rng = np.random.default_rng(3)
        psi = rng.standard_normal(basis.size) + 1j * rng.standard_normal(basis.size)
        np.testing.assert_allclose(
            prop.apply(psi, 0.8), prop.operator(0.8).mat @ psi, atol=1e-12
        )


class TestChernoffPropagator:
    def test_zero_time_single_slice_is_identity(self):
        basis = enumerate_basis(1, 8)
        rule = gauss_hermite_rule(1, 10)
        prop = chernoff_propagator(zz(), SliceSchedule(0.0, 1), basis, rule)
        assert np.abs(prop.mat - np.eye(basis.size)).max() <= 1e-8

    def test_quadratic_matches_closed_form(self):
        # antinormal z*z generates the shifted number operator a^dag a + 1,
        # whose coherent element is exp(-it) exp(a* e^{-it} b)
        basis = enumerate_basis(1, 8)
        rule = gauss_hermite_rule(1, 10)
        t = 0.5
        alpha, beta = np.array([0.3 + 0j]), np.array([0.2 + 0.1j])
        closed = np.exp(-1j * t) * np.exp(np.conj(alpha[0]) * np.exp(-1j * t) * beta[0])
        errors = {}
        for n in (8, 64):
            prop = chernoff_propagator(zz(), SliceSchedule(t, n), basis, rule)
            val = coherent_matrix_element(prop, alpha, beta)
            errors[n] = abs(val - closed)
        assert errors[64] <= errors[8] / 4

    def test_contractivity(self):
        basis = enumerate_basis(1, 10)
        rule = gauss_hermite_rule(1, 12)
        a = quartic_oscillator()
        for n in (1, 8, 64):
            prop = chernoff_propagator(a, SliceSchedule(0.5, n), basis, rule)
            assert np.linalg.norm(prop.mat, ord=2) <= 1 + 1e-6

    def test_step_adjoint_reverses_time(self):
        basis = enumerate_basis(1, 8)
        rule = gauss_hermite_rule(1, 10)
        a = quartic_oscillator()
        fwd = chernoff_step(a, 0.05, basis, rule)
        bwd = chernoff_step(a, -0.05, basis, rule)
        assert np.abs(fwd.mat.conj().T - bwd.mat).max() <= 1e-8

    def test_rejects_complex_symbol(self):
        basis = enumerate_basis(1, 4)
        rule = gauss_hermite_rule(1, 6)
        with pytest.raises(ValueError, match="real"):
            chernoff_propagator(variable(1, 1), SliceSchedule(0.1, 2), basis, rule)

    def test_rejects_inadequate_rule(self):
        basis = enumerate_basis(1, 10)
        rule = gauss_hermite_rule(1, 6)
        with pytest.raises(ValueError, match="order"):
            chernoff_propagator(zz(), SliceSchedule(0.1, 2), basis, rule)


class TestSliceSchedule:
    def test_tau(self):
        sched = SliceSchedule(1.0, 4)
        assert sched.tau == 0.25
        assert sched.tau * sched.slices == sched.total_time

    def test_rejects_bad_slices(self):
        with pytest.raises(ValueError):
            SliceSchedule(1.0, 0)


class TestCoherentMatrixElement:
    def test_identity_at_origin(self):
        basis = enumerate_basis(1, 5)
        ident = OperatorMatrix(basis, np.eye(basis.size))
        assert coherent_matrix_element(ident, [0.0], [0.0]) == pytest.approx(1.0)

    def test_identity_gives_overlap_exponential(self):
        basis = enumerate_basis(1, 25)
        ident = OperatorMatrix(basis, np.eye(basis.size))
        alpha, beta = [1.2 + 0.5j], [0.9 - 1.0j]
        got = coherent_matrix_element(ident, alpha, beta)
        expected = np.exp(np.conj(alpha[0]) * beta[0])
        assert abs(got - expected) <= 1e-10

    def test_creator_element(self):
        basis = enumerate_basis(1, 25)
        op = wick_quantize(basis, conj_variable(1, 1))
        alpha, beta = [0.7 + 0.1j], [0.4]
        got = coherent_matrix_element(op, alpha, beta)
        expected = np.conj(alpha[0]) * np.exp(np.conj(alpha[0]) * beta[0])
        assert abs(got - expected) <= 1e-9

    def test_tail_violation_raises_with_hint(self):
        basis = enumerate_basis(1, 6)
        ident = OperatorMatrix(basis, np.eye(basis.size))
        with pytest.raises(ValueError, match="max_quanta >="):
            coherent_matrix_element(ident, [2.0], [2.0])


class TestConvergenceTable:
    def test_constant_symbol_is_pure_phase(self):
        basis = enumerate_basis(1, 8)
        rule = gauss_hermite_rule(1, 10)
        c, t = 0.7, 0.9
        alpha, beta = np.array([0.3 + 0j]), np.array([0.1 - 0.2j])
        records = feynman_convergence_table(
            PolySymbol.constant(1, c), t, [1, 4, 16], alpha, beta, basis, rule
        )
        expected = np.exp(-1j * c * t) * np.exp(np.conj(alpha[0]) * beta[0])
        for r in records:
            assert abs(r.value - expected) <= 1e-6
            assert r.abs_error <= 1e-6

    def test_quartic_errors_decrease(self):
        basis = enumerate_basis(1, 10)
        rule = gauss_hermite_rule(1, 12)
        records = feynman_convergence_table(
            quartic_oscillator(), 0.5, [8, 16, 32, 64],
            np.array([0.3 + 0j]), np.array([0.2 + 0.1j]), basis, rule,
        )
        errors = [r.abs_error for r in records]
        assert all(e2 <= 1.1 * e1 for e1, e2 in zip(errors, errors[1:]))

    def test_empty_list(self):
        basis = enumerate_basis(1, 6)
        rule = gauss_hermite_rule(1, 8)
        assert feynman_convergence_table(
            zz(), 0.5, [], [0.1], [0.1], basis, rule
        ) == []

    def test_rejects_non_ascending(self):
        basis = enumerate_basis(1, 6)
        rule = gauss_hermite_rule(1, 8)
        with pytest.raises(ValueError, match="ascending"):
            feynman_convergence_table(
                zz(), 0.5, [8, 4], [0.1], [0.1], basis, rule
            )

    def test_halving_ratios_pairs_only_doublings(self):
        basis = enumerate_basis(1, 8)
        rule = gauss_hermite_rule(1, 10)
        records = feynman_convergence_table(
            quartic_oscillator(), 0.4, [8, 16, 24, 48],
            np.array([0.2 + 0j]), np.array([0.1 + 0.1j]), basis, rule,
        )
        ratios = halving_ratios(records)
        assert [n for n, _ in ratios] == [8, 24]

    def test_csv_and_json_writers(self, tmp_path):
        basis = enumerate_basis(1, 8)
        rule = gauss_hermite_rule(1, 10)
        records = feynman_convergence_table(
            zz(), 0.3, [2, 4], np.array([0.2 + 0j]), np.array([0.1 + 0j]),
            basis, rule,
        )
        with_timing = tmp_path / "a.csv"
        records_to_csv(records, with_timing)
        header = with_timing.read_text().splitlines()[0]
        assert header == "N,re,im,abs_error,seconds"

        bare = tmp_path / "b.csv"
        records_to_csv(records, bare, include_timing=False)
        assert bare.read_text().splitlines()[0] == "N,re,im,abs_error"

        payload = records_to_json(records, {"d": 1}, include_timing=False)
        assert payload["metadata"] == {"d": 1}
        assert "seconds" not in payload["records"][0]
