import io

import numpy as np
import pytest

from bprelab.env_model import make_environment, make_offspring_law
from bprelab.errors import DegenerateGamma, DomainError, ExtinctionPossible
from bprelab.exact_engine import build_kernel, exact_dist, harmonic_moment_Zn
from bprelab.exponents import solve_r_k
from bprelab.qseries import (
    Q_eval,
    accessible_states,
    functional_eq_residual,
    gamma_k,
    q_table,
    qtable_to_csv,
    ratio_sequence,
    recurrence_residual,
)


class TestGamma:
    def test_e1(self, env_e1):
        assert gamma_k(env_e1, 1) == pytest.approx(0.35, abs=1e-15)
        assert gamma_k(env_e1, 2) == pytest.approx(0.145, abs=1e-15)

    def test_identity_env(self, env_identity):
        for k in (1, 2, 5):
            assert gamma_k(env_identity, k) == 1.0

    def test_k_validated(self, env_e1):
        with pytest.raises(DomainError):
            gamma_k(env_e1, 0)


class TestQTable:
    def test_gw_one_step(self, env_gw):
        qt = q_table(env_gw, 1, 50)
        assert qt.q[1] == 1.0
        assert qt.q[2] == pytest.approx(2.0, abs=1e-12)

    def test_e1_q12(self, env_e1):
        qt = q_table(env_e1, 1, 50)
        assert qt.q[2] == pytest.approx(0.65 / (0.35 - 0.145), rel=1e-12)

    def test_initialization(self, env_e1):
        qt = q_table(env_e1, 2, 50)
        assert qt.q[2] == 1.0
        assert np.all(qt.q[:2] == 0.0)

    def test_nonnegative(self, env_e1):
        qt = q_table(env_e1, 1, 200)
        assert np.all(qt.q >= 0.0)

    def test_recurrence_residual(self, env_e1):
        kernel = build_kernel(env_e1, 400)
        qt = q_table(env_e1, 1, 400, kernel=kernel)
        assert recurrence_residual(qt, kernel) < 1e-10

    def test_extinction_rejected(self, env_fl_extinct):
        with pytest.raises(ExtinctionPossible):
            q_table(env_fl_extinct, 1, 50)

    def test_degenerate_gamma_one(self, env_identity):
        with pytest.raises(DegenerateGamma):
            q_table(env_identity, 1, 20)

    def test_degenerate_gamma_zero(self, env_doubling):
        with pytest.raises(DegenerateGamma):
            q_table(env_doubling, 1, 20)

    def test_zero_propagation_inaccessible(self):
        # children 1 or 3: population parity is preserved, even states from
        # k=1 are never reached and must carry exactly zero coefficients
        env = make_environment(
            [
                (0.5, make_offspring_law([0.0, 0.5, 0.0, 0.5])),
                (0.5, make_offspring_law([0.0, 0.2, 0.0, 0.8])),
            ]
        )
        J = 60
        qt = q_table(env, 1, J)
        acc = accessible_states(env, 1, J)
        for j in range(1, J + 1):
            if j % 2 == 0:
                assert not acc[j]
                assert qt.q[j] == 0.0
            else:
                assert acc[j]
                assert qt.q[j] > 0.0


class TestQEval:
    def test_zero_at_origin(self, env_e1):
        qt = q_table(env_e1, 1, 50)
        value, _ = Q_eval(qt, 0.0)
        assert value == 0.0

    def test_partial_sums_increase_to_limit(self, env_gw):
        # nonnegative terms, radius 1: partial sums at t=0.5 increase and settle
        values = []
        for J in (25, 50, 100, 200):
            qt = q_table(env_gw, 1, J)
            values.append(Q_eval(qt, 0.5)[0])
        assert all(values[i] <= values[i + 1] + 1e-15 for i in range(3))
        assert values[-1] - values[-2] < 1e-12

    def test_matches_normalized_gen_func_limit(self, env_e1):
        # G_{1,n}(t) / gamma_1**n increases to Q_1(t)
        from bprelab.exact_engine import gen_func

        qt = q_table(env_e1, 1, 400)
        t = 0.5
        target, tail = Q_eval(qt, t)
        g = gamma_k(env_e1, 1)
        d = exact_dist(env_e1, 1, 40, 400)
        approx = gen_func(d, t)[0] / g ** 40
        assert approx == pytest.approx(target, rel=1e-6)
        assert approx <= target + tail + 1e-12

    def test_domain(self, env_e1):
        qt = q_table(env_e1, 1, 50)
        with pytest.raises(DomainError):
            Q_eval(qt, 1.0)


class TestFunctionalEq:
    def test_residual_below_tolerance(self, env_e1):
        qt = q_table(env_e1, 1, 400)
        rep = functional_eq_residual(qt, env_e1, [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7])
        for r, tol in zip(rep.residuals, rep.tolerances):
            assert r <= tol

    def test_residual_zero_at_origin(self, env_e1):
        qt = q_table(env_e1, 1, 100)
        rep = functional_eq_residual(qt, env_e1, [0.0])
        assert rep.residuals[0] == 0.0

    def test_refinement_with_J(self, env_e1):
        grid = [0.2, 0.5, 0.7]
        r400 = functional_eq_residual(q_table(env_e1, 1, 400), env_e1, grid)
        r800 = functional_eq_residual(q_table(env_e1, 1, 800), env_e1, grid)
        assert r800.max_residual <= r400.max_residual + 1e-12

    def test_grid_validated(self, env_e1):
        qt = q_table(env_e1, 1, 50)
        with pytest.raises(DomainError):
            functional_eq_residual(qt, env_e1, [0.95])

    def test_entries_shape(self, env_e1):
        import json

        qt = q_table(env_e1, 1, 50)
        rep = functional_eq_residual(qt, env_e1, [0.1, 0.5])
        entries = rep.entries()
        assert [e["t"] for e in entries] == [0.1, 0.5]
        assert set(entries[0]) == {"t", "residual", "tolerance"}
        parsed = json.loads(json.dumps(entries))
        assert parsed[0]["residual"] == rep.residuals[0]


class TestGWProduct:
    def test_single_atom_product_law(self, env_gw):
        q1 = q_table(env_gw, 1, 200)
        for k in (2, 3):
            qk = q_table(env_gw, k, 200)
            for t in np.arange(0.1, 0.75, 0.1):
                vk, _ = Q_eval(qk, t)
                v1, _ = Q_eval(q1, t)
                assert abs(vk - v1 ** k) < 1e-8

    def test_random_env_violates_product_law(self, env_e1):
        q1 = q_table(env_e1, 1, 200)
        q2 = q_table(env_e1, 2, 200)
        gaps = [
            abs(Q_eval(q2, t)[0] - Q_eval(q1, t)[0] ** 2) for t in np.arange(0.1, 0.75, 0.1)
        ]
        assert max(gaps) > 1e-4


class TestRatioSequence:
    def test_constant_at_k(self, env_e1):
        rs = ratio_sequence(env_e1, 1, 1, 20)
        assert np.allclose(rs.values, 1.0, atol=1e-12)
        assert rs.nondecreasing

    def test_increases_to_q(self, env_e1):
        rs = ratio_sequence(env_e1, 1, 2, 40)
        assert rs.nondecreasing
        assert rs.values[-1] == pytest.approx(0.65 / (0.35 - 0.145), rel=1e-6)

    def test_inaccessible_all_zero(self, env_doubling):
        # pure doubling: j=3 never reached from k=1; gamma_1 is 0 here and
        # the 0/0 ratios are reported as 0 by convention
        rs = ratio_sequence(env_doubling, 1, 3, 10)
        assert np.all(rs.values == 0.0)

    def test_convergence_within_one_percent(self, env_e1):
        qt = q_table(env_e1, 1, 400)
        for j in range(1, 9):
            rs = ratio_sequence(env_e1, 1, j, 60, J=400)
            assert abs(rs.values[-1] - qt.q[j]) / qt.q[j] < 0.01


class TestSeriesMomentIdentity:
    def test_matches_normalized_harmonic_moment(self, env_e1):
        J = 400
        kernel = build_kernel(env_e1, J)
        r = solve_r_k(env_e1, 1) + 1.0
        qt = q_table(env_e1, 1, J, kernel=kernel)
        j = np.arange(1, J + 1, dtype=float)
        series = float(np.dot(qt.q[1:], j ** (-r)))
        d = exact_dist(env_e1, 1, 60, J, kernel=kernel)
        normalized = harmonic_moment_Zn(d, r)[0] / gamma_k(env_e1, 1) ** 60
        assert abs(series - normalized) / normalized < 0.01

    def test_summability_contrast(self, env_e1):
        # partial sums of j**(-r) q_j: Cauchy-looking above r_1, visibly
        # growing below it
        r1 = solve_r_k(env_e1, 1)
        qt = q_table(env_e1, 1, 400)
        j = np.arange(1, 401, dtype=float)

        def partial(r, J):
            return float(np.dot(qt.q[1 : J + 1], j[:J] ** (-r)))

        above_increment = partial(r1 + 0.5, 400) - partial(r1 + 0.5, 200)
        above_base = partial(r1 + 0.5, 200)
        below_increment = partial(max(0.1, r1 - 0.5), 400) - partial(max(0.1, r1 - 0.5), 200)
        below_base = partial(max(0.1, r1 - 0.5), 200)
        assert above_increment / above_base < 0.05
        assert below_increment / below_base > 3 * (above_increment / above_base)


def test_csv_export(env_e1):
    qt = q_table(env_e1, 1, 10)
    buf = io.StringIO()
    qtable_to_csv(qt, buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "k,j,q"
    assert lines[1] == "1,1,1"
    assert len(lines) == 11
