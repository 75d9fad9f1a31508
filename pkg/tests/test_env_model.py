import json

import numpy as np
import pytest

from bprelab.env_model import (
    FractionalLinearParams,
    env_expectation,
    env_moment_m,
    fractional_linear_law,
    gf_eval,
    load_env_file,
    make_environment,
    make_offspring_law,
    parse_env_dict,
)
from bprelab.errors import (
    BadNormalization,
    BadParams,
    DomainError,
    NegativeMass,
    ValidationError,
    ZeroMean,
)


class TestMakeOffspringLaw:
    def test_deterministic_single_child(self):
        law = make_offspring_law([0, 1])
        assert law.p1 == 1.0
        assert law.mean == 1.0
        assert law.no_extinction

    def test_mean(self):
        law = make_offspring_law([0, 0.5, 0.5])
        assert law.mean == pytest.approx(1.5, abs=1e-12)

    def test_bad_normalization(self):
        with pytest.raises(BadNormalization):
            make_offspring_law([0.3, 0.7, 0.1])

    def test_negative_mass(self):
        with pytest.raises(NegativeMass):
            make_offspring_law([-0.01, 0.51, 0.5])

    def test_tiny_negative_clamped(self):
        law = make_offspring_law([-1e-16, 0.5, 0.5])
        assert law.pmf[0] == 0.0
        assert law.no_extinction

    def test_normalized_exactly(self):
        law = make_offspring_law([0, 0.5, 0.5 + 1e-10])
        assert law.pmf.sum() == pytest.approx(1.0, abs=1e-15)

    def test_extinction_flag(self):
        assert not make_offspring_law([0.2, 0.3, 0.5]).no_extinction

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            make_offspring_law([])

    def test_pmf_read_only(self):
        law = make_offspring_law([0, 1])
        with pytest.raises(ValueError):
            law.pmf[0] = 0.5


class TestGfEval:
    def test_identity_law(self):
        assert gf_eval(make_offspring_law([0, 1]), 0.5) == 0.5

    def test_normalization_at_one(self):
        for pmf in ([0, 1], [0, 0.5, 0.5], [0.1, 0.2, 0.3, 0.4]):
            assert gf_eval(make_offspring_law(pmf), 1.0) == pytest.approx(1.0, abs=1e-12)

    def test_value(self):
        assert gf_eval(make_offspring_law([0, 0.5, 0.5]), 0.5) == pytest.approx(0.375, abs=1e-15)

    def test_domain(self):
        law = make_offspring_law([0, 1])
        with pytest.raises(DomainError):
            gf_eval(law, -0.1)
        with pytest.raises(DomainError):
            gf_eval(law, 1.1)

    def test_monotone_and_convex_on_grid(self):
        # nondecreasing first differences, second differences >= -1e-12
        rng = np.random.default_rng(7)
        for _ in range(20):
            pmf = rng.random(rng.integers(2, 8))
            law = make_offspring_law(pmf / pmf.sum())
            t = np.linspace(0.0, 1.0, 101)
            vals = np.array([gf_eval(law, x) for x in t])
            d1 = np.diff(vals)
            d2 = np.diff(d1)
            assert np.all(d1 >= -1e-12)
            assert np.all(d2 >= -1e-12)


class TestFractionalLinear:
    def test_strong_example(self):
        law = fractional_linear_law(FractionalLinearParams(0.0, 0.5, 30))
        assert law.p1 == pytest.approx(0.5, abs=1e-12)
        assert law.mean == pytest.approx(2.0, abs=1e-7)

    def test_mean_closed_form_with_a0(self):
        law = fractional_linear_law(FractionalLinearParams(0.2, 0.5, 30))
        assert law.pmf[0] == pytest.approx(0.2, abs=1e-15)
        assert law.mean == pytest.approx(1.6, abs=1e-6)
        assert not law.no_extinction

    def test_small_b0_degenerates_to_single_child(self):
        law = fractional_linear_law(FractionalLinearParams(0.0, 1e-6, 10))
        assert law.p1 == pytest.approx(1.0, abs=1e-5)

    def test_mass_sums_to_one_exactly(self):
        law = fractional_linear_law(FractionalLinearParams(0.1, 0.7, 25))
        assert law.pmf.sum() == pytest.approx(1.0, abs=1e-15)

    def test_p1_times_mean_limit(self):
        law = fractional_linear_law(FractionalLinearParams(0.0, 0.5, 60))
        assert abs(law.p1 * law.mean - 1.0) < 1e-6

    def test_default_truncation_tail(self):
        law = fractional_linear_law(FractionalLinearParams(0.0, 0.5))
        # geometric tail mass beyond the default M must be below 1e-12
        M = law.max_offspring
        assert 0.5 ** M < 1e-12
        assert law.fl.M == M

    def test_bad_params(self):
        with pytest.raises(BadParams):
            FractionalLinearParams(0.6, 0.5)  # a0 + b0 > 1
        with pytest.raises(BadParams):
            FractionalLinearParams(-0.1, 0.5)
        with pytest.raises(BadParams):
            FractionalLinearParams(0.0, 1.0)
        with pytest.raises(BadParams):
            FractionalLinearParams(0.0, 0.5, 0)


class TestEnvironment:
    def test_expectation_single_atom(self):
        env = make_environment([(1.0, make_offspring_law([0, 0.5, 0.5]))])
        assert env_expectation(env, lambda law: law.mean) == pytest.approx(1.5)

    def test_expectation_two_atoms(self, env_e1):
        assert env_expectation(env_e1, lambda law: law.p1) == pytest.approx(0.35, abs=1e-12)
        assert env_expectation(env_e1, lambda law: law.p1 ** 2) == pytest.approx(0.145, abs=1e-12)

    def test_moment_examples(self, env_e1):
        assert env_moment_m(env_e1, 1.0) == pytest.approx(1.65, abs=1e-12)
        assert env_moment_m(env_e1, 0.0) == pytest.approx(1.0, abs=1e-15)
        assert env_moment_m(env_e1, -1.0) == pytest.approx(0.5 * (1 / 1.5 + 1 / 1.8), abs=1e-12)

    def test_moment_zero_mean(self):
        env = make_environment([(1.0, make_offspring_law([1.0]))])
        with pytest.raises(ZeroMean):
            env_moment_m(env, -1.0)

    def test_moment_log_convex(self, env_e1):
        # midpoint inequality on s in {-2,-1,0,1,2}
        for s1, s2 in [(-2, 0), (-1, 1), (0, 2), (-2, 2)]:
            mid = 0.5 * (s1 + s2)
            lhs = np.log(env_moment_m(env_e1, mid))
            rhs = 0.5 * (np.log(env_moment_m(env_e1, s1)) + np.log(env_moment_m(env_e1, s2)))
            assert lhs <= rhs + 1e-12

    def test_weights_validated(self):
        law = make_offspring_law([0, 1])
        with pytest.raises(BadNormalization):
            make_environment([(0.5, law), (0.4, law)])
        with pytest.raises(ValidationError):
            make_environment([])
        with pytest.raises(ValidationError):
            make_environment([(0.0, law), (1.0, law)])

    def test_mu(self, env_e1):
        expected = 0.5 * (np.log(1.5) + np.log(1.8))
        assert env_e1.mu() == pytest.approx(expected, abs=1e-12)


class TestEnvFiles:
    def test_atoms_schema(self, e1_file):
        env = load_env_file(e1_file)
        assert env.n_atoms == 2
        assert env_moment_m(env, 1.0) == pytest.approx(1.65)

    def test_fractional_linear_schema(self, tmp_path):
        path = tmp_path / "fl.json"
        path.write_text(json.dumps({"fractional_linear": {"a0": 0.0, "b0": 0.5, "M": 30}}))
        env = load_env_file(path)
        assert env.is_fractional_linear
        assert env.laws[0].p1 == pytest.approx(0.5)

    def test_per_atom_fractional_linear(self):
        env = parse_env_dict(
            {
                "atoms": [
                    {"weight": 0.5, "fractional_linear": {"a0": 0.6, "b0": 0.2, "M": 60}},
                    {"weight": 0.5, "fractional_linear": {"a0": 0.0, "b0": 0.75, "M": 60}},
                ]
            }
        )
        assert env.is_fractional_linear
        assert env.laws[0].mean == pytest.approx(0.5, abs=1e-9)
        assert env.laws[1].mean == pytest.approx(4.0, abs=1e-6)

    def test_unknown_keys_rejected(self):
        with pytest.raises(ValidationError):
            parse_env_dict({"atoms": [{"weight": 1.0, "pmf": [0, 1]}], "extra": 1})
        with pytest.raises(ValidationError):
            parse_env_dict({"atoms": [{"weight": 1.0, "pmf": [0, 1], "typo": 2}]})
        with pytest.raises(ValidationError):
            parse_env_dict({"fractional_linear": {"a0": 0.0, "b0": 0.5, "Q": 1}})

    def test_both_or_neither_rejected(self):
        with pytest.raises(ValidationError):
            parse_env_dict({})
        with pytest.raises(ValidationError):
            parse_env_dict(
                {"atoms": [{"weight": 1.0, "pmf": [0, 1]}], "fractional_linear": {"a0": 0, "b0": 0.5}}
            )

    def test_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ValidationError):
            load_env_file(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ValidationError):
            load_env_file(tmp_path / "nope.json")
