import mpmath
import numpy as np
import pytest
import scipy.linalg

from pilkit.activation import Activation
from pilkit.dataset import Dataset
from pilkit.diagnostics import (
    SaturationProbe,
    counterexample_fx,
    csv_text,
    error_floor,
    float_range_guard,
    fx,
    fx_rank_experiment,
    theorem1_sweep,
)
from pilkit.errors import ConfigError
from pilkit.network import hidden_outputs
from pilkit.trainers import TrainConfig, train_pil0

from conftest import random_regression

mpmath.mp.dps = 40


def fx_oracle(x):
    x = mpmath.mpf(x)
    return float(
        mpmath.mpf("0.2") * mpmath.exp(-((10 * x - 4) ** 2))
        + mpmath.mpf("0.5") * mpmath.exp(-((80 * x - 40) ** 2))
        + mpmath.mpf("0.3") * mpmath.exp(-((80 * x - 20) ** 2))
    )


class TestSaturationSweep:
    @pytest.mark.parametrize("kind", ["sigmoid", "tanh"])
    def test_collapse_to_rank_one(self, kind):
        res = theorem1_sweep(SaturationProbe(Activation(kind), seed=3))
        last = res.per_epsilon[-1]
        assert res.applicable and res.notes == []
        assert last.rank.numerical_rank == 1 == res.terminal_rank
        assert last.saturated_fraction == 1.0
        assert last.min_entry == last.max_entry == 1.0

    def test_epsilon_one_full_rank_oracle(self):
        res = theorem1_sweep(SaturationProbe(seed=0, epsilon_schedule=(1.0,)))
        # rebuild H independently from the documented draw order
        rng = np.random.default_rng(0)
        x = np.hstack([np.ones((50, 1)), rng.uniform(0, 1, (50, 5))])
        h = 1 / (1 + np.exp(-(x @ rng.uniform(1, 2, (6, 50)))))
        s = scipy.linalg.svdvals(h)
        expected = int(np.sum(s > 50 * s[0] * np.finfo(float).eps))
        assert res.per_epsilon[0].rank.numerical_rank == expected == 50

    def test_saturation_monotone(self):
        res = theorem1_sweep(SaturationProbe(Activation("tanh"), seed=1))
        fracs = [r.saturated_fraction for r in res.per_epsilon]
        ranks = [r.rank.numerical_rank for r in res.per_epsilon]
        assert all(a <= b for a, b in zip(fracs, fracs[1:]))
        assert ranks[0] > ranks[-1]

    def test_unbounded_flagged(self):
        res = theorem1_sweep(SaturationProbe(Activation("linear")))
        assert not res.applicable
        assert any("unbounded" in n for n in res.notes)
        # linear H = X W has rank at most n_features + 1
        assert res.terminal_rank <= 6

    def test_straddling_interval_flagged(self):
        res = theorem1_sweep(SaturationProbe(weight_interval=(-1.0, 1.0)))
        assert not res.applicable
        assert any("straddles" in n for n in res.notes)

    @pytest.mark.parametrize("eps", [(), (1.0, 1.0), (1e-3, 1.0), (1.0, 0.0)])
    def test_schedule_validated(self, eps):
        with pytest.raises(ConfigError):
            SaturationProbe(epsilon_schedule=eps)

    def test_float64_overflow_raises(self):
        with pytest.raises(ConfigError, match="overflow"):
            theorem1_sweep(SaturationProbe(epsilon_schedule=(1.0, 1e-310)))

    def test_to_dict_and_csv(self):
        res = theorem1_sweep(SaturationProbe(seed=2))
        out = res.to_dict()
        assert out["terminal_rank"] == 1 and len(out["per_epsilon"]) == 7
        rows = res.csv_rows()
        assert rows[0] == ("epsilon", "rank", "saturated_fraction")
        assert rows[-1][1] == 1
        text = csv_text(rows)
        assert text.splitlines()[1].startswith("1.0,")


class TestFx:
    @pytest.mark.parametrize("x", ["0.25", "0.4", "0.5"])
    def test_matches_oracle(self, x):
        assert abs(fx(float(x)) - fx_oracle(x)) < 1e-14

    def test_known_value(self):
        assert fx(0.4) == pytest.approx(0.2, abs=1e-14)

    def test_dataset(self):
        d = counterexample_fx(100)
        assert d.n_samples == 100 and d.x.shape == (100, 2)
        np.testing.assert_array_equal(d.raw_x[:, 0], np.linspace(0, 1, 100))
        assert np.all(d.t > 0) and np.all(d.t < 0.75)
        with pytest.raises(ConfigError):
            counterexample_fx(1)

    def test_rank_deficient_at_default_seed(self):
        rep = fx_rank_experiment()
        assert rep.rank.numerical_rank < 100
        assert not rep.full_rank
        assert rep.rank.condition_estimate > 1e8

    def test_width_one(self):
        rep = fx_rank_experiment(hidden_width=1)
        assert rep.rank.numerical_rank == 1

    def test_deterministic(self):
        a, b = fx_rank_experiment(seed=5), fx_rank_experiment(seed=5)
        assert a.to_dict() == b.to_dict()

    def test_width_limit(self):
        with pytest.raises(ConfigError):
            fx_rank_experiment(n_points=10, hidden_width=11)


class TestErrorFloor:
    def test_targets_in_column_space(self):
        rng = np.random.default_rng(0)
        d0 = random_regression(rng, 12, 2)
        cfg = TrainConfig(hidden_width=5, random_seed=4)
        net, _ = train_pil0(d0, cfg)
        y = hidden_outputs(net, d0.x)[1]
        t = y @ rng.standard_normal((5, 1))
        d = Dataset(d0.x, t, d0.n_raw_features)
        assert error_floor(d, 5, seed=4) < 1e-10

    def test_orthogonal_targets(self):
        rng = np.random.default_rng(1)
        d0 = random_regression(rng, 12, 2)
        net, _ = train_pil0(d0, TrainConfig(hidden_width=4, random_seed=2))
        y = hidden_outputs(net, d0.x)[1]
        null = scipy.linalg.null_space(y.T)
        t = null[:, :1]
        d = Dataset(d0.x, t, d0.n_raw_features)
        assert error_floor(d, 4, seed=2) == pytest.approx(np.linalg.norm(t), abs=1e-10)

    def test_equals_trainer_residual(self):
        rng = np.random.default_rng(2)
        d = random_regression(rng, 15, 3)
        _, rep = train_pil0(d, TrainConfig(hidden_width=6, random_seed=8,
                                           output_activation=Activation("linear")))
        assert rep.residual_norm == pytest.approx(error_floor(d, 6, seed=8), abs=1e-10)

    def test_not_beaten_by_random_weights(self):
        rng = np.random.default_rng(3)
        d = random_regression(rng, 15, 3)
        floor = error_floor(d, 6, seed=1)
        net, _ = train_pil0(d, TrainConfig(hidden_width=6, random_seed=1,
                                           output_activation=Activation("linear")))
        y = hidden_outputs(net, d.x)[1]
        for _ in range(100):
            w = rng.standard_normal((6, 1))
            assert np.linalg.norm(y @ w - d.t) >= floor - 1e-12

    def test_needs_narrow_layer(self):
        d = counterexample_fx(10)
        with pytest.raises(ConfigError):
            error_floor(d, 10)


class TestFloatRangeGuard:
    def test_zero(self):
        rep = float_range_guard(np.zeros((2, 2)))
        assert not rep.flagged and rep.arctanh_in_domain and rep.max_abs == 0.0

    def test_beyond_single(self):
        rep = float_range_guard([[1e39, 0.0]])
        assert rep.beyond_single_precision == 1 and rep.flagged
        assert not rep.arctanh_in_domain
        assert float_range_guard([[1e38]]).beyond_single_precision == 0

    def test_near_boundary(self):
        rep = float_range_guard([[0.999999999999, 0.5]])
        assert rep.arctanh_in_domain
        assert rep.near_domain_boundary == 1
        assert rep.preimage_overflow_single == 1
        assert rep.would_clip == 0
        assert rep.flagged

    def test_clip_count(self):
        rep = float_range_guard([[1 - 1e-14, -0.3]])
        assert rep.would_clip == 1
        assert rep.to_dict()["flagged"] is True
