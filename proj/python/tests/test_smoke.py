import math
import os
from pathlib import Path

import numpy as np
import pytest

import apnn

PRESETS = Path(os.environ.get("APNN_PRESET_DIR", Path(__file__).resolve().parents[2] / "presets"))


def test_quadrature_moments():
    v, w = apnn.gauss_legendre(16)
    assert w.sum() == pytest.approx(1.0, abs=1e-14)
    assert (w * v**2).sum() == pytest.approx(1 / 3, abs=1e-14)
    th, wt = apnn.quarter_circle_rule(16)
    assert wt.sum() == pytest.approx(1.0, abs=1e-14)
    assert (wt * np.cos(th) ** 2).sum() == pytest.approx(0.5, abs=1e-14)


def test_embedding_and_metric():
    e = apnn.fourier_embed([0.25], 1)
    assert e == pytest.approx([1.0, 0.0], abs=1e-15)
    assert apnn.relative_l2([1.0, 2.0], [1.0, 2.0]) == 0.0
    with pytest.raises(ValueError):
        apnn.relative_l2([1.0], [0.0])


def test_schedule():
    assert apnn.lr_at(1e-3, 0.96, 2500, 5000) == pytest.approx(9.216e-4, rel=1e-12)


def test_surrogate_structure():
    s = apnn.Surrogate1D(epsilon=0.1, seed=3, width=8, blocks=2, harmonics=2)
    a, b = s.wrap(0.05, 0.3, 0.4), s.wrap(0.05, 0.3, -0.4)
    assert a.j == -b.j and a.w == b.w and a.rho > 0
    assert s.wrap(0.05, 1.3, 0.4).rho == pytest.approx(a.rho, abs=1e-12)
    rho = s.density([0.0, 0.05], [0.1, 0.2])
    assert rho.shape == (2,) and np.all(rho > 0)
    total, residual, initial = s.loss(interior=16, initial=8)
    assert total == pytest.approx(residual + initial)

    s2 = apnn.Surrogate2D(epsilon=0.5, seed=4, width=8, blocks=2)
    p, m = s2.wrap(0.0, 0.2, 0.7, 0.6, 0.8), s2.wrap(0.0, 0.2, 0.7, -0.6, -0.8)
    assert p.j2 == -m.j2 and p.phi == m.phi and p.w == m.w


def test_checkpoint_round_trip(tmp_path):
    s = apnn.Surrogate1D(epsilon=1.0, seed=5, width=8, blocks=2)
    s.save(str(tmp_path / "p.ckpt"))
    t = apnn.Surrogate1D(epsilon=1.0, seed=6, width=8, blocks=2)
    t.load(str(tmp_path / "p.ckpt"))
    assert t.density([0.01], [0.4])[0] == s.density([0.01], [0.4])[0]
    with pytest.raises(apnn.IoError):
        apnn.Surrogate1D(epsilon=1.0, width=16, blocks=2).load(str(tmp_path / "p.ckpt"))


def test_reference_conserves_mass():
    x, rho = apnn.reference_1d(1e-2, nx=100, times=[0.0, 0.01])
    assert rho.shape == (2, 100)
    assert rho[1].mean() == pytest.approx(rho[0].mean(), rel=1e-10)
    assert rho[0].max() == pytest.approx(2 * 0.3413447460685429, rel=1e-6)


def test_residual_of_steady_state():
    d = apnn.residuals_1d([1.0, 0, 0, 0, 0, 0, 0, 0, 0], 0.5, 1e-3)
    assert d == pytest.approx([0.0, 0.0, 0.0])


def test_config_errors():
    with pytest.raises(apnn.ConfigError, match="epsilon"):
        apnn.load_config({"epsilon": -1.0})
    with pytest.raises(apnn.IoError):
        apnn.load_config("/nonexistent/config.json")
    cfg = apnn.load_config(PRESETS / "1d_eps1.json")
    assert cfg["dimension"] == 1 and cfg["epsilon"] == 1.0


def test_short_run_is_deterministic(tmp_path):
    a = apnn.run(PRESETS / "1d_eps1.json", out_dir=tmp_path / "a", iterations=5, log_every=1)
    b = apnn.run(PRESETS / "1d_eps1.json", iterations=5, log_every=1)
    assert np.array_equal(a["loss"]["total"], b["loss"]["total"])
    assert len(a["loss"]["iter"]) == 6
    assert math.isfinite(a["final_rel_l2"])
    assert (tmp_path / "a" / "loss_history.csv").exists()
