# SPDX-License-Identifier: Apache-2.0
import math

import numpy as np
import pytest

import rbf


def test_fp_solve_is_feasible_and_beats_rzf():
    cfg = rbf.SystemConfig(L=4, K=4, sigma2=1.0, p_max=10.0)
    H = rbf.sample_channels(seed=3, L=4, K=4, count=1)[0]
    assert H.shape == (4, 4) and H.dtype == np.complex128
    res = rbf.run_fp(H, cfg)
    assert np.sum(np.abs(res.V) ** 2) <= cfg.p_max
    assert all(b >= a - 1e-8 for a, b in zip(res.trace.objective, res.trace.objective[1:]))
    assert rbf.wsr(H, res.V, cfg) >= rbf.wsr(H, rbf.rzf_beamformer(H, 1.0, cfg), cfg)
    aux = rbf.refresh_aux(H, res.V, cfg)
    assert math.isclose(rbf.qt_objective(H, res.V, aux, cfg), rbf.wsr(H, res.V, cfg), rel_tol=1e-9)


def test_single_user_capacity():
    cfg = rbf.SystemConfig(L=4, K=1)
    h = rbf.sample_channels(seed=5, L=4, K=1, count=1)[0]
    cap = math.log2(1 + cfg.p_max * np.linalg.norm(h) ** 2 / cfg.sigma2)
    assert abs(rbf.wsr(h, rbf.run_wmmse(h, cfg).V, cfg) - cap) < 1e-6


def test_quantile_matches_sorting():
    values = [3.0, 1.0, 2.0, 1.0, 5.0, 4.0, 1.0, 0.5, 2.0, 9.0] * 2
    value, index = rbf.quantile_select(values, 0.2)
    order = sorted(range(len(values)), key=lambda i: (values[i], i))
    assert (value, index) == (values[order[3]], order[3])
    with pytest.raises(ValueError):
        rbf.quantile_select(values[:5], 0.05)


def test_projection_and_unfold():
    cfg = rbf.SystemConfig()
    H = rbf.sample_channels(seed=7, L=4, K=4, count=1)[0]
    V = rbf.project_power(10 * H, 2.0)
    assert np.sum(np.abs(V) ** 2) <= 2.0
    out = rbf.unfold(H, rbf.StepSizeSchedule(3, 4), cfg)
    assert np.sum(np.abs(out) ** 2) <= cfg.p_max
    assert rbf.wsr(H, out, cfg) > 0


def test_tiny_training_run(tmp_path):
    cfg = rbf.SystemConfig()
    cfg.sigma_h2 = 0.05
    schedule, losses = rbf.train(cfg, layers=2, steps=2, batches=4, batch_size=2, B=40)
    assert schedule.mu.shape == (2, 2)
    assert len(losses) == 4 and all(math.isfinite(x) for x in losses)
    path = tmp_path / "s.txt"
    rbf.save_schedule(str(path), schedule)
    assert np.array_equal(rbf.load_schedule(str(path)).mu, schedule.mu)
    with pytest.raises(FileNotFoundError):
        rbf.load_schedule(str(tmp_path / "missing.txt"))
