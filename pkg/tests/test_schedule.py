"""Learning-rate rule, warmup/cosine scheduler, and AdamW update semantics."""

from __future__ import annotations

import math

import numpy as np
import pytest

from satpair import (
    HeadGrads,
    NonPositiveTemperatureError,
    ProjectionHead,
    ShapeMismatchError,
    StepOutOfRangeError,
    TrainConfig,
    adamw_step,
    cosine_warmup_lr,
    effective_lr,
)
from satpair.train import init_optimizer_state


def test_effective_lr_published_constants_exact():
    cfg = TrainConfig(devices=16, batch_per_device=112, base_lr_numerator=5.0e-4, base_lr_denominator=32768)
    assert effective_lr(cfg) == 2.734375e-5


def test_effective_lr_cancellation():
    cfg = TrainConfig(devices=1, batch_per_device=32768, base_lr_numerator=1.0, base_lr_denominator=32768)
    assert effective_lr(cfg) == 1.0


def test_effective_lr_arithmetic():
    cfg = TrainConfig(devices=2, batch_per_device=100, base_lr_numerator=1e-3, base_lr_denominator=1000)
    assert abs(effective_lr(cfg) - 2.0e-4) < 1e-18


def _sched_cfg(**kw):
    defaults = dict(devices=1, batch_per_device=1, base_lr_numerator=1.0, base_lr_denominator=1.0)
    defaults.update(kw)
    return TrainConfig(**defaults)


def test_scheduler_starts_at_zero():
    cfg = _sched_cfg(epochs=10, warmup_epochs=1)
    assert cosine_warmup_lr(0, 100, cfg) == 0.0


def test_scheduler_peak_at_warmup_end():
    cfg = _sched_cfg(epochs=10, warmup_epochs=1)
    assert cosine_warmup_lr(100, 100, cfg) == effective_lr(cfg)


def test_scheduler_cosine_midpoint():
    # W=100, S=1000 -> midpoint of the cosine arc at step 550 gives peak/2
    cfg = _sched_cfg(epochs=10, warmup_epochs=1)
    assert abs(cosine_warmup_lr(550, 100, cfg) - 0.5) < 1e-9


def test_scheduler_continuous_at_boundary():
    cfg = _sched_cfg(epochs=10, warmup_epochs=1)
    before = cosine_warmup_lr(99, 100, cfg)
    at = cosine_warmup_lr(100, 100, cfg)
    after = cosine_warmup_lr(101, 100, cfg)
    peak = effective_lr(cfg)
    assert abs(at - peak) == 0.0
    assert abs(before - peak) < peak * 0.011  # one warmup step below peak
    assert abs(after - peak) < peak * 1e-4  # cosine decays quadratically at the start


def test_scheduler_final_step_near_zero():
    cfg = _sched_cfg(epochs=10, warmup_epochs=1)
    steps_per_epoch = 100
    total = cfg.epochs * steps_per_epoch
    warm = cfg.warmup_epochs * steps_per_epoch
    peak = effective_lr(cfg)
    last = cosine_warmup_lr(total - 1, steps_per_epoch, cfg)
    assert last < peak * math.pi**2 / (2 * (total - warm) ** 2)


def test_scheduler_monotone_decay_after_warmup():
    cfg = _sched_cfg(epochs=5, warmup_epochs=1)
    values = [cosine_warmup_lr(s, 20, cfg) for s in range(20, 100)]
    assert all(a >= b for a, b in zip(values, values[1:]))


def test_scheduler_step_out_of_range():
    cfg = _sched_cfg(epochs=2, warmup_epochs=1)
    with pytest.raises(StepOutOfRangeError):
        cosine_warmup_lr(200, 100, cfg)
    with pytest.raises(StepOutOfRangeError):
        cosine_warmup_lr(-1, 100, cfg)


def test_config_invariants_enforced():
    with pytest.raises(NonPositiveTemperatureError):
        TrainConfig(temperature=0.0)
    with pytest.raises(ValueError):
        TrainConfig(crop_scale_min=0.0)
    with pytest.raises(ValueError):
        TrainConfig(crop_scale_min=0.9, crop_scale_max=0.8)
    with pytest.raises(ValueError):
        TrainConfig(warmup_epochs=10, epochs=10)


def _scalar_head(value: float) -> ProjectionHead:
    return ProjectionHead(np.array([[value]], dtype=np.float32), np.zeros(1, dtype=np.float32))


def test_adamw_zero_grad_zero_decay_fixed_point():
    cfg = TrainConfig(weight_decay=0.0)
    head = _scalar_head(1.5)
    grads = HeadGrads(np.zeros((1, 1)), np.zeros(1))
    new_head, state = adamw_step(head, grads, init_optimizer_state(head), lr=0.1, cfg=cfg)
    assert new_head.weight[0, 0] == head.weight[0, 0]
    assert state.step == 1


def test_adamw_pure_decay_branch():
    cfg = TrainConfig(weight_decay=0.01)
    head = _scalar_head(1.0)
    grads = HeadGrads(np.zeros((1, 1)), np.zeros(1))
    new_head, _ = adamw_step(head, grads, init_optimizer_state(head), lr=1.0, cfg=cfg)
    assert abs(new_head.weight[0, 0] - 0.99) < 1e-7


def test_adamw_single_step_unit_update():
    # g=1 with fresh moments: m_hat = 1, v_hat = 1 -> update ~= lr before decay
    cfg = TrainConfig(weight_decay=0.0)
    head = _scalar_head(0.0)
    grads = HeadGrads(np.ones((1, 1)), np.zeros(1))
    new_head, _ = adamw_step(head, grads, init_optimizer_state(head), lr=0.1, cfg=cfg)
    assert abs(new_head.weight[0, 0] - (-0.1)) < 1e-6


def test_adamw_step_counter_increments():
    cfg = TrainConfig()
    head = _scalar_head(1.0)
    state = init_optimizer_state(head)
    grads = HeadGrads(np.ones((1, 1)), np.ones(1))
    for expected in (1, 2, 3):
        head, state = adamw_step(head, grads, state, lr=0.01, cfg=cfg)
        assert state.step == expected


def test_adamw_shape_mismatch():
    cfg = TrainConfig()
    head = _scalar_head(1.0)
    grads = HeadGrads(np.ones((2, 2)), np.ones(1))
    with pytest.raises(ShapeMismatchError):
        adamw_step(head, grads, init_optimizer_state(head), lr=0.01, cfg=cfg)
