"""Symmetric InfoNCE training of linear projection heads over frozen features.

The optimizer (AdamW with decoupled weight decay), scheduler (linear warmup
then cosine decay), learning-rate scaling rule, and temperature all follow the
published recipe; only the trainable surface differs — linear heads over
precomputed features instead of full encoders, which keeps every contract
desk-verifiable.

Loss math runs in float64 with a fixed reduction order, so training histories
are bit-identical across runs with equal seeds.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    EmptyInputError,
    NonPositiveTemperatureError,
    NotNormalizedError,
    ShapeMismatchError,
    StepOutOfRangeError,
)
from .matrix import EmbeddingMatrix, l2_normalize_backward, l2_normalize_rows
from .embed_io import read_embeddings, write_embeddings
from .rng import derive_rng


@dataclass
class TrainConfig:
    """Hyperparameters of the contrastive recipe.

    Defaults are the published values: temperature 0.07, AdamW with weight
    decay 0.01, 10 epochs with 1 warmup epoch, random resized crops covering
    0.8-1.0 of the source area at input size 448, and the learning-rate
    scaling rule devices x batch x base_lr_numerator / base_lr_denominator
    (16 x 112 x 5.0e-4 / 32768).
    """

    temperature: float = 0.07
    batch_per_device: int = 112
    devices: int = 16
    base_lr_numerator: float = 5.0e-4
    base_lr_denominator: float = 32768.0
    weight_decay: float = 0.01
    epochs: int = 10
    warmup_epochs: int = 1
    crop_scale_min: float = 0.8
    crop_scale_max: float = 1.0
    input_size: int = 448
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.temperature <= 0:
            raise NonPositiveTemperatureError(f"temperature must be > 0, got {self.temperature}")
        if not (0 < self.crop_scale_min <= self.crop_scale_max <= 1.0):
            raise ValueError(
                f"need 0 < crop_scale_min <= crop_scale_max <= 1, "
                f"got [{self.crop_scale_min}, {self.crop_scale_max}]"
            )
        if not (0 <= self.warmup_epochs < self.epochs):
            raise ValueError(
                f"warmup_epochs must satisfy 0 <= warmup < epochs, "
                f"got warmup={self.warmup_epochs}, epochs={self.epochs}"
            )
        if self.batch_per_device < 1 or self.devices < 1:
            raise ValueError("batch_per_device and devices must be >= 1")

    @property
    def global_batch(self) -> int:
        return self.devices * self.batch_per_device


@dataclass
class ProjectionHead:
    """Linear map into the shared embedding space: y = weight @ x + bias."""

    weight: np.ndarray  # (out_dim, in_dim) float32
    bias: np.ndarray  # (out_dim,) float32

    def __post_init__(self):
        w = np.ascontiguousarray(self.weight, dtype=np.float32)
        b = np.ascontiguousarray(self.bias, dtype=np.float32)
        if w.ndim != 2:
            raise ShapeMismatchError(f"head weight must be 2-D, got {w.ndim}-D")
        if b.shape != (w.shape[0],):
            raise ShapeMismatchError(f"bias shape {b.shape} does not match out_dim {w.shape[0]}")
        self.weight, self.bias = w, b

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]


@dataclass
class HeadGrads:
    """Gradients for one projection head, same shapes as the parameters."""

    d_weight: np.ndarray
    d_bias: np.ndarray


@dataclass
class OptimizerState:
    """AdamW first/second-moment accumulators and step counter for one head."""

    m_weight: np.ndarray
    v_weight: np.ndarray
    m_bias: np.ndarray
    v_bias: np.ndarray
    step: int = 0


def init_head(in_dim: int, out_dim: int, rng: np.random.Generator) -> ProjectionHead:
    """Gaussian init scaled by 1/sqrt(in_dim); zero bias."""
    w = rng.standard_normal((out_dim, in_dim)) / math.sqrt(in_dim)
    return ProjectionHead(w.astype(np.float32), np.zeros(out_dim, dtype=np.float32))


def init_optimizer_state(head: ProjectionHead) -> OptimizerState:
    """Zeroed moments matching the head's parameter shapes."""
    return OptimizerState(
        m_weight=np.zeros_like(head.weight, dtype=np.float64),
        v_weight=np.zeros_like(head.weight, dtype=np.float64),
        m_bias=np.zeros_like(head.bias, dtype=np.float64),
        v_bias=np.zeros_like(head.bias, dtype=np.float64),
    )


def _check_loss_inputs(v: EmbeddingMatrix, t: EmbeddingMatrix, temperature: float) -> None:
    if temperature <= 0:
        raise NonPositiveTemperatureError(f"temperature must be > 0, got {temperature}")
    if not v.normalized or not t.normalized:
        raise NotNormalizedError("info_nce expects both matrices row-normalized")
    if v.rows != t.rows or v.dim != t.dim:
        raise ShapeMismatchError(
            f"image matrix {v.rows}x{v.dim} vs text matrix {t.rows}x{t.dim}"
        )
    if v.rows == 0:
        raise EmptyInputError("info_nce needs at least one pair")


def _log_softmax(logits: np.ndarray, axis: int) -> np.ndarray:
    """Max-subtracted log-softmax along one axis, float64."""
    shifted = logits - np.max(logits, axis=axis, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=axis, keepdims=True))


def _info_nce_loss_raw(v: np.ndarray, t: np.ndarray, temperature: float) -> tuple[float, float, float]:
    """InfoNCE over raw row arrays (no normalization check) in float64."""
    logits = (np.asarray(v, dtype=np.float64) @ np.asarray(t, dtype=np.float64).T) / temperature
    diag = np.arange(logits.shape[0])
    loss_i2t = float(-np.mean(_log_softmax(logits, axis=1)[diag, diag]))
    loss_t2i = float(-np.mean(_log_softmax(logits, axis=0)[diag, diag]))
    return (loss_i2t + loss_t2i) / 2.0, loss_i2t, loss_t2i


def _info_nce_grad_raw(v: np.ndarray, t: np.ndarray, temperature: float) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradient of the symmetric loss wrt the raw v and t rows.

    With logits L = v t^T / tau, the gradient of the averaged loss wrt L is
    G = (softmax_rows(L) + softmax_cols(L) - 2I) / (2N), whence
    dv = G t / tau and dt = G^T v / tau.
    """
    v64 = np.asarray(v, dtype=np.float64)
    t64 = np.asarray(t, dtype=np.float64)
    n = v64.shape[0]
    logits = (v64 @ t64.T) / temperature
    p_row = np.exp(_log_softmax(logits, axis=1))
    p_col = np.exp(_log_softmax(logits, axis=0))
    g = (p_row + p_col - 2.0 * np.eye(n)) / (2.0 * n)
    return (g @ t64) / temperature, (g.T @ v64) / temperature


def info_nce_loss(
    v: EmbeddingMatrix, t: EmbeddingMatrix, temperature: float
) -> tuple[float, float, float]:
    """Symmetric InfoNCE loss; returns (loss, loss_i2t, loss_t2i).

    Pair i <-> i is the positive.  Each direction is a mean cross-entropy of
    the temperature-scaled softmax over similarities, computed with max
    subtraction; the combined loss is their average.
    """
    _check_loss_inputs(v, t, temperature)
    return _info_nce_loss_raw(v.data, t.data, temperature)


def info_nce_grad(
    v: EmbeddingMatrix, t: EmbeddingMatrix, temperature: float
) -> tuple[np.ndarray, np.ndarray]:
    """Exact analytic gradients (dV, dT) of info_nce_loss, float64 arrays.

    Gradients are with respect to the already-normalized entries; composition
    through normalization and the linear head is the caller's job via
    l2_normalize_backward and project_backward.
    """
    _check_loss_inputs(v, t, temperature)
    return _info_nce_grad_raw(v.data, t.data, temperature)


def project(features: EmbeddingMatrix, head: ProjectionHead) -> EmbeddingMatrix:
    """Apply the head to every row: out_i = weight @ x_i + bias (unnormalized)."""
    if features.dim != head.in_dim:
        raise ShapeMismatchError(f"feature dim {features.dim} != head in_dim {head.in_dim}")
    out = features.data.astype(np.float64) @ head.weight.astype(np.float64).T
    out += head.bias.astype(np.float64)
    return EmbeddingMatrix(out.astype(np.float32), normalized=False)


def project_backward(features: np.ndarray, d_out: np.ndarray) -> HeadGrads:
    """Head gradients given upstream d_out (N x out_dim): dW = d_out^T X, db = sum d_out.

    Features are frozen, so no gradient flows back into them.
    """
    x = np.asarray(features, dtype=np.float64)
    d = np.asarray(d_out, dtype=np.float64)
    if x.shape[0] != d.shape[0]:
        raise ShapeMismatchError(f"{x.shape[0]} feature rows vs {d.shape[0]} gradient rows")
    return HeadGrads(d_weight=d.T @ x, d_bias=d.sum(axis=0))


def effective_lr(cfg: TrainConfig) -> float:
    """Peak learning rate under the scaling rule: devices x batch x num / denom."""
    return cfg.devices * cfg.batch_per_device * cfg.base_lr_numerator / cfg.base_lr_denominator


def cosine_warmup_lr(step: int, steps_per_epoch: int, cfg: TrainConfig) -> float:
    """Linear warmup from 0 over the warmup epochs, then cosine decay to 0.

    With W = warmup_epochs x steps_per_epoch and S = epochs x steps_per_epoch:
    lr(step) = peak * step / W for step < W, else
    0.5 * peak * (1 + cos(pi * (step - W) / (S - W))).
    """
    if steps_per_epoch < 1:
        raise ValueError(f"steps_per_epoch must be >= 1, got {steps_per_epoch}")
    warm = cfg.warmup_epochs * steps_per_epoch
    total = cfg.epochs * steps_per_epoch
    if not 0 <= step < total:
        raise StepOutOfRangeError(f"step {step} outside [0, {total})")
    peak = effective_lr(cfg)
    if step < warm:
        return peak * step / warm
    return 0.5 * peak * (1.0 + math.cos(math.pi * (step - warm) / (total - warm)))


def _adamw_param(
    param: np.ndarray,
    grad: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
    t: int,
    lr: float,
    cfg: TrainConfig,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    g = np.asarray(grad, dtype=np.float64)
    m_new = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g
    v_new = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * g * g
    m_hat = m_new / (1.0 - cfg.adam_beta1**t)
    v_hat = v_new / (1.0 - cfg.adam_beta2**t)
    p = param.astype(np.float64)
    p = p - lr * cfg.weight_decay * p  # decoupled decay, separate from the Adam update
    p = p - lr * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)
    return p.astype(np.float32), m_new, v_new


def adamw_step(
    head: ProjectionHead,
    grads: HeadGrads,
    state: OptimizerState,
    lr: float,
    cfg: TrainConfig,
) -> tuple[ProjectionHead, OptimizerState]:
    """One AdamW update; returns the new head and state (inputs untouched)."""
    if grads.d_weight.shape != head.weight.shape or grads.d_bias.shape != head.bias.shape:
        raise ShapeMismatchError(
            f"grad shapes {grads.d_weight.shape}/{grads.d_bias.shape} do not match "
            f"head {head.weight.shape}/{head.bias.shape}"
        )
    t = state.step + 1
    w, mw, vw = _adamw_param(head.weight, grads.d_weight, state.m_weight, state.v_weight, t, lr, cfg)
    b, mb, vb = _adamw_param(head.bias, grads.d_bias, state.m_bias, state.v_bias, t, lr, cfg)
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
        raise FloatingPointError("non-finite parameter after optimizer step")
    return ProjectionHead(w, b), OptimizerState(mw, vw, mb, vb, step=t)


def fit(
    image_feats: EmbeddingMatrix,
    text_feats: EmbeddingMatrix,
    pairs: Sequence[tuple[int, int]] | None,
    cfg: TrainConfig,
    embed_dim: int = 16,
) -> tuple[ProjectionHead, ProjectionHead, list[dict]]:
    """Train both projection heads with symmetric InfoNCE.

    `pairs` aligns image rows with text rows as (image_index, text_index)
    tuples; None means row i pairs with row i (requires equal row counts).
    Each epoch shuffles the pairs with a generator derived from cfg.seed and
    drops the last incomplete global batch (a partial batch would silently
    change the contrastive objective's difficulty).

    Returns (image_head, text_head, history) where history holds one record
    per optimizer step: {"step", "lr", "loss", "loss_i2t", "loss_t2i"}.
    """
    if pairs is None:
        if image_feats.rows != text_feats.rows:
            raise ShapeMismatchError(
                f"{image_feats.rows} image rows vs {text_feats.rows} text rows with no pair map"
            )
        pair_arr = np.stack([np.arange(image_feats.rows), np.arange(image_feats.rows)], axis=1)
    else:
        pair_arr = np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2)
    n = pair_arr.shape[0]
    if n == 0:
        raise EmptyInputError("fit needs at least one aligned pair")
    if n < cfg.global_batch:
        raise EmptyInputError(
            f"global batch {cfg.global_batch} exceeds pair count {n}; "
            "every batch would be dropped"
        )

    x_img = image_feats.data.astype(np.float64)
    x_txt = text_feats.data.astype(np.float64)
    rng_init = derive_rng(cfg.seed, 0)
    rng_shuffle = derive_rng(cfg.seed, 1)
    image_head = init_head(image_feats.dim, embed_dim, rng_init)
    text_head = init_head(text_feats.dim, embed_dim, rng_init)
    state_i = init_optimizer_state(image_head)
    state_t = init_optimizer_state(text_head)

    steps_per_epoch = n // cfg.global_batch
    history: list[dict] = []
    step = 0
    for _epoch in range(cfg.epochs):
        order = rng_shuffle.permutation(n)
        for b in range(steps_per_epoch):
            batch = pair_arr[order[b * cfg.global_batch : (b + 1) * cfg.global_batch]]
            xb_i = x_img[batch[:, 0]]
            xb_t = x_txt[batch[:, 1]]

            proj_i = xb_i @ image_head.weight.astype(np.float64).T + image_head.bias.astype(np.float64)
            proj_t = xb_t @ text_head.weight.astype(np.float64).T + text_head.bias.astype(np.float64)
            unit_i, norms_i = l2_normalize_rows(proj_i)
            unit_t, norms_t = l2_normalize_rows(proj_t)

            loss, loss_i2t, loss_t2i = _info_nce_loss_raw(unit_i, unit_t, cfg.temperature)
            d_unit_i, d_unit_t = _info_nce_grad_raw(unit_i, unit_t, cfg.temperature)
            d_proj_i = l2_normalize_backward(unit_i, norms_i, d_unit_i)
            d_proj_t = l2_normalize_backward(unit_t, norms_t, d_unit_t)

            lr = cosine_warmup_lr(step, steps_per_epoch, cfg)
            image_head, state_i = adamw_step(
                image_head, project_backward(xb_i, d_proj_i), state_i, lr, cfg
            )
            text_head, state_t = adamw_step(
                text_head, project_backward(xb_t, d_proj_t), state_t, lr, cfg
            )
            history.append(
                {
                    "step": step,
                    "lr": lr,
                    "loss": loss,
                    "loss_i2t": loss_i2t,
                    "loss_t2i": loss_t2i,
                }
            )
            step += 1
    return image_head, text_head, history


def write_history(path: str | Path, history: list[dict]) -> None:
    """Dump a training history as JSONL, one step per line."""
    with open(path, "w", encoding="utf-8") as f:
        for rec in history:
            f.write(json.dumps(rec) + "\n")


def save_head(head: ProjectionHead, weight_path: str | Path, bias_path: str | Path) -> None:
    """Store a head as two RSEB files: the weight matrix and a 1 x D bias row."""
    write_embeddings(EmbeddingMatrix(head.weight), weight_path)
    write_embeddings(EmbeddingMatrix(head.bias.reshape(1, -1)), bias_path)


def load_head(weight_path: str | Path, bias_path: str | Path) -> ProjectionHead:
    """Inverse of save_head."""
    weight = read_embeddings(weight_path)
    bias = read_embeddings(bias_path)
    return ProjectionHead(weight.data, bias.data.reshape(-1))
