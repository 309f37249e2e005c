"""
Adapter training: token NLL, AdamW and a toy next-token task.

Only ``A`` and ``B`` receive gradients and optimizer state; the base layer
is never written.
"""
import logging
import time
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import Field, field_validator

from app.lora.adapters import AdapterPair, DenseLayer, forward_rows
from app.models.base import FrozenModel
from app.services.errors import IndexOutOfRange, ShapeMismatch, UsageError

logger = logging.getLogger(__name__)

Reduction = Literal["sum", "mean"]
Params = Dict[str, np.ndarray]


class TrainConfig(FrozenModel):
    learning_rate: float = Field(default=1e-4, gt=0.0)
    weight_decay: float = Field(default=0.01, ge=0.0)
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    eps: float = Field(default=1e-8, gt=0.0)
    # zero steps returns the initial adapters with an empty trace
    steps: int = Field(default=200, ge=0)
    batch_size: int = Field(default=8, ge=1)

    @classmethod
    def from_settings(cls, lora_settings, **overrides) -> "TrainConfig":
        values = {name: getattr(lora_settings, name) for name in cls.model_fields}
        values.update(
            {key: value for key, value in overrides.items() if value is not None}
        )
        return cls(**values)


class AdamState(FrozenModel):
    step: int = 0
    m: Dict[str, np.ndarray] = Field(default_factory=dict)
    v: Dict[str, np.ndarray] = Field(default_factory=dict)

    @classmethod
    def zeros_like(cls, params: Params) -> "AdamState":
        return cls(
            m={name: np.zeros_like(value) for name, value in params.items()},
            v={name: np.zeros_like(value) for name, value in params.items()},
        )


class ToyDataset(FrozenModel):
    """One-hot token inputs (n×k) and their next-token targets."""

    inputs: np.ndarray
    targets: Tuple[int, ...]

    @field_validator("inputs", mode="before")
    @classmethod
    def as_matrix(cls, value):
        matrix = np.array(value, dtype=np.float64, copy=True)
        if matrix.ndim != 2:
            raise ShapeMismatch(f"inputs must be a matrix, got shape {matrix.shape}")
        return matrix

    def __len__(self) -> int:
        return len(self.targets)

    def batch(self, step: int, batch_size: int) -> Tuple[np.ndarray, List[int]]:
        """Cyclic slice of ``batch_size`` examples for ``step``."""
        indices = [(step * batch_size + j) % len(self) for j in range(batch_size)]
        return self.inputs[indices], [self.targets[i] for i in indices]


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


def _check_targets(logits: np.ndarray, targets: Sequence[int]) -> None:
    if logits.ndim != 2 or logits.shape[0] != len(targets):
        raise ShapeMismatch(
            f"{len(targets)} targets for logits of shape {logits.shape}"
        )
    vocab = logits.shape[1]
    for i, target in enumerate(targets):
        if not 0 <= target < vocab:
            raise IndexOutOfRange(
                f"target {target} at row {i} outside vocabulary of size {vocab}"
            )


def nll_loss(logit_rows, targets: Sequence[int], reduction: Reduction = "sum") -> float:
    """
    Negative log-likelihood ``-Σ log softmax(logits_i)[y_i]``.

    Raises:
        ShapeMismatch: row and target counts differ
        IndexOutOfRange: a target is not a valid class index
    """
    logits = np.asarray(logit_rows, dtype=np.float64)
    if len(targets) == 0:
        return 0.0
    _check_targets(logits, targets)
    log_probs = log_softmax(logits)
    total = -float(np.sum(log_probs[np.arange(len(targets)), list(targets)]))
    return total / len(targets) if reduction == "mean" else total


def loss_and_grads(
    layer: DenseLayer,
    adapter: AdapterPair,
    inputs: np.ndarray,
    targets: Sequence[int],
) -> Tuple[float, Params]:
    """
    Mean NLL of the adapted layer over a batch and its gradients in A and B.

    With ``G = (softmax(Y) - onehot) / n`` and ``z = X B``:
    ``dA = s Gᵀ z`` and ``dB = s Xᵀ G A`` where ``s = alpha / r``.
    """
    outputs, z = forward_rows(layer, adapter, inputs)
    loss = nll_loss(outputs, targets, reduction="mean")
    n = len(targets)
    grad_outputs = np.exp(log_softmax(outputs))
    grad_outputs[np.arange(n), list(targets)] -= 1.0
    grad_outputs /= n
    grad_A = adapter.scale * (grad_outputs.T @ z)
    x = np.asarray(inputs, dtype=np.float64)
    grad_B = adapter.scale * (x.T @ (grad_outputs @ adapter.A))
    return loss, {"A": grad_A, "B": grad_B}


def adamw_step(
    params: Params,
    grads: Params,
    state: AdamState,
    cfg: TrainConfig,
) -> Tuple[Params, AdamState]:
    """
    One AdamW update with bias-corrected moments and decoupled weight decay.

    Inputs are not modified; new parameter and state dictionaries are returned.

    Raises:
        ShapeMismatch: parameter, gradient and moment shapes disagree
    """
    if set(params) != set(grads):
        raise ShapeMismatch(
            f"gradients for {sorted(grads)} do not match parameters {sorted(params)}"
        )
    if not state.m:
        state = AdamState.zeros_like(params)
    step = state.step + 1
    new_params: Params = {}
    new_m: Params = {}
    new_v: Params = {}
    for name, value in params.items():
        grad = np.asarray(grads[name], dtype=np.float64)
        if grad.shape != value.shape or state.m[name].shape != value.shape:
            raise ShapeMismatch(
                f"gradient for '{name}' has shape {grad.shape}, "
                f"expected {value.shape}"
            )
        m = cfg.beta1 * state.m[name] + (1.0 - cfg.beta1) * grad
        v = cfg.beta2 * state.v[name] + (1.0 - cfg.beta2) * grad * grad
        m_hat = m / (1.0 - cfg.beta1 ** step)
        v_hat = v / (1.0 - cfg.beta2 ** step)
        new_params[name] = value - cfg.learning_rate * (
            m_hat / (np.sqrt(v_hat) + cfg.eps) + cfg.weight_decay * value
        )
        new_m[name] = m
        new_v[name] = v
    return new_params, AdamState(step=step, m=new_m, v=new_v)


def train_adapters(
    layer: DenseLayer,
    data: ToyDataset,
    cfg: TrainConfig,
    adapter: AdapterPair,
) -> Tuple[AdapterPair, List[float]]:
    """
    Train ``adapter`` on ``data`` with the layer frozen.

    Each step takes the next cyclic batch, records its mean loss before the
    update, then applies AdamW to A and B.

    Returns:
        The trained adapters and the per-step loss trace
    """
    if len(data) == 0:
        raise UsageError("training data is empty")
    start_time = time.time()
    params: Params = {"A": np.array(adapter.A), "B": np.array(adapter.B)}
    state = AdamState.zeros_like(params)
    losses: List[float] = []
    current = adapter
    for step in range(cfg.steps):
        inputs, targets = data.batch(step, cfg.batch_size)
        loss, grads = loss_and_grads(layer, current, inputs, targets)
        losses.append(loss)
        params, state = adamw_step(params, grads, state, cfg)
        current = adapter.replace(params["A"], params["B"])

    logger.info(
        "Trained adapters",
        extra={
            "steps": cfg.steps,
            "rank": adapter.r,
            "initial_loss": losses[0] if losses else None,
            "final_loss": losses[-1] if losses else None,
            "process_time": round(time.time() - start_time, 4),
        },
    )
    return current, losses


def make_toy_dataset(
    d: int, k: int, rank: int, seed: int = 0, size: Optional[int] = None
) -> ToyDataset:
    """
    Next-token pairs over ``k`` input tokens whose targets collapse groups of
    consecutive tokens onto ``rank`` output classes (8 tokens, rank 4 maps
    ``t -> t // 2``). The mapping matrix has rank ``rank``.
    """
    if rank < 1 or rank > min(d, k):
        raise UsageError(f"rank {rank} must lie in 1..{min(d, k)}")
    size = size or 4 * k
    rng = np.random.default_rng(seed)
    tokens = rng.integers(0, k, size=size)
    group = max(1, k // rank)
    inputs = np.zeros((size, k))
    inputs[np.arange(size), tokens] = 1.0
    targets = tuple(min(int(t) // group, rank - 1) for t in tokens)
    return ToyDataset(inputs=inputs, targets=targets)


def make_base_layer(d: int, k: int, seed: int = 0, scale: float = 0.1) -> DenseLayer:
    """A small random frozen layer to adapt."""
    rng = np.random.default_rng(seed + 1)
    return DenseLayer(W=rng.normal(0.0, scale, size=(d, k)))
