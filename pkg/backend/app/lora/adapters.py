"""
Low-rank adapters on a frozen dense layer.

A layer holds ``W`` (d×k). An adapter holds ``A`` (d×r), ``B`` (k×r) and a
scale ``alpha``; the adapted weight is ``W + (alpha / r) A Bᵀ``.
"""
import logging
from typing import List, Literal

import numpy as np
from pydantic import field_validator, model_validator

from app.models.base import FrozenModel
from app.services.errors import ShapeMismatch, UsageError

logger = logging.getLogger(__name__)

InitScheme = Literal["zero", "gauss"]

RECOMMENDED_RANK = (4, 16)
RECOMMENDED_ALPHA = (8.0, 32.0)


def _frozen_matrix(value: np.ndarray, name: str) -> np.ndarray:
    matrix = np.array(value, dtype=np.float64, copy=True)
    if matrix.ndim != 2:
        raise ShapeMismatch(f"{name} must be a matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ValueError(f"{name} has non-finite entries")
    matrix.flags.writeable = False
    return matrix


class DenseLayer(FrozenModel):
    """A frozen linear map ``x -> W x``."""

    W: np.ndarray

    @field_validator("W", mode="before")
    @classmethod
    def freeze_weight(cls, value):
        return _frozen_matrix(value, "W")

    @property
    def d(self) -> int:
        return self.W.shape[0]

    @property
    def k(self) -> int:
        return self.W.shape[1]

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.k,):
            raise ShapeMismatch(
                f"input of shape {x.shape} does not fit a {self.d}x{self.k} layer"
            )
        return self.W @ x


class AdapterPair(FrozenModel):
    A: np.ndarray
    B: np.ndarray
    alpha: float

    @field_validator("A", "B", mode="before")
    @classmethod
    def freeze_factor(cls, value, info):
        return _frozen_matrix(value, info.field_name)

    @model_validator(mode="after")
    def check_rank(self) -> "AdapterPair":
        if self.A.shape[1] != self.B.shape[1]:
            raise ShapeMismatch(
                f"A has rank {self.A.shape[1]} but B has rank {self.B.shape[1]}"
            )
        r = self.A.shape[1]
        if r < 1 or r > min(self.A.shape[0], self.B.shape[0]):
            raise ShapeMismatch(
                f"rank {r} outside 1..min(d, k) "
                f"for d={self.A.shape[0]}, k={self.B.shape[0]}"
            )
        return self

    @property
    def r(self) -> int:
        return self.A.shape[1]

    @property
    def scale(self) -> float:
        return self.alpha / self.r

    def delta(self) -> np.ndarray:
        """The dense update ``(alpha / r) A Bᵀ``."""
        return self.scale * (self.A @ self.B.T)

    def replace(self, A: np.ndarray, B: np.ndarray) -> "AdapterPair":
        return AdapterPair(A=A, B=B, alpha=self.alpha)


class ParamCounts(FrozenModel):
    full: int
    lora: int
    ratio: float

    @property
    def reduction(self) -> float:
        return 1.0 - self.ratio

    def to_json_dict(self) -> dict:
        return {
            "full": self.full,
            "lora": self.lora,
            "ratio": self.ratio,
            "reduction": self.reduction,
        }


def _check_fit(layer: DenseLayer, adapter: AdapterPair) -> None:
    if adapter.A.shape[0] != layer.d or adapter.B.shape[0] != layer.k:
        raise ShapeMismatch(
            f"adapter for {adapter.A.shape[0]}x{adapter.B.shape[0]} "
            f"does not fit a {layer.d}x{layer.k} layer"
        )


def lora_forward(layer: DenseLayer, adapter: AdapterPair, x: np.ndarray) -> np.ndarray:
    """
    Adapted forward pass ``W x + (alpha / r) A (Bᵀ x)``.

    The low-rank path projects to the r-dimensional ``z = Bᵀ x`` first and
    never materializes ``A Bᵀ``.

    Raises:
        ShapeMismatch: the adapter or input does not fit the layer
    """
    _check_fit(layer, adapter)
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (layer.k,):
        raise ShapeMismatch(
            f"input of shape {x.shape} does not fit a {layer.d}x{layer.k} layer"
        )
    z = adapter.B.T @ x
    return layer.W @ x + adapter.scale * (adapter.A @ z)


def forward_rows(layer: DenseLayer, adapter: AdapterPair, inputs: np.ndarray):
    """Batched forward over the rows of ``inputs`` (n×k).

    Returns (outputs n×d, z n×r).
    """
    _check_fit(layer, adapter)
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 2 or inputs.shape[1] != layer.k:
        raise ShapeMismatch(
            f"inputs of shape {inputs.shape} do not fit a {layer.d}x{layer.k} layer"
        )
    z = inputs @ adapter.B
    return inputs @ layer.W.T + adapter.scale * (z @ adapter.A.T), z


def lora_merge(layer: DenseLayer, adapter: AdapterPair) -> DenseLayer:
    """Fold the adapter into a new dense layer; ``layer`` is left untouched."""
    _check_fit(layer, adapter)
    return DenseLayer(W=layer.W + adapter.delta())


def init_adapters(
    d: int,
    k: int,
    r: int,
    alpha: float,
    init: InitScheme = "zero",
    std: float = 0.1,
    seed: int = 0,
) -> AdapterPair:
    """
    Fresh adapters with ``A`` drawn from N(0, std²).

    ``init="zero"`` starts ``B`` at zero so the adapted layer equals the base
    layer at step 0; ``init="gauss"`` draws ``B`` from the same distribution.
    """
    if r < 1 or r > min(d, k):
        raise UsageError(f"rank {r} must lie in 1..{min(d, k)} for a {d}x{k} layer")
    rng = np.random.default_rng(seed)
    A = rng.normal(0.0, std, size=(d, r))
    B = rng.normal(0.0, std, size=(k, r)) if init == "gauss" else np.zeros((k, r))
    return AdapterPair(A=A, B=B, alpha=alpha)


def param_counts(d: int, k: int, r: int) -> ParamCounts:
    """Trainable parameters of a full ``d×k`` update against a rank-``r`` adapter."""
    if min(d, k, r) < 1:
        raise UsageError(f"dimensions must be positive, got d={d}, k={k}, r={r}")
    full = d * k
    lora = r * (d + k)
    return ParamCounts(full=full, lora=lora, ratio=lora / full)


def range_warnings(r: int, alpha: float) -> List[str]:
    """Advisory messages for rank or alpha outside the usual ranges."""
    warnings: List[str] = []
    low, high = RECOMMENDED_RANK
    if not low <= r <= high:
        warnings.append(f"rank {r} is outside the recommended range {low}..{high}")
    low_alpha, high_alpha = RECOMMENDED_ALPHA
    if not low_alpha <= alpha <= high_alpha:
        warnings.append(
            f"alpha {alpha:g} is outside the recommended range "
            f"{low_alpha:g}..{high_alpha:g}"
        )
    for message in warnings:
        logger.warning(message, extra={"rank": r, "alpha": alpha})
    return warnings
