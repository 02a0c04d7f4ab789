"""Named parameter store and the plain-SGD update."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autograd import Var


class NonFiniteGradient(FloatingPointError):
    pass


@dataclass(frozen=True)
class SgdConfig:
    learning_rate: float = 0.0003

    def __post_init__(self):
        # 0 is allowed so a frozen-parameter dry run is expressible
        if self.learning_rate < 0:
            raise ValueError("learning_rate must not be negative")


class ParamStore:
    """Ordered mapping of parameter tensors with paired gradient buffers."""

    def __init__(self):
        self._values: dict[str, np.ndarray] = {}
        self._grads: dict[str, np.ndarray] = {}
        self.step = 0

    def add(self, name: str, value: np.ndarray) -> None:
        if name in self._values:
            raise KeyError(f"duplicate parameter {name!r}")
        arr = np.ascontiguousarray(value, dtype=np.float64)
        self._values[name] = arr
        self._grads[name] = np.zeros_like(arr)

    def names(self) -> list[str]:
        return list(self._values)

    def __contains__(self, name: str) -> bool:
        return name in self._values

    def value(self, name: str) -> np.ndarray:
        return self._values[name]

    def grad(self, name: str) -> np.ndarray:
        return self._grads[name]

    def set_value(self, name: str, value: np.ndarray) -> None:
        if self._values[name].shape != value.shape:
            raise ValueError(f"shape change for {name!r}")
        self._values[name][...] = value

    def as_vars(self) -> dict[str, Var]:
        """Fresh graph leaves sharing this store's value arrays."""
        return {name: Var(v) for name, v in self._values.items()}

    def accumulate(self, leaves: dict[str, Var]) -> None:
        """Fold grads from a backward pass into the store's buffers."""
        for name, var in leaves.items():
            if var.grad is not None:
                self._grads[name] += var.grad

    def zero_grads(self) -> None:
        for g in self._grads.values():
            g[...] = 0.0

    def n_params(self) -> int:
        return sum(v.size for v in self._values.values())


def init_uniform(store: ParamStore, name: str, shape: tuple[int, ...], fan_in: int, rng) -> None:
    """Uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)]."""
    bound = 1.0 / np.sqrt(fan_in)
    store.add(name, rng.uniform(-bound, bound, size=shape))


def sgd_step(store: ParamStore, cfg: SgdConfig) -> None:
    """theta <- theta - lr * grad, then zero grads and bump the step counter."""
    for name in store.names():
        g = store.grad(name)
        if not np.isfinite(g).all():
            raise NonFiniteGradient(f"non-finite gradient for {name!r}")
        store.value(name)[...] -= cfg.learning_rate * g
        g[...] = 0.0
    store.step += 1
