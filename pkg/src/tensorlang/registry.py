"""Named scalar functions and multiset aggregations available to expressions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class Function:
    name: str
    arity: int
    fn: Callable
    exact: bool  # safe on exact rationals (returns a rational)

    def __call__(self, *args):
        if len(args) != self.arity:
            raise EvaluationError(f"@{self.name} expects {self.arity} arguments, got {len(args)}")
        return self.fn(*args)


@dataclass(frozen=True)
class Aggregation:
    name: str
    fn: Callable
    exact: bool
    empty_ok: bool


def _relu(x):
    return x if x > 0 else x * 0


def _sign(x):
    return (x > 0) - (x < 0)


def _recip(x):
    if x == 0:
        raise EvaluationError("@recip has a pole at 0")
    return 1 / x


def _recip_sqrt(x):
    if x <= 0:
        raise EvaluationError(f"@recip_sqrt is undefined at {x}")
    return 1.0 / math.sqrt(float(x))


def _recip_sqrt_plus1(x):
    if x <= -1:
        raise EvaluationError(f"@recip_sqrt_plus1 is undefined at {x}")
    return 1.0 / math.sqrt(float(x) + 1.0)


def _log1p(x):
    if x <= -1:
        raise EvaluationError(f"@pna_amp is undefined at {x}")
    return math.log(float(x) + 1.0)


def _inv_log1p(x):
    if x <= -1 or x == 0:
        raise EvaluationError(f"@pna_att has a pole at {x}")
    return 1.0 / math.log(float(x) + 1.0)


def _mean(xs):
    return sum(xs) / len(xs)


def _stdv(xs):
    m = sum(float(x) for x in xs) / len(xs)
    return math.sqrt(sum((float(x) - m) ** 2 for x in xs) / len(xs))


class FunctionRegistry(dict):
    def register(self, name: str, arity: int, fn: Callable, exact: bool = False) -> Function:
        f = Function(name, arity, fn, exact)
        self[name] = f
        return f

    def register_mlp(self, name: str, payload: dict) -> list[str]:
        """Register one function ``name.j`` per output coordinate of an MLP payload."""
        mlp = MLP.from_payload(payload)
        names = []
        for j in range(mlp.out_dim):
            fname = f"{name}.{j}"
            self.register(fname, mlp.in_dim, _mlp_component(mlp, j), exact=False)
            names.append(fname)
        return names

    def copy(self) -> "FunctionRegistry":
        return FunctionRegistry(self)


class AggregationRegistry(dict):
    def register(self, name: str, fn: Callable, exact: bool = True, empty_ok: bool = False) -> Aggregation:
        a = Aggregation(name, fn, exact, empty_ok)
        self[name] = a
        return a

    def copy(self) -> "AggregationRegistry":
        return AggregationRegistry(self)


def _mlp_component(mlp, j):
    def f(*args):
        return float(mlp.forward([float(a) for a in args])[j])

    return f


ACTIVATIONS = {
    "relu": lambda v: [x if x > 0 else 0.0 for x in v],
    "id": lambda v: list(v),
    "identity": lambda v: list(v),
}


@dataclass
class MLP:
    """Affine layers ``y = act(x W + b)``; W is stored input-major (in_dim x out_dim)."""

    layers: list

    @classmethod
    def from_payload(cls, payload: dict) -> "MLP":
        if not isinstance(payload, dict) or "layers" not in payload or not payload["layers"]:
            raise ValueError("MLP payload needs a non-empty 'layers' list")
        layers = []
        prev = None
        for k, layer in enumerate(payload["layers"]):
            W = [[float(x) for x in row] for row in layer["W"]]
            b = [float(x) for x in layer.get("b", [0.0] * len(W[0]))]
            act = layer.get("act", "id")
            if act not in ACTIVATIONS:
                raise ValueError(f"layer {k}: unknown activation {act!r}")
            if len({len(r) for r in W}) != 1 or len(b) != len(W[0]):
                raise ValueError(f"layer {k}: inconsistent weight shapes")
            if prev is not None and len(W) != prev:
                raise ValueError(f"layer {k}: expects input width {len(W)}, previous layer gives {prev}")
            prev = len(W[0])
            layers.append((W, b, act))
        return cls(layers)

    @property
    def in_dim(self) -> int:
        return len(self.layers[0][0])

    @property
    def out_dim(self) -> int:
        return len(self.layers[-1][1])

    def forward(self, x: Sequence[float]) -> list:
        for W, b, act in self.layers:
            x = [sum(x[i] * W[i][j] for i in range(len(W))) + b[j] for j in range(len(b))]
            x = ACTIVATIONS[act](x)
        return x


def default_functions() -> FunctionRegistry:
    r = FunctionRegistry()
    r.register("relu", 1, _relu, exact=True)
    r.register("sign", 1, _sign, exact=True)
    r.register("identity", 1, lambda x: x, exact=True)
    r.register("recip", 1, _recip, exact=True)
    r.register("recip_sqrt", 1, _recip_sqrt)
    r.register("recip_sqrt_plus1", 1, _recip_sqrt_plus1)
    r.register("pna_amp", 1, _log1p)
    r.register("pna_att", 1, _inv_log1p)
    return r


def default_aggregations() -> AggregationRegistry:
    r = AggregationRegistry()
    r.register("sum", lambda xs: sum(xs, Fraction(0)) if not xs else sum(xs[1:], xs[0]), empty_ok=True)
    r.register("max", max)
    r.register("min", min)
    r.register("mean", _mean)
    r.register("stdv", _stdv, exact=False)
    return r


DEFAULT_FUNCTIONS = default_functions()
DEFAULT_AGGREGATIONS = default_aggregations()
