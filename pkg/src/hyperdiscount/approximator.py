"""Small numpy function approximators: rectified value heads and a softmax policy.

Each head owns one flat parameter vector; the weight matrices are views into
it, so an update is a single in-place vector add.  ``hidden=0`` gives a
linear head, which is what the tabular tests use with one-hot features.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigurationError, InvalidInputError

INIT_SCALE = 0.1


class MLPHead:
    """One-hidden-layer tanh network (or a linear map when ``hidden == 0``)."""

    def __init__(self, n_inputs: int, n_outputs: int, hidden: int = 32, rng=None, params=None):
        if n_inputs < 1 or n_outputs < 1 or hidden < 0:
            raise ConfigurationError(f"bad head shape ({n_inputs}, {hidden}, {n_outputs})")
        self.n_inputs = n_inputs
        self.n_outputs = n_outputs
        self.hidden = hidden
        if params is None:
            params = self._init_params(rng)
        params = np.array(params, dtype=float)
        if params.shape != (self.n_params,):
            raise ConfigurationError(f"expected {self.n_params} params, got shape {params.shape}")
        self.params = params
        self._bind_views()

    @property
    def shapes(self) -> list[tuple[int, ...]]:
        n, h, m = self.n_inputs, self.hidden, self.n_outputs
        if h == 0:
            return [(m, n), (m,)]
        return [(h, n), (h,), (m, h), (m,)]

    @property
    def n_params(self) -> int:
        return sum(math.prod(s) for s in self.shapes)

    def _init_params(self, rng) -> np.ndarray:
        rng = np.random.default_rng() if rng is None else rng
        parts = []
        shapes = self.shapes
        for i, shape in enumerate(shapes):
            if i == len(shapes) - 1:
                parts.append(np.zeros(shape))  # output bias
            else:
                parts.append(rng.uniform(-INIT_SCALE, INIT_SCALE, size=shape))
        return np.concatenate([p.ravel() for p in parts])

    def _split(self, flat: np.ndarray) -> list[np.ndarray]:
        views = []
        offset = 0
        for shape in self.shapes:
            size = math.prod(shape)
            views.append(flat[offset:offset + size].reshape(shape))
            offset += size
        return views

    def _bind_views(self) -> None:
        # backward() fills self._grad through the g_* views; callers copy if they keep it
        self._grad = np.zeros_like(self.params)
        if self.hidden == 0:
            self.w_out, self.b_out = self._split(self.params)
            self.g_w_out, self.g_b_out = self._split(self._grad)
            self.w_in = self.b_in = None
        else:
            self.w_in, self.b_in, self.w_out, self.b_out = self._split(self.params)
            self.g_w_in, self.g_b_in, self.g_w_out, self.g_b_out = self._split(self._grad)

    # views must be rebuilt on copy/pickle, otherwise they detach from params
    def __getstate__(self):
        return {"n_inputs": self.n_inputs, "n_outputs": self.n_outputs,
                "hidden": self.hidden, "params": self.params.copy()}

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._bind_views()

    def _check_features(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_inputs,):
            raise ConfigurationError(f"expected {self.n_inputs} features, got shape {x.shape}")
        return x

    def forward(self, x):
        """Return ``(outputs, hidden_activations)``; the second is reused by ``backward``."""
        return self.forward_unchecked(self._check_features(x))

    def forward_unchecked(self, x: np.ndarray):
        if self.hidden == 0:
            return self.w_out @ x + self.b_out, x
        h = np.tanh(self.w_in @ x + self.b_in)
        return self.w_out @ h + self.b_out, h

    def forward_rows(self, xs: np.ndarray):
        """Batched ``forward_unchecked`` over the rows of ``xs``."""
        if self.hidden == 0:
            return xs @ self.w_out.T + self.b_out, xs
        hs = np.tanh(xs @ self.w_in.T + self.b_in)
        return hs @ self.w_out.T + self.b_out, hs

    def backward(self, x, h, d_out) -> np.ndarray:
        """Vector-Jacobian product: gradient of ``d_out . outputs`` w.r.t. params.

        The result lives in a buffer owned by the head and is overwritten by
        the next call.
        """
        if self.hidden == 0:
            np.multiply.outer(d_out, x, out=self.g_w_out)
            self.g_b_out[:] = d_out
            return self._grad
        d_pre = (d_out @ self.w_out) * (1.0 - h * h)
        np.multiply.outer(d_pre, x, out=self.g_w_in)
        self.g_b_in[:] = d_pre
        np.multiply.outer(d_out, h, out=self.g_w_out)
        self.g_b_out[:] = d_out
        return self._grad


class Critic:
    """Non-negative value head: ``value = max(0, raw)``."""

    def __init__(self, n_inputs: int, hidden: int = 32, rng=None, params=None):
        self.head = MLPHead(n_inputs, 1, hidden, rng=rng, params=params)

    @property
    def params(self) -> np.ndarray:
        return self.head.params

    def forward(self, features) -> tuple[float, float]:
        out, _ = self.head.forward(features)
        raw = float(out[0])
        return raw, max(0.0, raw)

    def value(self, features) -> float:
        return self.forward(features)[1]

    def raw_gradient(self, features) -> np.ndarray:
        x = np.asarray(features, dtype=float)
        _, h = self.head.forward(x)
        return self.head.backward(x, h, np.ones(1)).copy()

    def step_direction(self, features) -> tuple[float, np.ndarray]:
        """Raw output and the rectified (sub)gradient used by the TD update."""
        x = np.asarray(features, dtype=float)
        out, h = self.head.forward(x)
        raw = float(out[0])
        if raw < 0.0:
            return raw, np.zeros(self.head.n_params)
        return raw, self.head.backward(x, h, np.ones(1)).copy()

    def update(self, features, delta: float, lr: float) -> None:
        """Semi-gradient step ``params += lr * delta * d value / d params``."""
        if not math.isfinite(delta):
            raise InvalidInputError(f"delta must be finite, got {delta!r}")
        if lr <= 0:
            raise InvalidInputError(f"lr must be > 0, got {lr}")
        _, grad = self.step_direction(features)
        self.head.params += (lr * delta) * grad


def softmax(scores: np.ndarray) -> np.ndarray:
    z = np.exp(scores - scores.max())
    return z / z.sum()


class Policy:
    """Softmax policy over a discrete action set."""

    def __init__(self, n_inputs: int, n_actions: int, hidden: int = 32, rng=None, params=None):
        self.head = MLPHead(n_inputs, n_actions, hidden, rng=rng, params=params)

    @property
    def params(self) -> np.ndarray:
        return self.head.params

    @property
    def n_actions(self) -> int:
        return self.head.n_outputs

    def forward(self, features) -> np.ndarray:
        scores, _ = self.head.forward(features)
        return softmax(scores)

    def log_prob_gradient(self, features, action: int) -> np.ndarray:
        x = np.asarray(features, dtype=float)
        scores, h = self.head.forward(x)
        d_scores = -softmax(scores)
        d_scores[action] += 1.0
        return self.head.backward(x, h, d_scores).copy()

    def update(self, features, action: int, advantage: float, lr: float) -> None:
        if not math.isfinite(advantage):
            raise InvalidInputError(f"advantage must be finite, got {advantage!r}")
        if lr <= 0:
            raise InvalidInputError(f"lr must be > 0, got {lr}")
        if not 0 <= action < self.n_actions:
            raise InvalidInputError(f"action {action} outside [0, {self.n_actions})")
        self.head.params += (lr * advantage) * self.log_prob_gradient(features, action)


class Adam:
    """Adam moment estimates for one flat parameter vector (ascent direction in, step out)."""

    def __init__(self, size: int, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, direction: np.ndarray) -> np.ndarray:
        """Return the parameter increment for ``direction`` and advance the moments."""
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        self.m *= b1
        self.m += (1.0 - b1) * direction
        self.v *= b2
        self.v += (1.0 - b2) * (direction * direction)
        # bias corrections folded into scalars: lr * m_hat / (sqrt(v_hat) + eps)
        c1 = 1.0 - b1 ** self.t
        c2 = math.sqrt(1.0 - b2 ** self.t)
        denom = np.sqrt(self.v)
        denom += self.eps * c2
        return (self.lr * c2 / c1) * self.m / denom


def near_kink(raw: float, eps: float) -> bool:
    """True when a central difference of width ``eps`` could straddle the rectifier."""
    return abs(raw) <= 10.0 * eps


def finite_diff_check(fn, grad: np.ndarray, params: np.ndarray, eps: float = 1e-5) -> float:
    """Max relative error between ``grad`` and central differences of ``fn``.

    ``fn`` is evaluated with ``params`` perturbed in place and restored after
    each coordinate, so pass the live parameter vector of the head.
    """
    if not 1e-7 <= eps <= 1e-3:
        raise InvalidInputError(f"eps must be in [1e-7, 1e-3], got {eps}")
    worst = 0.0
    for i in range(params.size):
        saved = params[i]
        params[i] = saved + eps
        f_plus = fn()
        params[i] = saved - eps
        f_minus = fn()
        params[i] = saved
        numeric = (f_plus - f_minus) / (2.0 * eps)
        scale = max(abs(numeric), abs(grad[i]), 1e-8)
        worst = max(worst, abs(numeric - grad[i]) / scale)
    return worst


def export_params(head: MLPHead, name: str) -> str:
    """Text snapshot: one header line then one value per line (``repr`` round-trips)."""
    shapes = ",".join("x".join(str(d) for d in s) for s in head.shapes)
    lines = [f"# head={name} inputs={head.n_inputs} hidden={head.hidden} "
             f"outputs={head.n_outputs} shapes={shapes}"]
    lines.extend(repr(float(v)) for v in head.params)
    return "\n".join(lines) + "\n"


def import_params(text: str) -> tuple[str, MLPHead]:
    lines = text.strip().splitlines()
    if not lines or not lines[0].startswith("# "):
        raise ConfigurationError("missing snapshot header")
    fields = dict(item.split("=", 1) for item in lines[0][2:].split())
    head = MLPHead(int(fields["inputs"]), int(fields["outputs"]), int(fields["hidden"]),
                   params=[float(v) for v in lines[1:]])
    expected = ",".join("x".join(str(d) for d in s) for s in head.shapes)
    if fields.get("shapes") != expected:
        raise ConfigurationError(f"shape header {fields.get('shapes')} != {expected}")
    return fields["head"], head
