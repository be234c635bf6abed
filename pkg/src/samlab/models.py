"""Differentiable models with hand-written analytic gradients.

Every model exposes loss/grad/value_and_grad over (flat theta, batch)
plus a declared parameter layout.  Gradients are manual backprop; the
finite-difference checkers at the bottom of this module are the ground
truth they are tested against.

Batches are (X, y) pairs: X is an (n, p) float64 matrix, y an (n,)
integer label vector (classifiers) or a float target matrix (mse).
The quadratic diagnostics ignore batch contents or, in the anchored
variant, read X rows as anchor points.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, InvalidModelError
from .layouts import ParameterLayout, Segment, dense_layout
from .vectors import DTYPE

ACTIVATIONS = ("tanh", "relu")
LOSS_KINDS = ("cross-entropy", "mse")


def _check_batch(batch):
    if batch is None:
        raise DimensionError("this model needs a batch; got None")
    X, y = batch
    X = np.asarray(X, dtype=DTYPE)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DimensionError(f"batch features must be a non-empty (n, p) matrix, got shape {X.shape}")
    return X, y


class DifferentiableModel:
    """Interface: loss(theta, batch), grad(theta, batch), layout."""

    layout: ParameterLayout
    loss_kind: str
    descriptor: str
    num_classes: int | None = None

    @property
    def dim(self) -> int:
        return self.layout.total

    def _check_theta(self, theta) -> np.ndarray:
        theta = np.ascontiguousarray(theta, dtype=DTYPE)
        if theta.shape != (self.dim,):
            raise DimensionError(f"{self.descriptor}: theta has shape {theta.shape}, expected ({self.dim},)")
        return theta

    def loss(self, theta, batch) -> float:
        raise NotImplementedError

    def value_and_grad(self, theta, batch) -> tuple[float, np.ndarray]:
        raise NotImplementedError

    def grad(self, theta, batch) -> np.ndarray:
        return self.value_and_grad(theta, batch)[1]

    def init_theta(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError


class QuadraticModel(DifferentiableModel):
    """loss(theta, _) = 1/2 sum_i A_i (theta_i - c_i)^2, batch ignored."""

    def __init__(self, a_diag, center):
        a_diag = np.ascontiguousarray(a_diag, dtype=DTYPE)
        center = np.ascontiguousarray(center, dtype=DTYPE)
        if a_diag.ndim != 1 or a_diag.shape != center.shape:
            raise DimensionError(f"curvature and center must be equal-length vectors, got {a_diag.shape} vs {center.shape}")
        if np.any(a_diag <= 0):
            raise InvalidModelError("quadratic curvature entries must be > 0")
        self.a_diag = a_diag
        self.center = center
        self.layout = dense_layout([("quad", "dense-weight", a_diag.shape[0])])
        self.loss_kind = "mse"
        self.descriptor = f"quadratic(d={a_diag.shape[0]})"

    def loss(self, theta, batch=None) -> float:
        theta = self._check_theta(theta)
        r = theta - self.center
        return float(0.5 * np.dot(self.a_diag * r, r))

    def value_and_grad(self, theta, batch=None):
        theta = self._check_theta(theta)
        r = theta - self.center
        g = self.a_diag * r
        return float(0.5 * np.dot(g, r)), g

    def grad(self, theta, batch=None) -> np.ndarray:
        return self.value_and_grad(theta, batch)[1]

    def init_theta(self, rng):
        return self.center + rng.uniform(-1.0, 1.0, size=self.dim)


class AnchoredQuadraticModel(DifferentiableModel):
    """loss(theta, (X, _)) = mean over rows x of 1/2 sum_i A_i (theta_i - x_i)^2.

    The batch rows act as anchor points, so train and validation batches
    induce genuinely different losses; the Hessian is diag(A) everywhere.
    """

    def __init__(self, a_diag):
        a_diag = np.ascontiguousarray(a_diag, dtype=DTYPE)
        if a_diag.ndim != 1:
            raise DimensionError("curvature must be a 1-D vector")
        if np.any(a_diag <= 0):
            raise InvalidModelError("quadratic curvature entries must be > 0")
        self.a_diag = a_diag
        self.layout = dense_layout([("quad", "dense-weight", a_diag.shape[0])])
        self.loss_kind = "mse"
        self.descriptor = f"anchored-quadratic(d={a_diag.shape[0]})"

    def loss(self, theta, batch) -> float:
        theta = self._check_theta(theta)
        X, _ = _check_batch(batch)
        r = theta[None, :] - X
        return float(0.5 * np.mean(np.sum(r * r * self.a_diag[None, :], axis=1)))

    def value_and_grad(self, theta, batch):
        theta = self._check_theta(theta)
        X, _ = _check_batch(batch)
        r = theta[None, :] - X
        value = float(0.5 * np.mean(np.sum(r * r * self.a_diag[None, :], axis=1)))
        g = self.a_diag * (theta - X.mean(axis=0))
        return value, g

    def grad(self, theta, batch) -> np.ndarray:
        return self.value_and_grad(theta, batch)[1]

    def init_theta(self, rng):
        return rng.uniform(-1.0, 1.0, size=self.dim)


def _one_hot(y, num_classes: int) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim == 2:
        return np.asarray(y, dtype=DTYPE)
    out = np.zeros((y.shape[0], num_classes), dtype=DTYPE)
    out[np.arange(y.shape[0]), y.astype(np.int64)] = 1.0
    return out


class MlpModel(DifferentiableModel):
    """Fully-connected network, manual backprop, linear output layer.

    dims = [p, h_1, ..., C]; hidden activations tanh or relu (relu
    subgradient at 0 is 0); loss is mean cross-entropy on logits or
    mean 1/2 squared error per example.
    """

    def __init__(self, dims, activation="tanh", loss_kind="cross-entropy"):
        dims = [int(d) for d in dims]
        if len(dims) < 2 or any(d < 1 for d in dims):
            raise InvalidModelError(f"mlp needs >= 2 positive layer widths, got {dims}")
        if activation not in ACTIVATIONS:
            raise InvalidModelError(f"unknown activation {activation!r}; choose from {ACTIVATIONS}")
        if loss_kind not in LOSS_KINDS:
            raise InvalidModelError(f"unknown loss kind {loss_kind!r}; choose from {LOSS_KINDS}")
        self.dims = dims
        self.activation = activation
        self.loss_kind = loss_kind
        self.num_classes = dims[-1] if loss_kind == "cross-entropy" else None
        segments = []
        for layer in range(len(dims) - 1):
            segments += [(f"w{layer}", "dense-weight", dims[layer] * dims[layer + 1]),
                         (f"b{layer}", "bias", dims[layer + 1])]
        self.layout = dense_layout(segments)
        arch = "-".join(str(d) for d in dims)
        self.descriptor = f"mlp({arch}, {activation}, {loss_kind})"

    def _unpack(self, theta):
        params = []
        offset = 0
        for layer in range(len(self.dims) - 1):
            fan_in, fan_out = self.dims[layer], self.dims[layer + 1]
            w = theta[offset:offset + fan_in * fan_out].reshape(fan_in, fan_out)
            offset += fan_in * fan_out
            b = theta[offset:offset + fan_out]
            offset += fan_out
            params.append((w, b))
        return params

    def _forward(self, params, X):
        hidden = []
        a = X
        for w, b in params[:-1]:
            z = a @ w + b
            if self.activation == "tanh":
                a = np.tanh(z)
                hidden.append((None, a))
            else:
                a = np.where(z > 0, z, 0.0)
                hidden.append((z, a))
        w, b = params[-1]
        logits = a @ w + b
        return hidden, logits

    def logits(self, theta, X) -> np.ndarray:
        theta = self._check_theta(theta)
        X = np.asarray(X, dtype=DTYPE)
        return self._forward(self._unpack(theta), X)[1]

    def _loss_from_logits(self, logits, y):
        n = logits.shape[0]
        if self.loss_kind == "cross-entropy":
            m = logits.max(axis=1, keepdims=True)
            shifted = logits - m
            lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
            log_probs = shifted - lse
            labels = np.asarray(y, dtype=np.int64)
            value = float(-log_probs[np.arange(n), labels].mean())
            return value, log_probs
        targets = _one_hot(y, self.dims[-1])
        diff = logits - targets
        return float(0.5 * np.sum(diff * diff) / n), diff

    def loss(self, theta, batch) -> float:
        theta = self._check_theta(theta)
        X, y = _check_batch(batch)
        _, logits = self._forward(self._unpack(theta), X)
        return self._loss_from_logits(logits, y)[0]

    def value_and_grad(self, theta, batch):
        theta = self._check_theta(theta)
        X, y = _check_batch(batch)
        params = self._unpack(theta)
        hidden, logits = self._forward(params, X)
        n = X.shape[0]
        value, aux = self._loss_from_logits(logits, y)
        if self.loss_kind == "cross-entropy":
            dlogits = np.exp(aux)
            dlogits[np.arange(n), np.asarray(y, dtype=np.int64)] -= 1.0
            dlogits /= n
        else:
            dlogits = aux / n
        grad = np.empty(self.dim, dtype=DTYPE)
        grads_wb = []
        delta = dlogits
        for layer in range(len(params) - 1, -1, -1):
            a_prev = X if layer == 0 else hidden[layer - 1][1]
            gw = a_prev.T @ delta
            gb = delta.sum(axis=0)
            grads_wb.append((gw, gb))
            if layer > 0:
                da = delta @ params[layer][0].T
                z, a = hidden[layer - 1]
                if self.activation == "tanh":
                    delta = da * (1.0 - a * a)
                else:
                    delta = da * (z > 0)
        grads_wb.reverse()
        offset = 0
        for gw, gb in grads_wb:
            grad[offset:offset + gw.size] = gw.ravel()
            offset += gw.size
            grad[offset:offset + gb.size] = gb
            offset += gb.size
        return value, grad

    def init_theta(self, rng):
        """Scaled-uniform fan-in weights, zero biases."""
        theta = np.empty(self.dim, dtype=DTYPE)
        offset = 0
        for layer in range(len(self.dims) - 1):
            fan_in, fan_out = self.dims[layer], self.dims[layer + 1]
            bound = 1.0 / np.sqrt(fan_in)
            theta[offset:offset + fan_in * fan_out] = rng.uniform(-bound, bound, size=fan_in * fan_out)
            offset += fan_in * fan_out
            theta[offset:offset + fan_out] = 0.0
            offset += fan_out
        return theta


class Conv1dModel(DifferentiableModel):
    """Tiny 1-D convolution classifier: k filters of width w over the
    feature axis, activation, mean pool over positions, linear head,
    cross-entropy.  Exists to exercise the filter-group layout; not a
    realistic vision model."""

    def __init__(self, input_len, num_filters, kernel_size, num_classes, activation="tanh"):
        input_len, k, w, c = int(input_len), int(num_filters), int(kernel_size), int(num_classes)
        if w < 1 or k < 1 or c < 2 or input_len < 1:
            raise InvalidModelError("conv1d needs kernel_size >= 1, filters >= 1, classes >= 2")
        if w > input_len:
            raise InvalidModelError(f"kernel width {w} exceeds input length {input_len}")
        if activation not in ACTIVATIONS:
            raise InvalidModelError(f"unknown activation {activation!r}; choose from {ACTIVATIONS}")
        self.input_len, self.k, self.w, self.c = input_len, k, w, c
        self.activation = activation
        self.loss_kind = "cross-entropy"
        self.num_classes = c
        self.layout = ParameterLayout((
            Segment("conv", "conv-filter-group", 0, k * w, filter_sizes=(w,) * k),
            Segment("conv_b", "bias", k * w, k),
            Segment("head_w", "dense-weight", k * w + k, k * c),
            Segment("head_b", "bias", k * w + k + k * c, c),
        ))
        self.descriptor = f"conv1d(len={input_len}, filters={k}x{w}, classes={c}, {activation})"

    def _unpack(self, theta):
        k, w, c = self.k, self.w, self.c
        filters = theta[:k * w].reshape(k, w)
        conv_b = theta[k * w:k * w + k]
        head_w = theta[k * w + k:k * w + k + k * c].reshape(k, c)
        head_b = theta[k * w + k + k * c:]
        return filters, conv_b, head_w, head_b

    def _forward(self, theta, X):
        filters, conv_b, head_w, head_b = self._unpack(theta)
        windows = np.lib.stride_tricks.sliding_window_view(X, self.w, axis=1)
        z = windows @ filters.T + conv_b
        if self.activation == "tanh":
            a = np.tanh(z)
        else:
            a = np.where(z > 0, z, 0.0)
        pooled = a.mean(axis=1)
        logits = pooled @ head_w + head_b
        return windows, z, a, pooled, logits

    def logits(self, theta, X) -> np.ndarray:
        theta = self._check_theta(theta)
        X = np.asarray(X, dtype=DTYPE)
        return self._forward(theta, X)[4]

    def _ce(self, logits, y):
        n = logits.shape[0]
        m = logits.max(axis=1, keepdims=True)
        shifted = logits - m
        lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        log_probs = shifted - lse
        labels = np.asarray(y, dtype=np.int64)
        return float(-log_probs[np.arange(n), labels].mean()), log_probs

    def loss(self, theta, batch) -> float:
        theta = self._check_theta(theta)
        X, y = _check_batch(batch)
        return self._ce(self._forward(theta, X)[4], y)[0]

    def value_and_grad(self, theta, batch):
        theta = self._check_theta(theta)
        X, y = _check_batch(batch)
        windows, z, a, pooled, logits = self._forward(theta, X)
        n, positions = X.shape[0], z.shape[1]
        value, log_probs = self._ce(logits, y)
        dlogits = np.exp(log_probs)
        dlogits[np.arange(n), np.asarray(y, dtype=np.int64)] -= 1.0
        dlogits /= n
        _, _, head_w, _ = self._unpack(theta)
        g_head_w = pooled.T @ dlogits
        g_head_b = dlogits.sum(axis=0)
        dpooled = dlogits @ head_w.T
        da = np.repeat(dpooled[:, None, :], positions, axis=1) / positions
        if self.activation == "tanh":
            dz = da * (1.0 - a * a)
        else:
            dz = da * (z > 0)
        g_filters = np.einsum("npw,npk->kw", windows, dz)
        g_conv_b = dz.sum(axis=(0, 1))
        grad = np.concatenate([g_filters.ravel(), g_conv_b, g_head_w.ravel(), g_head_b])
        return value, np.ascontiguousarray(grad, dtype=DTYPE)

    def init_theta(self, rng):
        theta = np.empty(self.dim, dtype=DTYPE)
        k, w, c = self.k, self.w, self.c
        theta[:k * w] = rng.uniform(-1.0 / np.sqrt(w), 1.0 / np.sqrt(w), size=k * w)
        theta[k * w:k * w + k] = 0.0
        theta[k * w + k:k * w + k + k * c] = rng.uniform(-1.0 / np.sqrt(k), 1.0 / np.sqrt(k), size=k * c)
        theta[k * w + k + k * c:] = 0.0
        return theta


def make_quadratic(a_diag, center) -> QuadraticModel:
    return QuadraticModel(a_diag, center)


def make_anchored_quadratic(a_diag) -> AnchoredQuadraticModel:
    return AnchoredQuadraticModel(a_diag)


def make_logreg(input_dim: int, num_classes: int) -> MlpModel:
    """Softmax cross-entropy linear model (a depth-1 mlp)."""
    if input_dim < 1 or num_classes < 1:
        raise InvalidModelError("logreg needs input_dim >= 1 and num_classes >= 1")
    model = MlpModel([input_dim, num_classes], activation="tanh", loss_kind="cross-entropy")
    model.descriptor = f"logreg({input_dim}x{num_classes})"
    return model


def make_mlp(dims, activation="tanh", loss_kind="cross-entropy") -> MlpModel:
    return MlpModel(dims, activation=activation, loss_kind=loss_kind)


def make_conv1d(input_len, num_filters, kernel_size, num_classes, activation="tanh") -> Conv1dModel:
    return Conv1dModel(input_len, num_filters, kernel_size, num_classes, activation)


def fd_gradient(model: DifferentiableModel, theta, batch, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient: (L(theta+h e_i) - L(theta-h e_i)) / 2h."""
    if h <= 0:
        raise InvalidModelError("finite-difference step h must be > 0")
    theta = np.ascontiguousarray(theta, dtype=DTYPE)
    out = np.empty_like(theta)
    work = theta.copy()
    for i in range(theta.shape[0]):
        orig = work[i]
        work[i] = orig + h
        up = model.loss(work, batch)
        work[i] = orig - h
        down = model.loss(work, batch)
        work[i] = orig
        out[i] = (up - down) / (2.0 * h)
    return out


def fd_hvp(model: DifferentiableModel, theta, batch, v, h: float = 1e-5) -> np.ndarray:
    """Central-difference Hessian-vector product: (g(theta+hv) - g(theta-hv)) / 2h."""
    if h <= 0:
        raise InvalidModelError("finite-difference step h must be > 0")
    theta = np.ascontiguousarray(theta, dtype=DTYPE)
    v = np.ascontiguousarray(v, dtype=DTYPE)
    if v.shape != theta.shape:
        raise DimensionError(f"direction shape {v.shape} does not match theta {theta.shape}")
    gp = model.grad(theta + h * v, batch)
    gm = model.grad(theta - h * v, batch)
    return (gp - gm) / (2.0 * h)
