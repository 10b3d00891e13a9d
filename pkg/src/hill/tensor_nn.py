"""Dense float64 matrix kernel: forward ops with hand-written backward
passes, linear layers, Adam, parameter checkpointing, and a
central-difference gradient checker.

No autodiff tape: the model graph is small and static, and explicit
backward functions keep the finite-difference oracle meaningful. All ops
reject NaN/Inf at their boundaries.
"""

from __future__ import annotations

import json

import numpy as np


def check_finite(x, name: str):
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite values")
    return x


def as_matrix(x, name: str = "tensor") -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {a.shape}")
    return check_finite(a, name)


# -- elementary ops --------------------------------------------------


def matmul(a, b):
    a, b = as_matrix(a, "matmul lhs"), as_matrix(b, "matmul rhs")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul shape mismatch: {a.shape} x {b.shape}")
    return a @ b


def matmul_backward(grad, a, b):
    return grad @ b.T, a.T @ grad


def add_bias(x, bias):
    x, bias = as_matrix(x, "add_bias input"), as_matrix(bias, "bias")
    if bias.shape != (1, x.shape[1]):
        raise ValueError(f"add_bias shape mismatch: input {x.shape}, bias {bias.shape}")
    return x + bias


def add_bias_backward(grad):
    return grad, grad.sum(axis=0, keepdims=True)


def relu(x):
    return np.maximum(as_matrix(x, "relu input"), 0.0)


def relu_backward(grad, x):
    return grad * (x > 0.0)


def concat_cols(a, b):
    a, b = as_matrix(a, "concat lhs"), as_matrix(b, "concat rhs")
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"concat_cols row mismatch: {a.shape} vs {b.shape}")
    return np.concatenate([a, b], axis=1)


def concat_cols_backward(grad, left_cols):
    return grad[:, :left_cols], grad[:, left_cols:]


def sum_rows(x):
    return as_matrix(x, "sum_rows input").sum(axis=0, keepdims=True)


def sum_rows_backward(grad, rows):
    return np.repeat(grad, rows, axis=0)


def mean_rows(x):
    return as_matrix(x, "mean_rows input").mean(axis=0, keepdims=True)


def mean_rows_backward(grad, rows):
    return np.repeat(grad, rows, axis=0) / rows


def sigmoid(x):
    x = check_finite(np.asarray(x, dtype=np.float64), "sigmoid input")
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid_backward(grad, y):
    return grad * y * (1.0 - y)


def cosine_similarity(u, v) -> float:
    u = check_finite(np.asarray(u, dtype=np.float64).ravel(), "cosine u")
    v = check_finite(np.asarray(v, dtype=np.float64).ravel(), "cosine v")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine_similarity: zero-norm input")
    return float(u @ v / (nu * nv))


def cosine_similarity_backward(grad, u, v):
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    s = u @ v / (nu * nv)
    gu = grad * (v / (nu * nv) - s * u / (nu * nu))
    gv = grad * (u / (nu * nv) - s * v / (nv * nv))
    return gu, gv


# -- parameters and layers -------------------------------------------


class Parameter:
    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = as_matrix(value, name)
        self.grad = np.zeros_like(self.value)

    def zero_grad(self):
        self.grad.fill(0.0)


class LinearLayer:
    """y = x @ W (+ b). Weight (in, out), bias (1, out)."""

    def __init__(self, in_dim, out_dim, rng, bias=True, name="linear"):
        self.weight = Parameter(
            f"{name}.weight", rng.normal(0.0, 1.0 / np.sqrt(in_dim), (in_dim, out_dim))
        )
        self.bias = Parameter(f"{name}.bias", np.zeros((1, out_dim))) if bias else None

    def forward(self, x):
        y = matmul(x, self.weight.value)
        if self.bias is not None:
            y = add_bias(y, self.bias.value)
        return y, x

    def backward(self, grad, ctx):
        x = ctx
        if self.bias is not None:
            grad, gbias = add_bias_backward(grad)
            self.bias.grad += gbias
        gx, gw = matmul_backward(grad, x, self.weight.value)
        self.weight.grad += gw
        return gx

    def params(self):
        return [self.weight] if self.bias is None else [self.weight, self.bias]


class Adam:
    """Adam with bias correction; rejects steps with non-finite grads."""

    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m = [np.zeros_like(p.value) for p in self.params]
        self.v = [np.zeros_like(p.value) for p in self.params]

    def step(self):
        for p in self.params:
            if not np.all(np.isfinite(p.grad)):
                raise ValueError(f"non-finite gradient for {p.name}")
        self.t += 1
        for i, p in enumerate(self.params):
            g = p.grad
            self.m[i] = self.beta1 * self.m[i] + (1 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1 - self.beta2) * g * g
            m_hat = self.m[i] / (1 - self.beta1**self.t)
            v_hat = self.v[i] / (1 - self.beta2**self.t)
            p.value -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()


def adam_step(optimizer: Adam):
    optimizer.step()


# -- checkpoints -----------------------------------------------------


def save_checkpoint(params, path):
    blob = {
        p.name: {"shape": list(p.value.shape), "values": p.value.ravel().tolist()}
        for p in params
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(blob, fh)


def load_checkpoint(params, path):
    with open(path, encoding="utf-8") as fh:
        blob = json.load(fh)
    for p in params:
        if p.name not in blob:
            raise ValueError(f"checkpoint missing parameter {p.name}")
        entry = blob[p.name]
        if tuple(entry["shape"]) != p.value.shape:
            raise ValueError(
                f"checkpoint shape mismatch for {p.name}: "
                f"{tuple(entry['shape'])} vs {p.value.shape}"
            )
        p.value[...] = np.asarray(entry["values"], dtype=np.float64).reshape(p.value.shape)


# -- gradient checking -----------------------------------------------


def central_difference(f, x, step=1e-5):
    """Central-difference gradient of scalar f at array x."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = x[idx]
        x[idx] = orig + step
        hi = f(x)
        x[idx] = orig - step
        lo = f(x)
        x[idx] = orig
        grad[idx] = (hi - lo) / (2 * step)
    return grad


def max_rel_error(analytic, numeric, floor=1e-8):
    a = np.asarray(analytic, dtype=np.float64).ravel()
    n = np.asarray(numeric, dtype=np.float64).ravel()
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / denom)) if a.size else 0.0
