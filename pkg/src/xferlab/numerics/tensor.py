"""Dense float64 tensors with reverse-mode automatic differentiation.

A Tensor wraps a contiguous float64 ndarray.  Non-leaf tensors remember their
parent tensors and a backward closure, so the computation graph is implicit
and always acyclic; ``backward`` walks it once in reverse topological order.
Gradients accumulate into ``.grad`` (an ndarray, None until touched).

Everything is float64 and pure: no op mutates its inputs, and identical
inputs produce bitwise identical outputs.  Only the ops a post-LN
transformer encoder needs are implemented; each op pairs a vectorized
forward with a hand-derived backward.

Shapes follow the (B, L, D) convention: batch, sequence, feature.
"""

from __future__ import annotations

import numpy as np

from ..errors import ContractError, MetricError, NumericError, ShapeError

__all__ = [
    "Tensor",
    "tensor",
    "matmul",
    "embedding",
    "masked_softmax",
    "layer_norm",
    "gelu",
    "dropout",
    "cross_entropy",
    "gradients",
    "toposort",
    "cosine",
    "assert_finite",
]


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a broadcast gradient back to the original operand shape."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


class Tensor:
    """float64 array node in the autodiff graph."""

    __slots__ = ("data", "requires_grad", "grad", "op", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, op: str = "leaf",
                 parents: tuple = (), backward=None):
        self.data = data if isinstance(data, np.ndarray) and data.dtype == np.float64 \
            else np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = None
        self.op = op
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, op={self.op!r}, requires_grad={self.requires_grad})"

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def accumulate(self, g: np.ndarray, own: bool = False):
        """Add g into .grad. own=True promises g is a fresh array safe to keep."""
        if self.grad is None:
            if own:
                self.grad = g
            else:
                self.grad = g.copy() if isinstance(g, np.ndarray) \
                    else np.asarray(g, dtype=np.float64)
        else:
            self.grad += g

    # ----- arithmetic -----

    def __add__(self, other):
        return _binary(self, other, np.add, lambda g, a, b: g, lambda g, a, b: g, "add")

    __radd__ = __add__

    def __sub__(self, other):
        return _binary(self, other, np.subtract, lambda g, a, b: g, lambda g, a, b: -g, "sub")

    def __rsub__(self, other):
        return _binary(_as_tensor(other), self, np.subtract,
                       lambda g, a, b: g, lambda g, a, b: -g, "sub")

    def __mul__(self, other):
        return _binary(self, other, np.multiply,
                       lambda g, a, b: g * b, lambda g, a, b: g * a, "mul")

    __rmul__ = __mul__

    def __truediv__(self, other):
        return _binary(self, other, np.divide,
                       lambda g, a, b: g / b, lambda g, a, b: -g * a / (b * b), "div")

    def __rtruediv__(self, other):
        return _binary(_as_tensor(other), self, np.divide,
                       lambda g, a, b: g / b, lambda g, a, b: -g * a / (b * b), "div")

    def __neg__(self):
        out = Tensor(-self.data, self.requires_grad, "neg", (self,))
        if out.requires_grad:
            out._backward = lambda g: self.accumulate(-g, own=True)
        return out

    def __pow__(self, exponent):
        if not isinstance(exponent, (int, float)):
            raise ShapeError("pow supports scalar exponents only")
        out = Tensor(self.data ** exponent, self.requires_grad, "pow", (self,))
        if out.requires_grad:
            e = float(exponent)
            out._backward = lambda g: self.accumulate(g * e * self.data ** (e - 1.0), own=True)
        return out

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        out = Tensor(self.data[key], self.requires_grad, "index", (self,))
        if out.requires_grad:
            def bw(g, key=key):
                full = np.zeros_like(self.data)
                np.add.at(full, key, g)
                self.accumulate(full, own=True)
            out._backward = bw
        return out

    # ----- shape ops -----

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        out = Tensor(self.data.reshape(shape), self.requires_grad, "reshape", (self,))
        if out.requires_grad:
            out._backward = lambda g: self.accumulate(g.reshape(self.data.shape))
        return out

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        out = Tensor(np.ascontiguousarray(self.data.transpose(axes)),
                     self.requires_grad, "transpose", (self,))
        if out.requires_grad:
            inv = tuple(np.argsort(axes))
            out._backward = lambda g: self.accumulate(g.transpose(inv))
        return out

    # ----- reductions -----

    def sum(self, axis=None, keepdims: bool = False):
        out = Tensor(self.data.sum(axis=axis, keepdims=keepdims),
                     self.requires_grad, "sum", (self,))
        if out.requires_grad:
            def bw(g):
                gg = g
                if axis is not None and not keepdims:
                    gg = np.expand_dims(gg, axis)
                self.accumulate(np.broadcast_to(gg, self.data.shape))
            out._backward = bw
        return out

    def mean(self, axis=None, keepdims: bool = False):
        n = self.data.size if axis is None else np.prod(
            [self.data.shape[a] for a in (axis if isinstance(axis, tuple) else (axis,))])
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / float(n))

    # ----- pointwise nonlinearities -----

    def exp(self):
        out = Tensor(np.exp(self.data), self.requires_grad, "exp", (self,))
        if out.requires_grad:
            out._backward = lambda g: self.accumulate(g * out.data, own=True)
        return out

    def log(self):
        out = Tensor(np.log(self.data), self.requires_grad, "log", (self,))
        if out.requires_grad:
            out._backward = lambda g: self.accumulate(g / self.data, own=True)
        return out

    def sqrt(self):
        out = Tensor(np.sqrt(self.data), self.requires_grad, "sqrt", (self,))
        if out.requires_grad:
            out._backward = lambda g: self.accumulate(g * 0.5 / out.data, own=True)
        return out

    def tanh(self):
        out = Tensor(np.tanh(self.data), self.requires_grad, "tanh", (self,))
        if out.requires_grad:
            out._backward = lambda g: self.accumulate(g * (1.0 - out.data * out.data), own=True)
        return out

    # ----- backward -----

    def backward(self, grad: np.ndarray | None = None):
        """Reverse-mode pass from this node.

        Without an explicit seed gradient the node must be scalar (the loss);
        a seed of matching shape may be supplied to pull back an arbitrary
        cotangent (used when assembling Jacobians row by row).
        """
        if grad is None:
            if self.data.size != 1:
                raise ContractError(
                    f"backward() needs a scalar loss, got shape {self.data.shape}")
            grad = np.ones_like(self.data)
        else:
            grad = np.asarray(grad, dtype=np.float64)
            if grad.shape != self.data.shape:
                raise ShapeError(
                    f"seed gradient shape {grad.shape} != tensor shape {self.data.shape}")
        order = toposort(self)
        self.accumulate(grad)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def tensor(data, requires_grad: bool = False) -> Tensor:
    """Leaf constructor."""
    return Tensor(data, requires_grad=requires_grad)


def _binary(a, b, fwd, da, db, name) -> Tensor:
    """Elementwise binary op with numpy broadcasting; b may be a plain number/array."""
    if isinstance(b, Tensor):
        out = Tensor(fwd(a.data, b.data), a.requires_grad or b.requires_grad,
                     name, (a, b))
        if out.requires_grad:
            ad, bd = a.data, b.data

            def bw(g):
                if a.requires_grad:
                    arr = _unbroadcast(da(g, ad, bd), ad.shape)
                    a.accumulate(arr, own=arr is not g)
                if b.requires_grad:
                    arr = _unbroadcast(db(g, ad, bd), bd.shape)
                    b.accumulate(arr, own=arr is not g)
            out._backward = bw
        return out
    bval = b if isinstance(b, np.ndarray) else float(b)
    out = Tensor(fwd(a.data, bval), a.requires_grad, name, (a,))
    if out.requires_grad:
        ad = a.data

        def bw(g):
            arr = _unbroadcast(da(g, ad, bval), ad.shape)
            a.accumulate(arr, own=arr is not g)
        out._backward = bw
    return out


def toposort(root: Tensor) -> list:
    """Topological order of the graph under root (iterative, visits each once)."""
    order, seen, stack = [], set(), [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def gradients(loss: Tensor, leaves) -> list:
    """∂loss/∂leaf for every leaf, zeros where the loss does not depend on it."""
    for leaf in leaves:
        leaf.grad = None
    loss.backward()
    return [leaf.grad if leaf.grad is not None else np.zeros_like(leaf.data)
            for leaf in leaves]


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product on the last two axes; leading axes broadcast."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise ShapeError("matmul requires operands with ndim >= 2")
    if a.data.shape[-1] != b.data.shape[-2]:
        raise ShapeError(
            f"matmul inner dimensions disagree: {a.data.shape} @ {b.data.shape}")
    out = Tensor(a.data @ b.data, a.requires_grad or b.requires_grad, "matmul", (a, b))
    if out.requires_grad:
        def bw(g):
            if a.requires_grad:
                a.accumulate(_unbroadcast(g @ b.data.swapaxes(-1, -2), a.data.shape),
                             own=True)
            if b.requires_grad:
                b.accumulate(_unbroadcast(a.data.swapaxes(-1, -2) @ g, b.data.shape),
                             own=True)
        out._backward = bw
    return out


def embedding(weight: Tensor, ids: np.ndarray) -> Tensor:
    """Row gather: weight (V, d), ids int (...,) -> (..., d)."""
    ids = np.asarray(ids)
    if ids.min(initial=0) < 0 or (ids.size and ids.max() >= weight.data.shape[0]):
        raise ShapeError("embedding ids out of range")
    out = Tensor(weight.data[ids], weight.requires_grad, "embedding", (weight,))
    if out.requires_grad:
        d = weight.data.shape[1]

        def bw(g):
            gw = np.zeros_like(weight.data)
            np.add.at(gw, ids.reshape(-1), g.reshape(-1, d))
            weight.accumulate(gw, own=True)
        out._backward = bw
    return out


def masked_softmax(scores: Tensor, mask: np.ndarray) -> Tensor:
    """Softmax over the last axis restricted to positions where mask != 0.

    Masked positions get probability exactly 0; each row must contain at
    least one unmasked position.  mask broadcasts against scores.
    """
    m = np.broadcast_to(np.asarray(mask, dtype=bool), scores.data.shape)
    s = np.where(m, scores.data, -np.inf)
    mx = s.max(axis=-1, keepdims=True)
    e = np.exp(s - mx)
    e[~m] = 0.0
    denom = e.sum(axis=-1, keepdims=True)
    if np.any(denom == 0.0):
        raise ShapeError("masked_softmax: a row has no unmasked positions")
    p = e / denom
    out = Tensor(p, scores.requires_grad, "masked_softmax", (scores,))
    if out.requires_grad:
        def bw(g):
            inner = (g * p).sum(axis=-1, keepdims=True)
            scores.accumulate(p * (g - inner), own=True)
        out._backward = bw
    return out


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-12) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then scale and shift."""
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv
    out = Tensor(xhat * gain.data + bias.data,
                 x.requires_grad or gain.requires_grad or bias.requires_grad,
                 "layer_norm", (x, gain, bias))
    if out.requires_grad:
        def bw(g):
            if x.requires_grad:
                gh = g * gain.data
                m1 = gh.mean(axis=-1, keepdims=True)
                m2 = (gh * xhat).mean(axis=-1, keepdims=True)
                x.accumulate((gh - m1 - xhat * m2) * inv, own=True)
            lead = tuple(range(g.ndim - 1))
            if gain.requires_grad:
                gain.accumulate((g * xhat).sum(axis=lead), own=True)
            if bias.requires_grad:
                bias.accumulate(g.sum(axis=lead), own=True)
        out._backward = bw
    return out


_GELU_C = np.sqrt(2.0 / np.pi)
_GELU_A = 0.044715


def gelu(x: Tensor) -> Tensor:
    """Gaussian error linear unit (tanh approximation)."""
    xd = x.data
    # x*x*x, not x**3: np.power takes a slow path for negative bases
    u = _GELU_C * (xd + _GELU_A * (xd * xd * xd))
    t = np.tanh(u)
    out = Tensor(0.5 * xd * (1.0 + t), x.requires_grad, "gelu", (x,))
    if out.requires_grad:
        def bw(g):
            du = _GELU_C * (1.0 + 3.0 * _GELU_A * xd * xd)
            x.accumulate(g * (0.5 * (1.0 + t) + 0.5 * xd * (1.0 - t * t) * du), own=True)
        out._backward = bw
    return out


def dropout(x: Tensor, p: float, rng) -> Tensor:
    """Inverted dropout: zero with probability p, scale survivors by 1/(1-p)."""
    if p <= 0.0:
        return x
    if p >= 1.0:
        raise ContractError("dropout probability must be < 1")
    keep = (rng.uniform(x.data.shape) >= p) / (1.0 - p)
    out = Tensor(x.data * keep, x.requires_grad, "dropout", (x,))
    if out.requires_grad:
        out._backward = lambda g: x.accumulate(g * keep, own=True)
    return out


def cross_entropy(logits: Tensor, targets: np.ndarray, ignore_index: int = -1) -> Tensor:
    """Mean negative log-likelihood over positions whose target != ignore_index.

    logits (N, D), targets int (N,).  Fused log-softmax keeps it stable.
    """
    t = np.asarray(targets).reshape(-1)
    if logits.data.ndim != 2 or logits.data.shape[0] != t.shape[0]:
        raise ShapeError(
            f"cross_entropy expects (N, D) logits and (N,) targets, got "
            f"{logits.data.shape} / {t.shape}")
    valid = t != ignore_index
    n = int(valid.sum())
    if n == 0:
        raise ContractError("cross_entropy: no valid target positions")
    s = logits.data
    mx = s.max(axis=-1, keepdims=True)
    ex = np.exp(s - mx)
    lse = np.log(ex.sum(axis=-1, keepdims=True)) + mx
    rows = np.nonzero(valid)[0]
    nll = lse[rows, 0] - s[rows, t[rows]]
    out = Tensor(nll.sum() / n, logits.requires_grad, "cross_entropy", (logits,))
    if out.requires_grad:
        def bw(g):
            p = ex / ex.sum(axis=-1, keepdims=True)
            gl = np.zeros_like(s)
            gl[rows] = p[rows]
            gl[rows, t[rows]] -= 1.0
            logits.accumulate(gl * (float(g) / n), own=True)
        out._backward = bw
    return out


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity of two flat vectors, in [-1, 1]."""
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if u.shape != v.shape:
        raise ShapeError(f"cosine: length mismatch {u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise MetricError("cosine similarity undefined for a zero vector")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def assert_finite(x, what: str = "tensor"):
    """Raise NumericError if any entry is NaN or infinite."""
    data = x.data if isinstance(x, Tensor) else np.asarray(x)
    if not np.all(np.isfinite(data)):
        raise NumericError(f"non-finite values in {what}")
    return x
