import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xferlab.errors import ContractError, MetricError, NumericError, ShapeError
from xferlab.numerics import (
    Rng,
    Tensor,
    assert_finite,
    cosine,
    cross_entropy,
    dropout,
    embedding,
    gelu,
    gradients,
    layer_norm,
    masked_softmax,
    tensor,
)

from conftest import finite_difference


def rel_err(a, b, floor=1e-6):
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


# ---------------------------------------------------------------- matmul

def test_matmul_identity():
    m = Rng(0).normal((3, 3))
    out = tensor(np.eye(3)) @ tensor(m)
    assert np.array_equal(out.data, m)


def test_matmul_scalar_case():
    assert (tensor([[2.0]]) @ tensor([[3.0]])).data[0, 0] == 6.0


def test_matmul_matches_triple_loop():
    rng = Rng(1)
    a, b = rng.normal((7, 5)), rng.normal((5, 4))
    ref = np.zeros((7, 4))
    for i in range(7):
        for j in range(4):
            for t in range(5):
                ref[i, j] += a[i, t] * b[t, j]
    assert np.abs((tensor(a) @ tensor(b)).data - ref).max() < 1e-12


def test_matmul_shape_errors():
    with pytest.raises(ShapeError):
        tensor(np.ones((2, 3))) @ tensor(np.ones((4, 2)))
    with pytest.raises(ShapeError):
        tensor(np.ones(3)) @ tensor(np.ones((3, 2)))


# ---------------------------------------------------------------- backward

def test_square_gradient():
    x = tensor(3.0, requires_grad=True)
    (x * x).backward()
    assert float(x.grad) == pytest.approx(6.0, abs=1e-14)


def test_constant_loss_gives_zero_grad():
    p = tensor(np.ones(4), requires_grad=True)
    loss = tensor(5.0) * tensor(2.0)
    (g,) = gradients(loss, [p])
    assert np.array_equal(g, np.zeros(4))


def test_backward_requires_scalar():
    x = tensor(np.ones((2, 2)), requires_grad=True)
    with pytest.raises(ContractError):
        (x * 2).backward()


def test_gradient_accumulates_through_shared_node():
    x = tensor(2.0, requires_grad=True)
    y = x * 3.0
    (y + y).backward()
    assert float(x.grad) == pytest.approx(6.0)


def test_elementwise_grads_against_fd():
    rng = Rng(23)
    av = rng.normal((3, 5))
    bv = rng.normal((3, 5)) + 3.0  # keeps divisors/logs away from zero

    cases = {
        "add": lambda a, b: a + b,
        "sub": lambda a, b: a - b,
        "mul": lambda a, b: a * b,
        "div": lambda a, b: a / b,
        "pow": lambda a, b: a ** 3,
        "neg": lambda a, b: -a,
        "exp": lambda a, b: a.exp(),
        "tanh": lambda a, b: a.tanh(),
        "gelu": lambda a, b: gelu(a),
        "sqrt": lambda a, b: (a * a + 1.0).sqrt(),
        "log": lambda a, b: (a * a + 1.0).log(),
        "mean": lambda a, b: (a * b).mean(axis=0, keepdims=True),
        "sum_axis": lambda a, b: (a + b).sum(axis=1, keepdims=True),
        "transpose": lambda a, b: a.transpose(1, 0) * b.transpose(1, 0),
        "reshape": lambda a, b: a.reshape(5, 3) * b.reshape(5, 3),
        "getitem": lambda a, b: a[1:, :3] * 2.0,
        "broadcast_row": lambda a, b: a * b[0],
        "scalar_rhs": lambda a, b: 2.0 * a - 1.5,
    }
    for name, op in cases.items():
        a = tensor(av.copy(), requires_grad=True)
        b = tensor(bv.copy(), requires_grad=True)
        ga, gb = gradients(op(a, b).sum(), [a, b])

        def fa(op=op):
            return float(op(tensor(av), tensor(bv)).data.sum())

        assert rel_err(ga, finite_difference(fa, av)).max() < 1e-4, name
        assert rel_err(gb, finite_difference(fa, bv)).max() < 1e-4, name


def test_matmul_grads_against_fd():
    rng = Rng(29)
    av, bv = rng.normal((3, 4)), rng.normal((4, 2))
    w = rng.normal((3, 2))
    a = tensor(av.copy(), requires_grad=True)
    b = tensor(bv.copy(), requires_grad=True)
    loss = ((a @ b) * w).sum()
    ga, gb = gradients(loss, [a, b])

    fd_a = finite_difference(lambda: float(((av @ bv) * w).sum()), av)
    fd_b = finite_difference(lambda: float(((av @ bv) * w).sum()), bv)
    assert rel_err(ga, fd_a).max() < 1e-4
    assert rel_err(gb, fd_b).max() < 1e-4


def test_batched_matmul_grads_against_fd():
    rng = Rng(31)
    av, bv = rng.normal((2, 3, 4)), rng.normal((2, 4, 3))
    w = rng.normal((2, 3, 3))
    a = tensor(av.copy(), requires_grad=True)
    b = tensor(bv.copy(), requires_grad=True)
    loss = ((a @ b) * w).sum()
    ga, gb = gradients(loss, [a, b])
    fd_a = finite_difference(lambda: float((np.matmul(av, bv) * w).sum()), av)
    fd_b = finite_difference(lambda: float((np.matmul(av, bv) * w).sum()), bv)
    assert rel_err(ga, fd_a).max() < 1e-4
    assert rel_err(gb, fd_b).max() < 1e-4


def test_layer_norm_grads_against_fd():
    rng = Rng(37)
    xv = rng.normal((4, 6))
    gv, bv = rng.normal((6,)) + 1.0, rng.normal((6,))
    w = rng.normal((4, 6))
    x = tensor(xv.copy(), requires_grad=True)
    g = tensor(gv.copy(), requires_grad=True)
    b = tensor(bv.copy(), requires_grad=True)
    loss = (layer_norm(x, g, b) * w).sum()
    gx, gg, gb = gradients(loss, [x, g, b])

    def f():
        mu = xv.mean(-1, keepdims=True)
        var = ((xv - mu) ** 2).mean(-1, keepdims=True)
        y = (xv - mu) / np.sqrt(var + 1e-12) * gv + bv
        return float((y * w).sum())

    assert rel_err(gx, finite_difference(f, xv)).max() < 1e-4
    assert rel_err(gg, finite_difference(f, gv)).max() < 1e-4
    assert rel_err(gb, finite_difference(f, bv)).max() < 1e-4


def test_masked_softmax_rows_and_grads():
    rng = Rng(41)
    sv = rng.normal((2, 3, 5))
    mask = np.ones((2, 1, 5), dtype=bool)
    mask[0, 0, 3:] = False
    s = tensor(sv.copy(), requires_grad=True)
    p = masked_softmax(s, mask)
    sums = p.data.sum(-1)
    assert np.abs(sums - 1.0).max() < 1e-12
    assert p.data[0, :, 3:].max() == 0.0

    w = rng.normal((2, 3, 5))
    loss = (p * w).sum()
    (gs,) = gradients(loss, [s])

    def f():
        z = np.where(mask, sv, -np.inf)
        e = np.exp(z - z.max(-1, keepdims=True))
        e[~np.broadcast_to(mask, e.shape)] = 0.0
        return float((e / e.sum(-1, keepdims=True) * w).sum())

    assert rel_err(gs, finite_difference(f, sv), floor=1e-5).max() < 1e-4


def test_masked_softmax_empty_row_rejected():
    s = tensor(np.zeros((1, 2, 3)))
    mask = np.zeros((1, 1, 3), dtype=bool)
    with pytest.raises(ShapeError):
        masked_softmax(s, mask)


def test_embedding_gather_and_scatter():
    w = tensor(Rng(43).normal((6, 4)), requires_grad=True)
    ids = np.array([[0, 2], [2, 5]])
    out = embedding(w, ids)
    assert out.data.shape == (2, 2, 4)
    out.sum().backward()
    assert np.array_equal(w.grad[2], np.full(4, 2.0))  # id 2 used twice
    assert np.array_equal(w.grad[1], np.zeros(4))
    with pytest.raises(ShapeError):
        embedding(w, np.array([[7]]))


def test_cross_entropy_matches_manual():
    logits = tensor(np.array([[1.0, 2.0, 0.5], [0.1, 0.1, 0.1]]),
                    requires_grad=True)
    targets = np.array([1, -1])  # second position ignored
    loss = cross_entropy(logits, targets)
    p = np.exp([1.0, 2.0, 0.5])
    p /= p.sum()
    assert loss.item() == pytest.approx(-np.log(p[1]), abs=1e-12)
    loss.backward()
    assert np.array_equal(logits.grad[1], np.zeros(3))
    with pytest.raises(ContractError):
        cross_entropy(tensor(np.zeros((1, 3))), np.array([-1]))


def test_dropout_semantics():
    x = tensor(np.ones((100, 100)), requires_grad=True)
    out = dropout(x, 0.25, Rng(3))
    kept = out.data != 0
    assert abs(kept.mean() - 0.75) < 0.02
    assert np.allclose(out.data[kept], 1 / 0.75)
    assert dropout(x, 0.0, Rng(3)) is x
    with pytest.raises(ContractError):
        dropout(x, 1.0, Rng(3))


# ---------------------------------------------------------------- cosine

def test_cosine_examples():
    v = Rng(5).normal((10,))
    assert cosine(v, v) == pytest.approx(1.0, abs=1e-12)
    assert cosine(v, -v) == pytest.approx(-1.0, abs=1e-12)
    assert cosine([1, 0], [1, 1]) == pytest.approx(np.sqrt(2) / 2, abs=1e-12)
    with pytest.raises(MetricError):
        cosine([0, 0], [1, 0])


# ---------------------------------------------------------------- purity

def test_ops_are_pure():
    a = Rng(7).normal((5, 5))
    b = Rng(8).normal((5, 5))
    r1 = (tensor(a) @ tensor(b) + tensor(a) * 2.0).data
    r2 = (tensor(a) @ tensor(b) + tensor(a) * 2.0).data
    assert np.array_equal(r1, r2)


def test_assert_finite():
    assert_finite(tensor([1.0, 2.0]), "ok")
    with pytest.raises(NumericError):
        assert_finite(np.array([1.0, np.nan]), "bad")


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 2 ** 32 - 1))
def test_matmul_identity_property(m, k, seed):
    a = Rng(seed).normal((m, k))
    assert np.array_equal((tensor(a) @ tensor(np.eye(k))).data, a)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_sum_grad_is_ones(seed):
    x = tensor(Rng(seed).normal((3, 4)), requires_grad=True)
    x.sum().backward()
    assert np.array_equal(x.grad, np.ones((3, 4)))
