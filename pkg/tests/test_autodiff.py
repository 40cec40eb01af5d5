import numpy as np
import pytest

from rewire_attack import autodiff as ad
from rewire_attack.kernel import finite_diff_gradient
from oracles import relative_error


def check(build, shapes, seed=0):
    """Compare the autodiff gradient of ``build(*vars)`` with central differences."""
    rng = np.random.default_rng(seed)
    values = [rng.normal(size=s) for s in shapes]
    leaves = [ad.param(v) for v in values]
    out = build(*leaves)
    out.backward()
    for i, v in enumerate(values):
        def f(x, i=i):
            args = [ad.const(w) for w in values]
            args[i] = ad.const(x)
            return float(build(*args).value)
        fd = finite_diff_gradient(f, v, 1e-6)
        assert relative_error(leaves[i].grad, fd) < 1e-6


def test_matmul_add_relu():
    check(lambda a, b, c: ad.total([ad.pick(ad.reshape(ad.relu(ad.add(a @ b, c)), (-1,)), 3)]),
          [(3, 4), (4, 2), (2,)])


def test_vector_matmul():
    check(lambda u, w: ad.pick(u @ w, 1), [(4,), (4, 3)])


def test_max_pool_and_concat():
    def build(f, w):
        u = ad.max_pool(f)
        rep = ad.concat([ad.repeat_row(u, 3), ad.take_rows(f, [0, 2, 2])], axis=1)
        return ad.pick(ad.reshape(rep @ w, (-1,)), 2)
    check(build, [(5, 3), (6, 1)])


def test_masked_log_softmax():
    mask = np.array([True, False, True, True])
    check(lambda s: ad.pick(ad.log_softmax(s, mask), 2), [(4,)])
    out = ad.log_softmax(ad.const(np.zeros(4)), mask)
    assert out.value[1] == -np.inf
    assert np.allclose(np.exp(out.value[mask]), 1 / 3)


def test_max_pool_tie_goes_to_first_row():
    f = ad.param(np.ones((3, 2)))
    u = ad.max_pool(f)
    ad.total([ad.pick(u, 0), ad.pick(u, 1)]).backward()
    assert np.array_equal(f.grad, [[1, 1], [0, 0], [0, 0]])


def test_shared_node_accumulates():
    x = ad.param(np.array([2.0]))
    y = ad.add(x * 3.0, x * 4.0)
    ad.pick(y, 0).backward()
    assert x.grad[0] == pytest.approx(7.0)
