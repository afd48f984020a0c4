import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from _oracles import central_difference, matmul_loops, relative_error
from catseg import ndtensor as nt
from catseg.errors import ContractError, ShapeError
from catseg.ndtensor import Tape, Tensor, backward, verification_mode


def test_matmul_identity_and_zero():
    m = Tensor([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(nt.matmul(Tensor(np.eye(2)), m).data, m.data)
    np.testing.assert_array_equal(nt.matmul(Tensor(np.zeros((2, 2))), m).data, np.zeros((2, 2)))


def test_matmul_matches_loop_oracle():
    a = [[1.0, 2.0], [3.0, 4.0]]
    b = [[5.0, 6.0], [7.0, 8.0]]
    expected = matmul_loops(a, b)
    assert expected == [[19, 22], [43, 50]]
    np.testing.assert_array_equal(nt.matmul(Tensor(a), Tensor(b)).data, expected)


def test_matmul_shape_error_names_shapes():
    with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 3\)"):
        nt.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


def test_softmax_examples():
    np.testing.assert_allclose(nt.softmax(Tensor([0.0, 0.0])).data, [0.5, 0.5])
    with verification_mode():
        y = nt.softmax(Tensor([math.log(2.0), 0.0])).data
    np.testing.assert_allclose(y, [2 / 3, 1 / 3], atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(
    x=arrays(np.float64, (3, 5), elements=st.floats(-50, 50)),
    c=st.floats(-100, 100),
)
def test_softmax_sums_to_one_and_is_shift_invariant(x, c):
    with verification_mode():
        y = nt.softmax(Tensor(x), axis=-1).data
        y_shift = nt.softmax(Tensor(x + c), axis=-1).data
    assert np.all(y > 0)
    np.testing.assert_allclose(y.sum(axis=-1), 1.0, atol=1e-6)
    np.testing.assert_allclose(y, y_shift, atol=1e-6)


def test_softmax_stable_for_large_inputs():
    y = nt.softmax(Tensor([1000.0, 0.0, -1000.0])).data
    assert np.all(np.isfinite(y))


def test_layer_norm_examples():
    gain, bias = Tensor(np.ones(4)), Tensor(np.zeros(4))
    np.testing.assert_allclose(nt.layer_norm(Tensor([[1.0, 1.0, 1.0, 1.0]]), gain, bias).data, 0.0)
    with verification_mode():
        out = nt.layer_norm(Tensor([1.0, -1.0]), Tensor(np.ones(2)), Tensor(np.zeros(2))).data
    # mean 0, variance 1: only the 1e-5 epsilon separates this from [1, -1]
    np.testing.assert_allclose(out, [1.0, -1.0], atol=1e-5)
    b = Tensor([0.3, -0.7, 2.0])
    out = nt.layer_norm(Tensor([[5.0, 1.0, 2.0]]), Tensor(np.zeros(3)), b).data
    np.testing.assert_allclose(out[0], b.data)


def test_layer_norm_rows_are_standardised():
    rng = np.random.default_rng(3)
    with verification_mode():
        out = nt.layer_norm(Tensor(rng.normal(3, 5, size=(6, 8))), Tensor(np.ones(8)), Tensor(np.zeros(8))).data
    np.testing.assert_allclose(out.mean(axis=-1), 0.0, atol=1e-5)
    np.testing.assert_allclose(out.var(axis=-1), 1.0, atol=1e-5)


def test_backward_of_sum_is_ones():
    x = Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
    with Tape() as tape:
        loss = nt.sum(x)
    backward(tape, loss)
    np.testing.assert_array_equal(x.grad, np.ones((2, 3)))
    assert len(tape) == 0


def test_backward_of_self_dot_is_twice_x():
    x = Tensor([1.0, -2.0, 3.0], requires_grad=True)
    with Tape() as tape:
        loss = nt.sum(nt.mul(x, x))
    backward(tape, loss)
    np.testing.assert_allclose(x.grad, 2 * x.data)


def test_backward_rejects_non_scalar():
    x = Tensor([1.0, 2.0], requires_grad=True)
    with Tape() as tape:
        y = nt.mul(x, 2.0)
    with pytest.raises(ContractError):
        backward(tape, y)


def test_unreachable_tensor_untouched():
    x = Tensor([1.0], requires_grad=True)
    y = Tensor([2.0], requires_grad=True)
    y.grad = np.array([42.0])
    with Tape() as tape:
        loss = nt.sum(nt.mul(x, 3.0))
        nt.mul(y, 2.0)
    backward(tape, loss)
    np.testing.assert_array_equal(y.grad, [42.0])


def test_no_recording_without_tape():
    x = Tensor([1.0], requires_grad=True)
    out = nt.mul(x, 2.0)
    assert not out.requires_grad


# Every differentiable op, exercised through a scalar loss, against central differences.
def _op_cases(rng):
    mask = rng.random((3, 4)) < 0.3
    ids = rng.integers(0, 5, size=(2, 3))
    keep = np.where(rng.random((3, 4)) < 0.5, 2.0, 0.0)
    w = rng.normal(size=(3, 4))
    return {
        "add": ((3, 4), (1, 4), lambda a, b: nt.add(a, b)),
        "sub": ((3, 4), (3, 1), lambda a, b: nt.sub(a, b)),
        "mul": ((3, 4), (3, 4), lambda a, b: nt.mul(a, b)),
        "matmul": ((2, 3, 4), (4, 5), lambda a, b: nt.matmul(a, b)),
        "matmul_batched": ((2, 3, 4), (2, 4, 2), lambda a, b: nt.matmul(a, b)),
        "softmax": ((3, 4), None, lambda a: nt.softmax(a, axis=-1)),
        "softmax_axis0": ((3, 4), None, lambda a: nt.softmax(a, axis=0)),
        "layer_norm": ((3, 4), (4,), lambda a, g: nt.layer_norm(a, g, nt.mul(g, 0.5))),
        "relu": ((3, 4), None, lambda a: nt.relu(a)),
        "log": ((3, 4), None, lambda a: nt.log(nt.add(nt.mul(a, a), 1.0), eps=1e-12)),
        "exp": ((3, 4), None, lambda a: nt.exp(a)),
        "reshape_transpose": ((3, 4), None, lambda a: nt.transpose(nt.reshape(a, (2, 6)))),
        "concat": ((3, 4), (3, 2), lambda a, b: nt.concat([a, b, a], axis=1)),
        "getitem": ((3, 4), None, lambda a: nt.getitem(a, (slice(None), 1))),
        "broadcast": ((1, 4), None, lambda a: nt.broadcast_to(a, (3, 4))),
        "masked_fill": ((3, 4), None, lambda a: nt.masked_fill(a, mask, -3.0)),
        "gather_rows": ((5, 4), None, lambda a: nt.gather_rows(a, ids)),
        "dropout_mask": ((3, 4), None, lambda a: nt.mul(a, keep)),
        "mean": ((3, 4), None, lambda a: nt.mean(a, axis=1, keepdims=True)),
    }, w


@pytest.mark.parametrize("case_seed", range(5))
def test_every_op_matches_finite_differences(case_seed):
    rng = np.random.default_rng(case_seed)
    cases, _ = _op_cases(rng)
    with verification_mode():
        for name, (sa, sb, fn) in cases.items():
            inputs = [Tensor(rng.normal(size=sa), requires_grad=True)]
            if sb is not None:
                inputs.append(Tensor(rng.normal(size=sb), requires_grad=True))
            probe = rng.normal(size=fn(*inputs).shape)

            def loss_value():
                return float(np.sum(fn(*inputs).data * probe))

            with Tape() as tape:
                loss = nt.sum(nt.mul(fn(*inputs), probe))
            backward(tape, loss)
            for t in inputs:
                fd = central_difference(loss_value, t.data)
                assert relative_error(t.grad, fd) < 1e-3, name


def test_random_three_layer_composition_gradcheck():
    """100 random cases of linear -> relu -> layer_norm -> softmax -> log-loss."""
    rng = np.random.default_rng(0)
    with verification_mode():
        for _ in range(100):
            x = Tensor(rng.normal(size=(4, 5)), requires_grad=True)
            w1 = Tensor(rng.normal(size=(5, 6)), requires_grad=True)
            w2 = Tensor(rng.normal(size=(6, 3)), requires_grad=True)
            g = Tensor(rng.uniform(0.5, 1.5, size=6), requires_grad=True)
            b = Tensor(rng.normal(size=6) * 0.1, requires_grad=True)
            target = np.eye(3)[rng.integers(0, 3, size=4)]

            def f():
                h = nt.layer_norm(nt.relu(nt.matmul(x, w1)), g, b)
                p = nt.softmax(nt.matmul(h, w2), axis=-1)
                return nt.sum(nt.mul(nt.log(nt.sum(nt.mul(p, target), axis=-1), 1e-12), -1.0))

            with Tape() as tape:
                loss = f()
            backward(tape, loss)
            for t in (x, w1, w2, g, b):
                fd = central_difference(lambda: f().item(), t.data)
                assert relative_error(t.grad, fd) < 1e-3


def test_dropout_is_identity_in_eval_and_inverted_in_train():
    x = Tensor(np.ones((200, 50)))
    assert nt.dropout(x, 0.1, None) is x
    y = nt.dropout(x, 0.1, np.random.default_rng(0)).data
    kept = y[y > 0]
    np.testing.assert_allclose(kept, 1 / 0.9, rtol=1e-6)
    assert abs((y == 0).mean() - 0.1) < 0.01
    y2 = nt.dropout(x, 0.1, np.random.default_rng(0)).data
    np.testing.assert_array_equal(y, y2)


def test_default_precision_and_verification_mode():
    assert Tensor([1.0]).dtype == np.float32
    with verification_mode():
        assert Tensor([1.0]).dtype == np.float64
    assert Tensor([1.0]).dtype == np.float32


def test_ops_on_finite_inputs_stay_finite():
    rng = np.random.default_rng(1)
    x = Tensor(rng.normal(size=(4, 6)) * 100)
    out = nt.layer_norm(nt.softmax(x), Tensor(np.ones(6)), Tensor(np.zeros(6)))
    assert np.all(np.isfinite(out.data))
    assert np.all(np.isfinite(nt.log(nt.softmax(x), eps=1e-12).data))
