import numpy as np
import pytest

from butterfly_stft import autodiff as ad
from butterfly_stft.autodiff import ParamTensor, Tape, finite_diff_check
from butterfly_stft.butterfly import build_stage_matrix
from butterfly_stft.errors import ShapeError, TapeError
from butterfly_stft.layers import (TrainableButterfly, TrainableWindow, butterfly_forward, butterfly_inverse,
                                   sparse_backward, sparse_forward, window_forward)

TOL = 1e-5


def weighted_sum(z, weights, tape):
    return ad.sum_all(ad.mul(z, weights, tape), tape)


def test_sparse_forward_two_point():
    f = build_stage_matrix(2, 1)
    p = ParamTensor("w", f.values)
    y = sparse_forward(f, p, np.array([[3.0, 5.0], [0.0, 0.0]])).value
    assert y.tolist() == [[8.0, -2.0], [0.0, 0.0]]


def test_sparse_forward_zeroed_values():
    f = build_stage_matrix(8, 2)
    f.values[:] = 0.0
    x = np.random.default_rng(0).standard_normal((2, 8))
    assert not np.any(sparse_forward(f, ParamTensor("w", f.values), x).value)


@pytest.mark.parametrize("seed", range(3))
def test_sparse_forward_matches_dense(seed):
    rng = np.random.default_rng(seed)
    f = build_stage_matrix(16, 3)
    f.values[:] = rng.standard_normal(f.values.shape)
    x = rng.standard_normal((2, 5, 16))
    y = sparse_forward(f, ParamTensor("w", f.values), x).value
    ref = (x[0] + 1j * x[1]) @ f.to_dense().T
    np.testing.assert_allclose(y[0] + 1j * y[1], ref, atol=1e-12)


def test_sparse_backward_single_entry():
    f = build_stage_matrix(2, 1)
    f.values[:] = 0.0
    f.values[0] = (1.0, 0.0)  # entry (row 0, col 0)
    x = np.array([[2.0, 0.0], [0.0, 0.0]])
    g = np.array([[1.0, 0.0], [0.0, 0.0]])
    gv, gx = sparse_backward(f, x, g)
    assert gv[0].tolist() == [2.0, 0.0]
    assert gx[0, 0] == 1.0


def test_sparse_backward_zero_grad_out():
    f = build_stage_matrix(8, 3)
    x = np.random.default_rng(0).standard_normal((2, 8))
    gv, gx = sparse_backward(f, x, np.zeros((2, 8)))
    assert not gv.any() and not gx.any()


@pytest.mark.parametrize("seed", range(10))
def test_sparse_layer_gradcheck(seed):
    rng = np.random.default_rng(seed)
    f = build_stage_matrix(8, 2)
    f.values[:] = rng.standard_normal(f.values.shape)
    p = ParamTensor("w", f.values)
    x = ParamTensor("x", rng.standard_normal((2, 3, 8)))
    wts = rng.standard_normal((2, 3, 8))
    res = finite_diff_check(lambda t: weighted_sum(sparse_forward(f, p, x, t), wts, t), [p, x])
    assert res.max_rel_error <= TOL


def test_sparse_forward_shape_error():
    f = build_stage_matrix(8, 1)
    with pytest.raises(ShapeError):
        sparse_forward(f, ParamTensor("w", f.values), np.zeros((2, 4)))


def test_window_examples():
    win = TrainableWindow(4)
    assert win.w.values.tolist() == [0.0, 0.5, 1.0, 0.5]
    assert window_forward(win, np.ones(4)).value.tolist() == [0.0, 0.5, 1.0, 0.5]
    frame = np.random.default_rng(0).standard_normal(4)
    assert np.array_equal(window_forward(TrainableWindow(4, init="ones"), frame).value, frame)
    with pytest.raises(ShapeError):
        window_forward(win, np.ones(5))


@pytest.mark.parametrize("seed", range(10))
def test_window_gradcheck(seed):
    rng = np.random.default_rng(seed)
    win = TrainableWindow(8, init=rng.standard_normal(8))
    frames = ParamTensor("frames", rng.standard_normal((3, 8)))
    wts = rng.standard_normal((3, 8))
    res = finite_diff_check(lambda t: weighted_sum(window_forward(win, frames, t), wts, t), [win.w, frames])
    assert res.max_rel_error <= TOL


def test_window_grad_formula():
    win = TrainableWindow(4)
    frame = np.array([1.0, 2.0, 3.0, 4.0])
    g = np.array([0.5, -1.0, 2.0, 0.0])
    tape = Tape()
    out = window_forward(win, frame, tape)
    tape.backward(out, g)
    assert win.w.grad.tolist() == (g * frame).tolist()


def test_elementwise_values():
    assert ad.sigmoid(np.array(0.0)).value == 0.5
    assert ad.tanh(np.array(0.0)).value == 0.0
    x = ParamTensor("x", np.array([0.0]))
    tape = Tape()
    tape.backward(ad.sum_all(ad.tanh(x, tape), tape))
    assert x.grad[0] == 1.0


@pytest.mark.parametrize("seed", range(10))
def test_elementwise_and_matvec_gradcheck(seed):
    rng = np.random.default_rng(seed)
    W = ParamTensor("W", rng.standard_normal((4, 3)))
    b = ParamTensor("b", rng.standard_normal(3))
    x = ParamTensor("x", rng.standard_normal((5, 4)))
    y = ParamTensor("y", rng.standard_normal((5, 3)))
    V = ParamTensor("V", rng.standard_normal((3, 2)))

    def f(t):
        h = ad.linear(x, W, b, t)
        h = ad.add(ad.tanh(h, t), ad.mul(ad.sigmoid(h, t), y, t), t)
        h = ad.sub(h, ad.scale(y, 0.3, t), t)
        return ad.sum_all(ad.matvec(V, ad.mul(h, h, t), t), t)

    assert finite_diff_check(f, [W, b, x, y, V]).max_rel_error <= TOL


def test_quadratic_finite_difference():
    theta = ParamTensor("theta", np.array([3.0]))
    res = finite_diff_check(lambda t: ad.sum_all(ad.mul(theta, theta, t), t), [theta])
    assert res.analytic["theta"][0] == 6.0
    assert abs(res.numeric["theta"][0] - 6.0) <= 1e-8


def test_frozen_parameter_reports_zero_grad():
    a = ParamTensor("a", np.array([2.0]))
    frozen = ParamTensor("frozen", np.array([5.0]), trainable=False)
    res = finite_diff_check(lambda t: ad.sum_all(ad.mul(a, frozen, t), t), [a, frozen])
    assert res.analytic["frozen"][0] == 0.0
    assert "frozen" not in res.numeric


@pytest.mark.parametrize("seed", range(3))
def test_permutation_backward_is_inverse_index_map(seed):
    rng = np.random.default_rng(seed)
    perm = rng.permutation(8)
    x = ParamTensor("x", rng.standard_normal((2, 8)))
    g = rng.standard_normal((2, 8))
    tape = Tape()
    out = ad.permute(x, perm, tape)
    tape.backward(out, g)
    expected = np.empty_like(g)
    expected[:, perm] = g
    assert np.array_equal(x.grad, expected)


def test_butterfly_forward_and_inverse_gradcheck():
    rng = np.random.default_rng(7)
    fwd = TrainableButterfly(8, "f")
    inv = TrainableButterfly(8, "i")
    for p in fwd.params + inv.params:
        p.values += 0.1 * rng.standard_normal(p.values.shape)
    x = ParamTensor("x", rng.standard_normal((2, 2, 8)))
    wts = rng.standard_normal((2, 2, 8))
    f = lambda t: weighted_sum(butterfly_inverse(inv, butterfly_forward(fwd, x, t), t), wts, t)
    assert finite_diff_check(f, fwd.params + inv.params + [x]).max_rel_error <= TOL


def test_gradient_accumulation_is_additive():
    # integer-valued data keeps every product and sum exact in binary64
    rng = np.random.default_rng(3)
    win = TrainableWindow(8, init=rng.integers(-4, 5, 8).astype(float))
    frames = rng.integers(-8, 9, (2, 8)).astype(float)
    g1, g2 = rng.integers(-8, 9, (2, 2, 8)).astype(float)
    for g in (g1, g2):
        tape = Tape()
        tape.backward(window_forward(win, frames, tape), g)
    two = win.w.grad.copy()
    win.w.zero_grad()
    tape = Tape()
    tape.backward(window_forward(win, frames, tape), g1 + g2)
    np.testing.assert_array_equal(two, win.w.grad)


def test_pass_through_accumulation_is_exact():
    rng = np.random.default_rng(4)
    x = ParamTensor("x", rng.standard_normal(6))
    g1, g2 = rng.standard_normal((2, 6))
    for g in (g1, g2):
        tape = Tape()
        tape.backward(ad.add(x, 1.0, tape), g)
    assert np.array_equal(x.grad, g1 + g2)


def test_zero_grad_then_forward_leaves_zero():
    win = TrainableWindow(8)
    win.w.grad[:] = 1.0
    ad.zero_grad(win.params)
    window_forward(win, np.ones(8), Tape())
    assert not win.w.grad.any()


def test_tape_is_consumed():
    x = ParamTensor("x", np.array([1.0, 2.0]))
    tape = Tape()
    out = ad.sum_all(ad.mul(x, x, tape), tape)
    tape.backward(out)
    assert len(tape) == 0
    with pytest.raises(TapeError):
        tape.backward(out)


def test_frame_overlap_add_adjoint():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(20)
    F = rng.standard_normal((ad.frame_count(20, 8, 4), 8))
    lhs = np.sum(ad.frame(x, 8, 4).value * F)
    rhs = np.sum(x * ad.overlap_add(F, 4, 20).value)
    assert lhs == pytest.approx(rhs, rel=1e-12)
