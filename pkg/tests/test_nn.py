import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from flowden.errors import ConfigError, NonFiniteError, ShapeError, UsageError
from flowden.nn import (ParamStore, Tape, adam_step, backward, ema_update, forward, load_checkpoint, ops,
                        save_checkpoint)
from helpers import fd_check, tape_grads


# -- forward / backward basics ------------------------------------------------

def test_forward_identity():
    tape = Tape()
    out = forward(tape, lambda x: x, np.array([1.0, 2.0]))
    np.testing.assert_array_equal(out.data, [1.0, 2.0])


def test_forward_square():
    tape = Tape()
    out = forward(tape, lambda x: ops.mul(x, x), np.array([3.0]))
    np.testing.assert_array_equal(out.data, [9.0])


def test_matmul_hand_computed():
    a = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    b = np.array([[1.0], [0.0], [-1.0]])
    out = forward(Tape(), ops.matmul, a, b)
    # rows: 1 - 3, 4 - 6
    np.testing.assert_array_equal(out.data, [[-2.0], [-2.0]])


def test_backward_square_at_three():
    tape = Tape()
    forward(tape, ops.square, np.array(3.0))
    (g,) = backward(tape)
    assert g == pytest.approx(6.0)


def test_backward_tanh_at_zero():
    tape = Tape()
    forward(tape, ops.tanh, np.array(0.0))
    (g,) = backward(tape)
    assert g == pytest.approx(1.0)


def test_backward_before_forward_is_usage_error():
    with pytest.raises(UsageError):
        backward(Tape())


def test_backward_seed_shape_checked():
    tape = Tape()
    forward(tape, lambda x: ops.affine(x, 2.0), np.ones(3))
    with pytest.raises(ShapeError):
        backward(tape, np.ones(2))
    g, = backward(tape, np.array([1.0, 0.0, 2.0]))
    np.testing.assert_array_equal(g, [2.0, 0.0, 4.0])


def test_nonscalar_output_needs_seed():
    tape = Tape()
    forward(tape, lambda x: x * 2.0, np.ones(3))
    with pytest.raises(UsageError):
        backward(tape)


def test_shape_errors_are_structured():
    with pytest.raises(ShapeError) as exc:
        forward(Tape(), ops.matmul, np.ones((2, 3)), np.ones((2, 1)))
    assert "matmul" in str(exc.value)
    with pytest.raises(ShapeError):
        forward(Tape(), ops.add, np.ones((2, 3)), np.ones((4,)))


def test_non_finite_values_rejected():
    with pytest.raises(NonFiniteError):
        Tape().watch(np.array([np.nan]))
    tape = Tape()
    x = tape.watch(np.array([1e200]))
    with pytest.raises(NonFiniteError), np.errstate(over="ignore"):
        ops.mul(x, x)


def test_untaped_ops_return_arrays():
    out = ops.gelu(ops.matmul(np.ones((2, 3)), np.ones((3, 4))))
    assert isinstance(out, np.ndarray) and out.shape == (2, 4)


def test_mixed_tapes_rejected():
    a = Tape().watch(np.ones(2))
    b = Tape().watch(np.ones(2))
    with pytest.raises(UsageError):
        ops.add(a, b)


def test_unused_source_gets_zero_gradient():
    tape = Tape()
    x, y = tape.watch(np.ones(2)), tape.watch(np.ones(3))
    out = ops.sum(ops.square(x))
    gx, gy = tape.gradient(out, [x, y])
    np.testing.assert_array_equal(gx, [2.0, 2.0])
    np.testing.assert_array_equal(gy, np.zeros(3))


def test_reused_value_accumulates():
    # f(x) = x*x + x  ->  2x + 1
    _, (g,) = tape_grads(lambda x: ops.sum(ops.add(ops.mul(x, x), x)), [np.array([2.0, -1.0])])
    np.testing.assert_allclose(g, [5.0, -1.0])


# -- finite-difference checks per primitive -----------------------------------

rng = np.random.default_rng(0)
A = rng.standard_normal((3, 4))
B = rng.standard_normal((4, 2))
C = rng.standard_normal((3, 4))
W = rng.standard_normal((3, 4))  # fixed projection so every output scalar matters
P = rng.standard_normal((4, 4))

PRIMITIVES = {
    "add": (lambda a, c: ops.sum(ops.mul(ops.add(a, c), W)), [A, C]),
    "add_broadcast": (lambda a, b: ops.sum(ops.mul(ops.add(a, b), W)), [A, rng.standard_normal(4)]),
    "sub": (lambda a, c: ops.sum(ops.mul(ops.sub(a, c), W)), [A, C]),
    "mul": (lambda a, c: ops.sum(ops.mul(ops.mul(a, c), W)), [A, C]),
    "mul_broadcast": (lambda a, b: ops.sum(ops.mul(ops.mul(a, b), W)), [A, rng.standard_normal((3, 1))]),
    "square": (lambda a: ops.sum(ops.mul(ops.square(a), W)), [A]),
    "affine": (lambda a: ops.sum(ops.mul(ops.affine(a, -1.7, 0.3), W)), [A]),
    "matmul": (lambda a, b: ops.sum(ops.square(ops.matmul(a, b))), [A, B]),
    "matmul_batched": (lambda a, b: ops.sum(ops.square(ops.matmul(a, b))), [rng.standard_normal((2, 3, 4)), B]),
    "tanh": (lambda a: ops.sum(ops.mul(ops.tanh(a), W)), [A]),
    "relu": (lambda a: ops.sum(ops.mul(ops.relu(a), W)), [A]),
    "gelu": (lambda a: ops.sum(ops.mul(ops.gelu(a), W)), [A]),
    "layer_norm": (lambda a, g, b: ops.sum(ops.mul(ops.layer_norm(a, g, b), W)),
                   [A, rng.standard_normal(4), rng.standard_normal(4)]),
    "reshape": (lambda a: ops.sum(ops.mul(ops.reshape(a, (4, 3)), W.reshape(4, 3))), [A]),
    "transpose": (lambda a: ops.sum(ops.mul(ops.transpose(a, (1, 0)), W.T)), [A]),
    "swapaxes": (lambda a: ops.sum(ops.mul(ops.swapaxes(a, 0, 1), W.T)), [A]),
    "concat": (lambda a, c: ops.sum(ops.mul(ops.concat([a, c], axis=1), np.hstack([W, W]))), [A, C]),
    "sum_axis": (lambda a: ops.sum(ops.square(ops.sum(a, axis=0))), [A]),
    "mean": (lambda a: ops.sum(ops.square(ops.mean(a, axis=1, keepdims=True))), [A]),
    "patchify": (lambda x: ops.sum(ops.mul(ops.patchify(x, 2), P)),
                 [rng.standard_normal((4, 4))]),
    "unpatchify": (lambda x: ops.sum(ops.mul(ops.unpatchify(x, 2), W[:, :4].T @ W[:, :4])),
                   [rng.standard_normal((4, 4))]),
}


@pytest.mark.parametrize("name", sorted(PRIMITIVES))
def test_primitive_gradients_match_finite_differences(name):
    fn, inputs = PRIMITIVES[name]
    assert fd_check(fn, inputs) <= 1e-4


def two_layer(x, w1, b1, w2, b2):
    h = ops.gelu(ops.add(ops.matmul(x, w1), b1))
    y = ops.add(ops.matmul(h, w2), b2)
    return ops.mean(ops.square(y))


def test_random_two_layer_net_gradients():
    r = np.random.default_rng(42)
    args = [r.standard_normal((5, 3)), r.standard_normal((3, 8)), r.standard_normal(8),
            r.standard_normal((8, 2)), r.standard_normal(2)]
    assert fd_check(two_layer, args) <= 1e-4


@settings(max_examples=25, deadline=None)
@given(arrays(np.float64, (2, 3), elements=st.floats(-3, 3)), arrays(np.float64, (3,), elements=st.floats(-3, 3)))
def test_broadcast_mul_add_gradient_property(a, b):
    fn = lambda a, b: ops.sum(ops.square(ops.add(ops.mul(a, b), b)))  # noqa: E731
    _, (ga, gb) = tape_grads(fn, [a, b])
    y = a * b + b
    np.testing.assert_allclose(ga, 2 * y * b, atol=1e-12)
    np.testing.assert_allclose(gb, np.sum(2 * y * (a + 1), axis=0), atol=1e-12)


def test_tape_records_in_topological_order():
    tape = Tape()
    x = tape.watch(np.ones(2))
    y = ops.tanh(ops.mul(x, x))
    ops.sum(y)
    ids = [op[0] for op in tape._ops]
    assert ids == sorted(ids)
    for out_id, in_ids, _ in tape._ops:
        assert all(i is None or i < out_id for i in in_ids)


# -- Adam ----------------------------------------------------------------------

def test_adam_first_step_closed_form():
    store = ParamStore(params={"w": np.array(1.0)})
    adam_step(store, {"w": np.array(1.0)}, lr=0.1)
    # m_hat = v_hat = 1 after bias correction: step = lr / (1 + eps)
    assert store.params["w"] == pytest.approx(1.0 - 0.1 / (1.0 + 1e-8), abs=1e-15)
    assert store.step == 1


def test_adam_zero_gradient_leaves_params():
    store = ParamStore(params={"w": np.array([1.0, -2.0])})
    adam_step(store, {"w": np.zeros(2)}, lr=0.1)
    np.testing.assert_array_equal(store.params["w"], [1.0, -2.0])


def test_adam_constant_gradient_moves_against_sign():
    store = ParamStore(params={"w": np.array([0.0, 0.0])})
    g = np.array([0.5, -3.0])
    traj = [store.params["w"].copy()]
    for _ in range(2):
        adam_step(store, {"w": g}, lr=0.01)
        traj.append(store.params["w"].copy())
    d = np.diff(np.array(traj), axis=0)
    assert np.all(np.sign(d) == -np.sign(g))


def test_adam_rejects_bad_gradients_without_mutation():
    store = ParamStore(params={"a": np.ones(2), "b": np.ones(2)})
    before = store.copy()
    with pytest.raises(NonFiniteError):
        adam_step(store, {"a": np.ones(2), "b": np.array([1.0, np.inf])}, lr=0.1)
    np.testing.assert_array_equal(store.params["a"], before.params["a"])
    assert store.step == 0
    with pytest.raises(ShapeError):
        adam_step(store, {"a": np.ones(3)}, lr=0.1)


def test_adam_matches_reference_recursion():
    r = np.random.default_rng(3)
    store = ParamStore(params={"w": r.standard_normal(4)})
    w = store.params["w"].copy()
    m = np.zeros(4)
    v = np.zeros(4)
    for k in range(1, 6):
        g = r.standard_normal(4)
        adam_step(store, {"w": g}, lr=0.05, beta1=0.8, beta2=0.9, eps=1e-6)
        m = 0.8 * m + 0.2 * g
        v = 0.9 * v + 0.1 * g * g
        w = w - 0.05 * (m / (1 - 0.8 ** k)) / (np.sqrt(v / (1 - 0.9 ** k)) + 1e-6)
    np.testing.assert_allclose(store.params["w"], w, rtol=1e-13)


# -- EMA -----------------------------------------------------------------------

def test_ema_zero_decay_copies_params():
    store = ParamStore(params={"w": np.array([3.0])})
    store.ema = {"w": np.array([-1.0])}
    ema_update(store, 0.0)
    np.testing.assert_array_equal(store.ema["w"], [3.0])


def test_ema_decay_one_rejected():
    store = ParamStore(params={"w": np.array([3.0])})
    with pytest.raises(ConfigError):
        ema_update(store, 1.0)
    with pytest.raises(ConfigError):
        ema_update(store, -0.1)


def test_ema_single_step_value():
    store = ParamStore(params={"w": np.array([1.0])})
    store.ema = {"w": np.array([0.0])}
    ema_update(store, 0.9)
    assert store.ema["w"][0] == pytest.approx(0.1, abs=1e-15)


def test_ema_initialized_from_params_on_first_call():
    store = ParamStore(params={"w": np.array([2.0])})
    ema_update(store, 0.5)
    np.testing.assert_array_equal(store.ema["w"], [2.0])


def test_ema_converges_geometrically():
    store = ParamStore(params={"w": np.array([1.0])})
    store.ema = {"w": np.array([0.0])}
    for k in range(1, 30):
        ema_update(store, 0.8)
        assert 1.0 - store.ema["w"][0] == pytest.approx(0.8 ** k, rel=1e-10)


# -- determinism and checkpoints ----------------------------------------------

def _train_tiny(seed):
    r = np.random.default_rng(seed)
    store = ParamStore(params={"w1": r.standard_normal((3, 6)), "b1": np.zeros(6),
                               "w2": r.standard_normal((6, 1)), "b2": np.zeros(1)})
    x = r.standard_normal((16, 3))
    for _ in range(10):
        tape = Tape()
        p = {k: tape.watch(v) for k, v in store.params.items()}
        loss = ops.mean(ops.square(ops.add(ops.matmul(ops.tanh(ops.add(ops.matmul(x, p["w1"]), p["b1"])), p["w2"]), p["b2"])))
        g = tape.backward(loss)
        adam_step(store, {k: g[t.id] for k, t in p.items()}, lr=1e-2)
        ema_update(store, 0.9)
    return store


def test_training_is_bit_deterministic():
    a, b = _train_tiny(5), _train_tiny(5)
    for k in a.params:
        assert np.array_equal(a.params[k], b.params[k])
        assert np.array_equal(a.ema[k], b.ema[k])


def test_checkpoint_round_trip(tmp_path):
    store = _train_tiny(1)
    path = tmp_path / "ck.dnlb"
    save_checkpoint(path, store, {"note": "x"})
    assert path.read_bytes()[:5] == b"DNLB1"
    loaded, meta = load_checkpoint(path)
    assert meta == {"note": "x"} and loaded.step == store.step
    for k in store.params:
        assert np.array_equal(loaded.params[k], store.params[k])
        assert np.array_equal(loaded.ema[k], store.ema[k])


def test_checkpoint_rejects_bad_magic(tmp_path):
    from flowden.errors import FlowdenError
    path = tmp_path / "bad"
    path.write_bytes(b"NOPE" + b"\0" * 20)
    with pytest.raises(FlowdenError):
        load_checkpoint(path)


def test_cleared_tape_is_freed_without_cycle_collection():
    import gc
    import weakref

    gc.disable()
    try:
        tape = Tape()
        w = tape.watch(np.ones((3, 3)))
        out = ops.mean(ops.square(ops.matmul(w, w)))
        tape.backward(out)
        assert len(tape) > 0
        tape.clear()
        assert len(tape) == 0
        ref = weakref.ref(tape)
        del tape, w, out
        assert ref() is None
    finally:
        gc.enable()
