import numpy as np
import pytest

from qracle.autodiff import (
    Adam,
    Tape,
    Tensor,
    adam_step,
    add,
    attention_scores,
    gather_rows,
    leaky_relu,
    load_checkpoint,
    matmul,
    mean_all,
    mse,
    mul,
    relu,
    row_softmax,
    save_checkpoint,
    scale,
    scatter_add_rows,
    transpose,
)
from qracle.errors import FormatError, ShapeError, StateError


def numeric_grad(f, x: np.ndarray, step=1e-6) -> np.ndarray:
    g = np.zeros_like(x)
    flat = x.ravel()
    for k in range(flat.size):
        orig = flat[k]
        flat[k] = orig + step
        up = f()
        flat[k] = orig - step
        down = f()
        flat[k] = orig
        g.ravel()[k] = (up - down) / (2 * step)
    return g


def check_op_gradient(build, tensors, rel_tol=1e-5):
    """Analytic backward vs central differences on every input tensor."""
    for t in tensors:
        t.zero_grad()
    with Tape() as tape:
        loss = mean_all(build())
    tape.backward(loss)
    for t in tensors:
        def forward():
            return float(np.mean(build().values))

        want = numeric_grad(forward, t.values)
        got = t.grad
        assert got is not None
        denom = max(np.max(np.abs(want)), 1e-8)
        err = np.max(np.abs(got - want)) / denom
        assert err <= rel_tol, f"gradient mismatch {err}"


class TestForwardValues:
    def test_matmul_identity(self):
        v = Tensor(np.array([[1.0], [2.0]]))
        out = matmul(Tensor(np.eye(2)), v)
        assert np.array_equal(out.values, v.values)

    def test_relu(self):
        out = relu(Tensor(np.array([-1.0, 2.0])))
        assert np.array_equal(out.values, [0.0, 2.0])

    def test_leaky_relu(self):
        out = leaky_relu(Tensor(np.array([-1.0, 2.0])), slope=0.2)
        assert np.allclose(out.values, [-0.2, 2.0])

    def test_mse_minimum(self):
        with Tape() as tape:
            loss = mse(Tensor(np.array([1.0, 2.0]), requires_grad=True),
                       Tensor(np.array([1.0, 2.0])))
        assert loss.values == 0.0
        tape.backward(loss)

    def test_row_softmax_rows_sum_to_one(self):
        y = row_softmax(Tensor(np.random.default_rng(0).normal(size=(5, 7))))
        assert np.allclose(y.values.sum(axis=1), 1.0, atol=1e-12)

    def test_softmax_handles_minus_inf_mask(self):
        x = np.array([[0.0, -np.inf], [1.0, 1.0]])
        y = row_softmax(Tensor(x))
        assert y.values[0, 0] == 1.0 and y.values[0, 1] == 0.0
        assert np.allclose(y.values[1], [0.5, 0.5])

    def test_gather_scatter_round_trip(self):
        x = Tensor(np.arange(12.0).reshape(4, 3))
        idx = np.array([2, 0, 2])
        g = gather_rows(x, idx)
        assert np.array_equal(g.values, x.values[idx])
        s = scatter_add_rows(g, idx, 4)
        want = np.zeros((4, 3))
        np.add.at(want, idx, x.values[idx])
        assert np.array_equal(s.values, want)

    def test_shape_errors(self):
        with pytest.raises(ShapeError):
            matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))
        with pytest.raises(ShapeError):
            add(Tensor(np.ones((2, 3))), Tensor(np.ones((3, 2))))
        with pytest.raises(ShapeError):
            mse(Tensor(np.ones(3)), Tensor(np.ones(4)))


class TestBackward:
    def test_relu_kink_convention(self):
        x = Tensor(np.array([-1.0, 0.0, 2.0]), requires_grad=True)
        with Tape() as tape:
            y = relu(x)
            loss = scale(mean_all(y), 3.0)  # sum = 3 * mean over 3 entries
        tape.backward(loss)
        assert np.array_equal(x.grad, [0.0, 0.0, 1.0])

    def test_matmul_sum_gradient(self):
        v = Tensor(np.array([[3.0], [4.0]]), requires_grad=True)
        with Tape() as tape:
            out = matmul(Tensor(np.eye(2)), v)
            loss = scale(mean_all(out), 2.0)
        tape.backward(loss)
        assert np.array_equal(v.grad, np.ones((2, 1)))

    @pytest.mark.parametrize("seed", range(3))
    def test_every_primitive_against_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        a = Tensor(rng.normal(size=(4, 3)) + 0.3, requires_grad=True)
        b = Tensor(rng.normal(size=(3, 5)), requires_grad=True)
        bias = Tensor(rng.normal(size=5), requires_grad=True)
        col = Tensor(rng.normal(size=(4, 1)), requires_grad=True)
        idx = np.array([0, 2, 1, 2])

        check_op_gradient(lambda: matmul(a, b), [a, b])
        check_op_gradient(lambda: add(matmul(a, b), bias), [a, b, bias])
        check_op_gradient(lambda: mul(a, col), [a, col])
        check_op_gradient(lambda: relu(a), [a], rel_tol=1e-4)
        check_op_gradient(lambda: leaky_relu(a, 0.2), [a], rel_tol=1e-4)
        # mean(softmax) alone is constant (rows sum to 1); weight the rows so
        # the softmax Jacobian actually enters the loss.
        probe = Tensor(rng.normal(size=(4, 3)))
        check_op_gradient(lambda: mul(row_softmax(a), probe), [a])

        left = Tensor(rng.normal(size=(4, 1)) + 0.2, requires_grad=True)
        right = Tensor(rng.normal(size=(4, 1)), requires_grad=True)
        mask = Tensor(np.zeros((4, 4)))
        check_op_gradient(lambda: attention_scores(left, right, mask), [left, right],
                          rel_tol=1e-4)
        check_op_gradient(lambda: gather_rows(a, idx), [a])
        check_op_gradient(lambda: scatter_add_rows(a, idx, 6), [a])
        check_op_gradient(lambda: transpose(a), [a])
        check_op_gradient(lambda: scale(a, -1.7), [a])

    def test_attention_scores_matches_unfused_chain(self):
        rng = np.random.default_rng(12)
        left = rng.normal(size=(5, 1))
        right = rng.normal(size=(5, 1))
        mask = np.where(rng.random((5, 5)) < 0.4, -np.inf, 0.0)
        np.fill_diagonal(mask, 0.0)
        got = attention_scores(Tensor(left), Tensor(right), Tensor(mask)).values
        pre = left + right.T
        want = np.where(pre > 0, pre, 0.2 * pre) + mask
        assert np.array_equal(got, want)

    def test_mse_gradient_numeric(self):
        rng = np.random.default_rng(9)
        p = Tensor(rng.normal(size=(1, 6)), requires_grad=True)
        t = Tensor(rng.normal(size=(1, 6)))
        with Tape() as tape:
            loss = mse(p, t)
        tape.backward(loss)

        def forward():
            return float(np.mean((p.values - t.values) ** 2))

        want = numeric_grad(forward, p.values)
        assert np.max(np.abs(p.grad - want)) <= 1e-5 * max(1.0, np.max(np.abs(want)))

    def test_three_op_chain_matches_closed_form(self):
        # loss = mean(relu(x W)) for x, W fixed; closed-form gradient
        # dL/dW = x^T (mask / size).
        rng = np.random.default_rng(4)
        x = Tensor(rng.normal(size=(3, 2)))
        w = Tensor(rng.normal(size=(2, 5)), requires_grad=True)
        with Tape() as tape:
            h = matmul(x, w)
            y = relu(h)
            loss = mean_all(y)
        tape.backward(loss)
        mask = (x.values @ w.values) > 0
        want = x.values.T @ (mask / mask.size)
        assert np.allclose(w.grad, want, atol=1e-12)

    def test_gradient_accumulates_across_backwards(self):
        x = Tensor(np.array([1.0, 2.0]), requires_grad=True)
        for _ in range(2):
            with Tape() as tape:
                loss = mean_all(relu(x))
            tape.backward(loss)
        assert np.array_equal(x.grad, [1.0, 1.0])

    def test_no_tape_means_no_recording(self):
        x = Tensor(np.array([1.0]), requires_grad=True)
        y = relu(x)
        assert y.grad is None and x.grad is None

    def test_backward_needs_scalar(self):
        x = Tensor(np.ones((2, 2)), requires_grad=True)
        with Tape() as tape:
            y = relu(x)
        with pytest.raises(ShapeError):
            tape.backward(y)


class TestAdam:
    def test_zero_grad_no_motion(self):
        p = Tensor(np.array([1.0, -1.0]), requires_grad=True)
        p.grad = np.zeros(2)
        Adam([p], lr=0.1, weight_decay=0.0).step()
        assert np.array_equal(p.values, [1.0, -1.0])

    def test_first_step_hand_value(self):
        p = Tensor(np.array([0.0]), requires_grad=True)
        p.grad = np.array([1.0])
        adam_step([p], lr=0.1)
        assert p.values[0] == pytest.approx(-0.1, rel=1e-6)

    def test_missing_grad_raises(self):
        p = Tensor(np.array([0.0]), requires_grad=True)
        with pytest.raises(StateError):
            Adam([p]).step()

    def test_deterministic_trajectory(self):
        def run():
            rng = np.random.default_rng(3)
            p = Tensor(rng.normal(size=4), requires_grad=True)
            opt = Adam([p], lr=1e-2)
            for _ in range(20):
                opt.zero_grad()
                with Tape() as tape:
                    loss = mse(p, Tensor(np.zeros(4)))
                tape.backward(loss)
                opt.step()
            return p.values.copy()

        assert np.array_equal(run(), run())


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(5)
        named = [("layer.w", Tensor(rng.normal(size=(3, 4)))),
                 ("layer.b", Tensor(rng.normal(size=4)))]
        save_checkpoint(tmp_path / "ckpt", named, extra={"note": 1})
        tensors, extra = load_checkpoint(tmp_path / "ckpt")
        assert extra == {"note": 1}
        for name, t in named:
            assert np.array_equal(tensors[name], t.values)

    def test_blob_is_little_endian_f64(self, tmp_path):
        save_checkpoint(tmp_path / "c", [("x", Tensor(np.array([1.0, -2.5])))])
        raw = (tmp_path / "c" / "t000.bin").read_bytes()
        assert raw == np.array([1.0, -2.5]).astype("<f8").tobytes()

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(FormatError):
            load_checkpoint(tmp_path / "nope")
