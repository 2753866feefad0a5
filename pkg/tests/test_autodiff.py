import numpy as np
import pytest
import torch

from src.autodiff import (
    Adam, Module, Parameter, Tensor, check_gradients, concat, conv2d, depthwise_conv2d,
    elementwise, get_default_dtype, no_grad, numerical_gradient, pad2d, precision, wrap_angle,
)
from src.errors import CheckpointMismatchError, ContractError, ShapeError

# Finite-difference agreement required of every differentiable op (h=1e-5, f64)
GRAD_TOL = 1e-4
SEEDS = range(10)

TORCH_UNARY = {
    "neg": torch.neg, "exp": torch.exp, "log": torch.log, "sqrt": torch.sqrt, "abs": torch.abs,
    "sin": torch.sin, "cos": torch.cos, "silu": torch.nn.functional.silu,
}
TORCH_BINARY = {"add": torch.add, "sub": torch.sub, "mul": torch.mul, "div": torch.div}


class TwoLayer(Module):
    def __init__(self):
        self.first = Parameter(np.ones((2, 3)))
        self.blocks = [Parameter(np.zeros(3)), Parameter(np.zeros(2))]


def test_broadcast_gradient_is_summed_back(f64):
    a = Tensor(np.ones((2, 3)), requires_grad=True)
    b = Tensor(np.arange(3.0), requires_grad=True)
    (a * b).sum().backward()
    assert b.grad.shape == (3,)
    np.testing.assert_allclose(b.grad, [2.0, 2.0, 2.0])
    np.testing.assert_allclose(a.grad, np.tile(np.arange(3.0), (2, 1)))


def test_incompatible_broadcast_raises():
    with pytest.raises(ShapeError):
        Tensor(np.ones((2, 3))) + Tensor(np.ones((4,)))


def test_backward_requires_scalar_loss():
    x = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(ContractError):
        (x * 2.0).backward()


def test_no_grad_records_nothing():
    x = Tensor(np.ones(3), requires_grad=True)
    with no_grad():
        y = (x * 3.0).sum()
    assert y.node is None
    assert not y.requires_grad


def test_frozen_parameter_receives_no_gradient(f64):
    p = Parameter(np.ones(3))
    q = Parameter(np.ones(3), frozen=True)
    (p * q).sum().backward()
    assert q.grad is None
    np.testing.assert_allclose(p.grad, np.ones(3))


def test_parameter_follows_default_precision():
    with precision("f64"):
        assert Parameter(np.ones(2, dtype=np.float32)).dtype == np.float64
    with precision("f32"):
        assert Parameter(np.ones(2)).dtype == np.float32
        assert get_default_dtype() is np.float32


@pytest.mark.parametrize("seed", SEEDS)
def test_elementwise_gradients(f64, seed):
    rng = np.random.default_rng(seed)
    a = Tensor(rng.standard_normal((3, 4)), requires_grad=True)
    b = Tensor(rng.uniform(0.5, 1.5, (3, 4)), requires_grad=True)
    err = check_gradients(
        lambda: (a.sigmoid() * b.log() + (a / b).exp() * 0.1 - a.silu() * b.sqrt()
                 + a.sin() * b.cos() - (a * b).abs()).sum(),
        [a, b],
    )
    assert err < GRAD_TOL


@pytest.mark.parametrize("seed", SEEDS)
def test_concat_pad_and_indexing_gradients(f64, seed):
    rng = np.random.default_rng(seed)
    x = Tensor(rng.standard_normal((2, 3, 3)), requires_grad=True)
    w = Tensor(rng.standard_normal((3, 5, 5)))

    def loss():
        stacked = concat([x, x[:1] * 2.0], axis=0)
        return (stacked ** 2).sum() * 0.5 + (pad2d(stacked, 1, mode="edge") * w).sum()

    err = check_gradients(loss, [x])
    assert err < GRAD_TOL


@pytest.mark.parametrize("op", sorted(TORCH_UNARY))
def test_unary_tags_match_torch(f64, rng, op):
    data = rng.uniform(0.2, 2.0, (3, 4)) if op in ("log", "sqrt") else rng.standard_normal((3, 4))
    if op == "abs":
        data[0, :2] = 0.0
    proj = rng.standard_normal((3, 4))
    x = Tensor(data, requires_grad=True)
    (elementwise(op, x) * Tensor(proj)).sum().backward()

    tx = torch.tensor(data, requires_grad=True)
    ref = TORCH_UNARY[op](tx)
    (ref * torch.tensor(proj)).sum().backward()

    np.testing.assert_allclose(elementwise(op, Tensor(data)).data, ref.detach().numpy(), atol=1e-12)
    np.testing.assert_allclose(x.grad, tx.grad.numpy(), atol=1e-12)


def test_abs_gradient_is_zero_at_zero(f64):
    x = Tensor(np.array([-2.0, 0.0, 3.0]), requires_grad=True)
    elementwise("abs", x).sum().backward()
    np.testing.assert_array_equal(x.grad, [-1.0, 0.0, 1.0])


@pytest.mark.parametrize("op", sorted(TORCH_BINARY))
def test_binary_tags_broadcast_like_torch(f64, rng, op):
    a = rng.standard_normal((3, 4))
    b = rng.uniform(0.5, 1.5, (4,))
    proj = rng.standard_normal((3, 4))
    at, bt = Tensor(a, requires_grad=True), Tensor(b, requires_grad=True)
    out = elementwise(op, at, bt)
    (out * Tensor(proj)).sum().backward()

    ta, tb = torch.tensor(a, requires_grad=True), torch.tensor(b, requires_grad=True)
    ref = TORCH_BINARY[op](ta, tb)
    (ref * torch.tensor(proj)).sum().backward()

    assert out.shape == (3, 4)
    np.testing.assert_allclose(out.data, ref.detach().numpy(), atol=1e-12)
    np.testing.assert_allclose(at.grad, ta.grad.numpy(), atol=1e-12)
    np.testing.assert_allclose(bt.grad, tb.grad.numpy(), atol=1e-12)


def test_elementwise_examples(f64, rng):
    np.testing.assert_array_equal(elementwise("add", Tensor([1.0, 2.0]), Tensor([3.0, 4.0])).data, [4.0, 6.0])
    x = rng.standard_normal(5)
    np.testing.assert_array_equal(elementwise("mul", Tensor(x), 1.0).data, x)


def test_elementwise_shape_error_names_both_shapes():
    with pytest.raises(ShapeError, match=r"\[2, 3\].*\[4\]"):
        elementwise("add", Tensor(np.ones((2, 3))), Tensor(np.ones(4)))


@pytest.mark.parametrize("op, operands", [
    ("pow", 1),
    ("add", 1),
    ("exp", 2),
])
def test_elementwise_rejects_bad_tags_and_arity(op, operands):
    args = [Tensor(np.ones(2))] * operands
    with pytest.raises(ValueError):
        elementwise(op, *args)


def test_clamp_matches_torch_at_bounds(f64):
    data = np.array([-2.0, -1.0, -0.5, 0.0, 0.7, 1.0, 1.5])
    x = Tensor(data, requires_grad=True)
    out = x.clamp(-1.0, 1.0)
    out.sum().backward()

    tx = torch.tensor(data, requires_grad=True)
    ref = torch.clamp(tx, -1.0, 1.0)
    ref.sum().backward()

    np.testing.assert_array_equal(out.data, ref.detach().numpy())
    np.testing.assert_array_equal(x.grad, tx.grad.numpy())
    np.testing.assert_array_equal(x.grad, [0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0])


def test_silu_gradient_at_zero(f64):
    x = Tensor(np.zeros(1), requires_grad=True)
    elementwise("silu", x).sum().backward()
    assert x.grad[0] == 0.5
    numeric = numerical_gradient(lambda: elementwise("silu", x).sum(), x, h=1e-6)
    assert abs(numeric[0] - 0.5) < 1e-8


def test_shared_subexpression_accumulates(f64, rng):
    x = Tensor(rng.standard_normal(4), requires_grad=True)
    y, z = rng.standard_normal(4), rng.standard_normal(4)
    (x * Tensor(y) + x * Tensor(z)).sum().backward()
    np.testing.assert_allclose(x.grad, y + z, atol=1e-12)


def test_sum_of_half_squares_gives_identity_gradient(f64, rng):
    data = rng.standard_normal(6)
    x = Tensor(data, requires_grad=True)
    (x * x * 0.5).sum().backward()
    np.testing.assert_allclose(x.grad, data, atol=1e-12)


def test_broadcast_shape_is_associative():
    a, b, c = Tensor(np.ones((2, 1, 4))), Tensor(np.ones((3, 1))), Tensor(np.ones(4))
    assert (a + (b + c)).shape == ((a + b) + c).shape == (2, 3, 4)


@pytest.mark.parametrize("seed", SEEDS)
def test_matmul_gradients_match_finite_differences(f64, seed):
    rng = np.random.default_rng(seed)
    a = Tensor(rng.standard_normal((4, 5)), requires_grad=True)
    b = Tensor(rng.standard_normal((5, 3)), requires_grad=True)
    proj = Tensor(rng.standard_normal((4, 3)))
    assert check_gradients(lambda: ((a @ b) * proj).sum(), [a, b]) < 1e-6


def test_matmul_examples(f64, rng):
    x = rng.standard_normal((3, 2))
    np.testing.assert_allclose((Tensor(np.eye(3)) @ Tensor(x)).data, x, atol=1e-15)
    out = Tensor(np.array([[1.0, 2.0], [3.0, 4.0]])) @ Tensor(np.ones((2, 1)))
    np.testing.assert_array_equal(out.data, [[3.0], [7.0]])
    with pytest.raises(ShapeError):
        Tensor(np.ones((2, 3))) @ Tensor(np.ones((2, 3)))


@pytest.mark.parametrize("seed", SEEDS)
def test_composite_backward_matches_finite_differences(f64, seed):
    rng = np.random.default_rng(seed)
    a = Tensor(rng.standard_normal((3, 4)), requires_grad=True)
    b = Tensor(rng.standard_normal((4, 2)), requires_grad=True)
    assert check_gradients(lambda: (a @ b).silu().sum(), [a, b]) < 1e-5


@pytest.mark.parametrize("seed", SEEDS)
def test_conv2d_gradients_match_finite_differences(f64, seed):
    rng = np.random.default_rng(seed)
    x = Tensor(rng.standard_normal((2, 8, 8)), requires_grad=True)
    k = Tensor(rng.standard_normal((4, 2, 3, 3)), requires_grad=True)
    proj = Tensor(rng.standard_normal((4, 8, 8)))
    assert check_gradients(lambda: (conv2d(x, k) * proj).sum(), [x, k]) < 1e-5


def test_conv2d_examples(f64, rng):
    x = rng.standard_normal((1, 2, 5, 5))
    identity = np.zeros((2, 2, 1, 1))
    identity[0, 0] = identity[1, 1] = 1.0
    np.testing.assert_array_equal(conv2d(Tensor(x), Tensor(identity)).data, x)
    with pytest.raises(ShapeError, match="Non-positive"):
        conv2d(Tensor(np.ones((1, 2, 2))), Tensor(np.ones((1, 1, 3, 3))), padding=0)


def test_depthwise_equals_block_diagonal_conv2d(f64, rng):
    x = Tensor(rng.standard_normal((2, 6, 6)))
    dw = rng.standard_normal((2, 3, 3))
    dense = np.zeros((2, 2, 3, 3))
    for c in range(2):
        dense[c, c] = dw[c]
    diff = np.abs(depthwise_conv2d(x, Tensor(dw)).data - conv2d(x, Tensor(dense)).data)
    assert diff.max() < 1e-12


def test_depthwise_examples(f64, rng):
    x = rng.standard_normal((3, 5, 5))
    delta = np.zeros((3, 3, 3))
    delta[:, 1, 1] = 1.0
    np.testing.assert_array_equal(depthwise_conv2d(Tensor(x), Tensor(delta)).data, x)
    np.testing.assert_array_equal(depthwise_conv2d(Tensor(x), Tensor(np.zeros((3, 3, 3)))).data, 0.0)
    with pytest.raises(ShapeError):
        depthwise_conv2d(Tensor(x), Tensor(np.zeros((2, 3, 3))))


def test_wrap_angle_range():
    angles = Tensor(np.array([-3 * np.pi, -np.pi, 0.5, np.pi, 2.5 * np.pi]))
    wrapped = wrap_angle(angles).data
    assert np.all(wrapped > -np.pi - 1e-12)
    assert np.all(wrapped <= np.pi + 1e-12)
    np.testing.assert_allclose(np.cos(wrapped), np.cos(angles.data), atol=1e-12)


@pytest.mark.parametrize("stride", [1, 2])
def test_conv2d_matches_torch(f64, rng, stride):
    x = rng.standard_normal((2, 3, 8, 8))
    k = rng.standard_normal((4, 3, 3, 3))
    bias = rng.standard_normal(4)
    xt = Tensor(x, requires_grad=True)
    kt = Tensor(k, requires_grad=True)
    bt = Tensor(bias, requires_grad=True)
    out = conv2d(xt, kt, stride=stride, bias=bt, pad_mode="zeros")
    proj = rng.standard_normal(out.shape)
    (out * Tensor(proj)).sum().backward()

    tx = torch.tensor(x, requires_grad=True)
    tk = torch.tensor(k, requires_grad=True)
    tb = torch.tensor(bias, requires_grad=True)
    ref = torch.nn.functional.conv2d(tx, tk, tb, stride=stride, padding=1)
    (ref * torch.tensor(proj)).sum().backward()

    np.testing.assert_allclose(out.data, ref.detach().numpy(), atol=1e-10)
    np.testing.assert_allclose(xt.grad, tx.grad.numpy(), atol=1e-10)
    np.testing.assert_allclose(kt.grad, tk.grad.numpy(), atol=1e-10)
    np.testing.assert_allclose(bt.grad, tb.grad.numpy(), atol=1e-10)


def test_depthwise_conv_matches_grouped_torch_conv(f64, rng):
    x = rng.standard_normal((1, 3, 6, 6))
    k = rng.standard_normal((3, 3, 3))
    xt = Tensor(x, requires_grad=True)
    out = depthwise_conv2d(xt, Tensor(k), pad_mode="zeros")
    out.sum().backward()
    tx = torch.tensor(x, requires_grad=True)
    ref = torch.nn.functional.conv2d(tx, torch.tensor(k[:, None]), padding=1, groups=3)
    ref.sum().backward()
    np.testing.assert_allclose(out.data, ref.detach().numpy(), atol=1e-10)
    np.testing.assert_allclose(xt.grad, tx.grad.numpy(), atol=1e-10)


def test_edge_padding_preserves_constant_maps(f64):
    x = Tensor(np.full((1, 2, 5, 5), 0.3))
    k = Tensor(np.full((2, 2, 3, 3), 1.0 / 18.0))
    np.testing.assert_allclose(conv2d(x, k).data, 0.3, atol=1e-12)


def test_matmul_matches_torch(f64, rng):
    a, b = rng.standard_normal((4, 5)), rng.standard_normal((5, 3))
    at, bt = Tensor(a, requires_grad=True), Tensor(b, requires_grad=True)
    ((at @ bt) ** 2).sum().backward()
    ta, tb = torch.tensor(a, requires_grad=True), torch.tensor(b, requires_grad=True)
    ((ta @ tb) ** 2).sum().backward()
    np.testing.assert_allclose(at.grad, ta.grad.numpy(), atol=1e-10)
    np.testing.assert_allclose(bt.grad, tb.grad.numpy(), atol=1e-10)


def test_adam_matches_torch(f64, rng):
    init = rng.standard_normal(5)
    target = rng.standard_normal(5)
    p = Parameter(init.copy(), name="w")
    opt = Adam([("w", p)], lr=1e-2)
    tp = torch.tensor(init.copy(), requires_grad=True)
    topt = torch.optim.Adam([tp], lr=1e-2)
    for _ in range(5):
        opt.zero_grad()
        ((p - Tensor(target)) ** 2).sum().backward()
        opt.step()
        topt.zero_grad()
        ((tp - torch.tensor(target)) ** 2).sum().backward()
        topt.step()
    np.testing.assert_allclose(p.data, tp.detach().numpy(), atol=1e-10)
    assert opt.state.t["w"] == 5


def test_adam_three_step_trajectory_by_hand(f64):
    lr, b1, b2, eps = 0.1, 0.9, 0.999, 1e-8
    p = Parameter(np.array(1.0), name="w")
    opt = Adam([("w", p)], lr=lr, betas=(b1, b2), eps=eps)

    theta, m, v = 1.0, 0.0, 0.0
    trajectory = []
    for t, g in enumerate([0.5, -0.2, 0.1], start=1):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        theta -= lr * (m / (1.0 - b1 ** t)) / (np.sqrt(v / (1.0 - b2 ** t)) + eps)
        p.grad = np.array(g)
        opt.step()
        trajectory.append(float(p.data))
        assert abs(trajectory[-1] - theta) < 1e-12

    # bias correction makes the first step exactly lr * g / (|g| + eps)
    assert abs(trajectory[0] - (1.0 - 0.1 * 0.5 / (0.5 + 1e-8))) < 1e-12
    assert opt.state.t["w"] == 3


def test_adam_zero_gradient_leaves_parameter(f64):
    p = Parameter(np.array([0.3, -0.7]), name="w")
    opt = Adam([("w", p)], lr=0.5)
    p.grad = np.zeros(2)
    opt.step()
    np.testing.assert_array_equal(p.data, [0.3, -0.7])


def test_adam_with_constant_gradient_moves_monotonically(f64):
    p = Parameter(np.array(0.0), name="w")
    opt = Adam([("w", p)], lr=1e-2)
    trajectory = []
    for _ in range(50):
        p.grad = np.array(2.0)
        opt.step()
        trajectory.append(float(p.data))
    assert np.all(np.diff(trajectory) < 0.0)


def test_adam_skips_frozen(f64):
    p = Parameter(np.ones(2), name="p", frozen=True)
    opt = Adam([("p", p)], lr=0.1)
    p.grad = np.ones(2)
    opt.step()
    np.testing.assert_array_equal(p.data, np.ones(2))


def test_named_parameters_and_state_dict():
    m = TwoLayer()
    names = [n for n, _ in m.named_parameters()]
    assert names == ["first", "blocks.0", "blocks.1"]
    assert m.num_parameters() == 11
    other = TwoLayer()
    state = m.state_dict()
    state["first"] = state["first"] * 2
    other.load_state_dict(state)
    np.testing.assert_array_equal(other.first.data, 2 * np.ones((2, 3)))


def test_load_state_dict_reports_named_differences():
    m = TwoLayer()
    state = m.state_dict()
    state["first"] = np.ones((3, 3))
    del state["blocks.1"]
    state["extra"] = np.ones(1)
    with pytest.raises(CheckpointMismatchError) as info:
        m.load_state_dict(state)
    names = {name for name, _ in info.value.differences}
    assert names == {"first", "blocks.1", "extra"}
