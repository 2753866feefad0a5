import numpy as np
import pytest
import torch

from src.autodiff import Adam, Tensor, check_gradients, no_grad
from src.errors import GridError, ShapeError
from src.kan import (
    KanBlock, KanLayer, SplineGrid, bspline_basis_values, fit_spline_coefficients,
    init_kan_layer,
)
from src.models import count_parameters
from src.verification.oracles import de_boor_basis, naive_kan_forward


def test_partition_of_unity_inside_domain():
    grid = SplineGrid(-1.0, 1.0, grid_size=5, order=3)
    x = np.linspace(-1.0, 1.0, 1001)
    basis = bspline_basis_values(x, grid)
    assert basis.shape == (1001, 8)
    assert np.all(basis >= 0.0)
    np.testing.assert_allclose(basis.sum(axis=-1), 1.0, atol=1e-12)


def test_local_support_has_at_most_order_plus_one_terms():
    grid = SplineGrid(grid_size=7, order=3)
    basis = bspline_basis_values(np.linspace(-0.99, 0.99, 200), grid)
    assert np.all((basis > 0).sum(axis=-1) <= grid.order + 1)


def test_out_of_domain_inputs_are_clamped():
    grid = SplineGrid()
    np.testing.assert_array_equal(
        bspline_basis_values(np.array([5.0, -5.0]), grid),
        bspline_basis_values(np.array([1.0, -1.0]), grid),
    )


def test_basis_matches_textbook_recursion(rng):
    grid = SplineGrid(-2.0, 3.0, grid_size=6, order=3)
    x = rng.uniform(-2.0, 3.0, 50)
    vec = bspline_basis_values(x, grid)
    for s, xs in enumerate(x):
        ref = [de_boor_basis(xs, grid.knots, j, grid.order) for j in range(grid.num_basis)]
        np.testing.assert_allclose(vec[s], ref, atol=1e-12)


@pytest.mark.parametrize("kwargs", [
    {"t_min": 1.0, "t_max": 1.0},
    {"grid_size": 0},
    {"order": 0},
])
def test_invalid_grid_raises(kwargs):
    with pytest.raises(GridError):
        SplineGrid(**kwargs)


def test_layer_matches_triple_loop(f64, rng):
    layer = init_kan_layer(4, 3, SplineGrid(grid_size=5), seed=7)
    tokens = rng.uniform(-1.3, 1.3, (10, 4))
    out = layer(Tensor(tokens)).data
    np.testing.assert_allclose(out, naive_kan_forward(layer, tokens), atol=1e-12)


def test_layer_rejects_wrong_width():
    layer = KanLayer(4, 2, rng=np.random.default_rng(0))
    with pytest.raises(ShapeError):
        layer(Tensor(np.zeros((5, 3))))
    with pytest.raises(ShapeError):
        layer(Tensor(np.zeros(4)))


def test_single_activation_equals_one_by_one_layer(f64, rng):
    layer = init_kan_layer(1, 1, seed=3)
    x = rng.uniform(-1.0, 1.0, 20)
    phi = layer.activation(0, 0)
    np.testing.assert_allclose(
        phi(Tensor(x)).data, layer(Tensor(x[:, None])).data[:, 0], atol=1e-12
    )


def test_layer_gradients(f64, rng):
    layer = init_kan_layer(3, 2, seed=1)
    x = Tensor(rng.uniform(-0.9, 0.9, (6, 3)), requires_grad=True)
    err = check_gradients(
        lambda: (layer(x) ** 2).sum(),
        [x, layer.coefficients, layer.base_weight, layer.spline_weight],
    )
    assert err < 1e-5


def test_fit_reproduces_cubic_polynomials():
    grid = SplineGrid(grid_size=4, order=3)
    x = np.linspace(-1.0, 1.0, 101)
    y = x ** 3 - x
    coef = fit_spline_coefficients(x, y, grid)
    assert coef.shape == (grid.num_basis,)
    np.testing.assert_allclose(bspline_basis_values(x, grid) @ coef, y, atol=1e-10)


def test_fit_rejects_mismatched_samples():
    with pytest.raises(ShapeError):
        fit_spline_coefficients(np.zeros(5), np.zeros(4), SplineGrid())


@pytest.mark.slow
def test_single_activation_learns_sin3x(f64):
    x = np.linspace(-1.0, 1.0, 200)
    y = np.sin(3.0 * x)
    layer = init_kan_layer(1, 1, SplineGrid(grid_size=5, order=3), seed=0)
    opt = Adam(list(layer.named_parameters()), lr=2e-2)
    inputs, target = Tensor(x[:, None]), Tensor(y[:, None])
    for lr, steps in ((2e-2, 1500), (2e-3, 1000), (2e-4, 500)):
        opt.lr = lr
        for _ in range(steps):
            opt.zero_grad()
            ((layer(inputs) - target) ** 2).mean().backward()
            opt.step()
    with no_grad():
        kan_mse = float(((layer(inputs).data[:, 0] - y) ** 2).mean())

    design = np.stack([x, np.ones_like(x)], axis=1)
    linear, *_ = np.linalg.lstsq(design, y, rcond=None)
    linear_mse = float(((design @ linear - y) ** 2).mean())

    assert kan_mse < 1e-3
    assert linear_mse > 1e-1


def test_block_preserves_shape(f64, rng):
    block = KanBlock(4, num_layers=2, rng=np.random.default_rng(0))
    x = Tensor(rng.standard_normal((4, 6, 5)))
    assert block(x).shape == (4, 6, 5)
    assert block(Tensor(rng.standard_normal((2, 4, 6, 5)))).shape == (2, 4, 6, 5)


def test_block_batched_matches_unbatched(f64, rng):
    block = KanBlock(3, num_layers=2, rng=np.random.default_rng(1))
    x = rng.standard_normal((2, 3, 5, 5))
    batched = block(Tensor(x)).data
    for i in range(2):
        np.testing.assert_allclose(batched[i], block(Tensor(x[i])).data, atol=1e-12)


def test_block_with_zero_activations_is_identity(f64, rng):
    block = KanBlock(3, num_layers=2, rng=np.random.default_rng(2))
    for layer in block.layers:
        layer.coefficients.data[...] = 0.0
        layer.base_weight.data[...] = 0.0
    x = rng.standard_normal((3, 4, 4))
    np.testing.assert_allclose(block(Tensor(x)).data, x, atol=1e-12)


def test_block_rejects_channel_mismatch():
    block = KanBlock(4, num_layers=1, rng=np.random.default_rng(0))
    with pytest.raises(ShapeError):
        block(Tensor(np.zeros((3, 4, 4))))


def test_block_rejects_even_kernel():
    with pytest.raises(ValueError):
        KanBlock(4, dwconv_kernel=4)


def test_block_gradients(f64, rng):
    block = KanBlock(2, num_layers=2, rng=np.random.default_rng(3))
    x = Tensor(rng.standard_normal((2, 4, 4)) * 0.5, requires_grad=True)
    err = check_gradients(
        lambda: (block(x) ** 2).sum(),
        [x, block.layers[0].coefficients, block.dwconvs[1], block.norms[0].scale],
        max_entries=20,
    )
    assert err < 1e-5


def test_init_is_a_function_of_the_seed():
    grid = SplineGrid(grid_size=5)
    first, again, other = (init_kan_layer(6, 4, grid, seed=s) for s in (11, 11, 12))
    for name, param in first.named_parameters():
        np.testing.assert_array_equal(param.data, dict(again.named_parameters())[name].data)
    assert not np.array_equal(first.coefficients.data, other.coefficients.data)
    assert not np.array_equal(first.base_weight.data, other.base_weight.data)


def test_init_scales(f64):
    grid = SplineGrid(grid_size=5)
    layer = init_kan_layer(64, 64, grid, seed=0)
    assert abs(layer.coefficients.data.std() - 0.1 / np.sqrt(5)) < 5e-3
    assert abs(layer.base_weight.data.std() - 1.0 / 8.0) < 1e-2


def test_init_output_variance_is_moderate(f64):
    layer = init_kan_layer(64, 64, SplineGrid(), seed=0)
    x = np.random.default_rng(5).standard_normal((10_000, 64))
    with no_grad():
        out = layer(Tensor(x)).data
    variance = float(out.var(axis=0).mean())
    assert 0.1 <= variance <= 10.0


def test_identity_fit_on_one_by_one_layer(f64):
    grid = SplineGrid(grid_size=5, order=3)
    layer = init_kan_layer(1, 1, grid, seed=0)
    samples = np.linspace(-1.0, 1.0, 201)
    layer.base_weight.data[...] = 0.0
    layer.spline_weight.data[...] = 1.0
    layer.coefficients.data[0, 0] = fit_spline_coefficients(samples, samples, grid)

    interior = np.linspace(-0.95, 0.95, 77)
    out = layer(Tensor(interior[:, None])).data[:, 0]
    assert np.max(np.abs(out - interior)) < 1e-2


def test_zero_activations_give_zero_output(f64, rng):
    layer = init_kan_layer(3, 2, seed=4)
    layer.coefficients.data[...] = 0.0
    layer.base_weight.data[...] = 0.0
    np.testing.assert_array_equal(layer(Tensor(rng.standard_normal((5, 3)))).data, 0.0)


def test_single_layer_block_matches_hand_composition(f64, rng):
    block = KanBlock(3, num_layers=1, token_norm=False, rng=np.random.default_rng(6))
    x = rng.uniform(-1.0, 1.0, (3, 5, 4))

    tokens = x.transpose(1, 2, 0).reshape(20, 3)
    mapped = naive_kan_forward(block.layers[0], tokens).reshape(5, 4, 3).transpose(2, 0, 1)
    padded = torch.nn.functional.pad(torch.tensor(mapped[None]), (1, 1, 1, 1), mode="replicate")
    conv = torch.nn.functional.conv2d(padded, torch.tensor(block.dwconvs[0].data[:, None]), groups=3)
    expected = conv[0].numpy() + x

    np.testing.assert_allclose(block(Tensor(x)).data, expected, atol=1e-12)


def test_block_parameter_count_formula():
    grid = SplineGrid(grid_size=5, order=3)
    block = KanBlock(8, num_layers=3, grid=grid, dwconv_kernel=3, rng=np.random.default_rng(0))
    per_layer = 8 * 8 * (5 + 3 + 2) + 8 * 3 * 3 + 2 * 8
    assert count_parameters(block) == 3 * per_layer
    bare = KanBlock(8, num_layers=3, grid=grid, token_norm=False, rng=np.random.default_rng(0))
    assert count_parameters(bare) == 3 * (per_layer - 2 * 8)
