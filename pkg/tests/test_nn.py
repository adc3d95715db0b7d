"""Network stack: layer gradients, shape algebra, checkpoints, determinism."""

import numpy as np
import pytest

from asaukit.activations import AsauParams, BaselineKind, asau_forward
from asaukit.nn import (Activation, AsauSpec, BaselineSpec, Conv2d, Dense,
                        Flatten, MaxPool2x2, Network, Upsample2x,
                        load_checkpoint, numeric_grad_check, save_checkpoint)
from asaukit.rng import SplitMix64
from asaukit.tensor import Tensor


def squared_error_loss(target):
    def loss(out):
        d = out.array() - target
        return 0.5 * float((d * d).sum()), Tensor.from_array(d)
    return loss


def random_input(shape, seed=3):
    rng = SplitMix64(seed)
    flat = np.array([rng.uniform(-1, 1) for _ in range(int(np.prod(shape)))])
    return Tensor(shape, flat)


class TestForward:
    def test_dense_identity(self):
        net = Network([Dense(2, 2)], (2,), rng=None)
        net.store.values[:4] = np.eye(2).reshape(-1)
        out, _ = net.forward(Tensor.from_array([[1.0, 0.0]]))
        assert np.array_equal(out.array(), [[1.0, 0.0]])

    def test_asau_preserves_zeros(self):
        net = Network([Activation(AsauSpec(AsauParams(0, 1, 1, 1)))], (3, 4, 4), rng=None)
        out, _ = net.forward(Tensor.zeros((2, 3, 4, 4)))
        assert np.all(out.array() == 0.0)

    def test_conv_delta_kernel_is_identity(self):
        net = Network([Conv2d(1, 1)], (1, 5, 5), rng=None)
        kernel = np.zeros((3, 3))
        kernel[1, 1] = 1.0
        net.store.values[:9] = kernel.reshape(-1)
        x = random_input((2, 1, 5, 5))
        out, _ = net.forward(x)
        assert np.array_equal(out.array(), x.array())

    def test_input_shape_mismatch(self):
        net = Network([Dense(2, 2)], (2,), rng=None)
        with pytest.raises(ValueError, match="input shape"):
            net.forward(Tensor.from_array([[1.0, 2.0, 3.0]]))

    def test_deterministic_across_instances(self):
        x = random_input((3, 2))
        outs = []
        for _ in range(2):
            net = Network([Dense(2, 5), Activation(AsauSpec()), Dense(5, 2)],
                          (2,), SplitMix64(42))
            outs.append(net.forward(x)[0].array())
        assert np.array_equal(outs[0], outs[1])

    def test_asau_layer_matches_scalar_exactly(self):
        p = AsauParams(0.2, 1.4, 0.7, 6.0)
        net = Network([Activation(AsauSpec(p, trainable=(False,) * 4))], (7,), rng=None)
        x = random_input((5, 7), seed=9)
        out, _ = net.forward(x)
        expected = np.array([asau_forward(float(v), p) for v in x.data]).reshape(5, 7)
        assert np.array_equal(out.array(), expected)


class TestBackward:
    def test_hand_computed_dense_case(self):
        net = Network([Dense(2, 2)], (2,), rng=None)
        net.store.values[:] = [1.0, 2.0, 3.0, 4.0, 0.5, -0.5]  # w row-major, then b
        x = Tensor.from_array([[1.0, 2.0]])
        out, cache = net.forward(x)
        assert np.array_equal(out.array(), [[7.5, 9.5]])
        loss, grad = squared_error_loss(np.array([[0.0, 1.0]]))(out)
        assert loss == 64.25
        gx = net.backward(cache, grad)
        assert np.array_equal(net.store.grads, [7.5, 8.5, 15.0, 17.0, 7.5, 8.5])
        assert np.array_equal(gx.array(), [[24.5, 56.5]])

    def test_zero_output_grad(self):
        net = Network([Dense(3, 4), Activation(AsauSpec()), Dense(4, 2)],
                      (3,), SplitMix64(1))
        x = random_input((2, 3))
        out, cache = net.forward(x)
        net.backward(cache, Tensor.zeros(out.shape))
        assert np.all(net.store.grads == 0.0)

    def test_stale_cache_rejected(self):
        net = Network([Dense(2, 2)], (2,), SplitMix64(1))
        x = random_input((1, 2))
        _, cache = net.forward(x)
        net.forward(x)
        with pytest.raises(ValueError, match="stale"):
            net.backward(cache, Tensor.zeros((1, 2)))

    def test_asau_network_matches_finite_differences(self):
        spec = AsauSpec(AsauParams(0, 1, 1, 2), trainable=(True, True, True, True))
        net = Network([Dense(3, 4), Activation(spec), Dense(4, 2)], (3,), SplitMix64(7))
        x = random_input((4, 3), seed=21)
        target = random_input((4, 2), seed=22).array()
        report = numeric_grad_check(net, x, squared_error_loss(target), h=1e-5)
        assert report.passed(1e-4)


class TestShapeAlgebra:
    def test_conv_preserves_pool_halves_upsample_doubles(self):
        net = Network([Conv2d(2, 4), MaxPool2x2(), Upsample2x(), Conv2d(4, 1), Flatten()],
                      (2, 6, 8), SplitMix64(2))
        assert net.output_shape == (48,)

    def test_build_errors_name_layer_and_shapes(self):
        with pytest.raises(ValueError, match=r"layer 0.*\(3,\).*\(4,\)"):
            Network([Dense(3, 2)], (4,), rng=None)
        with pytest.raises(ValueError, match="layer 1"):
            Network([Conv2d(1, 2), Dense(3, 2)], (1, 4, 4), rng=None)

    def test_pool_requires_even_dims(self):
        with pytest.raises(ValueError, match="even"):
            Network([MaxPool2x2()], (1, 5, 4), rng=None)


class TestLayerGradients:
    """Central-difference soundness for every layer type on micro instances."""

    CASES = [
        ("dense", [Dense(3, 4)], (3,)),
        ("conv", [Conv2d(2, 3)], (2, 4, 4)),
        ("pool", [Conv2d(1, 2), MaxPool2x2()], (1, 4, 4)),
        ("upsample", [Upsample2x(), Conv2d(2, 1)], (2, 3, 3)),
        ("flatten_dense", [Flatten(), Dense(8, 3)], (2, 2, 2)),
        ("relu", [Dense(3, 5), Activation(BaselineSpec(BaselineKind.relu())), Dense(5, 2)], (3,)),
        ("leaky", [Dense(3, 5), Activation(BaselineSpec(BaselineKind.leaky_relu(0.07))),
                   Dense(5, 2)], (3,)),
        ("prelu", [Dense(3, 5),
                   Activation(BaselineSpec(BaselineKind.prelu(0.2), trainable_slope=True)),
                   Dense(5, 2)], (3,)),
        ("mish", [Dense(3, 5), Activation(BaselineSpec(BaselineKind.mish())), Dense(5, 2)], (3,)),
        ("asau_per_layer", [Conv2d(1, 2),
                            Activation(AsauSpec(AsauParams(0.1, 1.2, 0.9, 3.0),
                                                (True, True, True, True)))], (1, 4, 4)),
        ("asau_per_channel", [Conv2d(1, 3),
                              Activation(AsauSpec(AsauParams(0, 1, 1, 2),
                                                  (True, True, True, True),
                                                  "per_channel"))], (1, 4, 4)),
    ]

    @pytest.mark.parametrize("name,layers,in_shape", CASES, ids=[c[0] for c in CASES])
    def test_layer_gradient(self, name, layers, in_shape):
        net = Network(layers, in_shape, SplitMix64(31))
        x = random_input((3,) + in_shape, seed=37)
        target = random_input((3,) + net.output_shape, seed=41).array()
        report = numeric_grad_check(net, x, squared_error_loss(target), h=1e-5)
        assert report.pooling_ties == 0, "layer-gradient cases must avoid pooling ties"
        assert report.passed(1e-4), report.worst(3)


class TestNumericGradCheck:
    def test_identity_dense_is_exact(self):
        net = Network([Dense(3, 3)], (3,), rng=None)
        net.store.values[:9] = np.eye(3).reshape(-1)
        x = Tensor.from_array([[0.3, -0.7, 1.1], [0.9, 0.2, -0.4]])
        target = np.array([[1.0, -1.0, 0.5], [0.0, 1.0, 1.5]])
        report = numeric_grad_check(net, x, squared_error_loss(target), h=1e-5)
        assert all(e.rel_err < 1e-6 for e in report.entries)

    def test_sorted_descending(self):
        net = Network([Dense(2, 3), Dense(3, 1)], (2,), SplitMix64(8))
        report = numeric_grad_check(net, random_input((2, 2)),
                                    squared_error_loss(np.ones((2, 1))), h=1e-5)
        errs = [e.rel_err for e in report.entries]
        assert errs == sorted(errs, reverse=True)

    def test_pooling_tie_flagged_and_upstream_excluded(self):
        net = Network([Conv2d(1, 1), MaxPool2x2(), Flatten(), Dense(4, 2)],
                      (1, 4, 4), SplitMix64(3))
        kernel = np.zeros(9)
        kernel[4] = 1.0
        net.store.values[:9] = kernel  # delta kernel passes the tied input through
        x = Tensor.from_array(np.ones((1, 1, 4, 4)))
        report = numeric_grad_check(net, x, squared_error_loss(np.zeros((1, 2))), h=1e-5)
        assert report.pooling_ties > 0
        by_name = {e.name: e for e in report.entries}
        assert by_name["layer0.conv.w[0]"].excluded
        assert not by_name["layer3.dense.b[0]"].excluded
        assert report.passed(1e-4)  # verdict ignores the tied upstream parameters

    def test_zero_step_rejected(self):
        net = Network([Dense(2, 2)], (2,), SplitMix64(4))
        with pytest.raises(ValueError, match="positive"):
            numeric_grad_check(net, random_input((1, 2)),
                               squared_error_loss(np.zeros((1, 2))), h=0.0)


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        spec = AsauSpec(AsauParams(0, 1, 1, 2), (False, False, True, True))
        net = Network([Conv2d(1, 2), Activation(spec), Flatten(), Dense(8, 3)],
                      (1, 2, 2), SplitMix64(5))
        x = random_input((2, 1, 2, 2), seed=6)
        path = tmp_path / "model.ckpt"
        save_checkpoint(net, path)
        assert path.read_text().startswith("ASAUKIT-CKPT v1\n")
        restored = load_checkpoint(path)
        assert restored.store.names == net.store.names
        assert np.array_equal(restored.store.values, net.store.values)
        assert np.array_equal(restored.predict(x).array(), net.predict(x).array())

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.ckpt"
        path.write_text("NOT-A-CKPT\n")
        with pytest.raises(ValueError, match="magic"):
            load_checkpoint(path)
