import struct

import numpy as np
import pytest
import scipy.linalg

from pilkit.activation import Activation
from pilkit.dataset import Dataset
from pilkit.errors import ConfigError, FormatError, ShapeMismatch
from pilkit.network import (
    BiasPolicy,
    PilNetwork,
    deserialize,
    forward,
    hidden_outputs,
    load,
    save,
    serialize,
    sse,
)
from pilkit.trainers import TrainConfig, train_epil, train_pil, train_pil0

TANH = Activation("tanh")
LINEAR = Activation("linear")


def test_zero_weights_zero_output():
    net = PilNetwork([np.zeros((3, 4)), np.zeros((4, 2))], TANH, LINEAR)
    np.testing.assert_array_equal(forward(net, np.ones((5, 3))), np.zeros((5, 2)))


def test_identity_composition():
    net = PilNetwork([np.eye(3), np.eye(3)], LINEAR, LINEAR)
    x = np.random.default_rng(0).standard_normal((4, 3))
    np.testing.assert_array_equal(forward(net, x), x)


def test_xor_forward_matches_independent_chain(xor_data):
    net, _ = train_pil(xor_data)
    x = xor_data.x
    v = scipy.linalg.pinv(x)
    w = scipy.linalg.pinv(np.tanh(x @ v)) @ np.arctanh(xor_data.t)
    oracle = np.tanh(np.tanh(x @ v) @ w)
    o = forward(net, x)
    np.testing.assert_allclose(o, oracle, atol=1e-12)
    assert np.sum((o - xor_data.t) ** 2) / 8 < 1e-6


def test_width_mismatch():
    net = PilNetwork([np.ones((3, 2)), np.ones((2, 1))])
    with pytest.raises(ShapeMismatch):
        forward(net, np.ones((4, 2)))


def test_layer_chain_validated():
    with pytest.raises(ShapeMismatch):
        PilNetwork([np.ones((3, 2)), np.ones((3, 1))])
    # with hidden bias the next layer needs one extra row
    PilNetwork([np.ones((3, 2)), np.ones((3, 1))], bias_policy=BiasPolicy(hidden_bias=True))
    with pytest.raises(ConfigError):
        PilNetwork([np.ones((3, 1))], output_activation=Activation("step"))


def test_hidden_bias_forward():
    net = PilNetwork([np.eye(2), np.array([[5.0], [1.0], [1.0]])], LINEAR, LINEAR,
                     BiasPolicy(hidden_bias=True))
    ys = hidden_outputs(net, [[1.0, 2.0]])
    np.testing.assert_array_equal(ys[1], [[1.0, 1.0, 2.0]])
    assert forward(net, [[1.0, 2.0]])[0, 0] == 8.0


class TestSse:
    def test_exact(self):
        d = Dataset.from_arrays([[0.0], [1.0]], np.array([[0.3], [-0.2]]))
        net = PilNetwork([np.array([[0.3], [-0.5]])], TANH, LINEAR)
        assert sse(net, d) == 0.0

    def test_single_unit(self):
        d = Dataset(np.ones((1, 1)), np.zeros((1, 1)), 0)
        net = PilNetwork([np.ones((1, 1))], TANH, LINEAR)
        assert sse(net, d) == 0.5

    def test_double_sum_oracle(self):
        rng = np.random.default_rng(8)
        d = Dataset.from_arrays(rng.standard_normal((6, 2)), rng.standard_normal((6, 3)))
        net = PilNetwork([rng.standard_normal((3, 4)), rng.standard_normal((4, 3))], TANH, LINEAR)
        o = forward(net, d.x)
        total = 0.0
        for i in range(6):
            for j in range(3):
                total += (o[i, j] - d.t[i, j]) ** 2
        assert sse(net, d) == pytest.approx(total / 12, abs=1e-12)
        assert sse(net, d) >= 0


class TestSerialization:
    @pytest.fixture
    def nets(self, xor_data):
        rng = np.random.default_rng(0)
        big = Dataset.from_arrays(rng.uniform(-1, 1, (12, 2)), rng.uniform(-0.8, 0.8, (12, 2)))
        return [
            train_pil(xor_data)[0],
            train_pil0(xor_data, TrainConfig(random_seed=3, hidden_bias=True))[0],
            train_epil(big)[0],
            PilNetwork([np.ones((2, 1))], Activation("gaussian", (2.0,)), LINEAR, meta={"k": [1, 2]}),
        ]

    def test_round_trip_bitwise(self, nets, xor_data):
        for net in nets:
            back = deserialize(serialize(net))
            assert len(back.layers) == len(net.layers)
            for a, b in zip(net.layers, back.layers):
                assert a.tobytes() == b.tobytes()
            assert back.hidden_activation == net.hidden_activation
            assert back.output_activation == net.output_activation
            assert back.bias_policy == net.bias_policy
            assert back.meta == net.meta
            x = np.ones((3, net.input_width))
            assert forward(back, x).tobytes() == forward(net, x).tobytes()

    def test_serialize_deterministic(self, nets):
        assert serialize(nets[0]) == serialize(nets[0])

    def test_file_round_trip(self, nets, tmp_path):
        save(nets[1], tmp_path / "m.pilnet")
        assert serialize(load(tmp_path / "m.pilnet")) == serialize(nets[1])

    @pytest.mark.parametrize("cut", [0, 5, 12, 30, -1])
    def test_truncated(self, nets, cut):
        blob = serialize(nets[0])
        with pytest.raises(FormatError) as info:
            deserialize(blob[:cut])
        assert info.value.offset >= 0

    def test_trailing_bytes(self, nets):
        with pytest.raises(FormatError, match="trailing"):
            deserialize(serialize(nets[0]) + b"\0")

    def test_bad_magic(self, nets):
        with pytest.raises(FormatError, match="magic"):
            deserialize(b"XXXXXX" + serialize(nets[0])[6:])

    def test_version_mismatch(self, nets):
        blob = bytearray(serialize(nets[0]))
        struct.pack_into("<H", blob, 6, 99)
        with pytest.raises(FormatError, match="expected 1, found 99"):
            deserialize(bytes(blob))

    def test_corrupt_header(self, nets):
        blob = bytearray(serialize(nets[0]))
        blob[12] = ord("!")
        with pytest.raises(FormatError, match="header"):
            deserialize(bytes(blob))
