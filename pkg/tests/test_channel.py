import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from conftest import S, make_config
from quadevo.channel import (LogicalChannel, SubChannel, aggregate_coefficient, apply_channel,
                             channel_noise, g_function, gate_transfer, measure, transmit)
from quadevo.core import (CarrierVector, Domain, ParameterError, make_stream,
                          sample_complex_carrier)

OMEGA = 225 / 64


def _transmit_variance(T, noise, var=64.0, n=10**5, seed=5):
    stream = make_stream(seed)
    chan = LogicalChannel.uniform(4, T, noise)
    q = stream.standard_normal((n, 4, 2)) * math.sqrt(var)
    sub = q[..., 0] + 1j * q[..., 1]
    return measure(transmit(sub, chan, stream), "homodyne_x")


class TestSubChannel:
    def test_bounds(self):
        SubChannel(complex(S, S), 16.0)
        with pytest.raises(ParameterError):
            SubChannel(complex(0.8, 0), 1.0)
        with pytest.raises(ParameterError):
            SubChannel(complex(0.5, -0.1), 1.0)
        with pytest.raises(ParameterError):
            SubChannel(0.5, -1.0)

    def test_logical_channel_builders(self):
        chan = LogicalChannel.from_config(make_config(m=3))
        assert chan.m == 3 == len(chan)
        assert_allclose(chan.noise_variances, 16.0)
        chan = LogicalChannel.from_lists([0.5 + 0.5j, 0.1j], [1.0, 2.0])
        assert_array_equal(chan.noise_variances, [1.0, 2.0])
        with pytest.raises(ParameterError):
            LogicalChannel(())

    def test_equal_parts_flag(self):
        assert LogicalChannel.uniform(2, 0.5 + 0.5j, 1.0).check_equal_parts()
        with pytest.raises(ParameterError):
            LogicalChannel.uniform(2, 0.5 + 0.1j, 1.0).check_equal_parts()


class TestTransmit:
    def test_noiseless_unit_gain_preserves_variance(self):
        stream = make_stream(1)
        z = sample_complex_carrier(8, 64.0, stream, Domain.SUBCARRIER)
        out = transmit(z, LogicalChannel.uniform(8, complex(S, S), 0.0), stream)
        assert isinstance(out, CarrierVector)
        assert out.domain_tag is Domain.MEASURED
        assert_allclose(np.abs(out.values), np.abs(z.values), rtol=1e-14)

    @pytest.mark.parametrize("T, expected", [(complex(S, S), 80.0), (0.5 + 0.5j, 48.0)])
    def test_output_variance(self, T, expected):
        x = _transmit_variance(T, 16.0)
        for i in range(x.shape[1]):
            se = expected * math.sqrt(2.0 / x.shape[0])
            assert abs(x[:, i].var(ddof=1) - expected) < 3 * se

    def test_noise_independent_across_subchannels(self):
        n = 10**5
        chan = LogicalChannel.uniform(3, 0.0, 4.0)
        delta = channel_noise((n, 3), chan, make_stream(9))
        c = np.mean(delta[:, 0].real * delta[:, 1].real)
        assert abs(c) < 3 * 4.0 / math.sqrt(n)
        assert abs(delta.real.var() - 4.0) < 3 * 4.0 * math.sqrt(2 / delta.real.size)

    def test_dimension_mismatch(self):
        chan = LogicalChannel.uniform(4, 0.5, 1.0)
        with pytest.raises(ParameterError):
            transmit(np.zeros(3, complex), chan, make_stream(0))
        with pytest.raises(ParameterError):
            apply_channel(np.zeros(4), chan, np.zeros(3))
        with pytest.raises(ParameterError):
            channel_noise((5, 3), chan, make_stream(0))

    def test_per_subchannel_gain(self):
        chan = LogicalChannel.from_lists([0.5 + 0.5j, 0.1 + 0.0j], 0.0)
        out = apply_channel(np.array([2.0, 10.0]), chan, np.zeros(2))
        assert_allclose(out, [1 + 1j, 1.0])


class TestMeasure:
    def test_homodyne(self):
        assert_array_equal(measure(np.array([3 + 4j, 0j]), "homodyne_x"), [3.0, 0.0])

    def test_heterodyne_noiseless(self):
        v = np.array([3 + 4j, 1 - 1j])
        assert_array_equal(measure(v, "heterodyne"), v)

    def test_heterodyne_detection_noise(self):
        n = 10**5
        out = measure(np.zeros(n, complex), "heterodyne", 2.0, make_stream(4))
        assert abs(out.real.var() - 2.0) < 3 * 2.0 * math.sqrt(2 / n)
        assert abs(out.imag.var() - 2.0) < 3 * 2.0 * math.sqrt(2 / n)

    def test_errors(self):
        with pytest.raises(ParameterError):
            measure(np.zeros(2), "bogus")
        with pytest.raises(ParameterError):
            measure(np.zeros(2), "heterodyne", 1.0)

    def test_homodyne_variance_of_transmitted(self):
        x = _transmit_variance(complex(S, S), 16.0, seed=21).ravel()
        assert abs(x.var() - 80.0) < 3 * 80.0 * math.sqrt(2 / x.size)


class TestGate:
    def test_examples(self):
        T = 0.3 + 0.4j
        assert gate_transfer(0.0, T, OMEGA) == T
        assert gate_transfer(math.pi, T, 1.5) == 0
        assert gate_transfer(math.pi / OMEGA, T, OMEGA) == T

    def test_even_and_g_is_modulus_squared(self):
        theta = np.linspace(-math.pi, math.pi, 101)
        T = 0.3 + 0.4j
        assert_array_equal(gate_transfer(theta, T, 2.0), gate_transfer(-theta, T, 2.0))
        G = g_function(theta, T, 2.0)
        assert_allclose(G, np.abs(gate_transfer(theta, T, 2.0)) ** 2, rtol=1e-15)
        assert g_function(0.0, 0.5 + 0.5j, 2.0) == pytest.approx(0.5)
        assert g_function(3.0, 0.5 + 0.5j, 2.0) == 0.0

    def test_omega_below_one(self):
        with pytest.raises(ParameterError):
            gate_transfer(0.0, 1.0, 0.5)


class TestAggregate:
    def test_equal(self):
        assert aggregate_coefficient(LogicalChannel.uniform(5, 0.2 + 0.3j, 1.0)) == \
            pytest.approx(0.2 + 0.3j)

    def test_pattern(self):
        assert aggregate_coefficient([1.0, 0.0]) == pytest.approx(0.5)

    def test_random_mean(self, rng):
        T = rng.uniform(0, S, 7) + 1j * rng.uniform(0, S, 7)
        chan = LogicalChannel.from_lists(T, 1.0)
        total = 0j
        for t in T:
            total += t
        assert aggregate_coefficient(chan) == pytest.approx(total / 7, rel=1e-14)
