import numpy as np
import pytest

from qsysid.errors import ConfigError, DegenerateSignalError, DomainError
from qsysid.quantizer import QuantizerSpec
from qsysid.samplers import make_rng
from qsysid.simulate import (Dataset, SimulationConfig, TransferFunction, generate_dataset,
                             impulse_response, random_system, read_dataset_csv, synthesize,
                             toeplitz_regressor, write_dataset_csv)


def power_series(numerator, denominator, terms):
    '''First ``terms`` coefficients of numerator / denominator by long division.'''
    num = np.zeros(terms)
    num[:min(terms, numerator.size)] = numerator[:terms]
    h = np.zeros(terms)
    for k in range(terms):
        tail = sum(denominator[j] * h[k - j] for j in range(1, min(k, denominator.size - 1) + 1))
        h[k] = (num[k] - tail) / denominator[0]
    return h


class TestToeplitzRegressor:

    def test_small(self):
        U = toeplitz_regressor([1.0, 2.0, 3.0], 2)
        np.testing.assert_array_equal(U, [[1.0, 0.0], [2.0, 1.0], [3.0, 2.0]])

    def test_more_columns_than_rows(self):
        U = toeplitz_regressor([1.0, 2.0], 3)
        np.testing.assert_array_equal(U, [[1.0, 0.0, 0.0], [2.0, 1.0, 0.0]])

    def test_matches_convolution(self):
        rng = np.random.default_rng(5)
        u, g = rng.standard_normal(200), rng.standard_normal(30)
        # output t = 1..N sits at index t of the full convolution with (0, g)
        expected = np.convolve(u, np.r_[0.0, g])[1:201]
        np.testing.assert_allclose(toeplitz_regressor(u, 30) @ g, expected, rtol=0, atol=1e-12)

    def test_rejects(self):
        with pytest.raises(DomainError):
            toeplitz_regressor([], 2)
        with pytest.raises(DomainError):
            toeplitz_regressor([1.0], 0)


class TestImpulseResponse:

    def test_strictly_causal_numerator(self):
        tf = TransferFunction(numerator=np.array([0.0, 1.0]), denominator=np.array([1.0, -0.5]))
        np.testing.assert_allclose(impulse_response(tf, 3), [1.0, 0.5, 0.25])

    def test_delay_is_imposed(self):
        tf = TransferFunction(numerator=np.array([1.0]), denominator=np.array([1.0, -0.5]))
        np.testing.assert_allclose(impulse_response(tf, 3), [1.0, 0.5, 0.25])

    def test_matches_power_series(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            tf = random_system(rng)
            g = impulse_response(tf, 50)
            expected = power_series(tf.numerator, tf.denominator, 51)[1:]
            np.testing.assert_allclose(g, expected, rtol=0, atol=1e-9 * max(1.0, np.abs(expected).max()))

    def test_rejects_length(self):
        tf = TransferFunction(numerator=np.array([1.0]), denominator=np.array([1.0]))
        with pytest.raises(DomainError):
            impulse_response(tf, 0)


class TestRandomSystem:

    def test_stable_with_delay(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            tf = random_system(rng)
            assert tf.is_stable()
            assert np.max(np.abs(tf.poles)) < 0.93
            assert tf.numerator[0] == 0.0
            assert tf.denominator.size == 21

    def test_rejects_unstable_magnitude(self):
        with pytest.raises(DomainError):
            random_system(np.random.default_rng(0), pole_mag_max=1.0)


class TestGenerateDataset:

    def test_noise_level_and_quantization(self):
        rng = np.random.default_rng(2)
        g = np.array([1.0, 0.5, 0.25])
        u = rng.standard_normal(400)
        spec = QuantizerSpec.binary(0.5)
        data = generate_dataset(g, u, 10.0, spec, np.random.default_rng(3))

        clean = toeplitz_regressor(u, 3) @ g
        assert data.sigma2_true == pytest.approx(np.var(clean) / 10.0)
        np.testing.assert_array_equal(data.y, spec.quantize_array(data.z_true))
        assert data.samples == 400

    def test_zero_input(self):
        with pytest.raises(DegenerateSignalError):
            generate_dataset(np.ones(3), np.zeros(10), 10.0, QuantizerSpec.ceil(),
                             np.random.default_rng(0))


class TestSynthesize:

    def test_deterministic_and_normalized(self):
        config = SimulationConfig(samples=200, quantizer="binary:1.0", order=50)
        a, b = synthesize(config, 17), synthesize(config, 17)
        np.testing.assert_array_equal(a.y, b.y)
        np.testing.assert_array_equal(a.z_true, b.z_true)
        assert np.linalg.norm(a.g_true) == pytest.approx(1.0)
        assert a.g_true.size == 50
        assert set(np.unique(a.y)) <= {-1.0, 1.0}

    def test_seeds_differ(self):
        config = SimulationConfig(samples=100, quantizer="ceil", order=10)
        assert not np.array_equal(synthesize(config, 1).u, synthesize(config, 2).u)

    def test_unnormalized_keeps_scale(self):
        config = SimulationConfig(samples=100, quantizer="ceil", order=10, normalize=False)
        tf = random_system(make_rng(5, 0))
        np.testing.assert_allclose(synthesize(config, 5).g_true, impulse_response(tf, 10))

    @pytest.mark.parametrize("kwargs, field", [
        ({"samples": 100, "snr": 0.0}, "snr"),
        ({"samples": 10, "order": 50}, "samples"),
        ({"samples": 100, "order": 0}, "order"),
        ({"samples": 100, "pole_mag_max": 1.0}, "pole_mag_max"),
    ])
    def test_config_errors(self, kwargs, field):
        with pytest.raises(ConfigError) as info:
            SimulationConfig(quantizer="ceil", **kwargs)
        assert info.value.field == field


class TestDatasetFiles:

    def test_csv_is_bit_exact(self, tmp_path):
        data = synthesize(SimulationConfig(samples=50, quantizer="ceil", order=5), 4)
        path = tmp_path / "data.csv"
        write_dataset_csv(path, data)
        assert path.read_text().splitlines()[0] == "t,u,y,z"

        loaded = read_dataset_csv(path, data.quantizer)
        np.testing.assert_array_equal(loaded.u, data.u)
        np.testing.assert_array_equal(loaded.z_true, data.z_true)

    def test_missing_column(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("t,u\n1,0.5\n")
        with pytest.raises(DomainError):
            read_dataset_csv(path, QuantizerSpec.ceil())

    def test_dataset_validates(self):
        with pytest.raises(DomainError):
            Dataset(u=np.zeros(3), y=np.zeros(4), quantizer=QuantizerSpec.ceil())
