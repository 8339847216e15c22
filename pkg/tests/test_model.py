import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sdrsvm.data import Standardizer, two_gaussians
from sdrsvm.exceptions import CorruptModelError, ShapeError, VersionMismatchError
from sdrsvm.kernel import KernelSpec, cross_kernel
from sdrsvm.loss import LossConfig
from sdrsvm.model import (
    FORMAT,
    SavedModel,
    decision_value,
    from_params,
    load,
    load_file,
    predict,
    save,
    save_file,
    support_count,
)
from sdrsvm.trainer import ModelParams, TrainConfig, train

GAUSS = KernelSpec("gaussian", 0.5)


def bare(sv_x, sv_y, alpha, b=0.0, rho=1.0, kernel=GAUSS):
    return SavedModel(kernel, LossConfig(0.2, 1.0), np.atleast_2d(np.asarray(sv_x, float)),
                      np.asarray(sv_y, float), np.asarray(alpha, float), b, rho)


@pytest.fixture(scope="module")
def trained():
    X, y = two_gaussians(80, seed=12)
    std = Standardizer.fit(X)
    Z = std.transform(X)
    cfg = TrainConfig(lam=0.01, loss=LossConfig(0.2, 1.0))
    params, rep = train(Z, y, GAUSS, cfg)
    return X, y, params, from_params(params, GAUSS, cfg, std), cfg, std


class TestDecision:
    def test_empty_support(self):
        m = bare(np.zeros((0, 2)), [], [], b=0.5)
        assert decision_value(m, [1.0, 2.0]) == 0.5
        np.testing.assert_array_equal(decision_value(m, np.zeros((3, 2))), 0.5)

    def test_single_support_vector(self):
        m = bare([[0.3, -0.2]], [1.0], [2.0])
        assert decision_value(m, [0.3, -0.2]) == 2.0

    def test_shape_error(self):
        m = bare([[0.3, -0.2]], [1.0], [2.0])
        with pytest.raises(ShapeError):
            decision_value(m, [1.0, 2.0, 3.0])

    def test_pruning_bound(self, rng):
        n = 30
        X = rng.standard_normal((n, 2))
        y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
        alpha = np.where(rng.random(n) < 0.5, rng.uniform(0, 1e-6, n), rng.uniform(0, 1, n))
        params = ModelParams(alpha, 0.1, 1.0, X, y)
        m = from_params(params, GAUSS, TrainConfig())
        T = rng.standard_normal((100, 2))
        full = cross_kernel(GAUSS, T, X) @ (alpha * y) + 0.1
        gap = np.abs(decision_value(m, T) - full).max()
        assert gap <= 1e-6 * n * 1.0

    def test_standardizer_applied(self, trained):
        X, y, params, m, cfg, std = trained
        Z = std.transform(X[:5])
        ref = cross_kernel(GAUSS, Z, params.X) @ (params.alpha * params.y) + params.b
        np.testing.assert_allclose(decision_value(m, X[:5]), ref, atol=1e-6 * 80)


class TestPredict:
    def test_band(self):
        rho = 1.0
        for b, expected in [(rho, 0), (rho + 0.001, 1), (-rho - 0.001, -1), (-rho, 0), (0.0, 0)]:
            assert predict(bare(np.zeros((0, 1)), [], [], b=b, rho=rho), [0.0]) == expected

    @given(st.floats(-10, 10), st.floats(1.0, 5.0))
    def test_partition(self, f, rho):
        out = predict(bare(np.zeros((0, 1)), [], [], b=f, rho=rho), [0.0])
        assert out == (1 if f > rho else -1 if f < -rho else 0)


class TestSupportCount:
    def test_examples(self, rng):
        assert support_count(np.zeros(3)) == 0
        assert support_count(np.array([1e-7, 1e-6, 0.5])) == 2
        a = rng.choice([0.0, 5e-7, 1e-6, 2e-6, 0.3], size=200)
        assert support_count(a) == sum(1 for v in a if v >= 1e-6)

    def test_model_count(self, trained):
        X, y, params, m, cfg, std = trained
        assert support_count(m) == support_count(params.alpha) == m.n_support
        assert m.metadata["n_train"] == 80


class TestPersistence:
    def test_round_trip(self, trained, rng):
        X, y, params, m, cfg, std = trained
        m2 = load(save(m))
        assert np.array_equal(predict(m, X), predict(m2, X))
        T = rng.standard_normal((200, 2)) * 3
        assert decision_value(m, T).tobytes() == decision_value(m2, T).tobytes()
        assert m2.metadata == json.loads(json.dumps(m.metadata))
        assert save(m2) == save(m)

    def test_file_round_trip(self, trained, tmp_path):
        X, y, params, m, cfg, std = trained
        path = tmp_path / "model.sdr"
        save_file(m, path)
        assert load_file(path).rho == m.rho

    def test_format_fields(self, trained):
        obj = json.loads(save(trained[3]))
        assert obj["format"] == FORMAT == "sdr-svm/1"
        assert set(obj) == {"format", "kernel", "loss", "b", "rho", "support_vectors",
                            "standardizer", "metadata"}
        assert len(obj["metadata"]["config_digest"]) == 64

    def test_truncated(self, trained):
        payload = save(trained[3])
        with pytest.raises(CorruptModelError):
            load(payload[: len(payload) // 2])

    def test_version_bump(self, trained):
        obj = json.loads(save(trained[3]))
        obj["format"] = "sdr-svm/2"
        with pytest.raises(VersionMismatchError):
            load(json.dumps(obj).encode())

    @pytest.mark.parametrize("mutate", [
        lambda o: o.pop("rho"),
        lambda o: o["support_vectors"].update(alpha=[1.0]),
        lambda o: o.update(kernel={"family": "poly", "gamma": 1.0}),
        lambda o: o.pop("format"),
    ])
    def test_corrupt(self, trained, mutate):
        obj = json.loads(save(trained[3]))
        mutate(obj)
        with pytest.raises((CorruptModelError,)):
            load(json.dumps(obj))

    def test_not_utf8(self):
        with pytest.raises(CorruptModelError):
            load(b"\xff\xfe\x00")

    def test_no_standardizer(self):
        m = bare([[0.3, -0.2]], [1.0], [2.0], b=0.25)
        m2 = load(save(m))
        assert m2.standardizer is None
        assert decision_value(m2, [0.3, -0.2]) == 2.25
