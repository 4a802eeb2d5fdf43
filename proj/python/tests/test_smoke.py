import numpy as np
import pytest

import rwtnet


def test_learning_rate_schedule():
    assert [rwtnet.learning_rate(i) for i in (0, 2500, 5000)] == [0.05, 0.025, 0.0125]


def test_generate_dataset_shapes_and_determinism():
    a = rwtnet.generate_dataset(3, seed=4)
    b = rwtnet.generate_dataset(3, seed=4)
    assert a["pixels"].shape == (3, 20, 80, 80)
    assert a["labels"].shape == (3, 20, 6)
    assert a["ids"] == [0, 1, 2]
    np.testing.assert_array_equal(a["pixels"], b["pixels"])
    assert (a["pixels"] >= 0).all() and (a["pixels"] <= 1).all()


def test_zero_model_predicts_zero():
    model = rwtnet.Model("cnn", init="zero")
    out = model.forward(np.random.default_rng(0).random((20, 75, 75)))
    assert out.shape == (20, 6)
    assert not out.any()


def test_forward_rejects_bad_shape():
    with pytest.raises(ValueError):
        rwtnet.Model(toy=True).forward(np.zeros((2, 10, 10)))


def test_grad_check_passes():
    errors = rwtnet.grad_check()
    assert set(errors) >= {"cnn", "rnn-circle", "resrnn-circle", "trnn-circle"}
    assert max(errors.values()) < 1e-4


def test_checkpoint_round_trip(tmp_path):
    model = rwtnet.Model("trnn-circle", seed=3, toy=True)
    path = tmp_path / "m.rwtc"
    model.save(path)
    back = rwtnet.Model.load(path)
    assert back.variant == "trnn-circle"
    assert back.config == model.config
    x = np.random.default_rng(1).random((3, 10, 10))
    np.testing.assert_array_equal(back.forward(x), model.forward(x))
    path.write_bytes(path.read_bytes()[:-3])
    with pytest.raises(rwtnet.FormatError):
        rwtnet.Model.load(path)


def test_cli_generate_and_eval(tmp_path):
    data = str(tmp_path / "d.rwtd")
    code, out, _ = rwtnet.run_cli(["generate", "--subjects", "2", "--out", data])
    assert code == 0 and "40 frames" in out
    assert rwtnet.read_dataset(data)["labels"].shape == (2, 20, 6)
    ckpt = str(tmp_path / "zero.rwtc")
    rwtnet.Model("cnn", init="zero").save(ckpt)
    table = rwtnet.Model.load(ckpt).evaluate(data)
    labels = rwtnet.read_dataset(data)["labels"]
    assert table["Average"][0] == pytest.approx(labels.mean(), rel=1e-12)
    assert rwtnet.run_cli(["generate", "--subjects", "0", "--out", data])[0] == 2
