import math

import numpy as np
import pytest

from qarerank.dataset_io import TextPairExample, load_pair_dataset
from qarerank.embeddings import EmbeddingTable, load_word_vectors
from qarerank.siamese import (
    PAD,
    SiameseConfig,
    encode,
    forward,
    init_model,
    load_checkpoint,
    loss_and_gradients,
    predict,
    predict_labels,
    save_checkpoint,
    train,
)

from gradcheck import siamese_gradient_errors

WORDS = ["a", "b", "c", "d"]


@pytest.fixture
def toy_table():
    rng = np.random.default_rng(3)
    return EmbeddingTable({w: i for i, w in enumerate(WORDS)}, rng.normal(size=(4, 4)))


@pytest.fixture
def toy_model():
    model = init_model(SiameseConfig(embedding_dim=4, hidden_dim=3, ff_dim=5, seed=1))
    rng = np.random.default_rng(8)
    for p in model.params.values():
        p += rng.normal(scale=0.3, size=p.shape)
    return model


def sig(x):
    return 1.0 / (1.0 + math.exp(-x))


class TestInit:
    def test_seeded(self):
        a = init_model(SiameseConfig(embedding_dim=5, seed=3))
        b = init_model(SiameseConfig(embedding_dim=5, seed=3))
        assert all(a.params[k].tobytes() == b.params[k].tobytes() for k in a.params)

    def test_pair_width(self):
        model = init_model(SiameseConfig(embedding_dim=5, hidden_dim=64))
        assert model.pair_dim == 256
        assert model.params["ff_W"].shape == (256, 128)

    def test_biases(self):
        h = 4
        model = init_model(SiameseConfig(embedding_dim=3, hidden_dim=h))
        for d in ("fwd", "bwd"):
            b = model.params[f"{d}_b"]
            np.testing.assert_array_equal(b[h:2 * h], 1.0)
            np.testing.assert_array_equal(np.delete(b, np.s_[h:2 * h]), 0.0)
        assert not model.params["ff_b"].any() and not model.params["out_b"].any()

    def test_one_encoder_parameter_set(self):
        names = set(init_model(SiameseConfig(embedding_dim=3)).params)
        assert {n for n in names if n.startswith(("fwd", "bwd"))} == {
            "fwd_Wx", "fwd_Wh", "fwd_b", "bwd_Wx", "bwd_Wh", "bwd_b"}

    def test_bad_config(self):
        with pytest.raises(ValueError):
            SiameseConfig(embedding_dim=4, num_classes=3)
        with pytest.raises(ValueError):
            SiameseConfig(embedding_dim=0)


class TestEncode:
    def test_zero_weights_give_zero_state(self, toy_table):
        model = init_model(SiameseConfig(embedding_dim=4, hidden_dim=3, ff_dim=2))
        for name, p in model.params.items():
            if name.startswith(("fwd", "bwd")) and not name.endswith("_b"):
                p[...] = 0.0
        # c = sigmoid(1)*0 + sigmoid(0)*tanh(0) = 0, h = sigmoid(0)*tanh(0) = 0
        np.testing.assert_array_equal(encode(model, ["a", "b"], toy_table), np.zeros(6))

    def test_single_step_by_hand(self, toy_table, toy_model):
        H = 3
        x = toy_table.vectors[toy_table.vocab["c"]]
        expected = []
        for d in ("fwd", "bwd"):
            Wx, b = toy_model.params[f"{d}_Wx"], toy_model.params[f"{d}_b"]
            for k in range(H):
                pre = [sum(x[j] * Wx[j, g * H + k] for j in range(4)) + b[g * H + k] for g in range(4)]
                i, o, g = sig(pre[0]), sig(pre[2]), math.tanh(pre[3])
                expected.append(o * math.tanh(i * g))
        np.testing.assert_allclose(encode(toy_model, ["c"], toy_table), expected, rtol=1e-12, atol=1e-15)

    def test_padding_invariance(self, toy_table, toy_model):
        base = encode(toy_model, ["a", "d", "b"], toy_table)
        padded = encode(toy_model, ["a", "d", "b", PAD, PAD, PAD], toy_table)
        assert base.tobytes() == padded.tobytes()

    def test_truncation(self, toy_table):
        model = init_model(SiameseConfig(embedding_dim=4, hidden_dim=3, max_len=2))
        assert encode(model, ["a", "b", "c", "d"], toy_table).tobytes() == encode(model, ["a", "b"], toy_table).tobytes()

    def test_all_pad(self, toy_table, toy_model):
        with pytest.raises(ValueError):
            encode(toy_model, [PAD, PAD], toy_table)

    def test_dim_mismatch(self, toy_model):
        with pytest.raises(ValueError, match="dim"):
            encode(toy_model, ["a"], EmbeddingTable({"a": 0}, np.ones((1, 7))))


@pytest.fixture
def mirrored(toy_model):
    for n in ("Wx", "Wh", "b"):
        toy_model.params[f"bwd_{n}"] = toy_model.params[f"fwd_{n}"].copy()
    return toy_model


def test_backward_reads_reversed_input(toy_table, mirrored):
    # with identical direction weights, the backward half of "a b c" is the forward half of "c b a"
    H = 3
    enc = encode(mirrored, ["a", "b", "c"], toy_table)
    rev = encode(mirrored, ["c", "b", "a"], toy_table)
    np.testing.assert_array_equal(enc[H:], rev[:H])
    np.testing.assert_array_equal(enc[:H], rev[H:])


class TestForward:
    def test_simplex(self, toy_table, toy_model):
        p_yes, p_no = forward(toy_model, ["a", "b"], ["c"], toy_table)
        assert 0 < p_yes < 1 and 0 < p_no < 1
        assert abs(p_yes + p_no - 1.0) <= 1e-12

    def test_zero_output_layer(self, toy_table, toy_model):
        toy_model.params["out_W"][...] = 0.0
        toy_model.params["out_b"][...] = 0.0
        assert forward(toy_model, ["a"], ["b", "c"], toy_table) == (0.5, 0.5)

    def test_order_matters(self, toy_table, toy_model):
        assert forward(toy_model, ["a", "b"], ["d"], toy_table) != forward(toy_model, ["d"], ["a", "b"], toy_table)

    def test_text_input_is_tokenized(self, toy_table, toy_model):
        assert forward(toy_model, "A, b!", "c", toy_table) == forward(toy_model, ["a", "b"], ["c"], toy_table)


class TestLoss:
    batch = [((["a", "b", "c"], ["d", "oov"]), "yes"), ((["c"], ["a", "b", "d", "a"]), "no")]

    def test_gradient_check(self, toy_table, toy_model):
        errors = siamese_gradient_errors(toy_model, self.batch, toy_table)
        assert max(errors.values()) < 1e-4, errors

    def test_duplicated_batch(self, toy_table, toy_model):
        once, _ = loss_and_gradients(toy_model, self.batch, toy_table)
        twice, _ = loss_and_gradients(toy_model, self.batch * 2, toy_table)
        assert twice == pytest.approx(once, rel=1e-14)

    def test_confident_correct_prediction(self, toy_table, toy_model):
        toy_model.params["out_W"][...] = 0.0
        toy_model.params["out_b"][...] = [40.0, -40.0]
        loss, _ = loss_and_gradients(toy_model, [((["a"], ["b"]), "yes")], toy_table)
        assert loss < 1e-30

    def test_empty_batch(self, toy_table, toy_model):
        with pytest.raises(ValueError):
            loss_and_gradients(toy_model, [], toy_table)


def _set_p_yes(model, p):
    model.params["out_W"][...] = 0.0
    model.params["out_b"][...] = [math.log(p), math.log(1 - p)]


@pytest.mark.parametrize("p, label", [(0.9, "yes"), (0.1, "no"), (0.5, "no")])
def test_predict_threshold(toy_table, toy_model, p, label):
    _set_p_yes(toy_model, p)
    assert predict(toy_model, (["a"], ["b"]), toy_table) == label


@pytest.fixture(scope="module")
def toy_rqe():
    from conftest import DATA
    return load_pair_dataset(DATA / "rqe_toy_train.jsonl", ["yes", "no"]), load_word_vectors(DATA / "toy_vectors.txt")


class TestTrain:
    def test_zero_epochs(self, toy_rqe):
        data, table = toy_rqe
        model = init_model(SiameseConfig(embedding_dim=table.dim))
        trained, report = train(model, data, [], table, epochs=0)
        assert report.epochs == []
        assert all(trained.params[k].tobytes() == model.params[k].tobytes() for k in model.params)

    def test_deterministic(self, toy_rqe):
        data, table = toy_rqe
        cfg = SiameseConfig(embedding_dim=table.dim, hidden_dim=8, ff_dim=8)
        m1, r1 = train(init_model(cfg), data[:64], data[64:96], table, epochs=2, seed=5)
        m2, r2 = train(init_model(cfg), data[:64], data[64:96], table, epochs=2, seed=5)
        assert r1.to_dict() == r2.to_dict()
        assert all(m1.params[k].tobytes() == m2.params[k].tobytes() for k in m1.params)
        assert len(r1.epochs) == 2 and r1.epochs[0].valid_accuracy is not None

    def test_converges_on_toy_data(self, toy_rqe):
        data, table = toy_rqe
        model, report = train(init_model(SiameseConfig(embedding_dim=table.dim)), data, [], table, epochs=50)
        assert report.epochs[-1].train_accuracy >= 0.95
        assert report.epochs[-1].loss < report.epochs[0].loss

    def test_tied_encoder_after_training(self, toy_rqe):
        data, table = toy_rqe
        cfg = SiameseConfig(embedding_dim=table.dim, hidden_dim=6, ff_dim=6)
        model, _ = train(init_model(cfg), data[:40], [], table, epochs=3)
        q1, q2 = ["alpha", "beta"], ["gamma"]
        pair = np.concatenate([encode(model, q1, table), encode(model, q2, table)])
        logits = np.maximum(pair @ model.params["ff_W"] + model.params["ff_b"], 0) @ model.params["out_W"] + model.params["out_b"]
        p = np.exp(logits - logits.max())
        p /= p.sum()
        np.testing.assert_allclose(forward(model, q1, q2, table), p, rtol=1e-12)

    def test_unfrozen_embeddings_change(self, toy_rqe):
        data, table = toy_rqe
        cfg = SiameseConfig(embedding_dim=table.dim, hidden_dim=6, ff_dim=6)
        _, report = train(init_model(cfg), data[:40], [], table, epochs=1, freeze_embeddings=False)
        assert report.embeddings is not None
        assert not np.array_equal(report.embeddings.vectors, table.vectors)

    def test_empty_train_set(self, toy_rqe):
        _, table = toy_rqe
        with pytest.raises(ValueError):
            train(init_model(SiameseConfig(embedding_dim=table.dim)), [], [], table)

    def test_unlabelled_example(self, toy_rqe):
        _, table = toy_rqe
        with pytest.raises(ValueError):
            train(init_model(SiameseConfig(embedding_dim=table.dim)), [TextPairExample("x", "a", "b")], [], table)


def test_checkpoint_round_trip(tmp_path, toy_table, toy_model):
    save_checkpoint(tmp_path / "m.json", toy_model, toy_table)
    model, table = load_checkpoint(tmp_path / "m.json")
    assert model.config == toy_model.config
    assert all(model.params[k].tobytes() == toy_model.params[k].tobytes() for k in model.params)
    assert table.vocab == toy_table.vocab and table.vectors.tobytes() == toy_table.vectors.tobytes()
    pairs = [TextPairExample("p", "a b", "c d"), TextPairExample("q", "d", "a")]
    assert predict_labels(model, pairs, table) == predict_labels(toy_model, pairs, toy_table)


def test_checkpoint_version_checked(tmp_path, toy_model):
    save_checkpoint(tmp_path / "m.json", toy_model)
    text = (tmp_path / "m.json").read_text().replace('"version": 1', '"version": 99')
    (tmp_path / "m.json").write_text(text)
    with pytest.raises(ValueError, match="version"):
        load_checkpoint(tmp_path / "m.json")
