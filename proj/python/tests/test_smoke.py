import json
import math

import numpy as np
import pytest

import cova

SPEC = {"n_pages": 8, "n_domains": 4, "elements_per_page": 60, "seed": 5}
SMALL = {
    "freeze_backbone": True,
    "backbone_channels": 4,
    "pos_dim": 4,
    "proj_dim": 8,
    "hidden_dim": 8,
    "k": 6,
    "max_epochs": 2,
}

DUMP = json.dumps({
    "version": "1",
    "viewport": [1280, 1280],
    "root": 0,
    "nodes": [
        {"id": 0, "tag": "BODY", "bbox": [0, 0, 1280, 1280], "text": None, "font_size": None, "children": [1, 2, 3]},
        {"id": 1, "tag": "H1", "bbox": [10, 10, 300, 40], "text": "Lamp", "font_size": 24, "children": []},
        {"id": 2, "tag": "SPAN", "bbox": [10, 60, 80, 20], "text": "$ 9.99", "font_size": 16, "children": []},
        {"id": 3, "tag": "IMG", "bbox": [10, 90, 200, 200], "text": None, "font_size": None, "children": []},
    ],
})


def test_parse_and_graph():
    page = cova.parse_page(DUMP, "p", "shop.test", price=2, title=1, image=3)
    assert len(page) == 3
    assert page.fully_labeled
    assert [e["label"] for e in page.elements] == ["TITLE", "PRICE", "IMAGE"]
    assert cova.build_graph(page, 1) == {1: [2], 2: [1], 3: [2]}
    assert cova.build_graph(page, 0)[2] == []


def test_bad_dump_raises():
    with pytest.raises(cova.SchemaError):
        cova.parse_page("{", "p")
    with pytest.raises(cova.ValidationError):
        cova.parse_page(DUMP, "p", price=99, title=1, image=3)


def test_attention_math():
    p = cova.softmax(np.array([0.0, math.log(3.0)]))
    assert p == pytest.approx([0.25, 0.75], abs=1e-12)
    rng = np.random.default_rng(0)
    w1, w2 = rng.normal(size=(3, 4)), rng.normal(size=(3, 4))
    a = rng.normal(size=(1, 6))
    alpha = cova.attention_scores(rng.normal(size=4), np.tile(rng.normal(size=(1, 4)), (4, 1)), w1, w2, a)
    assert alpha == pytest.approx([0.25] * 4)
    with pytest.raises(cova.EmptyNeighborhoodError):
        cova.attention_scores(np.zeros(4), np.zeros((0, 4)), w1, w2, a)


def test_predict_page_columns():
    logits = np.array([[5.0, 0, 1, 0], [1, 3, 0, 9], [2, 3, 4, 0]])
    pred = cova.predict_page(logits, [10, 11, 12], "p")
    assert (pred["price"], pred["title"], pred["image"]) == (10, 11, 12)
    assert pred["probs"].sum(axis=0) == pytest.approx([1, 1, 1, 1])
    scaled = cova.predict_page(logits * np.array([3.0, 0.5, 7.0, 1.0]), [10, 11, 12], "p")
    assert scaled["price"] == pred["price"] and scaled["image"] == pred["image"]


def test_folds_are_disjoint():
    counts = {f"d{i}": 1 + i % 3 for i in range(20)}
    folds = cova.make_folds(counts, 5, 1)
    assert len(folds) == 5
    tested = set()
    for f in folds:
        assert not set(f["test"]) & (set(f["train"]) | set(f["val"]))
        tested |= set(f["test"])
    assert tested == set(counts)


def test_synth_train_predict(tmp_path):
    pages, shots = [], {}
    for i in range(SPEC["n_pages"]):
        page, shot, dom_json, decoys = cova.synth_page(SPEC, i)
        assert shot.shape == (1280, 1280, 3) and shot.dtype == np.uint8
        assert len(page) == 60 and len(decoys) == 1
        pages.append(page)
        shots[page.page_id] = shot
    train_pages = [p for p in pages if p.domain != pages[0].domain]
    test_pages = [p for p in pages if p.domain == pages[0].domain]

    model, reports, best = cova.train(train_pages, [], SMALL, loader=lambda p: shots[p.page_id])
    assert len(reports) == 2 and 0 <= best < 2
    assert all(math.isfinite(r["train_loss"]) for r in reports)

    out = model.forward(test_pages[0], k=6, image=shots[test_pages[0].page_id])
    assert out["logits"].shape == (60, 4)
    for weights in out["attention"].values():
        assert sum(weights.values()) == pytest.approx(1.0)

    ckpt = tmp_path / "m.ckpt"
    model.save(ckpt)
    again = cova.Model.load(ckpt)
    a = model.predict(test_pages[0], k=6, image=shots[test_pages[0].page_id])
    b = again.predict(test_pages[0], k=6, image=shots[test_pages[0].page_id])
    assert a["price"] == b["price"]
    assert np.array_equal(a["probs"], b["probs"])

    img, report = cova.render_attention(test_pages[0], shots[test_pages[0].page_id], a["price"],
                                        out["attention"][a["price"]])
    assert img.shape == (1280, 1280, 3)
    assert json.loads(report)["element_id"] == a["price"]


def test_dataset_on_disk(tmp_path):
    cova.synth_generate(tmp_path, {**SPEC, "n_pages": 4})
    pages = cova.load_dataset(tmp_path / "manifest.csv")
    assert len(pages) == 4 and all(p.fully_labeled for p in pages)
    model = cova.Model({**SMALL}, seed=3)
    scores = cova.evaluate(model, pages, k=6, topk=60)
    assert scores["topk"]["mean"] == pytest.approx(1.0)
    assert 0.0 <= scores["accuracy"]["price"] <= 1.0
    with pytest.raises(cova.ConfigError):
        cova.Model({"not_a_key": 1})
