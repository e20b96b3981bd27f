from __future__ import annotations

import math
import random

import numpy as np
import pytest

from helpers import bare_sentence, dataset_of
from ftrerank.errors import DataError, MalformedRecord, MissingEmbedding, PoolTooSmall
from ftrerank.retrieval import (
    EmbeddingTable,
    load_embeddings,
    save_embeddings,
    select_by_embedding,
    select_random,
)
from ftrerank.schema import LabelSchema, Task


@pytest.fixture
def schema():
    return LabelSchema(task=Task.NER, labels=("x",))


def table_of(vecs: dict[str, list[float]]) -> EmbeddingTable:
    dim = len(next(iter(vecs.values())))
    return EmbeddingTable(dim=dim, vectors={k: np.array(v, dtype=float)
                                            for k, v in vecs.items()})


def cosine_oracle(a: list[float], b: list[float]) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(x * x for x in b))
    return dot / (na * nb)


class TestEmbeddingTable:
    def test_shape_enforced(self):
        with pytest.raises(DataError):
            EmbeddingTable(dim=3, vectors={"a": np.array([1.0, 2.0])})

    def test_zero_vector_rejected(self):
        with pytest.raises(DataError):
            table_of({"a": [0.0, 0.0]})

    def test_missing_lookup(self):
        table = table_of({"a": [1.0, 0.0]})
        with pytest.raises(MissingEmbedding):
            table.vector("b")

    def test_round_trip(self, tmp_path):
        table = table_of({"a": [1.0, 0.5], "b": [-0.25, 2.0]})
        path = tmp_path / "emb.tsv"
        save_embeddings(table, path)
        back = load_embeddings(path)
        assert back.dim == 2
        assert np.allclose(back.vector("a"), [1.0, 0.5])
        save_embeddings(back, tmp_path / "emb2.tsv")
        assert path.read_text() == (tmp_path / "emb2.tsv").read_text()

    def test_header_required(self, tmp_path):
        path = tmp_path / "emb.tsv"
        path.write_text("a\t1.0\t2.0\n")
        with pytest.raises(MalformedRecord):
            load_embeddings(path)

    def test_duplicate_id(self, tmp_path):
        path = tmp_path / "emb.tsv"
        path.write_text("dim=1\na\t1.0\na\t2.0\n")
        with pytest.raises(MalformedRecord):
            load_embeddings(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "emb.tsv"
        path.write_text("")
        with pytest.raises(DataError):
            load_embeddings(path)


class TestSelectRandom:
    def test_seeded_and_exact_k(self, schema):
        pool = dataset_of(schema, [bare_sentence(f"s{i}") for i in range(20)])
        a = select_random(pool, 5, seed=3)
        b = select_random(pool, 5, seed=3)
        assert a == b
        assert len(set(a)) == 5

    def test_pool_too_small(self, schema):
        pool = dataset_of(schema, [bare_sentence("s0")])
        with pytest.raises(PoolTooSmall):
            select_random(pool, 2, seed=0)

    def test_negative_k(self, schema):
        pool = dataset_of(schema, [bare_sentence("s0")])
        with pytest.raises(DataError):
            select_random(pool, -1, seed=0)


class TestSelectByEmbedding:
    def test_matches_cosine_oracle(self, schema):
        rng = random.Random(12)
        for _ in range(20):
            raw = {f"s{i}": [rng.uniform(-1, 1) for _ in range(6)] for i in range(15)}
            # keep vectors away from zero
            raw = {k: [x + 0.1 for x in v] for k, v in raw.items()}
            table = table_of(raw)
            pool = dataset_of(schema, [bare_sentence(sid) for sid in raw])
            got = select_by_embedding(pool, "s0", table, k=5)
            want = sorted(
                (sid for sid in raw if sid != "s0"),
                key=lambda sid: (-cosine_oracle(raw[sid], raw["s0"]), sid),
            )[:5]
            assert got == want

    def test_scale_invariance(self, schema):
        base = {"q": [1.0, 2.0], "a": [2.0, 1.0], "b": [1.0, 1.0], "c": [0.5, 3.0]}
        pool = dataset_of(schema, [bare_sentence(sid) for sid in base])
        first = select_by_embedding(pool, "q", table_of(base), k=3)
        scaled = {k: [x * 37.5 for x in v] for k, v in base.items()}
        second = select_by_embedding(pool, "q", table_of(scaled), k=3)
        assert first == second

    def test_tie_breaks_by_id(self, schema):
        vecs = {"q": [1.0, 0.0], "b": [2.0, 0.0], "a": [3.0, 0.0], "z": [0.0, 1.0]}
        pool = dataset_of(schema, [bare_sentence(sid) for sid in vecs])
        got = select_by_embedding(pool, "q", table_of(vecs), k=2)
        assert got == ["a", "b"]  # both cosine 1.0, id order decides

    def test_excludes_self(self, schema):
        vecs = {"q": [1.0, 0.0], "a": [0.0, 1.0]}
        pool = dataset_of(schema, [bare_sentence(sid) for sid in vecs])
        got = select_by_embedding(pool, "q", table_of(vecs), k=1)
        assert got == ["a"]

    def test_missing_test_vector(self, schema):
        vecs = {"a": [1.0, 0.0]}
        pool = dataset_of(schema, [bare_sentence("a")])
        with pytest.raises(MissingEmbedding):
            select_by_embedding(pool, "ghost", table_of(vecs), k=0)
