import random

import numpy as np
import pytest

from codegen_eval import cemb
from codegen_eval.embedding import (
    CembDirectoryBackend,
    HashEmbedder,
    PairScore,
    TokenEmbeddingMatrix,
    TokenMask,
    build_mask,
    f_scores,
    make_backend,
    score_pair,
    similarity_matrix,
)
from codegen_eval.errors import (
    BackendError,
    ConfigurationError,
    DegenerateInputError,
    ShapeError,
)


def one_hot(rows: list[int], dim: int = 4) -> np.ndarray:
    out = np.zeros((len(rows), dim))
    for i, j in enumerate(rows):
        out[i, j] = 1.0
    return out


class TestBuildMask:
    def test_punctuation_off(self):
        mask = build_mask(("a", "+", "b"))
        assert mask.include == (True, False, True)

    def test_all_on(self):
        mask = build_mask(("a", "+", "b"), policy="all_on")
        assert mask.include == (True, True, True)

    def test_special_tokens_excluded(self):
        mask = build_mask(("[CLS]", "x", "</s>"))
        assert mask.include == (False, True, False)

    def test_subword_marker_stripped_before_test(self):
        mask = build_mask(("Ġ+", "Ġword"))
        assert mask.include == (False, True)

    def test_all_punctuation_degenerate(self):
        mask = build_mask(("(", ")", ":"))
        assert mask.included_count == 0

    def test_unknown_policy(self):
        with pytest.raises(ConfigurationError):
            build_mask(("a",), policy="everything")


class TestSimilarityMatrix:
    def test_identical_single_token(self):
        m = TokenEmbeddingMatrix(tokens=("x",), vectors=np.array([[0.3, 0.4]]))
        sims = similarity_matrix(m, m)
        assert sims.shape == (1, 1)
        assert sims[0, 0] == 1.0

    def test_orthogonal_one_hot(self):
        cand = TokenEmbeddingMatrix(tokens=("a", "b"), vectors=one_hot([0, 1]))
        ref = TokenEmbeddingMatrix(tokens=("c", "d"), vectors=one_hot([2, 3]))
        assert np.all(similarity_matrix(cand, ref) == 0.0)

    def test_matches_double_loop_oracle(self):
        rng = np.random.default_rng(99)
        cand = TokenEmbeddingMatrix(tokens=("a", "b"), vectors=rng.normal(size=(2, 5)))
        ref = TokenEmbeddingMatrix(tokens=("c", "d"), vectors=rng.normal(size=(2, 5)))
        sims = similarity_matrix(cand, ref)
        for i in range(2):
            for j in range(2):
                x = ref.vectors[i]
                y = cand.vectors[j]
                expected = float(x @ y / (np.linalg.norm(x) * np.linalg.norm(y)))
                assert sims[i, j] == pytest.approx(expected, abs=1e-12)

    def test_dim_mismatch(self):
        a = TokenEmbeddingMatrix(tokens=("x",), vectors=np.ones((1, 3)))
        b = TokenEmbeddingMatrix(tokens=("y",), vectors=np.ones((1, 4)))
        with pytest.raises(ShapeError):
            similarity_matrix(a, b)

    def test_zero_norm_row_named(self):
        a = TokenEmbeddingMatrix(tokens=("x", "y"), vectors=np.array([[1.0, 0.0], [0.0, 0.0]]))
        b = TokenEmbeddingMatrix(tokens=("z",), vectors=np.ones((1, 2)))
        with pytest.raises(DegenerateInputError, match="row 1"):
            similarity_matrix(a, b)


class TestScorePair:
    def test_one_hot_half_overlap(self):
        cand = TokenEmbeddingMatrix(tokens=("a", "b"), vectors=one_hot([0, 1]))
        ref = TokenEmbeddingMatrix(tokens=("a", "c"), vectors=one_hot([0, 2]))
        all_on = TokenMask(include=(True, True))
        score = score_pair(cand, all_on, ref, all_on)
        assert score == PairScore(precision=0.5, recall=0.5, f1=0.5, f3=0.5)

    def test_f3_weighs_recall(self):
        f1, f3 = f_scores(0.5, 1.0)
        assert f3 == pytest.approx(10 * 0.5 * 1.0 / (9 * 0.5 + 1.0), abs=1e-15)
        assert f3 > f1

    def test_f_algebra_fuzz(self):
        rng = random.Random(55)
        for _ in range(500):
            p = rng.uniform(0.01, 1.0)
            r = rng.uniform(0.01, 1.0)
            f1, f3 = f_scores(p, r)
            if r > p:
                assert f3 > f1
            elif r < p:
                assert f3 < f1
        for p in (0.1, 0.42, 1.0):
            assert f_scores(p, p) == (p, p)

    def test_swap_symmetry(self):
        embedder = HashEmbedder(dim=32)
        a_m, a_k = embedder.embed("def f(x): return x")
        b_m, b_k = embedder.embed("def g(y): return y + 1")
        ab = score_pair(a_m, a_k, b_m, b_k)
        ba = score_pair(b_m, b_k, a_m, a_k)
        assert ab.precision == ba.recall
        assert ab.recall == ba.precision

    def test_candidate_permutation_leaves_precision(self):
        embedder = HashEmbedder(dim=16, mask_policy="all_on")
        m, k = embedder.embed("a b c d")
        ref_m, ref_k = embedder.embed("a c x")
        base = score_pair(m, k, ref_m, ref_k)
        perm = [2, 0, 3, 1]
        shuffled = TokenEmbeddingMatrix(
            tokens=tuple(m.tokens[i] for i in perm), vectors=m.vectors[perm]
        )
        again = score_pair(shuffled, k, ref_m, ref_k)
        assert again.precision == pytest.approx(base.precision, abs=1e-12)

    def test_empty_mask_degenerate(self):
        embedder = HashEmbedder(dim=8)
        m, _ = embedder.embed("a")
        empty = TokenMask(include=(False,))
        full = TokenMask(include=(True,))
        with pytest.raises(DegenerateInputError):
            score_pair(m, empty, m, full)

    def test_misaligned_mask(self):
        embedder = HashEmbedder(dim=8)
        m, _ = embedder.embed("a b")
        with pytest.raises(ShapeError):
            score_pair(m, TokenMask(include=(True,)), m, TokenMask(include=(True, True)))


class TestHashEmbedder:
    def test_identity_scores_exactly_one(self):
        embedder = HashEmbedder()
        m, k = embedder.embed("def f(x):\n    return x + 1\n")
        score = score_pair(m, k, m, k)
        assert (score.precision, score.recall, score.f1, score.f3) == (1.0, 1.0, 1.0, 1.0)

    def test_deterministic_across_instances(self):
        a = HashEmbedder(dim=48)
        b = HashEmbedder(dim=48)
        m1, _ = a.embed("x = 1")
        m2, _ = b.embed("x = 1")
        assert np.array_equal(m1.vectors, m2.vectors)

    def test_nonnegative_similarities(self):
        embedder = HashEmbedder(dim=64)
        m1, _ = embedder.embed("alpha beta gamma")
        m2, _ = embedder.embed("delta epsilon")
        assert np.all(similarity_matrix(m1, m2) >= 0.0)

    def test_identity_string(self):
        assert HashEmbedder(dim=32).identity == "hash-v1-dim32"


class TestCembFormat:
    def test_round_trip(self, tmp_path):
        tokens = ["def", "f", "(", "x", ")", "ünïcode"]
        mask = [True, True, False, True, False, True]
        vectors = np.random.default_rng(1).normal(size=(6, 8)).astype(np.float32)
        path = tmp_path / "x.cemb"
        cemb.write_cemb(path, tokens, mask, vectors)
        tokens2, mask2, vectors2 = cemb.read_cemb(path)
        assert tokens2 == tokens
        assert mask2 == mask
        assert np.array_equal(vectors2, vectors.astype(np.float64))
        assert cemb.validate_cemb(path) == []

    def test_mask_bit_packing_lsb_first(self):
        data = cemb.to_bytes(["a"] * 9, [True] + [False] * 7 + [True], np.zeros((9, 1)))
        # header 16 bytes + 9 tokens x (4 + 1) bytes, then 2 mask bytes
        mask_offset = 16 + 9 * 5
        assert data[mask_offset] == 0b0000_0001
        assert data[mask_offset + 1] == 0b0000_0001

    def test_bad_magic(self):
        with pytest.raises(BackendError, match="magic"):
            cemb.from_bytes(b"XEMB" + b"\x00" * 20)

    def test_truncated_vectors(self, tmp_path):
        data = cemb.to_bytes(["a"], [True], np.ones((1, 4)))
        assert cemb.from_bytes(data)
        with pytest.raises(BackendError, match="vector block"):
            cemb.from_bytes(data[:-2])

    def test_validate_reports_problems(self, tmp_path):
        path = tmp_path / "bad.cemb"
        path.write_bytes(b"CEMB\x02\x00\x00\x00" + b"\x00" * 8)
        assert cemb.validate_cemb(path) == ["unsupported cemb version 2"]

    def test_content_addressing(self):
        name = cemb.cemb_filename("x = 1")
        assert name.endswith(".cemb")
        stem = name[: -len(".cemb")]
        assert stem == stem.lower()
        assert len(stem) == 64  # sha-256 hex
        assert cemb.cemb_filename("x = 1") == name
        assert cemb.cemb_filename("x = 2") != name


class TestDirectoryBackend:
    def test_round_trip_through_directory(self, tmp_path):
        source = HashEmbedder(dim=16)
        code = "def f(x): return x"
        matrix, mask = source.embed(code)
        cemb.write_cemb(
            tmp_path / cemb.cemb_filename(code),
            list(matrix.tokens),
            list(mask.include),
            matrix.vectors.astype(np.float32),
        )
        backend = CembDirectoryBackend(tmp_path)
        matrix2, mask2 = backend.embed(code)
        assert matrix2.tokens == matrix.tokens
        assert mask2.include == mask.include
        score = score_pair(matrix2, mask2, matrix2, mask2)
        assert score.f1 == 1.0

    def test_missing_file(self, tmp_path):
        backend = CembDirectoryBackend(tmp_path)
        with pytest.raises(BackendError, match="no embedding file"):
            backend.embed("unseen code")

    def test_missing_directory(self, tmp_path):
        with pytest.raises(BackendError):
            CembDirectoryBackend(tmp_path / "nope")


class TestMakeBackend:
    def test_hash(self):
        assert isinstance(make_backend("hash"), HashEmbedder)

    def test_dir(self, tmp_path):
        assert isinstance(make_backend(f"dir:{tmp_path}"), CembDirectoryBackend)

    def test_unknown(self):
        with pytest.raises(ConfigurationError):
            make_backend("quantum")
