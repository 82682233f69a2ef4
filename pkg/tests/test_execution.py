import random

import pytest

from codegen_eval.corpus import Corpus, EvaluationInstance, ExecutionRecord, join_executions
from codegen_eval.errors import DegenerateInputError
from codegen_eval.execution import (
    PassAtKInput,
    corpus_pass_rate,
    instance_pass,
    pass_at_k,
    pass_rate_table,
)
from oracles import enumerate_pass_at_k


def make_instance(task="t1", model="m1", idx=0):
    return EvaluationInstance(
        task_id=task,
        model_id=model,
        sample_index=idx,
        nl_context="do the thing",
        reference_code="def f():\n    return 1\n",
        candidate_code="def f():\n    return 1\n",
    )


class TestPassAtK:
    def test_all_pass(self):
        assert pass_at_k(n=5, c=5, k=3) == 1.0

    def test_none_pass(self):
        assert pass_at_k(n=5, c=0, k=3) == 0.0

    def test_spot_value(self):
        assert pass_at_k(n=5, c=2, k=1) == pytest.approx(0.4, abs=1e-12)
        assert pass_at_k(n=5, c=2, k=1) == pytest.approx(
            enumerate_pass_at_k(5, 2, 1), abs=1e-12
        )

    def test_matches_enumeration_exhaustive(self):
        for n in range(1, 9):
            for c in range(0, n + 1):
                for k in range(1, n + 1):
                    assert pass_at_k(n, c, k) == pytest.approx(
                        enumerate_pass_at_k(n, c, k), abs=1e-12
                    )

    def test_monotone_in_k_and_c_fuzz(self):
        rng = random.Random(3)
        for _ in range(300):
            n = rng.randint(2, 60)
            c = rng.randint(0, n)
            k = rng.randint(1, n - 1)
            assert pass_at_k(n, c, k + 1) >= pass_at_k(n, c, k) - 1e-12
            if c < n:
                assert pass_at_k(n, c + 1, k) >= pass_at_k(n, c, k) - 1e-12

    def test_pass_at_1_is_c_over_n(self):
        rng = random.Random(9)
        for _ in range(200):
            n = rng.randint(1, 200)
            c = rng.randint(0, n)
            assert pass_at_k(n, c, 1) == pytest.approx(c / n, abs=1e-12)

    def test_large_n_no_overflow(self):
        assert 0.0 <= pass_at_k(n=1000, c=500, k=100) <= 1.0

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            pass_at_k(n=5, c=6, k=1)
        with pytest.raises(ValueError):
            pass_at_k(n=5, c=2, k=6)
        with pytest.raises(ValueError):
            PassAtKInput(n=0, c=0, k=1)


class TestInstancePass:
    @pytest.mark.parametrize(
        "passed,total,expected", [(3, 3, True), (2, 3, False), (0, 1, False)]
    )
    def test_cases(self, passed, total, expected):
        rec = ExecutionRecord("t", "m", 0, tests_passed=passed, tests_total=total)
        assert instance_pass(rec) is expected


class TestCorpusPassRate:
    def _corpus(self, outcomes):
        instances = []
        records = []
        for i, passed in enumerate(outcomes):
            instances.append(make_instance(task=f"t{i}", model="m1"))
            records.append(
                ExecutionRecord(f"t{i}", "m1", 0, tests_passed=3 if passed else 1, tests_total=3)
            )
        return join_executions(Corpus(instances=tuple(instances)), records)

    def test_all_pass(self):
        assert corpus_pass_rate(self._corpus([True] * 4), "m1", k=1) == 1.0

    def test_half_pass(self):
        assert corpus_pass_rate(self._corpus([True, False, True, False]), "m1", k=1) == 0.5

    def test_no_labels(self):
        corpus = Corpus(instances=(make_instance(),))
        with pytest.raises(DegenerateInputError):
            corpus_pass_rate(corpus, "m1", k=1)

    def test_multi_sample_aggregation(self):
        instances = [make_instance(idx=i) for i in range(4)]
        records = [
            ExecutionRecord("t1", "m1", i, tests_passed=3 if i < 2 else 0, tests_total=3)
            for i in range(4)
        ]
        corpus = join_executions(Corpus(instances=tuple(instances)), records)
        # one task with n=4, c=2
        assert corpus_pass_rate(corpus, "m1", k=2) == pytest.approx(
            enumerate_pass_at_k(4, 2, 2), abs=1e-12
        )

    def test_pass_rate_table(self):
        corpus = self._corpus([True, False])
        table = pass_rate_table(corpus, ks=[1])
        assert table == {"m1": {1: 0.5}}
