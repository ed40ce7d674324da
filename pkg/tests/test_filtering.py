import json

import pytest

from heardu.backends.mock import MockLanguageModel
from heardu.core import Entity, TaggedTranscript
from heardu.errors import EmptyReference, UnscoredRecord
from heardu.filtering import (EditOps, FilterConfig, apply_filter, compute_wer, edit_distance,
                              perplexity_report, score_record, sweep_to_csv, sweep_to_json,
                              threshold_sweep, wer_tokens)
from heardu.records import AudioRef, GenRecord, Status


def rec(i, wer=None, status=Status.SCORED, text="alpha beta gamma delta", ppl=None):
    return GenRecord(i, (Entity("alpha", "PER"),), TaggedTranscript.from_text(text, ["B-PER", "O", "O", "O"]),
                     "[ alpha ] beta gamma delta", AudioRef("a.wav", 100, "0" * 64),
                     asr_text="" if wer is not None else None, wer=wer, status=status, ppl=ppl)


class TestEditDistance:
    def test_identity(self):
        assert edit_distance(["a", "b"], ["a", "b"]) == EditOps(0, 0, 0, 2)

    def test_mixed(self):
        ops = edit_distance(["a", "b", "c", "d"], ["a", "x", "c"])
        assert (ops.substitutions, ops.deletions, ops.insertions) == (1, 1, 0)

    def test_deletion_only(self):
        assert edit_distance(["a"], []) == EditOps(0, 1, 0, 1)

    def test_insertion_only(self):
        assert edit_distance([], ["a", "b"]) == EditOps(0, 0, 2, 0)


class TestWer:
    def test_worked_examples(self):
        assert compute_wer("the cat sat", "the cat sat", "word") == 0.0
        assert compute_wer("a b c d", "a x c", "word") == 0.5
        assert compute_wer("北京大学", "北京天学", "char") == 0.25

    def test_normalisation(self):
        assert compute_wer("Hello , World .", "hello world") == 0.0
        assert compute_wer("Hello , World .", "hello world", casefold=False) == 1.0
        assert wer_tokens("Don't stop.", "word") == ["dont", "stop"]

    def test_char_mode_ignores_spaces_and_punct(self):
        assert compute_wer("北京，大学。", "北京 大学", "char") == 0.0

    def test_not_capped(self):
        assert compute_wer("a", "x y z") == 3.0

    def test_empty_reference(self):
        with pytest.raises(EmptyReference):
            compute_wer(" , . ", "x")


class TestFilter:
    def test_keep_rule_boundary(self):
        kept, filtered = apply_filter([rec(0, 0.4), rec(1, 0.5), rec(2, 0.51)], FilterConfig(tau=0.5))
        assert [r.id for r in kept] == [0, 1] and [r.id for r in filtered] == [2]
        assert all(r.status is Status.KEPT for r in kept)

    def test_tau_zero(self):
        kept, _ = apply_filter([rec(0, 0.0), rec(1, 0.01)], FilterConfig(tau=0.0))
        assert [r.id for r in kept] == [0]

    def test_default_tau_per_mode(self):
        assert FilterConfig("word").tau == 0.5
        assert FilterConfig("char").tau == 0.3

    def test_refilter(self):
        kept, filtered = apply_filter([rec(0, 0.4), rec(1, 0.2)], FilterConfig(tau=0.5))
        kept2, filtered2 = apply_filter(kept + filtered, FilterConfig(tau=0.3))
        assert [r.id for r in kept2] == [1] and [r.id for r in filtered2] == [0]

    def test_unscored(self):
        r = GenRecord(0, (Entity("a", "PER"),), TaggedTranscript.from_text("a", ["B-PER"]), "[ a ]")
        with pytest.raises(UnscoredRecord):
            apply_filter([r], FilterConfig())

    @pytest.mark.parametrize("tau", [-0.1, float("nan"), float("inf")])
    def test_bad_tau(self, tau):
        with pytest.raises(ValueError):
            FilterConfig(tau=tau)


class EchoAsr:
    identity = "echo"

    def __init__(self, reply=None, fail=False):
        self.reply, self.fail = reply, fail

    def recognize(self, audio, record_id=None):
        if self.fail:
            from heardu.errors import BackendUnavailable
            raise BackendUnavailable("down")
        return self.reply


class TestScore:
    def base(self):
        return rec(0, status=Status.SYNTHESIZED)

    def test_echo_zero(self):
        r = score_record(self.base(), EchoAsr("alpha beta gamma delta"), FilterConfig(), audio=object())
        assert r.wer == 0.0 and r.status is Status.SCORED and r.asr_text == "alpha beta gamma delta"

    def test_entity_aware_markers_stripped(self):
        r = score_record(self.base(), EchoAsr("[ alpha ] beta gamma delta"), FilterConfig(), audio=object(),
                         entity_aware=True)
        assert r.wer == 0.0 and r.asr_text == "alpha beta gamma delta"

    def test_backend_error_leaves_record(self):
        from heardu.errors import BackendUnavailable
        r = self.base()
        with pytest.raises(BackendUnavailable):
            score_record(r, EchoAsr(fail=True), FilterConfig(), audio=object())
        assert r.status is Status.SYNTHESIZED and r.wer is None


class TestSweep:
    def test_rows(self):
        rows = threshold_sweep([rec(i, w) for i, w in enumerate([0.0, 0.2, 0.5, 0.9])], [1.0, 0.0, 0.5])
        assert [(r.tau, r.kept_count, r.kept_fraction) for r in rows] == [
            (0.0, 1, 0.25), (0.5, 3, 0.75), (1.0, 4, 1.0)]

    def test_all_zero(self):
        rows = threshold_sweep([rec(i, 0.0) for i in range(3)], [0.0, 0.3])
        assert all(r.kept_fraction == 1.0 for r in rows)

    def test_outputs(self):
        rows = threshold_sweep([rec(0, 0.1)], [0.1])
        assert sweep_to_csv(rows) == "tau,kept_count,kept_fraction\n0.1,1,1.0\n"
        assert json.loads(sweep_to_json(rows)) == [{"tau": 0.1, "kept_count": 1, "kept_fraction": 1.0}]


class TestPerplexity:
    def test_constant(self):
        report = perplexity_report([rec(0, 0.1), rec(1, 0.9)], MockLanguageModel(100.0))
        assert report["mean"] == 100.0 and report["count"] == 2

    def test_empty(self):
        report = perplexity_report([], MockLanguageModel())
        assert report["count"] == 0 and "mean" not in report

    def test_synthetic_vs_reference(self):
        class Lm:
            def perplexity(self, text, record_id=None):
                return 187.67 if record_id is not None else 165.55

        report = perplexity_report([rec(0, 0.1, Status.KEPT)], Lm(), reference_texts=["real text"])
        assert report["mean"] == 187.67 and report["reference"]["mean"] == 165.55
        assert report["kept"]["mean"] == 187.67 and report["filtered"] == {"count": 0}

    def test_stored_values(self):
        report = perplexity_report([rec(0, 0.1, ppl=50.0), rec(1, 0.2, ppl=150.0)])
        assert report["mean"] == 100.0
