import json

import pytest

from heardu.config import RunConfig
from heardu.core import Entity, TaggedTranscript
from heardu.errors import ConfigError, DataError
from heardu.io import atomic_write_text, open_log_for_append
from heardu.manifest import Journal, Manifest, iter_jsonl, journal_path
from heardu.records import AudioRef, GenRecord, Status

ADA = Entity("Ada", "PER")


def record(i=0, **kw):
    t = TaggedTranscript.from_text("Ada spoke .", ["B-PER", "O", "O"])
    return GenRecord(i, (ADA,), t, "[ Ada ] spoke .", **kw)


class TestRecord:
    def test_json_schema(self):
        r = record(3, audio=AudioRef("audio/00000003.wav", 1000, "ab" * 32), asr_text="ada spoke", wer=0.0,
                   status=Status.SCORED)
        obj = r.to_json()
        assert list(obj) == ["id", "entities", "text", "tokens", "tags", "target", "audio", "asr_text", "wer",
                             "ppl", "status"]
        assert obj["entities"] == [{"surface": "Ada", "type": "PER"}] and obj["status"] == "scored"
        assert GenRecord.from_json(json.loads(json.dumps(obj)), "word") == r

    def test_no_backward_moves(self):
        r = record(status=Status.SYNTHESIZED, audio=AudioRef("a", 1, "x"))
        with pytest.raises(ValueError):
            r.advance(status=Status.PENDING)

    def test_refilter_allowed(self):
        r = record(wer=0.2, status=Status.KEPT, asr_text="")
        assert r.advance(status=Status.FILTERED).status is Status.FILTERED

    @pytest.mark.parametrize("kw", [{"wer": 0.1}, {"status": Status.SCORED}, {"ppl": 0.0}])
    def test_invariants(self, kw):
        with pytest.raises(ValueError):
            record(**kw)

    def test_entity_count(self):
        t = TaggedTranscript.from_text("x")
        with pytest.raises(ValueError):
            GenRecord(0, (), t, "x")


class TestManifest:
    def test_round_trip(self, tmp_path):
        m = Manifest({"seed": 1, "mode": "word"}, [record(2), record(0)])
        m.save(tmp_path / "m.jsonl")
        back = Manifest.load(tmp_path / "m.jsonl")
        assert [r.id for r in back.records] == [0, 2]
        assert back.header["counts"]["pending"] == 2 and back.header["n_records"] == 2
        assert back.to_text() == (tmp_path / "m.jsonl").read_text()

    def test_duplicate_ids(self, tmp_path):
        with pytest.raises(DataError):
            Manifest({}, [record(1), record(1)]).save(tmp_path / "m.jsonl")

    def test_counts_must_reconcile(self, tmp_path):
        p = tmp_path / "m.jsonl"
        Manifest({"mode": "word"}, [record(0)]).save(p)
        lines = p.read_text().splitlines()
        head = json.loads(lines[0])
        head["header"]["counts"]["pending"] = 5
        p.write_text(json.dumps(head) + "\n" + lines[1] + "\n")
        with pytest.raises(DataError, match="counts"):
            Manifest.load(p)

    def test_malformed(self, tmp_path):
        p = tmp_path / "m.jsonl"
        p.write_text('{"header": {}}\n{"id": 0}\n')
        with pytest.raises(DataError):
            Manifest.load(p)
        p.write_text("")
        with pytest.raises(DataError):
            Manifest.load(p)
        with pytest.raises(DataError):
            Manifest.load(tmp_path / "missing.jsonl")

    def test_journal(self, tmp_path):
        m = tmp_path / "m.jsonl"
        j = Journal(m, "score")
        j.append(1, record={"x": 1})
        j.append(2, record={"x": 2})
        j.close()
        other = Journal(m, "gen_audio")
        other.append(5, record={})
        other.close()
        with open(journal_path(m), "a") as fh:
            fh.write('{"stage": "score", "id": 3, "rec')
        assert set(Journal(m, "score").replay()) == {1, 2}
        j = Journal(m, "score")
        j.append(3, record={})
        j.close()
        assert set(Journal(m, "score").replay()) == {1, 2, 3}
        j.close(remove=True)
        assert not journal_path(m).exists()


class TestIo:
    def test_atomic_write_leaves_no_temp(self, tmp_path):
        atomic_write_text(tmp_path / "a.txt", "x")
        assert [p.name for p in tmp_path.iterdir()] == ["a.txt"]

    def test_append_truncates_torn_line(self, tmp_path):
        p = tmp_path / "log.jsonl"
        p.write_text('{"a": 1}\n{"b":')
        with open_log_for_append(p) as fh:
            fh.write('{"c": 3}\n')
        assert [o for o in iter_jsonl(p)] == [{"a": 1}, {"c": 3}]

    def test_iter_jsonl_error(self, tmp_path):
        p = tmp_path / "x.jsonl"
        p.write_text("{bad\n")
        with pytest.raises(DataError, match=":1:"):
            list(iter_jsonl(p))


class TestConfig:
    def test_defaults_valid(self):
        cfg = RunConfig()
        assert cfg.filter_config().tau == 0.5 and cfg.backends["speech_recognizer"] == "mock"

    def test_precedence(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps({"seed": 1, "count": 10, "mode": "char"}))
        env = {"HEARDU_SEED": "2", "HEARDU_COUNT": "20", "HEARDU_SNR_RANGE": "[5, 6]"}
        cfg = RunConfig.load(p, env, {"seed": 3, "count": None})
        assert (cfg.seed, cfg.count, cfg.mode, cfg.snr_range) == (3, 20, "char", [5, 6])
        assert cfg.filter_config().tau == 0.3

    def test_unknown_key(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text('{"sede": 1}')
        with pytest.raises(ConfigError, match="sede"):
            RunConfig.load(p, {})

    @pytest.mark.parametrize("bad", [{"mode": "phoneme"}, {"data_size": 0}, {"tau": -1}, {"jobs": 0},
                                     {"speed_range": [0.1, 3]}, {"backends": {"oracle": "mock"}},
                                     {"retry": {"tries": 2}}, {"types": ["per"]}])
    def test_invalid(self, bad):
        with pytest.raises(ConfigError):
            RunConfig.from_dict(bad)

    def test_unreadable(self, tmp_path):
        with pytest.raises(ConfigError):
            RunConfig.load(tmp_path / "nope.json", {})

    def test_digest_stable(self):
        assert RunConfig(seed=1).digest() == RunConfig(seed=1).digest() != RunConfig(seed=2).digest()
        assert len(RunConfig().digest()) == 64

    def test_partial_backends(self):
        cfg = RunConfig.from_dict({"backends": {"speech_recognizer": "mock:p=0.3"}})
        assert cfg.backends["speech_recognizer"] == "mock:p=0.3" and cfg.backends["lm_scorer"] == "mock"
