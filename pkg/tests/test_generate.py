import numpy as np
import pytest

from heardu.backends.mock import MockTextGenerator
from heardu.core import Entity
from heardu.errors import EmptyNed, GenerationExhausted
from heardu.generate import (count_words, GenerationConstraints, PromptTemplate, SampleConfig, build_generation_prompt,
                             generate_sentence, sample_entities, subset_entities, validate_candidate)
from heardu.ned import Ned

SALVA = Entity("Salva Kiir", "PER")
SALVA_RESPONSE = ("Salva Kiir is a prominent political figure in South Sudan, serving as the country's "
           "president and leading its government through years of transition.")


class TestSampling:
    def test_single_entity_ned(self):
        ned = Ned(entities=(SALVA,))
        for rid in range(20):
            assert sample_entities(ned, SampleConfig(seed=1), rid) == [SALVA]

    def test_deterministic(self, small_ned):
        cfg = SampleConfig(seed=5)
        assert sample_entities(small_ned, cfg, 42) == sample_entities(small_ned, cfg, 42)

    def test_frozen_draws(self, small_ned):
        # regression oracle for the (seed, record_id) stream layout
        got = [tuple(e.surface for e in sample_entities(small_ned, SampleConfig(seed=0), r)) for r in range(3)]
        assert got == FROZEN_DRAWS

    def test_distinct_pairs(self, small_ned):
        for rid in range(200):
            ents = sample_entities(small_ned, SampleConfig(seed=3), rid)
            assert len(ents) in (1, 2) and len(set(ents)) == len(ents)

    def test_size_probabilities(self, small_ned):
        sizes = [len(sample_entities(small_ned, SampleConfig(2, (1.0, 0.0)), r)) for r in range(50)]
        assert set(sizes) == {1}

    def test_empty(self):
        with pytest.raises(EmptyNed):
            sample_entities(Ned(), SampleConfig(), 0)

    def test_bad_config(self):
        with pytest.raises(ValueError):
            SampleConfig(0, (0.7, 0.7))


class TestSubset:
    def test_fraction(self, small_ned):
        sub = subset_entities(small_ned, 0.25, seed=1)
        assert len(sub) == 3 and set(sub) <= set(small_ned.entities)
        assert sub == subset_entities(small_ned, 0.25, seed=1)

    def test_full(self, small_ned):
        assert subset_entities(small_ned, 1.0, 9) == small_ned.entities

    def test_seed_changes_subset(self, small_ned):
        subsets = {subset_entities(small_ned, 0.5, s) for s in range(10)}
        assert len(subsets) > 1


class TestPrompt:
    def test_single(self):
        p = build_generation_prompt([SALVA], "European Parliament")
        assert "I want you to act as a speaker in European Parliament" in p
        assert "My entity is 'Salva Kiir', the type is 'PER'" in p

    def test_pair(self):
        p = build_generation_prompt([Entity("A", "PER"), Entity("B", "LOC")], "x")
        assert "My entities are 'A, B', the types are 'PER,LOC'" in p

    def test_empty_domain(self):
        assert "speaker in ." in build_generation_prompt([SALVA], "")

    def test_template_file(self, tmp_path):
        path = tmp_path / "t.txt"
        path.write_text("one {entities}/{types}@{domain}\n%%\ntwo {entities}/{types}\n")
        t = PromptTemplate.load(path)
        assert t.render([SALVA], "d") == "one Salva Kiir/PER@d"
        assert t.render([SALVA, Entity("X", "LOC")], "d") == "two Salva Kiir, X/PER,LOC"

    def test_packaged_template_matches_default(self):
        from importlib.resources import files
        path = files("heardu") / "templates" / "generation.txt"
        assert PromptTemplate.load(path) == PromptTemplate()


C = GenerationConstraints()


class TestValidate:
    def test_long_response_accepted(self):
        v = validate_candidate(SALVA_RESPONSE, [SALVA], C, "word")
        assert v.ok and v.text.startswith("Salva Kiir is a prominent")
        assert count_words(SALVA_RESPONSE, "word") == 23

    def test_markers(self):
        assert validate_candidate("[" + SALVA_RESPONSE, [SALVA], C, "word").reason == "marker_chars"

    def test_casefold(self):
        text = "paris is lovely " + " ".join(["word"] * 19)
        assert validate_candidate(text, [Entity("Paris", "LOC")], C, "word").ok

    def test_too_short(self):
        assert validate_candidate("Salva Kiir " + "x " * 8, [SALVA], C, "word").reason == "too_short"

    def test_too_long(self):
        assert validate_candidate("Salva Kiir " + "x " * 99, [SALVA], C, "word").reason == "too_long"

    def test_bounds_inclusive(self):
        assert validate_candidate("Salva Kiir " + "x " * 18, [SALVA], C, "word").ok
        assert validate_candidate("Salva Kiir " + "x " * 98, [SALVA], C, "word").ok

    def test_missing(self):
        text = " ".join(["word"] * 25)
        assert validate_candidate(text, [SALVA], C, "word").reason == "missing_entity:Salva Kiir"

    def test_empty(self):
        assert validate_candidate("  ", [SALVA], C, "word").reason == "empty"

    def test_char_mode(self):
        ent = Entity("北京", "LOC")
        assert validate_candidate("我在北京" + "好" * 18, [ent], C, "char").ok
        assert validate_candidate("我在北京" + "好" * 10, [ent], C, "char").reason == "too_short"


class Canned:
    identity = "canned"

    def __init__(self, replies):
        self.replies = list(replies)
        self.prompts = []

    def generate(self, prompt, record_id=None):
        self.prompts.append(prompt)
        return self.replies.pop(0)


class TestGenerate:
    def test_accepts_first_valid(self):
        backend = Canned(["too short", SALVA_RESPONSE])
        assert generate_sentence([SALVA], backend, C, "word").startswith("Salva Kiir")
        assert len(backend.prompts) == 2

    def test_exhausted(self):
        backend = Canned(["nope"] * 4)
        with pytest.raises(GenerationExhausted) as info:
            generate_sentence([SALVA], backend, GenerationConstraints(max_retries=3), "word")
        assert len(info.value.rejected) == 4 and info.value.rejected[0][1] == "too_short"

    @pytest.mark.parametrize("mode", ["word", "char"])
    def test_mock_generator_validates(self, mode):
        ents = [Entity("北京", "LOC"), Entity("上海", "LOC")] if mode == "char" else [SALVA, Entity("Paris", "LOC")]
        gen = MockTextGenerator(seed=1, mode=mode)
        text = generate_sentence(ents, gen, C, mode, record_id=3)
        assert text == generate_sentence(ents, MockTextGenerator(seed=1, mode=mode), C, mode, record_id=3)


FROZEN_DRAWS = [("New York",), ("Ada Lovelace", "South Sudan"), ("South Sudan", "Angela Merkel")]
