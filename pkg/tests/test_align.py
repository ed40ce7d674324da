import pytest

from heardu.align import count_words, lexical_align, make_target, normalize_transcript, select_matches
from heardu.core import Entity, decode_entity_aware
from heardu.errors import AlignmentFailed

PER, LOC, ORG = "PER", "LOC", "ORG"


def test_basic_per():
    t = lexical_align("salva kiir is president", [Entity("salva kiir", PER)], "word")
    assert t.tags == ("B-PER", "I-PER", "O", "O")


def test_all_occurrences():
    t = lexical_align("paris is big and paris is old", [Entity("Paris", LOC)], "word")
    assert t.tags == ("B-LOC", "O", "O", "O", "B-LOC", "O", "O")


def test_longer_first():
    t = lexical_align("visit new york", [Entity("New York", LOC)], "word", extra_entities=[Entity("York", LOC)])
    assert t.tags == ("O", "B-LOC", "I-LOC")
    m = select_matches("visit new york", [Entity("York", LOC), Entity("New York", LOC)], "word")
    assert [(x.entity.surface, x.start_token, x.end_token) for x in m] == [("New York", 1, 3)]


def test_sampled_entity_left_without_span_fails():
    with pytest.raises(AlignmentFailed) as info:
        lexical_align("visit new york", [Entity("York", LOC), Entity("New York", LOC)], "word")
    assert info.value.missing == (Entity("York", LOC),)


def test_leftmost_wins_on_equal_length():
    # "b c" at 1 and "c d" at 2 overlap; the leftmost is chosen
    m = select_matches("a b c d", [Entity("c d", ORG), Entity("b c", PER)], "word")
    assert [(x.entity.etype, x.start_token) for x in m] == [(PER, 1)]


def test_dictionary_order_breaks_full_ties():
    for ents in ([Entity("apple", PER), Entity("Apple", ORG)], [Entity("Apple", ORG), Entity("apple", PER)]):
        m = select_matches("x apple y", ents, "word")
        assert [(x.entity.etype, x.start_token) for x in m] == [(ORG, 1)]


def test_edge_punctuation_split():
    t = lexical_align("He lives in South Sudan, happily.", [Entity("South Sudan", LOC)], "word")
    assert t.text == "He lives in South Sudan , happily ."
    assert t.tags == ("O", "O", "O", "B-LOC", "I-LOC", "O", "O", "O")


def test_no_substring_match_in_word_mode():
    with pytest.raises(AlignmentFailed) as info:
        lexical_align("parisian food", [Entity("Paris", LOC)], "word")
    assert info.value.missing == (Entity("Paris", LOC),)


def test_char_mode_exact():
    t = lexical_align("我在北京大学读书", [Entity("北京大学", ORG)], "char", extra_entities=[Entity("北京", LOC)])
    assert t.tags == ("O", "O", "B-ORG", "I-ORG", "I-ORG", "I-ORG", "O", "O")
    t = lexical_align("我去北京", [Entity("北京", LOC)], "char")
    assert make_target(t) == "我去(北京)"


def test_extra_entities_optional():
    t = lexical_align("ibm hired ada", [Entity("Ada", PER)], "word",
                      extra_entities=[Entity("IBM", ORG), Entity("Google", ORG)])
    assert t.tags == ("B-ORG", "O", "B-PER")


def test_target_decodes_strictly():
    t = lexical_align("Salva Kiir visited New York .", [Entity("Salva Kiir", PER), Entity("New York", LOC)],
                      "word")
    target = make_target(t)
    assert target == "[ Salva Kiir ] visited ( New York ) ."
    assert decode_entity_aware(target) == t


def test_normalize_idempotent():
    once = normalize_transcript('"Hi," she said... (really)', "word")
    assert once == '" Hi ," she said ... ( really )'
    assert normalize_transcript(once, "word") == once


def test_count_words_ignores_punct():
    assert count_words("Hello, world .", "word") == 2
    assert count_words("北京，你好。", "char") == 4


def test_select_matches_sorted():
    m = select_matches("b a b", [Entity("b", PER), Entity("a", LOC)], "word")
    assert [(x.start_token, x.entity.etype) for x in m] == [(0, PER), (1, LOC), (2, PER)]
