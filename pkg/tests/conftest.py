import json
from pathlib import Path

import pytest

from heardu.core import Entity
from heardu.ned import Ned

NAMES = [
    ("Salva Kiir", "PER"), ("Angela Merkel", "PER"), ("Ada Lovelace", "PER"),
    ("Paris", "LOC"), ("New York", "LOC"), ("South Sudan", "LOC"),
    ("Google", "ORG"), ("United Nations", "ORG"), ("IBM", "ORG"), ("Red Cross", "ORG"),
]


@pytest.fixture
def small_ned() -> Ned:
    return Ned(("PER", "LOC", "ORG"), tuple(Entity(s, t) for s, t in NAMES), {})


@pytest.fixture
def ned_file(tmp_path, small_ned) -> Path:
    path = tmp_path / "ned.json"
    small_ned.save(path)
    return path


@pytest.fixture
def annotations_file(tmp_path) -> Path:
    path = tmp_path / "ann.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        for i, (s, t) in enumerate(NAMES):
            fh.write(json.dumps({"doc_id": f"d{i}", "surface": s, "type": t}) + "\n")
    return path


# -- acceptance summary -------------------------------------------------------

_ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


class Criterion:
    def __init__(self, number: int, title: str):
        self.number, self.title = number, title

    def record(self, ok: bool, detail: str = "") -> None:
        _ACCEPTANCE[self.number] = (self.title, ok, detail)
        print(f"[acceptance {self.number:2d}] {'PASS' if ok else 'FAIL'} {self.title}: {detail}")


@pytest.fixture
def criterion(request):
    marker = request.node.get_closest_marker("acceptance")
    number, title = marker.args
    crit = Criterion(number, title)
    yield crit
    if number not in _ACCEPTANCE:  # assertion fired before record()
        _ACCEPTANCE[number] = (title, False, "assertion failed")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker and call.when == "call" and call.excinfo is not None:
        number, title = marker.args
        _ACCEPTANCE[number] = (title, False, str(call.excinfo.value).splitlines()[0][:120])


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, ok, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"{number:2d}. {'PASS' if ok else 'FAIL'}  {title}  ({detail})")
