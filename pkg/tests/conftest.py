from __future__ import annotations

import pytest

from helpers import ACCEPTANCE

from pctree.dataset import encode_rows


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def f1():
    return encode_rows([["a"], ["a"], ["b"], ["b"]], name="F1")


@pytest.fixture
def f2():
    return encode_rows([["a", "x"], ["a", "x"], ["b", "y"], ["b", "y"]], name="F2")
