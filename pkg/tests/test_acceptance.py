"""Numbered acceptance criteria, each run at its stated tolerance.

Every criterion prints one PASS/FAIL line (collected in the terminal summary)
followed by its individual checks.  A failing criterion fails its test; the
tolerances are never relaxed here.  Run as a script for the same report
without pytest.
"""
import pytest

from mtlab.verify import CRITERIA

TITLES = {
    "1": "cusp closed forms",
    "2": "comparison ODE regimes and order",
    "3": "conformal distortion tail limit",
    "4": "rearrangement",
    "5": "spectral gap",
    "6": "algebraic shift bound",
    "7": "Moser sharpness scan",
    "8": "collar blow-up slope",
    "9": "Markov lemma (Poincare reading)",
    "10": "CLI determinism",
}


def evaluate(key):
    checks = CRITERIA[key]()
    # a starred check is a side-by-side variant reported next to the
    # criterion, not part of it
    own = [c for c in checks if c.criterion == key]
    passed = all(c.passed for c in own)
    lines = [f"[{'PASS' if passed else 'FAIL'}] criterion {key}: {TITLES[key]}"]
    lines += ["    " + c.line() for c in checks]
    return passed, lines, own


@pytest.mark.parametrize("key", list(CRITERIA))
def test_criterion(key, acceptance_log):
    passed, lines, own = evaluate(key)
    acceptance_log.extend(lines)
    print("\n".join(lines))
    failed = [f"{c.name}: value={c.value:g} target={c.target:g} tol={c.tol:g}" for c in own if not c.passed]
    assert passed, "; ".join(failed)


if __name__ == "__main__":
    import sys

    ok = True
    for key in CRITERIA:
        passed, lines, _ = evaluate(key)
        ok &= passed
        print("\n".join(lines), flush=True)
    sys.exit(0 if ok else 1)
