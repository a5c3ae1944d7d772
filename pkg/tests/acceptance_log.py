"""Collects one verdict per acceptance criterion for the terminal summary."""

LOG = {}


def record(num, ok, detail=""):
    prev = LOG.get(num)
    if prev is not None:
        ok = ok and prev[0]
        detail = f"{prev[1]}; {detail}" if detail else prev[1]
    LOG[num] = (bool(ok), detail)
    print(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")
