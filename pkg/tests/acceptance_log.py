"""Collects one summary line per acceptance criterion for the terminal report."""
LINES = []


def record(number, title, ok, detail):
    line = f"criterion {number} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    LINES.append(line)
    print(line)
    return ok
