"""Human-readable rendering of policies and result tables for logs and stdout."""

from collections.abc import Sequence

# Box-drawing characters used in Unicode tables
_H, _V = "─", "│"
_TOP = ("┌", "┬", "┐")
_MID = ("├", "┼", "┤")
_BOT = ("└", "┴", "┘")


def format_policy(pi, digits: int = 4) -> str:
    """(1, 0.6562, 0) style rendering; accepts a Policy or any float sequence."""
    probs = getattr(pi, "probs", pi)
    parts = []
    for x in probs:
        x = float(x)
        if x in (0.0, 1.0):
            parts.append(str(int(x)))
        else:
            parts.append(f"{x:.{digits}f}")
    return "(" + ", ".join(parts) + ")"


def format_number(x: float, digits: int = 6) -> str:
    if isinstance(x, bool) or not isinstance(x, float):
        return str(x)
    return f"{x:.{digits}g}"


def format_table(headers: Sequence[str], rows: Sequence[Sequence]) -> str:
    """Render rows as a Unicode box-drawing table."""
    cells = [[str(h) for h in headers]]
    for row in rows:
        cells.append([format_number(v) for v in row])
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]

    def rule(chars: tuple[str, str, str]) -> str:
        left, cross, right = chars
        return left + cross.join(_H * (w + 2) for w in widths) + right

    def line(values: list[str]) -> str:
        return _V + _V.join(f" {v.ljust(w)} " for v, w in zip(values, widths)) + _V

    out = [rule(_TOP), line(cells[0]), rule(_MID)]
    out.extend(line(r) for r in cells[1:])
    out.append(rule(_BOT))
    return "\n".join(out)
