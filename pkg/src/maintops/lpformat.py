"""Read/write LinearModel in LP interchange text, for external cross-checks.

Only the subset this package emits is supported on the read side:
a Minimize objective, linear rows with <= / >= / =, a Bounds section,
Binaries/Generals sections, End.  The objective constant is carried in a
``\\ offset`` comment so external solvers simply ignore it.
"""

from __future__ import annotations

import math
import re

from .milp import EQ, GE, LE, LinearModel, ModelError

_NAME_RE = re.compile(r"[^A-Za-z0-9_.]")


def _clean(name: str) -> str:
    out = _NAME_RE.sub("_", name)
    if not out or out[0].isdigit() or out[0] == ".":
        out = "v_" + out
    return out


def _coef(v: float) -> str:
    return f"{v:.17g}"


def write_lp(model: LinearModel) -> str:
    cols = [_clean(n) for n in model.col_names]
    if len(set(cols)) != len(cols):
        cols = [f"{n}_{j}" for j, n in enumerate(cols)]
    out = []
    if model.offset:
        out.append(f"\\ offset {_coef(model.offset)}")
    out.append("Minimize")
    terms = [f"{'+' if v >= 0 else '-'} {_coef(abs(v))} {cols[j]}"
             for j, v in enumerate(model.obj) if v != 0.0]
    out.append(" obj: " + (" ".join(terms) if terms else "0 " + cols[0] if cols else "0"))
    out.append("Subject To")
    for i, row in enumerate(model.rows):
        parts = [f"{'+' if v >= 0 else '-'} {_coef(abs(v))} {cols[j]}" for j, v in row]
        sense = {LE: "<=", GE: ">=", EQ: "="}[model.senses[i]]
        out.append(f" {_clean(model.row_names[i])}: {' '.join(parts)} {sense} {_coef(model.rhs[i])}")
    out.append("Bounds")
    for j in range(model.num_cols):
        lo, hi = model.lower[j], model.upper[j]
        if lo == hi:
            out.append(f" {cols[j]} = {_coef(lo)}")
        elif not math.isfinite(lo) and not math.isfinite(hi):
            out.append(f" {cols[j]} free")
        elif not math.isfinite(lo):
            out.append(f" -inf <= {cols[j]} <= {_coef(hi)}")
        elif not math.isfinite(hi):
            out.append(f" {_coef(lo)} <= {cols[j]} <= +inf")
        else:
            out.append(f" {_coef(lo)} <= {cols[j]} <= {_coef(hi)}")
    binaries = [cols[j] for j in range(model.num_cols)
                if model.integer[j] and model.lower[j] >= 0 and model.upper[j] <= 1]
    generals = [cols[j] for j in range(model.num_cols)
                if model.integer[j] and cols[j] not in set(binaries)]
    if binaries:
        out.append("Binaries")
        out.append(" " + " ".join(binaries))
    if generals:
        out.append("Generals")
        out.append(" " + " ".join(generals))
    out.append("End")
    return "\n".join(out) + "\n"


_TERM_RE = re.compile(r"([+-])?\s*(\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)?\s*([A-Za-z_][A-Za-z0-9_.]*)")


def _parse_terms(text: str) -> list[tuple[str, float]]:
    terms = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TERM_RE.match(text, pos)
        if not m:
            raise ModelError(f"cannot parse linear expression near {text[pos:pos + 20]!r}")
        sign = -1.0 if m.group(1) == "-" else 1.0
        coef = float(m.group(2)) if m.group(2) else 1.0
        terms.append((m.group(3), sign * coef))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return terms


def read_lp(text: str) -> LinearModel:
    """Parse LP text previously produced by write_lp."""
    model = LinearModel()
    col_index: dict[str, int] = {}
    offset = 0.0
    section = None
    pending_rows: list[tuple[str, list[tuple[str, float]], str, float]] = []

    def col(name: str) -> int:
        if name not in col_index:
            col_index[name] = model.add_column(name, lower=0.0, upper=math.inf)
        return col_index[name]

    lines = []
    for raw in text.splitlines():
        if raw.lstrip().startswith("\\"):
            body = raw.lstrip()[1:].strip()
            if body.startswith("offset"):
                offset = float(body.split()[1])
            continue
        if raw.strip():
            lines.append(raw.strip())

    i = 0
    while i < len(lines):
        line = lines[i]
        low = line.lower()
        if low in ("minimize", "min"):
            section = "obj"
            i += 1
            continue
        if low in ("maximize", "max"):
            raise ModelError("only minimization problems are supported")
        if low in ("subject to", "st", "s.t."):
            section = "rows"
            i += 1
            continue
        if low == "bounds":
            section = "bounds"
            i += 1
            continue
        if low in ("binaries", "binary"):
            section = "bin"
            i += 1
            continue
        if low in ("generals", "general"):
            section = "gen"
            i += 1
            continue
        if low == "end":
            break

        if section == "obj":
            body = line.split(":", 1)[1] if ":" in line else line
            for name, v in _parse_terms(body):
                model.add_objective(col(name), v)
        elif section == "rows":
            name = None
            body = line
            if ":" in line:
                name, body = (p.strip() for p in line.split(":", 1))
            m = re.search(r"(<=|>=|=)\s*([+-]?[\d.eE+-]+)\s*$", body)
            if not m:
                raise ModelError(f"row without relation: {line!r}")
            sense = {"<=": LE, ">=": GE, "=": EQ}[m.group(1)]
            rhs = float(m.group(2))
            pending_rows.append((name or f"r{len(pending_rows)}",
                                 _parse_terms(body[: m.start()]), sense, rhs))
        elif section == "bounds":
            toks = line.split()
            if len(toks) == 2 and toks[1].lower() == "free":
                j = col(toks[0])
                model.lower[j], model.upper[j] = -math.inf, math.inf
            elif len(toks) == 3 and toks[1] == "=":
                j = col(toks[0])
                model.lower[j] = model.upper[j] = float(toks[2])
            elif len(toks) == 5 and toks[1] == "<=" and toks[3] == "<=":
                j = col(toks[2])
                model.lower[j] = -math.inf if toks[0] in ("-inf", "-infinity") else float(toks[0])
                model.upper[j] = math.inf if toks[4] in ("+inf", "inf", "+infinity") else float(toks[4])
            else:
                raise ModelError(f"unsupported bound line: {line!r}")
        elif section in ("bin", "gen"):
            for name in line.split():
                j = col(name)
                model.integer[j] = True
                if section == "bin":
                    model.lower[j] = max(model.lower[j], 0.0)
                    model.upper[j] = min(model.upper[j], 1.0)
        else:
            raise ModelError(f"content outside any section: {line!r}")
        i += 1

    for name, terms, sense, rhs in pending_rows:
        model.add_row([(col(n), v) for n, v in terms], sense, rhs, name=name)
    model.offset = offset
    model.validate()
    return model
