"""Serialization and display of differential polynomials and operators.

Two concerns live here, both deliberately free of algebra:

* a JSON-able term-list encoding of :class:`~pva_forge.diffalg.DiffPoly`
  values (and of flow tuples / fixture registries built from them), used
  by the versioned fixture files shipped with the package and by the
  ``json`` output format of the command line tool;
* deterministic plain-text and LaTeX renderers for densities, flows,
  λ-series and operator matrices, used by the ``text`` / ``latex``
  output formats.

The JSON encoding of one polynomial is a list of term records::

    {"coeff": "-3/8", "monomial": [[0, 1, 1], [1, 0, 2]]}

meaning ``-3/8 * u0' * u1^2``: each monomial entry is ``[generator,
derivative order, power]`` and the coefficient is a rational number in
string form.  Terms are sorted by monomial, so the encoding of a given
polynomial is unique and files diff cleanly.  Only genuinely rational
coefficients are supported — densities and flows never carry the pencil
parameter, and the encoder refuses anything else rather than corrupt
it.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from .diffalg import DiffPoly, Mon, QZ
from .psido import NonlocalOp

__all__ = [
    "poly_to_data",
    "poly_from_data",
    "flow_to_data",
    "flow_from_data",
    "fixtures_to_data",
    "fixtures_from_data",
    "poly_text",
    "poly_latex",
    "series_text",
    "operator_text",
    "matrix_text",
    "matrix_latex",
    "flow_lines",
]


# --------------------------------------------------------------------------
# JSON term lists
# --------------------------------------------------------------------------


def _coeff_str(c: QZ) -> str:
    if c.degree() > 0:
        raise ValueError(
            "term-list encoding covers rational coefficients only"
        )
    return str(c.coeff(0))


def poly_to_data(p: DiffPoly) -> list[dict]:
    """Canonical (sorted, unique) term-list encoding of a polynomial."""
    out = []
    for mon in sorted(p.t):
        out.append(
            {
                "coeff": _coeff_str(p.t[mon]),
                "monomial": [[g, o, e] for (g, o), e in mon],
            }
        )
    return out


def poly_from_data(data: Iterable[Mapping]) -> DiffPoly:
    """Inverse of :func:`poly_to_data`."""
    pairs: list[tuple[Mon, QZ]] = []
    for record in data:
        mon = tuple(
            sorted(((int(g), int(o)), int(e))
                   for g, o, e in record["monomial"])
        )
        if any(e < 1 or o < 0 or g < 0 for (g, o), e in mon):
            raise ValueError(f"malformed monomial {record['monomial']!r}")
        pairs.append((mon, QZ.of(Fraction(record["coeff"]))))
    return DiffPoly.from_terms(pairs)


def flow_to_data(flow: Sequence[DiffPoly]) -> list[list[dict]]:
    return [poly_to_data(component) for component in flow]


def flow_from_data(data: Iterable[Iterable[Mapping]]) -> tuple[DiffPoly, ...]:
    return tuple(poly_from_data(component) for component in data)


def fixtures_to_data(fixtures: Mapping[str, object]) -> dict:
    """Encode a fixture registry: densities and component-tuple flows."""
    out: dict[str, dict] = {}
    for key in sorted(fixtures):
        value = fixtures[key]
        if isinstance(value, DiffPoly):
            out[key] = {"kind": "density", "terms": poly_to_data(value)}
        elif isinstance(value, tuple):
            out[key] = {"kind": "flow", "components": flow_to_data(value)}
        else:
            raise TypeError(f"fixture {key!r} is not a density or a flow")
    return out


def fixtures_from_data(data: Mapping[str, Mapping]) -> dict:
    out: dict[str, object] = {}
    for key, record in data.items():
        kind = record["kind"]
        if kind == "density":
            out[key] = poly_from_data(record["terms"])
        elif kind == "flow":
            out[key] = flow_from_data(record["components"])
        else:
            raise ValueError(f"unknown fixture kind {kind!r}")
    return out


# --------------------------------------------------------------------------
# text rendering
# --------------------------------------------------------------------------


def _name_fn(labels: Sequence[str] | None) -> Callable[[int], str]:
    if labels is None:
        return lambda i: f"u{i}"
    return lambda i: labels[i]


def _frac_text(x: Fraction) -> str:
    return str(x)


def _qz_text(c: QZ) -> str:
    if c.degree() <= 0:
        return _frac_text(c.coeff(0))
    parts = []
    for k in range(c.degree() + 1):
        v = c.coeff(k)
        if not v:
            continue
        if k == 0:
            parts.append(_frac_text(v))
        else:
            zk = "z" if k == 1 else f"z^{k}"
            parts.append(zk if v == 1 else f"{_frac_text(v)}*{zk}")
    return " + ".join(parts).replace("+ -", "- ")


def _var_text(name: str, order: int) -> str:
    if order == 0:
        return name
    if order <= 3:
        return name + "'" * order
    return f"{name}^({order})"


def poly_text(p: DiffPoly, labels: Sequence[str] | None = None) -> str:
    """Deterministic one-line rendering, e.g. ``2*e12' - 2*x1*e12``."""
    if p.is_zero():
        return "0"
    name = _name_fn(labels)
    parts = []
    for mon in sorted(p.t, key=lambda m: (sum(e for _, e in m), m)):
        c = p.t[mon]
        cs = _qz_text(c)
        if " " in cs:
            cs = f"({cs})"
        body = "*".join(
            _var_text(name(g), o) + (f"^{e}" if e > 1 else "")
            for (g, o), e in mon
        )
        if not mon:
            parts.append(cs)
        elif cs == "1":
            parts.append(body)
        elif cs == "-1":
            parts.append(f"-{body}")
        else:
            parts.append(f"{cs}*{body}")
    return " + ".join(parts).replace("+ -", "- ")


def _latex_name(name: str) -> str:
    head = name.rstrip("0123456789")
    tail = name[len(head):]
    return f"{head}_{{{tail}}}" if head and tail else name


def _frac_latex(x: Fraction) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    sign = "-" if x < 0 else ""
    return f"{sign}\\tfrac{{{abs(x.numerator)}}}{{{x.denominator}}}"


def _var_latex(name: str, order: int) -> str:
    base = _latex_name(name)
    if order == 0:
        return base
    if order <= 2:
        return base + "'" * order
    return f"{base}^{{({order})}}"


def poly_latex(p: DiffPoly, labels: Sequence[str] | None = None) -> str:
    """LaTeX rendering of a polynomial with rational coefficients."""
    if p.is_zero():
        return "0"
    name = _name_fn(labels)
    parts = []
    for mon in sorted(p.t, key=lambda m: (sum(e for _, e in m), m)):
        c = p.t[mon]
        if c.degree() > 0:
            raise ValueError("LaTeX rendering covers rational coefficients")
        x = c.coeff(0)
        body = "\\,".join(
            _var_latex(name(g), o) + (f"^{{{e}}}" if e > 1 else "")
            for (g, o), e in mon
        )
        if not mon:
            parts.append(_frac_latex(x))
        elif x == 1:
            parts.append(body)
        elif x == -1:
            parts.append(f"-{body}")
        else:
            parts.append(f"{_frac_latex(x)}\\,{body}")
    return " + ".join(parts).replace("+ -", "- ")


def series_text(items: Iterable[tuple[int, DiffPoly]],
                labels: Sequence[str] | None = None,
                var: str = "lambda") -> str:
    """Render ``(power, coefficient)`` pairs as a polynomial in ``var``."""
    parts = []
    for k, p in sorted(items):
        ps = poly_text(p, labels)
        if " " in ps:
            ps = f"({ps})"
        if k == 0:
            parts.append(ps)
        else:
            vk = var if k == 1 else f"{var}^{k}"
            parts.append(vk if ps == "1" else f"{ps}*{vk}")
    return " + ".join(parts).replace("+ -", "- ") if parts else "0"


def operator_text(op, labels: Sequence[str] | None = None) -> str:
    """Render a (pseudo)differential operator entry, tails included."""
    if isinstance(op, NonlocalOp):
        parts = []
        local = operator_text(op.local, labels)
        if local != "0":
            parts.append(local)
        for a, b in op.pairs:
            fa, fb = poly_text(a, labels), poly_text(b, labels)
            if " " in fa:
                fa = f"({fa})"
            if " " in fb:
                fb = f"({fb})"
            parts.append(f"{fa}*d^-1*{fb}")
        return " + ".join(parts).replace("+ -", "- ") if parts else "0"
    parts = []
    for k in sorted(op.c, reverse=True):
        ps = poly_text(op.c[k], labels)
        if " " in ps:
            ps = f"({ps})"
        if k == 0:
            parts.append(ps)
        else:
            dk = "d" if k == 1 else f"d^{k}"
            parts.append(dk if ps == "1" else f"{ps}*{dk}")
    return " + ".join(parts).replace("+ -", "- ") if parts else "0"


def matrix_text(H, labels: Sequence[str] | None = None) -> str:
    """One line per entry: ``H[row,col] = ...`` (zero entries skipped)."""
    lines = []
    for i in range(H.rows):
        for j in range(H.cols):
            text = operator_text(H.entry(i, j), labels)
            if text != "0":
                lines.append(f"[{i},{j}] {text}")
    return "\n".join(lines) if lines else "(zero matrix)"


def matrix_latex(H, labels: Sequence[str] | None = None) -> str:
    lines = ["\\begin{aligned}"]
    for i in range(H.rows):
        for j in range(H.cols):
            text = operator_text(H.entry(i, j), labels)
            if text != "0":
                lines.append(f"H_{{{i}{j}}} &= {text} \\\\")
    lines.append("\\end{aligned}")
    return "\n".join(lines)


def flow_lines(flow: Sequence[DiffPoly], labels: Sequence[str],
               time: str, latex: bool = False) -> list[str]:
    """Render one evolution equation per generator."""
    out = []
    for i, component in enumerate(flow):
        if latex:
            lhs = f"\\frac{{d {_latex_name(labels[i])}}}{{d {time}}}"
            out.append(f"{lhs} = {poly_latex(component, labels)}")
        else:
            out.append(f"d{labels[i]}/d{time} = "
                       f"{poly_text(component, labels)}")
    return out
