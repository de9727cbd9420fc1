"""Declarative regression formulas and design-matrix construction.

A model spec is a small text document of ``key: value`` statements,
separated by newlines or semicolons::

    response: ln(Price)
    terms: ln(LotArea), ln2(LotArea), Age, square(Age)
    terms: cat(Region, base=Central), ln(LotArea):ln(LivingArea)
    intercept: true

Term grammar::

    term        := atom [":" atom]            # ":" builds an interaction
    atom        := NAME                       # numeric column, identity
                 | "ln" "(" NAME ["+" NUM] ")"      # natural log (offset added first)
                 | "ln2" "(" NAME ["+" NUM] ")"     # squared natural log
                 | "square" "(" NAME ")"            # squared value
                 | "cat" "(" NAME ["," "base" "=" LEVEL] ")"

Interactions multiply two numeric atoms. A categorical term with L
observed levels expands to L-1 indicator columns, omitting the base
level (declared on the term, else on the schema, else the first declared
level). ``ln`` of a non-positive value is an error; declare an explicit
offset (``ln(LotArea+1)``) when the data contains zeros.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

import numpy as np

from .errors import DataError, ModelSpecError
from .tabular import CATEGORICAL, NUMERIC, Dataset

_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")

TRANSFORMS = ("identity", "ln", "ln2", "square")


@dataclass(frozen=True)
class NumericTerm:
    column: str
    transform: str = "identity"
    offset: float = 0.0

    @property
    def name(self) -> str:
        if self.transform == "identity":
            return self.column
        inner = self.column if self.offset == 0 else f"{self.column}+{self.offset:g}"
        if self.transform == "square":
            return f"square({self.column})"
        return f"{self.transform}({inner})"


@dataclass(frozen=True)
class CategoricalTerm:
    column: str
    base: str | None = None

    @property
    def name(self) -> str:
        return self.column


@dataclass(frozen=True)
class InteractionTerm:
    left: NumericTerm
    right: NumericTerm

    @property
    def name(self) -> str:
        return f"{self.left.name}:{self.right.name}"


@dataclass(frozen=True)
class ModelSpec:
    response: NumericTerm
    terms: tuple
    intercept: bool = True

    def term_names(self) -> tuple:
        return tuple(t.name for t in self.terms)

    def source_columns(self) -> tuple:
        """All dataset columns the spec reads, response included."""
        cols = [self.response.column]
        for t in self.terms:
            cols.extend(_term_columns(t))
        seen, out = set(), []
        for c in cols:
            if c not in seen:
                seen.add(c)
                out.append(c)
        return tuple(out)


def _term_columns(term) -> tuple:
    if isinstance(term, InteractionTerm):
        return (term.left.column, term.right.column)
    return (term.column,)


def drop_terms(spec: ModelSpec, columns) -> ModelSpec:
    """Spec without any term touching the given source columns."""
    columns = set(columns)
    kept = tuple(t for t in spec.terms if not (set(_term_columns(t)) & columns))
    return replace(spec, terms=kept)


class _Cursor:
    """Tracks position inside one statement for error reporting."""

    def __init__(self, text: str, line: int, col0: int):
        self.text = text
        self.pos = 0
        self.line = line
        self.col0 = col0

    def error(self, message: str, at: int | None = None):
        pos = self.pos if at is None else at
        raise ModelSpecError(
            f"line {self.line}, column {self.col0 + pos + 1}: {message}"
        )

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self, ch: str):
        self.skip_ws()
        if self.peek() != ch:
            self.error(f"expected {ch!r}")
        self.pos += 1

    def name(self) -> str:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and (
            self.text[self.pos].isalnum() or self.text[self.pos] in "_."
        ):
            self.pos += 1
        token = self.text[start : self.pos]
        if not _NAME.match(token):
            self.error("expected a column name", at=start)
        return token

    def number(self) -> float:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and (
            self.text[self.pos].isdigit() or self.text[self.pos] in ".eE+-"
        ):
            # stop on '+'/'-' that are not exponent signs
            if self.text[self.pos] in "+-" and self.pos > start and self.text[self.pos - 1] not in "eE":
                break
            self.pos += 1
        token = self.text[start : self.pos]
        try:
            return float(token)
        except ValueError:
            self.error("expected a number", at=start)

    def until(self, stops: str) -> str:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] not in stops:
            self.pos += 1
        return self.text[start : self.pos].strip()


def _parse_atom(cur: _Cursor):
    cur.skip_ws()
    start = cur.pos
    word = cur.name()
    cur.skip_ws()
    if cur.peek() != "(":
        return NumericTerm(word)
    if word not in ("ln", "ln2", "square", "cat"):
        cur.error(f"unsupported transform {word!r}", at=start)
    cur.take("(")
    column = cur.name()
    if word == "cat":
        base = None
        cur.skip_ws()
        if cur.peek() == ",":
            cur.take(",")
            key = cur.name()
            if key != "base":
                cur.error(f"unknown option {key!r} (expected base=...)")
            cur.take("=")
            base = cur.until("),")
            if not base:
                cur.error("empty base level")
        cur.take(")")
        return CategoricalTerm(column, base)
    offset = 0.0
    cur.skip_ws()
    if cur.peek() == "+":
        if word == "square":
            cur.error("square() takes no offset")
        cur.take("+")
        offset = cur.number()
    cur.take(")")
    if word == "square":
        return NumericTerm(column, "square")
    return NumericTerm(column, word, offset)


def _parse_term(text: str, line: int, col0: int):
    cur = _Cursor(text, line, col0)
    left = _parse_atom(cur)
    cur.skip_ws()
    if cur.peek() == ":":
        cur.take(":")
        right = _parse_atom(cur)
        for side in (left, right):
            if not isinstance(side, NumericTerm):
                cur.error("interaction operands must be numeric terms")
        term = InteractionTerm(left, right)
    else:
        term = left
    cur.skip_ws()
    if cur.pos < len(cur.text):
        cur.error(f"unexpected trailing text {cur.text[cur.pos:]!r}")
    return term


def _split_terms(value: str):
    """Split a terms list on commas not nested inside parentheses."""
    pieces, depth, start = [], 0, 0
    for i, ch in enumerate(value):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth = max(0, depth - 1)
        elif ch == "," and depth == 0:
            pieces.append((start, value[start:i]))
            start = i + 1
    pieces.append((start, value[start:]))
    return [(off, text) for off, text in pieces if text.strip()]


def parse_model_spec(text: str) -> ModelSpec:
    """Parse a model-spec document; raises ModelSpecError with position."""
    response = None
    terms = []
    intercept = True
    for line_no, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.split("#", 1)[0]
        col0 = 0
        for stmt in line.split(";"):
            stmt_off = col0
            col0 += len(stmt) + 1
            if not stmt.strip():
                continue
            if ":" not in stmt:
                raise ModelSpecError(
                    f"line {line_no}, column {stmt_off + 1}: expected 'key: value'"
                )
            key, value = stmt.split(":", 1)
            key_clean = key.strip()
            value_off = stmt_off + len(key) + 1
            if key_clean == "response":
                if response is not None:
                    raise ModelSpecError(f"line {line_no}: duplicate response")
                term = _parse_term(value.strip(), line_no, value_off)
                if not isinstance(term, NumericTerm):
                    raise ModelSpecError(
                        f"line {line_no}: response must be a numeric term"
                    )
                response = term
            elif key_clean == "terms":
                for off, piece in _split_terms(value):
                    lead = len(piece) - len(piece.lstrip())
                    terms.append(_parse_term(piece.strip(), line_no, value_off + off + lead))
            elif key_clean == "intercept":
                flag = value.strip().lower()
                if flag not in ("true", "false"):
                    raise ModelSpecError(
                        f"line {line_no}: intercept must be true or false"
                    )
                intercept = flag == "true"
            else:
                raise ModelSpecError(
                    f"line {line_no}, column {stmt_off + 1}: unknown key {key_clean!r}"
                )
    if response is None:
        raise ModelSpecError("model spec has no response")
    if not terms:
        raise ModelSpecError("model spec has no terms")
    names = [t.name for t in terms]
    for name in names:
        if names.count(name) > 1:
            raise ModelSpecError(f"duplicate term: {name}")
    return ModelSpec(response, tuple(terms), intercept)


INTERCEPT = "(Intercept)"


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Realized regression inputs: X, response y, and column metadata.

    ``groups`` partitions the non-intercept columns by originating term
    (a categorical term owns all of its indicator columns)."""

    X: np.ndarray
    y: np.ndarray
    names: tuple
    groups: tuple  # ((term name, (column indices...)), ...)
    response_name: str
    response_column: str

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def k(self) -> int:
        return self.X.shape[1]

    @property
    def has_intercept(self) -> bool:
        return bool(self.names) and self.names[0] == INTERCEPT


def _numeric_values(ds: Dataset, term: NumericTerm) -> np.ndarray:
    col = ds.column(term.column)
    if col.kind != NUMERIC:
        raise DataError(f"term {term.name!r}: column {term.column!r} is not numeric")
    x = np.asarray(col.values, dtype=float)
    if term.transform == "identity":
        return x
    if term.transform == "square":
        return x * x
    shifted = x + term.offset
    if np.any(shifted <= 0):
        bad = int(np.sum(shifted <= 0))
        raise DataError(
            f"term {term.name!r}: ln of non-positive value in {bad} rows; "
            "declare an offset to shift the column"
        )
    logged = np.log(shifted)
    return logged * logged if term.transform == "ln2" else logged


def _categorical_columns(ds: Dataset, term: CategoricalTerm):
    col = ds.column(term.column)
    if col.kind != CATEGORICAL:
        raise DataError(f"term {term.name!r}: column {term.column!r} is not categorical")
    observed = [lv for lv in col.levels if lv in set(col.present())]
    if len(observed) < 2:
        raise DataError(
            f"term {term.name!r}: fewer than 2 observed levels ({observed})"
        )
    # precedence: term base, then schema-declared base, then first level
    base = term.base if term.base is not None else col.base
    if base is None:
        base = observed[0]
    if base not in observed:
        raise DataError(f"term {term.name!r}: base level {base!r} not observed")
    values = col.values
    out = []
    for level in observed:
        if level == base:
            continue
        out.append(
            (f"{term.column}[{level}]", np.asarray([1.0 if v == level else 0.0 for v in values]))
        )
    return out


def build_design(ds: Dataset, spec: ModelSpec) -> DesignMatrix:
    """Realize a model spec against a dataset.

    The referenced columns must be free of missing cells (run the
    cleaning pipeline first). Column order is intercept (when enabled),
    then terms in spec order, categorical terms expanding in declared
    level order.
    """
    with_missing = [
        c for c in spec.source_columns() if ds.column(c).n_missing > 0
    ]
    if with_missing:
        raise DataError(
            "design requires complete columns; missing cells in: "
            + ", ".join(with_missing)
        )
    if ds.n_rows == 0:
        raise DataError("cannot build a design on an empty dataset")

    y = _numeric_values(ds, spec.response)
    names: list = []
    cols: list = []
    groups: list = []
    if spec.intercept:
        names.append(INTERCEPT)
        cols.append(np.ones(ds.n_rows))
    for term in spec.terms:
        start = len(names)
        if isinstance(term, NumericTerm):
            names.append(term.name)
            cols.append(_numeric_values(ds, term))
        elif isinstance(term, CategoricalTerm):
            for name, values in _categorical_columns(ds, term):
                names.append(name)
                cols.append(values)
        else:
            left = _numeric_values(ds, term.left)
            right = _numeric_values(ds, term.right)
            names.append(term.name)
            cols.append(left * right)
        groups.append((term.name, tuple(range(start, len(names)))))

    if len(set(names)) != len(names):
        dup = sorted({n for n in names if names.count(n) > 1})
        raise DataError(f"duplicate design columns: {', '.join(dup)}")
    X = np.column_stack(cols)
    zero = [names[j] for j in range(X.shape[1]) if not np.any(X[:, j])]
    if zero:
        raise DataError(f"all-zero design columns: {', '.join(zero)}")
    return DesignMatrix(
        X=X,
        y=y,
        names=tuple(names),
        groups=tuple(groups),
        response_name=spec.response.name,
        response_column=spec.response.column,
    )
