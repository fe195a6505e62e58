"""Config documents: a small sectioned key-value format.

Example::

    # Harmonic oscillator from the catalog
    [system]
    name = "harmonic_oscillator"

    [task]
    point = [1.0, 0.0]
    horizon = 20
    tol_darboux = 1e-7

Inline systems give `n`, `box` (and optionally `periods`) in [system], the
coefficients `omega_ij` (1 <= i < j <= 2n) in [omega] and `h1..hn` in
[hamiltonians]. An empty [omega] section means the standard form. Values are
quoted strings, bracketed lists or the rest of the line; `#` starts a comment.
"""
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pyparsing as pp
import sympy as sp
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr
from pydantic import ValidationError as SchemaError

import config
from cli.expressions import ExpressionParser, format_expression
from flows.integrator import FlowParams
from flows.system import IntegrableSystemSpec
from geometry.chart import ChartDomain
from geometry.fields import ExpressionField
from geometry.forms import SymplecticStructure
from systems.catalog import lookup
from systems.oracles import OracleBundle
from utils.errors import EvalError, ParseError, UnknownSystem, ValidationError

SECTIONS = ("system", "omega", "hamiltonians", "task", "output")
TOLERANCE_KEYS = tuple(config.Tolerances.model_fields)


@dataclass(frozen=True)
class Located:
    """A raw value with the position of its first character."""
    value: Any
    line: int
    column: int


@dataclass(frozen=True)
class Entry:
    key: str
    value: Located


def _located(s: str, loc: int, tokens) -> Located:
    return Located(tokens[0], pp.lineno(loc, s), pp.col(loc, s))


def _quoted(s: str, loc: int, tokens) -> Located:
    return Located(tokens[0], pp.lineno(loc, s), pp.col(loc, s) + 1)


def _bare(s: str, loc: int, tokens) -> Located:
    raw = tokens[0]
    start = loc + len(raw) - len(raw.lstrip(" \t"))
    return Located(raw.strip(), pp.lineno(start, s), pp.col(start, s))


def _list(s: str, loc: int, tokens) -> Located:
    return Located(tokens[0].as_list(), pp.lineno(loc, s), pp.col(loc, s))


def _section_name(s: str, loc: int, tokens) -> str:
    if tokens[0] not in SECTIONS:
        raise pp.ParseFatalException(s, loc, f"unknown section [{tokens[0]}], expected one of {', '.join(SECTIONS)}")
    return tokens[0]


def _grammar() -> pp.ParserElement:
    lbrack, rbrack, eq = map(pp.Suppress, "[]=")
    key = pp.Word(pp.alphas + "_", pp.alphanums + "_").set_name("key")
    quoted = pp.QuotedString('"', esc_char="\\", convert_whitespace_escapes=False)

    item = pp.Forward()
    nested = pp.Group(lbrack + pp.Opt(pp.DelimitedList(item)) + rbrack)
    item <<= pp.pyparsing_common.number | pp.QuotedString('"', esc_char="\\") | nested \
        | pp.Word(pp.alphas + "_", pp.alphanums + "_")

    value = (quoted.copy().set_parse_action(_quoted)
             | pp.And([nested]).set_parse_action(_list)
             | pp.Regex(r"[ \t]*[^\s#][^\n#]*").leave_whitespace().set_parse_action(_bare)).set_name("value")
    entry = (key + eq - value).set_parse_action(lambda t: Entry(t[0], t[1]))

    name = pp.Word(pp.alphas + "_").set_parse_action(_section_name)
    header = (lbrack - name + rbrack).set_parse_action(_located)
    section = pp.Group(header + pp.Group(pp.ZeroOrMore(entry)))
    document = pp.ZeroOrMore(section) + pp.StringEnd()
    document.ignore(pp.python_style_comment)
    return document


_GRAMMAR = _grammar()


class SystemSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: Optional[str] = None
    n: Optional[int] = Field(default=None, ge=1)
    box: Optional[List[List[float]]] = None
    periods: Optional[List[Optional[float]]] = None
    frequencies: Optional[List[float]] = None
    epsilon: Optional[float] = None

    @property
    def overrides(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {}
        if self.frequencies is not None:
            out["frequencies"] = tuple(self.frequencies)
        if self.epsilon is not None:
            out["epsilon"] = self.epsilon
        return out


class TaskSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    point: Optional[List[float]] = None
    horizon: float = Field(default=20.0, gt=0)
    grid: int = Field(default=3, ge=2)
    samples: int = Field(default=100, ge=1)
    time_half_width: float = Field(default=1.0, gt=0)
    cloud: int = Field(default=100, ge=0)
    seed: int = config.DEFAULT_SEED
    rtol: float = Field(default=1e-12, gt=0)
    atol: float = Field(default=1e-12, gt=0)
    tolerances: Dict[str, float] = Field(default_factory=dict)


class OutputSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dir: Optional[str] = None


class ConfigDocument(BaseModel):
    """A validated config with every expression compiled."""
    model_config = ConfigDict(extra="forbid")

    system: SystemSection = Field(default_factory=SystemSection)
    omega: Dict[str, str] = Field(default_factory=dict)
    hamiltonians: Dict[str, str] = Field(default_factory=dict)
    task: TaskSection = Field(default_factory=TaskSection)
    output: OutputSection = Field(default_factory=OutputSection)

    _expressions: Dict[str, sp.Expr] = PrivateAttr(default_factory=dict)

    @property
    def n(self) -> int:
        if self.system.name is not None:
            entry = lookup(self.system.name)
            if "frequencies" in self.system.overrides:
                return len(self.system.overrides["frequencies"])
            return len(entry.default_point) // 2
        return int(self.system.n)

    @property
    def expressions(self) -> Dict[str, sp.Expr]:
        return dict(self._expressions)

    def tolerances(self) -> config.Tolerances:
        return config.TOLERANCES.model_copy(update=self.task.tolerances)

    def flow_params(self) -> FlowParams:
        return FlowParams(rtol=self.task.rtol, atol=self.task.atol)

    def build_system(self) -> IntegrableSystemSpec:
        tolerances = self.tolerances()
        if self.system.name is not None:
            return lookup(self.system.name).build(tolerances, **self.system.overrides)
        n = self.n
        parser = ExpressionParser(n)
        chart = ChartDomain.box(n, self.system.box, self.system.periods)
        if self.omega:
            entries = {_parse_omega_key(key, 2 * n): self._expressions[key] for key in self.omega}
            omega = SymplecticStructure.from_expressions(entries, parser.symbols, chart)
        else:
            omega = SymplecticStructure.standard(n, chart)
        hams = tuple(ExpressionField(self._expressions[f"h{k + 1}"], parser.symbols) for k in range(n))
        return IntegrableSystemSpec(chart, omega, hams, name="inline", tolerances=tolerances)

    def base_point(self, spec: IntegrableSystemSpec) -> np.ndarray:
        if self.task.point is not None:
            point = np.asarray(self.task.point, dtype=float)
        elif self.system.name is not None:
            point = np.asarray(lookup(self.system.name).default_point, dtype=float)
        else:
            point = spec.chart.center
        if point.shape != (spec.dim,):
            raise ValidationError(f"task.point has {point.size} coordinates, the system needs {spec.dim}.")
        return spec.chart.require(point, "task.point")

    def oracle(self) -> Optional[OracleBundle]:
        """Analytic references, only for catalog systems at their catalog parameters."""
        if self.system.name is None:
            return None
        entry = lookup(self.system.name)
        overrides = self.system.overrides
        if any(entry.parameters.get(k) != v for k, v in overrides.items()):
            return None
        return entry.oracle

    def dumps(self, canonical: bool = False) -> str:
        """
        Serialize back to config text.

        With `canonical`, expressions are written from their compiled form
        instead of the text they were given as.
        """
        lines: List[str] = []
        sections = {
            "system": self.system.model_dump(exclude_none=True),
            "omega": self._expression_texts(self.omega, canonical),
            "hamiltonians": self._expression_texts(self.hamiltonians, canonical),
            "task": self._task_items(),
            "output": self.output.model_dump(exclude_none=True),
        }
        for name in SECTIONS:
            lines.append(f"[{name}]")
            lines.extend(f"{key} = {_format_value(value)}" for key, value in sections[name].items())
            lines.append("")
        return "\n".join(lines)

    def _expression_texts(self, texts: Dict[str, str], canonical: bool) -> Dict[str, str]:
        if not canonical:
            return dict(texts)
        return {key: format_expression(self._expressions[key]) for key in texts}

    def _task_items(self) -> Dict[str, Any]:
        items = self.task.model_dump(exclude_none=True, exclude={"tolerances"})
        items.update(self.task.tolerances)
        return items


def _format_value(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_format_value(v) for v in value) + "]"
    text = str(value).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{text}"'


def _parse_omega_key(key: str, dim: int) -> Optional[Tuple[int, int]]:
    """Zero-based (i, j) of omega_ij (i a single digit) or omega_i_j."""
    if not key.startswith("omega_"):
        return None
    body = key[len("omega_"):]
    parts = body.split("_") if "_" in body else ([body[0], body[1:]] if len(body) >= 2 else [])
    if len(parts) != 2 or not all(part.isdigit() for part in parts):
        return None
    i, j = int(parts[0]), int(parts[1])
    if not 1 <= i < j <= dim:
        return None
    return i - 1, j - 1


def _none_words(value: Any) -> Any:
    if isinstance(value, list):
        return [_none_words(v) for v in value]
    if isinstance(value, str) and value.lower() == "none":
        return None
    return value


def _raw_sections(text: str) -> Dict[str, Dict[str, Located]]:
    try:
        parsed = _GRAMMAR.parse_string(text, parse_all=True)
    except pp.ParseBaseException as e:
        raise ParseError(e.msg, e.lineno, e.col, expected=e.msg) from None
    sections: Dict[str, Dict[str, Located]] = {}
    for header, entries in parsed:
        name = header.value
        if name in sections:
            raise ValidationError(f"Section [{name}] appears twice.", line=header.line)
        sections[name] = {}
        for entry in entries:
            if entry.key in sections[name]:
                raise ValidationError(f"Key '{entry.key}' repeated in [{name}].", line=entry.value.line)
            sections[name][entry.key] = entry.value
    return sections


def _schema_error(e: SchemaError, sections: Dict[str, Dict[str, Located]]) -> ValidationError:
    error = e.errors()[0]
    where = [str(part) for part in error["loc"]]
    line = None
    if len(where) >= 2 and where[0] in sections:
        section = sections[where[0]]
        key = where[1] if where[1] in section else None
        if key is None and where[1] == "tolerances" and len(where) > 2:
            key = where[2]
        line = section[key].line if key in section else None
    return ValidationError(f"{'.'.join(where)}: {error['msg']}", line=line)


def parse_config(text: str) -> ConfigDocument:
    """
    Parse and validate a config document, compiling every expression.

    Raises:
        ParseError: Malformed document or expression (line and column of the problem).
        ValidationError: Unknown keys or systems, inconsistent dimensions.
    """
    sections = _raw_sections(text)
    data: Dict[str, Any] = {name: {k: _none_words(v.value) for k, v in entries.items()}
                            for name, entries in sections.items()}
    task = data.get("task", {})
    data["task"] = {k: v for k, v in task.items() if k not in TOLERANCE_KEYS}
    data["task"]["tolerances"] = {k: v for k, v in task.items() if k in TOLERANCE_KEYS}
    for name in ("omega", "hamiltonians"):
        data[name] = {k: str(v) for k, v in data.get(name, {}).items()}
    try:
        document = ConfigDocument.model_validate(data)
    except SchemaError as e:
        raise _schema_error(e, sections) from None

    where = sections.get("system", {})
    system = document.system
    if system.name is not None:
        _check_named(document, where)
        if document.omega or document.hamiltonians:
            line = next(iter({**sections.get("omega", {}), **sections.get("hamiltonians", {})}.values())).line
            raise ValidationError("A catalog system takes no [omega] or [hamiltonians] entries.", line=line)
    elif system.n is None or system.box is None:
        raise ValidationError("[system] needs either a catalog 'name' or an inline 'n' and 'box'.",
                              line=where["n"].line if "n" in where else None)
    else:
        _check_inline(document, sections)
    return document


def _check_named(document: ConfigDocument, where: Dict[str, Located]) -> None:
    system = document.system
    try:
        lookup(system.name).build(document.tolerances(), **system.overrides)
    except UnknownSystem as e:
        raise ValidationError(e.message, line=where["name"].line) from None
    except TypeError:
        keys = ", ".join(system.overrides)
        raise ValidationError(f"System '{system.name}' does not take parameter(s) {keys}.",
                              line=where["name"].line) from None


def _check_inline(document: ConfigDocument, sections: Dict[str, Dict[str, Located]]) -> None:
    n, system = document.n, document.system
    dim = 2 * n
    where = sections.get("system", {})
    if len(system.box) != dim or any(len(b) != 2 for b in system.box):
        raise ValidationError(f"box needs {dim} [lower, upper] pairs for n={n}.", line=where["box"].line)
    if system.periods is not None and len(system.periods) != dim:
        raise ValidationError(f"periods needs {dim} entries for n={n}.", line=where["periods"].line)
    try:
        ChartDomain.box(n, system.box, system.periods)
    except ValidationError as e:
        raise ValidationError(e.message, line=where["box"].line) from None

    parser = ExpressionParser(n)
    compiled: Dict[str, sp.Expr] = {}
    omega_entries = sections.get("omega", {})
    seen: Dict[Tuple[int, int], str] = {}
    for key, located in omega_entries.items():
        index = _parse_omega_key(key, dim)
        if index is None:
            raise ValidationError(f"'{key}' is not a coefficient omega_ij with 1 <= i < j <= {dim}.",
                                  line=located.line)
        if index in seen:
            raise ValidationError(f"'{key}' and '{seen[index]}' name the same coefficient.", line=located.line)
        seen[index] = key
        compiled[key] = _compile(parser, located)

    hams = sections.get("hamiltonians", {})
    expected = [f"h{k + 1}" for k in range(n)]
    for key, located in hams.items():
        if key not in expected:
            raise ValidationError(f"Unexpected Hamiltonian '{key}'; expected {', '.join(expected)}.",
                                  line=located.line)
        compiled[key] = _compile(parser, located)
    missing = [k for k in expected if k not in hams]
    if missing:
        raise ValidationError(f"Missing Hamiltonian(s) {', '.join(missing)} for n={n}.")
    document._expressions = compiled


def _compile(parser: ExpressionParser, located: Located) -> sp.Expr:
    try:
        return parser.parse(str(located.value), located.line, located.column)
    except EvalError as e:
        raise ValidationError(e.message, line=located.line) from None
