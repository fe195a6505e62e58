"""Arithmetic expressions over chart coordinates, parsed into sympy trees.

Grammar (`^` binds tighter than unary minus and is right associative)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("+" | "-") unary | power
    power  := atom ("^" unary)?
    atom   := number | call | name | "(" expr ")"
    call   := ("sin" | "cos" | "exp" | "sqrt" | "atan2") "(" expr ("," expr)* ")"

Names are q1..qn, p1..pn, their aliases z1..z2n, and the constants pi and E.
"""
from functools import reduce
from typing import Dict, List

import pyparsing as pp
import sympy as sp

from geometry.fields import ExpressionField, coordinate_symbols
from utils.errors import EvalError, ParseError

FUNCTIONS = {
    "sin": (sp.sin, 1),
    "cos": (sp.cos, 1),
    "exp": (sp.exp, 1),
    "sqrt": (sp.sqrt, 1),
    "atan2": (sp.atan2, 2),
}

CONSTANTS = {"pi": sp.pi, "E": sp.E}

_BINARY = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": lambda a, b: a / b,
}


def _fold(tokens) -> sp.Expr:
    items = list(tokens)
    return reduce(lambda acc, i: _BINARY[items[i]](acc, items[i + 1]), range(1, len(items), 2), items[0])


def _number(tokens) -> sp.Expr:
    text = tokens[0]
    return sp.Integer(text) if text.isdigit() else sp.Float(text)


def _signed(tokens) -> sp.Expr:
    sign, value = tokens
    return -value if sign == "-" else value


def _power(tokens) -> sp.Expr:
    base = tokens[0]
    return base ** tokens[1] if len(tokens) > 1 else base


def _call(s: str, loc: int, tokens) -> sp.Expr:
    name, args = tokens[0], list(tokens[1])
    func, arity = FUNCTIONS[name]
    if len(args) != arity:
        raise pp.ParseFatalException(s, loc, f"{name} takes {arity} argument(s), got {len(args)}")
    return func(*args)


class ExpressionParser:
    """
    Parser for expressions in the coordinates of an n degree-of-freedom chart.

    Args:
        n: Degrees of freedom; variables are q1..qn, p1..pn (z1..z2n).
    """

    def __init__(self, n: int):
        self.n = n
        self.symbols: List[sp.Symbol] = coordinate_symbols(n)
        self.names: Dict[str, sp.Expr] = {s.name: s for s in self.symbols}
        self.names.update({f"z{i + 1}": s for i, s in enumerate(self.symbols)})
        self.names.update(CONSTANTS)
        self._grammar = self._build()

    def _name(self, s: str, loc: int, tokens) -> sp.Expr:
        name = tokens[0]
        if name not in self.names:
            raise pp.ParseFatalException(s, loc, f"unknown name '{name}'")
        return self.names[name]

    def _build(self) -> pp.ParserElement:
        lpar, rpar, caret = map(pp.Suppress, "()^")
        expr = pp.Forward()
        unary = pp.Forward()

        number = pp.Regex(r"(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?").set_name("number")
        number.set_parse_action(_number)
        func = pp.Regex(r"(sin|cos|exp|sqrt|atan2)(?=\s*\()").set_name("function")
        call = func + lpar - pp.Group(pp.DelimitedList(expr)) + rpar
        call.set_parse_action(_call)
        name = pp.Word(pp.alphas, pp.alphanums + "_").set_name("name")
        name.set_parse_action(self._name)
        atom = (number | call | name | (lpar - expr + rpar)).set_name("operand")

        power = (atom + pp.Opt(caret - unary)).set_name("power")
        power.set_parse_action(_power)
        signed = (pp.one_of("+ -") - unary).set_name("signed operand")
        signed.set_parse_action(_signed)
        unary <<= (signed | power).set_name("operand")
        term = (unary + pp.ZeroOrMore(pp.one_of("* /").set_name("operator") - unary)).set_name("term")
        term.set_parse_action(_fold)
        expr <<= (term + pp.ZeroOrMore(pp.one_of("+ -").set_name("operator") - term)).set_name("expression")
        expr.set_parse_action(_fold)
        return expr + pp.StringEnd()

    def parse(self, text: str, line: int = 1, column: int = 1) -> sp.Expr:
        """
        Parse `text` into a sympy expression.

        `line` and `column` locate the first character of `text` inside a larger
        document so that errors point at the right place.

        Raises:
            ParseError: Syntax error, unknown name or wrong argument count.
            EvalError: The expression is a constant that cannot be evaluated (1/0, sqrt(-1)).
        """
        try:
            expr = self._grammar.parse_string(text, parse_all=True)[0]
        except pp.ParseBaseException as e:
            loc = _error_location(text, e.loc)
            raise ParseError(e.msg, line, column + loc, expected=e.msg) from None
        if expr.has(sp.zoo, sp.nan, sp.oo, -sp.oo, sp.I):
            raise EvalError(f"'{text}' does not evaluate to a real number.")
        return expr

    def field(self, text: str) -> ExpressionField:
        return ExpressionField(self.parse(text), self.symbols)


def _error_location(text: str, loc: int) -> int:
    """A failure at the end of input is reported at the last unclosed parenthesis."""
    if loc < len(text.rstrip()):
        return loc
    opened: List[int] = []
    for i, ch in enumerate(text):
        if ch == "(":
            opened.append(i)
        elif ch == ")" and opened:
            opened.pop()
    return opened[-1] if opened else loc


def parse_expression(text: str, n: int) -> sp.Expr:
    return ExpressionParser(n).parse(text)


def format_expression(expr: sp.Expr) -> str:
    """Text form that parses back to the same expression."""
    return str(expr).replace("**", "^")
