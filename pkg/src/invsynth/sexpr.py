"""Minimal s-expression reader shared by the problem parsers and the solver.

Values are nested lists of tokens; tokens are plain strings (symbols and
numerals are not distinguished here).  Tracks source offsets for error
reporting and supports ``;`` line comments, ``\"...\"`` string literals and
``|...|`` quoted symbols.
"""

from __future__ import annotations


class SExprError(Exception):
    def __init__(self, message: str, line: int, col: int) -> None:
        super().__init__(f"{message} at line {line}, column {col}")
        self.line = line
        self.col = col


SExpr = "str | list"  # documentation alias; real type is str | list


def tokenize(text: str):
    """Yield (token, line, col) triples; parens are their own tokens."""
    i, n = 0, len(text)
    line, col = 1, 1

    def advance(ch: str) -> None:
        nonlocal line, col
        if ch == "\n":
            line += 1
            col = 1
        else:
            col += 1

    while i < n:
        ch = text[i]
        if ch == ";":
            while i < n and text[i] != "\n":
                advance(text[i])
                i += 1
            continue
        if ch.isspace():
            advance(ch)
            i += 1
            continue
        if ch in "()":
            yield ch, line, col
            advance(ch)
            i += 1
            continue
        if ch == '"':
            start_line, start_col = line, col
            j = i + 1
            buf = ['"']
            while j < n:
                if text[j] == '"':
                    if j + 1 < n and text[j + 1] == '"':  # escaped quote
                        buf.append('"')
                        j += 2
                        continue
                    break
                buf.append(text[j])
                j += 1
            if j >= n:
                raise SExprError("unterminated string literal", start_line, start_col)
            buf.append('"')
            token = "".join(buf)
            for ch2 in text[i:j + 1]:
                advance(ch2)
            i = j + 1
            yield token, start_line, start_col
            continue
        if ch == "|":
            start_line, start_col = line, col
            j = text.find("|", i + 1)
            if j < 0:
                raise SExprError("unterminated quoted symbol", start_line, start_col)
            token = text[i:j + 1]
            for ch2 in text[i:j + 1]:
                advance(ch2)
            i = j + 1
            yield token, start_line, start_col
            continue
        start_line, start_col = line, col
        j = i
        while j < n and not text[j].isspace() and text[j] not in '();"|':
            j += 1
        yield text[i:j], start_line, start_col
        for ch2 in text[i:j]:
            advance(ch2)
        i = j


def parse_all(text: str) -> list:
    """Parse every top-level s-expression in ``text``."""
    stack: list[list] = []
    top: list = []
    last_line, last_col = 1, 1
    for token, line, col in tokenize(text):
        last_line, last_col = line, col
        if token == "(":
            stack.append([])
        elif token == ")":
            if not stack:
                raise SExprError("unbalanced ')'", line, col)
            done = stack.pop()
            (stack[-1] if stack else top).append(done)
        else:
            (stack[-1] if stack else top).append(token)
    if stack:
        raise SExprError("unbalanced '('", last_line, last_col)
    return top


def parse_one(text: str):
    exprs = parse_all(text)
    if len(exprs) != 1:
        raise SExprError(f"expected one s-expression, found {len(exprs)}", 1, 1)
    return exprs[0]


def to_text(expr) -> str:
    if isinstance(expr, str):
        return expr
    return "(" + " ".join(to_text(e) for e in expr) + ")"
