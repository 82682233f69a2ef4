"""Deterministic fuzz generators shared by the property and acceptance tests."""
from __future__ import annotations

import random

_IDENTIFIERS = (
    "a", "b", "count", "data", "f", "g", "index", "items", "n", "out",
    "result", "s", "total", "value", "x", "xs", "y",
)
_OPERATORS = ("+", "-", "*", "//", "%", "==", "<", ">=", "and", "or")
_PUNCT = ("(", ")", "[", "]", ":", ",", ".")
_LITERALS = ("0", "1", "2", "10", "'a'", "'xy'", "None", "True")


def random_expression(rng: random.Random, depth: int = 0) -> str:
    if depth > 2 or rng.random() < 0.4:
        return rng.choice(_IDENTIFIERS + _LITERALS)
    left = random_expression(rng, depth + 1)
    right = random_expression(rng, depth + 1)
    return f"{left} {rng.choice(_OPERATORS)} {right}"


def random_function(rng: random.Random) -> str:
    """A small, always-parseable function with random body statements."""
    name = rng.choice(("f", "g", "solve", "compute", "helper"))
    params = rng.sample(_IDENTIFIERS[:8], rng.randint(1, 3))
    lines = [f"def {name}({', '.join(params)}):"]
    for _ in range(rng.randint(1, 4)):
        target = rng.choice(_IDENTIFIERS)
        lines.append(f"    {target} = {random_expression(rng)}")
    lines.append(f"    return {random_expression(rng)}")
    return "\n".join(lines) + "\n"


def random_token_soup(rng: random.Random) -> str:
    """Possibly-unparseable token stream; always contains an identifier."""
    tokens = [rng.choice(_IDENTIFIERS)]
    for _ in range(rng.randint(0, 12)):
        bucket = rng.random()
        if bucket < 0.4:
            tokens.append(rng.choice(_IDENTIFIERS))
        elif bucket < 0.6:
            tokens.append(rng.choice(_LITERALS))
        elif bucket < 0.8:
            tokens.append(rng.choice(_OPERATORS))
        else:
            tokens.append(rng.choice(_PUNCT))
    joined = []
    for token in tokens:
        joined.append(token)
        joined.append("\n" if rng.random() < 0.15 else " ")
    return "".join(joined).strip()


def random_snippet(rng: random.Random) -> str:
    """Non-empty code-ish text with at least one identifier token."""
    return random_function(rng) if rng.random() < 0.5 else random_token_soup(rng)


def random_token_list(rng: random.Random, max_len: int = 10, allow_empty: bool = True) -> list[str]:
    n = rng.randint(0 if allow_empty else 1, max_len)
    vocab = _IDENTIFIERS + _PUNCT + ("1", "2")
    return [rng.choice(vocab) for _ in range(n)]
