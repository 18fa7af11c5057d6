"""Template-based synthetic Java method / comment generator.

Supplies the bundled demo corpus and desk-scale test fixtures without any
external download. Sources come out space-separated (one token per
whitespace chunk) so the dataset loader's whitespace split and the lexer
agree on token boundaries.
"""

import json

import numpy as np

NOUNS = [
    "count", "size", "name", "value", "index", "total", "buffer", "cache",
    "flag", "id", "data", "result", "level", "width", "height", "offset",
    "score", "price", "state", "limit", "weight", "depth", "rate", "label",
]
CLASSES = [
    "Widget", "Handler", "Parser", "Builder", "Manager", "Service", "Logger",
    "Helper", "Node", "Entry", "Task", "Event", "Config", "Channel",
    "Session", "Registry", "Monitor", "Adapter",
]
PRIMS = ["int", "long", "double", "float", "short"]
STRINGS = ['"ok"', '"done"', '"empty"', '"ready"', '"error"', '"closed"']
NUMBERS = ["0", "1", "2", "10", "42", "100", "7"]


def _cap(s: str) -> str:
    return s[0].upper() + s[1:]


def make_method(rng: np.random.Generator):
    """One (source, comment) pair from a random template."""
    kind = int(rng.integers(0, 10))
    noun = str(rng.choice(NOUNS))
    noun2 = str(rng.choice(NOUNS))
    cls = str(rng.choice(CLASSES))
    prim = str(rng.choice(PRIMS))
    num = str(rng.choice(NUMBERS))
    lit = str(rng.choice(STRINGS))
    if kind == 0:
        src = f"public {prim} get{_cap(noun)} ( ) {{ return {noun} ; }}"
        com = f"returns the {noun} ."
    elif kind == 1:
        src = f"public void set{_cap(noun)} ( {prim} {noun} ) {{ this . {noun} = {noun} ; }}"
        com = f"sets the {noun} ."
    elif kind == 2:
        src = f"public boolean is{_cap(noun)}Empty ( ) {{ return {noun} == {num} ; }}"
        com = f"returns true if the {noun} is empty ."
    elif kind == 3:
        src = f"public void add{_cap(noun)} ( {prim} value ) {{ {noun} += value ; }}"
        com = f"adds a value to the {noun} ."
    elif kind == 4:
        src = (
            f"public {prim} sum{_cap(noun)} ( ) {{ {prim} total = {num} ; "
            f"for ( int i = 0 ; i < {noun} ; i ++ ) {{ total += i ; }} return total ; }}"
        )
        com = f"computes the sum of the {noun} ."
    elif kind == 5:
        src = (
            f"public {prim} max{_cap(noun)} ( {prim} a , {prim} b ) "
            f"{{ if ( a > b ) {{ return a ; }} else {{ return b ; }} }}"
        )
        com = f"returns the larger {noun} of two values ."
    elif kind == 6:
        src = f"public static {cls} create{cls} ( ) {{ return new {cls} ( ) ; }}"
        com = f"creates a new {cls.lower()} instance ."
    elif kind == 7:
        src = f"public String describe{_cap(noun)} ( ) {{ return {lit} ; }}"
        com = f"describes the {noun} as text ."
    elif kind == 8:
        src = f"@Override public String toString ( ) {{ return {lit} ; }}"
        com = "returns a string form of this object ."
    else:
        src = (
            f"public void drain{_cap(noun)} ( ) {{ while ( {noun} > {num} ) "
            f"{{ {noun} -- ; }} }}"
        )
        com = f"drains the {noun} until it reaches the floor ."
    # occasionally reference a second noun in a comment to widen the vocab
    if kind in (0, 1) and rng.random() < 0.2:
        com = com[:-2] + f"of the {noun2} ."
    return src, com


def make_corpus(n: int, seed: int = 0):
    """Deterministic list of {"id", "code", "comment"} records."""
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        code, comment = make_method(rng)
        records.append({"id": f"m{i:05d}", "code": code, "comment": comment})
    return records


def write_jsonl(path, records) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, sort_keys=True) + "\n")
