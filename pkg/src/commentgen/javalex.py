"""Hand-written Java method lexer with rule-based syntactic entity labels.

Tokenizes a single method's source into tokens with exact character spans
(comments stripped during lexing so spans stay aligned), then assigns each
token one label from a closed set. Identifier subtyping follows naming and
adjacency rules: class for upper-case-initial identifiers not followed by a
round brace, function/object for call-suffixed identifiers (object when a
same-spelling class exists case-insensitively), return-type for the header
position. This module exists to manufacture tagger training data and golden
tests, not to parse Java.
"""

from dataclasses import dataclass, replace

ENTITY_LABELS = (
    "modifier",
    "class",
    "function",
    "object",
    "return-type",
    "body-start-delimiter",
    "body-end-delimiter",
    "eol",
    "other-separator",
    "number",
    "string",
    "data-type",
    "boolean",
    "operator",
    "loop",
    "keyword",
    "conditional",
    "annotation",
)

RESERVED = frozenset(
    """abstract assert boolean break byte case catch char class const continue
    default do double else enum extends final finally float for goto if
    implements import instanceof int interface long native new package private
    protected public return short static strictfp super switch synchronized
    this throw throws transient try void volatile while true false null""".split()
)

MODIFIERS = frozenset(
    "public private protected static final abstract synchronized native transient volatile strictfp".split()
)
PRIMITIVES = frozenset("int long short byte char float double boolean void".split())
LOOPS = frozenset("for while do".split())
CONDITIONALS = frozenset("if else switch case".split())
BOOLEANS = frozenset(("true", "false"))

_OPERATORS = sorted(
    [
        ">>>=", ">>>", ">>=", "<<=", ">>", "<<", "<=", ">=", "==", "!=",
        "&&", "||", "++", "--", "+=", "-=", "*=", "/=", "%=", "&=", "|=",
        "^=", "->", "::", "+", "-", "*", "/", "%", "=", "<", ">", "!", "~",
        "&", "|", "^", "?", ":",
    ],
    key=len,
    reverse=True,
)
_SEPARATORS = frozenset("(){}[];,.")


class LexError(Exception):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at offset {position}")
        self.position = position


@dataclass(frozen=True)
class CodeToken:
    text: str
    span: tuple
    kind: str  # identifier | word | number | string | char | operator | separator | annotation
    label: str | None = None


@dataclass(frozen=True)
class TokenizedMethod:
    source: str
    tokens: tuple
    comment_spans: tuple = ()


def _is_ident_start(ch: str) -> bool:
    return ch.isalpha() or ch in "_$"


def _is_ident_part(ch: str) -> bool:
    return ch.isalnum() or ch in "_$"


def tokenize(source: str) -> TokenizedMethod:
    """Lex a method body. Comments (line, block, Javadoc) are dropped but
    their spans recorded; token text always equals source[span]."""
    tokens = []
    comments = []
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch in " \t\r\n\f":
            i += 1
            continue
        if ch == "/" and i + 1 < n and source[i + 1] == "/":
            end = source.find("\n", i)
            end = n if end == -1 else end
            comments.append((i, end))
            i = end
            continue
        if ch == "/" and i + 1 < n and source[i + 1] == "*":
            end = source.find("*/", i + 2)
            if end == -1:
                raise LexError("unterminated block comment", i)
            comments.append((i, end + 2))
            i = end + 2
            continue
        if _is_ident_start(ch):
            j = i + 1
            while j < n and _is_ident_part(source[j]):
                j += 1
            text = source[i:j]
            kind = "word" if text in RESERVED else "identifier"
            tokens.append(CodeToken(text, (i, j), kind))
            i = j
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and source[i + 1].isdigit()):
            i = _lex_number(source, i, tokens)
            continue
        if ch == '"':
            i = _lex_quoted(source, i, '"', "string", tokens)
            continue
        if ch == "'":
            i = _lex_quoted(source, i, "'", "char", tokens)
            continue
        if ch == "@":
            j = i + 1
            while j < n and _is_ident_part(source[j]):
                j += 1
            tokens.append(CodeToken(source[i:j], (i, j), "annotation"))
            i = j
            continue
        if source.startswith("...", i):
            tokens.append(CodeToken("...", (i, i + 3), "separator"))
            i += 3
            continue
        if ch in _SEPARATORS:
            tokens.append(CodeToken(ch, (i, i + 1), "separator"))
            i += 1
            continue
        for op in _OPERATORS:
            if source.startswith(op, i):
                tokens.append(CodeToken(op, (i, i + len(op)), "operator"))
                i += len(op)
                break
        else:
            raise LexError(f"unexpected character {ch!r}", i)
    return TokenizedMethod(source, tuple(tokens), tuple(comments))


def _lex_number(source, i, tokens):
    n = len(source)
    j = i
    if source[j] in "+-":
        j += 1
    if source.startswith(("0x", "0X"), j):
        j += 2
        while j < n and (source[j] in "_" or source[j] in "0123456789abcdefABCDEF"):
            j += 1
    elif source.startswith(("0b", "0B"), j):
        j += 2
        while j < n and source[j] in "01_":
            j += 1
    else:
        while j < n and (source[j].isdigit() or source[j] == "_"):
            j += 1
        if j < n and source[j] == ".":
            j += 1
            while j < n and (source[j].isdigit() or source[j] == "_"):
                j += 1
        if j < n and source[j] in "eE":
            k = j + 1
            if k < n and source[k] in "+-":
                k += 1
            if k < n and source[k].isdigit():
                j = k
                while j < n and source[j].isdigit():
                    j += 1
    if j < n and source[j] in "lLfFdD":
        j += 1
    tokens.append(CodeToken(source[i:j], (i, j), "number"))
    return j


def _lex_quoted(source, i, quote, kind, tokens):
    n = len(source)
    j = i + 1
    while j < n:
        ch = source[j]
        if ch == "\\":
            j += 2
            continue
        if ch == "\n":
            break
        if ch == quote:
            tokens.append(CodeToken(source[i : j + 1], (i, j + 1), kind))
            return j + 1
        j += 1
    raise LexError(f"unterminated {kind} literal", i)


def _header_positions(tokens):
    """Locate the method name (first identifier followed by '(' before the
    first top-level '{') and the return-type identifier preceding it,
    stepping back over a generic argument list or array brackets."""
    name_idx = None
    for i, tok in enumerate(tokens):
        if tok.text == "{":
            break
        if (
            tok.kind == "identifier"
            and i + 1 < len(tokens)
            and tokens[i + 1].text == "("
        ):
            name_idx = i
            break
    if name_idx is None:
        return None, None
    j = name_idx - 1
    while j >= 0:
        if tokens[j].text == ">":
            depth = 1
            j -= 1
            while j >= 0 and depth > 0:
                if tokens[j].text == ">":
                    depth += 1
                elif tokens[j].text == "<":
                    depth -= 1
                j -= 1
        elif tokens[j].text in ("[", "]"):
            j -= 1
        else:
            break
    if j >= 0 and tokens[j].kind == "identifier":
        return name_idx, j
    return name_idx, None


def method_class_names(method: TokenizedMethod) -> set:
    """Lower-cased identifiers this method would label class or return-type;
    feeds the case-insensitive object-vs-function decision."""
    tokens = method.tokens
    _, rt_idx = _header_positions(tokens)
    names = set()
    for i, tok in enumerate(tokens):
        if tok.kind != "identifier":
            continue
        if i == rt_idx and tok.text[0].isupper():
            names.add(tok.text.lower())
            continue
        nxt = tokens[i + 1].text if i + 1 < len(tokens) else ""
        if tok.text[0].isupper() and nxt != "(":
            names.add(tok.text.lower())
    return names


def build_class_index(methods) -> set:
    """Corpus-level class-name index (one first pass over all methods)."""
    index = set()
    for m in methods:
        index |= method_class_names(m)
    return index


def label(method: TokenizedMethod, class_index: set | None = None) -> TokenizedMethod:
    """Assign every token exactly one entity label.

    Precedence: literals > separators > operators > reserved words >
    annotation > identifier subtyping. Plain identifiers (lower-case start,
    no call suffix) default to object.
    """
    tokens = method.tokens
    name_idx, rt_idx = _header_positions(tokens)
    classes = method_class_names(method)
    if class_index:
        classes = classes | class_index
    out = []
    for i, tok in enumerate(tokens):
        out.append(replace(tok, label=_label_one(tokens, i, rt_idx, classes)))
    return replace(method, tokens=tuple(out))


def _label_one(tokens, i, rt_idx, classes):
    tok = tokens[i]
    if tok.kind == "number":
        return "number"
    if tok.kind in ("string", "char"):
        return "string"
    if tok.kind == "separator":
        if tok.text == "{":
            return "body-start-delimiter"
        if tok.text == "}":
            return "body-end-delimiter"
        if tok.text == ";":
            return "eol"
        return "other-separator"
    if tok.kind == "operator":
        return "operator"
    if tok.kind == "word":
        t = tok.text
        if t in MODIFIERS:
            return "modifier"
        if t in PRIMITIVES:
            return "data-type"
        if t in LOOPS:
            return "loop"
        if t in CONDITIONALS:
            return "conditional"
        if t in BOOLEANS:
            return "boolean"
        return "keyword"
    if tok.kind == "annotation":
        return "annotation"
    if tok.kind == "identifier":
        if i == rt_idx:
            return "return-type"
        nxt = tokens[i + 1].text if i + 1 < len(tokens) else ""
        if nxt == "(":
            return "object" if tok.text.lower() in classes else "function"
        if tok.text[0].isupper():
            return "class"
        return "object"
    # unknown token kinds should not happen; keyword is the safe fallback
    import warnings

    warnings.warn(f"unknown token kind {tok.kind!r}, labeling as keyword")
    return "keyword"


def sequence_labels(method: TokenizedMethod):
    """Order-preserving (normalized_text, label) projection for tagger
    training files. NUM/STR replacement applies to the text only; the label
    was computed from the original literal."""
    out = []
    for tok in method.tokens:
        if tok.label is None:
            raise ValueError("sequence_labels requires a labeled method")
        if tok.kind == "number":
            text = "NUM"
        elif tok.kind in ("string", "char"):
            text = "STR"
        else:
            text = tok.text
        out.append((text, tok.label))
    return out


def strip_comments(source: str) -> str:
    """Source text with comment characters removed (lexer-equivalent)."""
    spans = tokenize(source).comment_spans
    out = []
    prev = 0
    for start, end in spans:
        out.append(source[prev:start])
        prev = end
    out.append(source[prev:])
    return "".join(out)


def reconstruct(method: TokenizedMethod) -> str:
    """Token texts joined with the original inter-token whitespace (comment
    regions excised). Equals strip_comments(source) for any lexed input."""
    src = method.source
    events = sorted(
        [(t.span[0], t.span[1], t.text) for t in method.tokens]
        + [(s, e, "") for s, e in method.comment_spans]
    )
    out = []
    prev = 0
    for start, end, text in events:
        out.append(src[prev:start])
        out.append(text)
        prev = end
    out.append(src[prev:])
    return "".join(out)


def brace_balance_ok(method: TokenizedMethod) -> bool:
    """Running body-delimiter balance stays non-negative and ends at zero."""
    depth = 0
    for tok in method.tokens:
        if tok.text == "{":
            depth += 1
        elif tok.text == "}":
            depth -= 1
            if depth < 0:
                return False
    return depth == 0


def lex_and_label(source: str, class_index: set | None = None) -> TokenizedMethod:
    return label(tokenize(source), class_index)
