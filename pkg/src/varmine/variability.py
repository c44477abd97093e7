"""Line-level conditional-compilation analysis for C/C++ source text.

Classifies every line of a file as *variable* (inside at least one open
``#if``/``#ifdef``/``#ifndef`` region, directive lines included) or
*mandatory* (everything else), and collects the configuration constants
named in guard expressions.  The analysis is purely syntactic: no macro
expansion, no ``#include`` resolution, no reasoning about whether a
region can actually be compiled.

Directives hidden inside block comments are ignored, backslash
continuations extend a directive over several physical lines, and the
classic ``#ifndef``/``#define`` include-guard idiom can be excluded so
that plain headers do not count as wall-to-wall variable code.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from .errors import EmptyProject

__all__ = [
    "DirectiveKind",
    "GuardPolicy",
    "PresenceFrame",
    "Diagnostic",
    "VariabilityMap",
    "ScanState",
    "classify_line",
    "extract_constants",
    "build_variability_map",
    "render_debug_dump",
    "project_variability_summary",
    "VariabilitySummary",
    "split_lines",
]


class DirectiveKind(Enum):
    IF = "if"
    IFDEF = "ifdef"
    IFNDEF = "ifndef"
    ELIF = "elif"
    ELSE = "else"
    ENDIF = "endif"
    NON_DIRECTIVE = "non-directive"


_CONDITIONAL_KEYWORDS = {
    "if": DirectiveKind.IF,
    "ifdef": DirectiveKind.IFDEF,
    "ifndef": DirectiveKind.IFNDEF,
    "elif": DirectiveKind.ELIF,
    "else": DirectiveKind.ELSE,
    "endif": DirectiveKind.ENDIF,
}

_OPENING = (DirectiveKind.IF, DirectiveKind.IFDEF, DirectiveKind.IFNDEF)

# Identifiers that can legally appear in a guard expression but never name a
# configuration constant.
_C_KEYWORDS = frozenset(
    """auto break case char const continue default do double else enum extern
    float for goto if inline int long register restrict return short signed
    sizeof static struct switch typedef union unsigned void volatile while
    _Bool _Complex _Imaginary defined true false""".split()
)

_DIRECTIVE_RE = re.compile(r"^\s*#\s*([A-Za-z_][A-Za-z0-9_]*)(.*)$", re.S)
_IDENTIFIER_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_PP_NUMBER_RE = re.compile(r"(?<![A-Za-z0-9_])\.?[0-9](?:[A-Za-z0-9_.]|[eEpP][+-])*")


@dataclass
class GuardPolicy:
    """Knobs for what counts as a variability region.

    exclude_include_guards: suppress the classic ``#ifndef G`` /
        ``#define G`` / trailing ``#endif`` header idiom (default).
    count_if01: treat ``#if 0`` / ``#if 1`` regions as variable code
        (default); when off they are suppressed like include guards.
    """

    exclude_include_guards: bool = True
    count_if01: bool = True


@dataclass
class PresenceFrame:
    """One open conditional region on the guard stack."""

    guard_expr: str
    constants: frozenset[str]
    opened_at: int
    suppressed: bool = False


@dataclass(frozen=True)
class Diagnostic:
    line: int
    message: str


@dataclass
class VariabilityMap:
    """Per-line classification of one file.

    line_variable[i] is True when 1-based line i+1 is variable code.
    """

    path: str
    line_variable: tuple[bool, ...]
    line_depth: tuple[int, ...]
    constants: frozenset[str]
    variable_loc: int
    mandatory_loc: int
    diagnostics: tuple[Diagnostic, ...] = ()
    guard_chains: tuple[str, ...] | None = None

    @property
    def total_loc(self) -> int:
        return self.variable_loc + self.mandatory_loc

    def is_variable(self, line_no: int) -> bool:
        """1-based lookup."""
        return self.line_variable[line_no - 1]


@dataclass
class ScanState:
    """Carry-over state for line-by-line classification."""

    in_block_comment: bool = False
    continuation_kind: DirectiveKind | None = None


def split_lines(text: str) -> list[str]:
    """Split on newlines only (str.splitlines would also split on \\r etc.,
    desynchronizing line numbers from git's \\n-based counting)."""
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return lines


def _advance_comment_state(text: str, in_comment: bool) -> bool:
    """Track block-comment state across one physical line.

    String and character literals are honoured so that "/*" inside a
    literal does not open a comment; // kills the rest of the line.
    """
    i, n = 0, len(text)
    in_string = in_char = False
    while i < n:
        c = text[i]
        if in_comment:
            if c == "*" and i + 1 < n and text[i + 1] == "/":
                in_comment = False
                i += 2
                continue
            i += 1
            continue
        if in_string or in_char:
            if c == "\\":
                i += 2
                continue
            if in_string and c == '"':
                in_string = False
            elif in_char and c == "'":
                in_char = False
            i += 1
            continue
        if c == "/" and i + 1 < n:
            if text[i + 1] == "*":
                in_comment = True
                i += 2
                continue
            if text[i + 1] == "/":
                break
        if c == '"':
            in_string = True
        elif c == "'":
            in_char = True
        i += 1
    return in_comment


def _strip_comments_and_literals(text: str, in_comment: bool = False) -> str:
    """Blank out comments and the contents of string/char literals."""
    out: list[str] = []
    i, n = 0, len(text)
    in_string = in_char = False
    while i < n:
        c = text[i]
        if in_comment:
            if c == "*" and i + 1 < n and text[i + 1] == "/":
                in_comment = False
                i += 2
            else:
                i += 1
            continue
        if in_string or in_char:
            if c == "\\":
                i += 2
                continue
            if (in_string and c == '"') or (in_char and c == "'"):
                in_string = in_char = False
            i += 1
            continue
        if c == "/" and i + 1 < n:
            if text[i + 1] == "*":
                in_comment = True
                out.append(" ")
                i += 2
                continue
            if text[i + 1] == "/":
                break
        if c == '"':
            in_string = True
            i += 1
            continue
        if c == "'":
            in_char = True
            i += 1
            continue
        out.append(c)
        i += 1
    return "".join(out)


def _ends_with_continuation(text: str) -> bool:
    return text.rstrip().endswith("\\")


def classify_line(raw_line: str, state: ScanState | None = None) -> DirectiveKind:
    """Classify one physical line; total over all inputs.

    The state object threads block-comment tracking and backslash
    continuations between calls; physical lines of one logical directive
    all report the directive's kind.
    """
    if state is None:
        state = ScanState()
    text = raw_line.rstrip("\n")

    if state.continuation_kind is not None:
        kind = state.continuation_kind
    elif state.in_block_comment:
        kind = DirectiveKind.NON_DIRECTIVE
    else:
        kind = _directive_kind(text)

    state.in_block_comment = _advance_comment_state(text, state.in_block_comment)
    state.continuation_kind = kind if _ends_with_continuation(text) else None
    return kind


def _directive_kind(text: str) -> DirectiveKind:
    m = _DIRECTIVE_RE.match(text)
    if not m:
        return DirectiveKind.NON_DIRECTIVE
    return _CONDITIONAL_KEYWORDS.get(m.group(1), DirectiveKind.NON_DIRECTIVE)


def _directive_keyword(text: str) -> str | None:
    """Raw directive keyword (any directive, e.g. 'define'), or None."""
    m = _DIRECTIVE_RE.match(text)
    return m.group(1) if m else None


def extract_constants(
    guard_expr: str, directive: DirectiveKind = DirectiveKind.IF
) -> frozenset[str]:
    """Configuration constants named in a guard expression.

    All C identifiers except ``defined``, keywords, and numeric literals.
    For #ifdef/#ifndef only the first identifier (the macro being tested)
    is returned.
    """
    cleaned = _strip_comments_and_literals(guard_expr)
    cleaned = _PP_NUMBER_RE.sub(" ", cleaned)
    names = [m.group(0) for m in _IDENTIFIER_RE.finditer(cleaned)]
    names = [n for n in names if n not in _C_KEYWORDS]
    if directive in (DirectiveKind.IFDEF, DirectiveKind.IFNDEF):
        return frozenset(names[:1])
    return frozenset(names)


@dataclass
class _Logical:
    """One logical line: physical span plus directive info."""

    start: int                      # 0-based first physical line
    span: int
    kind: DirectiveKind
    keyword: str | None             # raw keyword, incl. non-conditional ones
    expr: str                       # spliced, comment-stripped remainder


def _scan_logical_lines(lines: list[str]) -> list[_Logical]:
    out: list[_Logical] = []
    in_comment = False
    i, n = 0, len(lines)
    while i < n:
        start = i
        span = 1
        while start + span - 1 < n and _ends_with_continuation(lines[start + span - 1]) \
                and start + span < n:
            span += 1
        starts_in_comment = in_comment

        if starts_in_comment:
            kind, keyword, expr = DirectiveKind.NON_DIRECTIVE, None, ""
        else:
            first = lines[start]
            keyword = _directive_keyword(first)
            kind = _CONDITIONAL_KEYWORDS.get(keyword, DirectiveKind.NON_DIRECTIVE) \
                if keyword else DirectiveKind.NON_DIRECTIVE
            expr = ""
            if keyword is not None:
                spliced = []
                for j in range(span):
                    t = lines[start + j]
                    if _ends_with_continuation(t):
                        t = t.rstrip()[:-1]
                    spliced.append(t)
                joined = " ".join(spliced)
                m = _DIRECTIVE_RE.match(joined)
                body = m.group(2) if m else ""
                expr = _strip_comments_and_literals(body, False).strip()

        for j in range(span):
            in_comment = _advance_comment_state(lines[start + j], in_comment)
        out.append(_Logical(start, span, kind, keyword, expr))
        i = start + span
    return out


def _find_include_guard(logicals: list[_Logical]) -> int | None:
    """Index into logicals of an include-guard #ifndef, or None.

    Pattern: the file's first directive is ``#ifndef G``, the next
    contentful line is ``#define G``, and the matching #endif is the last
    directive in the file.
    """
    directive_idx = [k for k, lg in enumerate(logicals) if lg.keyword is not None]
    if len(directive_idx) < 3:
        return None
    first = logicals[directive_idx[0]]
    if first.kind is not DirectiveKind.IFNDEF:
        return None
    guard_names = sorted(extract_constants(first.expr, DirectiveKind.IFNDEF))
    if not guard_names:
        return None
    guard = guard_names[0]

    # The next directive must be the #define of the same macro; anything
    # other than blank or comment-only lines in between disqualifies the
    # pair (checked by the caller via _guard_gap_clean).
    second = logicals[directive_idx[1]]
    if second.keyword != "define":
        return None
    defined = _IDENTIFIER_RE.findall(second.expr)
    if not defined or defined[0] != guard:
        return None

    # Match the #endif that closes the first frame; it must be the last
    # directive of the file.
    depth = 0
    closing = None
    for k in directive_idx:
        lg = logicals[k]
        if lg.kind in _OPENING:
            depth += 1
        elif lg.kind is DirectiveKind.ENDIF:
            depth -= 1
            if depth == 0:
                closing = k
                break
    if closing is None:
        return None
    if any(logicals[k].keyword is not None for k in range(closing + 1, len(logicals))):
        return None
    return directive_idx[0]


_IF01_RE = re.compile(r"^[01]$")


def build_variability_map(
    file_text: str,
    options: GuardPolicy | None = None,
    path: str = "",
    track_guards: bool = False,
) -> VariabilityMap:
    """Classify every line of ``file_text`` as variable or mandatory.

    Pure function of (file_text, options).  Malformed nesting never
    raises: stray #endif/#else/#elif are ignored and unterminated frames
    run to end of file, both logged as diagnostics.
    """
    options = options or GuardPolicy()
    lines = split_lines(file_text)
    n = len(lines)
    logicals = _scan_logical_lines(lines)

    guard_idx: int | None = None
    if options.exclude_include_guards:
        guard_idx = _find_include_guard(logicals)
        if guard_idx is not None and not _guard_gap_clean(lines, logicals, guard_idx):
            guard_idx = None

    variable = [False] * n
    depth_arr = [0] * n
    chains: list[str] | None = [] if track_guards else None
    constants: set[str] = set()
    diagnostics: list[Diagnostic] = []
    stack: list[PresenceFrame] = []

    def effective_depth() -> int:
        return sum(1 for f in stack if not f.suppressed)

    for idx, lg in enumerate(logicals):
        line_no = lg.start + 1
        kind = lg.kind

        if kind in _OPENING:
            suppressed = idx == guard_idx
            if kind is DirectiveKind.IF and not options.count_if01 \
                    and _IF01_RE.match(lg.expr or ""):
                suppressed = True
            consts = extract_constants(lg.expr, kind)
            if not suppressed:
                constants.update(consts)
            stack.append(PresenceFrame(lg.expr, consts, line_no, suppressed))
        elif kind is DirectiveKind.ELIF:
            if stack:
                top = stack[-1]
                consts = extract_constants(lg.expr, kind)
                if not top.suppressed:
                    constants.update(consts)
                stack[-1] = PresenceFrame(lg.expr, consts, top.opened_at, top.suppressed)
            else:
                diagnostics.append(Diagnostic(line_no, "#elif without open conditional"))
        elif kind is DirectiveKind.ELSE:
            if stack:
                top = stack[-1]
                stack[-1] = PresenceFrame(
                    f"!({top.guard_expr})" if top.guard_expr else "!",
                    top.constants,
                    top.opened_at,
                    top.suppressed,
                )
            else:
                diagnostics.append(Diagnostic(line_no, "#else without open conditional"))

        # Directive lines are classified while their region is open: an
        # opening directive after the push, a closing one before the pop.
        d = effective_depth()
        is_var = d >= 1
        chain = ">".join(f.guard_expr or "?" for f in stack if not f.suppressed) \
            if track_guards else ""
        for j in range(lg.span):
            variable[lg.start + j] = is_var
            depth_arr[lg.start + j] = d
            if chains is not None:
                chains.append(chain if chain else "-")

        if kind is DirectiveKind.ENDIF:
            if stack:
                stack.pop()
            else:
                diagnostics.append(Diagnostic(line_no, "stray #endif ignored"))

    for frame in stack:
        diagnostics.append(
            Diagnostic(frame.opened_at, "unterminated conditional extends to end of file")
        )

    var_loc = sum(variable)
    return VariabilityMap(
        path=path,
        line_variable=tuple(variable),
        line_depth=tuple(depth_arr),
        constants=frozenset(constants),
        variable_loc=var_loc,
        mandatory_loc=n - var_loc,
        diagnostics=tuple(diagnostics),
        guard_chains=tuple(chains) if chains is not None else None,
    )


def _guard_gap_clean(lines: list[str], logicals: list[_Logical], guard_idx: int) -> bool:
    """Between the guard #ifndef and its #define only blank or comment-only
    lines are allowed."""
    directive_idx = [k for k, lg in enumerate(logicals) if lg.keyword is not None]
    pos = directive_idx.index(guard_idx)
    nxt = directive_idx[pos + 1]
    in_comment = False
    for k in range(guard_idx + 1, nxt):
        lg = logicals[k]
        for j in range(lg.span):
            text = lines[lg.start + j]
            stripped = _strip_comments_and_literals(text, in_comment).strip()
            in_comment = _advance_comment_state(text, in_comment)
            if stripped:
                return False
    return True


def render_debug_dump(vmap: VariabilityMap) -> str:
    """Golden-file dump: ``<line-number> <V|M> <depth> <guard-chain>``."""
    chains = vmap.guard_chains or tuple("-" for _ in vmap.line_variable)
    rows = [
        f"{i + 1} {'V' if v else 'M'} {d} {c}"
        for i, (v, d, c) in enumerate(zip(vmap.line_variable, vmap.line_depth, chains))
    ]
    return "\n".join(rows) + ("\n" if rows else "")


@dataclass(frozen=True)
class VariabilitySummary:
    total_loc: int
    pct_mandatory: float
    pct_variable: float
    constant_count: int


def project_variability_summary(maps) -> VariabilitySummary:
    """Project-level LOC shares and configuration-constant count.

    Files without variable code stay in the LOC denominators even though
    they are excluded from the per-file evaluation set downstream.
    """
    maps = list(maps)
    if not maps:
        raise EmptyProject("no variability maps supplied")
    total = sum(m.total_loc for m in maps)
    var = sum(m.variable_loc for m in maps)
    constants: set[str] = set()
    for m in maps:
        constants.update(m.constants)
    if total == 0:
        return VariabilitySummary(0, 100.0, 0.0, len(constants))
    pct_var = 100.0 * var / total
    return VariabilitySummary(total, 100.0 - pct_var, pct_var, len(constants))
