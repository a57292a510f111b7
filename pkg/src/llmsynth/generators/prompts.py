"""Per-domain prompt templates and their deterministic filling."""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..harness import Benchmark, Domain


class MissingPlaceholder(KeyError):
    def __init__(self, name: str, template: str):
        super().__init__(name)
        self.name = name
        self.template = template

    def __str__(self):
        return f"template {self.template!r} needs a value for {{{{ {self.name} }}}}"


class Prompt(str):
    """The full prompt text, keeping the system and user parts apart.

    ``str(prompt)`` is the system text and user text joined by a blank line,
    which is what gets compared byte-for-byte across loop iterations.
    """

    system: str
    user: str

    def __new__(cls, system: str, user: str):
        obj = super().__new__(cls, f"{system}\n\n{user}" if system else user)
        obj.system = system
        obj.user = user
        return obj


@dataclass(frozen=True)
class PromptTemplate:
    key: str
    domain: Domain
    system_text: str
    user_template: str
    required: frozenset = frozenset()

    def placeholders(self) -> list[str]:
        return list(dict.fromkeys(_PLACEHOLDER.findall(self.system_text + self.user_template)))


_PLACEHOLDER = re.compile(r"\{\{\s*(\w+)\s*\}\}")


def fill(template: str, values: dict, name: str = "") -> str:
    def sub(m):
        key = m.group(1)
        if key not in values or values[key] is None:
            raise MissingPlaceholder(key, name)
        return str(values[key])
    return _PLACEHOLDER.sub(sub, template)


AIGER_SYSTEM = """\
You synthesize reactive controllers. Given a TLSF specification, produce a
circuit in ASCII AIGER format whose behaviour satisfies every LTL guarantee.

Format reference:
- Header line: `aag M I L O A` where M is the maximum variable index, I the
  number of inputs, L latches, O outputs and A AND gates.
- Then I input lines, L latch lines, O output lines and A gate lines, followed
  by optional symbol lines and an optional comment section introduced by `c`.
- Literals: an even literal 2v is variable v, the odd literal 2v+1 is its
  negation. Literal 0 is constant FALSE and 1 is constant TRUE.
- Variables are numbered inputs first (1..I), then latches (I+1..I+L), then
  AND gates (I+L+1..M).
- A gate line `lhs rhs0 rhs1` defines lhs = rhs0 AND rhs1; lhs must be even.
- A latch line `cur next` declares a state bit that starts at 0 and takes the
  value of literal `next` at every step.

Symbol table rules:
- The circuit must have exactly as many inputs and outputs as the TLSF INPUTS
  and OUTPUTS blocks.
- Name them with the identical TLSF identifiers, in order: `i0 <first input>`,
  `i1 <second input>`, ..., `o0 <first output>`, ...
- Never use placeholder names.

Worked example. For a specification with INPUTS { a; b; }, OUTPUTS { outp; }
and the guarantee G(outp <-> (a && b)), a correct answer is:

REALIZABLE
aag 3 2 0 1 1
2
4
6
6 2 4
i0 a
i1 b
o0 outp

Frequent errors: header counts that disagree with the body, odd gate
outputs, symbol names that differ from the TLSF, and a missing REALIZABLE
line.

Answer format: the first line is exactly REALIZABLE, the second line is the
`aag` header, symbols match the TLSF names, and nothing else is printed."""

AIGER_USER = """\
Produce an ASCII AIGER circuit for this TLSF specification:

```tlsf
{{ tlsf_content }}
```

Begin with the line REALIZABLE, then give a valid AIGER circuit meeting all LTL guarantees."""

SMV_SYSTEM = """\
You synthesize reactive controllers in the style of SYNTCOMP tools. Given a
TLSF specification, produce a deterministic finite-state machine as a nuXmv
SMV module.

Layout (use exactly these sections, each at most once):
1. `MODULE main`
2. `IVAR`: every TLSF input, declared `name : boolean;`
3. `VAR`: internal state bits, if any, declared `name : boolean;`
4. `ASSIGN`: for every state bit x, one `init(x) := <expr>;` and one
   `next(x) := <expr>;`
5. `DEFINE`: for every TLSF output y, one `y := <expr>;`

Rules:
- Only boolean types; no integers, enumerations, ranges or arrays.
- No INIT, TRANS or INVAR sections and no LTLSPEC lines.
- Never write init(...) or next(...) for an input variable.
- Inputs are declared only in IVAR, state only in VAR, outputs only in DEFINE.
- Operators: `!` (not), `&` (and), `|` (or), `->` (implies), `<->` (iff).
  The forms `~`, `&&` and `||` are rejected, and so is IF-THEN-ELSE / case.
- Put the module alone inside one markdown code block.

Skeleton:
```smv
MODULE main
IVAR
  in1 : boolean;
VAR
  s1 : boolean;
ASSIGN
  init(s1) := FALSE;
  next(s1) := in1 | s1;
DEFINE
  out1 := in1 & s1;
```"""

SMV_USER = """\
Produce a nuXmv SMV module for this TLSF specification:

```tlsf
{{ tlsf_content }}
```"""

SYGUS_SYSTEM = """\
You solve syntax-guided synthesis problems written in SyGuS-IF / SMT-LIB.

Rules:
1. Print only `(define-fun ...)` forms, one for every synth-fun, in a single
   ```smt2 code block.
2. Each define-fun has exactly the synth-fun's name, parameter names,
   parameter sorts and return sort. Grammar nonterminals are never
   parameters. A synth-fun with no parameters gets `()`.
3. When a synth-fun carries a grammar, the body must be derivable from that
   grammar: use only its operators and its parenthesization.
4. No helper functions, no declare-var, assume, constraint or grammar text,
   no commentary.
5. Use standard SMT-LIB operators only.
   Integers: + - * div mod = < <= > >= ite and or not; write negative
   constants as (- 5). There is no max, min, abs or if; build them with ite.
   Bit-vectors: bvand bvor bvxor bvnot bvadd bvsub bvmul bvudiv bvurem bvshl
   bvlshr bvult bvule bvugt bvuge concat extract; literals look like #x0f or
   (_ bv15 8).
   Strings: str.++ str.len str.at str.substr str.prefixof str.suffixof
   str.contains str.indexof str.replace str.to.int int.to.str.
   Arrays: select store. Booleans: true and false.

Example problem:
```sygus
(set-logic LIA)
(synth-fun mi ((x Int) (y Int)) Int
    ((S Int) (I Int))
    ((S Int ((ite (<= I I) I I)))
     (I Int (x y))))
(declare-var x Int)
(declare-var y Int)
(constraint (=> (>= x y) (= (mi x y) y)))
(constraint (=> (>= y x) (= (mi x y) x)))
(check-synth)
```
Answer:
```smt2
(define-fun mi ((x Int) (y Int)) Int (ite (<= x y) x y))
```"""

SYGUS_USER = """\
Give SMT-LIB define-fun solutions for this SyGuS problem:

```sygus
{{ sygus_content }}
```

Print only the define-fun form(s); respect the grammar if one is given."""

TLA_USER = """\
You complete TLA+ protocol sketches. Fill the holes {{ list_of_holes }} that
appear in the actions {{ list_of_actions }} of this sketch:

{{ sketch }}

After substitution the protocol must satisfy:

{{ properties }}

Each hole has a grammar, listed below. Parentheses are part of the grammar:
write them exactly where a production has them and nowhere else.

{{ grammars }}

Reply with a single JSON object and nothing else: no prose, no code fences,
no TLA+ module text. Escape characters inside JSON strings as needed. The
object has this shape:

{{ json_map_structure }}"""

TLA_USER_RELAXED = """\
You complete TLA+ protocol sketches. Fill the holes {{ list_of_holes }} that
appear in the actions {{ list_of_actions }} of this sketch:

{{ sketch }}

After substitution the protocol must satisfy:

{{ properties }}

Reply with a single JSON object and nothing else: no prose, no code fences,
no TLA+ module text. Escape characters inside JSON strings as needed. The
object has this shape:

{{ json_map_structure }}"""

ACL2S_USER = """\
You write programs in ACL2s, a LISP dialect.

Complete the following function template(s) by supplying each <BODY>:

{{ sig_block }}

Available primitive functions:

{{ primitives_block }}

Terminals you may use (constants and parameters):

{{ terminals_block }}

Functions may call themselves and each other, and may use if.

Required properties:

{{ properties_block }}

Required input-output examples:

{{ io_block }}

Datatype declarations in scope:

{{ datatype_block }}

Existing definitions that may help:

{{ definitions_block }}

Sketches (for each function, completing any one of its sketches is fine):

{{ sketches_block }}

Grammar for the expressions that fill sketch holes:

{{ grammar_block }}

Print only the definitions of {{ function_list }}, with no prose and no code fences."""


TEMPLATES: dict[str, PromptTemplate] = {
    "aiger": PromptTemplate("aiger", Domain.REACTIVE, AIGER_SYSTEM, AIGER_USER,
                            frozenset({"tlsf_content"})),
    "smv": PromptTemplate("smv", Domain.REACTIVE, SMV_SYSTEM, SMV_USER,
                          frozenset({"tlsf_content"})),
    "sygus": PromptTemplate("sygus", Domain.SYGUS, SYGUS_SYSTEM, SYGUS_USER,
                            frozenset({"sygus_content"})),
    "tla": PromptTemplate("tla", Domain.TLA_SKETCH, "", TLA_USER,
                          frozenset({"sketch", "list_of_holes", "grammars", "json_map_structure"})),
    "tla_relaxed": PromptTemplate("tla_relaxed", Domain.TLA_SKETCH, "", TLA_USER_RELAXED,
                                  frozenset({"sketch", "list_of_holes", "json_map_structure"})),
    "acl2s": PromptTemplate("acl2s", Domain.ACL2S_SKETCH, "", ACL2S_USER,
                            frozenset({"sig_block", "function_list", "properties_block"})),
}


def template_for(benchmark: Benchmark) -> PromptTemplate:
    d = benchmark.domain
    if d is Domain.REACTIVE:
        fmt = benchmark.aux.get("format", "smv")
        if fmt not in ("aiger", "smv"):
            raise ValueError(f"unknown reactive output format {fmt!r}")
        return TEMPLATES[fmt]
    if d is Domain.SYGUS:
        return TEMPLATES["sygus"]
    if d is Domain.TLA_SKETCH:
        return TEMPLATES["tla_relaxed" if benchmark.aux.get("relaxed") else "tla"]
    return TEMPLATES["acl2s"]


def json_map_structure(hole_ids) -> str:
    body = ",\n".join(f'  "{h}": "<expression for {h}>"' for h in hole_ids)
    return "{\n" + body + "\n}"


def _values(benchmark: Benchmark) -> dict:
    d, aux = benchmark.domain, benchmark.aux
    spec = benchmark.spec_text if benchmark.spec_text and benchmark.spec_text.strip() else None
    if d is Domain.REACTIVE:
        return {"tlsf_content": spec}
    if d is Domain.SYGUS:
        return {"sygus_content": spec}
    if d is Domain.TLA_SKETCH:
        holes = aux.get("holes") or []
        ids = [h["id"] for h in holes]
        actions = list(dict.fromkeys(h.get("action", "") for h in holes if h.get("action")))
        grammars = "\n\n".join(f"Grammar for {h['id']}:\n{h.get('grammar_text', '')}".rstrip()
                               for h in holes)
        return {
            "sketch": spec,
            "list_of_holes": ", ".join(ids) if ids else None,
            "list_of_actions": ", ".join(actions) if actions else "(unspecified)",
            "properties": aux.get("properties") or "(none given)",
            "grammars": grammars if holes else None,
            "json_map_structure": json_map_structure(ids) if ids else None,
        }
    values = {k: aux.get(k) for k in (
        "sig_block", "primitives_block", "terminals_block", "io_block", "datatype_block",
        "definitions_block", "sketches_block", "grammar_block", "function_list")}
    values["properties_block"] = spec
    for k, v in values.items():
        if v is None or (isinstance(v, str) and not v.strip()):
            values[k] = None if k in TEMPLATES["acl2s"].required else "(none)"
    return values


def build_prompt(benchmark: Benchmark) -> Prompt:
    """Fill the domain template from the benchmark payload.

    Raises MissingPlaceholder when a required field is absent or empty.
    """
    tpl = template_for(benchmark)
    values = _values(benchmark)
    for key in tpl.required:
        if values.get(key) is None:
            raise MissingPlaceholder(key, tpl.key)
    return Prompt(fill(tpl.system_text, values, tpl.key), fill(tpl.user_template, values, tpl.key))
