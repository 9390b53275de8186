"""Text rendering of the co-recursive I/O specification predicate that a
component model unfolds to, one level deep and over a symbolic state."""

from __future__ import annotations

from .process import EventText, IOEvent, IOGuardedES


def _conjunct(ev: IOEvent, head: str, params: str) -> str:
    txt = ev.text or EventText(outputs=("v",), input="w",
                               guard=f"guard_{ev.bio}(s, v)", update=f"update_{ev.bio}(s, v, w)")
    out = txt.outputs
    args = ["t"]
    if out:
        args.append(out[0] if len(out) == 1 else f"({', '.join(out)})")
    if txt.input:
        args.append(txt.input)
    args.append("t′")
    exists = ", ".join(([txt.input] if txt.input else []) + ["t′"])
    body = f"∃{exists}. {ev.bio}({', '.join(args)}) ⋆ {head}(t′, {params}, {txt.update})"
    if txt.guard != "true":
        body = f"if {txt.guard} then {body} else true"
    if out:
        body = f"∀⋆ {', '.join(out)}. {body}"
    return f"({body})"


def render_iospec(ges: IOGuardedES, params: str = "p", head: str = "P") -> str:
    """``head(t, params, s) =ν`` followed by one ``⋆``-separated conjunct
    per event; a component without events renders as ``true``."""
    if not ges.events:
        return "true"
    conjuncts = [_conjunct(ev, head, params) for ev in ges.events]
    lines = [f"{head}(t, {params}, s) =ν"]
    lines += [f"    {c} ⋆" for c in conjuncts[:-1]]
    lines.append(f"    {conjuncts[-1]}")
    return "\n".join(lines)


def render_specification(ges: IOGuardedES, params: str = "p") -> str:
    """The full specification: a token at some place and the predicate at
    the initial state, followed by the predicate's definition."""
    pred = render_iospec(ges, params)
    if pred == "true":
        return pred
    args = params if params.startswith("(") else f"({params})"
    return f"φ{args} = ∃t. token(t) ⋆ P(t, {params}, s₀)\n{pred}"
