"""Exact-arithmetic instances, transmission segments and traces.

Every time and size in the package is a :class:`fractions.Fraction`; nothing
is ever rounded. Instances are immutable and canonical (sorted by generation
time, densely indexed from 1), so they can be hashed, shared between threads
and serialized byte-for-byte reproducibly.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

Ratio = Fraction
RatioLike = Union[Fraction, int, str]

INSTANCE_FORMAT = "aoilab-instance/1"
TRACE_FORMAT = "aoilab-trace/1"


class InstanceError(ValueError):
    """Base class for rejected instances."""


class NonPositiveSize(InstanceError):
    pass


class NegativeGeneration(InstanceError):
    pass


class GenerationBeyondHorizon(InstanceError):
    pass


class InitialGenerationTooLarge(InstanceError):
    pass


class InvalidHorizon(InstanceError):
    pass


class ParseError(ValueError):
    """Malformed instance or trace document. Carries a 1-based position."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line else ""
        super().__init__(message + where)


def ratio(value: RatioLike) -> Fraction:
    """Parse an exact rational from an int, a Fraction, ``"p/q"`` or a decimal string.

    Binary floats are refused: ``ratio(0.1)`` would silently smuggle the
    nearest double into an otherwise exact computation.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, (Fraction, int)):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational number: {value!r}") from exc
    raise TypeError(f"cannot build an exact rational from {type(value).__name__}")


def format_ratio(value: Fraction) -> str:
    return str(value)


@dataclass(frozen=True)
class Update:
    index: int
    generation: Fraction
    size: Fraction


@dataclass(frozen=True)
class Instance:
    updates: tuple[Update, ...]
    horizon: Fraction
    initial_generation: Fraction = Fraction(0)

    def __len__(self) -> int:
        return len(self.updates)

    def __getitem__(self, index: int) -> Update:
        """1-based access, matching update indices."""
        if index < 1:
            raise IndexError(index)
        return self.updates[index - 1]

    @property
    def generations(self) -> list[Fraction]:
        return [u.generation for u in self.updates]

    @property
    def sizes(self) -> list[Fraction]:
        return [u.size for u in self.updates]

    def arrived_by(self, t: Fraction) -> int:
        """Number of updates generated at or before ``t``."""
        return sum(1 for u in self.updates if u.generation <= t)

    def to_json(self) -> str:
        return format_instance(self)

    @property
    def instance_id(self) -> str:
        return instance_id(self)


def validate_instance(
    raw: Iterable[tuple[RatioLike, RatioLike]],
    horizon: RatioLike,
    initial_generation: RatioLike = 0,
) -> Instance:
    """Build a canonical :class:`Instance` from ``(generation, size)`` pairs.

    Pairs are sorted by generation time; equal generation times keep their
    input order. Raises a subclass of :class:`InstanceError` on the first
    violated constraint.
    """
    horizon = ratio(horizon)
    initial_generation = ratio(initial_generation)
    pairs = [(ratio(g), ratio(s)) for g, s in raw]
    if horizon <= 0:
        raise InvalidHorizon(f"horizon must be positive, got {horizon}")
    for pos, (g, s) in enumerate(pairs):
        if s <= 0:
            raise NonPositiveSize(f"update #{pos + 1}: size {s} is not positive")
        if g < 0:
            raise NegativeGeneration(f"update #{pos + 1}: generation {g} is negative")
        if g >= horizon:
            raise GenerationBeyondHorizon(
                f"update #{pos + 1}: generation {g} is not before horizon {horizon}"
            )
    order = sorted(range(len(pairs)), key=lambda k: pairs[k][0])
    updates = tuple(
        Update(index=i + 1, generation=pairs[k][0], size=pairs[k][1])
        for i, k in enumerate(order)
    )
    first = updates[0].generation if updates else horizon
    if initial_generation > first:
        raise InitialGenerationTooLarge(
            f"initial generation {initial_generation} exceeds first generation {first}"
        )
    return Instance(updates=updates, horizon=horizon, initial_generation=initial_generation)


def revalidate(instance: Instance) -> Instance:
    return validate_instance(
        [(u.generation, u.size) for u in instance.updates],
        instance.horizon,
        instance.initial_generation,
    )


# -- traces -----------------------------------------------------------------


@dataclass(frozen=True)
class Segment:
    update_index: int
    start: Fraction
    end: Fraction

    @property
    def length(self) -> Fraction:
        return self.end - self.start


@dataclass(frozen=True)
class Trace:
    instance: Instance
    segments: tuple[Segment, ...] = ()
    completions: tuple[tuple[int, Fraction], ...] = ()

    def completion_time(self, index: int) -> Fraction | None:
        for i, t in self.completions:
            if i == index:
                return t
        return None

    def served(self) -> dict[int, Fraction]:
        """Total transmission time received by each update that was ever served."""
        out: dict[int, Fraction] = {}
        for seg in self.segments:
            out[seg.update_index] = out.get(seg.update_index, Fraction(0)) + seg.length
        return out

    def started(self) -> list[tuple[int, Fraction]]:
        """``(update, time)`` for every segment start, in time order."""
        return [(seg.update_index, seg.start) for seg in self.segments]


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str
    update_index: int | None = None


def validate_trace(trace: Trace, instance: Instance) -> tuple[bool, list[Violation]]:
    """Check every trace invariant; violations are returned, never raised."""
    v: list[Violation] = []
    if trace.instance != instance:
        v.append(Violation("ForeignInstance", "trace was produced for a different instance"))
    n = len(instance)
    prev: Segment | None = None
    for seg in trace.segments:
        k = seg.update_index
        if not 1 <= k <= n:
            v.append(Violation("UnknownUpdate", f"segment names update {k}", k))
            continue
        if seg.start >= seg.end:
            v.append(Violation("EmptySegment", f"[{seg.start}, {seg.end}]", k))
        if seg.start < instance[k].generation:
            v.append(
                Violation(
                    "StartsBeforeGeneration",
                    f"segment starts at {seg.start}, update generated at {instance[k].generation}",
                    k,
                )
            )
        if seg.end > instance.horizon:
            v.append(Violation("BeyondHorizon", f"segment ends at {seg.end}", k))
        if prev is not None:
            if seg.start < prev.start:
                v.append(Violation("SegmentOrder", f"segment at {seg.start} listed after {prev.start}", k))
            elif seg.start < prev.end:
                v.append(
                    Violation(
                        "Overlap",
                        f"[{prev.start}, {prev.end}] of update {prev.update_index} overlaps "
                        f"[{seg.start}, {seg.end}] of update {k}",
                        k,
                    )
                )
        prev = seg

    served = trace.served()
    last_end: dict[int, Fraction] = {}
    for seg in trace.segments:
        last_end[seg.update_index] = max(last_end.get(seg.update_index, seg.end), seg.end)
    completed = {}
    for k, t in trace.completions:
        if k in completed:
            v.append(Violation("DuplicateCompletion", f"update {k} completes twice", k))
        completed[k] = t
    for k, amount in served.items():
        if not 1 <= k <= n:
            continue
        size = instance[k].size
        if amount > size:
            v.append(Violation("OverService", f"served {amount} of size {size}", k))
        elif amount == size:
            if k not in completed:
                v.append(Violation("MissingCompletion", f"fully served by {last_end[k]}", k))
            elif completed[k] != last_end[k]:
                v.append(
                    Violation(
                        "CompletionTime",
                        f"recorded at {completed[k]}, last segment ends at {last_end[k]}",
                        k,
                    )
                )
    for k, t in completed.items():
        if not 1 <= k <= n:
            v.append(Violation("UnknownUpdate", f"completion names update {k}", k))
        elif served.get(k, Fraction(0)) != instance[k].size:
            v.append(Violation("SpuriousCompletion", f"completion at {t} without full service", k))
    times = [t for _, t in trace.completions]
    for a, b in zip(times, times[1:]):
        if not a < b:
            v.append(Violation("CompletionOrder", f"completion times {a} then {b}"))
    return not v, v


# -- serialization -------------------------------------------------------------


def format_instance(instance: Instance) -> str:
    """Canonical instance document. Stable: equal instances give equal bytes."""
    doc = {
        "format": INSTANCE_FORMAT,
        "horizon": format_ratio(instance.horizon),
        "initial_generation": format_ratio(instance.initial_generation),
        "updates": [
            {"g": format_ratio(u.generation), "s": format_ratio(u.size)} for u in instance.updates
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def instance_id(instance: Instance) -> str:
    return hashlib.sha256(format_instance(instance).encode()).hexdigest()[:16]


def _load_json(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from exc
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object", 1, 1)
    return doc


def _field_ratio(doc: dict, key: str, where: str) -> Fraction:
    if key not in doc:
        raise ParseError(f"{where}: missing field {key!r}")
    value = doc[key]
    if isinstance(value, float):
        raise ParseError(f"{where}: field {key!r} must be a string such as \"1.45\" or \"29/20\"")
    try:
        return ratio(value)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: field {key!r}: {exc}") from exc


def parse_instance(text: str) -> Instance:
    """Inverse of :func:`format_instance`. Also accepts unsorted update lists."""
    doc = _load_json(text)
    fmt = doc.get("format", INSTANCE_FORMAT)
    if fmt != INSTANCE_FORMAT:
        raise ParseError(f"unsupported format {fmt!r}")
    horizon = _field_ratio(doc, "horizon", "instance")
    lam0 = _field_ratio(doc, "initial_generation", "instance") if "initial_generation" in doc else Fraction(0)
    updates = doc.get("updates", [])
    if not isinstance(updates, list):
        raise ParseError("'updates' must be a list")
    pairs = []
    for pos, item in enumerate(updates, start=1):
        if not isinstance(item, dict):
            raise ParseError(f"update #{pos} must be an object with fields g and s")
        pairs.append((_field_ratio(item, "g", f"update #{pos}"), _field_ratio(item, "s", f"update #{pos}")))
    return validate_instance(pairs, horizon, lam0)


def format_trace(trace: Trace) -> str:
    doc = {
        "format": TRACE_FORMAT,
        "instance_id": instance_id(trace.instance),
        "segments": [
            {"update": s.update_index, "start": format_ratio(s.start), "end": format_ratio(s.end)}
            for s in trace.segments
        ],
        "completions": [{"update": k, "time": format_ratio(t)} for k, t in trace.completions],
    }
    return json.dumps(doc, indent=2) + "\n"


def parse_trace(text: str, instance: Instance) -> Trace:
    doc = _load_json(text)
    if doc.get("format") != TRACE_FORMAT:
        raise ParseError(f"unsupported format {doc.get('format')!r}")
    if doc.get("instance_id") not in (None, instance_id(instance)):
        raise ParseError("trace belongs to a different instance")
    segs = tuple(
        Segment(int(s["update"]), _field_ratio(s, "start", "segment"), _field_ratio(s, "end", "segment"))
        for s in doc.get("segments", [])
    )
    comps = tuple((int(c["update"]), _field_ratio(c, "time", "completion")) for c in doc.get("completions", []))
    return Trace(instance, segs, comps)


TRACE_CSV_HEADER = "kind,update,start,end"


def trace_to_csv(trace: Trace) -> str:
    """Segment rows carry ``start,end``; completion rows carry the time in ``start``."""
    lines = [TRACE_CSV_HEADER]
    lines += [f"segment,{s.update_index},{s.start},{s.end}" for s in trace.segments]
    lines += [f"completion,{k},{t}," for k, t in trace.completions]
    return "\n".join(lines) + "\n"


def trace_from_csv(text: str, instance: Instance) -> Trace:
    rows = [line for line in text.splitlines() if line.strip()]
    if not rows or rows[0].strip() != TRACE_CSV_HEADER:
        raise ParseError(f"expected header {TRACE_CSV_HEADER!r}", 1, 1)
    segs, comps = [], []
    for lineno, line in enumerate(rows[1:], start=2):
        cells = line.split(",")
        if len(cells) != 4:
            raise ParseError("expected 4 columns", lineno, 1)
        kind, k, a, b = cells
        try:
            if kind == "segment":
                segs.append(Segment(int(k), ratio(a), ratio(b)))
            elif kind == "completion":
                comps.append((int(k), ratio(a)))
            else:
                raise ParseError(f"unknown row kind {kind!r}", lineno, 1)
        except ValueError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(str(exc), lineno, 1) from exc
    return Trace(instance, tuple(segs), tuple(comps))


def empty_trace(instance: Instance) -> Trace:
    return Trace(instance)


def from_pairs(pairs: Sequence[tuple[RatioLike, RatioLike]], horizon: RatioLike, lam0: RatioLike = 0) -> Instance:
    """Shorthand for :func:`validate_instance`."""
    return validate_instance(pairs, horizon, lam0)
