"""Discrete histories on a finite groupoid and their brute-force path sums.

A history is a chained sequence of transitions walked over a uniform time
grid.  Steps are grouped into segments, each flagged future (+1) or past
(-1).  Two conventions keep everything consistent and deserve stating once:

- Stored steps are always the transitions actually traversed, in composition
  order, for past segments too.  Reversing a future run (a1, ..., aN) stores
  the past run (aN^-1, ..., a1^-1); the stored list chains source-to-target
  uniformly across segment boundaries.
- Orientation never changes how steps chain.  It only signs the action
  contribution of a segment and moves the clock: future steps advance the
  time index by one tick, past steps rewind it.

A loop starts and ends at the same outcome with net time displacement equal
to zero modulo the grid span.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .groupoid import FiniteGroupoid
from .lagrangian import OutcomeBias, QLagrangian

DEFAULT_HISTORY_CAP = 10_000_000
_TIME_TOL = 1e-9


class EnumerationCapExceeded(RuntimeError):
    """Raised when a path enumeration would visit more histories than allowed."""

    def __init__(self, required: int, cap: int):
        self.required = required
        self.cap = cap
        super().__init__(f"enumeration needs {required} histories, cap is {cap}")


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid: start time, positive step tau, and total step count."""

    t_start: float
    tau: float
    n_steps: int

    def __post_init__(self):
        if not (isinstance(self.n_steps, int) and self.n_steps >= 0):
            raise ValueError(f"n_steps must be a non-negative integer, got {self.n_steps!r}")
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ValueError(f"tau must be positive and finite, got {self.tau!r}")

    @property
    def t_end(self) -> float:
        return self.t_start + self.n_steps * self.tau


@dataclass(frozen=True)
class Segment:
    orientation: int
    steps: tuple[str, ...]

    def __post_init__(self):
        if self.orientation not in (+1, -1):
            raise ValueError(f"orientation must be +1 or -1, got {self.orientation!r}")
        if not self.steps:
            raise ValueError("segments must contain at least one step")
        object.__setattr__(self, "steps", tuple(self.steps))


@dataclass(frozen=True)
class History:
    """Validated history; construction fails on the first chaining violation."""

    groupoid: FiniteGroupoid
    grid: TimeGrid
    segments: tuple[Segment, ...]
    anchor: str

    def __post_init__(self):
        g = self.groupoid
        segments = tuple(self.segments)
        object.__setattr__(self, "segments", segments)
        if self.anchor not in g.unit_of:
            raise ValueError(f"unknown anchor outcome {self.anchor!r}")
        current = self.anchor
        k = 0
        for seg in segments:
            for step in seg.steps:
                k += 1
                if step not in g.source:
                    raise ValueError(f"step {k} ({step!r}) is not a groupoid element")
                if g.source[step] != current:
                    raise ValueError(
                        f"step {k} ({step}) has source {g.source[step]}, expected {current}"
                    )
                current = g.target[step]
        total = sum(len(s.steps) for s in segments)
        if total != self.grid.n_steps:
            raise ValueError(f"history has {total} steps but the grid declares {self.grid.n_steps}")

    @property
    def start_outcome(self) -> str:
        return self.anchor

    @property
    def end_outcome(self) -> str:
        for seg in reversed(self.segments):
            return self.groupoid.target[seg.steps[-1]]
        return self.anchor

    @property
    def n_steps(self) -> int:
        return self.grid.n_steps

    @property
    def net_ticks(self) -> int:
        """Signed tick displacement: future steps count +1, past steps -1."""
        return sum(seg.orientation * len(seg.steps) for seg in self.segments)

    @property
    def start_time(self) -> float:
        return self.grid.t_start

    @property
    def end_time(self) -> float:
        return self.grid.t_start + self.net_ticks * self.grid.tau

    def steps(self) -> tuple[str, ...]:
        return tuple(step for seg in self.segments for step in seg.steps)


def make_history(
    g: FiniteGroupoid,
    grid: TimeGrid,
    segments: Iterable[tuple[int, Sequence[str]]],
    start: str | None = None,
) -> History:
    """Build a validated history from (orientation, steps) pairs.

    ``start`` names the anchor outcome; it is mandatory for the empty history
    and otherwise must agree with the first step's source.
    """
    segs = tuple(Segment(orientation, tuple(steps)) for orientation, steps in segments)
    if segs:
        first = segs[0].steps[0]
        if first not in g.source:
            raise ValueError(f"step 1 ({first!r}) is not a groupoid element")
        anchor = g.source[first]
        if start is not None and start != anchor:
            raise ValueError(f"declared start {start!r} but the first step leaves {anchor!r}")
    else:
        if start is None:
            raise ValueError("the empty history needs an explicit start outcome")
        anchor = start
    return History(g, grid, segs, anchor)


def unit_history(g: FiniteGroupoid, outcome: str, t_start: float = 0.0, tau: float = 1.0) -> History:
    """The zero-step history pinned at (outcome, t_start)."""
    return History(g, TimeGrid(t_start, tau, 0), (), outcome)


def compose_histories(w2: History, w1: History) -> History:
    """w2 ∘ w1: first walk w1, then w2; endpoints must match in outcome and time."""
    if w1.groupoid != w2.groupoid:
        raise ValueError("histories live over different groupoids")
    if w1.grid.tau != w2.grid.tau:
        raise ValueError(f"grid mismatch: tau {w1.grid.tau!r} vs {w2.grid.tau!r}")
    if w1.end_outcome != w2.start_outcome:
        raise ValueError(
            f"cannot compose: first history ends at {w1.end_outcome!r}, "
            f"second starts at {w2.start_outcome!r}"
        )
    if not math.isclose(w1.end_time, w2.start_time, rel_tol=_TIME_TOL, abs_tol=_TIME_TOL):
        raise ValueError(
            f"cannot compose: first history ends at t={w1.end_time!r}, "
            f"second starts at t={w2.start_time!r}"
        )
    grid = TimeGrid(w1.grid.t_start, w1.grid.tau, w1.n_steps + w2.n_steps)
    return History(w1.groupoid, grid, w1.segments + w2.segments, w1.anchor)


def invert_history(w: History) -> History:
    """Time-reverse: segments reversed, orientations flipped, steps inverted."""
    g = w.groupoid
    segs = tuple(
        Segment(-seg.orientation, tuple(g.inverse[s] for s in reversed(seg.steps)))
        for seg in reversed(w.segments)
    )
    grid = TimeGrid(w.end_time, w.grid.tau, w.n_steps)
    return History(g, grid, segs, w.end_outcome)


def total_variation(w: History) -> str:
    """Composition of all stored steps, last over first; the unit for empty histories."""
    g = w.groupoid
    current = g.unit_of[w.anchor]
    for step in w.steps():
        current = g.compose(step, current)
    return current


def is_loop(w: History) -> bool:
    """Same start and end outcome, and net displacement 0 modulo the grid span."""
    if w.start_outcome != w.end_outcome:
        return False
    if w.n_steps == 0:
        return True
    return w.net_ticks % w.n_steps == 0


def action(w: History, ell: QLagrangian, tau: float | None = None) -> complex:
    """Sum of step weights times tau, signed by each segment's orientation."""
    if ell.groupoid != w.groupoid:
        raise ValueError("lagrangian is defined on a different groupoid")
    if tau is None:
        tau = w.grid.tau
    total = 0j
    for seg in w.segments:
        seg_sum = 0j
        for step in seg.steps:
            try:
                seg_sum += ell[step]
            except KeyError:
                raise ValueError(f"lagrangian has no value for step {step!r}") from None
        total += seg.orientation * seg_sum * tau
    return total


def normalization(w: History, bias: OutcomeBias) -> float:
    """Endpoint factor sqrt(p(start) p(end))."""
    return math.sqrt(bias[w.start_outcome] * bias[w.end_outcome])


def history_amplitude(
    w: History, ell: QLagrangian, bias: OutcomeBias, hbar: float, tau: float | None = None
) -> complex:
    """sqrt(p(start) p(end)) * exp((i/hbar) * action)."""
    if hbar <= 0:
        raise ValueError("hbar must be positive")
    s = action(w, ell, tau)
    return normalization(w, bias) * cmath.exp(1j * s / hbar)


def _count_paths(g: FiniteGroupoid, n_steps: int) -> dict[tuple[str, str], int]:
    """Number of n-step forward walks per (end, start) outcome pair."""
    idx = {o: i for i, o in enumerate(g.outcomes)}
    n = len(g.outcomes)
    adj = [[0] * n for _ in range(n)]
    for e in g.elements:
        adj[idx[g.target[e]]][idx[g.source[e]]] += 1
    power = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    for _ in range(n_steps):
        power = [
            [sum(adj[i][k] * power[k][j] for k in range(n)) for j in range(n)]
            for i in range(n)
        ]
    return {
        (bf, ai): power[idx[bf]][idx[ai]] for bf in g.outcomes for ai in g.outcomes
    }


def enumerate_histories(
    g: FiniteGroupoid,
    start: str,
    end: str,
    n_steps: int,
    t_start: float = 0.0,
    tau: float = 1.0,
    cap: int = DEFAULT_HISTORY_CAP,
) -> list[History]:
    """All future-oriented n-step histories from start to end, in a stable order.

    The order is depth-first over out-transitions taken in element declaration
    order.  Raises EnumerationCapExceeded before materializing anything when
    the count (computed by walk counting) would exceed the cap.
    """
    if start not in g.unit_of or end not in g.unit_of:
        missing = start if start not in g.unit_of else end
        raise ValueError(f"unknown outcome {missing!r}")
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    required = _count_paths(g, n_steps)[(end, start)]
    if required > cap:
        raise EnumerationCapExceeded(required, cap)
    out_by_source: dict[str, list[str]] = {o: [] for o in g.outcomes}
    for e in g.elements:
        out_by_source[g.source[e]].append(e)
    grid = TimeGrid(t_start, tau, n_steps)
    results: list[History] = []
    stack: list[str] = []

    def walk(current: str, remaining: int) -> None:
        if remaining == 0:
            if current == end:
                results.append(History(g, grid, (Segment(+1, tuple(stack)),), start))
            return
        for e in out_by_source[current]:
            stack.append(e)
            walk(g.target[e], remaining - 1)
            stack.pop()

    walk(start, n_steps)
    return results


def _pairwise_sum(values: Sequence[complex]) -> complex:
    """Tree reduction; summation order is independent of chunking decisions."""
    vals = list(values)
    if not vals:
        return 0j
    while len(vals) > 1:
        nxt = []
        for i in range(0, len(vals) - 1, 2):
            nxt.append(vals[i] + vals[i + 1])
        if len(vals) % 2:
            nxt.append(vals[-1])
        vals = nxt
    return complex(vals[0])


def single_step_matrix(
    g: FiniteGroupoid, ell: QLagrangian, bias: OutcomeBias, tau: float, hbar: float
) -> np.ndarray:
    """One-step propagation matrix: entry [end, start] sums the one-step amplitudes."""
    if hbar <= 0:
        raise ValueError("hbar must be positive")
    idx = {o: i for i, o in enumerate(g.outcomes)}
    n = len(g.outcomes)
    m = np.zeros((n, n), dtype=complex)
    for e in g.elements:
        a, b = g.source[e], g.target[e]
        amp = math.sqrt(bias[a] * bias[b]) * cmath.exp(1j * (ell[e] * tau) / hbar)
        m[idx[b], idx[a]] += amp
    return m


def n_step_path_sum(
    g: FiniteGroupoid,
    ell: QLagrangian,
    bias: OutcomeBias,
    tau: float,
    hbar: float,
    n_steps: int,
    cap: int = DEFAULT_HISTORY_CAP,
) -> np.ndarray:
    """Brute-force sum over histories, outcome-indexed like single_step_matrix.

    Each history contributes its amplitude weighted by the bias of every
    intermediate outcome it visits.  Per-entry sums use a pairwise tree
    reduction so results do not depend on how the enumeration might be
    chunked.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    if hbar <= 0:
        raise ValueError("hbar must be positive")
    counts = _count_paths(g, n_steps)
    total = sum(counts.values())
    if total > cap:
        raise EnumerationCapExceeded(total, cap)
    idx = {o: i for i, o in enumerate(g.outcomes)}
    n = len(g.outcomes)
    m = np.zeros((n, n), dtype=complex)
    for start in g.outcomes:
        for end in g.outcomes:
            contributions = []
            for w in enumerate_histories(g, start, end, n_steps, tau=tau, cap=cap):
                weight = 1.0
                current = start
                steps = w.steps()
                for step in steps[:-1]:
                    current = g.target[step]
                    weight *= bias[current]
                contributions.append(weight * history_amplitude(w, ell, bias, hbar, tau))
            m[idx[end], idx[start]] = _pairwise_sum(contributions)
    return m


def decompose_history(w: History, w_ref: History) -> History:
    """Loop sigma with w = w_ref ∘ sigma at the level of total variation.

    sigma walks w forward and then w_ref backward; it is checked to be a loop
    and to restore w's endpoints and total variation when recomposed.
    """
    if w.start_outcome != w_ref.start_outcome or w.end_outcome != w_ref.end_outcome:
        raise ValueError("histories must share both endpoints")
    if not (
        math.isclose(w.start_time, w_ref.start_time, rel_tol=_TIME_TOL, abs_tol=_TIME_TOL)
        and math.isclose(w.end_time, w_ref.end_time, rel_tol=_TIME_TOL, abs_tol=_TIME_TOL)
    ):
        raise ValueError("histories must share start and end times")
    sigma = compose_histories(invert_history(w_ref), w)
    if not is_loop(sigma):
        raise RuntimeError("decomposition did not produce a loop")
    recomposed = compose_histories(w_ref, sigma)
    if (
        recomposed.start_outcome != w.start_outcome
        or recomposed.end_outcome != w.end_outcome
        or total_variation(recomposed) != total_variation(w)
    ):
        raise RuntimeError("recomposition does not match the original history")
    return sigma


def amplitude_via_reference(
    w_ref: History,
    base: History,
    ell: QLagrangian,
    bias: OutcomeBias,
    hbar: float,
    z_vertex: complex = 1.0,
) -> complex:
    """Endpoint amplitude computed through an arbitrary reference history.

    The loop weight exp(-(i/hbar) action(sigma)) with sigma = base^-1 ∘ w_ref
    gauges the base reference to weight one; the result is then independent
    of which w_ref was chosen.
    """
    if hbar <= 0:
        raise ValueError("hbar must be positive")
    sigma = decompose_history(w_ref, base)
    weight = cmath.exp(-1j * action(sigma, ell) / hbar)
    return weight * z_vertex * normalization(w_ref, bias) * cmath.exp(1j * action(w_ref, ell) / hbar)


def history_to_text(w: History) -> str:
    """Serialize segments as 'orientation:step,step;...' ('' for the empty history)."""
    parts = []
    for seg in w.segments:
        sign = "+" if seg.orientation > 0 else "-"
        parts.append(f"{sign}:{','.join(seg.steps)}")
    return ";".join(parts)


def history_from_text(
    g: FiniteGroupoid,
    text: str,
    start: str | None = None,
    t_start: float = 0.0,
    tau: float = 1.0,
) -> History:
    """Parse history_to_text output; start is required for the empty history."""
    text = text.strip()
    segments: list[tuple[int, list[str]]] = []
    if text:
        for part in text.split(";"):
            sign, sep, steps = part.partition(":")
            sign = sign.strip()
            if not sep or sign not in ("+", "-"):
                raise ValueError(f"bad segment {part!r}: expected '+:...' or '-:...'")
            names = [s.strip() for s in steps.split(",") if s.strip()]
            if not names:
                raise ValueError(f"segment {part!r} lists no steps")
            segments.append((+1 if sign == "+" else -1, names))
    n_total = sum(len(s) for _, s in segments)
    return make_history(g, TimeGrid(t_start, tau, n_total), segments, start=start)
