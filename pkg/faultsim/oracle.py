"""Brute-force reference simulator for small registers.

Time advances in integer ticks of ``time_step_ns``; at every tick the pending
asynchronous events are applied and every voter output is recomputed and
remembered, and at every clock edge each flip-flop captures the value its input
had at its own sampling tick. Slow and simple on purpose: the edge engine is
tested against it.
"""

import logging
import math
from collections import deque
from dataclasses import dataclass

from django.conf import settings
from django.core.exceptions import ValidationError

from .choices import InitialState
from .engine import IllumUpset, OutputTrace, StuckState, VoterSet, majority, materialize_stream

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OracleConfig:
    time_step_ns: float = None
    max_stages: int = None
    max_edges: int = None

    @classmethod
    def from_settings(cls, time_step_ns=None):
        return cls(time_step_ns, settings.FAULTLAB['ORACLE_MAX_STAGES'], settings.FAULTLAB['ORACLE_MAX_EDGES'])


class _Clock:
    def __init__(self, step):
        self.step = step

    def tick(self, t, what):
        r = t / self.step
        if abs(r - round(r)) > 1e-9:
            raise ValidationError('{} = {} is not a multiple of the oracle time step {}'.format(what, t, self.step))
        return int(round(r))


def oracle_run(layout, input_stream, timing, faults, num_edges, initial_state=InitialState.PREFILL, config=None):
    """Эталонный прогон регистра по тикам.

    Принимает те же аргументы, что и engine.run, плюс OracleConfig. Все моменты времени
    (фаза, период, δ, начала и концы засветок) должны попадать на сетку тиков.
    Возвращает OutputTrace.

    """

    config = config or OracleConfig.from_settings()
    max_stages = config.max_stages or 8
    max_edges = config.max_edges or 256
    if layout.stages > max_stages:
        raise ValidationError('oracle is limited to {} stages, layout has {}'.format(max_stages, layout.stages))
    if not 1 <= num_edges <= max_edges:
        raise ValidationError('oracle is limited to 1..{} edges, got {}'.format(max_edges, num_edges))

    clock = _Clock(config.time_step_ns or timing.delta_ns / 16.0)
    n = layout.stages
    bits = materialize_stream(input_stream, num_edges).tolist()
    delta = clock.tick(timing.delta_ns, 'delta_ns')
    period = clock.tick(timing.clock_period_ns, 'clock_period_ns')
    first_edge = clock.tick(timing.phase_ns, 'phase_ns')
    edges = [first_edge + k * period for k in range(num_edges)]

    toggles, stuck, windows, sets = {}, {}, {}, {}
    for fault in faults:
        cell = layout.cell(fault.cell_id)
        if isinstance(fault, IllumUpset):
            start = clock.tick(fault.t0_ns, 'IllumUpset.t0_ns')
            toggles.setdefault(start, []).append((cell.stage, cell.ff_index))
            windows.setdefault((cell.stage, cell.ff_index), []).append(
                (start, clock.tick(fault.end_ns, 'IllumUpset end')))
        elif isinstance(fault, VoterSet):
            sets.setdefault(cell.stage, []).append(
                (clock.tick(fault.t0_ns, 'VoterSet.t0_ns'), clock.tick(fault.end_ns, 'VoterSet end')))
        elif isinstance(fault, StuckState):
            stuck[(cell.stage, cell.ff_index)] = (clock.tick(fault.from_ns, 'StuckState.from_ns'), fault.value)
        else:
            raise ValidationError('unsupported fault event {!r}'.format(fault))

    def stuck_at(stage, ff, t):
        entry = stuck.get((stage, ff))
        return entry[1] if entry is not None and entry[0] <= t else None

    def pin(t):
        cycle = max(0, math.ceil((t - first_edge) / period))
        return bits[max(cycle - 1, 0)]

    fill = bits[0] if InitialState(initial_state) == InitialState.PREFILL else 0
    q = [[fill] * 3 for _ in range(n)]
    history = deque(maxlen=2 * delta + 1)
    event_ticks = list(toggles) + [entry[0] for entry in stuck.values()]
    start = min([edges[0] - 2 * delta] + event_ticks)
    edge_ticks = {t: k for k, t in enumerate(edges)}
    out = []

    for t in range(start, edges[-1] + 1):
        for stage, ff in toggles.get(t, ()):
            if stuck_at(stage, ff, t) is None:
                q[stage][ff] ^= 1
        for (stage, ff), (since, value) in stuck.items():
            if since == t:
                q[stage][ff] = value
        voters = [majority(*q[s]) ^ (1 if any(a <= t < b for a, b in sets.get(s, ())) else 0) for s in range(n)]
        history.append((t, voters))
        if t not in edge_ticks:
            continue

        seen = dict(history)
        captured = []
        for s in range(n):
            column = []
            for ff in range(3):
                tau = t - ff * delta
                value = pin(tau) if s == 0 else seen[tau][s - 1]
                if any(a <= t < b for a, b in windows.get((s, ff), ())):
                    value ^= 1
                forced = stuck_at(s, ff, t)
                column.append(value if forced is None else forced)
            captured.append(column)
        q = captured
        out.append(majority(*q[-1]))

    logger.debug('oracle: %d stages, %d edges, %d ticks', n, num_edges, edges[-1] + 1 - start)
    return OutputTrace(tuple(out), tuple(timing.edge_time(k) for k in range(num_edges)), timing)
