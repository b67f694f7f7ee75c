"""Edge-accurate simulation of the TMR shift register.

Every stage holds three flip-flops. FF1 samples its input at the rising edge
t_k, FF2 at t_k - δ and FF3 at t_k - 2δ; the voter outputs the majority of the
three stored bits and drives the next stage. Stage 0 is driven by the input
pin: input bit u_k is launched at edge t_k, so the pin reads u_(k-1) during
cycle (t_(k-1), t_k] and u_0 before the first edge.

A sample at time τ sees every asynchronous event at times <= τ (upset onsets,
stuck starts, SET windows) and the captures of edges strictly before τ. All
flip-flops capture together at the edge.

Quiet stretches (no fault touches the edge and all three copies of every stage
agree) are pure shifts and are applied to the whole register at once; edges
touched by a fault are simulated sample by sample.
"""

import bisect
import itertools
import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from django.core.exceptions import ValidationError

from .choices import CellKind, InitialState, StuckUntil
from .exceptions import InvariantViolation

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TimingParams:
    clock_period_ns: float
    phase_ns: float = 0.0
    delta_ns: float = 1.0

    def __post_init__(self):
        if not self.clock_period_ns > 0:
            raise ValidationError('timing.clock_period_ns must be positive, got {}'.format(self.clock_period_ns))
        if not 0.0 <= self.phase_ns < self.clock_period_ns:
            raise ValidationError('timing.phase_ns must lie in [0, clock_period), got {}'.format(self.phase_ns))
        if not self.delta_ns > 0:
            raise ValidationError('timing.delta_ns must be positive, got {}'.format(self.delta_ns))
        if not 2 * self.delta_ns < self.clock_period_ns:
            raise ValidationError('timing.delta_ns: 2*delta ({}) must fit inside one clock period ({})'.format(
                2 * self.delta_ns, self.clock_period_ns))

    @classmethod
    def from_frequency(cls, frequency_mhz, phase_ns=0.0, delta_ns=1.0):
        if not frequency_mhz > 0:
            raise ValidationError('frequency_mhz must be positive, got {}'.format(frequency_mhz))
        return cls(1000.0 / frequency_mhz, phase_ns, delta_ns)

    @property
    def frequency_mhz(self):
        return 1000.0 / self.clock_period_ns

    def with_phase(self, phase_ns):
        return replace(self, phase_ns=phase_ns)

    def edge_time(self, k):
        return self.phase_ns + k * self.clock_period_ns

    def first_edge_at_or_after(self, t):
        """Наименьший индекс k >= 0, для которого t_k >= t."""
        if t == -math.inf:
            return 0
        k = max(0, math.ceil((t - self.phase_ns) / self.clock_period_ns))
        while self.edge_time(k) < t:
            k += 1
        while k > 0 and self.edge_time(k - 1) >= t:
            k -= 1
        return k


@dataclass(frozen=True)
class FaultEvent:
    cell_id: int


@dataclass(frozen=True)
class IllumUpset(FaultEvent):
    """Засветка триггера: инверсия состояния в t0 и инверсия каждого захвата внутри [t0, t0 + d)."""

    t0_ns: float
    duration_ns: float

    @property
    def end_ns(self):
        return self.t0_ns + self.duration_ns

    def covers(self, t):
        return self.t0_ns <= t < self.t0_ns + self.duration_ns


@dataclass(frozen=True)
class VoterSet(FaultEvent):
    """Одиночный переходный импульс (SET): выход мажоритара инвертирован на [t0, t0 + d)."""

    t0_ns: float
    duration_ns: float

    @property
    def end_ns(self):
        return self.t0_ns + self.duration_ns

    def covers(self, t):
        return self.t0_ns <= t < self.t0_ns + self.duration_ns


@dataclass(frozen=True)
class StuckState(FaultEvent):
    value: int
    from_ns: float = 0.0
    until: str = StuckUntil.RESET

    def active(self, t):
        return self.from_ns <= t


@dataclass(frozen=True)
class OutputTrace:
    bits: tuple
    edge_times_ns: tuple
    timing: TimingParams

    def __post_init__(self):
        if len(self.bits) != len(self.edge_times_ns):
            raise InvariantViolation('trace has {} bits but {} edge times'.format(
                len(self.bits), len(self.edge_times_ns)))

    def __len__(self):
        return len(self.bits)

    def diff(self, other):
        """Позиции расхождения с другой трассой: кортеж пар (индекс фронта, бит этой трассы)."""
        if len(self) != len(other):
            raise ValidationError('traces differ in length: {} vs {}'.format(len(self), len(other)))
        return tuple((k, b) for k, (a, b) in enumerate(zip(other.bits, self.bits)) if a != b)


@dataclass(frozen=True)
class StuckProbe:
    rerun: OutputTrace
    after_power_cycle: OutputTrace


def majority(a, b, c):
    """Мажоритарная функция 2 из 3; работает и с битами, и с массивами numpy."""
    return (a & b) | (a & c) | (b & c)


def constant_stream(bit):
    return itertools.repeat(int(bit))


def pattern_stream(bits):
    return itertools.cycle([int(b) for b in bits])


def materialize_stream(input_stream, num_edges):
    bits = np.fromiter((int(b) for b in itertools.islice(iter(input_stream), num_edges)),
                       dtype=np.uint8)
    if len(bits) < num_edges:
        raise ValidationError('input_stream ended after {} of {} edges'.format(len(bits), num_edges))
    if np.any(bits > 1):
        raise ValidationError('input_stream must yield bits 0 or 1')
    return bits


@dataclass(frozen=True)
class _AsyncEvent:
    time: float
    cell_id: int
    stage: int
    ff: int
    stuck_value: int = -1  # -1: переключение (начало засветки), иначе установка залипания

    @property
    def is_toggle(self):
        return self.stuck_value < 0


class _CompiledFaults:
    """Список неисправностей, разложенный по триггерам и мажоритарам, плюс маска «занятых» фронтов."""

    def __init__(self, layout, timing, faults, num_edges):
        self.timing = timing
        self.upsets = {}
        self.sets = {}
        self.stuck = {}
        events = []
        busy = np.zeros(num_edges, dtype=bool)

        for fault in faults:
            cell = layout.cell(fault.cell_id)
            if isinstance(fault, StuckState):
                if not cell.is_ff:
                    raise ValidationError('StuckState must target a flip-flop cell, got {} cell {}'.format(
                        cell.kind, cell.id))
                if fault.value not in (0, 1):
                    raise ValidationError('StuckState.value must be 0 or 1')
                key = (cell.stage, cell.ff_index)
                if key in self.stuck:
                    raise ValidationError('at most one StuckState per cell, cell {} has two'.format(cell.id))
                self.stuck[key] = fault
                events.append(_AsyncEvent(fault.from_ns, cell.id, cell.stage, cell.ff_index, fault.value))
                busy[min(timing.first_edge_at_or_after(fault.from_ns), num_edges):] = True
                continue

            if not fault.duration_ns > 0:
                raise ValidationError('fault duration_ns must be positive, cell {}'.format(cell.id))
            if isinstance(fault, IllumUpset):
                if not cell.is_ff:
                    raise ValidationError('IllumUpset must target a flip-flop cell, got {} cell {}'.format(
                        cell.kind, cell.id))
                self.upsets.setdefault((cell.stage, cell.ff_index), []).append(fault)
                events.append(_AsyncEvent(fault.t0_ns, cell.id, cell.stage, cell.ff_index))
                first = timing.first_edge_at_or_after(fault.t0_ns)
                last = timing.first_edge_at_or_after(fault.end_ns)
            elif isinstance(fault, VoterSet):
                if cell.kind != CellKind.VOTER:
                    raise ValidationError('VoterSet must target a voter cell, got {} cell {}'.format(
                        cell.kind, cell.id))
                self.sets.setdefault(cell.stage, []).append(fault)
                first = timing.first_edge_at_or_after(fault.t0_ns)
                last = timing.first_edge_at_or_after(fault.end_ns + 2 * timing.delta_ns)
            else:
                raise ValidationError('unsupported fault event {!r}'.format(fault))
            busy[min(first, num_edges):min(last + 1, num_edges)] = True

        self.events = sorted(events, key=lambda e: (e.time, e.cell_id, e.stuck_value))
        self.busy = busy
        self.busy_edges = np.flatnonzero(busy).tolist()

    def stuck_active(self, stage, ff, t):
        st = self.stuck.get((stage, ff))
        return st is not None and st.active(t)

    def set_active(self, stage, t):
        return any(w.covers(t) for w in self.sets.get(stage, ()))

    def next_busy(self, k, default):
        i = bisect.bisect_left(self.busy_edges, k)
        return self.busy_edges[i] if i < len(self.busy_edges) else default


class _RegisterSim:
    def __init__(self, layout, timing, compiled, bits, initial_state):
        self.n = layout.stages
        self.timing = timing
        self.faults = compiled
        self.pins = np.concatenate([bits[:1], bits[:-1]])
        fill = bits[0] if InitialState(initial_state) == InitialState.PREFILL else 0
        self.q = np.full((3, self.n), fill, dtype=np.uint8)
        self.clean = True
        self.k = 0

    def samples(self, k):
        """Значения, которые FF1..FF3 каждой ступени видят на своих входах для фронта k (до модификаций)."""
        timing, faults, q = self.timing, self.faults, self.q
        t_k = timing.edge_time(k)
        t_prev = timing.edge_time(k - 1) if k > 0 else -math.inf
        events = [e for e in faults.events if t_prev < e.time <= t_k]
        base = majority(q[0], q[1], q[2])
        sampled = np.empty_like(q)
        for i in range(3):
            tau = t_k - i * timing.delta_ns
            v = base.copy()
            touched = {e.stage for e in events if e.time <= tau}
            touched.update(s for s in faults.sets if faults.set_active(s, tau))
            for s in touched:
                col = q[:, s].copy()
                for e in events:
                    if e.stage != s or e.time > tau:
                        continue
                    if e.is_toggle:
                        if not faults.stuck_active(s, e.ff, e.time):
                            col[e.ff] ^= 1
                    else:
                        col[e.ff] = e.stuck_value
                v[s] = majority(col[0], col[1], col[2]) ^ (1 if faults.set_active(s, tau) else 0)
            sampled[i, 0] = self.pins[k]
            sampled[i, 1:] = v[:-1]
        return sampled

    def step(self):
        k, faults = self.k, self.faults
        t_k = self.timing.edge_time(k)
        captured = self.samples(k)
        for (s, i), upsets in faults.upsets.items():
            if any(u.covers(t_k) for u in upsets):
                captured[i, s] ^= 1
        for (s, i), st in faults.stuck.items():
            if st.active(t_k):
                captured[i, s] = st.value
        self.q = captured
        self.clean = bool(np.array_equal(captured[0], captured[1]) and np.array_equal(captured[1], captured[2]))
        self.k += 1
        return int(majority(captured[0, -1], captured[1, -1], captured[2, -1]))

    def shift(self, until, out):
        """Пачка тихих фронтов k..until-1: чистый сдвиг значений ступеней, выход читается с хвоста."""
        k, n = self.k, self.n
        span = until - k
        ext = np.concatenate([self.pins[k:until][::-1], self.q[0]])
        out[k:until] = ext[n - 1:n - 1 + span][::-1]
        self.q = np.tile(ext[:n], (3, 1))
        self.k = until

    def advance(self, until, out):
        while self.k < until:
            if self.clean and not self.faults.busy[self.k]:
                self.shift(min(self.faults.next_busy(self.k, until), until), out)
            else:
                k = self.k
                out[k] = self.step()


def _check_edges(num_edges):
    if isinstance(num_edges, bool) or not isinstance(num_edges, (int, np.integer)) or num_edges < 1:
        raise ValidationError('num_edges must be a positive integer, got {!r}'.format(num_edges))
    return int(num_edges)


def run(layout, input_stream, timing, faults, num_edges, initial_state=InitialState.PREFILL):
    """Прогон регистра с неисправностями.

    На входе принимает раскладку, поток входных битов, тактирование, список FaultEvent и число
    фронтов. Возвращает OutputTrace: бит k - мажоритар триггеров последней ступени после фронта k.
    Одинаковые входные данные всегда дают побитово одинаковую трассу.

    """

    num_edges = _check_edges(num_edges)
    bits = materialize_stream(input_stream, num_edges)
    compiled = _CompiledFaults(layout, timing, faults, num_edges)
    sim = _RegisterSim(layout, timing, compiled, bits, initial_state)
    out = np.empty(num_edges, dtype=np.uint8)
    sim.advance(num_edges, out)
    logger.debug('run: %d stages, %d edges, %d faults, %d busy edges',
                 layout.stages, num_edges, len(faults), len(compiled.busy_edges))
    return OutputTrace(tuple(out.tolist()), tuple(timing.edge_time(k) for k in range(num_edges)), timing)


def golden_run(layout, input_stream, timing, num_edges, initial_state=InitialState.PREFILL):
    return run(layout, input_stream, timing, (), num_edges, initial_state)


def stage_input_at(layout, input_stream, timing, faults, stage, ff, edge, initial_state=InitialState.PREFILL):
    """Бит, который триггер FF``ff`` (1..3) ступени ``stage`` видит на входе в момент t_edge - (ff-1)·δ."""
    if not 0 <= stage < layout.stages:
        raise ValidationError('stage {} out of range 0..{}'.format(stage, layout.stages - 1))
    if ff not in (1, 2, 3):
        raise ValidationError('ff index must be 1, 2 or 3, got {}'.format(ff))
    if edge < 0:
        raise ValidationError('edge index must be non-negative, got {}'.format(edge))
    bits = materialize_stream(input_stream, edge + 1)
    compiled = _CompiledFaults(layout, timing, faults, edge + 1)
    sim = _RegisterSim(layout, timing, compiled, bits, initial_state)
    sim.advance(edge, np.empty(edge + 1, dtype=np.uint8))
    return int(sim.samples(edge)[ff - 1, stage])


def power_cycle_probe(layout, input_bits, timing, faults, num_edges, initial_state=InitialState.PREFILL):
    """Повторные прогоны для различения залипания и постоянной неисправности.

    rerun - работа без новых засветок: остаются только залипшие триггеры, уже залипшие до первого фронта;
    after_power_cycle - то же после выключения питания: остаются только постоянные (end_of_run).

    """

    bits = materialize_stream(input_bits, num_edges)
    before_start = timing.edge_time(0) - timing.clock_period_ns
    stuck = [replace(f, from_ns=before_start) for f in faults if isinstance(f, StuckState)]
    permanent = [f for f in stuck if f.until == StuckUntil.END_OF_RUN]
    return StuckProbe(
        rerun=run(layout, bits, timing, stuck, num_edges, initial_state),
        after_power_cycle=run(layout, bits, timing, permanent, num_edges, initial_state),
    )
