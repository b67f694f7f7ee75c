"""Attack scenarios as parameter sweeps.

A shot is one (power, duration) grid point of a scenario: the spot is aimed at
the scenario target, the induced faults are simulated against a golden run and
the difference is classified. Every shot is repeated with a fresh clock phase
drawn from a per-shot RNG stream, so serial and parallel campaigns agree bit
for bit.
"""

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from multiprocessing import Pool

import numpy as np
from django.core.exceptions import ValidationError

from .choices import QUIET_KINDS, CellKind, FaultKind, InitialState, PhaseMode, ScenarioKind
from .engine import (
    StuckState, TimingParams, constant_stream, golden_run, materialize_stream, power_cycle_probe, run,
)
from .optics import LaserPulse, induce_faults

logger = logging.getLogger(__name__)


def power_grid(step_pct):
    """Сетка мощностей 0..100 % с шагом step_pct; шаг должен укладываться в 100 целое число раз."""
    count = round(100.0 / step_pct) if step_pct > 0 else 0
    if count < 1 or abs(count * step_pct - 100.0) > 1e-9:
        raise ValidationError('power step must divide 100 %, got {}'.format(step_pct))
    return tuple(float(i * step_pct) for i in range(count + 1))


DEFAULT_POWERS = power_grid(5.0)


@dataclass(frozen=True)
class PhasePolicy:
    """Фаза первого фронта относительно запуска лазера.

    fixed   - всегда ``phase_ns``;
    uniform - равномерно из [phase_ns, phase_ns + jitter_ns), jitter_ns по умолчанию до конца такта.
    """

    mode: str = PhaseMode.FIXED
    phase_ns: float = 0.0
    jitter_ns: float = None
    seed: int = None

    def __post_init__(self):
        object.__setattr__(self, 'mode', PhaseMode(self.mode))
        if self.phase_ns < 0:
            raise ValidationError('phase.phase_ns must be non-negative')
        if self.jitter_ns is not None and not self.jitter_ns > 0:
            raise ValidationError('phase.jitter_ns must be positive')

    def check(self, period):
        if self.phase_ns >= period:
            raise ValidationError('phase.phase_ns {} must be smaller than the clock period {}'.format(
                self.phase_ns, period))
        if self.mode == PhaseMode.UNIFORM and self.phase_ns + self.jitter(period) > period:
            raise ValidationError('phase.phase_ns + jitter_ns must not exceed the clock period {}'.format(period))

    def jitter(self, period):
        return period - self.phase_ns if self.jitter_ns is None else self.jitter_ns

    def draw(self, rng, period, repetitions):
        if self.mode == PhaseMode.FIXED:
            return [self.phase_ns] * repetitions
        upper = np.nextafter(period, 0.0)
        return [min(self.phase_ns + u * self.jitter(period), upper) for u in rng.random(repetitions).tolist()]


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    kind: str
    target_stage: int = 0
    objective: str = '20x'
    powers: tuple = DEFAULT_POWERS
    durations_ns: tuple = (130.0,)
    frequency_mhz: float = 10.0
    input_bit: int = 0
    repetitions: int = 20
    trigger_ns: float = 110.0
    phase: PhasePolicy = field(default_factory=PhasePolicy)
    num_edges: int = None
    center: tuple = None

    def __post_init__(self):
        object.__setattr__(self, 'kind', ScenarioKind(self.kind))
        object.__setattr__(self, 'powers', tuple(float(p) for p in self.powers))
        object.__setattr__(self, 'durations_ns', tuple(float(d) for d in self.durations_ns))
        for name in ('powers', 'durations_ns'):
            grid = getattr(self, name)
            if not grid:
                raise ValidationError('scenario {}: {} must not be empty'.format(self.name, name))
            if list(grid) != sorted(grid) or len(set(grid)) != len(grid):
                raise ValidationError('scenario {}: {} must be sorted ascending without repeats'.format(
                    self.name, name))
        if self.input_bit not in (0, 1):
            raise ValidationError('scenario {}: input_bit must be 0 or 1'.format(self.name))
        if self.repetitions < 1:
            raise ValidationError('scenario {}: repetitions must be at least 1'.format(self.name))
        if self.kind == ScenarioKind.CUSTOM and self.center is None:
            raise ValidationError('scenario {}: custom scenarios need an explicit center'.format(self.name))
        self.phase.check(1000.0 / self.frequency_mhz)

    def validate_for(self, layout):
        if not 0 <= self.target_stage < layout.stages:
            raise ValidationError('scenario {}: target_stage {} out of range 0..{}'.format(
                self.name, self.target_stage, layout.stages - 1))

    def timing(self, delta_ns):
        return TimingParams.from_frequency(self.frequency_mhz, self.phase.phase_ns, delta_ns)

    def edges_needed(self, stages, delta_ns):
        if self.num_edges:
            return int(self.num_edges)
        period = 1000.0 / self.frequency_mhz
        tail = self.trigger_ns + max(self.durations_ns) + 2 * delta_ns
        return stages + int(math.ceil(tail / period)) + 2


@dataclass(frozen=True)
class FaultClass:
    kind: str
    burst_len: int = 0

    def __str__(self):
        return str(FaultKind(self.kind).value)

    @property
    def faulting(self):
        return self.kind not in QUIET_KINDS


@dataclass(frozen=True)
class ShotResult:
    scenario: str
    stage: int
    frequency_mhz: float
    input_bit: int
    objective: str
    power_pct: float
    duration_ns: float
    phase_ns: float
    n_faults: int
    fault_class: FaultClass
    repeatability: float
    key: tuple = ()
    faults: tuple = field(default=(), compare=False)
    trace: object = field(default=None, compare=False)

    def to_row(self):
        return {
            'scenario': self.scenario,
            'stage': self.stage,
            'freq_mhz': self.frequency_mhz,
            'input_bit': self.input_bit,
            'objective': self.objective,
            'power_pct': self.power_pct,
            'duration_ns': self.duration_ns,
            'phase_ns': self.phase_ns,
            'n_faults': self.n_faults,
            'class': str(self.fault_class),
            'burst_len': self.fault_class.burst_len,
            'repeatability': self.repeatability,
        }

    @property
    def sort_key(self):
        return (self.scenario, self.stage, self.frequency_mhz, self.input_bit, self.objective,
                self.duration_ns, self.power_pct)


def resolve_target(spec, layout):
    """Точка прицеливания лазера для сценария."""
    if spec.kind == ScenarioKind.CUSTOM:
        return (float(spec.center[0]), float(spec.center[1]))
    spec.validate_for(layout)
    stage = spec.target_stage
    if spec.kind == ScenarioKind.VOTER_ONLY:
        return layout.stage_cell(stage, CellKind.VOTER).centroid
    if spec.kind == ScenarioKind.TWO_FF:
        ff1 = layout.stage_cell(stage, CellKind.FF1)
        ff2 = layout.stage_cell(stage, CellKind.FF2)
        left, right = (ff1, ff2) if ff1.x <= ff2.x else (ff2, ff1)
        return ((left.x + left.width + right.x) / 2.0, ff1.y + ff1.height / 2.0)
    cells = layout.stage_cells(stage)
    x1 = min(c.x for c in cells)
    y1 = min(c.y for c in cells)
    x2 = max(c.x + c.width for c in cells)
    y2 = max(c.y + c.height for c in cells)
    return ((x1 + x2) / 2.0, (y1 + y2) / 2.0)


def classify(golden, observed, stuck_probe=None, n_faults=None):
    """Классификация наблюдаемой трассы относительно эталонной.

    Совпадающие трассы - Masked (или NoInjection, если импульс не вызвал ни одной неисправности).
    Расхождение, доживающее до конца трассы и не исчезающее при повторном прогоне без засветки -
    StuckAt, а если оно переживает и выключение питания - Permanent. Иначе направление
    расхождений: только 0→1 - TransientBitSet, только 1→0 - TransientBitReset, оба - Mixed.

    """

    diff = observed.diff(golden)
    if not diff:
        return FaultClass(FaultKind.NO_INJECTION if n_faults == 0 else FaultKind.MASKED)
    if stuck_probe is not None and diff[-1][0] == len(golden) - 1 \
            and stuck_probe.rerun.bits != golden.bits:
        if stuck_probe.after_power_cycle.bits != golden.bits:
            return FaultClass(FaultKind.PERMANENT, len(diff))
        return FaultClass(FaultKind.STUCK_AT, len(diff))
    directions = {bit for _, bit in diff}
    if directions == {1}:
        return FaultClass(FaultKind.BIT_SET, len(diff))
    if directions == {0}:
        return FaultClass(FaultKind.BIT_RESET, len(diff))
    return FaultClass(FaultKind.MIXED, len(diff))


def shot_seed(seed, key):
    """Поток ГСЧ выстрела зависит только от глобального зерна и номера выстрела в сетке."""
    return np.random.SeedSequence([int(seed)] + [int(k) for k in key])


def run_shot(spec, power_pct, duration_ns, layout, thresholds, objectives, delta_ns=1.0, seed=0, key=(0, 0, 0),
             extra_faults=(), keep_trace=False, initial_state=InitialState.PREFILL):
    """Один выстрел: прицеливание → неисправности → прогоны с повторами → классификация.

    На входе принимает сценарий, точку сетки (мощность, длительность), раскладку, пороги и
    словарь объективов. Фаза тактирования выбирается заново для каждого из R повторов.
    Повторяемость - доля повторов, чье расхождение с эталоном совпадает с самым частым.
    Возвращает ShotResult.

    """

    try:
        objective = objectives[spec.objective]
    except KeyError:
        raise ValidationError('scenario {}: unknown objective {!r}'.format(spec.name, spec.objective))
    pulse = LaserPulse(resolve_target(spec, layout), objective, power_pct, duration_ns, spec.trigger_ns)
    faults = list(induce_faults(pulse, layout, thresholds)) + list(extra_faults)
    n_faults = len(faults)
    base = spec.timing(delta_ns)
    num_edges = spec.edges_needed(layout.stages, delta_ns)
    bits = materialize_stream(constant_stream(spec.input_bit), num_edges)
    has_stuck = any(isinstance(f, StuckState) for f in faults)

    stream = shot_seed(seed if spec.phase.seed is None else spec.phase.seed, key)
    phases = spec.phase.draw(np.random.default_rng(stream), base.clock_period_ns, spec.repetitions)
    diffs, classes, traces = [], [], []
    for phase in phases:
        timing = base.with_phase(phase)
        golden = golden_run(layout, bits, timing, num_edges, initial_state)
        observed = run(layout, bits, timing, faults, num_edges, initial_state) if faults else golden
        probe = power_cycle_probe(layout, bits, timing, faults, num_edges, initial_state) if has_stuck else None
        diffs.append(observed.diff(golden))
        classes.append(classify(golden, observed, probe, n_faults))
        traces.append(observed)

    modal, count = Counter(diffs).most_common(1)[0]
    chosen = diffs.index(modal)
    result = ShotResult(
        scenario=spec.name, stage=spec.target_stage, frequency_mhz=float(spec.frequency_mhz),
        input_bit=spec.input_bit, objective=spec.objective, power_pct=float(power_pct),
        duration_ns=float(duration_ns), phase_ns=float(phases[chosen]), n_faults=n_faults,
        fault_class=classes[chosen], repeatability=count / len(diffs), key=tuple(key),
        faults=tuple(faults), trace=traces[chosen] if keep_trace else None,
    )
    logger.debug('shot %s p=%.1f d=%.1f: %s x%d, repeatability %.2f', spec.name, power_pct, duration_ns,
                 result.fault_class, result.fault_class.burst_len, result.repeatability)
    return result


@dataclass(frozen=True)
class SummaryRow:
    scenario: str
    frequency_mhz: float
    input_bit: int
    objective: str
    min_power_by_duration: tuple
    fault_kinds: tuple
    repeatability_min: float
    repeatability_mean: float
    n_shots: int
    n_faulting: int

    @property
    def min_power(self):
        found = [p for _, p in self.min_power_by_duration if p is not None]
        return min(found) if found else None

    @property
    def faulting_durations(self):
        return tuple(d for d, p in self.min_power_by_duration if p is not None)

    def to_dict(self):
        return {
            'scenario': self.scenario,
            'freq_mhz': self.frequency_mhz,
            'input_bit': self.input_bit,
            'objective': self.objective,
            'min_power_pct': self.min_power,
            'min_power_by_duration': [{'duration_ns': d, 'min_power_pct': p} for d, p in self.min_power_by_duration],
            'fault_types': list(self.fault_kinds),
            'repeatability_min': self.repeatability_min,
            'repeatability_mean': self.repeatability_mean,
            'n_shots': self.n_shots,
            'n_faulting': self.n_faulting,
        }


@dataclass(frozen=True)
class CampaignSummary:
    rows: tuple
    shots: tuple

    @classmethod
    def from_shots(cls, shots):
        """Свертка результатов выстрелов; не зависит от порядка, в котором выстрелы были выполнены."""
        shots = tuple(sorted(shots, key=lambda s: s.sort_key))
        groups = {}
        for shot in shots:
            groups.setdefault((shot.scenario, shot.frequency_mhz, shot.input_bit, shot.objective), []).append(shot)
        rows = []
        for (scenario, freq, bit, objective), group in sorted(groups.items()):
            by_duration = {}
            for shot in group:
                by_duration.setdefault(shot.duration_ns, None)
                if shot.fault_class.faulting:
                    current = by_duration[shot.duration_ns]
                    by_duration[shot.duration_ns] = shot.power_pct if current is None else min(current, shot.power_pct)
            faulting = [s for s in group if s.fault_class.faulting]
            reps = sorted(s.repeatability for s in faulting)
            rows.append(SummaryRow(
                scenario=scenario, frequency_mhz=freq, input_bit=bit, objective=objective,
                min_power_by_duration=tuple(sorted(by_duration.items())),
                fault_kinds=tuple(sorted({str(s.fault_class) for s in group})),
                repeatability_min=reps[0] if reps else None,
                repeatability_mean=math.fsum(reps) / len(reps) if reps else None,
                n_shots=len(group), n_faulting=len(faulting),
            ))
        return cls(tuple(rows), shots)

    def merge(self, *others):
        shots = list(self.shots)
        for other in others:
            shots.extend(other.shots)
        return CampaignSummary.from_shots(shots)

    def row(self, scenario=None, frequency_mhz=None, input_bit=None, objective=None):
        for r in self.rows:
            if (scenario in (None, r.scenario) and frequency_mhz in (None, r.frequency_mhz)
                    and input_bit in (None, r.input_bit) and objective in (None, r.objective)):
                return r
        return None

    def to_dict(self):
        return {'rows': [r.to_dict() for r in self.rows], 'n_shots': len(self.shots)}


# контекст процесса-исполнителя, заполняется инициализатором пула
_worker = {}


def _init_worker(layout, thresholds, objectives, delta_ns, seed, initial_state):
    _worker.update(layout=layout, thresholds=thresholds, objectives=objectives, delta_ns=delta_ns, seed=seed,
                   initial_state=initial_state)


def _run_task(task):
    spec, power, duration, key = task
    return run_shot(spec, power, duration, _worker['layout'], _worker['thresholds'], _worker['objectives'],
                    _worker['delta_ns'], _worker['seed'], key, initial_state=_worker['initial_state'])


def shot_tasks(specs):
    tasks = []
    for index, spec in enumerate(specs):
        for di, duration in enumerate(spec.durations_ns):
            for pi, power in enumerate(spec.powers):
                tasks.append((spec, power, duration, (index, pi, di)))
    return tasks


def execute_shots(tasks, layout, thresholds, objectives, delta_ns=1.0, seed=0, workers=1,
                  initial_state=InitialState.PREFILL):
    """Выполнение выстрелов последовательно или в пуле процессов; результат упорядочен по номеру выстрела."""
    args = (layout, thresholds, objectives, delta_ns, seed, initial_state)
    if workers <= 1 or len(tasks) < 2:
        _init_worker(*args)
        results = [_run_task(t) for t in tasks]
    else:
        chunk = max(1, len(tasks) // (workers * 4))
        with Pool(workers, initializer=_init_worker, initargs=args) as pool:
            results = pool.map(_run_task, tasks, chunksize=chunk)
    return sorted(results, key=lambda r: r.key)


def run_campaigns(specs, layout, thresholds, objectives, delta_ns=1.0, seed=0, workers=1,
                  initial_state=InitialState.PREFILL):
    for spec in specs:
        spec.validate_for(layout)
        if spec.objective not in objectives:
            raise ValidationError('scenario {}: unknown objective {!r}'.format(spec.name, spec.objective))
    tasks = shot_tasks(specs)
    logger.info('campaign: %d scenarios, %d shots, %d workers', len(specs), len(tasks), workers)
    shots = execute_shots(tasks, layout, thresholds, objectives, delta_ns, seed, workers, initial_state)
    summary = CampaignSummary.from_shots(shots)
    logger.info('campaign done: %d faulting shots', sum(r.n_faulting for r in summary.rows))
    return summary


def run_campaign(spec, layout, thresholds, objectives, delta_ns=1.0, seed=0, workers=1,
                 initial_state=InitialState.PREFILL):
    """Полная сетка мощность × длительность одного сценария."""
    return run_campaigns([spec], layout, thresholds, objectives, delta_ns, seed, workers, initial_state)
