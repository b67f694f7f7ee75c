"""Fitting the flip-flop thresholds to measured minimum powers.

Each target is one measured cell of the bench table: the smallest power grid
point at which a frequency / objective / duration / input combination showed a
fault. The fit searches the (theta_power, theta_dose) pairs at which the set of
faulting grid points can change, keeps the pair with the smallest worst-case
residual and then confirms it with simulated shots.
"""

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from django.core.exceptions import ValidationError

from .campaign import DEFAULT_POWERS, PhasePolicy, ScenarioSpec, execute_shots, resolve_target, shot_tasks
from .choices import CellKind, PhaseMode, ScenarioKind
from .exceptions import CalibrationError
from .optics import LaserPulse, Threshold, ThresholdModel, exposures

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CalibrationTarget:
    frequency_mhz: float
    objective: str
    duration_ns: float
    min_power_pct: float
    input_bit: int = 0

    def __post_init__(self):
        if not self.frequency_mhz > 0:
            raise ValidationError('target frequency_mhz must be positive')
        if not self.duration_ns > 0:
            raise ValidationError('target duration_ns must be positive')
        if not 0.0 <= self.min_power_pct <= 100.0:
            raise ValidationError('target min_power_pct must lie in [0, 100]')

    def label(self):
        return '{:g} MHz / {} / {:g} ns / input {}'.format(
            self.frequency_mhz, self.objective, self.duration_ns, self.input_bit)


@dataclass(frozen=True)
class TargetResidual:
    target: CalibrationTarget
    predicted_pct: float
    residual: float

    def to_dict(self):
        return {
            'freq_mhz': self.target.frequency_mhz,
            'objective': self.target.objective,
            'duration_ns': self.target.duration_ns,
            'input_bit': self.target.input_bit,
            'target_pct': self.target.min_power_pct,
            'predicted_pct': self.predicted_pct,
            'residual': None if math.isinf(self.residual) else self.residual,
        }


@dataclass(frozen=True)
class CalibrationResult:
    model: ThresholdModel
    residuals: tuple
    tolerance: float

    @property
    def max_residual(self):
        return max(r.residual for r in self.residuals)

    def to_dict(self):
        return {
            'thresholds': self.model.to_dict(),
            'tolerance_pct': self.tolerance,
            'residuals': [r.to_dict() for r in self.residuals],
        }


def _stage_exposure(pulse, layout):
    """Вторая по величине мощность на триггерах одной ступени, максимум по ступеням.

    Видимая ошибка требует двух сбойных триггеров в одной ступени, а оба условия порога
    монотонны по мощности, поэтому решает второй по величине триггер.
    """
    per_stage = {}
    voters = {}
    for cell_id, power in exposures(pulse, layout):
        cell = layout.cells[cell_id]
        if cell.kind == CellKind.VOTER:
            voters[cell.stage] = power
        else:
            per_stage.setdefault(cell.stage, []).append(power)
    second = [sorted(powers)[-2] for powers in per_stage.values() if len(powers) >= 2]
    return (max(second) if second else 0.0), voters


def _predicted_minima(exposure, voter_fault, powers, duration, theta_power, theta_dose):
    faulting = ((exposure > 0.0) & (exposure >= theta_power) & (exposure * duration >= theta_dose)) | voter_fault
    hit = np.flatnonzero(faulting)
    return powers[hit[0]] if len(hit) else None


def _residual(predicted, target):
    return math.inf if predicted is None else abs(predicted - target.min_power_pct)


class _TargetGrid:
    def __init__(self, target, template, layout, objectives, base_model, powers, delta_ns):
        try:
            objective = objectives[target.objective]
        except KeyError:
            raise ValidationError('calibration target {}: unknown objective {!r}'.format(
                target.label(), target.objective))
        self.target = target
        center = resolve_target(template, layout)
        exposure, voter_fault = [], []
        last_stage = layout.stages - 1
        for power in powers:
            pulse = LaserPulse(center, objective, power, target.duration_ns)
            e2, voters = _stage_exposure(pulse, layout)
            exposure.append(e2)
            # SET на мажоритаре последней ступени не доходит ни до одного захвата
            voter_fault.append(target.duration_ns > 2 * delta_ns and any(
                base_model.voter.reached(p, target.duration_ns)
                for stage, p in voters.items() if stage != last_stage))
        self.exposure = np.array(exposure)
        self.voter_fault = np.array(voter_fault, dtype=bool)

    def minimum(self, powers, theta_power, theta_dose):
        return _predicted_minima(self.exposure, self.voter_fault, powers, self.target.duration_ns,
                                 theta_power, theta_dose)


def _candidates(grids):
    theta_power = {0.0}
    theta_dose = {0.0, math.inf}
    for grid in grids:
        for e in grid.exposure.tolist():
            if e > 0.0:
                theta_power.add(e)
                theta_dose.add(e * grid.target.duration_ns)
    return sorted(t for t in theta_power if t <= 1.0), sorted(theta_dose)


def search_thresholds(grids, powers):
    """Перебор пар порогов; ключ выбора - (макс. невязка, сумма невязок, theta_power, theta_dose)."""
    theta_powers, theta_doses = _candidates(grids)
    best, best_key = None, None
    for tp in theta_powers:
        for td in theta_doses:
            residuals = [_residual(g.minimum(powers, tp, td), g.target) for g in grids]
            key = (max(residuals), math.fsum(residuals) if all(map(math.isfinite, residuals)) else math.inf, tp, td)
            if best_key is None or key < best_key:
                best, best_key = (tp, td), key
    logger.debug('searched %d x %d threshold pairs, best %s', len(theta_powers), len(theta_doses), best_key)
    return best


def _verify(model, targets, template, layout, objectives, powers, delta_ns, seed):
    """Минимумы мощности по результатам настоящих выстрелов (фиксированная фаза, один повтор)."""
    specs = [replace(template, name='calibration', objective=t.objective, powers=tuple(powers),
                     durations_ns=(t.duration_ns,), frequency_mhz=t.frequency_mhz, input_bit=t.input_bit,
                     repetitions=1, num_edges=None,
                     phase=PhasePolicy(PhaseMode.FIXED, template.phase.phase_ns))
             for t in targets]
    shots = execute_shots(shot_tasks(specs), layout, model, objectives, delta_ns, seed)
    minima = [None] * len(targets)
    for shot in shots:
        index = shot.key[0]
        if shot.fault_class.faulting and (minima[index] is None or shot.power_pct < minima[index]):
            minima[index] = shot.power_pct
    return minima


def calibrate(targets, layout, objectives, base_model, template=None, powers=DEFAULT_POWERS, delta_ns=1.0,
              tolerance=None, seed=0, verify=True):
    """Подбор порогов триггеров под измеренные минимумы мощности.

    На входе принимает список CalibrationTarget, раскладку, словарь объективов, исходную модель
    (пороги мажоритара берутся из нее без изменений) и шаблон сценария, задающий точку
    прицеливания и момент запуска. Допуск по умолчанию - один шаг сетки мощности.
    Возвращает CalibrationResult; если лучшая пара промахивается хотя бы по одной цели больше,
    чем на допуск, бросает CalibrationError с отчетом по невязкам.

    """

    targets = list(targets)
    if not targets:
        raise ValidationError('calibration needs at least one target')
    powers = np.array(sorted(float(p) for p in powers))
    if tolerance is None:
        tolerance = float(np.min(np.diff(powers))) if len(powers) > 1 else 0.0
    template = template or ScenarioSpec('calibration', ScenarioKind.TWO_FF, trigger_ns=25.0)
    if len({t.duration_ns for t in targets}) < 2:
        logger.warning('calibration targets span fewer than two durations: theta_power and theta_dose '
                       'cannot be separated, the fit is underdetermined')

    grids = [_TargetGrid(t, template, layout, objectives, base_model, powers, delta_ns) for t in targets]
    theta_power, theta_dose = search_thresholds(grids, powers)
    model = ThresholdModel(Threshold(theta_power, theta_dose), base_model.voter)

    if verify:
        minima = _verify(model, targets, template, layout, objectives, powers, delta_ns, seed)
    else:
        minima = [g.minimum(powers, theta_power, theta_dose) for g in grids]
    residuals = tuple(TargetResidual(t, None if m is None else float(m), _residual(m, t))
                      for t, m in zip(targets, minima))
    result = CalibrationResult(model, residuals, tolerance)
    for r in residuals:
        logger.info('target %s: measured %.1f%%, simulated %s, residual %s', r.target.label(),
                    r.target.min_power_pct, r.predicted_pct, r.residual)
    if result.max_residual > tolerance + 1e-9:
        raise CalibrationError(
            'no threshold pair reproduces every target within {:g}%: worst residual {}'.format(
                tolerance, result.max_residual),
            best_model=model, residuals=residuals)
    logger.info('calibrated ff thresholds: theta_power=%r theta_dose=%r', theta_power, theta_dose)
    return result
