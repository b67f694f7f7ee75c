"""Laser pulse → cell-level fault events.

Power is kept in the bench's normalised unit (percent of the laser source's
maximum). A cell faults when the effective power it receives reaches the
instantaneous threshold of its class AND effective power × pulse duration
reaches the dose threshold; both comparisons are inclusive.
"""

import logging
from dataclasses import dataclass

from django.core.exceptions import ValidationError

from .choices import BeamProfile, CellKind
from .engine import IllumUpset, VoterSet
from .layout import cell_fraction, cells_hit

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ObjectiveProfile:
    name: str
    spot_diameter_um: float
    profile: str = BeamProfile.UNIFORM
    transmission: float = 1.0
    wavelength_nm: float = None

    def __post_init__(self):
        if not self.spot_diameter_um > 0:
            raise ValidationError('objective {}: spot_diameter_um must be positive'.format(self.name))
        if not 0.0 < self.transmission <= 1.0:
            raise ValidationError('objective {}: transmission must lie in (0, 1]'.format(self.name))
        object.__setattr__(self, 'profile', BeamProfile(self.profile))


# Диаметры пятен и пропускание - допущения: одномодовый лазер после доработки стенда
# накрывает только мажоритар и слабее, 20x - два соседних триггера, 5x - всю ступень TMR-FF.
DEFAULT_OBJECTIVES = (
    ObjectiveProfile('single-mode', 2.0, transmission=0.5, wavelength_nm=808),
    ObjectiveProfile('20x', 15.0, wavelength_nm=1064),
    ObjectiveProfile('5x', 60.0, transmission=0.75, wavelength_nm=1064),
)


@dataclass(frozen=True)
class LaserPulse:
    center: tuple
    objective: ObjectiveProfile
    power_pct: float
    duration_ns: float
    trigger_ns: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.power_pct <= 100.0:
            raise ValidationError('power_pct must lie in [0, 100], got {}'.format(self.power_pct))
        if not self.duration_ns > 0:
            raise ValidationError('duration_ns must be positive, got {}'.format(self.duration_ns))
        if not self.trigger_ns >= 0:
            raise ValidationError('trigger_ns must be non-negative, got {}'.format(self.trigger_ns))
        object.__setattr__(self, 'center', (float(self.center[0]), float(self.center[1])))


@dataclass(frozen=True)
class Threshold:
    theta_power: float = 0.0
    theta_dose: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.theta_power <= 1.0:
            raise ValidationError('theta_power must lie in [0, 1], got {}'.format(self.theta_power))
        if not self.theta_dose >= 0.0:
            raise ValidationError('theta_dose must be non-negative, got {}'.format(self.theta_dose))

    def reached(self, power, duration_ns):
        return power > 0.0 and power >= self.theta_power and power * duration_ns >= self.theta_dose

    def to_dict(self):
        return {'theta_power': self.theta_power, 'theta_dose': self.theta_dose}


@dataclass(frozen=True)
class ThresholdModel:
    ff: Threshold
    voter: Threshold

    def for_kind(self, kind):
        return self.voter if CellKind(kind) == CellKind.VOTER else self.ff

    def to_dict(self):
        return {'ff': self.ff.to_dict(), 'voter': self.voter.to_dict()}

    @classmethod
    def from_dict(cls, data):
        return cls(Threshold(**data['ff']), Threshold(**data['voter']))


def _deliver(pulse, fraction, occlusion):
    # одно выражение на все пути, чтобы калибровка и кампания сравнивали одинаковые числа
    return (pulse.power_pct / 100.0) * pulse.objective.transmission * fraction * (1.0 - occlusion)


def effective_power(pulse, cell, layout):
    """Эффективная мощность, дошедшая до ячейки: доля мощности · пропускание · покрытие · (1 − закрытие)."""
    if not 0 <= cell.id < len(layout.cells) or layout.cells[cell.id] != cell:
        raise ValidationError('cell {} is not part of the layout'.format(cell.id))
    fraction = cell_fraction(cell, pulse.center, pulse.objective.spot_diameter_um, pulse.objective.profile)
    if fraction <= 1e-9:
        return 0.0
    return _deliver(pulse, fraction, cell.occlusion)


def exposures(pulse, layout):
    """Эффективная мощность для всех задетых ячеек: список (cell id, мощность) по возрастанию id."""
    hits = cells_hit(layout, pulse.center, pulse.objective.spot_diameter_um, pulse.objective.profile)
    return [(cell_id, _deliver(pulse, fraction, layout.cells[cell_id].occlusion)) for cell_id, fraction in hits]


def induce_faults(pulse, layout, model):
    """Неисправности, вызванные импульсом.

    Для каждой задетой ячейки, у которой эффективная мощность и доза достигают порогов ее класса,
    создается IllumUpset (триггер) или VoterSet (мажоритар) с окном [trigger, trigger + duration).
    Порядок - по возрастанию id ячейки.

    """

    events = []
    for cell_id, power in exposures(pulse, layout):
        cell = layout.cells[cell_id]
        if not model.for_kind(cell.kind).reached(power, pulse.duration_ns):
            continue
        if cell.kind == CellKind.VOTER:
            events.append(VoterSet(cell_id, pulse.trigger_ns, pulse.duration_ns))
        else:
            events.append(IllumUpset(cell_id, pulse.trigger_ns, pulse.duration_ns))
    logger.debug('pulse at %s, %.1f%%, %.1f ns: %d faults', pulse.center, pulse.power_pct,
                 pulse.duration_ns, len(events))
    return events
