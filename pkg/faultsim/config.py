"""Experiment configuration: one JSON file fully describes a run."""

import json
import logging
import os
from dataclasses import dataclass, field

from django.conf import settings
from django.core.exceptions import ValidationError

from .calibration import CalibrationTarget
from .campaign import PhasePolicy, ScenarioSpec, power_grid
from .choices import InitialState
from .forms import (
    GeometryForm, LayoutForm, ObjectiveForm, OcclusionForm, OpticsForm, OutputForm, PhaseForm, RunConfigForm,
    ScenarioForm, TargetForm, ThresholdForm, ThresholdModelForm, TimingForm,
)
from .layout import GeometryParams, OcclusionSpec, build_register
from .optics import DEFAULT_OBJECTIVES, ObjectiveProfile, Threshold, ThresholdModel

logger = logging.getLogger(__name__)

OUTPUT_DEFAULTS = {
    'directory': 'output',
    'shots_csv': 'shots.csv',
    'summary_json': 'summary.json',
    'table_md': 'table.md',
    'thresholds_json': 'thresholds.json',
    'layout_json': 'layout.json',
}


@dataclass(frozen=True)
class OutputPaths:
    directory: str
    shots_csv: str
    summary_json: str
    table_md: str
    thresholds_json: str
    layout_json: str

    def path(self, name):
        return os.path.join(self.directory, getattr(self, name))


@dataclass(frozen=True)
class RunConfig:
    source: str
    raw: dict
    layout: object
    delta_ns: float
    initial_state: str
    objectives: dict
    thresholds: object
    targets: tuple
    scenarios: tuple
    output: OutputPaths
    seed: int
    base_dir: str = field(default='.', compare=False)

    def scenario(self, name=None):
        if not self.scenarios:
            raise ValidationError('scenarios: the config defines no scenario')
        if name is None:
            return self.scenarios[0]
        for spec in self.scenarios:
            if spec.name == name:
                return spec
        raise ValidationError('scenarios: no scenario named {!r}'.format(name))

    def require_thresholds(self):
        if self.thresholds is None:
            raise ValidationError('optics.thresholds: required (inline, thresholds_file or --thresholds)')
        return self.thresholds


def _resolve(base_dir, path):
    return path if os.path.isabs(path) else os.path.join(base_dir, path)


def read_json(path, what='config'):
    try:
        with open(path) as f:
            return json.load(f)
    except OSError as e:
        raise ValidationError('{}: cannot read {}: {}'.format(what, path, e.strerror))
    except json.JSONDecodeError as e:
        raise ValidationError('{}: {} is not valid JSON: {}'.format(what, path, e))


def load_thresholds(path):
    """Пороги из файла: либо {ff, voter}, либо результат калибровки с ключом thresholds."""
    data = read_json(path, 'thresholds_file')
    if isinstance(data, dict) and 'thresholds' in data:
        data = data['thresholds']
    return parse_thresholds(data, 'thresholds_file')


def parse_thresholds(data, path):
    cleaned = ThresholdModelForm.validate(data, path)
    return ThresholdModel(
        Threshold(**ThresholdForm.validate(cleaned['ff'], path + '.ff')),
        Threshold(**ThresholdForm.validate(cleaned['voter'], path + '.voter')),
    )


def _build_layout(data):
    cleaned = LayoutForm.validate(data, 'layout')
    geometry = GeometryParams(**GeometryForm.validate(cleaned['geometry'], 'layout.geometry'))
    occlusion = OcclusionSpec(**OcclusionForm.validate(cleaned.get('occlusion', {}), 'layout.occlusion'))
    return build_register(cleaned['stages'], geometry, occlusion)


def _objectives(items):
    if items is None:
        return {o.name: o for o in DEFAULT_OBJECTIVES}
    objectives = {}
    for i, item in enumerate(items):
        objective = ObjectiveProfile(**ObjectiveForm.validate(item, 'optics.objectives[{}]'.format(i)))
        if objective.name in objectives:
            raise ValidationError('optics.objectives[{}]: duplicate name {!r}'.format(i, objective.name))
        objectives[objective.name] = objective
    return objectives


def _scenario(item, index, layout, objectives):
    path = 'scenarios[{}]'.format(index)
    cleaned = ScenarioForm.validate(item, path)
    phase = PhasePolicy(**PhaseForm.validate(cleaned.pop('phase', {}), path + '.phase'))
    cleaned.setdefault('repetitions', settings.FAULTLAB['REPETITIONS'])
    cleaned.setdefault('powers', power_grid(settings.FAULTLAB['POWER_STEP_PCT']))
    for name in ('powers', 'durations_ns', 'center'):
        if name in cleaned:
            cleaned[name] = tuple(cleaned[name])
    spec = ScenarioSpec(phase=phase, **cleaned)
    spec.validate_for(layout)
    if spec.objective not in objectives:
        raise ValidationError('{}.objective: unknown objective {!r}'.format(path, spec.objective))
    return spec


def parse_config(data, source='<config>', base_dir='.'):
    """Разбор и проверка конфигурации эксперимента.

    На входе принимает словарь, прочитанный из JSON. Каждая секция проверяется своей формой,
    перекрестные ссылки (имена объективов, номера ступеней) - после построения раскладки.
    Возвращает RunConfig или бросает ValidationError с путем до ошибочного поля.

    """

    cleaned = RunConfigForm.validate(data, 'config')
    layout = _build_layout(cleaned['layout'])
    timing = TimingForm.validate(cleaned.get('timing', {}), 'timing')
    optics = OpticsForm.validate(cleaned.get('optics', {}), 'optics')
    objectives = _objectives(optics.get('objectives'))

    thresholds = None
    if 'thresholds' in optics:
        thresholds = parse_thresholds(optics['thresholds'], 'optics.thresholds')
    elif 'thresholds_file' in optics:
        thresholds = load_thresholds(_resolve(base_dir, optics['thresholds_file']))

    targets = []
    for i, item in enumerate(optics.get('targets', [])):
        target = CalibrationTarget(**TargetForm.validate(item, 'optics.targets[{}]'.format(i)))
        if target.objective not in objectives:
            raise ValidationError('optics.targets[{}].objective: unknown objective {!r}'.format(i, target.objective))
        targets.append(target)

    scenarios = [_scenario(item, i, layout, objectives) for i, item in enumerate(cleaned.get('scenarios', []))]
    names = [s.name for s in scenarios]
    if len(set(names)) != len(names):
        raise ValidationError('scenarios: names must be unique')

    output = dict(OUTPUT_DEFAULTS, **OutputForm.validate(cleaned.get('output', {}), 'output'))
    output['directory'] = _resolve(base_dir, output['directory'])

    seed = cleaned.get('seed', settings.FAULTLAB['SEED'])
    if 'FAULTLAB_SEED' in os.environ:
        seed = settings.FAULTLAB['SEED']

    config = RunConfig(
        source=source, raw=data, layout=layout,
        delta_ns=timing.get('delta_ns', settings.FAULTLAB['DELTA_NS']),
        initial_state=InitialState(timing.get('initial_state', InitialState.PREFILL)),
        objectives=objectives, thresholds=thresholds, targets=tuple(targets), scenarios=tuple(scenarios),
        output=OutputPaths(**output), seed=seed, base_dir=base_dir,
    )
    logger.debug('config %s: %d stages, %d scenarios, %d targets', source, layout.stages, len(scenarios),
                 len(targets))
    return config


def load_config(path):
    data = read_json(path)
    return parse_config(data, source=path, base_dir=os.path.dirname(os.path.abspath(path)))
