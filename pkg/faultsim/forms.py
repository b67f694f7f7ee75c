from django import forms
from django.core.exceptions import ValidationError

from .choices import BeamProfile, InitialState, OcclusionMode, PhaseMode, ScenarioKind


class NumberListField(forms.Field):
    """Список чисел из JSON (сетки мощностей и длительностей, координаты центра)."""

    def to_python(self, value):
        if value in self.empty_values:
            return None
        if not isinstance(value, (list, tuple)):
            raise ValidationError('Expected a list of numbers')
        numbers = []
        for item in value:
            if isinstance(item, bool) or not isinstance(item, (int, float)):
                raise ValidationError('Expected a list of numbers, got {!r}'.format(item))
            numbers.append(float(item))
        return numbers


class ObjectField(forms.Field):
    """Вложенный JSON-объект; содержимое проверяет своя форма."""

    def to_python(self, value):
        if value in (None, ''):
            return None
        if not isinstance(value, dict):
            raise ValidationError('Expected an object')
        return value


def _sorted_grid(values, name):
    if values is None:
        return None
    if values != sorted(values) or len(set(values)) != len(values):
        raise ValidationError('{} must be sorted ascending without repeats'.format(name))
    return values


class SectionForm(forms.Form):
    """Форма одной секции конфигурации.

    ``validate`` связывает форму с JSON-объектом и возвращает cleaned_data без незаданных
    необязательных полей. Ошибки собираются в одну ValidationError, каждое сообщение
    начинается с точечного пути поля (``layout.geometry.ff_width_um: ...``).

    """

    @classmethod
    def validate(cls, data, path):
        if not isinstance(data, dict):
            raise ValidationError('{}: expected an object'.format(path))
        unknown = sorted(set(data) - set(cls.base_fields))
        if unknown:
            raise ValidationError('{}: unknown field(s) {}'.format(path, ', '.join(unknown)))
        form = cls(data=data)
        if not form.is_valid():
            messages = []
            for field, errors in form.errors.items():
                where = path if field == '__all__' else '{}.{}'.format(path, field)
                messages.extend('{}: {}'.format(where, error) for error in errors)
            raise ValidationError(messages)
        return {k: v for k, v in form.cleaned_data.items() if k in data and v not in (None, '')}


class LayoutForm(SectionForm):
    stages = forms.IntegerField(min_value=1)
    geometry = ObjectField()
    occlusion = ObjectField(required=False)


class GeometryForm(SectionForm):
    ff_width_um = forms.FloatField(required=False)
    voter_width_um = forms.FloatField(required=False)
    cell_height_um = forms.FloatField(required=False)
    intra_cell_gap_um = forms.FloatField(required=False)
    row_pitch_um = forms.FloatField(required=False)
    stages_per_row = forms.IntegerField(required=False, min_value=1)
    cell_order = forms.JSONField(required=False)

    def clean_cell_order(self):
        order = self.cleaned_data['cell_order']
        if order is not None and not isinstance(order, list):
            raise ValidationError('cell_order must be a list of cell kinds')
        return order


class OcclusionForm(SectionForm):
    mode = forms.ChoiceField(choices=OcclusionMode.choices, required=False)
    value = forms.FloatField(required=False, min_value=0.0, max_value=1.0)
    values = ObjectField(required=False)
    probability = forms.FloatField(required=False, min_value=0.0, max_value=1.0)
    level = forms.FloatField(required=False, min_value=0.0, max_value=1.0)
    seed = forms.IntegerField(required=False, min_value=0)

    def clean_values(self):
        values = self.cleaned_data['values']
        if values is None:
            return None
        cleaned = {}
        for key, v in values.items():
            try:
                cell_id = int(key)
            except (TypeError, ValueError):
                raise ValidationError('values keys must be cell ids, got {!r}'.format(key))
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not 0.0 <= v <= 1.0:
                raise ValidationError('occlusion of cell {} must lie in [0, 1]'.format(cell_id))
            cleaned[cell_id] = float(v)
        return cleaned


class TimingForm(SectionForm):
    delta_ns = forms.FloatField(required=False)
    initial_state = forms.ChoiceField(choices=InitialState.choices, required=False)

    def clean_delta_ns(self):
        delta = self.cleaned_data['delta_ns']
        if delta is not None and not delta > 0:
            raise ValidationError('delta_ns must be strictly positive')
        return delta


class ObjectiveForm(SectionForm):
    name = forms.CharField(max_length=50)
    spot_diameter_um = forms.FloatField()
    profile = forms.ChoiceField(choices=BeamProfile.choices, required=False)
    transmission = forms.FloatField(required=False, max_value=1.0)
    wavelength_nm = forms.FloatField(required=False, min_value=0.0)

    def clean_spot_diameter_um(self):
        diameter = self.cleaned_data['spot_diameter_um']
        if not diameter > 0:
            raise ValidationError('spot_diameter_um must be strictly positive')
        return diameter

    def clean_transmission(self):
        transmission = self.cleaned_data['transmission']
        if transmission is not None and not transmission > 0:
            raise ValidationError('transmission must lie in (0, 1]')
        return transmission


class OpticsForm(SectionForm):
    objectives = forms.JSONField(required=False)
    thresholds = ObjectField(required=False)
    thresholds_file = forms.CharField(required=False)
    targets = forms.JSONField(required=False)

    def clean(self):
        cleaned_data = super().clean()
        if cleaned_data.get('thresholds') and cleaned_data.get('thresholds_file'):
            raise ValidationError('give either thresholds or thresholds_file, not both')
        for name in ('objectives', 'targets'):
            if cleaned_data.get(name) is not None and not isinstance(cleaned_data[name], list):
                self.add_error(name, 'Expected a list')
        return cleaned_data


class ThresholdModelForm(SectionForm):
    ff = ObjectField()
    voter = ObjectField()


class ThresholdForm(SectionForm):
    theta_power = forms.FloatField(min_value=0.0, max_value=1.0)
    theta_dose = forms.FloatField(min_value=0.0)


class TargetForm(SectionForm):
    frequency_mhz = forms.FloatField()
    objective = forms.CharField(max_length=50)
    duration_ns = forms.FloatField()
    min_power_pct = forms.FloatField(min_value=0.0, max_value=100.0)
    input_bit = forms.IntegerField(required=False, min_value=0, max_value=1)

    def clean_frequency_mhz(self):
        frequency = self.cleaned_data['frequency_mhz']
        if not frequency > 0:
            raise ValidationError('frequency_mhz must be strictly positive')
        return frequency

    def clean_duration_ns(self):
        duration = self.cleaned_data['duration_ns']
        if not duration > 0:
            raise ValidationError('duration_ns must be strictly positive')
        return duration


class PhaseForm(SectionForm):
    mode = forms.ChoiceField(choices=PhaseMode.choices, required=False)
    phase_ns = forms.FloatField(required=False, min_value=0.0)
    jitter_ns = forms.FloatField(required=False)
    seed = forms.IntegerField(required=False, min_value=0)


class ScenarioForm(SectionForm):
    name = forms.CharField(max_length=100)
    kind = forms.ChoiceField(choices=ScenarioKind.choices)
    target_stage = forms.IntegerField(required=False, min_value=0)
    objective = forms.CharField(required=False, max_length=50)
    powers = NumberListField(required=False)
    durations_ns = NumberListField(required=False)
    frequency_mhz = forms.FloatField(required=False)
    input_bit = forms.IntegerField(required=False, min_value=0, max_value=1)
    repetitions = forms.IntegerField(required=False, min_value=1)
    trigger_ns = forms.FloatField(required=False, min_value=0.0)
    phase = ObjectField(required=False)
    num_edges = forms.IntegerField(required=False, min_value=1)
    center = NumberListField(required=False)

    def clean_powers(self):
        powers = _sorted_grid(self.cleaned_data['powers'], 'powers')
        if powers is not None and not all(0.0 <= p <= 100.0 for p in powers):
            raise ValidationError('powers must lie in [0, 100]')
        return powers

    def clean_durations_ns(self):
        durations = _sorted_grid(self.cleaned_data['durations_ns'], 'durations_ns')
        if durations is not None and not all(d > 0 for d in durations):
            raise ValidationError('durations_ns must be strictly positive')
        return durations

    def clean_frequency_mhz(self):
        frequency = self.cleaned_data['frequency_mhz']
        if frequency is not None and not frequency > 0:
            raise ValidationError('frequency_mhz must be strictly positive')
        return frequency

    def clean_center(self):
        center = self.cleaned_data['center']
        if center is not None and len(center) != 2:
            raise ValidationError('center must be [x, y]')
        return center

    def clean(self):
        cleaned_data = super().clean()
        if cleaned_data.get('kind') == ScenarioKind.CUSTOM and not cleaned_data.get('center'):
            raise ValidationError('custom scenarios need a center')
        return cleaned_data


class OutputForm(SectionForm):
    directory = forms.CharField(required=False)
    shots_csv = forms.CharField(required=False)
    summary_json = forms.CharField(required=False)
    table_md = forms.CharField(required=False)
    thresholds_json = forms.CharField(required=False)
    layout_json = forms.CharField(required=False)


class RunConfigForm(SectionForm):
    layout = ObjectField()
    timing = ObjectField(required=False)
    optics = ObjectField(required=False)
    scenarios = forms.JSONField(required=False)
    output = ObjectField(required=False)
    seed = forms.IntegerField(required=False, min_value=0)

    def clean_scenarios(self):
        scenarios = self.cleaned_data['scenarios']
        if scenarios is not None and not isinstance(scenarios, list):
            raise ValidationError('Expected a list')
        return scenarios
