"""Netlist and physical placement of an N-stage TMR shift register.

Every stage (TMR-FF) is one row segment of four standard cells: FF1, FF2,
FF3 and the voter, placed left to right in ``GeometryParams.cell_order``.
Stages fill a row left to right and wrap after ``stages_per_row``.

Default cell dimensions are plausible standard-cell magnitudes for a 130 nm
library. They are assumptions, every one is configurable.
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from functools import cached_property

import numpy as np
from django.core.exceptions import ValidationError

from .choices import FF_KINDS, KIND_INDEX, BeamProfile, CellKind, OcclusionMode

logger = logging.getLogger(__name__)

DEFAULT_CELL_ORDER = (CellKind.FF1, CellKind.FF2, CellKind.FF3, CellKind.VOTER)

# доли ниже этого порога считаются нулевыми (гауссов профиль нигде не обращается в ноль)
MIN_FRACTION = 1e-9


@dataclass(frozen=True)
class GeometryParams:
    ff_width_um: float = 10.0
    voter_width_um: float = 6.0
    cell_height_um: float = 3.9
    intra_cell_gap_um: float = 0.5
    row_pitch_um: float = 20.0
    stages_per_row: int = 32
    cell_order: tuple = DEFAULT_CELL_ORDER

    def __post_init__(self):
        object.__setattr__(self, 'cell_order', tuple(CellKind(k) for k in self.cell_order))
        self.validate()

    def validate(self):
        for name in ('ff_width_um', 'voter_width_um', 'cell_height_um',
                     'intra_cell_gap_um', 'row_pitch_um', 'stages_per_row'):
            value = getattr(self, name)
            if not value > 0:
                raise ValidationError('geometry.{} must be strictly positive, got {}'.format(name, value))
        if int(self.stages_per_row) != self.stages_per_row:
            raise ValidationError('geometry.stages_per_row must be an integer')
        if sorted(self.cell_order) != sorted(DEFAULT_CELL_ORDER):
            raise ValidationError('geometry.cell_order must list FF1, FF2, FF3 and VOTER exactly once')
        if self.row_pitch_um < self.cell_height_um:
            raise ValidationError('geometry.row_pitch_um must not be smaller than cell_height_um')

    def width_of(self, kind):
        return self.voter_width_um if kind == CellKind.VOTER else self.ff_width_um

    @property
    def stage_pitch_um(self):
        return 3 * self.ff_width_um + self.voter_width_um + 4 * self.intra_cell_gap_um

    def to_dict(self):
        data = asdict(self)
        data['cell_order'] = [str(k.value) for k in self.cell_order]
        return data


@dataclass(frozen=True)
class OcclusionSpec:
    """Закрытие ячеек металлическими заполнителями.

    uniform   - одна и та же доля ``value`` для всех ячеек;
    map       - явные значения ``values`` по id ячейки, остальные получают ``value``;
    bernoulli - псевдослучайная маска: с вероятностью ``probability`` ячейка получает ``level``,
                иначе ``value``; маска полностью определяется ``seed``.
    """

    mode: str = OcclusionMode.UNIFORM
    value: float = 0.0
    values: dict = field(default_factory=dict)
    probability: float = 0.0
    level: float = 1.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'mode', OcclusionMode(self.mode))
        object.__setattr__(self, 'values', {int(k): float(v) for k, v in self.values.items()})
        for name in ('value', 'level', 'probability'):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValidationError('occlusion.{} must be within [0, 1]'.format(name))
        for cell_id, v in self.values.items():
            if not 0.0 <= v <= 1.0:
                raise ValidationError('occlusion.values[{}] must be within [0, 1]'.format(cell_id))

    def assign(self, n_cells):
        occ = np.full(n_cells, self.value, dtype=float)
        if self.mode == OcclusionMode.MAP:
            for cell_id, v in self.values.items():
                if not 0 <= cell_id < n_cells:
                    raise ValidationError('occlusion.values references unknown cell {}'.format(cell_id))
                occ[cell_id] = v
        elif self.mode == OcclusionMode.BERNOULLI:
            rng = np.random.default_rng(self.seed)
            occ[rng.random(n_cells) < self.probability] = self.level
        return occ


@dataclass(frozen=True)
class Cell:
    id: int
    stage: int
    kind: str
    x: float
    y: float
    width: float
    height: float
    occlusion: float = 0.0

    @property
    def rect(self):
        return (self.x, self.y, self.width, self.height)

    @property
    def area(self):
        return self.width * self.height

    @property
    def centroid(self):
        return (self.x + self.width / 2.0, self.y + self.height / 2.0)

    @property
    def is_ff(self):
        return self.kind in FF_KINDS

    @property
    def ff_index(self):
        """Номер триггера 0..2 (FF1..FF3) внутри ступени."""
        return KIND_INDEX[CellKind(self.kind)]

    def to_dict(self):
        return {
            'id': self.id, 'stage': self.stage, 'kind': str(CellKind(self.kind).value),
            'x': self.x, 'y': self.y, 'w': self.width, 'h': self.height,
            'occlusion': self.occlusion,
        }


@dataclass(frozen=True)
class RegisterLayout:
    stages: int
    cells: tuple
    geometry: GeometryParams

    def __post_init__(self):
        if len(self.cells) != 4 * self.stages:
            raise ValidationError('layout must hold 4 cells per stage, got {} for {} stages'.format(
                len(self.cells), self.stages))
        for position, cell in enumerate(self.cells):
            if cell.id != position:
                raise ValidationError('cell ids must be 0..{} in order, got {} at {}'.format(
                    len(self.cells) - 1, cell.id, position))

    def cell(self, cell_id):
        if not 0 <= cell_id < len(self.cells):
            raise ValidationError('unknown cell_id {}'.format(cell_id))
        return self.cells[cell_id]

    def stage_cell(self, stage, kind):
        if not 0 <= stage < self.stages:
            raise ValidationError('stage {} out of range 0..{}'.format(stage, self.stages - 1))
        return self.cells[4 * stage + KIND_INDEX[CellKind(kind)]]

    def stage_cells(self, stage):
        return self.cells[4 * stage:4 * stage + 4]

    @property
    def ff_count(self):
        return sum(1 for c in self.cells if c.is_ff)

    @property
    def voter_count(self):
        return sum(1 for c in self.cells if c.kind == CellKind.VOTER)

    @cached_property
    def rects(self):
        """Массив (n, 4): x1, y1, x2, y2 всех ячеек, для векторного отбора кандидатов."""
        return np.array([(c.x, c.y, c.x + c.width, c.y + c.height) for c in self.cells], dtype=float)

    def bounding_box(self):
        r = self.rects
        return (r[:, 0].min(), r[:, 1].min(), r[:, 2].max(), r[:, 3].max())

    def translated(self, dx, dy):
        cells = tuple(Cell(c.id, c.stage, c.kind, c.x + dx, c.y + dy, c.width, c.height, c.occlusion)
                      for c in self.cells)
        return RegisterLayout(self.stages, cells, self.geometry)

    def with_occlusion(self, occlusion_by_id):
        cells = tuple(Cell(c.id, c.stage, c.kind, c.x, c.y, c.width, c.height,
                           float(occlusion_by_id.get(c.id, c.occlusion)))
                      for c in self.cells)
        return RegisterLayout(self.stages, cells, self.geometry)

    def to_dict(self):
        return {
            'stages': self.stages,
            'geometry': self.geometry.to_dict(),
            'cells': [c.to_dict() for c in self.cells],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, data):
        geometry = GeometryParams(**data['geometry'])
        cells = tuple(Cell(int(c['id']), int(c['stage']), CellKind(c['kind']), float(c['x']), float(c['y']),
                           float(c['w']), float(c['h']), float(c['occlusion']))
                      for c in data['cells'])
        return cls(int(data['stages']), cells, geometry)


def build_register(stages, geometry=None, occlusion_spec=None):
    """Построение раскладки регистра из ``stages`` ступеней TMR-FF.

    На входе принимает число ступеней, геометрию ячеек и описание металлических заполнителей.
    Ступени заполняют строку слева направо и переносятся на следующую строку через
    ``stages_per_row`` ступеней. Возвращает неизменяемый RegisterLayout из 4·stages ячеек.

    """

    if isinstance(stages, bool) or not isinstance(stages, (int, np.integer)) or stages < 1:
        raise ValidationError('stages must be a positive integer, got {!r}'.format(stages))
    geometry = geometry or GeometryParams()
    occlusion_spec = occlusion_spec or OcclusionSpec()
    stages = int(stages)

    offsets = {}
    x = 0.0
    for kind in geometry.cell_order:
        offsets[kind] = x
        x += geometry.width_of(kind) + geometry.intra_cell_gap_um

    occ = occlusion_spec.assign(4 * stages)
    cells = []
    for stage in range(stages):
        row, col = divmod(stage, int(geometry.stages_per_row))
        x0 = col * geometry.stage_pitch_um
        y0 = row * geometry.row_pitch_um
        for kind in DEFAULT_CELL_ORDER:
            cell_id = 4 * stage + KIND_INDEX[kind]
            cells.append(Cell(cell_id, stage, kind, x0 + offsets[kind], y0,
                              geometry.width_of(kind), geometry.cell_height_um, float(occ[cell_id])))
    logger.debug('built register: %d stages, %d cells', stages, len(cells))
    return RegisterLayout(stages, tuple(cells), geometry)


def _chord_integral(x, r):
    # первообразная sqrt(r^2 - x^2)
    x = min(max(x, -r), r)
    return 0.5 * (x * math.sqrt(max(r * r - x * x, 0.0)) + r * r * math.asin(x / r))


def disk_rect_area(r, x1, y1, x2, y2):
    """Точная площадь пересечения круга радиуса r с центром в начале координат и прямоугольника.

    Интервал по x разбивается в точках, где граница круга пересекает y1 и y2; на каждом
    куске подынтегральная длина хорды имеет постоянный вид и интегрируется аналитически.

    """

    lo, hi = max(x1, -r), min(x2, r)
    if lo >= hi or y1 >= y2:
        return 0.0
    breaks = {lo, hi}
    for y in (y1, y2):
        if abs(y) < r:
            xb = math.sqrt(r * r - y * y)
            for b in (-xb, xb):
                if lo < b < hi:
                    breaks.add(b)
    points = sorted(breaks)
    area = 0.0
    for a, b in zip(points, points[1:]):
        mid = 0.5 * (a + b)
        h = math.sqrt(max(r * r - mid * mid, 0.0))
        if min(y2, h) - max(y1, -h) <= 0.0:
            continue
        arc = _chord_integral(b, r) - _chord_integral(a, r)
        width = b - a
        top = arc if y2 >= h else y2 * width
        bottom = -arc if y1 <= -h else y1 * width
        area += top - bottom
    return area


def _gaussian_integral(a, b, w):
    # интеграл exp(-2u^2/w^2) от a до b
    k = math.sqrt(2.0) / w
    return w * math.sqrt(math.pi / 8.0) * (math.erf(k * b) - math.erf(k * a))


def cell_fraction(cell, center, diameter, profile=BeamProfile.UNIFORM):
    """Доля ячейки под пятном: площадь пересечения (uniform) или средняя интенсивность (gaussian)."""
    cx, cy = center
    x1, y1 = cell.x - cx, cell.y - cy
    x2, y2 = x1 + cell.width, y1 + cell.height
    if profile == BeamProfile.GAUSSIAN:
        w = diameter / 2.0
        covered = _gaussian_integral(x1, x2, w) * _gaussian_integral(y1, y2, w)
    else:
        covered = disk_rect_area(diameter / 2.0, x1, y1, x2, y2)
    return min(max(covered / cell.area, 0.0), 1.0)


def cells_hit(layout, center, diameter, profile=BeamProfile.UNIFORM):
    """Ячейки, задетые пятном: список (cell id, доля) по возрастанию id, нулевые доли опущены."""
    if not diameter > 0:
        raise ValidationError('spot diameter must be strictly positive, got {}'.format(diameter))
    cx, cy = center
    reach = diameter / 2.0 if profile != BeamProfile.GAUSSIAN else 2.0 * diameter
    r = layout.rects
    near = np.flatnonzero((r[:, 0] < cx + reach) & (r[:, 2] > cx - reach)
                          & (r[:, 1] < cy + reach) & (r[:, 3] > cy - reach))
    hits = []
    for cell_id in near:
        fraction = cell_fraction(layout.cells[cell_id], center, diameter, profile)
        if fraction > MIN_FRACTION:
            hits.append((int(cell_id), fraction))
    return hits
