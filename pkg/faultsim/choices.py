from django.db import models


class CellKind(models.TextChoices):
    FF1 = 'FF1', 'flip-flop 1'
    FF2 = 'FF2', 'flip-flop 2 (skew δ)'
    FF3 = 'FF3', 'flip-flop 3 (skew 2δ)'
    VOTER = 'VOTER', 'majority voter'


# порядок ячеек внутри ступени задает их идентификаторы: id = 4 * stage + KIND_INDEX[kind]
KIND_INDEX = {
    CellKind.FF1: 0,
    CellKind.FF2: 1,
    CellKind.FF3: 2,
    CellKind.VOTER: 3,
}

FF_KINDS = (CellKind.FF1, CellKind.FF2, CellKind.FF3)


class OcclusionMode(models.TextChoices):
    UNIFORM = 'uniform'
    MAP = 'map'
    BERNOULLI = 'bernoulli'


class BeamProfile(models.TextChoices):
    UNIFORM = 'uniform'
    GAUSSIAN = 'gaussian'


class ScenarioKind(models.TextChoices):
    VOTER_ONLY = 'voter_only', 'Scenario1: voter only'
    TWO_FF = 'two_ff', 'Scenario2: FF1 and FF2'
    WHOLE_CELL = 'whole_cell', 'Scenario3: whole TMR-FF'
    CUSTOM = 'custom', 'explicit spot center'


class PhaseMode(models.TextChoices):
    FIXED = 'fixed'
    UNIFORM = 'uniform'


class FaultKind(models.TextChoices):
    NO_INJECTION = 'NoInjection'
    MASKED = 'Masked'
    BIT_SET = 'TransientBitSet'
    BIT_RESET = 'TransientBitReset'
    STUCK_AT = 'StuckAt'
    PERMANENT = 'Permanent'
    MIXED = 'Mixed'


QUIET_KINDS = (FaultKind.NO_INJECTION, FaultKind.MASKED)


class StuckUntil(models.TextChoices):
    RESET = 'reset', 'stuck-at (cleared by power cycle)'
    END_OF_RUN = 'end_of_run', 'permanent'


class InitialState(models.TextChoices):
    PREFILL = 'prefill'
    ZERO = 'zero'
