from time import time

from django.db import models, transaction
from django.utils.text import slugify

from .choices import FaultKind


def gen_slug(s):
    """Функция генерации уникального слага

    На входе принимает название кампании. Создает слаг по названию и времени запуска.
    Возвращает слаг

    """

    new_slug = slugify(s, allow_unicode=True)
    return new_slug + '-' + str(int(time()))


class Campaign(models.Model):
    title = models.CharField(max_length=150, db_index=True)
    slug = models.SlugField(max_length=150, unique=True)
    scenarios = models.CharField(max_length=500, blank=True)
    seed = models.BigIntegerField(default=0)
    config = models.JSONField(default=dict, blank=True)
    date_run = models.DateTimeField(auto_now_add=True)

    def save(self, *args, **kwargs):
        """Переопределение метода save

        Для новой кампании (без id) создается уникальный слаг из названия и времени запуска.

        """

        if not self.id:
            self.slug = gen_slug(self.title)
        super().save(*args, **kwargs)

    @classmethod
    def archive(cls, title, config, summary):
        """Сохранение кампании и всех ее выстрелов одной транзакцией."""
        with transaction.atomic():
            campaign = cls.objects.create(
                title=title, seed=config.seed, config=config.raw,
                scenarios=', '.join(sorted({s.scenario for s in summary.shots})),
            )
            ShotRecord.objects.bulk_create([ShotRecord.from_shot(campaign, shot) for shot in summary.shots])
        return campaign

    def __str__(self):
        return self.title

    class Meta:
        ordering = ['-date_run']


class ShotRecord(models.Model):
    campaign = models.ForeignKey(Campaign, on_delete=models.CASCADE, related_name='shots')
    scenario = models.CharField(max_length=100, db_index=True)
    stage = models.PositiveIntegerField()
    freq_mhz = models.FloatField()
    input_bit = models.PositiveSmallIntegerField()
    objective = models.CharField(max_length=50)
    power_pct = models.FloatField()
    duration_ns = models.FloatField()
    phase_ns = models.FloatField()
    n_faults = models.PositiveIntegerField()
    fault_class = models.CharField(max_length=20, choices=FaultKind.choices)
    burst_len = models.PositiveIntegerField(default=0)
    repeatability = models.FloatField()

    @classmethod
    def from_shot(cls, campaign, shot):
        row = shot.to_row()
        row['fault_class'] = row.pop('class')
        return cls(campaign=campaign, **row)

    def __str__(self):
        return '{} {:g}% {:g} ns: {}'.format(self.scenario, self.power_pct, self.duration_ns, self.fault_class)

    class Meta:
        ordering = ['campaign', 'scenario', 'freq_mhz', 'input_bit', 'objective', 'duration_ns', 'power_pct']
