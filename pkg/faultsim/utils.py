import logging

from django.conf import settings
from django.core.exceptions import ValidationError
from django.core.management.base import CommandError

from .config import load_config
from .exceptions import CalibrationError, InvariantViolation

logger = logging.getLogger(__name__)

EXIT_VALIDATION = 2
EXIT_CALIBRATION = 3
EXIT_INVARIANT = 4


def error_text(error):
    return '; '.join(error.messages) if isinstance(error, ValidationError) else str(error)


class ConfigCommandMixin:
    """Миксин команд, работающих с файлом конфигурации эксперимента"""

    help_config = 'path to the experiment config (JSON)'

    def add_arguments(self, parser):
        parser.add_argument('config', help=self.help_config)
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def handle(self, *args, **options):
        """Метод, выполняющий команду.

        Загружает конфигурацию и передает ее в run_command. Ошибки предметной области переводятся
        в CommandError с кодом возврата: 2 - ошибка данных, 3 - калибровка невозможна,
        4 - нарушение внутреннего инварианта.

        """

        try:
            config = load_config(options.pop('config'))
            return self.run_command(config, **options)
        except ValidationError as e:
            raise CommandError(error_text(e), returncode=EXIT_VALIDATION)
        except CalibrationError as e:
            self.stderr.write(self.residual_report(e.residuals))
            raise CommandError(str(e), returncode=EXIT_CALIBRATION)
        except InvariantViolation as e:
            logger.exception('internal invariant violated')
            raise CommandError(str(e), returncode=EXIT_INVARIANT)

    def run_command(self, config, **options):
        raise NotImplementedError

    def workers(self, options):
        workers = options.get('workers')
        workers = settings.FAULTLAB['WORKERS'] if workers is None else workers
        if workers < 1:
            raise ValidationError('--workers must be at least 1')
        return workers

    @staticmethod
    def residual_report(residuals):
        lines = ['{:<34} {:>8} {:>10} {:>9}'.format('target', 'measured', 'simulated', 'residual')]
        for r in residuals:
            simulated = '-' if r.predicted_pct is None else '{:g}'.format(r.predicted_pct)
            lines.append('{:<34} {:>8g} {:>10} {:>9g}'.format(
                r.target.label(), r.target.min_power_pct, simulated, r.residual))
        return '\n'.join(lines)
