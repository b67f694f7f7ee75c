class CalibrationError(Exception):
    """Ни одна пара порогов не воспроизводит все целевые минимумы мощности.

    Хранит лучшую найденную модель и отчет по невязкам для каждой цели.
    """

    def __init__(self, message, best_model=None, residuals=()):
        super().__init__(message)
        self.best_model = best_model
        self.residuals = list(residuals)


class InvariantViolation(Exception):
    """Нарушение внутреннего инварианта симулятора (ошибка в коде, а не во входных данных)."""
