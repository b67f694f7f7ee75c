"""Result files: output trace CSV, per-shot CSV, summary JSON and the summary table."""

import csv
import json
import logging
import os

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ['edge_index', 'time_ns', 'bit']
SHOT_COLUMNS = ['scenario', 'stage', 'freq_mhz', 'input_bit', 'objective', 'power_pct', 'duration_ns',
                'phase_ns', 'n_faults', 'class', 'burst_len', 'repeatability']


def _ensure_dir(path):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)


def write_trace_csv(trace, path):
    _ensure_dir(path)
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(TRACE_COLUMNS)
        for k, (t, bit) in enumerate(zip(trace.edge_times_ns, trace.bits)):
            writer.writerow([k, repr(float(t)), bit])
    logger.info('trace written to %s', path)


def write_shots_csv(shots, path):
    _ensure_dir(path)
    with open(path, 'w', newline='') as f:
        writer = csv.DictWriter(f, fieldnames=SHOT_COLUMNS)
        writer.writeheader()
        for shot in shots:
            writer.writerow(shot.to_row())
    logger.info('%d shots written to %s', len(shots), path)


def summary_document(summary, repeatable_at, seed=None):
    document = summary.to_dict()
    document['repeatable_at'] = repeatable_at
    if seed is not None:
        document['seed'] = seed
    return document


def write_json(document, path):
    _ensure_dir(path)
    with open(path, 'w') as f:
        json.dump(document, f, indent=2, sort_keys=True)
        f.write('\n')
    logger.info('written %s', path)


def _power(value):
    return '-' if value is None else '{:g}'.format(value)


def render_table(summary, repeatable_at):
    """Сводная таблица в markdown: строка на (сценарий, частота, входной бит, объектив).

    Минимальная мощность помечается сноской ``b``, если хотя бы один сбойный выстрел строки
    воспроизводился реже порога повторяемости.
    """
    lines = [
        '| scenario | freq (MHz) | input | objective | min power (%) | durations (ns) | fault types |',
        '|---|---|---|---|---|---|---|',
    ]
    flagged = False
    for row in summary.rows:
        power = _power(row.min_power)
        if row.repeatability_min is not None and row.repeatability_min < repeatable_at:
            power += ' (b)'
            flagged = True
        durations = ', '.join('{:g}'.format(d) for d in row.faulting_durations) or '-'
        kinds = ', '.join(row.fault_kinds)
        lines.append('| {} | {:g} | \'{}\' | {} | {} | {} | {} |'.format(
            row.scenario, row.frequency_mhz, row.input_bit, row.objective, power, durations, kinds))
    if flagged:
        lines.append('')
        lines.append('(b) results were not repeatable: the same fault pattern was observed in fewer than '
                     '{:g}% of repetitions.'.format(repeatable_at * 100))
    return '\n'.join(lines) + '\n'


def write_table(summary, repeatable_at, path):
    _ensure_dir(path)
    with open(path, 'w') as f:
        f.write(render_table(summary, repeatable_at))
    logger.info('table written to %s', path)
