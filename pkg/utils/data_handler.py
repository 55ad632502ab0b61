"""
Data Handling Utilities
----------------------
Functions for loading and saving the files the solver reads and writes:
portfolio configurations, expected-verdict lists, derivation witnesses
and benchmark reports.
"""

import json
from pathlib import Path

import pandas as pd
import yaml

from config.settings import DEFAULT_PORTFOLIO_FILE
from models.errors import InputError, PortfolioConfigError

VERDICTS = ('sat', 'unsat', 'unknown')


def load_portfolio_config(filepath=None):
    """
    Load a portfolio configuration document.

    Args:
        filepath (str): Path to the YAML portfolio file.
                        If None, uses the shipped default portfolio.

    Returns:
        dict: The raw configuration with ``actors`` and ``plans`` sections

    Raises:
        PortfolioConfigError: the file is missing, is not YAML or is not a mapping
    """
    filepath = Path(filepath or DEFAULT_PORTFOLIO_FILE)
    try:
        with open(filepath, 'r', encoding='utf-8') as f:
            config = yaml.safe_load(f)
    except OSError as e:
        raise PortfolioConfigError(f"cannot read portfolio file {filepath}: {e.strerror}")
    except yaml.YAMLError as e:
        raise PortfolioConfigError(f"portfolio file {filepath} is not valid YAML: {e}")

    if not isinstance(config, dict):
        raise PortfolioConfigError(f"portfolio file {filepath} must contain a mapping")
    return config


def load_expected_verdicts(filepath):
    """
    Load the expected verdict of every task.

    The file has one ``task,verdict`` line per task; an optional header
    line ``task,verdict`` is skipped.

    Args:
        filepath (str): Path to the expected-verdict file

    Returns:
        dict: task name -> sat | unsat | unknown

    Raises:
        InputError: unreadable file, unknown verdict word or duplicate task
    """
    try:
        df = pd.read_csv(
            filepath, header=None, names=['task', 'verdict'], dtype=str,
            skipinitialspace=True, keep_default_na=False,
        )
    except pd.errors.EmptyDataError:
        return {}
    except (OSError, pd.errors.ParserError) as e:
        raise InputError(f"cannot read expected verdicts from {filepath}: {e}")

    if len(df) and (df.iloc[0]['task'], df.iloc[0]['verdict']) == ('task', 'verdict'):
        df = df.iloc[1:]
    df = df.assign(task=df['task'].str.strip(), verdict=df['verdict'].str.strip().str.lower())

    bad = df[~df['verdict'].isin(VERDICTS)]
    if len(bad):
        row = bad.iloc[0]
        raise InputError(f"unknown verdict '{row['verdict']}' for task '{row['task']}'")
    duplicated = df[df['task'].duplicated()]
    if len(duplicated):
        raise InputError(f"task '{duplicated.iloc[0]['task']}' listed twice")
    return dict(zip(df['task'], df['verdict']))


def save_expected_verdicts(verdicts, filepath):
    """
    Save expected verdicts as ``task,verdict`` lines sorted by task name.

    Returns:
        str: Path to the saved file
    """
    df = pd.DataFrame(sorted(verdicts.items()), columns=['task', 'verdict'])
    df.to_csv(filepath, index=False, header=False)
    return str(filepath)


def save_derivation(derivation_dict, filepath):
    """
    Save a derivation witness as JSON.

    Returns:
        str: Path to the saved file
    """
    with open(filepath, 'w', encoding='utf-8') as f:
        json.dump(derivation_dict, f, indent=2)
    return str(filepath)


def load_derivation(filepath):
    """Load a derivation witness written by ``save_derivation``."""
    with open(filepath, 'r', encoding='utf-8') as f:
        return json.load(f)


def export_report(rows, summary, filepath=None):
    """
    Render a benchmark report as CSV: the task rows, a blank line, then
    the summary table.

    Args:
        rows (pandas.DataFrame): one row per task
        summary (pandas.DataFrame): aggregated counts
        filepath (str): where to write the report; None only renders it

    Returns:
        str: the report text
    """
    text = rows.to_csv(index=False, lineterminator='\n') + '\n' + summary.to_csv(index=False, lineterminator='\n')
    if filepath is not None:
        with open(filepath, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
    return text
