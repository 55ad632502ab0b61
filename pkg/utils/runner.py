"""
Process Runner
--------------
Runs one external command under a wall-clock budget. The command gets its
own process group so that everything it spawns can be terminated at once;
its combined output goes to a log file, never to a pipe, so a chatty tool
cannot block on a full pipe buffer.
"""

import logging
import os
import signal
import subprocess
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from config.settings import DEFAULT_GRACE_S, POLL_INTERVAL_S

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CommandOutcome:
    returncode: Optional[int]
    output: str
    wall_ms: int
    timed_out: bool = False
    cancelled: bool = False
    spawn_error: Optional[str] = None


def _elapsed_ms(start):
    return int((time.monotonic() - start) * 1000)


def _signal_group(proc, sig):
    try:
        os.killpg(proc.pid, sig)
    except (ProcessLookupError, PermissionError):
        pass


def terminate(proc, grace_s=DEFAULT_GRACE_S):
    """SIGTERM the process group, then SIGKILL whatever is left after ``grace_s``."""
    _signal_group(proc, signal.SIGTERM)
    try:
        proc.wait(timeout=grace_s)
    except subprocess.TimeoutExpired:
        _signal_group(proc, signal.SIGKILL)
        proc.wait()


def run_command(argv, log_path, timeout_s, cancel=None, grace_s=DEFAULT_GRACE_S):
    """
    Run ``argv`` until it exits, the budget expires or ``cancel`` is set.

    Args:
        argv (list[str]): command and arguments
        log_path (Path): file receiving standard output and standard error
        timeout_s (float): wall-clock budget in seconds
        cancel (threading.Event): optional cancellation request
        grace_s (float): time between SIGTERM and SIGKILL

    Returns:
        CommandOutcome: exit status, captured output and how the run ended
    """
    log_path = Path(log_path)
    start = time.monotonic()
    try:
        with open(log_path, 'wb') as log:
            proc = subprocess.Popen(
                argv,
                stdin=subprocess.DEVNULL,
                stdout=log,
                stderr=subprocess.STDOUT,
                start_new_session=True,
            )
    except (OSError, ValueError) as exc:
        logger.warning("could not start %s: %s", argv[0] if argv else '<empty>', exc)
        return CommandOutcome(None, '', _elapsed_ms(start), spawn_error=str(exc))

    deadline = start + max(0.0, timeout_s)
    timed_out = cancelled = False
    while True:
        try:
            proc.wait(timeout=POLL_INTERVAL_S)
            break
        except subprocess.TimeoutExpired:
            pass
        if cancel is not None and cancel.is_set():
            cancelled = True
            break
        if time.monotonic() >= deadline:
            timed_out = True
            break

    if proc.poll() is None:
        logger.debug("terminating %s (pid %d)", argv[0], proc.pid)
        terminate(proc, grace_s)
    output = log_path.read_text(encoding='utf-8', errors='replace')
    return CommandOutcome(proc.returncode, output, _elapsed_ms(start), timed_out, cancelled)
