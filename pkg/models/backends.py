"""
Builtin Backends
----------------
In-process actors that stand in for external verifiers. Each backend
prints the same kind of verdict text an external tool would, so its
result goes through the actor's output patterns like any other actor.

  - ``oracle``: reachability via bounded saturation; an Unsat derivation
    is written to the witness directory as JSON.
  - ``overflow-monitor``: saturation with a runtime Int overflow monitor.
  - ``replay-validator``: checks a derivation witness and replays it under
    the overflow monitor; optionally compiles the forward program and runs
    it on the witness inputs.
"""

import logging
import subprocess
from pathlib import Path

from config.settings import (
    DEFAULT_BV_CAP, DEFAULT_INT_HI, DEFAULT_INT_LO, DEFAULT_MAX_FACTS,
    DEFAULT_MAX_STEPS, REPLAY_ERROR_STATUS, SUPPORTED_INT_C_TYPES,
)
from utils.c_harness import compile_program, run_with_inputs
from utils.data_handler import load_derivation, save_derivation

from .chc import Linearity, classify_linearity
from .codegen import transform_forward
from .errors import ChcError
from .oracle import (
    DomainSpec, Limits, check_derivation, derivation_from_dict,
    derivation_to_dict, replay_inputs, replay_monitored, saturate,
)
from .semantics import IntegerOverflow, OverflowMonitor

logger = logging.getLogger(__name__)

BACKENDS = {}

WITNESS_FILE = 'derivation.json'


def register(name):
    """Register a builtin backend under ``name``."""
    def decorator(fn):
        BACKENDS[name] = fn
        return fn
    return decorator


def _domain(options):
    return DomainSpec(
        int_lo=int(options.get('int_lo', DEFAULT_INT_LO)),
        int_hi=int(options.get('int_hi', DEFAULT_INT_HI)),
        bv_cap=int(options.get('bv_cap', DEFAULT_BV_CAP)),
    )


def _limits(options):
    return Limits(
        max_facts=int(options.get('max_facts', DEFAULT_MAX_FACTS)),
        max_steps=int(options.get('max_steps', DEFAULT_MAX_STEPS)),
    )


def _monitor(task, options):
    bits = options.get('bits', SUPPORTED_INT_C_TYPES[task.opts.int_c_type])
    return OverflowMonitor(int(bits))


@register('oracle')
def oracle_backend(task, options, witness_dir, deadline=None, cancel=None, witness=None):
    verdict = saturate(task.system, _domain(options), _limits(options), deadline, cancel)
    if verdict.status == 'unsat':
        save_derivation(derivation_to_dict(verdict.derivation), Path(witness_dir) / WITNESS_FILE)
        return f"RESULT: FALSE ({verdict.facts} facts)"
    if verdict.status == 'sat':
        return f"RESULT: TRUE ({verdict.facts} facts)"
    return f"RESULT: UNKNOWN ({verdict.reason}{': ' + verdict.detail if verdict.detail else ''})"


@register('overflow-monitor')
def overflow_backend(task, options, witness_dir, deadline=None, cancel=None, witness=None):
    monitor = _monitor(task, options)
    try:
        verdict = saturate(task.system, _domain(options), _limits(options), deadline, cancel, monitor)
    except IntegerOverflow as exc:
        return f"OVERFLOW FOUND: {exc}"
    if verdict.status != 'sat':
        # only a completed fixpoint over a complete domain rules overflow out
        reason = verdict.reason or verdict.status
        return f"OVERFLOW UNDECIDED ({reason}{': ' + verdict.detail if verdict.detail else ''})"
    return f"OVERFLOW-FREE within {monitor.bits}-bit range"


@register('replay-validator')
def replay_validator_backend(task, options, witness_dir, deadline=None, cancel=None, witness=None):
    if witness is None:
        return "VALIDATION: FAILED (no witness)"
    try:
        derivation = derivation_from_dict(load_derivation(witness))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        return f"VALIDATION: FAILED (unreadable witness: {exc})"
    logger.debug("validating %d-step derivation from %s", len(derivation.steps), witness)
    if not check_derivation(task.system, derivation, _domain(options)):
        return "VALIDATION: FAILED (derivation does not check)"
    try:
        replay_monitored(task.system, derivation, _monitor(task, options))
    except IntegerOverflow as exc:
        return f"VALIDATION: OVERFLOW ({exc})"

    if options.get('execute') and classify_linearity(task.system) == Linearity.LINEAR:
        try:
            program = transform_forward(task.system, task.opts)
            executable = compile_program(program, Path(witness_dir) / 'replay')
            status = run_with_inputs(executable, replay_inputs(task.system, derivation))
        except (ChcError, subprocess.TimeoutExpired) as exc:
            return f"VALIDATION: FAILED ({exc})"
        if status != REPLAY_ERROR_STATUS:
            return f"VALIDATION: FAILED (replay ended with status {status})"
    return "VALIDATION: CONFIRMED"
