"""
Verifier Portfolio
------------------
Runs verifier actors on the emitted C program and turns their answers
into a CHC verdict.

A plan is an ordered list of stages. Each stage fixes an encoding and a
theory route, runs its reachability group in parallel (first definitive
answer wins) and then applies the route's gate:

  - LIA (and Core): a safe program only means sat when the overflow group
    reports no overflow; an unsafe program only means unsat when the
    validator confirms the violation witness without overflow.
  - BV: the reachability answer maps directly onto the verdict.

The first stage with a definitive verdict ends the run. Every stage is
recorded in the provenance log, from which the verdict can be replayed.
"""

import logging
import re
import shlex
import shutil
import tempfile
import threading
import time
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from config.settings import (
    DEFAULT_GRACE_S, DEFAULT_PORTFOLIO_FILE, DEFAULT_STAGE_FRACTION, SCRATCH_DIR,
)
from utils.data_handler import load_portfolio_config
from utils.runner import run_command

from .backends import BACKENDS
from .chc import Linearity, TheoryKind, classify_linearity
from .codegen import EmitOptions, Encoding, transform
from .errors import PlanTheoryMismatch, PortfolioConfigError

logger = logging.getLogger(__name__)

SKIPPED_FORWARD = 'stage skipped: forward requires linear'
PROVENANCE_FILE = 'provenance.log'


class ActorKind(str, Enum):
    REACHABILITY = 'reachability'
    OVERFLOW = 'overflow'
    VALIDATOR = 'validator'
    BUILTIN = 'builtin'


class ActorVerdict(str, Enum):
    SAFE = 'Safe'
    UNSAFE = 'Unsafe'
    UNKNOWN = 'Unknown'


class UnknownCause(str, Enum):
    TIMEOUT = 'Timeout'
    TOOL_ERROR = 'ToolError'
    AMBIGUOUS_OUTPUT = 'AmbiguousOutput'
    NO_MATCH = 'NoMatch'
    CANCELLED = 'Cancelled'


class OverflowOutcome(str, Enum):
    NO_OVERFLOW = 'NoOverflow'
    OVERFLOW_FOUND = 'OverflowFound'
    OVERFLOW_UNKNOWN = 'OverflowUnknown'


class ValidationOutcome(str, Enum):
    EXEC_OVERFLOW = 'ExecOverflow'
    EXEC_CLEAN_VIOLATION = 'ExecCleanViolation'
    VALIDATION_FAILED = 'ValidationFailed'


class ChcVerdict(str, Enum):
    SAT = 'sat'
    UNSAT = 'unsat'
    UNKNOWN = 'unknown'

    def __str__(self):
        return self.value


# Plan schema
# -----------

class ActorLimits(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')

    wall_s: Optional[float] = None
    # advisory only, never enforced
    memory_bytes: Optional[int] = None


class Actor(BaseModel):
    """One verifier invocation: an external command or a builtin backend."""

    model_config = ConfigDict(frozen=True, extra='forbid')

    name: str
    kind: ActorKind
    command: Optional[str] = None
    backend: Optional[str] = None
    options: dict[str, Any] = {}
    safe_pattern: str
    unsafe_pattern: str
    overflow_pattern: Optional[str] = None
    limits: ActorLimits = ActorLimits()

    @field_validator('safe_pattern', 'unsafe_pattern', 'overflow_pattern')
    @classmethod
    def _compiles(cls, value):
        if value is not None:
            try:
                re.compile(value)
            except re.error as e:
                raise ValueError(f"invalid regular expression {value!r}: {e}")
        return value

    @model_validator(mode='after')
    def _has_target(self):
        if self.kind == ActorKind.BUILTIN:
            if self.backend not in BACKENDS:
                known = ', '.join(sorted(BACKENDS))
                raise ValueError(f"actor '{self.name}': unknown builtin backend {self.backend!r} (known: {known})")
        elif not self.command:
            raise ValueError(f"actor '{self.name}' needs a command")
        return self

    def argv(self, **values):
        """Split the command template and fill in the placeholders token by token."""
        return [token.format(**values) for token in shlex.split(self.command)]


class Stage(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')

    encoding: Encoding
    theory_route: TheoryKind
    reach: tuple[Actor, ...]
    overflow: tuple[Actor, ...] = ()
    validator: Optional[Actor] = None
    budget_fraction: float = DEFAULT_STAGE_FRACTION

    @model_validator(mode='after')
    def _route_layout(self):
        if not self.reach:
            raise ValueError("a stage needs at least one reachability actor")
        if not 0 < self.budget_fraction <= 1:
            raise ValueError(f"budget fraction must be in (0, 1], got {self.budget_fraction}")
        if self.theory_route == TheoryKind.LIA and (not self.overflow or self.validator is None):
            raise ValueError("LIA stages need an overflow group and a validator")
        if self.theory_route == TheoryKind.BV and (self.overflow or self.validator is not None):
            raise ValueError("BV stages take neither an overflow group nor a validator")
        return self


class PortfolioPlan(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid')

    stages: tuple[Stage, ...]

    @model_validator(mode='after')
    def _budget(self):
        total = sum(stage.budget_fraction for stage in self.stages)
        if total > 1 + 1e-9:
            raise ValueError(f"stage budget fractions sum to {total:g} > 1")
        return self


def _routes_for(theory):
    """Plan sections that may serve a theory, in order of preference."""
    if theory.kind == TheoryKind.CORE:
        return [TheoryKind.CORE.value, TheoryKind.LIA.value]
    return [theory.kind.value]


def build_plan(config, theory):
    """
    Build the plan for ``theory`` from a raw portfolio configuration.

    Core systems use a ``Core`` section when present and the LIA section
    otherwise.

    Raises:
        PlanTheoryMismatch: no section routes the theory
        PortfolioConfigError: the configuration is malformed
    """
    actors = config.get('actors') or {}
    plans = config.get('plans') or {}
    if not isinstance(actors, dict) or not isinstance(plans, dict):
        raise PortfolioConfigError("'actors' and 'plans' must be mappings")
    route = next((r for r in _routes_for(theory) if r in plans), None)
    if route is None:
        raise PlanTheoryMismatch(f"no stage of the portfolio routes theory {theory}")

    def actor(ref):
        if ref not in actors:
            raise PortfolioConfigError(f"unknown actor '{ref}'")
        spec = dict(actors[ref] or {})
        spec.setdefault('name', ref)
        return spec

    try:
        stages = []
        for raw in plans[route] or []:
            raw = dict(raw)
            raw['theory_route'] = route
            raw['reach'] = [actor(ref) for ref in raw.get('reach') or []]
            raw['overflow'] = [actor(ref) for ref in raw.get('overflow') or []]
            if raw.get('validator') is not None:
                raw['validator'] = actor(raw['validator'])
            stages.append(Stage(**raw))
        plan = PortfolioPlan(stages=tuple(stages))
    except ValidationError as e:
        raise PortfolioConfigError(f"invalid portfolio: {e}")
    except TypeError as e:
        raise PortfolioConfigError(f"invalid portfolio: {e}")
    if not plan.stages:
        raise PlanTheoryMismatch(f"no stage of the portfolio routes theory {theory}")
    return plan


def load_plan(path, theory):
    """Load the plan for ``theory`` from a portfolio file."""
    return build_plan(load_portfolio_config(path), theory)


def default_plan(theory):
    """The shipped two-stage plan (forward, then backward) for ``theory``."""
    return load_plan(DEFAULT_PORTFOLIO_FILE, theory)


def restrict_plan(plan, encoding):
    """
    Keep only the stages using ``encoding``; their budget fractions are
    rescaled to use the whole budget.
    """
    encoding = Encoding(encoding)
    kept = [stage for stage in plan.stages if stage.encoding == encoding]
    total = sum(stage.budget_fraction for stage in kept) or 1.0
    return PortfolioPlan(stages=tuple(
        stage.model_copy(update={'budget_fraction': stage.budget_fraction / total}) for stage in kept
    ))


# Actor execution
# ---------------

@dataclass(frozen=True)
class TaskInput:
    """What an actor works on: the emitted C file plus the system behind it."""

    c_file: Path
    system: object
    program: object
    opts: EmitOptions = field(default_factory=EmitOptions)


@dataclass(frozen=True)
class RunResult:
    verdict: ActorVerdict
    actor: str
    wall_ms: int
    witness: Optional[Path] = None
    reasons: tuple = ()
    overflow: bool = False

    @property
    def definitive(self):
        return self.verdict != ActorVerdict.UNKNOWN


def _unknown(actor, wall_ms, *reasons):
    return RunResult(ActorVerdict.UNKNOWN, actor, wall_ms, reasons=tuple(reasons))


def classify_output(actor, text):
    """
    Map tool output onto a verdict using the actor's patterns.

    Returns:
        (ActorVerdict, tuple, bool): verdict, unknown causes, and whether the
        overflow pattern matched
    """
    safe = re.search(actor.safe_pattern, text, re.MULTILINE) is not None
    unsafe = re.search(actor.unsafe_pattern, text, re.MULTILINE) is not None
    overflow = bool(actor.overflow_pattern) and re.search(actor.overflow_pattern, text, re.MULTILINE) is not None
    if safe and unsafe:
        return ActorVerdict.UNKNOWN, (UnknownCause.AMBIGUOUS_OUTPUT,), overflow
    if safe:
        return ActorVerdict.SAFE, (), overflow
    if unsafe:
        return ActorVerdict.UNSAFE, (), overflow
    return ActorVerdict.UNKNOWN, (UnknownCause.NO_MATCH,), overflow


def _first_witness(witness_dir):
    files = sorted(p for p in Path(witness_dir).rglob('*') if p.is_file())
    return files[0] if files else None


def _actor_dir(scratch, actor):
    slug = re.sub(r'[^A-Za-z0-9_.-]', '_', actor.name)
    return Path(scratch) / f"{slug}.{actor.kind.value}"


def _run_builtin(actor, task, budget_s, workdir, witness_dir, cancel, witness):
    start = time.monotonic()
    deadline = start + budget_s
    is_cancelled = cancel.is_set if cancel is not None else None
    try:
        text = BACKENDS[actor.backend](
            task, actor.options, witness_dir, deadline=deadline, cancel=is_cancelled, witness=witness,
        )
    except Exception:
        logger.exception("builtin backend %s failed", actor.backend)
        return None, int((time.monotonic() - start) * 1000)
    (workdir / 'output.log').write_text(text + '\n', encoding='utf-8')
    return text, int((time.monotonic() - start) * 1000)


def run_actor(actor, task, budget_s, scratch, cancel=None, witness=None):
    """
    Run one actor on a task within ``budget_s`` seconds.

    Never raises for actor misbehavior: spawn failures, crashes, timeouts
    and unclassifiable output all come back as Unknown with a reason.

    Args:
        actor (Actor): the actor to run
        task (TaskInput): the emitted program and its system
        budget_s (float): wall-clock budget in seconds
        scratch (Path): directory for the actor's log and witness directory
        cancel (threading.Event): set by siblings to stop this run early
        witness (Path): witness file handed to validators

    Returns:
        RunResult
    """
    if actor.limits.wall_s is not None:
        budget_s = min(budget_s, actor.limits.wall_s)
    workdir = _actor_dir(scratch, actor)
    witness_dir = workdir / 'witness'
    shutil.rmtree(witness_dir, ignore_errors=True)
    witness_dir.mkdir(parents=True, exist_ok=True)

    if actor.kind == ActorKind.BUILTIN:
        text, wall_ms = _run_builtin(actor, task, budget_s, workdir, witness_dir, cancel, witness)
        if text is None:
            return _unknown(actor.name, wall_ms, UnknownCause.TOOL_ERROR)
        verdict, reasons, overflow = classify_output(actor, text)
        if cancel is not None and cancel.is_set() and verdict == ActorVerdict.UNKNOWN:
            return _unknown(actor.name, wall_ms, UnknownCause.CANCELLED)
        if verdict == ActorVerdict.UNKNOWN and wall_ms >= budget_s * 1000:
            return _unknown(actor.name, wall_ms, UnknownCause.TIMEOUT)
    else:
        try:
            argv = actor.argv(
                input_file=task.c_file, witness_dir=witness_dir,
                timeout_s=f"{budget_s:g}", witness_file=witness or '',
            )
        except (KeyError, IndexError, ValueError) as e:
            logger.warning("actor %s: bad command template: %s", actor.name, e)
            return _unknown(actor.name, 0, UnknownCause.TOOL_ERROR)
        logger.debug("starting %s: %s", actor.name, ' '.join(argv))
        outcome = run_command(argv, workdir / 'output.log', budget_s, cancel)
        wall_ms = outcome.wall_ms
        if outcome.spawn_error is not None:
            return _unknown(actor.name, wall_ms, UnknownCause.TOOL_ERROR)
        if outcome.cancelled:
            return _unknown(actor.name, wall_ms, UnknownCause.CANCELLED)
        if outcome.timed_out:
            return _unknown(actor.name, wall_ms, UnknownCause.TIMEOUT)
        if outcome.returncode is not None and outcome.returncode < 0:
            return _unknown(actor.name, wall_ms, UnknownCause.TOOL_ERROR)
        verdict, reasons, overflow = classify_output(actor, outcome.output)

    found = _first_witness(witness_dir) if verdict == ActorVerdict.UNSAFE else None
    logger.info("actor %s: %s after %d ms", actor.name, verdict.value, wall_ms)
    return RunResult(verdict, actor.name, wall_ms, found, reasons, overflow)


def run_parallel(group, task, budget_s, scratch, grace_s=DEFAULT_GRACE_S, jobs=None, witness=None):
    """
    Run a group of actors concurrently; the first definitive result wins.

    Remaining actors are asked to stop as soon as one actor answers Safe or
    Unsafe and get ``grace_s`` seconds to do so. When every actor ends
    Unknown, the result is Unknown with the union of their reasons.

    Returns:
        RunResult
    """
    group = list(group)
    start = time.monotonic()
    cancel = threading.Event()
    workers = min(len(group), jobs) if jobs else len(group)
    executor = ThreadPoolExecutor(max_workers=workers, thread_name_prefix='actor')
    futures = {
        executor.submit(run_actor, actor, task, budget_s, scratch, cancel, witness): actor
        for actor in group
    }
    pending = set(futures)
    winner = None
    unknowns = []
    try:
        while pending and winner is None:
            remaining = budget_s + grace_s - (time.monotonic() - start)
            done, pending = wait(pending, timeout=max(0.0, remaining), return_when=FIRST_COMPLETED)
            if not done:
                break
            # deterministic pick among results that finished together
            for future in sorted(done, key=lambda f: group.index(futures[f])):
                result = future.result()
                if result.definitive and winner is None:
                    winner = result
                else:
                    unknowns.append(result)
    finally:
        cancel.set()
        for future in pending:
            future.cancel()
        wait(pending, timeout=grace_s)
        executor.shutdown(wait=False)

    wall_ms = int((time.monotonic() - start) * 1000)
    if winner is not None:
        return replace(winner, wall_ms=wall_ms) if len(group) > 1 else winner
    reasons = {reason for result in unknowns for reason in result.reasons}
    if pending:
        reasons.add(UnknownCause.TIMEOUT)
    ordered = tuple(sorted(reasons, key=lambda r: r.value))
    return RunResult(ActorVerdict.UNKNOWN, ','.join(a.name for a in group), wall_ms, reasons=ordered)


def run_overflow(group, task, budget_s, scratch, grace_s=DEFAULT_GRACE_S, jobs=None):
    """Run the overflow group: Safe means no overflow, Unsafe means overflow found."""
    result = run_parallel(group, task, budget_s, scratch, grace_s, jobs)
    if result.verdict == ActorVerdict.SAFE:
        return OverflowOutcome.NO_OVERFLOW
    if result.verdict == ActorVerdict.UNSAFE:
        return OverflowOutcome.OVERFLOW_FOUND
    return OverflowOutcome.OVERFLOW_UNKNOWN


def run_validator(validator, task, witness, budget_s, scratch):
    """
    Execute a violation witness with the validator actor.

    The overflow pattern takes precedence; otherwise a confirmed violation
    (the actor's unsafe pattern) is a clean violation and anything else
    failed validation.
    """
    result = run_actor(validator, task, budget_s, scratch, witness=witness)
    if result.overflow:
        return ValidationOutcome.EXEC_OVERFLOW
    if result.verdict == ActorVerdict.UNSAFE:
        return ValidationOutcome.EXEC_CLEAN_VIOLATION
    return ValidationOutcome.VALIDATION_FAILED


# Gates
# -----

@dataclass(frozen=True)
class StageRecord:
    stage: int
    encoding: str
    route: str
    verdict: ChcVerdict
    reach: Optional[RunResult] = None
    overflow: Optional[OverflowOutcome] = None
    validation: Optional[ValidationOutcome] = None
    note: str = ''


@dataclass(frozen=True)
class FinalResult:
    verdict: ChcVerdict
    provenance: tuple


def gate_lia(reach, overflow_fn, validate_fn, program=None):
    """
    Turn a reachability result on an LIA program into a CHC verdict.

    Safe is only trusted without overflow; Unsafe only when the validator
    executes the witness to a clean violation. Everything else is unknown.

    Args:
        reach (RunResult): the reachability result
        overflow_fn (callable): program -> OverflowOutcome, called for Safe only
        validate_fn (callable): witness -> ValidationOutcome, called for Unsafe with a witness
        program: passed to ``overflow_fn``

    Returns:
        FinalResult: verdict and a one-stage provenance
    """
    overflow = validation = None
    verdict = ChcVerdict.UNKNOWN
    if reach.verdict == ActorVerdict.SAFE:
        overflow = overflow_fn(program)
        if overflow == OverflowOutcome.NO_OVERFLOW:
            verdict = ChcVerdict.SAT
    elif reach.verdict == ActorVerdict.UNSAFE and reach.witness is not None:
        validation = validate_fn(reach.witness)
        if validation == ValidationOutcome.EXEC_CLEAN_VIOLATION:
            verdict = ChcVerdict.UNSAT
    record = StageRecord(0, '', TheoryKind.LIA.value, verdict, reach, overflow, validation)
    return FinalResult(verdict, (record,))


def gate_bv(reach):
    """Bitvector programs are bit-precise: Safe is sat, Unsafe is unsat."""
    verdict = {
        ActorVerdict.SAFE: ChcVerdict.SAT,
        ActorVerdict.UNSAFE: ChcVerdict.UNSAT,
    }.get(reach.verdict, ChcVerdict.UNKNOWN)
    record = StageRecord(0, '', TheoryKind.BV.value, verdict, reach)
    return FinalResult(verdict, (record,))


def replay_provenance(records):
    """
    Recompute the final verdict from logged stage records by re-running
    the gates on the recorded outcomes.
    """
    for record in records:
        if record.reach is None:
            continue
        if record.route == TheoryKind.BV.value:
            verdict = gate_bv(record.reach).verdict
        else:
            verdict = gate_lia(
                record.reach,
                lambda _: record.overflow or OverflowOutcome.OVERFLOW_UNKNOWN,
                lambda _: record.validation or ValidationOutcome.VALIDATION_FAILED,
            ).verdict
        if verdict != ChcVerdict.UNKNOWN:
            return verdict
    return ChcVerdict.UNKNOWN


# Provenance log
# --------------

def _field(value):
    if value is None or value == ():
        return '-'
    if isinstance(value, Enum):
        return value.value
    return str(value)


def format_record(record):
    """One provenance line: space-separated ``key=value`` pairs."""
    reach = record.reach
    pairs = [
        ('stage', record.stage),
        ('encoding', record.encoding),
        ('route', record.route),
        ('reach', reach.verdict if reach else None),
        ('actor', reach.actor if reach else None),
        ('wall_ms', reach.wall_ms if reach else None),
        ('witness', reach.witness if reach else None),
        ('reasons', ','.join(r.value for r in reach.reasons) if reach else None),
        ('overflow', record.overflow),
        ('validation', record.validation),
        ('verdict', record.verdict),
        ('note', record.note or None),
    ]
    return ' '.join(f"{key}={shlex.quote(_field(value))}" for key, value in pairs)


def parse_record(line):
    """Inverse of ``format_record``."""
    values = dict(token.split('=', 1) for token in shlex.split(line))

    def opt(key, convert=str):
        raw = values.get(key, '-')
        return None if raw == '-' else convert(raw)

    reach = None
    if opt('reach') is not None:
        reasons = opt('reasons') or ''
        reach = RunResult(
            verdict=ActorVerdict(values['reach']),
            actor=values['actor'],
            wall_ms=int(values['wall_ms']),
            witness=opt('witness', Path),
            reasons=tuple(UnknownCause(r) for r in reasons.split(',') if r),
        )
    return StageRecord(
        stage=int(values['stage']),
        encoding=values['encoding'],
        route=values['route'],
        verdict=ChcVerdict(values['verdict']),
        reach=reach,
        overflow=opt('overflow', OverflowOutcome),
        validation=opt('validation', ValidationOutcome),
        note=opt('note') or '',
    )


def read_provenance(path):
    """Read the stage records of a provenance log."""
    with open(path, 'r', encoding='utf-8') as f:
        return tuple(parse_record(line) for line in f if line.strip())


# Orchestration
# -------------

def _stage_matches(stage, theory):
    if stage.theory_route == theory.kind:
        return True
    return theory.kind == TheoryKind.CORE and stage.theory_route == TheoryKind.LIA


def _new_scratch():
    SCRATCH_DIR.mkdir(parents=True, exist_ok=True)
    return Path(tempfile.mkdtemp(prefix='task-', dir=SCRATCH_DIR))


def run_portfolio(system, plan, total_budget_s, scratch_dir=None, opts=None, jobs=None, grace_s=DEFAULT_GRACE_S):
    """
    Solve a system with a staged portfolio.

    For each stage routing the system's theory: emit the stage's encoding
    (a forward stage is skipped for non-linear systems), run the
    reachability group within the stage budget and apply the theory gate.
    The first sat/unsat verdict ends the run.

    Args:
        system (ChcSystem): the system to solve
        plan (PortfolioPlan): the stages to run
        total_budget_s (float): wall-clock budget for the whole run
        scratch_dir (Path): task directory; a fresh one below SCRATCH_DIR when None
        opts (EmitOptions): C emission options
        jobs (int): upper bound on concurrently running actors per group
        grace_s (float): time siblings get to stop after a definitive answer

    Returns:
        FinalResult

    Raises:
        PlanTheoryMismatch: no stage routes the system's theory
    """
    opts = opts or EmitOptions()
    stages = [stage for stage in plan.stages if _stage_matches(stage, system.theory)]
    if not stages:
        raise PlanTheoryMismatch(f"no stage of the plan routes theory {system.theory}")
    scratch = Path(scratch_dir) if scratch_dir else _new_scratch()
    scratch.mkdir(parents=True, exist_ok=True)
    linearity = classify_linearity(system)
    logger.info("solving %s %s system in %s", system.theory, linearity, scratch)

    records = []
    verdict = ChcVerdict.UNKNOWN
    for k, stage in enumerate(stages):
        encoding = stage.encoding.value
        if stage.encoding == Encoding.FORWARD and linearity == Linearity.NONLINEAR:
            logger.info("stage %d: %s", k, SKIPPED_FORWARD)
            records.append(StageRecord(k, encoding, stage.theory_route.value, ChcVerdict.UNKNOWN, note=SKIPPED_FORWARD))
            continue

        stage_budget = total_budget_s * stage.budget_fraction
        deadline = time.monotonic() + stage_budget
        stage_dir = scratch / f"stage-{k}-{encoding.lower()}"
        stage_dir.mkdir(parents=True, exist_ok=True)
        program = transform(system, stage.encoding, opts)
        c_file = stage_dir / 'task.c'
        c_file.write_text(program.source, encoding='utf-8')
        task = TaskInput(c_file, system, program, opts)

        reach = run_parallel(stage.reach, task, stage_budget, stage_dir, grace_s, jobs)
        if stage.theory_route == TheoryKind.BV:
            result = gate_bv(reach)
        else:
            def remaining():
                return max(0.0, deadline - time.monotonic())

            def overflow_fn(_program):
                if system.theory.kind == TheoryKind.CORE or not stage.overflow:
                    return OverflowOutcome.NO_OVERFLOW
                return run_overflow(stage.overflow, task, remaining(), stage_dir, grace_s, jobs)

            def validate_fn(witness):
                if stage.validator is None:
                    return ValidationOutcome.VALIDATION_FAILED
                return run_validator(stage.validator, task, witness, remaining(), stage_dir)

            result = gate_lia(reach, overflow_fn, validate_fn, program)
        record = replace(
            result.provenance[0], stage=k, encoding=encoding, route=stage.theory_route.value,
        )
        records.append(record)
        logger.info("stage %d (%s): reach %s -> %s", k, encoding, reach.verdict.value, record.verdict.value)
        if record.verdict != ChcVerdict.UNKNOWN:
            verdict = record.verdict
            break

    (scratch / PROVENANCE_FILE).write_text(
        ''.join(format_record(record) + '\n' for record in records), encoding='utf-8',
    )
    return FinalResult(verdict, tuple(records))
