"""
C Compile Harness
-----------------
Compiles an emitted program together with its scripted-input stubs and
runs the executable on a given nondet input sequence.
"""

import logging
import shutil
import subprocess
from pathlib import Path

from models.codegen import nondet_stub_source
from models.errors import CompilationError

logger = logging.getLogger(__name__)

COMPILERS = ('cc', 'gcc', 'clang')

WARNING_FLAGS = ('-Wall', '-Wextra')


def find_compiler():
    """Return the path of the first C compiler found on PATH, or None."""
    for name in COMPILERS:
        path = shutil.which(name)
        if path:
            return path
    return None


def compile_program(program, workdir, compiler=None, name='task'):
    """
    Compile ``program`` with stub definitions of its externs.

    Args:
        program (CProgram): the emitted program
        workdir (Path): directory receiving the sources and the executable
        compiler (str): compiler to use; found on PATH when None
        name (str): base name of the generated files

    Returns:
        Path: the executable

    Raises:
        CompilationError: no compiler available or compilation failed
    """
    compiler = compiler or find_compiler()
    if compiler is None:
        raise CompilationError("no C compiler found")
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    source = workdir / f"{name}.c"
    stub = workdir / f"{name}_stub.c"
    executable = workdir / name
    source.write_text(program.source, encoding='utf-8')
    stub.write_text(nondet_stub_source(program), encoding='utf-8')

    result = subprocess.run(
        [compiler, '-std=c99', '-O0', '-o', str(executable), str(source), str(stub)],
        capture_output=True, text=True,
    )
    if result.returncode != 0:
        raise CompilationError(f"{Path(compiler).name} failed on {source.name}:\n{result.stderr}")
    if result.stderr:
        logger.debug("%s diagnostics for %s:\n%s", Path(compiler).name, source.name, result.stderr)
    logger.debug("compiled %s", executable)
    return executable


def compiler_warnings(program, workdir, compiler=None, name='task'):
    """
    Syntax-check the emitted program alone with ``-Wall -Wextra``.

    Returns:
        str: the compiler diagnostics; empty when the program is warning-clean

    Raises:
        CompilationError: no compiler available or the program does not compile
    """
    compiler = compiler or find_compiler()
    if compiler is None:
        raise CompilationError("no C compiler found")
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    source = workdir / f"{name}.c"
    source.write_text(program.source, encoding='utf-8')
    result = subprocess.run(
        [compiler, '-std=c99', *WARNING_FLAGS, '-fsyntax-only', str(source)],
        capture_output=True, text=True,
    )
    if result.returncode != 0:
        raise CompilationError(f"{Path(compiler).name} failed on {source.name}:\n{result.stderr}")
    return result.stderr


def run_with_inputs(executable, inputs, timeout_s=10.0):
    """
    Run a compiled program feeding ``inputs`` to its nondet functions.

    Returns:
        int: the exit status (REPLAY_ERROR_STATUS when the error location was reached)
    """
    stdin = ''.join(f"{value}\n" for value in inputs)
    result = subprocess.run(
        [str(executable)], input=stdin, capture_output=True, text=True, timeout=timeout_s,
    )
    return result.returncode
