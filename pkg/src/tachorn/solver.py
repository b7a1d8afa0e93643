"""Subprocess bridge to an external CHC solver.

The solver is any command that reads an SMT-LIB 2 script in HORN logic and
prints sat/unsat/unknown as the first line of stdout.  The command is a
template string; {script} is replaced by the script path and {timeout_ms}
by the soft time budget in milliseconds.  Substitution happens per token
after shlex splitting, so paths with spaces survive.

The Python side enforces a hard deadline of timeout_s plus a small grace
period (letting solvers that honor {timeout_ms} exit with "unknown" on
their own) and kills the process after it.
"""

from __future__ import annotations

import os
import shlex
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

SAT = "sat"
UNSAT = "unsat"
UNKNOWN = "unknown"
TIMEOUT = "timeout"
CRASH = "crash"
CANCELLED = "cancelled"


@dataclass
class SolverConfig:
    command: str
    timeout_s: float = 60.0
    grace_s: float = 2.0
    workdir: Optional[str] = None
    want_model: bool = False


@dataclass
class SolverResult:
    status: str
    stdout: str
    stderr: str
    returncode: Optional[int]
    wall_s: float
    script_path: str
    model_text: Optional[str] = None


def build_argv(command: str, script_path: str, timeout_ms: int) -> list:
    tokens = shlex.split(command)
    if not tokens:
        raise ValueError("empty solver command")
    if not any("{script}" in t for t in tokens):
        tokens.append("{script}")
    return [t.replace("{script}", script_path)
             .replace("{timeout_ms}", str(timeout_ms))
            for t in tokens]


class SolverRun:
    """One in-flight solver invocation; supports polling and cancellation."""

    def __init__(self, proc, script_path, config, started, cleanup):
        self.proc = proc
        self.script_path = script_path
        self.config = config
        self.started = started
        self._cleanup = cleanup
        self._cancelled = False
        self._result = None

    def poll(self):
        return self.proc.poll()

    def cancel(self):
        self._cancelled = True
        if self.proc.poll() is None:
            self.proc.kill()

    def result(self) -> SolverResult:
        if self._result is not None:
            return self._result
        deadline = self.started + self.config.timeout_s + self.config.grace_s
        timed_out = False
        try:
            remaining = max(0.0, deadline - time.monotonic())
            out, err = self.proc.communicate(timeout=remaining)
        except subprocess.TimeoutExpired:
            timed_out = True
            self.proc.kill()
            out, err = self.proc.communicate()
        wall = time.monotonic() - self.started
        if self._cancelled:
            status = CANCELLED
        elif timed_out:
            status = TIMEOUT
        else:
            status = _classify(out)
        model_text = None
        if status == SAT and self.config.want_model:
            first_nl = out.find("\n")
            model_text = out[first_nl + 1:] if first_nl >= 0 else ""
        self._result = SolverResult(status, out, err, self.proc.returncode,
                                    wall, self.script_path, model_text)
        if self._cleanup:
            try:
                os.unlink(self.script_path)
            except OSError:
                pass
        return self._result


def _classify(stdout: str) -> str:
    for line in stdout.splitlines():
        line = line.strip()
        if not line:
            continue
        if line == "sat":
            return SAT
        if line == "unsat":
            return UNSAT
        if line == "unknown":
            return UNKNOWN
        return CRASH
    return CRASH


def start_solver(script_text: str, config: SolverConfig,
                 script_path=None) -> SolverRun:
    cleanup = script_path is None
    if script_path is None:
        fd, script_path = tempfile.mkstemp(suffix=".smt2", prefix="tachorn-",
                                           dir=config.workdir)
        os.close(fd)
    script_path = str(script_path)
    text = script_text
    if config.want_model:
        text = text + "(get-model)\n"
    with open(script_path, "w", encoding="utf-8") as f:
        f.write(text)
    argv = build_argv(config.command, script_path,
                      int(config.timeout_s * 1000))
    started = time.monotonic()
    try:
        proc = subprocess.Popen(argv, stdout=subprocess.PIPE,
                                stderr=subprocess.PIPE, text=True,
                                cwd=config.workdir)
    except OSError as e:
        return _failed_run(script_path, config, started, cleanup, str(e))
    return SolverRun(proc, script_path, config, started, cleanup)


class _FailedProc:
    def __init__(self, message):
        self.returncode = None
        self.message = message

    def poll(self):
        return self.returncode

    def kill(self):
        pass

    def communicate(self, timeout=None):
        return "", self.message


def _failed_run(script_path, config, started, cleanup, message):
    run = SolverRun(_FailedProc(message), script_path, config, started,
                    cleanup)
    return run


def run_solver(script_text: str, config: SolverConfig,
               script_path=None) -> SolverResult:
    return start_solver(script_text, config, script_path).result()


# ------------------------------------------------------------- discovery


def bundled_driver_path() -> Path:
    return Path(__file__).resolve().parents[2] / "tools" / "z3chc" / "z3chc.mjs"


def discover_solver_command(cli_command=None, config_command=None,
                            env=None, which=shutil.which):
    """Pick a solver command template.

    Precedence: explicit CLI flag, then the config file, then the
    TACHORN_SOLVER environment variable, then a z3 binary on PATH, then the
    bundled node driver.  Returns (template, source) or (None, None).
    """
    if env is None:
        env = os.environ
    if cli_command:
        return cli_command, "cli"
    if config_command:
        return config_command, "config"
    env_cmd = env.get("TACHORN_SOLVER")
    if env_cmd:
        return env_cmd, "env"
    if which("z3"):
        return "z3 -t:{timeout_ms} {script}", "path-z3"
    driver = bundled_driver_path()
    if which("node") and driver.exists():
        return f"node {driver} {{script}} {{timeout_ms}}", "bundled-node"
    return None, None
