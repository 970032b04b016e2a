"""External density evaluators spoken to over NDJSON on stdin/stdout.

Protocol, one batch per child invocation:

* parent writes one line ``{"params": [..D reals..]}`` per point, then a
  blank line;
* child answers one line per point, in order, either
  ``{"log_prior": r, "log_lik": [..N reals..]}`` or ``{"error": "msg"}``.

:func:`serve` implements the child side for any in-process evaluator.
"""

from __future__ import annotations

import json
import shlex
import subprocess
import sys
from typing import Sequence, TextIO

import numpy as np

from .errors import EvaluatorFailure, EvaluatorTimeout, ProtocolViolation, SpawnFailure
from .moment_match import Evaluation

DEFAULT_TIMEOUT = 60.0


def encode_batch(points) -> str:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    lines = [json.dumps({"params": [float(v) for v in row]}) for row in pts]
    return "\n".join(lines) + "\n\n"


def decode_replies(text: str, n_points: int) -> Evaluation:
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    lp = np.full(n_points, np.nan)
    rows: list = [None] * n_points
    ok = np.zeros(n_points, dtype=bool)
    n_obs = None
    for i, line in enumerate(lines, start=1):
        if i > n_points:
            raise ProtocolViolation(f"expected {n_points} replies, got {len(lines)}", line=i)
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as err:
            raise ProtocolViolation(f"malformed JSON ({err.msg})", line=i) from None
        if not isinstance(obj, dict):
            raise ProtocolViolation("reply is not a JSON object", line=i)
        if "error" in obj:
            continue
        try:
            lp_i = float(obj["log_prior"])
            ll_i = [float(v) for v in obj["log_lik"]]
        except (KeyError, TypeError, ValueError):
            raise ProtocolViolation("reply needs numeric 'log_prior' and a 'log_lik' list", line=i) from None
        if n_obs is None:
            n_obs = len(ll_i)
        elif len(ll_i) != n_obs:
            raise ProtocolViolation(f"'log_lik' has {len(ll_i)} entries, expected {n_obs}", line=i)
        lp[i - 1] = lp_i
        rows[i - 1] = ll_i
        ok[i - 1] = True
    if len(lines) != n_points:
        raise ProtocolViolation(f"expected {n_points} replies, got {len(lines)}", line=len(lines) + 1)
    n_obs = n_obs or 1
    ll = np.full((n_points, n_obs), np.nan)
    for i, r in enumerate(rows):
        if r is not None:
            ll[i] = r
    return Evaluation(lp, ll, ok)


class SubprocessEvaluator:
    """Evaluate densities by running ``command`` once per batch of points."""

    def __init__(self, command: str | Sequence[str], timeout: float = DEFAULT_TIMEOUT):
        self.argv = shlex.split(command) if isinstance(command, str) else list(command)
        if not self.argv:
            raise SpawnFailure("empty evaluator command")
        self.timeout = timeout

    def __call__(self, points) -> Evaluation:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        payload = encode_batch(pts)
        try:
            proc = subprocess.run(
                self.argv, input=payload, capture_output=True, text=True, timeout=self.timeout
            )
        except subprocess.TimeoutExpired:
            raise EvaluatorTimeout(f"evaluator did not answer within {self.timeout} s") from None
        except OSError as err:
            raise SpawnFailure(f"cannot start evaluator {self.argv[0]!r}: {err}") from None
        if proc.returncode != 0:
            tail = proc.stderr.strip().splitlines()[-1:] if proc.stderr else []
            raise EvaluatorFailure(f"evaluator exited with status {proc.returncode}" + (f": {tail[0]}" if tail else ""))
        return decode_replies(proc.stdout, len(pts))


def serve(evaluator, stdin: TextIO = sys.stdin, stdout: TextIO = sys.stdout) -> None:
    """Answer batches from ``stdin`` until EOF, one reply line per request line."""
    batch: list = []

    def flush():
        if not batch:
            return
        result = evaluator(np.array(batch, dtype=float))
        for i in range(len(batch)):
            if result.ok[i]:
                reply = {"log_prior": float(result.log_prior[i]), "log_lik": [float(v) for v in result.log_lik[i]]}
            else:
                reply = {"error": "density not finite at this point"}
            stdout.write(json.dumps(reply) + "\n")
        stdout.flush()
        batch.clear()

    for line in stdin:
        if not line.strip():
            flush()
            continue
        batch.append(json.loads(line)["params"])
    flush()
