import io
import shlex
import sys

import numpy as np
import pytest

from powerscale_sense.errors import EvaluatorFailure, EvaluatorTimeout, ProtocolViolation, SpawnFailure
from powerscale_sense.evaluator import SubprocessEvaluator, decode_replies, encode_batch, serve
from powerscale_sense.moment_match import moment_match
from powerscale_sense.oracles import BetaBernoulli, builtin_evaluator, fit_model, parse_oracle
from powerscale_sense.powerscale import PowerScaleSpec

SPEC = "normal-normal:mu0=0,s0=2.5,sigma=1,y=10,y=9"
PY = shlex.quote(sys.executable)


def child(code):
    """Command line running a tiny Python child."""
    return f"{PY} -c {shlex.quote(code)}"


def test_encode_batch():
    assert encode_batch([[1.0, 2.5], [0.0, -1.0]]) == '{"params": [1.0, 2.5]}\n{"params": [0.0, -1.0]}\n\n'


def test_round_trip_matches_in_process():
    model = parse_oracle(SPEC)
    points = np.linspace(-3, 14, 25)[:, None]
    remote = SubprocessEvaluator(f"{PY} -m powerscale_sense.oracle_child {shlex.quote(SPEC)}")(points)
    local = builtin_evaluator(model)(points)
    np.testing.assert_allclose(remote.log_prior, local.log_prior, rtol=0, atol=1e-12)
    np.testing.assert_allclose(remote.log_lik, local.log_lik, rtol=0, atol=1e-12)
    assert remote.log_lik.shape == (25, 2) and remote.ok.all()


def test_serve_error_rows():
    ev = builtin_evaluator(BetaBernoulli(1, 1, 2, 5))
    out = io.StringIO()
    serve(ev, io.StringIO(encode_batch([[0.5], [2.0], [0.1]])), out)
    got = decode_replies(out.getvalue(), 3)
    np.testing.assert_array_equal(got.ok, [True, False, True])
    assert '"error"' in out.getvalue().splitlines()[1]


def test_serve_answers_several_batches():
    ev = builtin_evaluator(parse_oracle(SPEC))
    out = io.StringIO()
    serve(ev, io.StringIO(encode_batch([[1.0]]) + encode_batch([[2.0], [3.0]])), out)
    assert len(out.getvalue().splitlines()) == 3


def test_malformed_line_two():
    code = "import sys; sys.stdin.read(); print('{\"log_prior\": 0, \"log_lik\": [0]}'); print('{oops')"
    with pytest.raises(ProtocolViolation) as err:
        SubprocessEvaluator(child(code))(np.zeros((2, 1)))
    assert err.value.line == 2 and "line 2" in str(err.value)


def test_wrong_reply_count():
    code = "import sys; sys.stdin.read(); print('{\"log_prior\": 0, \"log_lik\": [0]}')"
    with pytest.raises(ProtocolViolation):
        SubprocessEvaluator(child(code))(np.zeros((3, 1)))


def test_too_many_replies():
    with pytest.raises(ProtocolViolation):
        decode_replies('{"log_prior": 0, "log_lik": [0]}\n' * 3, 2)


def test_missing_fields():
    with pytest.raises(ProtocolViolation) as err:
        decode_replies('{"log_prior": 0, "log_lik": [0]}\n{"log_prior": 1}\n', 2)
    assert err.value.line == 2


def test_timeout():
    with pytest.raises(EvaluatorTimeout):
        SubprocessEvaluator(child("import time; time.sleep(30)"), timeout=0.5)(np.zeros((1, 1)))


def test_spawn_failure():
    with pytest.raises(SpawnFailure):
        SubprocessEvaluator("/nonexistent/evaluator-binary")(np.zeros((1, 1)))


def test_nonzero_exit():
    with pytest.raises(EvaluatorFailure) as err:
        SubprocessEvaluator(child("import sys; sys.stderr.write('boom\\n'); sys.exit(4)"))(np.zeros((1, 1)))
    assert "status 4" in str(err.value) and "boom" in str(err.value)


def test_moment_match_through_subprocess():
    model = parse_oracle("normal-normal:mu0=0,s0=2.5,sigma=1,y=10")
    d = fit_model(model, 1000, 2)
    spec = PowerScaleSpec("prior", 8.0)
    local = moment_match(d, spec, builtin_evaluator(model))
    remote = moment_match(
        d, spec, SubprocessEvaluator(f"{PY} -m powerscale_sense.oracle_child 'normal-normal:mu0=0,s0=2.5,sigma=1,y=10'")
    )
    assert remote.transform_chain == local.transform_chain
    np.testing.assert_allclose(remote.log_w, local.log_w, atol=1e-9)
