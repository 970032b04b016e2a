"""Regenerate the checked-in fixtures.

    python tests/data/make_fixtures.py

The conflict dataset is exact base-posterior draws of the normal-normal model
(prior N(0, 2.5), one observation y = 10 with sigma 1), PCG64 seed 0, with a
derived column and four chain labels.  The golden reports are the CLI's
output on that file; regenerate them only for an intentional format change.
"""

import io
from contextlib import redirect_stdout
from pathlib import Path

import numpy as np

from powerscale_sense import cli
from powerscale_sense.draws import DrawsMatrix
from powerscale_sense.io import write_draws
from powerscale_sense.oracles import NormalNormal, fit_model

HERE = Path(__file__).parent


def main():
    d = fit_model(NormalNormal(0.0, 2.5, 1.0, (10.0,)), 4000, 0)
    mu = d.values[:, 0]
    draws = DrawsMatrix(
        ("mu", "mu_excess"),
        np.c_[mu, (mu - 10.0) ** 2],
        d.log_prior,
        d.log_lik,
        np.repeat(np.arange(1, 5), 1000),
    )
    write_draws(draws, HERE / "normal_conflict.csv")
    for output, name in (("json", "sensitivity_golden.json"), ("table", "sensitivity_golden.txt")):
        buf = io.StringIO()
        with redirect_stdout(buf):
            cli.main(["sensitivity", "--input", str(HERE / "normal_conflict.csv"), "--output", output])
        (HERE / name).write_text(buf.getvalue())


if __name__ == "__main__":
    main()
