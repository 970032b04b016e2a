"""Run a built-in oracle model as an evaluator child process.

    python -m powerscale_sense.oracle_child 'normal-normal:mu0=0,s0=2.5,sigma=1,y=10'
"""

import sys

from .evaluator import serve
from .oracles import builtin_evaluator, parse_oracle


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        sys.stderr.write("usage: python -m powerscale_sense.oracle_child ORACLE_SPEC\n")
        return 2
    serve(builtin_evaluator(parse_oracle(argv[0])))
    return 0


if __name__ == "__main__":
    sys.exit(main())
