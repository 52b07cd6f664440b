"""Run the full analysis over every problem file in problems/.

Prints one summary line per problem; pass --json-dir to also keep the
machine-readable reports.  Exit code is the worst per-problem code, so a
clean corpus exits 0.
"""

import argparse
import sys
from pathlib import Path

from kovex.cli import main as kovex_main


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--problems", default="problems",
                        help="directory of .kov files (default: problems)")
    parser.add_argument("--json-dir", default=None,
                        help="write one JSON report per problem here")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    files = sorted(Path(args.problems).glob("*.kov"))
    if not files:
        print(f"no .kov files under {args.problems}", file=sys.stderr)
        return 1
    if args.json_dir:
        Path(args.json_dir).mkdir(parents=True, exist_ok=True)

    worst = 0
    for path in files:
        argv_one = ["analyze", str(path), "--seed", str(args.seed)]
        if args.json_dir:
            argv_one += ["--json",
                         str(Path(args.json_dir) / (path.stem + ".json"))]
        print(f"=== {path.name}")
        code = kovex_main(argv_one)
        print(f"=== exit {code}")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    raise SystemExit(main())
