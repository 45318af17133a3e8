"""Regenerate every figure dataset into one output directory."""
import argparse
import sys

from circlestates import cli


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results")
    ap.add_argument("--grid", type=int, default=None, help="phase-space points per axis for fig3")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)
    for name in ("fig1", "fig2", "fig3", "fig4"):
        extra = ["--grid", str(args.grid)] if name == "fig3" and args.grid else []
        if name == "fig3":
            extra += ["--workers", str(args.workers)]
        code = cli.main([name, "--out", args.out, *extra])
        print(f"{name}: exit {code}")
        if code:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
