"""render: turn a sweep or path CSV into a PNG figure."""

import argparse
import sys

from .render import (
    PATH_COLUMNS,
    SWEEP_COLUMNS,
    load_table,
    path_figure,
    save_png,
    sweep_figure,
)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="render",
        description="Render a figure from a liquifbm sweep or path CSV.",
    )
    parser.add_argument("--kind", required=True, choices=("sweep", "path"))
    parser.add_argument("--in", dest="src", required=True, metavar="CSV")
    parser.add_argument("--out", required=True, metavar="PNG")
    args = parser.parse_args(argv)

    try:
        if args.kind == "sweep":
            fig = sweep_figure(load_table(args.src, SWEEP_COLUMNS))
        else:
            fig = path_figure(load_table(args.src, PATH_COLUMNS))
        save_png(fig, args.out)
    except ValueError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
