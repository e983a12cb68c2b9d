"""Command line interface.

Raw inputs are flat little-endian float32 files; their shape is supplied
with ``--shape``.  Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .container import read_file, write_file
from .core import error_stats, grid_from_array, pad_dims
from .errors import ArgumentError, EbccError, IngestError, IoError
from .pipeline import EbccParams, compress_grid, decompress_grid

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _parse_shape(text: str) -> tuple[int, ...]:
    try:
        shape = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise _UsageError(f"bad shape {text!r}") from None
    if not shape or any(s < 1 for s in shape) or len(shape) > 4:
        raise _UsageError(f"bad shape {text!r}")
    return shape


def _load_raw(path: str, shape) -> np.ndarray:
    try:
        data = np.fromfile(path, dtype="<f4")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    n = int(np.prod(shape))
    if data.size != n:
        raise IngestError(f"{path} holds {data.size} floats, shape {shape} needs {n}")
    return data.reshape(shape)


def _build_parser() -> _Parser:
    parser = _Parser(prog="ebcc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compress", help="compress a raw float32 file")
    c.add_argument("--input", required=True)
    c.add_argument("--shape", required=True, help="T,P,H,W extents of the input")
    c.add_argument("--rel-error", type=float, required=True,
                   help="range-relative max error target, in (0, 1)")
    c.add_argument("--q", type=float, default=1.0 - 1e-5,
                   help="target fraction of points the base layer must satisfy")
    c.add_argument("--chunk", default=None, help="chunk shape t,p,h,w")
    c.add_argument("-o", "--output", required=True)

    d = sub.add_parser("decompress", help="decompress to a raw float32 file")
    d.add_argument("input")
    d.add_argument("-o", "--output", required=True)

    s = sub.add_parser("stats", help="error statistics between two raw files")
    s.add_argument("original")
    s.add_argument("reconstructed")
    s.add_argument("--shape", required=True)

    b = sub.add_parser("bench", help="run a benchmark suite")
    b.add_argument("suite", help="stats | ablation | divergence | trajectory")
    b.add_argument("--out-dir", default="bench-out")
    b.add_argument("--rows", type=int, default=None)
    b.add_argument("--cols", type=int, default=None)
    b.add_argument("--seeds", type=int, default=None)
    return parser


def _cmd_compress(args) -> int:
    shape = _parse_shape(args.shape)
    if not 0.0 < args.rel_error < 1.0:
        raise _UsageError(f"--rel-error must be in (0, 1), got {args.rel_error}")
    if not 0.0 < args.q <= 1.0:
        raise _UsageError(f"--q must be in (0, 1], got {args.q}")
    chunk_shape = pad_dims(_parse_shape(args.chunk)) if args.chunk else None
    grid = grid_from_array(_load_raw(args.input, shape), chunk_shape)
    params = EbccParams(epsilon_rel=args.rel_error, q=args.q)
    chunks = compress_grid(grid, params)
    nbytes = write_file(chunks, grid.dims, grid.chunk_shape, args.output)
    raw = grid.data.nbytes
    print(f"{args.output}: {raw} -> {nbytes} bytes (ratio {raw / nbytes:.2f})")
    return EXIT_OK


def _cmd_decompress(args) -> int:
    chunks, dims, _ = read_file(args.input)
    data = decompress_grid(chunks, dims)
    try:
        data.astype("<f4").tofile(args.output)
    except OSError as exc:
        raise IoError(f"cannot write {args.output}: {exc}") from exc
    print(f"{args.output}: shape {tuple(dims)}")
    return EXIT_OK


def _cmd_stats(args) -> int:
    shape = _parse_shape(args.shape)
    original = _load_raw(args.original, shape)
    reconstructed = _load_raw(args.reconstructed, shape)
    stats = error_stats(original, reconstructed)
    print(json.dumps(stats.as_dict()))
    return EXIT_OK


def _cmd_bench(args) -> int:
    from .bench.suites import run_suite

    overrides = {k: getattr(args, k) for k in ("rows", "cols", "seeds")
                 if getattr(args, k) is not None}
    paths = run_suite(args.suite, args.out_dir, **overrides)
    for path in paths:
        print(path)
    return EXIT_OK


_COMMANDS = {
    "compress": _cmd_compress,
    "decompress": _cmd_decompress,
    "stats": _cmd_stats,
    "bench": _cmd_bench,
}


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ArgumentError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EbccError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
