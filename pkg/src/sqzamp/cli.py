"""Command-line interface.

Subcommands ``point``, ``sweep``, ``figure <id>`` and ``oracle-check``.
Parameters come from an optional TOML file (``--config``) and are
overridden by command-line flags. Exit codes: 0 success, 1 validation
error, 2 I/O error, 3 oracle-check failure.

Config file layout::

    [setup]
    g_opo = 5.2
    g_opa = 10
    l_det = 0.3          # or eta_det = 0.7
    theta_opa = 0.0
    phase_noise_mode = "deterministic"
    p_sig = 1.2589

    [sweep]
    outputs = ["v_eff_db", "epsilon_db"]
    axes = [
        { name = "l_det", start = 0.0, stop = 1.0, count = 11 },
        { name = "g_opa", values = [1, 2, 5, 10] },
    ]

    [oracle]
    seed = 42
    samples = 1000000
    batch_size = 65536
    workers = 1
"""

import argparse
import csv
import io
import math
import sys

from . import __version__
from .chain import amplified_variance, chain_variance, conventional_variance
from .errors import ConfigError, ModelError
from .oracle import OracleConfig, estimate_variance
from .sweep import (
    DEFAULT_POINT,
    PRESETS,
    Axis,
    SweepSpec,
    dump_json,
    format_float,
    merge_point,
    run_figure,
    setup_from_point,
    sweep_csv,
    write_text,
)
from .metrics import metrics_report

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_ORACLE = 0, 1, 2, 3
Z_LIMIT = 4.0

PARAM_FLAGS = (
    ("g_opo", float, "squeezer nonlinear gain"),
    ("g_opa", float, "amplifier nonlinear gain (omit for the conventional scheme)"),
    ("eta_opo", float, "squeezer escape efficiency"),
    ("eta_opa", float, "amplifier escape efficiency"),
    ("eta_prop", float, "propagation efficiency between the cavities"),
    ("eta_det", float, "detection efficiency"),
    ("l_det", float, "detection loss, 1 - eta_det"),
    ("theta_opo", float, "squeezer phase noise [rad]"),
    ("theta_opa", float, "amplifier phase noise [rad]"),
    ("p_sig", float, "signal power in vacuum units"),
    ("phase_noise_mode", str, "deterministic or gaussian_rms"),
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _global_flags(parser, suppress):
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--config", default=default(None), help="TOML configuration file")
    parser.add_argument("--out", default=default(None), help="output file (point, sweep) or directory (figure)")
    parser.add_argument("--seed", type=int, default=default(None), help="oracle seed (unsigned 64-bit)")
    parser.add_argument("--samples", type=int, default=default(None), help="oracle sample count")
    parser.add_argument("--format", choices=("csv", "json"), default=default(None), help="machine-readable format")


def _param_flags(parser):
    group = parser.add_argument_group("parameters")
    for name, kind, help_text in PARAM_FLAGS:
        group.add_argument("--" + name.replace("_", "-"), dest=name, type=kind, default=None, help=help_text)


def build_parser():
    parser = _Parser(prog="sqzamp", description="Squeezed-light amplification noise model.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    _global_flags(common, suppress=True)

    p = sub.add_parser("point", parents=[common], help="evaluate all metrics at one parameter point")
    _param_flags(p)

    p = sub.add_parser("sweep", parents=[common], help="1D or 2D parameter sweep to CSV")
    _param_flags(p)
    p.add_argument("--axis", action="append", default=None, metavar="SPEC",
                   help="name:start:stop:count[:linear|log] or name=v1,v2,... (give once or twice)")
    p.add_argument("--output", action="append", default=None, metavar="METRIC", help="metric column (repeatable)")

    p = sub.add_parser("figure", parents=[common], help="write the dataset of a figure preset")
    p.add_argument("preset", choices=sorted(PRESETS) + ["all"])
    _param_flags(p)
    p.add_argument("--axis", action="append", default=None, metavar="SPEC", help="override a preset axis range")

    p = sub.add_parser("oracle-check", parents=[common], help="Monte Carlo check of the closed forms")
    _param_flags(p)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--corrupt", type=float, default=0.0, help=argparse.SUPPRESS)
    return parser


def load_config(path):
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config", f"cannot parse {path}: {exc}") from None
    unknown = sorted(set(data) - {"setup", "sweep", "oracle"})
    if unknown:
        raise ConfigError(unknown[0], "unknown config section; expected setup, sweep, oracle")
    return data


def _point(args, config, base=DEFAULT_POINT):
    point = merge_point(base, config.get("setup", {}))
    flags = {name: getattr(args, name, None) for name, _, _ in PARAM_FLAGS}
    return merge_point(point, flags)


def _axis_from_table(table):
    table = dict(table)
    name = table.pop("name", None)
    if name is None:
        raise ConfigError("axes", "every axis needs a name")
    if "values" in table:
        return Axis(name, values=tuple(table.pop("values")))
    return Axis(name, **table)


def _report_rows(report):
    data = report.to_dict()
    names = ("v_minus", "v_plus", "v_eff", "eta_eff", "snr_conv", "snr_amp", "epsilon")
    return [(n, data[n], data.get(f"{n}_db")) for n in names if data[n] is not None]


def _machine(obj_rows, fmt):
    if fmt == "json":
        return dump_json({k: (format_float(v) if isinstance(v, float) and not math.isfinite(v) else v)
                          for k, v in obj_rows.items()})
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(obj_rows))
    writer.writerow([v if isinstance(v, str) else format_float(v) for v in obj_rows.values()])
    return buf.getvalue()


def cmd_point(args, config):
    setup, sig = setup_from_point(_point(args, config))
    report = metrics_report(setup, sig)
    flat = {"scheme": report.scheme}
    for name, lin, db in _report_rows(report):
        flat[name] = lin
        flat[f"{name}_db"] = db
    if args.format:
        text = _machine(flat, args.format)
    else:
        lines = [f"scheme: {report.scheme}", f"{'metric':<10} {'linear':>12} {'dB':>8}"]
        for name, lin, db in _report_rows(report):
            lines.append(f"{name:<10} {lin:12.6g} {db:8.2f}")
        text = "\n".join(lines) + "\n"
    if args.out:
        write_text(args.out, _machine(flat, args.format or "json"))
    sys.stdout.write(text)
    return EXIT_OK


def cmd_sweep(args, config):
    section = config.get("sweep", {})
    if args.axis:
        axes = [Axis.parse(text) for text in args.axis]
    else:
        axes = [_axis_from_table(t) for t in section.get("axes", [])]
    if not 1 <= len(axes) <= 2:
        raise ConfigError("axis", f"a sweep needs one or two axes, got {len(axes)}")
    outputs = tuple(args.output or section.get("outputs", ()))
    spec = SweepSpec(axes[0], axes[1] if len(axes) == 2 else None, _point(args, config), outputs)
    text = sweep_csv(spec)
    if args.format == "json":
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        text = dump_json({"columns": header, "rows": [[float(v) for v in row] for row in reader]})
    if args.out:
        write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_figure(args, config):
    overrides = [Axis.parse(text) for text in (args.axis or [])]
    fixed = merge_point(config.get("setup", {}), {n: getattr(args, n, None) for n, _, _ in PARAM_FLAGS})
    out_dir = args.out or "."
    ids = sorted(PRESETS) if args.preset == "all" else [args.preset]
    for preset_id in ids:
        axes = [a for a in overrides if a.name in {x.name for x in (PRESETS[preset_id].axis1, PRESETS[preset_id].axis2) if x}]
        for path in run_figure(preset_id, out_dir, axes, fixed):
            print(path)
    return EXIT_OK


def reference_variance(setup):
    """The analytic variance the oracle is checked against."""
    if setup.noiseless:
        if setup.amplified:
            return amplified_variance(setup)
        return conventional_variance(setup)
    return chain_variance(setup)


def cmd_oracle(args, config):
    section = config.get("oracle", {})
    unknown = sorted(set(section) - {"seed", "samples", "batch_size", "workers"})
    if unknown:
        raise ConfigError(unknown[0], "unknown oracle option")

    def pick(flag, key, default):
        value = getattr(args, flag, None)
        return section.get(key, default) if value is None else value

    cfg = OracleConfig(
        n_samples=pick("samples", "samples", 1_000_000),
        seed=pick("seed", "seed", 0),
        batch_size=pick("batch_size", "batch_size", 1 << 16),
        workers=pick("workers", "workers", 1),
    )
    setup, _ = setup_from_point(_point(args, config))
    ref = reference_variance(setup)
    ref_minus = ref.v_minus + args.corrupt
    est = estimate_variance(setup, cfg)
    z_minus, z_plus = est.z_scores(ref_minus, ref.v_plus)
    rows = [
        ("v_minus", est.v_minus_hat, est.stderr_minus, ref_minus, z_minus),
        ("v_plus", est.v_plus_hat, est.stderr_plus, ref.v_plus, z_plus),
    ]
    ok = all(abs(z) < Z_LIMIT for *_, z in rows)
    result = {
        "pass": ok,
        "n_samples": est.n_used,
        "seed": cfg.seed,
        "phase_noise_mode": setup.phase_noise_mode.value,
        "checks": [
            {"quadrature": q, "estimate": e, "stderr": s, "reference": r, "z": z} for q, e, s, r, z in rows
        ],
    }
    if args.format == "json":
        text = dump_json(result)
    else:
        lines = [f"{'quadrature':<10} {'estimate':>12} {'stderr':>10} {'reference':>12} {'z':>8}"]
        for q, e, s, r, z in rows:
            verdict = "PASS" if abs(z) < Z_LIMIT else "FAIL"
            lines.append(f"{q:<10} {e:12.6f} {s:10.2e} {r:12.6f} {z:8.2f}  {verdict}")
        lines.append(f"oracle-check: {'PASS' if ok else 'FAIL'} (n={est.n_used}, seed={cfg.seed})")
        text = "\n".join(lines) + "\n"
    if args.out:
        write_text(args.out, dump_json(result))
    sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_ORACLE


COMMANDS = {"point": cmd_point, "sweep": cmd_sweep, "figure": cmd_figure, "oracle-check": cmd_oracle}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        return COMMANDS[args.command](args, config)
    except ModelError as exc:
        field = getattr(exc, "field", None)
        prefix = f"{field}: " if field else ""
        message = exc.message if isinstance(exc, ConfigError) else str(exc)
        print(f"sqzamp: error: {prefix}{message}", file=sys.stderr)
        return EXIT_INVALID
    except TypeError as exc:
        print(f"sqzamp: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"sqzamp: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
