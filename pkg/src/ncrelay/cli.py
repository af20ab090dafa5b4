"""Command-line entry point: ``ncrelay {sv,analyze,simulate,compare,design}``.

Exit codes: 0 ok, 2 config error, 3 enumeration guard exceeded, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys

import numpy as np

from . import analysis
from .config import ConfigError, ExperimentConfig, load, load_preset, normalize_preset_name, preset_names
from .gf2code import GuardExceeded
from .montecarlo import estimate_abep, stderr_progress

EXIT_OK, EXIT_CONFIG, EXIT_GUARD, EXIT_IO = 0, 2, 3, 4

SIMULATE_COLUMNS = ["snr_db", "source", "trials", "errors", "abep_mc", "ci_lo", "ci_hi"]
COMPARE_COLUMNS = SIMULATE_COLUMNS + [
    "abep_semi", "abep_union", "abep_asym", "ratio_mc_asym", "ratio_mc_semi", "slope_mc", "slope_asym", "diversity",
]


def fmt_num(x) -> str:
    """Stable text form of a number for reports ('' for missing)."""
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    return repr(x) if x != int(x) or abs(x) >= 1e16 else f"{x:.1f}"


def _rows_to_text(rows: list[dict], columns: list[str], fmt: str) -> str:
    if fmt == "json":
        clean = [{c: (None if isinstance(r.get(c), float) and math.isnan(r[c]) else r.get(c)) for c in columns}
                 for r in rows]
        return json.dumps(clean, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([r[c] if isinstance(r.get(c), str) else fmt_num(r.get(c)) for c in columns])
    return buf.getvalue()


def _code_str(enc) -> str:
    return "|".join("".join(str(int(b)) for b in row) for row in np.asarray(enc))


# ------------------------------------------------------------------ commands


def cmd_sv(cfg: ExperimentConfig, args) -> list[dict]:
    code = cfg.code()
    rows = []
    for t in range(code.n_sources):
        dom = code.dominant_messages(t)
        rows.append({
            "source": t + 1,
            "sv": int(code.separation_vector[t]),
            "dominant_messages": ";".join("".join(map(str, m)) for m in dom),
            "dominant_codewords": ";".join("".join(map(str, code.encode(m))) for m in dom),
        })
    return rows


SV_COLUMNS = ["source", "sv", "dominant_messages", "dominant_codewords"]
ANALYZE_COLUMNS = ["sr_mode", "demod", "source", "diversity", "coefficient", "coding_gain", "asymptote"]


def cmd_analyze(cfg: ExperimentConfig, args) -> list[dict]:
    code = cfg.code()
    modes = [cfg.sr_mode] if getattr(args, "sr_fixed", False) else ["realistic", "ideal"]
    rows = []
    for sr in modes:
        top = cfg.topology(sr)
        for demod in ("ml", "mdd"):
            for t in range(code.n_sources):
                g = analysis.asymptotic_gains(code, top, t, demod, cfg.raw["analysis"]["literal_dh2"])
                expr = "" if g.coefficient is None else f"{g.coefficient:.4f}*g^-{g.diversity}"
                rows.append({"sr_mode": sr, "demod": demod, "source": t + 1, "diversity": g.diversity,
                             "coefficient": g.coefficient, "coding_gain": g.coding_gain, "asymptote": expr})
    return rows


def _simulate(cfg: ExperimentConfig, args):
    mc = cfg.mc_config(seed=args.seed, mode=args.mode, workers=args.workers,
                       max_trials=args.max_trials, target_errors=args.target_errors)
    top = cfg.topology()
    progress = stderr_progress if args.progress else None
    return mc, top, estimate_abep(top, cfg.code(), mc, progress)


def cmd_simulate(cfg: ExperimentConfig, args) -> list[dict]:
    _, _, ests = _simulate(cfg, args)
    rows = []
    for est in ests:
        for t in range(est.errors.size):
            rows.append({"snr_db": est.snr_db, "source": t + 1, "trials": est.trials, "errors": int(est.errors[t]),
                         "abep_mc": float(est.abep[t]), "ci_lo": est.ci[t][0], "ci_hi": est.ci[t][1]})
    return rows


def _slope(a0, a1, db0, db1):
    if a0 is None or a1 is None or not (a0 > 0 and a1 > 0) or db0 == db1:
        return float("nan")
    return -(math.log10(a1) - math.log10(a0)) / ((db1 - db0) / 10.0)


def cmd_compare(cfg: ExperimentConfig, args) -> list[dict]:
    mc, top, ests = _simulate(cfg, args)
    code = cfg.code()
    lit = cfg.raw["analysis"]["literal_dh2"]
    n_semi = cfg.raw["analysis"]["semi_samples"]
    ml = mc.demod == "ml"
    gains = [analysis.asymptotic_gains(code, top, t, mc.demod, lit) for t in range(code.n_sources)]
    rows = []
    prev = {}
    for est in ests:
        gamma = 10.0 ** (est.snr_db / 10.0)
        for t in range(code.n_sources):
            mc_val = float(est.abep[t])
            asym = gains[t].abep(gamma) if ml else float("nan")
            union = analysis.abep_union_bound(gamma, code, top, t, "asymptotic", literal_dh2=lit) if ml else float("nan")
            semi = (analysis.abep_union_bound(gamma, code, top, t, "semi_analytic", n_samples=n_semi, seed=mc.seed)
                    if ml else float("nan"))
            p = prev.get(t)
            row = {"snr_db": est.snr_db, "source": t + 1, "trials": est.trials, "errors": int(est.errors[t]),
                   "abep_mc": mc_val, "ci_lo": est.ci[t][0], "ci_hi": est.ci[t][1],
                   "abep_semi": semi, "abep_union": union, "abep_asym": asym,
                   "ratio_mc_asym": mc_val / asym if ml and asym > 0 else float("nan"),
                   "ratio_mc_semi": mc_val / semi if ml and semi > 0 else float("nan"),
                   "slope_mc": _slope(p[1], mc_val, p[0], est.snr_db) if p else float("nan"),
                   "slope_asym": float(gains[t].diversity) if ml else float("nan"),
                   "diversity": gains[t].diversity}
            rows.append(row)
            prev[t] = (est.snr_db, mc_val)
    return rows


DESIGN_COLUMNS = ["rank", "encoding", "sv", "k_realistic", "k_ideal", "gain_gap"]


def cmd_design(cfg: ExperimentConfig, args) -> list[dict]:
    net = cfg.raw["network"]
    top = cfg.topology("realistic")
    ranked = analysis.code_search(net["n_sources"], net["n_relays"], top, args.objective, args.limit)
    return [{
        "rank": i + 1,
        "encoding": _code_str(c.encoding),
        "sv": "[" + ",".join(map(str, c.separation_vector)) + "]",
        "k_realistic": "[" + ",".join(f"{k:.4f}" for k in c.k_realistic) + "]",
        "k_ideal": "[" + ",".join(f"{k:.4f}" for k in c.k_ideal) + "]",
        "gain_gap": c.gain_gap,
    } for i, c in enumerate(ranked)]


COMMANDS = {
    "sv": (cmd_sv, SV_COLUMNS),
    "analyze": (cmd_analyze, ANALYZE_COLUMNS),
    "simulate": (cmd_simulate, SIMULATE_COLUMNS),
    "compare": (cmd_compare, COMPARE_COLUMNS),
    "design": (cmd_design, DESIGN_COLUMNS),
}


# ------------------------------------------------------------------ plumbing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--config", help="TOML or JSON experiment file")
    src.add_argument("--preset", help="shipped preset, e.g. fig2 or 'table1 2s2r nc3 ideal'")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--demod", choices=["ml", "mdd"])
    common.add_argument("--sr", choices=["realistic", "ideal"])
    common.add_argument("--mode", choices=["bsc", "waveform"])
    common.add_argument("--snr", type=float, nargs="*", metavar="DB", help="override the SNR grid (dB)")
    common.add_argument("--workers", type=int)
    common.add_argument("--max-trials", type=int)
    common.add_argument("--target-errors", type=int)
    common.add_argument("--progress", action="store_true", help="report Monte Carlo progress on stderr")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="ncrelay", description=__doc__.splitlines()[0])
    p.add_argument("--list-presets", action="store_true", help="print preset names and exit")
    sub = p.add_subparsers(dest="command")
    sub.add_parser("sv", parents=[common], help="separation vector per source")
    sub.add_parser("analyze", parents=[common], help="diversity order and high-SNR coefficient per source")
    sub.add_parser("simulate", parents=[common], help="Monte Carlo ABEP over the SNR grid")
    sub.add_parser("compare", parents=[common], help="Monte Carlo joined with semi-analytic and closed-form ABEP")
    d = sub.add_parser("design", parents=[common], help="rank every encoding matrix of the configured size")
    d.add_argument("--objective", choices=["sv", "gap"], default="sv")
    d.add_argument("--limit", type=int, default=None)
    return p


def resolve_config(args) -> ExperimentConfig:
    if args.config:
        cfg = load(args.config)
    elif args.preset:
        cfg = load_preset(args.preset)
    else:
        raise ConfigError("one of --config or --preset is required")
    # analyze reports both S->R settings unless one was asked for explicitly
    args.sr_fixed = bool(args.sr) or bool(args.preset and normalize_preset_name(args.preset).endswith(
        ("-ideal", "-realistic")))
    return cfg.updated(sr_mode=args.sr, demod=args.demod, snr_db=args.snr)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.list_presets:
        print("\n".join(preset_names()))
        return EXIT_OK
    if not args.command:
        parser.print_help(sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    fn, columns = COMMANDS[args.command]
    try:
        cfg = resolve_config(args)
        fmt = args.format or cfg.raw["output"]["format"]
        rows = fn(cfg, args)
        text = _rows_to_text(rows, columns, fmt)
        out = args.out or cfg.raw["output"]["path"]
        if out:
            with open(out, "w", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except GuardExceeded as e:
        print(f"ncrelay: {e}", file=sys.stderr)
        return EXIT_GUARD
    except ConfigError as e:
        print(f"ncrelay: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"ncrelay: {e}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
