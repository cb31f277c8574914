"""Command-line entry point.

Exit codes: 0 success, 1 invalid input, 2 zero key rate (infeasible),
3 verification failure.  Tabular output is CSV on stdout, preceded by a
version line and a ``# schema=1`` line.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from importlib.metadata import PackageNotFoundError, version

from .bsm import BsmPoint, p_bsm_fock, qber_infty
from .fock import bsm_success_prob_oracle
from .params import (
    E_MAX,
    DecoherenceModel,
    DegenerateError,
    DeviceParams,
    InfeasibleError,
    LinkConfig,
    MemoryModel,
    NoSolutionError,
    parse_tau,
    transmittance,
)
from .sps import SpsScenario, relay_rate_sps, repeater_rate_sps, tau_min_sps
from .sweep import COLUMNS, SweepSpec, run_sweep
from .verify import SUITES
from .wcp import IntensitySearchSpec, WcpScenario, optimize_mu, tau_min_wcp, wcp_rate_at_mu

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_VERIFY = 0, 1, 2, 3
SCHEMA = 1
DEFAULT_P_D = {"sps": 1e-6, "wcp": 0.0}

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "pass" if value else "fail"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def write_csv(header, rows, out=None) -> None:
    out = out or sys.stdout
    out.write(f"# mdiqkd {__version__}\n# schema={SCHEMA}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])


def _tau(text: str) -> float:
    try:
        return parse_tau(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _device_args() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("device and link")
    g.add_argument("--L", "--distance", dest="distance", type=float, default=100.0,
                   help="Alice-Bob distance in km (default: 100)")
    g.add_argument("--alpha", type=float, default=0.17, help="fiber attenuation in dB/km")
    g.add_argument("--eta-d", type=float, default=0.2, help="detector efficiency")
    g.add_argument("--eta-m", type=float, default=0.6, help="memory retrieval efficiency")
    g.add_argument("--p-d", type=float, default=None,
                   help="dark count probability (default: 1e-6 for sps, 0 for wcp)")
    g.add_argument("--nu-s", type=float, default=1e8, help="source repetition rate in Hz")
    g.add_argument("--tau", type=_tau, default=math.inf,
                   help="memory coherence time in source periods; 'inf' for a perfect memory")
    g.add_argument("--model", choices=[m.value for m in DecoherenceModel], default="cutoff",
                   help="decoherence model (analytic rates support cutoff only)")
    s = p.add_argument_group("intensity search (wcp)")
    s.add_argument("--mu-lo", type=float, default=1e-3)
    s.add_argument("--mu-hi", type=float, default=10.0)
    s.add_argument("--mu-grid", type=int, default=64, help="coarse log-grid points")
    s.add_argument("--mu-xtol", type=float, default=1e-10, help="golden-section tolerance")
    return p


def _device(args, source: str) -> DeviceParams:
    p_d = DEFAULT_P_D[source] if args.p_d is None else args.p_d
    return DeviceParams(eta_d=args.eta_d, p_d=p_d, eta_m=args.eta_m, nu_s=args.nu_s)


def _search(args) -> IntensitySearchSpec:
    return IntensitySearchSpec(args.mu_lo, args.mu_hi, args.mu_grid, args.mu_xtol)


def _print_kv(pairs) -> None:
    for key, value in pairs:
        print(f"{key}={fmt(value)}")


def cmd_rate(args) -> int:
    device = _device(args, args.source)
    link = LinkConfig(args.distance, args.alpha)
    memory = MemoryModel(args.tau, DecoherenceModel(args.model))
    if args.source == "wcp":
        if args.scheme == "relay":
            raise UsageError("the relay scheme is available for --source sps only")
        if device.p_d != 0.0:
            raise UsageError("WCP path requires p_d = 0")
        if args.mu is not None:
            report = wcp_rate_at_mu(WcpScenario(device, link, memory, args.mu))
        else:
            report = optimize_mu(device, link, memory, _search(args))
        fields = [
            ("source", "wcp"), ("scheme", "repeater"), ("distance_km", args.distance),
            ("tau", args.tau), ("mu_opt", report.mu_opt), ("p0", report.p0),
            ("p0_single", report.p0_single), ("p_bsm", report.p_bsm), ("f11", report.f11),
            ("avg_attempts", report.avg_attempts), ("qber_x11", report.qber_x11),
            ("qber_z", report.qber_z), ("skr_per_pulse", report.skr_per_pulse),
            ("skr_per_second", report.skr_per_second), ("skr_signed", report.skr_signed),
            ("at_boundary", report.at_boundary),
        ]
    else:
        if args.scheme == "relay":
            report = relay_rate_sps(device, link)
        else:
            report = repeater_rate_sps(SpsScenario(device, link, memory))
        fields = [
            ("source", "sps"), ("scheme", args.scheme), ("distance_km", args.distance),
            ("tau", args.tau), ("p0", report.p0), ("p_bsm", report.p_bsm),
            ("avg_attempts", report.avg_attempts), ("avg_time_s", report.avg_time_s),
            ("qber_x", report.qber_x), ("qber_z", report.qber_z),
            ("skr_per_pulse", report.skr_per_pulse), ("skr_per_second", report.skr_per_second),
            ("skr_signed", report.skr_signed),
        ]
    if args.csv:
        write_csv([k for k, _ in fields], [[v for _, v in fields]])
    else:
        _print_kv(fields)
    return EXIT_OK if report.skr_per_pulse > 0.0 else EXIT_INFEASIBLE


def cmd_sweep(args) -> int:
    source = "wcp" if args.p_d == 0.0 else "sps"
    spec = SweepSpec(
        variable=args.variable,
        lo=args.lo,
        hi=args.hi,
        steps=args.steps,
        scale=args.scale,
        device=_device(args, source),
        distance_km=args.distance,
        alpha_db_per_km=args.alpha,
        tau=args.tau,
        tau_relative=args.tau_relative,
        search=_search(args),
        wcp=not args.no_wcp,
    )
    rows = run_sweep(spec)
    write_csv(COLUMNS, [[row[c] for c in COLUMNS] for row in rows])
    return EXIT_OK


def cmd_tau_min(args) -> int:
    device = _device(args, args.source)
    link = LinkConfig(args.distance, args.alpha)
    if args.source == "wcp":
        if device.p_d != 0.0:
            raise UsageError("WCP path requires p_d = 0")
        try:
            value = tau_min_wcp(device, link, _search(args))
        except InfeasibleError as exc:
            print(f"infeasible: {exc}", file=sys.stderr)
            return EXIT_INFEASIBLE
    else:
        e_inf = qber_infty(BsmPoint(device.eta_md, device.p_d))
        try:
            value = tau_min_sps(e_inf, transmittance(link), args.e_max)
        except NoSolutionError as exc:
            print(f"infeasible: {exc}", file=sys.stderr)
            return EXIT_INFEASIBLE
    _print_kv([("source", args.source), ("distance_km", args.distance), ("tau_min", value),
               ("tau_min_s", value * device.dt)])
    return EXIT_OK


def cmd_verify(args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    ok = True
    for name in names:
        if name == "mc":
            header, rows = SUITES[name](args.seed, args.rounds, args.shards, args.workers)
        else:
            header, rows = SUITES[name]()
        write_csv(header, rows)
        failed = sum(1 for r in rows if not r[-1])
        print(f"{name}: {len(rows) - failed}/{len(rows)} passed", file=sys.stderr)
        ok = ok and failed == 0
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_oracle(args) -> int:
    rows = []
    for n_a in range(1, args.max_n + 1):
        for n_b in range(1, args.max_n + 1):
            for eta in args.eta:
                p_or = bsm_success_prob_oracle(n_a, n_b, eta, cap=args.cap)
                p_fo = p_bsm_fock(n_a, n_b, eta)
                rows.append((n_a, n_b, eta, p_or, p_fo, abs(p_or - p_fo)))
    write_csv(("n_a", "n_b", "eta", "p_oracle", "p_formula", "abs_diff"), rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="mdiqkd",
        description="Key rates for MDI-QKD with heralded quantum memories.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _device_args()

    r = sub.add_parser("rate", parents=[common], help="key rate at one parameter point")
    r.add_argument("--source", choices=["sps", "wcp"], default="sps")
    r.add_argument("--scheme", choices=["repeater", "relay"], default="repeater")
    r.add_argument("--mu", type=float, default=None,
                   help="fixed WCP intensity; optimized when omitted")
    r.add_argument("--csv", action="store_true", help="emit a CSV row instead of key=value lines")
    r.set_defaults(func=cmd_rate)

    s = sub.add_parser("sweep", parents=[common], help="CSV sweep over distance, tau or mu")
    s.add_argument("--variable", choices=["distance_km", "tau", "mu"], default="distance_km")
    s.add_argument("--lo", type=float, required=True)
    s.add_argument("--hi", type=float, required=True)
    s.add_argument("--steps", type=int, default=50)
    s.add_argument("--scale", choices=["linear", "log"], default="linear")
    s.add_argument("--tau-relative", action="store_true",
                   help="read a tau sweep in units of the SPS minimal coherence time")
    s.add_argument("--no-wcp", action="store_true", help="skip the WCP columns")
    s.set_defaults(func=cmd_sweep)

    t = sub.add_parser("tau-min", parents=[common], help="minimal coherence time")
    t.add_argument("--source", choices=["sps", "wcp"], default="sps")
    t.add_argument("--e-max", type=float, default=E_MAX)
    t.set_defaults(func=cmd_tau_min)

    v = sub.add_parser(
        "verify",
        help="run a verification suite",
        description="Monte Carlo runs are bit-reproducible for a fixed --seed and package "
        "version, independent of --shards and --workers.",
    )
    v.add_argument("suite", choices=["oracle", "series", "mc", "all"])
    v.add_argument("--seed", type=int, default=42)
    v.add_argument("--rounds", type=int, default=1_000_000)
    v.add_argument("--shards", type=int, default=1)
    v.add_argument("--workers", type=int, default=1)
    v.set_defaults(func=cmd_verify)

    o = sub.add_parser("oracle", help="Fock-oracle versus closed-form success probabilities")
    o.add_argument("--max-n", type=int, default=5)
    o.add_argument("--eta", type=float, nargs="+", default=[0.1, 0.3, 0.6, 0.9, 1.0])
    o.add_argument("--cap", type=int, default=12, help="largest photon number per side")
    o.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError, DegenerateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
