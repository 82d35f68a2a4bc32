"""Command-line interface: ``ddequiv {check,sim,inject,study}``.

Exit codes: 0 equivalent (possibly up to global phase), 1 not equivalent,
2 probably equivalent (timeout after clean simulations), 3 usage error,
4 input error (unreadable or unparsable file).
"""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import report
from .checker import Outcome, StrategyKind, check_flow, check_simulation
from .circuit import Circuit, inject_errors
from .dd import new_package
from .errors import CircuitError, QubitCountMismatch, TooFewGates
from .qasm import QasmError, emit, parse_file


class UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(report.EXIT_USAGE)


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return v


def _pos_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _nonneg_float(text: str) -> float:
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _ArgumentParser(prog="ddequiv", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    c = sub.add_parser("check", help="check two circuits for equivalence")
    c.add_argument("file1")
    c.add_argument("file2")
    c.add_argument("--strategy", choices=[s.value for s in StrategyKind],
                   default=StrategyKind.PROPORTIONAL.value)
    c.add_argument("--sims", type=_nonneg_int, default=16,
                   help="random basis-state simulations before the complete check")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--timeout", type=_nonneg_float, default=3600.0,
                   help="seconds allowed for the complete check")
    c.add_argument("--tolerance", type=_pos_float, default=1e-10,
                   help="numeric tolerance of the complex table")
    c.add_argument("--fid-tolerance", type=_pos_float, default=1e-8,
                   help="fidelities below 1 - this value count as a difference")
    c.add_argument("--json", action="store_true", help="print a JSON report")
    c.add_argument("--no-timings", action="store_true",
                   help="report timings as null so reports are reproducible byte for byte")

    s = sub.add_parser("sim", help="simulate a circuit on one basis state")
    s.add_argument("file")
    s.add_argument("--state", type=_nonneg_int, default=0)

    i = sub.add_parser("inject", help="remove random gates from a circuit")
    i.add_argument("file")
    i.add_argument("--remove", type=_nonneg_int, default=1)
    i.add_argument("--seed", type=int, default=0)
    i.add_argument("--out", help="output path (default: stdout)")

    st = sub.add_parser("study", help="simulation-only detection study over a directory")
    st.add_argument("dir")
    st.add_argument("--instances", type=int, default=100)
    st.add_argument("--remove", type=_nonneg_int, default=1)
    st.add_argument("--sims", type=_nonneg_int, default=16)
    st.add_argument("--seed", type=int, default=0)
    st.add_argument("--jobs", type=int, default=1, help="worker threads")
    st.add_argument("--no-timings", action="store_true")
    return p


def format_amplitude(a: complex, eps: float = 5e-9) -> str:
    def num(x):
        s = f"{x:.8f}".rstrip("0")
        return s + "0" if s.endswith(".") else s
    if abs(a.imag) < eps:
        return num(a.real + 0.0)
    sign = "+" if a.imag >= 0 else "-"
    return f"{num(a.real + 0.0)}{sign}{num(abs(a.imag))}j"


def _load(path: str) -> Circuit:
    try:
        return parse_file(path)
    except QasmError as exc:
        exc.path = path
        raise


def _dump_state(title: str, amps, n: int, limit: int = 32) -> list[str]:
    lines = [f"  {title}:"]
    for k, (idx, a) in enumerate(amps.items()):
        if k == limit:
            lines.append(f"    ... {len(amps) - limit} more")
            break
        lines.append(f"    {idx:0{n}b}: {format_amplitude(a)}")
    return lines


def cmd_check(args) -> int:
    g = _load(args.file1)
    g2 = _load(args.file2)
    if g.n != g2.n:
        raise QubitCountMismatch(f"{args.file1} has {g.n} qubits, {args.file2} has {g2.n}")
    verdict = check_flow(g, g2, r=args.sims, strategy=StrategyKind(args.strategy),
                         seed=args.seed, timeout=args.timeout, eps=args.tolerance,
                         fid_eps=args.fid_tolerance)
    name = f"{Path(args.file1).stem} vs {Path(args.file2).stem}"
    if args.json:
        rep = report.run_report(name, g, g2, verdict, args.seed, not args.no_timings)
        sys.stdout.write(report.dumps(rep))
    else:
        out = [f"{name}: {verdict.outcome.value}"]
        if verdict.phase is not None:
            out[0] += f" (phase {verdict.phase:.10f} rad)"
        cex = verdict.counterexample
        if cex is not None:
            out.append(f"counterexample: {cex.describe()} fidelity {cex.fidelity:.6f}")
            out += _dump_state("output of " + Path(args.file1).name, cex.output_g, g.n)
            out += _dump_state("output of " + Path(args.file2).name, cex.output_g2, g.n)
        s = verdict.stats
        out.append(f"simulations: {s.num_sims}  max nodes: {s.max_nodes}  "
                   f"avg nodes: {s.avg_nodes:.2f}")
        if not args.no_timings:
            out.append(f"time: sim {s.t_sim:.3f}s  check {s.t_ec:.3f}s  "
                       f"total {s.t_total:.3f}s")
        print("\n".join(out))
    if verdict.outcome is Outcome.NOT_EQUIVALENT:
        return report.EXIT_NOT_EQUIVALENT
    if verdict.outcome is Outcome.PROBABLY_EQUIVALENT:
        return report.EXIT_PROBABLY_EQUIVALENT
    return report.EXIT_EQUIVALENT


def cmd_sim(args) -> int:
    c = _load(args.file)
    if args.state >= 1 << c.n:
        raise UsageError(f"--state {args.state} out of range for {c.n} qubits")
    pkg = new_package()
    amps = pkg.amplitudes(pkg.simulate(c, args.state))
    for idx, a in amps.items():
        print(f"{idx:0{c.n}b}: {format_amplitude(a)}")
    return 0


def cmd_inject(args) -> int:
    c = _load(args.file)
    text = emit(inject_errors(c, args.remove, args.seed))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _study_one(c: Circuit, g2: Circuit, k: int, r: int, seed: int):
    bad = inject_errors(g2, k, seed)
    v = check_simulation(c, bad, r, seed)
    return v.outcome is Outcome.NOT_EQUIVALENT, v.stats.num_sims, v.stats.t_sim


def instance_seed(seed: int, t: int) -> int:
    """Seed of the ``t``-th injected instance of a study."""
    return seed * 1_000_003 + t


def cmd_study(args) -> int:
    if args.instances < 1:
        raise UsageError("--instances must be at least 1")
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    root = Path(args.dir)
    if not root.is_dir():
        raise OSError(f"{root} is not a directory")
    rows, errors = [], []
    files = sorted(p for p in root.glob("*.qasm") if not p.name.endswith(".g2.qasm"))
    with ThreadPoolExecutor(max_workers=args.jobs) as pool:
        for path in files:
            try:
                g = _load(str(path))
                other = path.with_name(path.stem + ".g2.qasm")
                g2 = _load(str(other)) if other.exists() else g
                if g2.n != g.n:
                    raise QubitCountMismatch(f"{other.name} has {g2.n} qubits, expected {g.n}")
                if args.remove > len(g2.gates):
                    raise TooFewGates(f"cannot remove {args.remove} of {len(g2.gates)} gates")
            except (QasmError, CircuitError, OSError, ValueError) as exc:
                errors.append({"file": path.name, "message": str(exc)})
                print(f"{path.name}: {exc}", file=sys.stderr)
                continue
            futures = [pool.submit(_study_one, g, g2, args.remove, args.sims,
                                   instance_seed(args.seed, t))
                       for t in range(args.instances)]
            results = [f.result() for f in futures]
            times = [t for _, _, t in results]
            timings = not args.no_timings
            rows.append({
                "benchmark": path.stem,
                "n": g.n,
                "gates": len(g2.gates),
                "instances": len(results),
                "avg_sims": sum(s for _, s, _ in results) / len(results),
                "avg_t_sim": round(sum(times) / len(times), 3) if timings else None,
                "max_t_sim": round(max(times), 3) if timings else None,
                "p_success": sum(1 for ok, _, _ in results if ok) / len(results),
            })
    sys.stdout.write(report.dumps({
        "instances": args.instances, "removed": args.remove, "sims": args.sims,
        "seed": args.seed, "rows": rows, "errors": errors}))
    return 0


_COMMANDS = {"check": cmd_check, "sim": cmd_sim, "inject": cmd_inject, "study": cmd_study}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (UsageError, TooFewGates) as exc:
        print(f"ddequiv: error: {exc}", file=sys.stderr)
        return report.EXIT_USAGE
    except QasmError as exc:
        where = getattr(exc, "path", "<input>")
        for d in exc.diagnostics:
            print(f"{where}:{d}", file=sys.stderr)
        return report.EXIT_INPUT
    except (OSError, CircuitError, QubitCountMismatch) as exc:
        print(f"ddequiv: error: {exc}", file=sys.stderr)
        return report.EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
