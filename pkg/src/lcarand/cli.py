"""Command-line front end.

Every CSV starts with ``# manifest sha256=<digest>``; with ``--out FILE`` the
manifest itself is written next to it as ``FILE.manifest.json``.  Exit codes:
0 success, 2 invalid input, 3 resource cap.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .characters import parse_character
from .lca import classify_bipartite, format_lca, parse_lca, power_fast, power_naive, s_rank
from .lucas import (
    gaps_in_lucas_set,
    in_J,
    lucas_binomial,
    lucas_decompose,
    lucas_set,
    p_ary_digits,
    zero_blocks,
)
from .measures import IrdiMeasure, ResourceCapError, block_entropy, irdi_entropy_profile
from .measures.modelfile import PRESETS, load_model, mrf_demo_chain
from .randomlab import (
    cesaro_report,
    dispersion_trajectory,
    empirical_randomization,
    even_shift_demo,
    lucas_mixing_test,
    mrf_hm_demo,
    spectral_trajectory,
)

EXIT_OK, EXIT_INVALID, EXIT_RESOURCE = 0, 2, 3

# flags that change how a run executes but not what it computes
_VOLATILE = {"out", "threads"}


@dataclass
class RunManifest:
    command: list[str]
    seed: int
    version: str = __version__
    parameters: dict = field(default_factory=dict)
    wall_clock: float = 0.0

    @property
    def digest(self) -> str:
        core = {"command": self.command, "seed": self.seed, "version": self.version, "parameters": self.parameters}
        return hashlib.sha256(json.dumps(core, sort_keys=True).encode()).hexdigest()

    def dump(self) -> str:
        d = asdict(self)
        d["digest"] = self.digest
        return json.dumps(d, indent=2, sort_keys=True) + "\n"

    @classmethod
    def load(cls, path: str | Path) -> RunManifest:
        d = json.loads(Path(path).read_text())
        m = cls(d["command"], d["seed"], d["version"], d.get("parameters", {}), d.get("wall_clock", 0.0))
        if "digest" in d and d["digest"] != m.digest:
            raise ValueError("manifest digest does not match its contents")
        return m


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(float(x))
    return str(x)


class Output:
    """Collects CSV tables and writes them with the manifest header."""

    def __init__(self, args, argv: list[str]):
        self.args = args
        params = {k: v for k, v in sorted(vars(args).items()) if k not in _VOLATILE and k != "func"}
        self.manifest = RunManifest(_stable_argv(argv), args.seed, parameters=params)
        self.tables: list[tuple[str, list[str], list]] = []
        self.t0 = time.perf_counter()

    def table(self, name: str, header: list[str], rows) -> None:
        self.tables.append((name, header, list(rows)))

    def _render(self, header, rows) -> str:
        buf = io.StringIO()
        buf.write(f"# manifest sha256={self.manifest.digest}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])
        return buf.getvalue()

    def flush(self) -> None:
        self.manifest.wall_clock = round(time.perf_counter() - self.t0, 6)
        out = self.args.out
        if out is None:
            for i, (name, header, rows) in enumerate(self.tables):
                if len(self.tables) > 1:
                    sys.stdout.write(("\n" if i else "") + f"# table {name}\n")
                sys.stdout.write(self._render(header, rows))
            return
        path = Path(out)
        if len(self.tables) > 1:
            path.mkdir(parents=True, exist_ok=True)
            targets = [(path / f"{name}.csv", (header, rows)) for name, header, rows in self.tables]
            (path / "manifest.json").write_text(self.manifest.dump())
        else:
            path.parent.mkdir(parents=True, exist_ok=True)
            targets = [(path, (self.tables[0][1], self.tables[0][2]))] if self.tables else []
            Path(str(path) + ".manifest.json").write_text(self.manifest.dump())
        for target, (header, rows) in targets:
            target.write_text(self._render(header, rows))


def _stable_argv(argv: list[str]) -> list[str]:
    out, skip = [], False
    for tok in argv:
        if skip:
            skip = False
            continue
        flag = tok.split("=", 1)[0]
        if flag in ("--out", "--threads"):
            skip = "=" not in tok
            continue
        out.append(tok)
    return out


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


# ------------------------------------------------------------------ commands


def cmd_lucas(args, out: Output) -> None:
    p = args.p
    if args.digits is not None:
        print(",".join(map(str, p_ary_digits(args.digits, p).digits)))
    elif args.binomial is not None:
        N, n = args.binomial
        print(lucas_binomial(N, n, p))
    elif args.set is not None:
        print(",".join(map(str, lucas_set(args.set, p))))
    elif args.split is not None:
        N, r = args.split
        M, H = lucas_decompose(N, r, p)
        print(f"{M},{H}")
    elif args.zeroblocks is not None:
        blocks = zero_blocks(args.zeroblocks, p)
        print(len(blocks))
        for i, k in blocks:
            print(f"{i},{k}")
    elif args.gaps is not None:
        for a, b in gaps_in_lucas_set(args.gaps, p):
            print(f"{a},{b}")
    elif args.inJ is not None:
        print("true" if in_J(args.inJ, args.s0, p) else "false")


def cmd_lca(args, out: Output) -> None:
    phi = parse_lca(args.text, args.p)
    if args.action == "power":
        res = power_naive(phi, args.n) if args.naive else power_fast(phi, args.n)
        print(format_lca(res))
    elif args.action == "classify":
        form = classify_bipartite(phi)
        if form is None:
            print("not bipartite")
        else:
            print(f"bipartite f={form.f} gamma={format_lca(form.gamma)}")
    elif args.action == "srank":
        print(s_rank(phi, args.S))


def _model(args):
    return load_model(args.model, args.p, args.s)


def cmd_spectrum(args, out: Output) -> None:
    mu = _model(args)
    phi = parse_lca(args.lca, mu.p)
    chi = parse_character(args.chi, mu.p, mu.s)
    traj = spectral_trajectory(mu, phi, chi, args.jmax, args.method, args.samples, args.seed, args.threads)
    _note(f"backend: {traj.parameters['method']}")
    out.table("spectrum", ["j", "re", "im", "abs", "method", "stderr"], traj.rows())
    if args.eps is not None:
        v = cesaro_report(traj, args.eps, args.target)
        _note(f"density(|value| < {args.eps}) = {float(v.density_below.density):.6f} "
              f"target {args.target}: {'pass' if v.passed else 'fail'} (thresholds are engineering choices)")


def cmd_lucasmix(args, out: Output) -> None:
    mu = _model(args)
    chi = parse_character(args.chi, mu.p, mu.s)
    traj = lucas_mixing_test(mu, chi, args.hmax, args.threads)
    out.table("lucasmix", ["h", "re", "im", "abs", "method", "stderr"], traj.rows())


def cmd_dispersion(args, out: Output) -> None:
    phi = parse_lca(args.lca, args.p)
    chi = parse_character(args.chi, args.p, args.s)
    res = dispersion_trajectory(phi, chi, args.S, args.jmax, args.ladder)
    if args.densities:
        rows = []
        for R, rep in res.reports.items():
            rows += [(R, n, c, c / n) for n, c in rep.checkpoints]
        out.table("dispersion-density", ["R", "horizon", "count", "density"], rows)
    else:
        out.table("dispersion", ["j", "rank"], res.ranks)


def cmd_randomize(args, out: Output) -> None:
    mu = _model(args)
    phi = parse_lca(args.lca, mu.p)
    res = empirical_randomization(mu, phi, args.w, args.jmax, args.samples, args.seed)
    ces = res.cesaro_tv
    out.table(
        "randomize",
        ["j", "tv", "cesaro_tv", "noise_floor"],
        [(j, t, float(c), res.noise_floor) for j, t, c in zip(res.indices, res.tv, ces)],
    )


def cmd_entropy(args, out: Output) -> None:
    mu = _model(args)
    levels = list(range(args.min_level, args.max_level + 1))
    if isinstance(mu, IrdiMeasure):
        out.table("entropy", ["N", "bits_per_symbol"], irdi_entropy_profile(mu, levels))
    else:
        rows = []
        for N in levels:
            h = block_entropy(mu, N)
            rows.append((N, h, h / N if N else 0.0))
        out.table("entropy", ["N", "block_bits", "bits_per_symbol"], rows)
        floor = (mu.s - 1) * math.log2(mu.p)
        if rows and rows[-1][2] <= floor:
            _note(f"bits/symbol {rows[-1][2] + 0.0:.4f} <= {floor:.4f}: possibly not HB (annotation, not a verdict)")


def cmd_demo(args, out: Output) -> None:
    if args.name == "even-shift":
        rows = even_shift_demo(args.nmax)
        out.table("even-shift", ["N", "value", "rank"], rows)
        _note(f"final value at N={rows[-1][0]}: {rows[-1][1]:.9f}")
    elif args.name == "mrf-bound":
        rows = mrf_hm_demo(mrf_demo_chain(), range(1, args.kmax + 1), args.span)
        out.table("mrf-bound", ["K", "observed", "bound", "characters"], rows)
        bad = [r for r in rows if r[1] > r[2] + 1e-12]
        _note("observed <= bound for all K" if not bad else f"bound violated at K={[r[0] for r in bad]}")
    elif args.name == "irdi":
        mu = IrdiMeasure(args.alpha, args.n_max)
        profile = irdi_entropy_profile(mu, range(args.min_level, args.max_level + 1))
        out.table("irdi-entropy", ["N", "bits_per_symbol"], profile)
        from .characters import Character

        traj = lucas_mixing_test(mu, Character.parity([0]), args.hmax, args.threads)
        out.table("irdi-lucasmix", ["h", "re", "im", "abs", "method", "stderr"], traj.rows())


# ------------------------------------------------------------------ parser


def _common(sub: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    sub.add_argument("--p", type=int, default=d(2), help="prime modulus (default 2)")
    sub.add_argument("--s", type=int, default=d(1), help="vector dimension of the alphabet (default 1)")
    sub.add_argument("--seed", type=int, default=d(0), help="random seed (default 0)")
    sub.add_argument("--threads", type=int, default=d(os.cpu_count() or 1), help="worker threads")
    sub.add_argument("--out", default=d(None), help="output file (directory for multi-table commands)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lcarand", description="Randomization of measures by linear cellular automata.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _common(ap, suppress=False)
    sp = ap.add_subparsers(dest="command", required=True)

    def sub(name, help_):
        s = sp.add_parser(name, help=help_)
        _common(s, suppress=True)
        return s

    s = sub("lucas", "base-p digit combinatorics")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--digits", type=int, metavar="N")
    g.add_argument("--binomial", type=int, nargs=2, metavar=("N", "n"))
    g.add_argument("--set", type=int, metavar="N")
    g.add_argument("--split", type=int, nargs=2, metavar=("N", "r"))
    g.add_argument("--zeroblocks", type=int, metavar="H")
    g.add_argument("--gaps", type=int, metavar="H")
    g.add_argument("--inJ", type=int, metavar="N")
    s.add_argument("--s0", type=int, default=1)
    s.set_defaults(func=cmd_lucas)

    s = sub("lca", "automaton algebra")
    s.add_argument("action", choices=["power", "classify", "srank"])
    s.add_argument("text", help="polynomial such as 1+x^5+x^-2")
    s.add_argument("--n", type=int, default=1, help="exponent for power")
    s.add_argument("--naive", action="store_true", help="power by repeated multiplication")
    s.add_argument("--S", type=int, default=1, help="separation for srank")
    s.set_defaults(func=cmd_lca)

    model_help = f"preset ({', '.join(PRESETS)}) or model file"

    s = sub("spectrum", "spectral trajectory j -> <chi o Phi^j, mu>")
    s.add_argument("model", help=model_help)
    s.add_argument("--lca", default="1+x")
    s.add_argument("--chi", default="sites=0")
    s.add_argument("--jmax", type=int, default=256)
    s.add_argument("--method", choices=["auto", "exact", "monte-carlo"], default="auto")
    s.add_argument("--samples", type=int, default=0)
    s.add_argument("--eps", type=float, default=None, help="also report the density of |value| < eps")
    s.add_argument("--target", type=float, default=0.9)
    s.set_defaults(func=cmd_spectrum)

    s = sub("lucasmix", "dilated character trajectory h -> <chi^[h], mu>")
    s.add_argument("model", help=model_help)
    s.add_argument("--chi", default="sites=0")
    s.add_argument("--hmax", type=int, default=256)
    s.set_defaults(func=cmd_lucasmix)

    s = sub("dispersion", "S-rank growth of chi o Phi^j")
    s.add_argument("--lca", default="1+x")
    s.add_argument("--chi", default="sites=0")
    s.add_argument("--S", type=int, default=4)
    s.add_argument("--jmax", type=int, default=4096)
    s.add_argument("--ladder", type=int, nargs="+", default=[1, 2, 4, 8, 16])
    s.add_argument("--densities", action="store_true", help="emit density reports instead of ranks")
    s.set_defaults(func=cmd_dispersion)

    s = sub("randomize", "empirical total variation of Phi^j images on w sites")
    s.add_argument("model", help=model_help)
    s.add_argument("--lca", default="1+x")
    s.add_argument("--w", type=int, default=4)
    s.add_argument("--jmax", type=int, default=64)
    s.add_argument("--samples", type=int, default=100_000)
    s.set_defaults(func=cmd_randomize)

    s = sub("entropy", "block entropies or the IRDI entropy profile")
    s.add_argument("model", help=model_help)
    s.add_argument("--min-level", type=int, default=1)
    s.add_argument("--max-level", type=int, default=10)
    s.set_defaults(func=cmd_entropy)

    s = sub("demo", "worked demonstrations")
    s.add_argument("name", choices=["even-shift", "mrf-bound", "irdi"])
    s.add_argument("--nmax", type=int, default=200, help="largest N for even-shift")
    s.add_argument("--kmax", type=int, default=8, help="largest rank for mrf-bound")
    s.add_argument("--span", type=int, default=16, help="support span for mrf-bound")
    s.add_argument("--alpha", type=float, default=0.8)
    s.add_argument("--n-max", type=int, default=24, help="IRDI truncation level")
    s.add_argument("--min-level", type=int, default=4)
    s.add_argument("--max-level", type=int, default=10)
    s.add_argument("--hmax", type=int, default=256)
    s.set_defaults(func=cmd_demo)

    s = sp.add_parser("replay", help="rerun the command recorded in a manifest")
    s.add_argument("manifest")
    s.add_argument("--out", default=None)
    s.set_defaults(func=None)
    return ap


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command == "replay":
        try:
            m = RunManifest.load(args.manifest)
        except (OSError, ValueError, KeyError) as exc:
            _note(f"error: {exc}")
            return EXIT_INVALID
        return main(m.command + (["--out", args.out] if args.out else []))
    out = Output(args, argv)
    try:
        args.func(args, out)
    except ResourceCapError as exc:
        _note(f"resource cap: {exc}")
        return EXIT_RESOURCE
    except (ValueError, TypeError) as exc:
        _note(f"error: {exc}")
        return EXIT_INVALID
    out.flush()
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
