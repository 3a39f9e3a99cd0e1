"""Command-line interface: build constructions and write CSV/JSON analyses.

Every run writes ``manifest.json`` into the output directory with the resolved
configuration, the level arithmetic and a sha256 digest of each output file.
Exit codes: 0 success, 1 analysis warning, 2 invalid input, 3 resource cap.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable

from . import __version__
from .complexity import (
    check_complexity_bounds,
    estimate_entropy_dimension,
    exp_power_profile,
    language_profile,
    synthetic_profile,
)
from .construction import Construction, ConstructionParams, DegenerateWarning, Ordering, Variant, parse_alpha
from .egs import build_dj, build_egs, rigidity_deficiency, spectral_scan
from .ergodic import (
    XhatCriteria,
    atom_size_profile,
    chain_structure,
    empirical_block_entropy,
    measure_estimate,
    return_times,
    xhat_levels,
)
from .errors import NotStabilized, PermshiftError
from .factors import ComplexityProfile
from .selftest import CORRUPT_SEEDS, run_selftest

log = logging.getLogger("permshift")

PARAM_KEYS = ("variant", "alpha", "l1", "n1", "ordering", "rng_seed", "max_level")


# -- configuration -----------------------------------------------------------------------


@dataclass
class RunConfig:
    command: str
    params: dict
    options: dict = field(default_factory=dict)
    out: str = "out"

    def to_json(self) -> str:
        return json.dumps(
            {"command": self.command, "params": self.params, "options": self.options, "out": self.out},
            sort_keys=True,
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        data = json.loads(text)
        return cls(data["command"], data["params"], data.get("options", {}), data.get("out", "out"))


def thread_count() -> int:
    raw = os.environ.get("SUBSHIFT_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return max(1, min(8, os.cpu_count() or 1))


def _parallel_map(fn: Callable, items: list) -> list:
    workers = min(thread_count(), max(1, len(items)))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(fn, items))


def _int_list(text: str) -> list[int]:
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            bits = [int(b) for b in part.split(":")]
            out.extend(range(*bits))
        else:
            out.append(int(part))
    return out


def _float_list(text: str) -> list[float]:
    return [float(p) for p in str(text).split(",") if p.strip()]


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


# -- output ------------------------------------------------------------------------------------


class Output:
    """Collects output files; writes are serialized and digested."""

    def __init__(self, directory: str | Path):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.files: dict[str, str] = {}

    def _write(self, name: str, text: str) -> None:
        data = text.encode("utf-8")
        (self.dir / name).write_bytes(data)
        self.files[name] = hashlib.sha256(data).hexdigest()

    def csv(self, name: str, header: list[str], rows) -> None:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
        self._write(name, buf.getvalue())

    def json(self, name: str, payload) -> None:
        self._write(name, json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n")

    def manifest(self, config: RunConfig, construction: Construction | None, status: str, notes: list[str]) -> None:
        payload = {
            "version": __version__,
            "config": json.loads(config.to_json()),
            "status": status,
            "notes": notes,
            "outputs": [{"file": k, "sha256": v} for k, v in sorted(self.files.items())],
        }
        if construction is not None:
            payload["construction"] = construction.manifest()
        text = json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n"
        (self.dir / "manifest.json").write_text(text, encoding="utf-8", newline="\n")


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def _jsonable(v):
    # big integers as decimal strings; Fractions as "p/q"
    if isinstance(v, bool) or v is None:
        return v
    if isinstance(v, int):
        return str(v) if abs(v) >= 2 ** 53 else v
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


# -- commands ----------------------------------------------------------------------------------


def _construction(params: dict) -> Construction:
    p = ConstructionParams.from_dict(params)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DegenerateWarning)
        c = Construction(p)
    for w in caught:
        log.warning("%s", w.message)
    return c


def cmd_construct(c: Construction, opts: dict, out: Output, notes: list[str]) -> int:
    rows = []
    for g in c.gens:
        rows.append([g.level, g.word_length, g.word_count, g.permuted.size if g.permuted else 0, g.spacer_count, g.materialized])
        if opts.get("words") and g.materialized:
            out._write(f"words_level{g.level}.txt", "".join(w + "\n" for w in g.words))
    out.csv("levels.csv", ["level", "word_length", "word_count", "permuted_count", "spacer_count", "materialized"], rows)
    if len(c.gens) < c.params.max_level and not c.absorbing:
        notes.append(f"stopped at level {len(c.gens)}")
    return 0


def cmd_profile(c: Construction, opts: dict, out: Output, notes: list[str]) -> int:
    prof = language_profile(c, opts["nmax"])
    out.csv("profile.csv", ["n", "count"], [[n, prof.counts[n]] for n in sorted(prof.counts)])
    notes.extend(prof.notes)
    code = 0
    if opts.get("bounds"):
        report = check_complexity_bounds(prof, c)
        out.csv(
            "bounds.csv",
            ["level", "k", "length", "lower", "count", "upper", "ok"],
            [[r.level, r.k, r.length, r.lower, r.count, r.upper, r.ok] for r in report.rows],
        )
        if not report.ok:
            notes.append(f"{len(report.violations)} counting-bound violations")
            code = 1
    if prof.stabilized_up_to is not None and prof.stabilized_up_to < prof.n_max:
        code = max(code, NotStabilized.exit_code)
    return code


def _read_profile(path: str) -> ComplexityProfile:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return ComplexityProfile({int(r["n"]): int(r["count"]) for r in reader})


def cmd_dimension(c: Construction | None, opts: dict, out: Output, notes: list[str]) -> int:
    if opts.get("profile_file"):
        prof = _read_profile(opts["profile_file"])
        source = opts["profile_file"]
    elif opts.get("synthetic"):
        kind, _, arg = opts["synthetic"].partition(":")
        n_max = opts["nmax"]
        if kind == "exp":
            prof = exp_power_profile(float(arg), n_max)
        elif kind == "poly":
            prof = synthetic_profile(lambda n: (n + 1) ** float(arg or 1), n_max)
        elif kind == "expn":
            prof = synthetic_profile(lambda n: 2 ** n, n_max)
        else:
            raise PermshiftError(f"unknown synthetic profile {kind!r}")
        source = opts["synthetic"]
    else:
        prof = language_profile(c, opts["nmax"])
        source = "construction"
    est = estimate_entropy_dimension(prof, method=opts["method"])
    payload = est.to_dict()
    payload.pop("beta_grid")
    payload["source"] = source
    payload["n_max"] = prof.n_max
    out.json("dimension.json", payload)
    return 0


def cmd_measure(c: Construction, opts: dict, out: Output, notes: list[str]) -> int:
    length = opts["length"]
    text = c.limit_prefix(length)
    stats = _parallel_map(lambda u: measure_estimate(c, u, length, text), opts["word"])
    rows = []
    for s in stats:
        rows.append([s.word, s.prefix_length, s.occurrence_count, s.frequency.numerator, s.frequency.denominator,
                     "" if s.aligned_only is None else s.aligned_only])
        if s.low_confidence:
            notes.append(f"{s.word}: fewer than 20 occurrences")
        if s.below_floor:
            notes.append(f"{s.word}: |u| exceeds 1% of L")
    out.csv("measure.csv", ["u", "L", "count", "frequency_num", "frequency_den", "aligned_only"], rows)
    return 0


def cmd_return_time(c: Construction, opts: dict, out: Output, notes: list[str]) -> int:
    ns = opts["n"]
    records = _parallel_map(lambda t: return_times(c, t, ns, opts["budget"]), opts["offsets"])
    l1 = c.length(1)
    l2 = c.length(2) if c.max_level >= 2 else None
    rows = []
    for recs in records:
        for r in recs:
            rows.append([r.offset, r.n, r.return_time, r.return_time % l1, "" if l2 is None else r.return_time % l2])
    out.csv("return_times.csv", ["offset", "n", "R_n", "R_n_mod_l1", "R_n_mod_l2"], rows)
    return 0


def cmd_chains(c: Construction, opts: dict, out: Output, notes: list[str]) -> int:
    j = opts["level"]
    crit = XhatCriteria(Fraction(opts["eta"]))
    rows = []
    census = None
    for t in opts["offsets"]:
        cs = chain_structure(c, t, j)
        census = cs
        member = all(ok for _, ok in xhat_levels(c, t, crit))
        rows.append([t, j, cs.slot, cs.permuted_flag, cs.p, cs.q, member])
    out.csv("chains.csv", ["offset", "level", "slot", "permuted", "p", "q", "xhat_member"], rows)
    if census is not None:
        out.json("chain_census.json", {"level": j, "chains": list(census.chains), "trailing_run": census.trailing_run,
                                       "permuted_count": census.permuted_count, "total": census.total})
    return 0


def cmd_egs(c: Construction, opts: dict, out: Output, notes: list[str]) -> int:
    seq = build_egs(c, opts["egs_levels"] or c.max_level)
    rows = []
    for j, (s, card, closed) in enumerate(zip(seq.sets, seq.cardinalities, seq.closed_forms), start=1):
        sample = " ".join(str(int(x)) for x in s[:8])
        rows.append([j, card, "" if closed is None else closed, sample])
    out.csv("egs.csv", ["j", "S_j_size", "closed_form", "s_n_sample"], rows)
    payload = {"cardinalities": list(seq.cardinalities), "q_sets": [list(q) for q in seq.q_sets],
               "upper_dimension_estimate": seq.upper_dimension_estimate, "level_ratios": list(seq.level_ratios)}
    dj = []
    for j in range(2, c.max_level + 1):
        try:
            d = build_dj(c, j)
        except PermshiftError as exc:
            notes.append(f"D_{j}: {exc}")
            continue
        dj.append({"level": j, "size": len(d.representatives), "expected": d.expected_size, "q_set": list(d.q_set)})
    payload["d_sets"] = dj
    out.json("egs.json", payload)
    return 0


def cmd_spectral(c: Construction, opts: dict, out: Output, notes: list[str]) -> int:
    diag = spectral_scan(c, opts["word"], length=opts["length"], block_level=opts["block_level"],
                         thetas=_float_list(opts["thetas"]) if opts.get("thetas") else None)
    lag_rows, block_rows, theta_rows = [], [], []
    for cy in diag.cylinders:
        lag_rows += [[cy.word, k, str(a), v] for k, a, v in zip(cy.lags, cy.autocorrelation, cy.co_occurrence)]
        block_rows += [[cy.word, k, v] for k, v in zip(cy.block_lags, cy.block_co_occurrence)]
        theta_rows += [[cy.word, th, m] for th, m in zip(cy.thetas, cy.magnitudes)]
        notes.append(f"{cy.word}: empty-intersection density {cy.empty_intersection_density}")
    if diag.undersampled:
        notes.append("L < 100 * max lag")
    out.csv("spectral_lags.csv", ["u", "lag", "autocorr", "co_occurrence"], lag_rows)
    out.csv("spectral_block_lags.csv", ["u", "lag", "co_occurrence"], block_rows)
    out.csv("spectral_theta.csv", ["u", "theta", "magnitude"], theta_rows)
    return 0


def cmd_rigidity(c: Construction, opts: dict, out: Output, notes: list[str]) -> int:
    levels = opts["rigidity_levels"] or list(range(1, c.max_level))
    rows = []
    for u in opts["word"]:
        rep = rigidity_deficiency(c, u, levels, opts["length"])
        rows += [[u, r.level, r.lag, r.numerator, r.denominator] for r in rep.rows]
        if not rep.nonincreasing:
            notes.append(f"{u}: deficiency not nonincreasing")
        if rep.undersampled:
            notes.append(f"{u}: L < 100 * largest lag")
    out.csv("rigidity.csv", ["u", "level", "lag", "deficiency_num", "deficiency_den"], rows)
    return 0


def cmd_entropy(c: Construction, opts: dict, out: Output, notes: list[str]) -> int:
    h = empirical_block_entropy(c, opts["nmax"], opts["length"])
    out.csv("block_entropy.csv", ["n", "H_n"], h)
    if opts.get("offsets"):
        betas = _float_list(opts["betas"])
        rows = atom_size_profile(c, opts["offsets"], opts["n"], betas, opts["length"])
        out.csv(
            "atom_sizes.csv",
            ["offset", "n", "count", "low_confidence"] + [f"beta_{b}" for b in betas],
            [[r.offset, r.n, r.count, r.low_confidence] + [v for _, v in r.values] for r in rows],
        )
    return 0


COMMANDS = {
    "construct": cmd_construct,
    "profile": cmd_profile,
    "dimension": cmd_dimension,
    "measure": cmd_measure,
    "return-time": cmd_return_time,
    "chains": cmd_chains,
    "egs": cmd_egs,
    "spectral": cmd_spectral,
    "rigidity": cmd_rigidity,
    "entropy": cmd_entropy,
}


# -- argument parsing ------------------------------------------------------------------------


def _add_params(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("construction")
    g.add_argument("--variant", choices=[v.value for v in Variant], default="marker")
    g.add_argument("--alpha", type=parse_alpha, default=Fraction(1, 2), help="rational, e.g. 1/2")
    g.add_argument("--l1", type=int, default=25)
    g.add_argument("--n1", type=int, default=25)
    g.add_argument("--levels", dest="max_level", type=_positive, default=3, help="highest level to build")
    g.add_argument("--ordering", choices=[o.value for o in Ordering], default="lex")
    g.add_argument("--rng-seed", dest="rng_seed", type=int, default=None)
    p.add_argument("--config", help="JSON file whose keys override the flags")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="permshift", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="build levels and write their arithmetic")
    _add_params(p)
    p.add_argument("--words", action="store_true", help="also write materialized words")

    p = sub.add_parser("profile", help="|B_n| for n <= nmax")
    _add_params(p)
    p.add_argument("--nmax", type=_positive, default=50)
    p.add_argument("--bounds", action="store_true", help="check the counting bounds")

    p = sub.add_parser("dimension", help="entropy-dimension estimate")
    _add_params(p)
    p.add_argument("--nmax", type=_positive, default=1250)
    p.add_argument("--profile-file", help="CSV with columns n,count")
    p.add_argument("--synthetic", help="exp:TAU, poly:D or expn")
    p.add_argument("--method", choices=["loglog", "scan"], default="loglog")

    p = sub.add_parser("measure", help="cylinder frequencies in w[0, L)")
    _add_params(p)
    p.add_argument("--word", action="append", required=True)
    p.add_argument("--length", type=_positive, default=100_000)

    p = sub.add_parser("return-time", help="first return times R_n")
    _add_params(p)
    p.add_argument("--offsets", type=_int_list, default=[0])
    p.add_argument("--n", type=_int_list, default=[1])
    p.add_argument("--budget", type=_positive, default=1_000_000)

    p = sub.add_parser("chains", help="chain structure and X-hat membership")
    _add_params(p)
    p.add_argument("--offsets", type=_int_list, default=[0])
    p.add_argument("--level", type=_positive, default=1)
    p.add_argument("--eta", default="3/8")

    p = sub.add_parser("egs", help="entropy generating sets S_j and D_j")
    _add_params(p)
    p.add_argument("--egs-levels", dest="egs_levels", type=_positive, default=None)

    p = sub.add_parser("spectral", help="autocorrelation and Fourier scans")
    _add_params(p)
    p.add_argument("--word", action="append", required=True)
    p.add_argument("--length", type=_positive, default=1_000_000)
    p.add_argument("--block-level", dest="block_level", type=_positive, default=1)
    p.add_argument("--thetas", help="comma-separated frequencies")

    p = sub.add_parser("rigidity", help="μ(σ^{l_n} A Δ A) along the levels")
    _add_params(p)
    p.add_argument("--word", action="append", required=True)
    p.add_argument("--rigidity-levels", dest="rigidity_levels", type=_int_list, default=None)
    p.add_argument("--length", type=_positive, default=1_000_000)

    p = sub.add_parser("entropy", help="block entropies H_n and atom sizes")
    _add_params(p)
    p.add_argument("--nmax", type=_positive, default=20)
    p.add_argument("--length", type=_positive, default=100_000)
    p.add_argument("--offsets", type=_int_list, default=None)
    p.add_argument("--n", type=_int_list, default=[1, 2, 4, 8, 16])
    p.add_argument("--betas", default="0,0.5,1")

    p = sub.add_parser("selftest", help="run the tiny-instance oracle suite")
    p.add_argument("--quick", action="store_true")
    p.add_argument("--inject-fault", dest="inject_fault", action="store_true", help="use a corrupted seed table")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = vars(args).copy()
    if values.get("config"):
        with open(values["config"]) as fh:
            overrides = json.load(fh)
        values.update(overrides.pop("params", {}))
        values.update(overrides.pop("options", {}))
        values.update(overrides)
    params = {k: values.pop(k) for k in PARAM_KEYS}
    params["alpha"] = str(parse_alpha(params["alpha"]))
    command = values.pop("command")
    out = values.pop("out")
    for k in ("config", "verbose"):
        values.pop(k, None)
    return RunConfig(command, params, values, out)


def _selftest(args) -> int:
    results = run_selftest(quick=args.quick, seeds=CORRUPT_SEEDS if args.inject_fault else None)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail} ({r.seconds:.3f}s)")
    failed = [r for r in results if not r.passed]
    if failed:
        print(f"selftest failed at: {failed[0].name}")
        return 1
    print(f"selftest passed ({len(results)} checks)")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "selftest":
        return _selftest(args)
    config = resolve_config(args)
    out = Output(config.out)
    notes: list[str] = []
    construction = None
    try:
        if not (config.command == "dimension" and (config.options.get("profile_file") or config.options.get("synthetic"))):
            construction = _construction(config.params)
        code = COMMANDS[config.command](construction, config.options, out, notes)
    except PermshiftError as exc:
        notes.append(f"{type(exc).__name__}: {exc}")
        out.manifest(config, construction, "incomplete", notes)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    out.manifest(config, construction, "complete" if code == 0 else "warning", notes)
    for n in notes:
        log.info("%s", n)
    return code


if __name__ == "__main__":
    sys.exit(main())
