"""Command-line driver: ``deltaphi <command> [--config run.json] [--out DIR] [overrides]``.

Exit codes: 0 success, 2 configuration or validation error, 3 ``w`` outside
the range, 4 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field as dc_field, fields, replace
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from ._validation import check_delta, check_tol, resolve_field, v0_function, w_source
from .constants import compute_constants, scaling_csv, scaling_study
from .errors import DeltaPhiError, NumericalError, SolvabilityError, ValidationError
from .estimator import DifferenceInverse
from .gram import gram_matrix
from .grid import GridFunction
from .io import format_csv, format_record, read_csv
from .jets import contraction_check, cp_bound, propagate, trajectory_csv
from .kernel import constant_element, oscillation_profile, seed_from_csv, step_element, verify_invariance
from .shift import ShiftMap, orbit

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVABILITY, EXIT_NUMERICAL = 0, 2, 3, 4
COMMANDS = ("constants", "solve", "kernel", "orbit", "jets", "gram", "roundtrip")


@dataclass
class RunConfig:
    field: object = "sin"
    alpha: float = 0.1
    delta: float = 0.1
    p: int = 3
    grid_points: int = 1001
    tol: float = 1e-10
    w: str = "telescope:cos"
    w_csv: Optional[str] = None
    v0: str = "cos"
    output_dir: str = "out"
    alphas: List[float] = dc_field(default_factory=list)
    modes: int = 16
    weight: str = "jacobian"
    t0: float = 1.0
    k_min: int = 0
    k_max: int = 200
    seed: str = "step"
    seed_csv: Optional[str] = None
    radii: List[float] = dc_field(default_factory=lambda: [0.1, 0.01, 0.001])
    plot: bool = False

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ValidationError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValidationError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    def validated(self) -> "RunConfig":
        if int(self.grid_points) < 11:
            raise ValidationError("grid_points must be >= 11")
        if int(self.p) < 1:
            raise ValidationError("p must be >= 1")
        check_delta(self.delta)
        check_tol(self.tol)
        return self


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return path


def _plot(out: Path, name: str, x, ys, labels, xlabel, ylabel, logx=False):
    import matplotlib

    matplotlib.use("svg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "deltaphi"
    fig, ax = plt.subplots(figsize=(6, 4))
    for y, lab in zip(ys, labels):
        ax.plot(x, y, label=lab)
    if logx:
        ax.set_xscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if len(ys) > 1:
        ax.legend()
    fig.tight_layout()
    fig.savefig(out / name, format="svg", metadata={"Date": None})
    plt.close(fig)


def _setup(cfg: RunConfig):
    fld = resolve_field(cfg.field)
    smap = ShiftMap.build(fld, cfg.alpha)
    return fld, smap, compute_constants(smap, cfg.delta)


def _grid(smap, n):
    return np.linspace(smap.t_minus, smap.t_plus, int(n))


def cmd_constants(cfg: RunConfig, out: Path) -> int:
    fld, smap, report = _setup(cfg)
    _write(out, "constants.txt", report.to_record())
    print(report.to_record(), end="")
    if cfg.alphas:
        rows = scaling_study(fld, cfg.delta, cfg.alphas)
        _write(out, "scaling.csv", scaling_csv(rows))
        if cfg.plot:
            _plot(out, "scaling.svg", [r.alpha for r in rows], [[r.alpha_K_phi for r in rows]],
                  ["alpha*K_phi"], "alpha", "alpha*K_phi", logx=True)
    return EXIT_OK


def _w_callable(cfg, fld, smap):
    if cfg.w_csv:
        header, data = read_csv(cfg.w_csv)
        return GridFunction(data[:, 0], data[:, 1]), data[:, 0]
    return w_source(cfg.w, fld, cfg.alpha), _grid(smap, cfg.grid_points)


def cmd_solve(cfg: RunConfig, out: Path) -> int:
    fld, smap, _ = _setup(cfg)
    w, grid = _w_callable(cfg, fld, smap)
    est = DifferenceInverse(cfg.field, cfg.alpha, cfg.delta, cfg.tol)
    try:
        est.fit(grid, w)
    except SolvabilityError as exc:
        print(f"solvability failed: {exc}", file=sys.stderr)
        return EXIT_SOLVABILITY
    _write(out, "v.csv", format_csv(("t", "value"), zip(est.v_.grid, est.v_.values)))
    _write(out, "verdict.txt", format_record(est.verdict_.as_record()))
    record = dict(est.solution_.as_record(), anchor="v=0 at the repelling fixed point")
    _write(out, "solution.txt", format_record(record))
    print(format_record(record), end="")
    if cfg.plot:
        _plot(out, "v.svg", est.v_.grid, [est.v_.values], ["v"], "t", "v")
    return EXIT_OK


def cmd_roundtrip(cfg: RunConfig, out: Path) -> int:
    fld, smap, report = _setup(cfg)
    v0 = v0_function(cfg.v0, fld)
    w = w_source(f"telescope:{cfg.v0}", fld, cfg.alpha)
    grid = _grid(smap, cfg.grid_points)
    est = DifferenceInverse(cfg.field, cfg.alpha, cfg.delta, cfg.tol).fit(grid, w)
    diff = est.v_.values - np.asarray(v0(grid), dtype=float)
    shift = float(np.mean(diff))
    err = float(np.max(diff) - np.min(diff))
    _write(out, "roundtrip.csv", format_csv(("t", "v", "v0", "diff"),
                                            zip(grid, est.v_.values, v0(grid), diff)))
    record = {"v0": cfg.v0, "alpha": cfg.alpha, "max_error_mod_constant": err, "offset": shift,
              "residual_sup": est.residual_sup_, "lip_ratio": est.lip_ratio_, "K_phi": report.K_phi,
              "lip_bound_holds": est.lip_ratio_ <= report.K_phi}
    _write(out, "roundtrip.txt", format_record(record))
    print(format_record(record), end="")
    return EXIT_OK


def cmd_kernel(cfg: RunConfig, out: Path) -> int:
    _, smap, report = _setup(cfg)
    t0 = float(smap.to_working(cfg.t0))
    if cfg.seed_csv:
        elem = seed_from_csv(smap, t0, cfg.seed_csv)
    elif cfg.seed == "constant":
        elem = constant_element(smap, t0)
    elif cfg.seed == "step":
        elem = step_element(smap, t0)
    else:
        raise ValidationError(f"seed must be 'constant', 'step' or a seed_csv path, got {cfg.seed!r}")
    rows = []
    for end in ("minus", "plus"):
        t_end = smap.t_minus if end == "minus" else smap.t_plus
        user_end = float(smap.from_working(t_end))
        for r, osc in oscillation_profile(smap, elem, end, cfg.radii, report=report):
            rows.append((user_end, r, osc))
    _write(out, "kernel.csv", format_csv(("endpoint", "radius", "oscillation"), rows))
    probes = np.linspace(smap.t_minus, smap.t_plus, 203)[1:-1]
    record = {"seed": elem.seed_kind, "seed_oscillation": elem.seed_oscillation,
              "invariance_defect": verify_invariance(smap, elem, probes, report)}
    _write(out, "kernel.txt", format_record(record))
    print(format_record(record), end="")
    return EXIT_OK


def cmd_orbit(cfg: RunConfig, out: Path) -> int:
    _, smap, _ = _setup(cfg)
    orb = orbit(smap, float(smap.to_working(cfg.t0)), cfg.k_min, cfg.k_max)
    pts = np.asarray(smap.from_working(orb.points), dtype=float)
    _write(out, "orbit.csv", format_csv(("k", "t"), zip(orb.ks, pts)))
    if cfg.plot:
        _plot(out, "orbit.svg", orb.ks, [pts], ["t_k"], "k", "t")
    return EXIT_OK


def cmd_jets(cfg: RunConfig, out: Path) -> int:
    _, smap, report = _setup(cfg)
    p = int(cfg.p)
    states = propagate(smap, float(smap.to_working(cfg.t0)), p, cfg.k_max)
    text = trajectory_csv(states)
    if smap.orientation == -1:
        # Phi^k = R o Phi_w^k o R with R(t) = t_minus + t_plus - t flips odd-order signs
        lines = text.splitlines()
        header, rows = lines[0].split(","), []
        for st, k in zip(states, range(len(states))):
            signs = np.array([(-1.0) ** (j + 1) for j in range(1, p + 1)])
            rows.append((k, float(smap.from_working(st.t)), *(st.jet * signs)))
        text = format_csv(header, rows)
    _write(out, "jets.csv", text)
    con = contraction_check(smap, p, cfg.delta, report)
    cp = cp_bound(smap, p, report, con)
    _write(out, "cp_report.txt", cp.to_record())
    print(cp.to_record(), end="")
    if cfg.plot:
        norms = [st.jet_norm for st in states]
        _plot(out, "jets.svg", list(range(len(states))), [norms], ["|jet|_1"], "k", "|jet|_1")
    return EXIT_OK


def cmd_gram(cfg: RunConfig, out: Path) -> int:
    fld = resolve_field(cfg.field)
    name = "sin" if fld.name == "sine" else fld.name
    res = gram_matrix(cfg.alpha, int(cfg.modes), cfg.weight, field_name=name)
    _write(out, "gram.csv", res.to_csv())
    record = {"alpha": res.alpha, "modes": int(cfg.modes), "weight": res.weight,
              "max_offdiag": res.max_offdiag, "max_diag_error": res.max_diag_error}
    _write(out, "gram.txt", format_record(record))
    print(format_record(record), end="")
    return EXIT_OK


HANDLERS = {
    "constants": cmd_constants, "solve": cmd_solve, "kernel": cmd_kernel, "orbit": cmd_orbit,
    "jets": cmd_jets, "gram": cmd_gram, "roundtrip": cmd_roundtrip,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deltaphi", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--out", help="output directory (overrides output_dir)")
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--delta", type=float)
    parser.add_argument("--p", type=int)
    parser.add_argument("--tol", type=float)
    parser.add_argument("--modes", type=int)
    parser.add_argument("--w", help="w source, e.g. telescope:cos or raw:sin2")
    parser.add_argument("--v0", help="v0 name for roundtrip")
    parser.add_argument("--t0", type=float, help="base point for orbit, jets and kernel")
    parser.add_argument("--k-max", dest="k_max", type=int, help="last orbit or jet index")
    parser.add_argument("--plot", action="store_true", help="also write SVG plots")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.load(args.config) if args.config else RunConfig()
        overrides = {k: getattr(args, k) for k in ("alpha", "delta", "p", "tol", "modes", "w", "v0", "t0", "k_max")
                     if getattr(args, k) is not None}
        if args.out:
            overrides["output_dir"] = args.out
        if args.plot:
            overrides["plot"] = True
        cfg = replace(cfg, **overrides).validated()
        return HANDLERS[args.command](cfg, Path(cfg.output_dir))
    except SolvabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVABILITY
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, DeltaPhiError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except TypeError as exc:  # wrong value types in the config
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
