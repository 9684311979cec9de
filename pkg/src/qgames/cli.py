"""Command-line front end.

    qgames play --game doily --scenario ll --method delegation --shots 1024 --seed 7
    qgames bounds --game doily --scenario pl
    qgames sweep --game doily --scenario ll --p2 0,0.005,0.01,0.02 --output sweep.csv
    qgames geometry --game doily --format dot
    qgames export --game mermin --scenario ll --method unitary --cell 0

Exit codes: 0 success, 1 invalid configuration, 2 invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Sequence

from .circuits import CircuitError, PointLineUnsupported, plan_of
from .games import GameError, GameSpec, InvariantViolation, iter_cells, referee_play, solve
from .games.referee import build_cell_circuit
from .games.strategies import BUILTIN
from .geometry import (
    Configuration,
    GeometryError,
    build_doily,
    enumerate_grids,
    grid_labels,
    mermin_square,
    mermin_test_grid,
    to_dot,
    to_text,
)
from .pauli import PauliError
from .simulator import NoiseModel, SimulationError, to_qasm
from .transpile import LAGOS_PL_LAYOUT, CouplingMap, RoutingError, lagos_map, load_coupling_map, parse_layout

log = logging.getLogger("qgames")

OUTPUT_ENV = "QGAMES_OUTPUT_DIR"
GAMES = ("mermin", "doily")
SCENARIOS = ("ll", "pl")
METHODS = ("unitary", "delegation") + tuple(f"classical:{n}" for n in sorted(BUILTIN))

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    game: str = "doily"
    grid: str = "test"
    scenario: str = "ll"
    method: str = "delegation"
    shots: int = 8192
    seed: int = 0
    p1: float = 0.0
    p2: float = 0.0
    readout: float = 0.0
    readout_overrides: dict[str, float] = field(default_factory=dict)
    coupling_map: str | None = None
    layout: str | None = None
    orderings: str = "all"
    output: str | None = None
    date: str | None = None

    def validate(self) -> None:
        if self.game not in GAMES:
            raise ConfigError(f"game must be one of {GAMES}")
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}")
        if self.method == "unitary" and self.scenario == "pl":
            raise ConfigError(
                "the unitary method cannot play the point-line scenario: it reads each "
                "player's answers from one joint-eigenbasis transform of a full context, "
                "but in point-line questions Alice holds a single observable; "
                "use --method delegation"
            )
        if self.orderings not in ("all", "canonical"):
            raise ConfigError("orderings must be 'all' or 'canonical'")
        if self.shots < 1:
            raise ConfigError("shots must be >= 1")
        for name in ("p1", "p2", "readout"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.layout and not self.coupling_map:
            raise ConfigError("--layout needs --coupling-map")

    def noise(self) -> NoiseModel | None:
        overrides = {int(k): float(v) for k, v in self.readout_overrides.items()}
        model = NoiseModel(self.p1, self.p2, self.readout, overrides)
        return None if model.is_trivial else model

    def geometry(self) -> Configuration:
        if self.game == "doily":
            return build_doily()
        return grid_by_name(self.grid)

    def routing(self) -> tuple[CouplingMap | None, dict[int, int] | None]:
        if not self.coupling_map:
            return None, None
        cmap = lagos_map() if self.coupling_map == "lagos" else load_coupling_map(self.coupling_map)
        layout = None
        if self.layout == "lagos-pl":
            layout = dict(LAGOS_PL_LAYOUT)
        elif self.layout:
            path = Path(self.layout)
            layout = parse_layout(path.read_text() if path.exists() else self.layout)
        return cmap, layout

    def spec(self) -> GameSpec:
        cmap, layout = self.routing()
        return GameSpec(
            self.geometry(),
            self.scenario,
            self.method,
            shots=self.shots,
            seed=self.seed,
            noise=self.noise(),
            coupling_map=cmap,
            layout=layout,
            orderings=self.orderings,
            name=self.game,
        )

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d.pop("output")
        return d


def grid_by_name(name: str) -> Configuration:
    """``test`` (default), ``square``, or an index 0-9 into the doily's grids."""
    if name == "test":
        return mermin_test_grid()
    if name == "square":
        return mermin_square()
    try:
        return enumerate_grids(build_doily())[int(name)]
    except (ValueError, IndexError):
        raise ConfigError(f"unknown grid {name!r}: use test, square or 0-9") from None


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _parse_noise(text: str) -> tuple[float, float, float]:
    vals = _floats(text)
    if len(vals) != 3:
        raise ConfigError("--noise takes p1,p2,readout")
    return vals[0], vals[1], vals[2]


def _load_config_file(path: str) -> dict[str, Any]:
    data = json.loads(Path(path).read_text())
    # a result file carries its run config in metadata
    if "metadata" in data and "config" in data.get("metadata", {}):
        data = data["metadata"]["config"]
    known = {f.name for f in fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return data


def build_config(args: argparse.Namespace) -> RunConfig:
    values: dict[str, Any] = {}
    if getattr(args, "config", None):
        values.update(_load_config_file(args.config))
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    if getattr(args, "noise", None):
        values["p1"], values["p2"], values["readout"] = _parse_noise(args.noise)
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def _output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "."))


def _default_name(cfg: RunConfig) -> str:
    method = cfg.method.replace(":", "-")
    return f"{cfg.game}_{cfg.scenario}_{method}_seed{cfg.seed}.json"


def summary_rows(result, noisy: bool) -> list[dict[str, Any]]:
    sim = "Noisy Simulation" if noisy else "Noiseless Simulation"
    return [
        {
            "Game": result.game,
            "Scenario": result.scenario.upper(),
            "Method": result.method,
            sim: f"{100 * float(result.sigma):.3f}%",
            "sigma": f"{result.sigma.numerator}/{result.sigma.denominator}",
            "omega": f"{result.omega.numerator}/{result.omega.denominator}",
        }
    ]


def _print_table(rows: list[dict[str, Any]], out=None) -> None:
    out = out or sys.stdout
    cols = list(rows[0])
    widths = [max(len(c), *(len(str(r[c])) for r in rows)) for c in cols]
    out.write("  ".join(c.ljust(w) for c, w in zip(cols, widths)) + "\n")
    for r in rows:
        out.write("  ".join(str(r[c]).ljust(w) for c, w in zip(cols, widths)) + "\n")


# ---------------------------------------------------------------------------
# commands


def cmd_play(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    result = referee_play(cfg.spec(), cfg.date)
    result.metadata["config"] = cfg.to_dict()
    path = Path(cfg.output) if cfg.output else _output_dir() / _default_name(cfg)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(result.to_json())
    _print_table(summary_rows(result, cfg.noise() is not None))
    if args.csv:
        _append_csv(Path(args.csv), summary_rows(result, cfg.noise() is not None))
    print(f"sigma = {float(result.sigma):.6f} ({result.wins}/{result.total_shots}), "
          f"omega = {result.omega} = {float(result.omega):.6f}")
    if result.advantage:
        print("verdict: quantum advantage demonstrated (sigma > omega)")
    else:
        print("verdict: no quantum advantage (sigma <= omega)")
    print(f"result written to {path}")
    return EXIT_OK


def _append_csv(path: Path, rows: list[dict[str, Any]]) -> None:
    new = not path.exists()
    with path.open("a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        if new:
            w.writeheader()
        w.writerows(rows)


def cmd_bounds(args: argparse.Namespace) -> int:
    game = args.game or "doily"
    scenario = args.scenario or "ll"
    if game not in GAMES or scenario not in SCENARIOS:
        raise ConfigError("bounds needs --game mermin|doily and --scenario ll|pl")
    config = build_doily() if game == "doily" else grid_by_name(args.grid or "test")
    kwargs: dict[str, Any] = {}
    if game == "doily" and scenario == "ll":
        kwargs["workers"] = args.workers

        def progress(done: int, total: int) -> None:
            if done == total or done % max(1, total // 10) == 0:
                print(f"  searched {done}/{total} prefixes", file=sys.stderr)

        if args.workers <= 1:
            kwargs["progress"] = progress
    sol = solve(config, scenario, **kwargs)
    print(f"{sol.value.numerator}/{sol.value.denominator} = {float(sol.value):.6f}")
    if args.witness or (game == "doily" and scenario == "ll"):
        path = Path(args.witness) if args.witness else _output_dir() / f"witness_{game}_{scenario}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = sol.to_dict(config)
        payload["stats"] = sol.stats
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        print(f"witness written to {path}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    base = build_config(args)
    p2s = _floats(args.p2s) if args.p2s else [base.p2]
    readouts = _floats(args.readouts) if args.readouts else [base.readout]
    methods = args.methods.split(",") if args.methods else [base.method]
    if not p2s or not readouts:
        raise ConfigError("sweep grid is empty")
    routings = [False, True] if args.compare_routing else [bool(base.coupling_map)]
    if args.compare_routing and not base.coupling_map:
        raise ConfigError("--compare-routing needs --coupling-map")
    rows = []
    for method in methods:
        for routed in routings:
            for p2 in p2s:
                for ro in readouts:
                    cfg = RunConfig(**{**asdict(base), "method": method, "p2": p2, "readout": ro})
                    if not routed:
                        cfg.coupling_map, cfg.layout = None, None
                    cfg.validate()
                    res = referee_play(cfg.spec())
                    rows.append({
                        "game": cfg.game, "scenario": cfg.scenario, "method": method,
                        "routed": int(routed), "p1": cfg.p1, "p2": p2, "readout": ro,
                        "wins": res.wins, "shots": res.total_shots,
                        "sigma": f"{float(res.sigma):.6f}", "stderr": f"{res.stderr:.6f}",
                        "omega": f"{float(res.omega):.6f}",
                    })
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    text = buf.getvalue()
    if base.output:
        Path(base.output).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_geometry(args: argparse.Namespace) -> int:
    game = args.game or "doily"
    config = build_doily() if game == "doily" else grid_by_name(args.grid or "test")
    if args.grids:
        for i, g in enumerate(enumerate_grids(build_doily())):
            rows = " | ".join(" ".join(r) for r in grid_labels(g))
            signs = "".join("+" if ln.sign > 0 else "-" for ln in g.lines)
            print(f"grid {i}: {rows}   signs rows/cols {signs[:3]}/{signs[3:]}")
        return EXIT_OK
    sys.stdout.write(to_dot(config) if args.format == "dot" else to_text(config))
    return EXIT_OK


def cmd_export(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    spec = cfg.spec()
    cells = list(iter_cells(spec.geometry, spec.scenario, spec.orderings))
    if not 0 <= args.cell < len(cells):
        raise ConfigError(f"--cell must be in 0..{len(cells) - 1}")
    if spec.method.startswith("classical:"):
        raise ConfigError("classical strategies have no circuit")
    from .games.referee import _routed

    circuit = _routed(spec, build_cell_circuit(spec, cells[args.cell]))
    sys.stdout.write(to_qasm(circuit))
    meta = {"plan": plan_of(circuit).to_dict()}
    if "routing" in circuit.metadata:
        meta["routing"] = {k: ({str(a): b for a, b in v.items()} if isinstance(v, dict) else v)
                           for k, v in circuit.metadata["routing"].items()}
    for line in json.dumps(meta, indent=2, sort_keys=True).splitlines():
        print(f"// {line}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run config (or a previous result file); flags override it")
    p.add_argument("--game", choices=GAMES)
    p.add_argument("--grid", help="mermin grid: test (default), square or 0-9")
    p.add_argument("--scenario", choices=SCENARIOS)
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--shots", type=int, help="shots per question cell (default 8192)")
    p.add_argument("--seed", type=int)
    p.add_argument("--noise", help="p1,p2,readout")
    p.add_argument("--p1", type=float)
    p.add_argument("--p2", type=float)
    p.add_argument("--readout", type=float)
    p.add_argument("--coupling-map", dest="coupling_map", help="'lagos' or a file of 'u v' edges")
    p.add_argument("--layout", help="'lagos-pl', a file, or 'l p; l p; ...'")
    p.add_argument("--orderings", choices=("all", "canonical"))
    p.add_argument("--output", help=f"output path (default ${OUTPUT_ENV} or current directory)")
    p.add_argument("--date", help="date recorded in the result metadata")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qgames",
        description="Mermin grid and doily pseudo-telepathy games.  "
        f"Games: {', '.join(GAMES)}.  Scenarios: {', '.join(SCENARIOS)}.  "
        f"Methods: {', '.join(METHODS)} (unitary is line-line only).",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("play", help="play a game and write a result file")
    _add_run_options(p)
    p.add_argument("--csv", help="append the summary row to this CSV file")
    p.set_defaults(func=cmd_play)

    p = sub.add_parser("bounds", help="exact classical winning probability")
    p.add_argument("--game", choices=GAMES)
    p.add_argument("--grid")
    p.add_argument("--scenario", choices=SCENARIOS)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--witness", help="where to write the optimal strategy pair")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("sweep", help="success rate over a grid of noise levels")
    _add_run_options(p)
    p.add_argument("--p2-values", dest="p2s", help="comma-separated p2 grid")
    p.add_argument("--readout-values", dest="readouts", help="comma-separated readout grid")
    p.add_argument("--methods", help="comma-separated methods")
    p.add_argument("--compare-routing", action="store_true",
                   help="run every point with and without the coupling map")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("geometry", help="print a configuration")
    p.add_argument("--game", choices=GAMES)
    p.add_argument("--grid")
    p.add_argument("--format", choices=("text", "dot"), default="text")
    p.add_argument("--grids", action="store_true", help="list the 10 grids inside the doily")
    p.set_defaults(func=cmd_geometry)

    p = sub.add_parser("export", help="OpenQASM 2.0 for one question cell")
    _add_run_options(p)
    p.add_argument("--cell", type=int, default=0)
    p.set_defaults(func=cmd_export)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ConfigError, GameError, PointLineUnsupported, CircuitError, GeometryError,
            PauliError, SimulationError, RoutingError, OSError, ValueError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
