"""Command-line entry point: data generation, solving, decomposition, studies.

Exit codes: 0 when every verdict passes, 1 when any verdict fails (outputs
are still written), 2 on usage or validation errors.  A plain key=value
config file can seed any run; explicit flags override it.  The environment
variable NOVLAB_THREADS sets the FFT worker count.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from . import experiments
from .experiments import (
    DEFAULT_DELTA,
    DEFAULT_DOMAIN_LENGTH,
    DEFAULT_GRID_POINTS,
    DEFAULT_N_RANGE,
    DEFAULT_NUM_TERMS,
    DEFAULT_P,
    DEFAULT_S,
    DEFAULT_SEED,
    DEFAULT_CORPUS_SIZE,
    DT_CAP,
    write_study,
)
from .fieldio import save_field
from .initial_data import (
    LAMBDA_DEFAULT,
    LAMBDA_MAX,
    LAMBDA_MIN,
    IllposedDataParams,
    build_initial_data,
)
from .littlewood_paley import BesovIndex, build_filter_bank, weighted_block_norms
from .solver import SolverConfig, SystemState, integrate
from .spectral import Grid

COMMANDS = ("generate-data", "solve", "decompose", "study")
STUDIES = ("blockscale", "shorttime", "separation", "inequalities")


@dataclass
class RunConfig:
    command: str
    study_name: str | None = None
    s: float = DEFAULT_S
    p: float = DEFAULT_P
    lam: float = LAMBDA_DEFAULT
    num_terms: int = DEFAULT_NUM_TERMS
    grid_points: int = DEFAULT_GRID_POINTS
    domain_length: float = DEFAULT_DOMAIN_LENGTH
    dt: float = DT_CAP
    t_final: float = 1e-2
    delta: float = DEFAULT_DELTA
    n_min: int = DEFAULT_N_RANGE[0]
    n_max: int = DEFAULT_N_RANGE[1]
    seed: int = DEFAULT_SEED
    corpus_size: int = DEFAULT_CORPUS_SIZE
    output_path: str = "novlab_out"

    def validate(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.command == "study" and self.study_name not in STUDIES:
            raise ValueError(f"study must be one of {STUDIES}, got {self.study_name!r}")
        if math.isnan(self.p) or self.p < 1:
            raise ValueError(f"constraint violated: p in [1, inf] (got {self.p})")
        s_min = max(2.0 + 1.0 / self.p, 2.5)
        if not self.s > s_min:
            raise ValueError(
                f"constraint violated: s > max(2 + 1/p, 5/2) = {s_min:g} (got {self.s})"
            )
        if not LAMBDA_MIN <= self.lam <= LAMBDA_MAX:
            raise ValueError(
                f"constraint violated: lambda in [{LAMBDA_MIN:.6g}, {LAMBDA_MAX:.6g}] "
                f"(got {self.lam})"
            )
        n = self.grid_points
        if n < 16 or (n & (n - 1)) != 0:
            raise ValueError(f"constraint violated: grid_points a power of two >= 16 (got {n})")
        if self.domain_length <= 0:
            raise ValueError("constraint violated: domain_length > 0")
        if self.num_terms < 1:
            raise ValueError("constraint violated: num_terms >= 1")
        uses_bands = self.command == "study" and self.study_name in ("blockscale", "separation")
        if uses_bands and not 3 <= self.n_min <= self.n_max < self.num_terms:
            raise ValueError(
                f"constraint violated: 3 <= n_min <= n_max < num_terms "
                f"(got {self.n_min}..{self.n_max}, num_terms={self.num_terms})"
            )
        if self.dt <= 0:
            raise ValueError("constraint violated: dt > 0")
        if self.t_final < 0:
            raise ValueError("constraint violated: t_final >= 0")
        if not 0 < self.delta < 1:
            raise ValueError("constraint violated: delta in (0, 1)")
        if self.corpus_size < 100:
            raise ValueError("constraint violated: corpus_size >= 100")
        parent = Path(self.output_path).resolve().parent
        if not parent.is_dir():
            raise ValueError(f"output directory does not exist: {parent}")

    def to_file(self, path):
        with open(path, "w") as fh:
            for f in fields(self):
                val = getattr(self, f.name)
                if val is not None:
                    fh.write(f"{f.name}={val}\n")

    @classmethod
    def file_values(cls, path) -> dict:
        known = {f.name: f.type for f in fields(cls)}
        out = {}
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                key, _, val = line.partition("=")
                key = key.strip()
                if key not in known:
                    raise ValueError(f"unknown config key {key!r}")
                out[key] = val.strip()
        return out


_INT_KEYS = {"num_terms", "grid_points", "n_min", "n_max", "seed", "corpus_size"}
_STR_KEYS = {"command", "study_name", "output_path"}


def _coerce(key, val):
    if val is None:
        return None
    if key in _STR_KEYS:
        return str(val)
    if key in _INT_KEYS:
        return int(val)
    return float(val)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="novlab",
        description="Numerical laboratory for the two-component Novikov system.",
        epilog="Config file: plain key=value lines; flags override file values. "
        "Set NOVLAB_THREADS to control FFT workers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--config", help="key=value config file (flags override it)")
        sp.add_argument("--dump-config", metavar="PATH",
                        help="write the effective config to PATH before running")
        sp.add_argument("--s", type=float, default=None,
                        help=f"regularity, must satisfy s > max(2+1/p, 5/2) (default {DEFAULT_S})")
        sp.add_argument("--p", type=float, default=None,
                        help=f"integrability in [1, inf], accepts 'inf' (default {DEFAULT_P})")
        sp.add_argument("--lambda", dest="lam", type=float, default=None,
                        help=f"modulation in [{LAMBDA_MIN:.6g}, {LAMBDA_MAX:.6g}] "
                        f"(default {LAMBDA_DEFAULT:.6g})")
        sp.add_argument("--num-terms", type=int, default=None,
                        help=f"truncation of the lacunary sums (default {DEFAULT_NUM_TERMS})")
        sp.add_argument("--grid-points", type=int, default=None,
                        help=f"grid size, power of two (default {DEFAULT_GRID_POINTS})")
        sp.add_argument("--domain-length", type=float, default=None,
                        help=f"periodic box length (default {DEFAULT_DOMAIN_LENGTH})")
        sp.add_argument("--dt", type=float, default=None,
                        help=f"time step cap (default {DT_CAP})")
        sp.add_argument("--t-final", type=float, default=None,
                        help="integration horizon (default 1e-2)")
        sp.add_argument("--delta", type=float, default=None,
                        help=f"separation scale in (0,1) (default {DEFAULT_DELTA})")
        sp.add_argument("--n-min", type=int, default=None,
                        help=f"lowest band index (default {DEFAULT_N_RANGE[0]})")
        sp.add_argument("--n-max", type=int, default=None,
                        help=f"highest band index (default {DEFAULT_N_RANGE[1]})")
        sp.add_argument("--seed", type=int, default=None,
                        help=f"corpus seed (default {DEFAULT_SEED})")
        sp.add_argument("--corpus-size", type=int, default=None,
                        help=f"inequality corpus size >= 100 (default {DEFAULT_CORPUS_SIZE})")
        sp.add_argument("--output", dest="output_path", default=None,
                        help="output path prefix (default novlab_out)")

    helps = {
        "generate-data": "synthesize the data pair and dump the fields",
        "solve": "integrate the system from the data and dump the final state",
        "decompose": "tabulate weighted dyadic block norms of the data",
    }
    for name in ("generate-data", "solve", "decompose"):
        add_common(sub.add_parser(name, help=helps[name]))
    sp_study = sub.add_parser("study", help="run one verdict-bearing study")
    sp_study.add_argument("study_name", choices=STUDIES)
    add_common(sp_study)
    return parser


def parse_args(argv) -> RunConfig:
    """Flags override config-file values override documented defaults."""
    ns = build_parser().parse_args(argv)
    values = {}
    if ns.config:
        values.update(RunConfig.file_values(ns.config))
    for key in values.copy():
        values[key] = _coerce(key, values[key])
    for f in fields(RunConfig):
        flag_val = getattr(ns, f.name, None)
        if flag_val is not None:
            values[f.name] = _coerce(f.name, flag_val)
    values["command"] = ns.command
    if getattr(ns, "study_name", None):
        values["study_name"] = ns.study_name
    if values.get("command") == "study" and values.get("study_name") == "inequalities":
        # the corpora live on a small grid unless one is requested explicitly
        values.setdefault("grid_points", 2**12)
        values.setdefault("domain_length", 64.0)
    cfg = RunConfig(**values)
    cfg.validate()
    if ns.dump_config:
        cfg.to_file(ns.dump_config)
    return cfg


def _data_params(cfg: RunConfig) -> IllposedDataParams:
    top_band = cfg.lam * 2 ** (cfg.num_terms - 1) + 0.5
    grid = Grid(cfg.grid_points, cfg.domain_length, max_frequency=top_band)
    return IllposedDataParams(
        s=cfg.s, p=cfg.p, lam=cfg.lam, num_terms=cfg.num_terms, grid=grid
    )


def run(cfg: RunConfig) -> int:
    """Dispatch a validated config; returns the process exit code."""
    out = cfg.output_path
    if cfg.command == "generate-data":
        data = build_initial_data(_data_params(cfg))
        save_field(data.rho, f"{out}_rho.csv", time=0.0, tail_bound=data.tail_bound)
        save_field(data.u, f"{out}_u.csv", time=0.0, tail_bound=data.tail_bound)
        print(f"wrote {out}_rho.csv, {out}_u.csv (tail bound {data.tail_bound:.3e})")
        return 0

    if cfg.command == "solve":
        data = build_initial_data(_data_params(cfg))
        state0 = SystemState(rho=data.rho, u=data.u)
        if cfg.t_final == 0:
            states = [state0]
        else:
            sc = SolverConfig(dt=min(cfg.dt, cfg.t_final), t_final=cfg.t_final)
            states = list(integrate(state0, sc).states)
        final = states[-1]
        save_field(final.rho, f"{out}_rho.csv", time=final.time)
        save_field(final.u, f"{out}_u.csv", time=final.time)
        print(f"wrote {out}_rho.csv, {out}_u.csv at t={final.time:g} "
              f"({len(states)} states)")
        return 0

    if cfg.command == "decompose":
        params = _data_params(cfg)
        data = build_initial_data(params)
        bank = build_filter_bank(params.grid)
        idx_rho = BesovIndex(cfg.s - 1, cfg.p)
        idx_u = BesovIndex(cfg.s, cfg.p)
        wr = weighted_block_norms(bank, data.rho, idx_rho)
        wu = weighted_block_norms(bank, data.u, idx_u)
        path = f"{out}_blocks.csv"
        with open(path, "w") as fh:
            fh.write(f"# s={cfg.s}\n# p={cfg.p}\n# lambda={cfg.lam}\n")
            fh.write(f"# num_terms={cfg.num_terms}\n# grid_points={cfg.grid_points}\n")
            fh.write(f"# domain_length={cfg.domain_length}\n")
            fh.write("# columns: j,weighted_rho_block,weighted_u_block\n")
            for j in range(-1, bank.j_max + 1):
                fh.write(f"{j},{wr[j+1]:.17g},{wu[j+1]:.17g}\n")
        print(f"wrote {path}")
        return 0

    # study
    if cfg.study_name == "inequalities":
        grid = Grid(cfg.grid_points, cfg.domain_length)
        report = experiments.study_inequalities(
            corpus_size=cfg.corpus_size, seed=cfg.seed, grid=grid, s=cfg.s, p=cfg.p
        )
    else:
        params = _data_params(cfg)
        if cfg.study_name == "blockscale":
            report = experiments.study_block_scaling(
                params, range(cfg.n_min, cfg.n_max + 1)
            )
        elif cfg.study_name == "shorttime":
            times = [cfg.t_final * 2.0**-k for k in range(6)]
            report = experiments.study_short_time(params, times, dt_cap=cfg.dt)
        else:
            report = experiments.study_separation(
                params, range(cfg.n_min, cfg.n_max + 1), delta=cfg.delta, dt_cap=cfg.dt
            )
    write_study(report, f"{out}_{report.study_name}")
    for v in report.verdicts:
        print(f"{report.study_name}: {v.name} {'PASS' if v.passed else 'FAIL'} "
              f"(observed {v.observed:.6g})")
    print(f"wrote {out}_{report.study_name}.csv and .gp")
    return 0 if report.passed else 1


def main(argv=None) -> int:
    try:
        cfg = parse_args(sys.argv[1:] if argv is None else argv)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return run(cfg)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
