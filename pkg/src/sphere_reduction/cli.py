"""Command-line experiment runner.

Every subcommand reads one JSON config (``--config``), writes its result to
``--out`` (stdout when omitted) and is deterministic for a fixed ``--seed``.
Config and IO problems exit with status 2 and a one-line JSON error on stderr;
numerical failures inside the library exit with status 3.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io as sio
from .core import Deformation, ParticleState, SkewMatrix, column_names, momentum_from_state, pair_index
from .errors import ReductionError
from .geodesic import ConstraintSurface, integrate_geodesic, prepare_state
from .liepoisson import CompareSettings, compare_full_vs_reduced, integrate_reduced
from .raytransform import casimir_hamiltonian, hamiltonian_from_deformation, ray_average
from .topology import dimension_proxy, phase_portrait_type, poincare_section, portrait_scan

EXIT_CONFIG = 2
EXIT_NUMERIC = 3
RATIO_BOUNDS = (1.3, 3.0)


class ConfigError(ReductionError, ValueError):
    code = "config-error"


class InputError(ReductionError, OSError):
    code = "io-error"


# -- config helpers ---------------------------------------------------------------


def _from_dict(cls, obj: dict):
    if not isinstance(obj, dict):
        raise ConfigError(f"{cls.__name__}: expected a JSON object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(obj) - names)
    if unknown:
        raise ConfigError(f"{cls.__name__}: unknown keys {unknown}")
    try:
        return cls(**obj)
    except TypeError as exc:
        raise ConfigError(f"{cls.__name__}: {exc}") from None


def _positive(name, value, allow_zero=False):
    ok = isinstance(value, (int, float)) and np.isfinite(value) and (value >= 0 if allow_zero else value > 0)
    if not ok:
        raise ConfigError(f"{name} must be a finite {'non-negative' if allow_zero else 'positive'} number, got {value!r}")


def parse_deformation(spec, epsilon: float | None = None) -> Deformation:
    """Build a Deformation from ``{"n", "epsilon", "terms"}`` or a ``quartic``/``ellipsoid`` shortcut."""
    if not isinstance(spec, dict):
        raise ConfigError("deformation must be a JSON object")
    allowed = {"n", "epsilon", "terms", "quartic", "ellipsoid"}
    unknown = sorted(set(spec) - allowed)
    if unknown:
        raise ConfigError(f"deformation: unknown keys {unknown}")
    kinds = [k for k in ("terms", "quartic", "ellipsoid") if k in spec]
    if len(kinds) != 1:
        raise ConfigError("deformation needs exactly one of 'terms', 'quartic', 'ellipsoid'")
    eps = spec.get("epsilon", 0.0) if epsilon is None else epsilon
    _positive("epsilon", eps, allow_zero=True)
    try:
        if "terms" in spec:
            if "n" not in spec:
                raise ConfigError("deformation with 'terms' needs 'n'")
            return Deformation.from_terms(int(spec["n"]), spec["terms"], float(eps))
        if "quartic" in spec:
            return Deformation.quartic(spec["quartic"], float(eps))
        return Deformation.ellipsoid(spec["ellipsoid"], float(eps))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ReductionError):
            raise
        raise ConfigError(f"bad deformation spec: {exc}") from None


def _random_state(n: int, rng) -> ParticleState:
    return ParticleState(rng.normal(size=n), rng.normal(size=n))


def _initial_state(x0, v0, n: int, rng) -> ParticleState:
    if x0 is None and v0 is None:
        return _random_state(n, rng)
    if x0 is None or v0 is None:
        raise ConfigError("give both x0 and v0, or neither (random from --seed)")
    s = ParticleState(x0, v0)
    if s.n != n:
        raise ConfigError(f"initial state has n={s.n}, deformation has n={n}")
    return s


def _initial_plane(l0, x0, v0, n: int, rng) -> SkewMatrix:
    if l0 is not None:
        if x0 is not None or v0 is not None:
            raise ConfigError("give l0 or (x0, v0), not both")
        try:
            l = SkewMatrix.from_json(l0) if isinstance(l0, dict) else SkewMatrix(n, l0)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad l0: {exc}") from None
        if l.n != n:
            raise ConfigError(f"l0 has n={l.n}, Hamiltonian has n={n}")
        return l.normalized()
    return momentum_from_state(_initial_state(x0, v0, n, rng)).normalized()


def _coord_index(coord, n: int) -> int:
    if isinstance(coord, str):
        names = column_names(n)
        if coord not in names:
            raise ConfigError(f"unknown coordinate {coord!r}; expected one of {names}")
        return names.index(coord)
    if isinstance(coord, (list, tuple)) and len(coord) == 2:
        return pair_index(int(coord[0]), int(coord[1]), n)
    if isinstance(coord, int) and 0 <= coord < n * (n - 1) // 2:
        return coord
    raise ConfigError(f"bad section coordinate {coord!r}")


# -- configs ------------------------------------------------------------------------


@dataclass
class GeodesicConfig:
    deformation: dict
    T: float
    dt: float = 2 * np.pi * 1e-3
    x0: list | None = None
    v0: list | None = None
    sample_every: int = 1
    project: bool = True
    momentum: bool = True

    def __post_init__(self):
        _positive("T", self.T, allow_zero=True)
        _positive("dt", self.dt)
        _positive("sample_every", self.sample_every)


@dataclass
class ReduceConfig:
    T: float
    dt: float
    deformation: dict | None = None
    casimir_n: int | None = None
    epsilons: list | None = None
    l0: object = None
    x0: list | None = None
    v0: list | None = None
    sample_every: int = 1
    nodes: int = 64
    project: bool = True

    def __post_init__(self):
        if (self.deformation is None) == (self.casimir_n is None):
            raise ConfigError("reduce needs exactly one of 'deformation' or 'casimir_n'")
        if self.epsilons is not None and self.deformation is None:
            raise ConfigError("'epsilons' sweep needs a 'deformation'")
        if not isinstance(self.T, (int, float)) or not np.isfinite(self.T):
            raise ConfigError(f"T must be finite, got {self.T!r}")
        _positive("dt", self.dt)
        _positive("sample_every", self.sample_every)
        _positive("nodes", self.nodes)


@dataclass
class RaytransformConfig:
    deformation: dict
    plane: dict
    N: int = 64
    mode: str = "mean"

    def __post_init__(self):
        _positive("N", self.N)
        if self.mode not in ("mean", "integral", "hamiltonian"):
            raise ConfigError(f"mode must be mean, integral or hamiltonian, got {self.mode!r}")


@dataclass
class CompareConfig:
    deformation: dict | None = None
    T: float | None = None
    epsilons: list | None = None
    x0: list | None = None
    v0: list | None = None
    dt: float = 2 * np.pi * 1e-3
    sample_every: int = 10
    kappa: float = 0.5
    nodes: int = 64

    def __post_init__(self):
        if self.deformation is None:
            raise ConfigError("compare needs a 'deformation' (psi spec)")
        if self.T is not None:
            _positive("T", self.T)
        _positive("dt", self.dt)
        _positive("kappa", self.kappa)
        _positive("sample_every", self.sample_every)


@dataclass
class ClassifyConfig:
    eps: list

    def __post_init__(self):
        if not isinstance(self.eps, list) or len(self.eps) != 3:
            raise ConfigError("eps must be a list of three numbers")


@dataclass
class ScanConfig:
    resolution: int = 200

    def __post_init__(self):
        if not isinstance(self.resolution, int) or self.resolution < 2:
            raise ConfigError("resolution must be an integer >= 2")


@dataclass
class SectionConfig:
    deformation: dict
    T: float
    dt: float
    coord: object = 0
    level: float = 0.0
    direction: int = 1
    l0: object = None
    x0: list | None = None
    v0: list | None = None
    proxy: bool = True

    def __post_init__(self):
        _positive("T", self.T)
        _positive("dt", self.dt)
        if self.direction not in (-1, 0, 1):
            raise ConfigError("direction must be -1, 0 or 1")


@dataclass
class AuditConfig:
    trajectory: str
    deformation: dict | None = None
    tol: float = 1e-10
    speed: float = 1.0

    def __post_init__(self):
        _positive("tol", self.tol)


# -- runners --------------------------------------------------------------------------


@dataclass
class Result:
    """Text written to ``--out`` plus extra files and an exit status."""

    text: str
    files: dict = field(default_factory=dict)
    status: int = 0


def run_geodesic(cfg: GeodesicConfig, seed: int = 0) -> Result:
    d = parse_deformation(cfg.deformation)
    surf = ConstraintSurface(d)
    s0 = prepare_state(_initial_state(cfg.x0, cfg.v0, d.n, np.random.default_rng(seed)), surf)
    traj = integrate_geodesic(s0, surf, cfg.T, cfg.dt, cfg.sample_every, cfg.project)
    return Result(sio.geodesic_csv(traj, cfg.momentum))


def _reduce_one(cfg: ReduceConfig, eps, seed):
    if cfg.casimir_n is not None:
        H = casimir_hamiltonian(int(cfg.casimir_n))
    else:
        H = hamiltonian_from_deformation(parse_deformation(cfg.deformation, eps), cfg.nodes)
    l0 = _initial_plane(cfg.l0, cfg.x0, cfg.v0, H.n, np.random.default_rng(seed))
    return integrate_reduced(H, l0, cfg.T, cfg.dt, cfg.sample_every, cfg.project)


def run_reduce(cfg: ReduceConfig, seed: int = 0, out: Path | None = None) -> Result:
    if cfg.epsilons is None:
        return Result(sio.reduced_csv(_reduce_one(cfg, None, seed)))
    if out is None:
        raise ConfigError("an epsilon sweep writes one file per epsilon; pass --out <directory>")
    files, entries = {}, []
    for k, eps in enumerate(cfg.epsilons):
        _positive("epsilon", eps, allow_zero=True)
        traj = _reduce_one(cfg, eps, seed)
        name = f"reduced_{k:03d}.csv"
        files[name] = sio.reduced_csv(traj)
        H0 = traj.H[0]
        entries.append(
            {
                "epsilon": float(eps),
                "file": name,
                "rows": len(traj),
                "H0": float(H0),
                "H_drift": float(np.max(np.abs(traj.H - H0)) / (abs(H0) if H0 else 1.0)),
                "l2_drift": float(np.max(np.abs(traj.l2 - traj.l2[0]))),
                "plucker_max": float(np.max(traj.plucker_max)),
            }
        )
    files["manifest.json"] = sio.dump_json({"seed": seed, "runs": entries})
    return Result("", files)


def run_raytransform(cfg: RaytransformConfig) -> Result:
    d = parse_deformation(cfg.deformation)
    try:
        l = SkewMatrix.from_json(cfg.plane)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad plane: {exc}") from None
    if l.n != d.n:
        raise ConfigError(f"plane has n={l.n}, deformation has n={d.n}")
    mean = ray_average(d.psi, l, int(cfg.N))
    value = {"mean": mean, "integral": 2 * np.pi * mean, "hamiltonian": d.epsilon * mean}[cfg.mode]
    return Result(sio.dump_json({"value": float(value), "N": int(cfg.N), "mode": cfg.mode}))


def run_compare(cfg: CompareConfig, seed: int = 0) -> Result:
    settings = CompareSettings(cfg.dt, int(cfg.sample_every), float(cfg.kappa), int(cfg.nodes))
    epsilons = cfg.epsilons if cfg.epsilons is not None else [None]
    base = parse_deformation(cfg.deformation)
    s0 = _initial_state(cfg.x0, cfg.v0, base.n, np.random.default_rng(seed))
    reports = []
    for eps in epsilons:
        d = parse_deformation(cfg.deformation, eps)
        T = cfg.T if cfg.T is not None else (1.0 / d.epsilon if d.epsilon > 0 else None)
        if T is None:
            raise ConfigError("T is required when epsilon = 0")
        reports.append(compare_full_vs_reduced(d, s0, T, settings).to_json())
    if cfg.epsilons is None:
        return Result(sio.dump_json(reports[0]))
    doc = {"reports": reports}
    if len(reports) == 2:
        a, b = reports
        ratio = a["sup_deviation"] / b["sup_deviation"] if b["sup_deviation"] > 0 else float("inf")
        doc["ratio"] = float(ratio)
        doc["ratio_bounds"] = list(RATIO_BOUNDS)
        doc["ratio_ok"] = bool(RATIO_BOUNDS[0] <= ratio <= RATIO_BOUNDS[1])
    return Result(sio.dump_json(doc))


def run_classify(cfg: ClassifyConfig) -> Result:
    return Result(sio.dump_json(phase_portrait_type(cfg.eps).to_json()))


def run_scan(cfg: ScanConfig, threads: int = 1) -> Result:
    return Result(sio.scan_csv(portrait_scan(cfg.resolution, workers=threads)))


def run_section(cfg: SectionConfig, seed: int = 0) -> Result:
    d = parse_deformation(cfg.deformation)
    H = hamiltonian_from_deformation(d)
    l0 = _initial_plane(cfg.l0, cfg.x0, cfg.v0, d.n, np.random.default_rng(seed))
    traj = integrate_reduced(H, l0, cfg.T, cfg.dt)
    coord = _coord_index(cfg.coord, d.n)
    sec = poincare_section(traj, coord, cfg.level, cfg.direction)
    meta = {
        "coord": column_names(d.n)[coord],
        "level": float(cfg.level),
        "direction": int(cfg.direction),
        "crossings": len(sec),
        "l0": l0.to_json(),
        "seed": seed,
    }
    if cfg.proxy:
        try:
            meta["dimension_proxy"] = dimension_proxy(sec.points, seed=seed)
        except ValueError:
            meta["dimension_proxy"] = None
    return Result(sio.section_csv(sec, d.n), {"meta": sio.dump_json(meta)})


def run_audit(cfg: AuditConfig) -> Result:
    path = Path(cfg.trajectory)
    if not path.exists():
        raise InputError(f"no such trajectory file: {path}")
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    if "x_0" in header:
        if cfg.deformation is None:
            raise ConfigError("auditing a geodesic file needs the 'deformation' it was run with")
        surf = ConstraintSurface(parse_deformation(cfg.deformation))
        traj = sio.load_geodesic_csv(path)
        if traj.n != surf.n:
            raise ConfigError(f"trajectory has n={traj.n}, deformation has n={surf.n}")
        phi = np.array([abs(surf.phi(x)) for x in traj.x])
        tang = np.array([abs(surf.grad(x) @ v) for x, v in zip(traj.x, traj.v)])
        speed = np.abs(np.einsum("ij,ij->i", traj.v, traj.v) - cfg.speed**2)
        report = {
            "kind": "geodesic",
            "rows": len(traj),
            "max_phi": float(phi.max(initial=0.0)),
            "max_tangency": float(tang.max(initial=0.0)),
            "max_speed": float(speed.max(initial=0.0)),
        }
        worst = max(report["max_phi"], report["max_tangency"], report["max_speed"])
    elif "plucker_max" in header:
        traj = sio.load_reduced_csv(path)
        l2 = 2.0 * np.einsum("ij,ij->i", traj.comps, traj.comps)
        from .core import plucker_max_batch

        pm = plucker_max_batch(traj.comps, traj.n)
        report = {
            "kind": "reduced",
            "rows": len(traj),
            "l2_drift": float(np.max(np.abs(l2 - l2[0]))) if len(traj) else 0.0,
            "plucker_max": float(pm.max(initial=0.0)),
        }
        worst = max(report["l2_drift"], report["plucker_max"])
    else:
        raise InputError(f"{path}: unrecognized trajectory header")
    report["tol"] = cfg.tol
    report["ok"] = bool(worst <= cfg.tol)
    return Result(sio.dump_json(report), status=0 if report["ok"] else 1)


# -- entry point --------------------------------------------------------------------------

COMMANDS = {
    "geodesic": GeodesicConfig,
    "reduce": ReduceConfig,
    "raytransform": RaytransformConfig,
    "compare": CompareConfig,
    "classify": ClassifyConfig,
    "scan": ScanConfig,
    "section": SectionConfig,
    "audit": AuditConfig,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sphere-reduction", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="JSON config file")
        s.add_argument("--out", default=None, help="output file (directory for sweeps); stdout if omitted")
        s.add_argument("--seed", type=int, default=0, help="seed for randomized initial data")
        s.add_argument("--threads", type=int, default=1, help="worker processes for scans")
    return p


def _fail(code: str, message: str, status: int) -> int:
    sys.stderr.write(json.dumps({"error": code, "message": message}) + "\n")
    return status


def load_config(command: str, path) -> object:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc.msg} (line {exc.lineno})") from None
    return _from_dict(COMMANDS[command], obj)


def execute(command: str, cfg, seed: int = 0, threads: int = 1, out: Path | None = None) -> Result:
    if command == "geodesic":
        return run_geodesic(cfg, seed)
    if command == "reduce":
        return run_reduce(cfg, seed, out)
    if command == "raytransform":
        return run_raytransform(cfg)
    if command == "compare":
        return run_compare(cfg, seed)
    if command == "classify":
        return run_classify(cfg)
    if command == "scan":
        return run_scan(cfg, threads)
    if command == "section":
        return run_section(cfg, seed)
    return run_audit(cfg)


def _emit(res: Result, out: Path | None, sweep: bool) -> None:
    if sweep:
        for name, text in res.files.items():
            sio.atomic_write(out / name, text)
        return
    if out is None:
        sys.stdout.write(res.text)
    else:
        sio.atomic_write(out, res.text)
    if "meta" in res.files:
        if out is not None:
            sio.atomic_write(out.with_name(out.name + ".meta.json"), res.files["meta"])
        else:
            sys.stderr.write(res.files["meta"])


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed < 0 or args.seed >= 2**64:
        return _fail("config-error", "--seed must be an unsigned 64-bit integer", EXIT_CONFIG)
    if args.threads < 1:
        return _fail("config-error", "--threads must be >= 1", EXIT_CONFIG)
    out = Path(args.out) if args.out else None
    try:
        cfg = load_config(args.command, args.config)
        res = execute(args.command, cfg, args.seed, args.threads, out)
        _emit(res, out, sweep=args.command == "reduce" and cfg.epsilons is not None)
    except (ConfigError, InputError) as exc:
        return _fail(exc.code, str(exc), EXIT_CONFIG)
    except OSError as exc:
        return _fail("io-error", str(exc), EXIT_CONFIG)
    except ReductionError as exc:
        return _fail(exc.code, str(exc), EXIT_NUMERIC)
    except ValueError as exc:
        return _fail("invalid-value", str(exc), EXIT_CONFIG)
    return res.status


if __name__ == "__main__":
    raise SystemExit(main())
