"""Command-line front end: ``polarlattice {construct,profile,analyze,simulate,capacity}``.

Every command reads a JSON run configuration (``--config``). Unknown keys
are rejected and the whole configuration is validated before any work
starts. Exit codes: 0 success, 2 configuration error, 3 precondition
violation, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import lattice_min_vectors, nvnr, nvnr_db, nvnr_decomposition, report_dict
from .channel import (
    estimate_reliabilities,
    load_reliabilities,
    partition_capacity,
    save_reliabilities,
    select_profile,
)
from .decoding import DecoderConfig
from .lattice import (
    ConvolutionProfile,
    LatticeSpec,
    ProfileError,
    RateProfile,
    build_generator,
    construction_d_generator,
    lift_convolution,
    log2_volume,
    pac_generator,
    scale_lattice,
    spec_from_dict,
    spec_hash,
    spec_to_dict,
)
from .simulate import sigma_for_nvnr_db, vnr_sweep, write_csv, write_json

EXIT_OK, EXIT_CONFIG, EXIT_PRECONDITION, EXIT_NUMERIC = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------

_ALLOWED = {
    None: {"lattice", "channel", "decoder", "sim", "output"},
    "lattice": {"N", "r", "kind", "sets", "derive", "taps", "T", "random_T", "scale",
                "spec_file", "spec_hash"},
    "derive": {"sigma", "trials", "seed", "targets", "thresholds"},
    "random_T": {"seed", "density"},
    "channel": {"sigma", "nvnr_db", "levels"},
    "decoder": {"kind", "list_size"},
    "sim": {"trials", "seed", "stop_at_errors", "box"},
    "output": {"dir", "format"},
}


def _check_keys(block: dict, name: str | None):
    if not isinstance(block, dict):
        raise ConfigError(f"{name or 'config'} must be a JSON object")
    unknown = set(block) - _ALLOWED[name]
    if unknown:
        raise ConfigError(f"unknown field(s) in {name or 'config'}: {sorted(unknown)}")


def _as_list(v, name) -> list[float]:
    vals = v if isinstance(v, list) else [v]
    if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in vals):
        raise ConfigError(f"{name} must be a number or a list of numbers")
    return [float(x) for x in vals]


@dataclass
class RunConfig:
    raw: dict
    lattice: dict | None
    channel: dict | None
    decoder: dict | None
    sim: dict | None
    output: dict

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        _check_keys(raw, None)
        for name in ("lattice", "channel", "decoder", "sim", "output"):
            if name in raw:
                _check_keys(raw[name], name)
        lat = raw.get("lattice")
        if lat is not None:
            if "derive" in lat:
                _check_keys(lat["derive"], "derive")
            if "random_T" in lat:
                _check_keys(lat["random_T"], "random_T")
            sources = [k for k in ("sets", "derive", "spec_file") if k in lat]
            if len(sources) != 1:
                raise ConfigError("lattice needs exactly one profile source: sets, derive or spec_file")
            if "spec_file" not in lat and "N" not in lat:
                raise ConfigError("lattice.N is required")
            convs = [k for k in ("taps", "T", "random_T") if k in lat]
            if len(convs) > 1:
                raise ConfigError("give at most one of taps, T, random_T")
            kind = lat.get("kind", "polar")
            if kind not in ("polar", "pac", "pac-d"):
                raise ConfigError(f"lattice.kind must be polar, pac or pac-d, got {kind!r}")
            if "spec_file" not in lat and (kind == "polar") == bool(convs):
                raise ConfigError("PAC kinds need taps, T or random_T; polar takes none")
        ch = raw.get("channel")
        if ch is not None:
            if ("sigma" in ch) == ("nvnr_db" in ch):
                raise ConfigError("channel needs exactly one of sigma or nvnr_db")
            grid = _as_list(ch.get("sigma", ch.get("nvnr_db")), "channel grid")
            if not grid:
                raise ConfigError("channel grid is empty")
            if "sigma" in ch and any(s <= 0 for s in grid):
                raise ConfigError("sigma values must be positive")
        dec = raw.get("decoder")
        if dec is not None:
            try:
                DecoderConfig(dec.get("kind", "SC"), int(dec.get("list_size", 1)))
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"decoder: {exc}") from exc
        sim = raw.get("sim")
        if sim is not None:
            for k in ("trials", "seed"):
                if not isinstance(sim.get(k), int) or isinstance(sim.get(k), bool):
                    raise ConfigError(f"sim.{k} must be an integer")
            if sim["trials"] < 1:
                raise ConfigError("sim.trials must be at least 1")
        out = dict(raw.get("output", {}))
        if out.get("format", "csv") not in ("csv", "json"):
            raise ConfigError("output.format must be csv or json")
        return cls(raw, lat, ch, dec, sim, out)

    def require(self, *blocks: str):
        missing = [b for b in blocks if getattr(self, b) is None]
        if missing:
            raise ConfigError(f"this command needs config block(s): {missing}")


# --------------------------------------------------------------------------
# building specs
# --------------------------------------------------------------------------

def _conv_from(lat: dict, N: int) -> ConvolutionProfile | None:
    if "taps" in lat:
        return ConvolutionProfile(N, taps=tuple(lat["taps"]))
    if "T" in lat:
        return ConvolutionProfile(N, matrix=tuple(map(tuple, lat["T"])))
    if "random_T" in lat:
        rt = lat["random_T"]
        return ConvolutionProfile.random(N, int(rt["seed"]), float(rt.get("density", 0.5)))
    return None


def _spec_from_file(lat: dict) -> LatticeSpec:
    data = json.loads(Path(lat["spec_file"]).read_text())
    stored = data.pop("spec_hash", None)
    data.pop("tool_version", None)
    data.pop("gen", None)
    spec = spec_from_dict(data)
    if stored is not None and stored != spec_hash(spec):
        raise PreconditionError(f"spec file hash {stored} does not match its content "
                                f"({spec_hash(spec)})")
    return spec


def _derive_profile(lat: dict, workers: int, out: Path | None):
    d = lat["derive"]
    N = int(lat["N"])
    if "r" not in lat:
        raise ConfigError("lattice.r is required with derive")
    r = int(lat["r"])
    trials, seed, sigma = int(d.get("trials", 10000)), int(d.get("seed", 0)), float(d["sigma"])
    if trials < 1000:
        raise PreconditionError(f"reliability estimation needs at least 1000 trials, got {trials}")
    cache = None
    table = None
    if out is not None:
        cache = out / f"reliability_N{N}_r{r}_s{sigma!r}_t{trials}_seed{seed}.txt"
        if cache.exists():
            table = load_reliabilities(cache, N, r, sigma, trials, seed)
    if table is None:
        table = estimate_reliabilities(sigma, N, r, trials, seed, workers=workers)
        if cache is not None:
            save_reliabilities(table, cache)
    if ("targets" in d) == ("thresholds" in d):
        raise ConfigError("derive needs exactly one of targets or thresholds")
    profile = select_profile(table, targets=d.get("targets"), thresholds=d.get("thresholds"))
    return profile, table, cache


def build_spec(cfg: RunConfig, workers: int = 1, out: Path | None = None) -> LatticeSpec:
    lat = cfg.lattice
    if "spec_file" in lat:
        spec = _spec_from_file(lat)
    else:
        N = int(lat["N"])
        if "sets" in lat:
            profile = RateProfile(N, lat["sets"])
            if "r" in lat and int(lat["r"]) != profile.r:
                raise ConfigError(f"lattice.r={lat['r']} but {profile.r} sets were given")
        else:
            profile = _derive_profile(lat, workers, out)[0]
        conv = _conv_from(lat, N)
        kind = lat.get("kind", "polar")
        if kind == "polar":
            spec = build_generator(profile)
        elif kind == "pac":
            spec = pac_generator(conv, profile)
        else:
            spec = construction_d_generator(conv, profile)
        if "scale" in lat:
            spec = scale_lattice(spec, Fraction(str(lat["scale"])))
    if "spec_hash" in lat and lat["spec_hash"] != spec_hash(spec):
        raise PreconditionError(f"spec hash mismatch: config expects {lat['spec_hash']}, "
                                f"lattice hashes to {spec_hash(spec)}")
    return spec


def _sigmas(cfg: RunConfig, spec: LatticeSpec | None = None) -> list[float]:
    ch = cfg.channel
    if "sigma" in ch:
        return _as_list(ch["sigma"], "sigma")
    if spec is None:
        raise ConfigError("nvnr_db grids need a lattice block")
    return [sigma_for_nvnr_db(spec, d) for d in _as_list(ch["nvnr_db"], "nvnr_db")]


def integer_det(m) -> int:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    a = [[int(v) for v in row] for row in np.asarray(m)]
    n = len(a)
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        akk = a[k][k]
        for i in range(k + 1, n):
            aik = a[i][k]
            row_i, row_k = a[i], a[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * akk - aik * row_k[j]) // prev
        prev = akk
    return sign * a[n - 1][n - 1] if n else 1


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def _write_json(path: Path, data: dict) -> Path:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path


def _stamp(spec: LatticeSpec) -> dict:
    return {"spec_hash": spec_hash(spec), "tool_version": __version__}


def cmd_construct(cfg: RunConfig, out: Path, workers: int, fmt: str) -> int:
    cfg.require("lattice")
    spec = build_spec(cfg, workers, out)
    lv = log2_volume(spec.profile)
    data = spec_to_dict(spec)
    data.update(_stamp(spec))
    data["gen"] = np.asarray(spec.gen).tolist()
    path = _write_json(out / "spec.json", data)
    print(f"kind {spec.kind}  N={spec.N}  r={spec.r}  spec_hash {spec_hash(spec)}")
    print("K_l = " + ", ".join(str(k) for k in spec.profile.sizes))
    print(f"log2 volume = {lv + spec.N * float(np.log2(float(spec.scale))):g}")
    if spec.N <= 128:
        det = abs(integer_det(spec.gen))
        ok = det == 1 << lv
        print(f"|det gen| = 2^{det.bit_length() - 1}  ({'matches' if ok else 'DOES NOT match'} "
              f"r N - sum K)")
        if not ok:
            raise ArithmeticError("generator determinant disagrees with the volume formula")
    if spec.N <= 16:
        if spec.conv is not None and spec.kind == "pac":
            print("Tbar =")
            for row in lift_convolution(spec.conv, spec.profile):
                print("  [" + ", ".join(str(v) for v in row) + "]")
        print("gen =")
        for row in np.asarray(spec.gen).tolist():
            print("  " + str(row))
    print(f"wrote {path}")
    return EXIT_OK


def cmd_profile(cfg: RunConfig, out: Path, workers: int, fmt: str) -> int:
    cfg.require("lattice")
    lat = cfg.lattice
    if "derive" not in lat:
        raise ConfigError("profile needs lattice.derive")
    profile, table, cache = _derive_profile(lat, workers, out)
    data = {"N": profile.N, "r": profile.r, "sets": profile.sorted_sets(),
            "sigma": table.sigma, "trials": table.trials, "seed": table.seed,
            "method": table.method, "tool_version": __version__}
    path = _write_json(out / "profile.json", data)
    for ell, s in enumerate(profile.sorted_sets(), start=1):
        print(f"I_{ell} (K={len(s)}): {s}")
    print(f"reliability cache {cache}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_analyze(cfg: RunConfig, out: Path, workers: int, fmt: str) -> int:
    cfg.require("lattice")
    spec = build_spec(cfg, workers, out)
    unscaled = spec if spec.scale == 1 else scale_lattice(spec, 1 / spec.scale)
    try:
        rep = lattice_min_vectors(unscaled)
    except ValueError as exc:
        raise PreconditionError(str(exc)) from exc
    data = report_dict(rep, unscaled)
    data["spec_hash"] = spec_hash(spec)
    if spec.scale != 1:
        data["d2min_scaled"] = str(rep.d2min * spec.scale ** 2)
    if cfg.channel is not None:
        data["nvnr"] = []
        for s in _sigmas(cfg, spec):
            dec = nvnr_decomposition(spec, s)
            data["nvnr"].append({"sigma": s, "gamma": nvnr(spec, s), "nvnr_db": nvnr_db(spec, s),
                                 "decomposition": dec})
    path = _write_json(out / "analysis.json", data)
    print(f"kind {spec.kind}  N={spec.N}  r={spec.r}  spec_hash {spec_hash(spec)}")
    print(f"d2min = {rep.d2min}   N_min = {rep.n_min}   (convention: {rep.convention}, "
          f"v and -v counted separately)")
    print("contributions 4^(l-1) d_H(C_l), 4^r: " + ", ".join(
        "-" if c is None else str(c) for c in rep.contributions))
    print("other conventions: " + ", ".join(f"{k}={v}" for k, v in rep.alternatives.items()))
    for row in data.get("nvnr", []):
        d = row["decomposition"]
        print(f"sigma={row['sigma']:g}  gamma={row['gamma']:.6g}  "
              f"terms sum {d['total']:.9f} vs log2(gamma/2pi e) {d['log2_nvnr_over_2pie']:.9f}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig, out: Path, workers: int, fmt: str) -> int:
    cfg.require("lattice", "channel", "decoder", "sim")
    spec = build_spec(cfg, workers, out)
    grid = _sigmas(cfg, spec)
    dec = cfg.decoder
    kind = dec.get("kind", "SC")
    config = DecoderConfig(kind, int(dec.get("list_size", 1)),
                           spec.conv if kind == "PAC-SCL" else None)
    sim = cfg.sim
    recs = vnr_sweep(spec, config, sigmas=grid, trials=sim["trials"], seed=sim["seed"],
                     stop_at_errors=sim.get("stop_at_errors"), workers=workers,
                     box=sim.get("box"))
    if fmt == "csv":
        path = write_csv(recs, out / "results.csv")
    else:
        path = write_json(recs, out / "results.json")
    for rec in recs:
        print(f"sigma={rec.sigma:g}  nvnr={rec.nvnr_db:.3f} dB  P_e={rec.p_e:.4g} "
              f"[{rec.ci_low:.4g}, {rec.ci_high:.4g}]  ({rec.errors}/{rec.trials})")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_capacity(cfg: RunConfig, out: Path, workers: int, fmt: str) -> int:
    cfg.require("channel")
    if "sigma" not in cfg.channel:
        raise ConfigError("capacity needs channel.sigma")
    r = cfg.channel.get("levels")
    if r is None and cfg.lattice is not None:
        r = cfg.lattice.get("r", len(cfg.lattice.get("sets", [])) or None)
    if not isinstance(r, int) or r < 1:
        raise ConfigError("capacity needs channel.levels (a positive integer)")
    rows = []
    for s in _as_list(cfg.channel["sigma"], "sigma"):
        caps = partition_capacity(s, r)
        rows.append({"sigma": s, "levels": list(caps.levels), "sum_levels": sum(caps.levels),
                     "chain_total": caps.chain_total, "bottom": caps.bottom, "top": caps.top,
                     "telescoping_error": abs(sum(caps.levels) - caps.chain_total)})
    head = ["sigma"] + [f"C{ell}" for ell in range(1, r + 1)] + ["sum", "chain", "telescoping_error"]
    print("  ".join(f"{h:>12}" for h in head))
    for row in rows:
        vals = [row["sigma"]] + row["levels"] + [row["sum_levels"], row["chain_total"],
                                                 row["telescoping_error"]]
        print("  ".join(f"{v:12.6g}" for v in vals))
    if fmt == "csv":
        path = out / "capacity.csv"
        lines = [",".join(head + ["tool_version"])]
        for row in rows:
            vals = [row["sigma"]] + row["levels"] + [row["sum_levels"], row["chain_total"],
                                                     row["telescoping_error"]]
            lines.append(",".join(repr(float(v)) for v in vals) + f",{__version__}")
        path.write_text("\n".join(lines) + "\n")
    else:
        path = _write_json(out / "capacity.json", {"r": r, "rows": rows, "tool_version": __version__})
    print(f"wrote {path}")
    return EXIT_OK


COMMANDS = {
    "construct": cmd_construct,
    "profile": cmd_profile,
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "capacity": cmd_capacity,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polarlattice", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", default=None, help="output directory (default: output.dir or .)")
    p.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on it)")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        cfg = RunConfig.load(args.config)
        out = Path(args.out or cfg.output.get("dir", "."))
        fmt = args.format or cfg.output.get("format", "csv")
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out, args.workers, fmt)
    except (ConfigError, ProfileError, KeyError, TypeError) as exc:
        msg = f"missing field {exc}" if isinstance(exc, KeyError) else str(exc)
        print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except PreconditionError as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except ValueError as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (ArithmeticError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
