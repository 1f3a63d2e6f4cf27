"""Experiment configuration, deterministic file emission, and checkpoints.

All outputs are reproducible byte-for-byte for a fixed (config, seed): floats
are written with shortest round-trip repr, rows in fixed order, and manifests
record a sha256 per emitted file plus the hash of the canonical config.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import GridSpec, SpectralField, VectorField
from .spectral import field_from_records, field_to_records

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "parse_config",
    "write_csv",
    "write_json",
    "write_manifest",
    "save_field_json",
    "load_field_json",
    "save_field_binary",
    "load_field_binary",
    "save_checkpoint",
    "load_checkpoint",
]

VERSION = "0.1.0"

_KINDS = ("identities", "renorm", "simulate", "galerkin", "noise-stats")

_KNOWN_KEYS = {
    "kind", "grid_n", "nu", "threshold_exponent", "kappa", "dt", "t_final",
    "lam", "lams", "seed", "seeds", "samples", "eps", "initial_data",
    "perturbation", "galerkin_levels", "diag_every", "snapshot_every",
    "noise", "figures", "out_dir", "tolerance", "chaos_time", "dump_trajectory",
}

_INITIAL_KINDS = ("zero", "single-mode", "random", "file")


class ConfigError(ValueError):
    """Raised with the full list of violations found while validating a config."""

    def __init__(self, violations: list[str]):
        super().__init__("invalid configuration:\n  - " + "\n  - ".join(violations))
        self.violations = violations


@dataclass
class ExperimentConfig:
    kind: str
    grid_n: int = 64
    nu: float = 1.0
    threshold_exponent: float = 3.0
    kappa: float = 0.02
    dt: float = 1e-3
    t_final: float = 0.25
    lam: float = 8.0
    lams: list[float] = field(default_factory=lambda: [8.0, 16.0, 32.0, 64.0])
    seed: int = 0
    seeds: list[int] = field(default_factory=lambda: [0])
    samples: int = 500
    eps: float = 0.3
    initial_data: dict = field(default_factory=lambda: {"kind": "zero"})
    perturbation: dict = field(default_factory=lambda: {"kind": "zero"})
    galerkin_levels: list[int] = field(default_factory=lambda: [4, 8, 16, 32])
    diag_every: int = 50
    snapshot_every: int = 10
    noise: bool = True
    figures: bool = True
    tolerance: float = 1e-10
    chaos_time: float = 0.5
    dump_trajectory: bool = False

    def canonical(self) -> dict:
        return {
            "kind": self.kind,
            "grid_n": self.grid_n,
            "nu": self.nu,
            "threshold_exponent": self.threshold_exponent,
            "kappa": self.kappa,
            "dt": self.dt,
            "t_final": self.t_final,
            "lam": self.lam,
            "lams": list(self.lams),
            "seed": self.seed,
            "seeds": list(self.seeds),
            "samples": self.samples,
            "eps": self.eps,
            "initial_data": dict(self.initial_data),
            "perturbation": dict(self.perturbation),
            "galerkin_levels": list(self.galerkin_levels),
            "diag_every": self.diag_every,
            "snapshot_every": self.snapshot_every,
            "noise": self.noise,
            "figures": self.figures,
            "tolerance": self.tolerance,
            "chaos_time": self.chaos_time,
            "dump_trajectory": self.dump_trajectory,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _validate(raw: dict) -> tuple[ExperimentConfig | None, list[str]]:
    violations = []
    unknown = sorted(set(raw) - _KNOWN_KEYS)
    for key in unknown:
        violations.append(f"unknown key: {key!r}")
    if "kind" not in raw:
        violations.append("missing required key: 'kind'")
    elif raw["kind"] not in _KINDS:
        violations.append(f"key 'kind' must be one of {_KINDS}, got {raw['kind']!r}")

    def check(key, pred, msg):
        if key in raw and not pred(raw[key]):
            violations.append(f"key {key!r} {msg}, got {raw[key]!r}")

    check("grid_n", lambda v: isinstance(v, int) and v >= 8 and v % 2 == 0,
          "must be an even integer >= 8")
    check("nu", lambda v: isinstance(v, (int, float)) and v > 0, "must be > 0")
    check("threshold_exponent",
          lambda v: isinstance(v, (int, float)) and 11.0 / 4.0 <= v <= 3.0,
          "must lie in [11/4, 3]")
    check("kappa", lambda v: isinstance(v, (int, float)) and 0 < v < 0.5,
          "must lie in (0, 1/2)")
    check("dt", lambda v: isinstance(v, (int, float)) and v > 0, "must be > 0")
    check("t_final", lambda v: isinstance(v, (int, float)) and v > 0, "must be > 0")
    check("lam", lambda v: isinstance(v, (int, float)) and v >= 1, "must be >= 1")
    check("lams", lambda v: isinstance(v, list) and all(x >= 1 for x in v),
          "must be a list of thresholds >= 1")
    check("samples", lambda v: isinstance(v, int) and v >= 100, "must be an int >= 100")
    check("eps", lambda v: isinstance(v, (int, float)) and 0 <= v <= 0.5,
          "must lie in [0, 1/2]")
    check("seed", lambda v: isinstance(v, int) and v >= 0, "must be a nonnegative int")
    check("seeds", lambda v: isinstance(v, list) and all(isinstance(x, int) for x in v),
          "must be a list of ints")
    check("galerkin_levels",
          lambda v: isinstance(v, list) and len(v) >= 2
          and all(b == 2 * a for a, b in zip(v, v[1:])),
          "must be a doubling sequence")
    check("initial_data",
          lambda v: isinstance(v, dict) and v.get("kind", "zero") in _INITIAL_KINDS,
          f"must be a mapping with kind in {_INITIAL_KINDS}")
    check("tolerance", lambda v: isinstance(v, (int, float)) and v > 0, "must be > 0")
    check("chaos_time", lambda v: isinstance(v, (int, float)) and v >= 0, "must be >= 0")

    if violations:
        return None, violations
    raw = dict(raw)
    raw.pop("out_dir", None)
    return ExperimentConfig(**raw), []


def parse_config(path: str | Path) -> ExperimentConfig:
    """Load and validate a JSON config; all violations are reported at once."""
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError([f"not valid JSON: {exc}"]) from exc
    if not isinstance(raw, dict):
        raise ConfigError(["top-level JSON value must be an object"])
    cfg, violations = _validate(raw)
    if violations:
        raise ConfigError(violations)
    return cfg


def config_from_dict(raw: dict) -> ExperimentConfig:
    cfg, violations = _validate(raw)
    if violations:
        raise ConfigError(violations)
    return cfg


# ---------------------------------------------------------------------------
# deterministic writers


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out_dir: Path, cfg: ExperimentConfig, files: list[Path]) -> Path:
    manifest = {
        "version": VERSION,
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "config": cfg.canonical(),
        "files": {str(p.relative_to(out_dir)): _sha256(p) for p in sorted(files)},
    }
    path = out_dir / "manifest.json"
    write_json(path, manifest)
    return path


# ---------------------------------------------------------------------------
# field serialization: (k1, k2, re, im) records


def save_field_json(path: Path, f: SpectralField) -> None:
    rec = field_to_records(f)
    payload = {
        "grid_n": f.grid.n,
        "records": [[int(r["k1"]), int(r["k2"]), float(r["re"]), float(r["im"])] for r in rec],
    }
    write_json(path, payload)


def load_field_json(path: Path) -> SpectralField:
    payload = json.loads(Path(path).read_text())
    grid = GridSpec(int(payload["grid_n"]))
    rec = np.array(
        [tuple(row) for row in payload["records"]],
        dtype=[("k1", "<i4"), ("k2", "<i4"), ("re", "<f8"), ("im", "<f8")],
    )
    return field_from_records(grid, rec)


_BIN_MAGIC = b"SMHDF1\x00\x00"


def save_field_binary(path: Path, f: SpectralField) -> None:
    """Little-endian layout: 8-byte magic, uint32 n, uint64 count, then
    (int32 k1, int32 k2, float64 re, float64 im) records."""
    rec = field_to_records(f)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(_BIN_MAGIC)
        fh.write(struct.pack("<IQ", f.grid.n, rec.size))
        fh.write(rec.tobytes())


def load_field_binary(path: Path) -> SpectralField:
    raw = Path(path).read_bytes()
    if raw[:8] != _BIN_MAGIC:
        raise ValueError(f"{path} is not a spectral field dump")
    n, count = struct.unpack("<IQ", raw[8:20])
    rec = np.frombuffer(
        raw[20:], dtype=[("k1", "<i4"), ("k2", "<i4"), ("re", "<f8"), ("im", "<f8")],
        count=count,
    )
    return field_from_records(GridSpec(int(n)), rec)


# ---------------------------------------------------------------------------
# solver checkpoints: JSON header + raw complex128 field dump


def save_checkpoint(path: Path, state) -> None:
    from .dynamics import SolverState  # deferred: reporting stays import-light

    assert isinstance(state, SolverState)
    p = state.params
    header = {
        "version": VERSION,
        "grid_n": p.grid.n,
        "padding_factor": p.grid.padding_factor,
        "nu": p.nu,
        "dt": p.dt,
        "threshold_exponent": p.threshold_exponent,
        "kappa": p.kappa,
        "hf_delta": p.hf_delta,
        "verify_forms": p.verify_forms,
        "noise_mollify": p.noise_mollify,
        "t": state.t,
        "lam_t": state.lam_t,
        "index": state.index,
        "i0": state.i0,
        "ledger": [[e.index, e.time, e.norm] for e in state.ledger],
        "noise": None
        if state.noise is None
        else {
            "seed": state.noise.seed,
            "t": state.noise.t,
            "step": state.noise.step,
            "mode_cutoff": state.noise.mode_cutoff,
        },
        "field_order": ["w_u", "w_b", "y_u", "y_b", "q_u", "q_b", "zeta_u", "zeta_b",
                        "F_u", "F_b"],
        "byte_order": "little-endian complex128, C-contiguous (n, n) per entry; "
                      "vector fields dump component 1 then component 2",
    }
    blob = json.dumps(header, sort_keys=True).encode()
    chunks = [struct.pack("<Q", len(blob)), blob]
    for vec in (state.w_u, state.w_b, state.y_u, state.y_b, state.q_u, state.q_b,
                state.zeta_u, state.zeta_b):
        for comp in vec.components:
            chunks.append(np.ascontiguousarray(comp.coeffs, dtype="<c16").tobytes())
    if state.noise is not None:
        chunks.append(np.ascontiguousarray(state.noise.F_u, dtype="<c16").tobytes())
        chunks.append(np.ascontiguousarray(state.noise.F_b, dtype="<c16").tobytes())
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(b"".join(chunks))


def load_checkpoint(path: Path):
    from .dynamics import LedgerEntry, SolverParams, SolverState
    from .noise import NoiseState

    raw = Path(path).read_bytes()
    (hlen,) = struct.unpack("<Q", raw[:8])
    header = json.loads(raw[8 : 8 + hlen].decode())
    n = header["grid_n"]
    grid = GridSpec(n, header["padding_factor"])
    params = SolverParams(
        grid=grid,
        nu=header["nu"],
        dt=header["dt"],
        threshold_exponent=header["threshold_exponent"],
        kappa=header["kappa"],
        hf_delta=header["hf_delta"],
        verify_forms=header["verify_forms"],
        noise_mollify=header["noise_mollify"],
    )
    nbytes = n * n * 16
    off = 8 + hlen
    arrays = []
    expected = 16 + (2 if header["noise"] is not None else 0)
    for _ in range(expected):
        arrays.append(
            np.frombuffer(raw[off : off + nbytes], dtype="<c16").reshape(n, n).copy()
        )
        off += nbytes
    vecs = [
        VectorField(SpectralField(grid, arrays[2 * i], mask=False),
                    SpectralField(grid, arrays[2 * i + 1], mask=False))
        for i in range(8)
    ]
    noise = None
    if header["noise"] is not None:
        meta = header["noise"]
        noise = NoiseState(grid, header["nu"], meta["seed"], meta["t"], meta["step"],
                           arrays[16], arrays[17], meta["mode_cutoff"])
    state = SolverState(
        params=params,
        t=header["t"],
        w_u=vecs[0], w_b=vecs[1], y_u=vecs[2], y_b=vecs[3],
        q_u=vecs[4], q_b=vecs[5],
        noise=noise,
        zeta_u=vecs[6], zeta_b=vecs[7],
        lam_t=header["lam_t"],
        index=header["index"],
        i0=header["i0"],
        ledger=[LedgerEntry(int(i), float(t), float(nm)) for i, t, nm in header["ledger"]],
        norm_history=[],
    )
    return state
