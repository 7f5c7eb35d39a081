"""Artifact serialisation: reports, trajectories, manifests.

Report JSON is canonical (sorted keys) so identical configurations produce
byte-identical files; wall-clock information lives only in the manifest.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import Trajectory
from .experiments import ExperimentReport

_BIN_MAGIC = b"EITBIN1\n"


def config_hash(raw: dict) -> str:
    """SHA-256 of the canonical JSON form; stable under key reordering."""
    blob = json.dumps(raw, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def report_json(report: ExperimentReport) -> str:
    return json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"


def write_report(report: ExperimentReport, path: Path | str) -> str:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report_json(report), encoding="utf-8")
    return str(path)


@dataclass
class RunManifest:
    """Inventory of one CLI invocation; the only artifact carrying timing."""

    config_sha256: str
    tool_version: str = __version__
    artifacts: list[dict] = field(default_factory=list)
    started_unix: float = 0.0
    wall_seconds: float = 0.0

    def add_artifact(self, path: Path | str):
        p = Path(path)
        self.artifacts.append({"path": str(p), "bytes": p.stat().st_size})

    def to_dict(self) -> dict:
        return {
            "config_sha256": self.config_sha256,
            "tool_version": self.tool_version,
            "artifacts": sorted(self.artifacts, key=lambda a: a["path"]),
            "started_unix": self.started_unix,
            "wall_seconds": self.wall_seconds,
        }


def write_manifest(manifest: RunManifest, path: Path | str) -> str:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest.to_dict(), sort_keys=True, indent=2) + "\n",
                    encoding="utf-8")
    return str(path)


# ---------------------------------------------------------------------------
# trajectory export


def export_trajectory(traj: Trajectory, outdir: Path | str, fmt: str = "csv") -> list[str]:
    """Write a trajectory as JSONL metadata plus per-snapshot CSV files, or a
    single column-major binary dump with a JSON header (fmt='bin')."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    if fmt == "bin":
        return [_export_bin(traj, outdir / "trajectory.bin")]
    if fmt != "csv":
        raise ValueError(f"unknown trajectory format {fmt!r}; use 'csv' or 'bin'")

    paths = []
    meta_path = outdir / "trajectory.jsonl"
    with open(meta_path, "w", encoding="utf-8") as meta:
        header = {
            "kind": "trajectory",
            "scheme": traj.scheme,
            "n_steps": traj.n_steps,
            "snapshots": len(traj.times),
            "Nz": len(traj.z),
            "aborted": traj.aborted,
            "abort_reason": traj.abort_reason,
        }
        meta.write(json.dumps(header, sort_keys=True) + "\n")
        for i, (t, st) in enumerate(zip(traj.times, traj.states)):
            name = f"snapshot_{i:05d}.csv"
            cols = [traj.z]
            names = ["z"]
            for s in range(st.E.shape[0]):
                cols += [st.E[s].real, st.E[s].imag]
                names += [f"ReE{s + 1}", f"ImE{s + 1}"]
            cols += [st.sigma_bc.real, st.sigma_bc.imag, st.excitation_fraction()]
            names += ["Re_sigma_bc", "Im_sigma_bc", "excitation"]
            data = np.column_stack(cols)
            with open(outdir / name, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(",".join(names) + "\n")
                np.savetxt(fh, data, delimiter=",", fmt="%.17g")
            meta.write(json.dumps({
                "index": i, "t": float(t), "file": name,
                "storage": bool(traj.storage_flags[i]),
                "pumps": [float(v) for v in traj.pump_amps[i]],
            }, sort_keys=True) + "\n")
            paths.append(str(outdir / name))
    return [str(meta_path)] + paths


def _export_bin(traj: Trajectory, path: Path) -> str:
    C = traj.states[0].E.shape[0]
    Nz = len(traj.z)
    S = len(traj.times)
    # layout per snapshot: E (C,Nz), sigma_be (C,Nz), sigma_bc (1,Nz)
    block = np.empty((S, 2 * C + 1, Nz), dtype=np.complex128)
    for i, st in enumerate(traj.states):
        block[i, :C] = st.E
        block[i, C:2 * C] = st.sigma_be
        block[i, 2 * C] = st.sigma_bc
    header = {
        "dtype": "complex128",
        "order": "F",
        "shape": [S, 2 * C + 1, Nz],
        "rows": [f"E{s + 1}" for s in range(C)] + [f"sigma_be{s + 1}" for s in range(C)]
                + ["sigma_bc"],
        "times": [float(t) for t in traj.times],
        "pumps": [[float(v) for v in row] for row in traj.pump_amps],
        "storage": [bool(b) for b in traj.storage_flags],
        "z": [float(v) for v in traj.z],
        "scheme": traj.scheme,
    }
    raw = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_BIN_MAGIC)
        fh.write(len(raw).to_bytes(8, "little"))
        fh.write(raw)
        fh.write(np.asfortranarray(block).tobytes(order="F"))
    return str(path)


def read_trajectory_bin(path: Path | str) -> tuple[dict, np.ndarray]:
    """Read back a binary trajectory dump; returns (header, data array)."""
    with open(path, "rb") as fh:
        magic = fh.read(len(_BIN_MAGIC))
        if magic != _BIN_MAGIC:
            raise ValueError(f"{path}: not a trajectory binary dump")
        n = int.from_bytes(fh.read(8), "little")
        header = json.loads(fh.read(n).decode("utf-8"))
        data = np.frombuffer(fh.read(), dtype=np.complex128)
    shape = tuple(header["shape"])
    return header, data.reshape(shape, order="F")


def now() -> float:
    return time.time()
