"""Command-line front end: file formats, fixtures, test runs, JSON reports.

Measurement files are JSON with complex entries as [re, im] pairs in
row-major order.  Reports are canonical JSON (sorted keys, two-space indent)
so a parse/emit round trip is byte-identical.  Exit codes: 0 accept/success,
1 reject/violation, 2 error.
"""

from __future__ import annotations

import argparse
import json
import os
import struct
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, metric, pauli, schur, testers
from .blackbox import BlackBox
from .core import (
    CompletenessViolation,
    DEFAULT_COMPLETENESS_TOL,
    DimensionMismatch,
    Measurement,
    QmtestError,
    random_unitary,
    validate_measurement,
)

FILE_VERSION = 1
SCHUR_MAGIC = b"QMSCHURB"
SCHUR_VERSION = 1


class FileFormatError(QmtestError):
    """Measurement or cache file is malformed or of an unknown version."""


# ---------------------------------------------------------------------------
# measurement files


def _matrix_to_pairs(op: np.ndarray) -> list:
    flat = op.reshape(-1)
    return [[float(v.real), float(v.imag)] for v in flat]


def _pairs_to_matrix(pairs, dim: int) -> np.ndarray:
    if len(pairs) != dim * dim:
        raise FileFormatError(f"operator needs {dim * dim} entries, got {len(pairs)}")
    flat = np.array([complex(re, im) for re, im in pairs])
    return flat.reshape(dim, dim)


def save_measurement(path, meas: Measurement, d: int, n: int, metadata: dict | None = None):
    doc = {
        "version": FILE_VERSION,
        "d": int(d),
        "n": int(n),
        "operators": [_matrix_to_pairs(op) for op in meas.operators],
        "metadata": {str(k): str(v) for k, v in (metadata or {}).items()},
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True) + "\n")


def load_measurement(path, tol: float = DEFAULT_COMPLETENESS_TOL):
    """Parse and validate a measurement file; returns (measurement, d, n, metadata)."""
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FileFormatError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("version") != FILE_VERSION:
        raise FileFormatError(
            f"{path}: unknown or missing file version {doc.get('version')!r}"
        )
    try:
        d = int(doc["d"])
        n = int(doc["n"])
        raw_ops = doc["operators"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"{path}: missing field {exc}") from exc
    dim = d**n
    ops = [_pairs_to_matrix(pairs, dim) for pairs in raw_ops]
    meas = validate_measurement(ops, tol)
    return meas, d, n, doc.get("metadata", {})


# ---------------------------------------------------------------------------
# Schur transform cache


def save_schur_cache(basis: schur.SchurBasis, path):
    """Binary cache: magic, version, d, n, D, then row-major complex128 U."""
    header = SCHUR_MAGIC + struct.pack("<III", SCHUR_VERSION, basis.d, basis.n)
    header += struct.pack("<I", basis.D)
    payload = np.ascontiguousarray(basis.U, dtype="<c16").tobytes()
    Path(path).write_bytes(header + payload)


def load_schur_cache(path) -> schur.SchurBasis:
    raw = Path(path).read_bytes()
    if raw[:8] != SCHUR_MAGIC:
        raise FileFormatError(f"{path}: bad magic")
    version, d, n = struct.unpack("<III", raw[8:20])
    if version != SCHUR_VERSION:
        raise FileFormatError(f"{path}: unknown cache version {version}")
    (D,) = struct.unpack("<I", raw[20:24])
    if D != d**n:
        raise FileFormatError(f"{path}: header dimension mismatch")
    U = np.frombuffer(raw[24:], dtype="<c16").reshape(D, D).copy()
    shapes = tuple(schur.partitions(n, d))
    blocks = {}
    triples = []
    offset = 0
    for shape in shapes:
        w, v = schur.dim_gl(shape, d), schur.dim_sn(shape)
        blocks[shape] = (offset, w, v)
        for a in range(w):
            for b in range(v):
                triples.append((shape, a, b))
        offset += w * v
    U.setflags(write=False)
    basis = schur.SchurBasis(d=d, n=n, U=U, shapes=shapes, blocks=blocks,
                             triples=tuple(triples))
    schur.verify_schur_basis(basis)
    return basis


# ---------------------------------------------------------------------------
# reports


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set)):
        return [_jsonable(v) for v in sorted(obj)] if isinstance(obj, set) else [
            _jsonable(v) for v in obj
        ]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj


def emit_report(report: dict) -> str:
    """Canonical serialization; parse->emit of the result is byte-identical."""
    return json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"


def _base_report(args, seed, started) -> dict:
    return {
        "command": " ".join(args),
        "seed": seed,
        "wall_time": round(time.monotonic() - started, 6),
        "library_version": __version__,
    }


def _default_seed(value) -> int:
    if value is not None:
        return int(value)
    env = os.environ.get("QMTEST_SEED")
    return int(env) if env else 0


def _verdict_payload(v: testers.Verdict) -> dict:
    return {
        "decision": v.decision,
        "reject_stage": v.reject_stage,
        "query_count": v.query_count,
        "stage_stats": v.stage_stats,
        "params": v.params,
    }


# ---------------------------------------------------------------------------
# commands


def cmd_validate(ns, argv, started) -> int:
    report = _base_report(argv, None, started)
    try:
        meas, d, n, meta = load_measurement(ns.path, ns.tol)
    except CompletenessViolation as exc:
        report["error"] = f"CompletenessViolation: {exc}"
        print(emit_report(report), end="")
        return 1
    except (FileFormatError, DimensionMismatch, QmtestError, ValueError) as exc:
        report["error"] = f"{type(exc).__name__}: {exc}"
        print(emit_report(report), end="")
        return 2
    report["params"] = {"d": d, "n": n, "outcomes": len(meas), "tol": ns.tol}
    report["completeness_residual"] = meas.completeness_residual
    report["metadata"] = meta
    print(emit_report(report), end="")
    return 0


def cmd_distance(ns, argv, started) -> int:
    report = _base_report(argv, None, started)
    try:
        M, _, _, _ = load_measurement(ns.path_a)
        N, _, _, _ = load_measurement(ns.path_b)
        exact = metric.delta_measurement(M, N)
        numeric = metric.delta_measurement_numeric(M, N)
    except (FileFormatError, QmtestError, ValueError) as exc:
        report["error"] = f"{type(exc).__name__}: {exc}"
        print(emit_report(report), end="")
        return 2
    report["estimate"] = {
        "delta": exact.delta,
        "delta_squared": exact.delta_squared,
        "numeric_inf_delta": numeric.delta,
        "cross_check_gap": abs(exact.delta - numeric.delta),
    }
    print(emit_report(report), end="")
    return 0


def _config_from_flags(ns, seed) -> testers.TesterConfig:
    return testers.TesterConfig(
        epsilon=ns.epsilon,
        seed=seed,
        sampling="aggregate" if ns.mode == "aggregate" else "per_trial",
        constant_scale=ns.scale,
    )


def cmd_test(ns, argv, started) -> int:
    seed = _default_seed(ns.seed)
    report = _base_report(argv, seed, started)
    try:
        meas, d, n, _ = load_measurement(ns.path)
        cfg = _config_from_flags(ns, seed)
        box = BlackBox(meas, seed=seed, d=d)
        if ns.property == "stabilizer":
            verdict = testers.test_stabilizer(box, cfg)
        elif ns.property == "klocal":
            if ns.k is None:
                raise ValueError("klocal test needs --k")
            verdict = testers.test_klocal(box, ns.k, cfg)
        elif ns.property == "perminv":
            if ns.schur_cache and Path(ns.schur_cache).exists():
                basis = load_schur_cache(ns.schur_cache)
                if (basis.d, basis.n) != (d, n):
                    raise FileFormatError("cached transform is for different (d, n)")
            else:
                basis = schur.build_schur_transform(d, n)
                if ns.schur_cache:
                    save_schur_cache(basis, ns.schur_cache)
            verdict = testers.test_perminv(box, basis, cfg)
        elif ns.property == "finite-set":
            if not ns.set:
                raise ValueError("finite-set test needs at least one --set member")
            members = testers.FiniteSetSpec.from_members(
                [load_measurement(p)[0] for p in ns.set]
            )
            verdict = testers.test_finite_set(box, members, cfg)
        else:  # pragma: no cover - argparse restricts choices
            raise ValueError(f"unknown property {ns.property}")
    except (FileFormatError, QmtestError, ValueError) as exc:
        report["error"] = f"{type(exc).__name__}: {exc}"
        print(emit_report(report), end="")
        return 2
    report["verdict"] = _verdict_payload(verdict)
    print(emit_report(report), end="")
    return 0 if verdict.accepted else 1


def cmd_estimate(ns, argv, started) -> int:
    seed = _default_seed(ns.seed)
    report = _base_report(argv, seed, started)
    try:
        M, _, _, _ = load_measurement(ns.path_a)
        N, _, _, _ = load_measurement(ns.path_b)
        if M.dim != N.dim:
            raise DimensionMismatch("measurements live on different dimensions")
        k = ns.k if ns.k is not None else max(len(M), len(N))
        cfg = _config_from_flags(ns, seed)
        box_m = BlackBox(M, seed=seed)
        box_n = BlackBox(N, seed=seed + 1)
        if ns.identity:
            verdict = testers.test_identity(box_m, box_n, k, cfg)
            report["verdict"] = _verdict_payload(verdict)
            report["verdict"]["meaning"] = "accept=same, reject=different"
            print(emit_report(report), end="")
            return 0 if verdict.accepted else 1
        est = testers.estimate_distance(box_m, box_n, k, cfg)
        exact = metric.delta_measurement(M, N)
        report["estimate"] = {
            "delta_hat": est.delta_hat,
            "exact_delta": exact.delta,
            "query_count": est.query_count,
            "params": est.params,
        }
    except (FileFormatError, QmtestError, ValueError) as exc:
        report["error"] = f"{type(exc).__name__}: {exc}"
        print(emit_report(report), end="")
        return 2
    print(emit_report(report), end="")
    return 0


def make_far_projective_fixture(n: int, seed: int = 3):
    """Rotated two-outcome projective measurement with a brute-force certificate.

    Rotates the computational +/- projector pair of the first label by a
    seeded random unitary and records the scan over the whole projector-pair
    family; the scan minimum is the certified distance.
    """
    D = 2**n
    rng = np.random.default_rng(seed)
    base = pauli.stabilizer_measurement((1,) + (0,) * (n - 1), (0,) * n)
    U = random_unitary(D, rng)
    meas = validate_measurement([U @ op @ U.conj().T for op in base.operators])
    scan = metric.distance_to_stabilizer_family(meas)
    return meas, scan


def cmd_fixtures(ns, argv, started) -> int:
    report = _base_report(argv, ns.seed, started)
    out_dir = Path(ns.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n, d = ns.n, ns.d
    written = []
    try:
        if ns.kind == "stabilizer":
            for idx in range(1, 4**n):
                label = pauli.label_from_index(idx, 2, n)
                meas = pauli.stabilizer_measurement(label.x, label.z)
                name = f"stabilizer_n{n}_x{''.join(map(str, label.x))}_z{''.join(map(str, label.z))}.json"
                save_measurement(out_dir / name, meas, 2, n,
                                 {"kind": "stabilizer", "x": label.x, "z": label.z})
                written.append(name)
        elif ns.kind == "far-stabilizer":
            meas, scan = make_far_projective_fixture(n, ns.seed)
            name = f"far_stabilizer_n{n}_seed{ns.seed}.json"
            save_measurement(out_dir / name, meas, 2, n, {
                "kind": "far-stabilizer",
                "certified_delta": scan.best_delta,
                "nearest_label": scan.best_label,
                "swapped_pairing_delta": scan.swapped_delta,
            })
            written.append(name)
        elif ns.kind == "klocal":
            eye_rest = np.eye(2 ** (n - 1))
            ops = [np.kron(np.diag([1.0, 0.0]).astype(complex), eye_rest),
                   np.kron(np.diag([0.0, 1.0]).astype(complex), eye_rest)]
            meas = validate_measurement(ops)
            name = f"local1_n{n}.json"
            save_measurement(out_dir / name, meas, 2, n,
                             {"kind": "klocal", "support": {1}})
            written.append(name)
        elif ns.kind == "perminv":
            basis = schur.build_schur_transform(d, n)
            meas = schur.isotypic_projectors(basis)
            name = f"isotypic_d{d}_n{n}.json"
            save_measurement(out_dir / name, meas, d, n,
                             {"kind": "perminv", "blocks": list(basis.shapes)})
            written.append(name)
        elif ns.kind == "compbasis":
            D = d**n
            ops = [np.diag((np.arange(D) == i).astype(complex)) for i in range(D)]
            meas = validate_measurement(ops)
            name = f"compbasis_d{d}_n{n}.json"
            save_measurement(out_dir / name, meas, d, n, {"kind": "compbasis"})
            written.append(name)
        else:  # pragma: no cover
            raise ValueError(f"unknown fixture kind {ns.kind}")
    except (QmtestError, ValueError) as exc:
        report["error"] = f"{type(exc).__name__}: {exc}"
        print(emit_report(report), end="")
        return 2
    report["written"] = written
    report["out_dir"] = str(out_dir)
    print(emit_report(report), end="")
    return 0


def cmd_schur(ns, argv, started) -> int:
    report = _base_report(argv, None, started)
    try:
        if ns.d**ns.n > schur.MAX_DIM or ns.n > schur.MAX_SITES:
            raise ValueError(
                f"d^n={ns.d ** ns.n} exceeds the cap {schur.MAX_DIM} (n <= {schur.MAX_SITES})"
            )
        basis = schur.build_schur_transform(ns.d, ns.n)
        residuals = schur.verify_schur_basis(basis)
        save_schur_cache(basis, ns.out)
    except (QmtestError, ValueError) as exc:
        report["error"] = f"{type(exc).__name__}: {exc}"
        print(emit_report(report), end="")
        return 2
    report["params"] = {"d": ns.d, "n": ns.n, "out": str(ns.out)}
    report["residuals"] = residuals
    report["blocks"] = {
        str(shape): {"w": basis.blocks[shape][1], "v": basis.blocks[shape][2]}
        for shape in basis.shapes
    }
    print(emit_report(report), end="")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qmtest",
        description="Simulate and property-test finite-dimensional quantum measurements.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a measurement file's completeness")
    p.add_argument("path")
    p.add_argument("--tol", type=float, default=DEFAULT_COMPLETENESS_TOL)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("distance", help="exact distance between two measurement files")
    p.add_argument("path_a")
    p.add_argument("path_b")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("test", help="run a property tester against a measurement file")
    p.add_argument("property", choices=["stabilizer", "klocal", "perminv", "finite-set"])
    p.add_argument("path")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--set", action="append", default=[],
                   help="finite-set member file (repeatable)")
    p.add_argument("--scale", type=float, default=1.0,
                   help="multiplier on the sample-size constants")
    p.add_argument("--mode", choices=["per-trial", "aggregate"], default="aggregate")
    p.add_argument("--schur-cache", default=None)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("estimate", help="estimate the distance between two black boxes")
    p.add_argument("path_a")
    p.add_argument("path_b")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--mode", choices=["per-trial", "aggregate"], default="aggregate")
    p.add_argument("--identity", action="store_true",
                   help="same-or-far decision at the given epsilon")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("fixtures", help="emit canonical measurement fixtures")
    p.add_argument("kind", choices=["stabilizer", "far-stabilizer", "klocal",
                                    "perminv", "compbasis"])
    p.add_argument("out_dir")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--seed", type=int, default=3)
    p.set_defaults(func=cmd_fixtures)

    p = sub.add_parser("schur", help="build, verify, and cache a Schur transform")
    p.add_argument("d", type=int)
    p.add_argument("n", type=int)
    p.add_argument("out")
    p.set_defaults(func=cmd_schur)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    ns = parser.parse_args(argv)
    started = time.monotonic()
    return ns.func(ns, ["qmtest"] + argv, started)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
