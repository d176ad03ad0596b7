"""Command line front end.

    twistfock COMMAND --config run.json [--out report.json] [--format json|text] ...

Config files are JSON objects::

    {
      "subspace": {"tracial": 2}
                | {"eigenvalues": [2.0, 0.5], "bar": [2, 1], "basis_mode": "real-orthonormal"}
                | {"delta": M, "J": M, "basis_mode": ...},
      "twist":    {"kind": "q-flip", "params": {"q": 0.3}}
                | {"kind": "raw", "matrix": M} | {"kind": "raw", "matrix_file": "T.json"},
      "settings": {"tolerance": 1e-10, "size_cap": 67108864, "truncation": 4,
                   "series_order": 3, "R": 2.0, "C_R": null, "positivity_level": 6},
      "input":    {"words": [[1, 2], [1, 1]], "tensor": {"n": 2, "data": [...]},
                   "index": 1, "eigenvalues": [...], "mode": "exact", "q": 0.0,
                   "multiplicities": [...]}
    }

Complex numbers are [re, im] pairs, matrices are lists of rows, generator
and involution labels are 1-based.  A matrix-algebra twist without a
"subspace" entry builds its own.

Exit codes: 0 success, 2 validation failure (or refusal to run downstream
of a twist that is not braided, crossing symmetric and compatible, unless
--force), 1 hard error.
"""
import argparse
import json
import sys
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import __version__
from .conjugate import (conjugate_variables, dq_wick, free_dq, omega, potential, quasi_free,
                        DEFAULT_SERIES_ORDER)
from .errors import ConfigParse, TwistFockError
from .fock import inverse_kernel_norm, kernel_matrices, vacuum_moment
from .hilbert import (DEFAULT_TOL, REAL_ORTHONORMAL, COMPLEX_LINEAR, build_standard_subspace,
                      classify_factor_type, noninjectivity_criterion, tracial_subspace)
from .twist import DEFAULT_POSITIVITY_LEVEL, DEFAULT_SIZE_CAP, make_twist, validate_twist
from .wick import wick_polynomial, wick_recursive

COMMANDS = ("validate", "gram", "wick", "moments", "dq", "conjugate", "fisher", "type",
            "noninjectivity", "transport")
# commands that never touch the twist
SUBSPACE_ONLY = ("type",)

EXIT_OK, EXIT_ERROR, EXIT_VALIDATION = 0, 1, 2


# parsing

def _complex(x, where):
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return complex(x)
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(isinstance(t, (int, float)) for t in x):
        return complex(x[0], x[1])
    raise ConfigParse(f"{where}: expected a number or [re, im], got {x!r}")


def _vector(data, where):
    if not isinstance(data, list):
        raise ConfigParse(f"{where}: expected a list")
    return np.array([_complex(x, where) for x in data], dtype=np.complex128)


def _matrix(rows, where):
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ConfigParse(f"{where}: expected a list of rows")
    if len({len(r) for r in rows}) != 1:
        raise ConfigParse(f"{where}: ragged rows")
    return np.array([[_complex(x, where) for x in r] for r in rows], dtype=np.complex128)


def _plain(obj):
    """JSON-ready copy: complex -> [re, im], arrays -> lists, tuples -> lists."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    return obj


@dataclass
class RunConfig:
    subspace: dict = None
    twist: dict = None
    tolerance: float = DEFAULT_TOL
    size_cap: int = DEFAULT_SIZE_CAP
    truncation: int = 4
    series_order: int = DEFAULT_SERIES_ORDER
    R: float = 2.0
    C_R: float = None
    positivity_level: int = DEFAULT_POSITIVITY_LEVEL
    input: dict = field(default_factory=dict)
    base_dir: str = "."

    SETTINGS = ("tolerance", "size_cap", "truncation", "series_order", "R", "C_R", "positivity_level")

    @classmethod
    def from_dict(cls, data, base_dir="."):
        if not isinstance(data, dict):
            raise ConfigParse("config must be a JSON object")
        unknown = set(data) - {"subspace", "twist", "settings", "input"}
        if unknown:
            raise ConfigParse(f"unknown top-level keys {sorted(unknown)}")
        settings = data.get("settings", {}) or {}
        bad = set(settings) - set(cls.SETTINGS)
        if bad:
            raise ConfigParse(f"unknown settings {sorted(bad)}")
        cfg = cls(subspace=data.get("subspace"), twist=data.get("twist"),
                  input=dict(data.get("input", {}) or {}), base_dir=str(base_dir),
                  **{k: settings[k] for k in cls.SETTINGS if k in settings})
        cfg.check()
        return cfg

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigParse(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data, path.parent)

    def check(self):
        for name in ("tolerance", "R"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not v > 0:
                raise ConfigParse(f"{name} must be a positive number")
        for name in ("size_cap", "truncation", "series_order", "positivity_level"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v <= 0:
                raise ConfigParse(f"{name} must be a positive integer")
        if self.C_R is not None and not (isinstance(self.C_R, (int, float)) and self.C_R > 0):
            raise ConfigParse("C_R must be a positive number")
        if self.twist is not None:
            if not isinstance(self.twist, dict) or "kind" not in self.twist:
                raise ConfigParse("twist needs a 'kind'")
            specs = [k for k in ("params", "matrix", "matrix_file") if k in self.twist]
            if len(specs) != 1:
                raise ConfigParse("twist needs exactly one of params, matrix, matrix_file")

    def settings(self):
        return {k: getattr(self, k) for k in self.SETTINGS}

    def echo(self):
        return _plain({"subspace": self.subspace, "twist": self.twist, "settings": self.settings(),
                       "input": self.input})


def build_subspace(cfg):
    spec = cfg.subspace
    if spec is None:
        if cfg.twist is not None and cfg.twist.get("kind") == "matrix-algebra":
            return None
        raise ConfigParse("config has no subspace")
    if not isinstance(spec, dict):
        raise ConfigParse("subspace must be an object")
    mode = spec.get("basis_mode", COMPLEX_LINEAR)
    if mode not in (COMPLEX_LINEAR, REAL_ORTHONORMAL):
        raise ConfigParse(f"unknown basis_mode {mode!r}")
    if "tracial" in spec:
        return tracial_subspace(int(spec["tracial"]), basis_mode=mode)
    if "eigenvalues" in spec:
        bar = spec.get("bar")
        bar = None if bar is None else [int(b) - 1 for b in bar]
        lam = [float(x) for x in spec["eigenvalues"]]
        return build_standard_subspace(eigenvalues=lam, bar=bar, basis_mode=mode, tol=cfg.tolerance)
    if "delta" in spec and "J" in spec:
        from .hilbert import AntilinearMap
        return build_standard_subspace(delta=_matrix(spec["delta"], "subspace.delta"),
                                       J=AntilinearMap(_matrix(spec["J"], "subspace.J")),
                                       basis_mode=mode, tol=cfg.tolerance)
    raise ConfigParse("subspace needs 'tracial', 'eigenvalues' or 'delta' and 'J'")


def _twist_params(kind, params):
    params = dict(params)
    if kind == "q_ij":
        params["q"] = _matrix(params.get("q"), "twist.params.q")
    if kind == "raw" and "matrix" in params:
        params["matrix"] = _matrix(params["matrix"], "twist.params.matrix")
    return params


def build_twist(cfg, H):
    spec = cfg.twist
    if spec is None:
        raise ConfigParse("config has no twist")
    kind = spec["kind"]
    if "matrix_file" in spec:
        path = Path(cfg.base_dir) / spec["matrix_file"]
        try:
            if path.suffix == ".npy":
                M = np.load(path)
            else:
                M = _matrix(json.loads(path.read_text()), str(path))
        except (OSError, ValueError) as exc:
            raise ConfigParse(f"cannot read twist matrix {path}: {exc}") from exc
        return make_twist("raw", {"matrix": M}, H, cfg.tolerance)
    if "matrix" in spec:
        return make_twist("raw", {"matrix": _matrix(spec["matrix"], "twist.matrix")}, H, cfg.tolerance)
    if not isinstance(spec["params"], dict):
        raise ConfigParse("twist.params must be an object")
    return make_twist(kind, _twist_params(kind, spec["params"]), H, cfg.tolerance)


def _input_tensors(cfg, H):
    """(label, n, vector) for every 'words' entry and the optional 'tensor'."""
    inp = cfg.input
    out = []
    for w in inp.get("words", []):
        word = [int(i) - 1 for i in w]
        if any(not 0 <= i < H.d for i in word):
            raise ConfigParse(f"word {w} has labels outside 1..{H.d}")
        e = np.ones(1, dtype=np.complex128)
        for i in word:
            e = np.kron(e, H.basis[:, i])
        out.append(("x" + ".".join(str(i + 1) for i in word) if word else "1", len(word), e))
    if "tensor" in inp:
        t = inp["tensor"]
        n = int(t.get("n", -1))
        v = _vector(t.get("data"), "input.tensor.data")
        if n < 0 or v.size != H.d ** n:
            raise ConfigParse(f"input.tensor needs d^n = {H.d}^{n} entries")
        out.append(("tensor", n, v))
    if not out:
        raise ConfigParse("command needs input.words or input.tensor")
    return out


def _index(cfg, H):
    i = int(cfg.input.get("index", 1))
    if not 1 <= i <= H.d:
        raise ConfigParse(f"input.index must lie in 1..{H.d}")
    return i - 1


# report

@dataclass
class Report:
    command: str
    inputs: dict
    results: dict = field(default_factory=dict)
    validation: dict = None
    exit_code: int = EXIT_OK
    message: str = ""
    version: str = __version__
    timings: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def summary(self):
        lines = [f"{self.command}: exit {self.exit_code}" + (f" ({self.message})" if self.message else "")]
        if self.validation:
            flags = [f"{k}={'pass' if v['pass'] else 'FAIL'}" for k, v in self.validation.items()
                     if isinstance(v, dict) and "pass" in v]
            lines.append("validation: " + " ".join(flags))
        for k, v in self.results.items():
            if isinstance(v, (int, float, str, bool)) or v is None:
                lines.append(f"{k}: {v}")
            elif isinstance(v, list) and len(v) <= 8 and all(not isinstance(x, (list, dict)) for x in v):
                lines.append(f"{k}: {v}")
            else:
                lines.append(f"{k}: <{type(v).__name__} of {len(v)}>")
        return "\n".join(lines)


# commands

def _cmd_validate(cfg, H, T, rep):
    rep.results["subspace"] = H.to_dict()
    rep.results["twist"] = T.to_dict()
    failed = T.report.failed()
    rep.results["failed"] = failed
    if failed:
        rep.exit_code = EXIT_VALIDATION
        rep.message = "failed: " + ", ".join(failed)


def _cmd_gram(cfg, H, T, rep):
    levels = []
    w = omega(T.q) if T.q < 1 else None
    for n in range(1, cfg.truncation + 1):
        P = kernel_matrices(T, n, cfg.size_cap)[1]
        ev = np.linalg.eigvalsh(P)
        row = {"level": n, "min_eigenvalue": float(ev[0]), "max_eigenvalue": float(ev[-1])}
        if ev[0] > cfg.tolerance:
            row["inverse_norm"] = inverse_kernel_norm(T, n)
            if w is not None:
                row["omega_bound"] = w ** (-n)
        levels.append(row)
    rep.results.update({"levels": levels, "gram": H.gram, "pairing": H.pairing.reshape(H.d, H.d),
                        "s_norm": H.s_norm, "omega": w})
    if H.basis_mode == REAL_ORTHONORMAL:
        rep.results["quasi_free_matrix"] = H.quasi_free_matrix


def _cmd_wick(cfg, H, T, rep):
    out = []
    for label, n, v in _input_tensors(cfg, H):
        P = wick_polynomial(v, n, H, T)
        Q = wick_recursive(v, n, H, T)
        out.append({"input": label, "polynomial": P.to_list(),
                    "recursive_agreement": P.max_abs_difference(Q)})
    rep.results["wick"] = out


def _cmd_moments(cfg, H, T, rep):
    words = cfg.input.get("words")
    if not words:
        raise ConfigParse("moments needs input.words")
    out = []
    for w in words:
        word = [int(i) - 1 for i in w]
        out.append({"word": list(w), "moment": vacuum_moment(word, H, T)})
    rep.results["moments"] = out


def _cmd_dq(cfg, H, T, rep):
    i = _index(cfg, H)
    out = []
    for label, n, v in _input_tensors(cfg, H):
        B = dq_wick(v, n, i, H, T)
        F = free_dq(wick_polynomial(v, n, H, T), i).prune()
        out.append({"input": label, "vacuum_component": B.vacuum_component, "free_form": F.to_list(),
                    "blocks": {f"{l},{r}": blk for (l, r), blk in sorted(B.blocks.items())}})
    rep.results["index"] = i + 1
    rep.results["dq"] = out


def _conjugate(cfg, H, T, rep):
    res = conjugate_variables(H, T, cfg.series_order, cfg.tolerance)
    rep.results.update({"series_order": res.M, "q": res.q, "omega": res.omega,
                        "tail_bound": res.tail_bound, "tail_bounds": res.tail_bounds,
                        "refined_tail_bounds": res.refined_tail_bounds,
                        "fisher_value": res.fisher_value, "fisher_interval": res.fisher_interval,
                        "refined_fisher_upper": res.extras["refined_fisher_upper"]})
    return res


def _cmd_conjugate(cfg, H, T, rep):
    res = _conjugate(cfg, H, T, rep)
    rep.results["xi"] = [{"index": i + 1, "levels": {str(k): v.levels[k] for k in range(1, 2 * res.M + 2, 2)},
                          "level_norms": res.level_norms[i]} for i, v in enumerate(res.xi)]


def _cmd_fisher(cfg, H, T, rep):
    _conjugate(cfg, H, T, rep)


def _cmd_type(cfg, H, T, rep):
    inp = cfg.input
    lam = inp.get("eigenvalues")
    mode = inp.get("mode", "numerical")
    if mode not in ("numerical", "exact"):
        raise ConfigParse("input.mode must be 'numerical' or 'exact'")
    if lam is None:
        if H is None:
            raise ConfigParse("type needs input.eigenvalues or a subspace")
        lam = [float(x) for x in H.spectrum]
    ft = classify_factor_type(lam, mode=mode, tolerance=cfg.tolerance, base=inp.get("base"))
    rep.results["factor_type"] = ft.to_dict()
    rep.results["tag"] = str(ft)


def _cmd_noninjectivity(cfg, H, T, rep):
    inp = cfg.input
    spec = inp.get("eigenvalues")
    spec = [float(x) for x in H.spectrum] if spec is None else spec
    q = float(inp.get("q", T.q if T is not None else 0.0))
    res = noninjectivity_criterion(spec, q, inp.get("multiplicities"), cfg.tolerance)
    rep.results.update(res.to_dict())
    rep.results["q"] = q


def _cmd_transport(cfg, H, T, rep):
    qf = quasi_free(H, T, cfg.series_order, cfg.tolerance)
    pot = potential(H, T, cfg.series_order, cfg.R, cfg.C_R, cfg.tolerance, theta=qf.theta)
    rep.results.update(pot.to_dict())
    rep.results["theta_agreement"] = qf.agreement
    rep.results["series_order"] = cfg.series_order


HANDLERS = {
    "validate": _cmd_validate,
    "gram": _cmd_gram,
    "wick": _cmd_wick,
    "moments": _cmd_moments,
    "dq": _cmd_dq,
    "conjugate": _cmd_conjugate,
    "fisher": _cmd_fisher,
    "type": _cmd_type,
    "noninjectivity": _cmd_noninjectivity,
    "transport": _cmd_transport,
}


def run(command, cfg, force=False):
    """Execute one command; errors become a report with exit code 1."""
    if command not in HANDLERS:
        raise ConfigParse(f"unknown command {command!r}; choose from {', '.join(COMMANDS)}")
    rep = Report(command, cfg.echo())
    t0 = time.perf_counter()
    try:
        H = build_subspace(cfg)
        T = None
        if command not in SUBSPACE_ONLY and (cfg.twist is not None or command != "noninjectivity"):
            T = build_twist(cfg, H)
            H = T.subspace if H is None else H
            t1 = time.perf_counter()
            validate_twist(T, H, level=cfg.positivity_level, tol=cfg.tolerance)
            rep.timings["validation"] = time.perf_counter() - t1
            rep.validation = T.report.to_dict()
            if command != "validate" and not T.report.structural_ok and not force:
                rep.exit_code = EXIT_VALIDATION
                rep.message = ("twist is not braided, crossing symmetric and compatible ("
                               + ", ".join(T.report.failed()) + "); rerun with --force")
                return _finish(rep, t0)
        t1 = time.perf_counter()
        HANDLERS[command](cfg, H, T, rep)
        rep.timings["command"] = time.perf_counter() - t1
    except TwistFockError as exc:
        rep.exit_code = EXIT_ERROR
        rep.message = f"{command}: {type(exc).__name__}: {exc}"
    return _finish(rep, t0)


def _finish(rep, t0):
    rep.results = _plain(rep.results)
    rep.validation = _plain(rep.validation)
    rep.timings["total"] = time.perf_counter() - t0
    return rep


# entry point

def build_parser():
    p = argparse.ArgumentParser(prog="twistfock", description="Twisted Fock space computations.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", help="write the JSON report here")
    p.add_argument("--format", choices=("json", "text"), default="text", help="stdout format")
    p.add_argument("--truncation", type=int, help="Fock truncation N")
    p.add_argument("--series-order", type=int, help="conjugate series order M")
    p.add_argument("--tolerance", type=float)
    p.add_argument("--size-cap", type=int)
    p.add_argument("--R", type=float, dest="R")
    p.add_argument("--C-R", type=float, dest="C_R")
    p.add_argument("--force", action="store_true", help="run on twists that failed validation")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.load(args.config)
        for name in ("truncation", "series_order", "tolerance", "size_cap", "R", "C_R"):
            v = getattr(args, name)
            if v is not None:
                setattr(cfg, name, v)
        cfg.check()
        rep = run(args.command, cfg, force=args.force)
    except ConfigParse as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.out:
        Path(args.out).write_text(rep.to_json() + "\n")
    print(rep.to_json() if args.format == "json" else rep.summary())
    if rep.exit_code == EXIT_ERROR:
        print(f"error: {rep.message}", file=sys.stderr)
    return rep.exit_code


if __name__ == "__main__":
    sys.exit(main())
