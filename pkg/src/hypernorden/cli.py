"""Batch runner: scenario file in, JSON report and exit code out.

Exit codes: 0 every requested check holds, 1 at least one fails,
2 something is indeterminate and nothing fails, 3 the scenario is
invalid, 4 the engine raised an error at a sample point.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__, catalog, exprlang, hypercomplex, manifold, submanifold
from .errors import GeometryError
from .policy import DEFAULT_BOX, DEFAULT_POINTS, Status, Thresholds, halton_points

CHECKS = (
    "structure",
    "integrability",
    "classify",
    "lee",
    "holomorphy",
    "theorem31",
    "lee-restriction",
    "umbilicity",
    "product-relations",
)
NEEDS_IMMERSION = {"holomorphy", "theorem31", "lee-restriction", "umbilicity"}

EXIT_OK, EXIT_FAIL, EXIT_INDETERMINATE, EXIT_CONFIG, EXIT_ENGINE = 0, 1, 2, 3, 4


class ScenarioError(Exception):
    """Invalid scenario; ``field`` names the offending key path."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class CheckError(Exception):
    def __init__(self, check: str, point, err: Exception):
        super().__init__(f"{check}: {type(err).__name__} at point {point}: {err}")
        self.check = check
        self.point = point
        self.err = err


class Scenario:
    """A parsed and validated scenario table."""

    def __init__(self, table: dict, points: int | None = None, box: float | None = None, hold=None, fail=None):
        self.table = table
        checks = table.get("checks")
        if not isinstance(checks, list) or not checks:
            raise ScenarioError("checks", "expected a non-empty list of check names")
        for c in checks:
            if c not in CHECKS:
                raise ScenarioError("checks", f"unknown check {c!r}; known: {', '.join(CHECKS)}")
        self.checks = list(checks)

        sampling = table.get("sampling", {})
        self.points = int(points if points is not None else sampling.get("points", DEFAULT_POINTS))
        self.box = float(box if box is not None else sampling.get("box", DEFAULT_BOX))
        if self.points < 1:
            raise ScenarioError("sampling.points", "must be positive")
        if self.box <= 0:
            raise ScenarioError("sampling.box", "must be positive")

        th = table.get("thresholds", {})
        try:
            self.thresholds = Thresholds(
                float(hold if hold is not None else th.get("hold", 1e-7)),
                float(fail if fail is not None else th.get("fail", 1e-4)),
            )
        except ValueError as err:
            raise ScenarioError("thresholds", str(err)) from None

        self.expect = dict(table.get("expect", {}))
        self.factors = None
        self.ambient = self._ambient(table.get("ambient"), "ambient")
        conf = table.get("conformal")
        if conf is not None:
            u = _require(conf, "u", "conformal", str)
            self.ambient = hypercomplex.conformal_transform(self.ambient, _parse(u, self.ambient.dim, "conformal.u"))
        self.immersion = None
        if "immersion" in table:
            self.immersion = self._immersion(table["immersion"])
        missing = NEEDS_IMMERSION.intersection(self.checks)
        if missing and self.immersion is None:
            raise ScenarioError("immersion", f"checks {sorted(missing)} need an [immersion] table")
        if "product-relations" in self.checks and self.factors is None:
            raise ScenarioError("ambient.catalog", "product-relations needs a product ambient")

    def _ambient(self, table, where: str) -> manifold.ChartManifold:
        if not isinstance(table, dict):
            raise ScenarioError(where, "missing ambient table")
        kind = table.get("catalog", "inline")
        if kind == "flat_k":
            return catalog.flat_K(_require(table, "n", where, int))
        if kind == "conformal_w":
            n = _require(table, "n", where, int)
            return catalog.conformal_W(n, _parse(_require(table, "u", where, str), 4 * n, f"{where}.u"))
        if kind == "product":
            first = self._ambient(table.get("first"), f"{where}.first")
            second = self._ambient(table.get("second"), f"{where}.second")
            Mbar, i1, i2 = catalog.product(first, second, table.get("section", 0.0), table.get("section2", 0.0))
            if where == "ambient":
                self.factors = (first, second, i1, i2)
            return Mbar
        if kind == "inline":
            return _inline_manifold(table, where)
        raise ScenarioError(f"{where}.catalog", f"unknown catalog entry {kind!r}")

    def _immersion(self, table) -> submanifold.Immersion:
        where = "immersion"
        if not isinstance(table, dict):
            raise ScenarioError(where, "expected a table")
        kind = table.get("catalog", "inline")
        if kind == "coordinate_submanifold":
            m = _require(table, "m", where, int)
            n = self.ambient.n
            try:
                return catalog.coordinate_immersion(m, n, self.ambient, table.get("section", 0.0))
            except GeometryError as err:
                raise ScenarioError(where, str(err)) from None
        if kind == "factor":
            if self.factors is None:
                raise ScenarioError(where, "factor immersions need a product ambient")
            which = _require(table, "which", where, int)
            if which not in (1, 2):
                raise ScenarioError(f"{where}.which", "must be 1 or 2")
            return self.factors[1 + which]
        if kind == "inline":
            m = _require(table, "m", where, int)
            comps = _require(table, "components", where, list)
            if len(comps) != self.ambient.dim:
                raise ScenarioError(f"{where}.components", f"need {self.ambient.dim} expressions")
            trees = tuple(_parse(c, 4 * m, f"{where}.components[{i}]") for i, c in enumerate(comps))
            try:
                return submanifold.Immersion(self.ambient, m, trees, "inline immersion")
            except GeometryError as err:
                raise ScenarioError(where, str(err)) from None
        raise ScenarioError(f"{where}.catalog", f"unknown catalog entry {kind!r}")

    def ambient_points(self) -> np.ndarray:
        return halton_points(self.ambient.dim, self.points, self.box)

    def source_points(self) -> np.ndarray:
        return halton_points(self.immersion.dim, self.points, self.box)


def _require(table: dict, key: str, where: str, typ):
    if key not in table:
        raise ScenarioError(f"{where}.{key}", "missing")
    value = table[key]
    if typ is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise ScenarioError(f"{where}.{key}", "expected an integer")
    if typ is not int and not isinstance(value, typ):
        raise ScenarioError(f"{where}.{key}", f"expected {typ.__name__}")
    return value


def _parse(text, dim: int, where: str):
    if not isinstance(text, str):
        raise ScenarioError(where, "expected an expression string")
    try:
        return exprlang.parse(text, dim)
    except GeometryError as err:
        raise ScenarioError(where, str(err)) from None


def _inline_manifold(table: dict, where: str) -> manifold.ChartManifold:
    dim = _require(table, "dim", where, int)
    if dim < 4 or dim % 4:
        raise ScenarioError(f"{where}.dim", "must be a positive multiple of 4")

    def grid(key):
        rows = _require(table, key, where, list)
        if len(rows) != dim or any(not isinstance(r, list) or len(r) != dim for r in rows):
            raise ScenarioError(f"{where}.{key}", f"expected a {dim}x{dim} table of expressions")
        return [[_parse(str(e), dim, f"{where}.{key}[{i}][{j}]") for j, e in enumerate(r)] for i, r in enumerate(rows)]

    def closure(trees):
        def fn(x):
            return [[exprlang.evaluate(t, x) for t in row] for row in trees]

        return fn

    return manifold.ChartManifold(
        dim,
        closure(grid("metric")),
        tuple(closure(grid(k)) for k in ("J1", "J2", "J3")),
        table.get("label", "inline"),
    )


def _summary(values) -> dict:
    values = [float(v) for v in values]
    return {"max": max(values), "mean": float(np.mean(values))}


def _worst(statuses) -> Status:
    statuses = list(statuses)
    if Status.FAILS in statuses:
        return Status.FAILS
    if Status.INDETERMINATE in statuses:
        return Status.INDETERMINATE
    return Status.HOLDS


def _each(check: str, fn, points):
    out = []
    for p in points:
        try:
            out.append(fn(p))
        except GeometryError as err:
            raise CheckError(check, [float(v) for v in p], err) from err
    return out


def _verdict_status(verdict: str, good: set, expected: str | None, indeterminate: str) -> Status:
    if verdict == indeterminate:
        return Status.INDETERMINATE
    if expected is not None:
        return Status.HOLDS if verdict == expected else Status.FAILS
    return Status.HOLDS if verdict in good else Status.FAILS


def run_check(sc: Scenario, name: str) -> dict:
    th = sc.thresholds
    M = sc.ambient
    out = {"name": name}
    if name == "structure":
        rows = _each(name, lambda x: hypercomplex.structure_residuals(M, [x]), sc.ambient_points())
        res = {
            "quaternionic": _summary(r.quaternionic for r in rows),
            "compat": _summary(r.compat for r in rows),
            "assoc_forms": _summary(r.assoc_forms for r in rows),
        }
        ok = all(r.assoc_forms_ok for r in rows)
        status = _worst([th.status(res["quaternionic"]["max"]), th.status(res["compat"]["max"])])
        if not ok:
            status = Status.FAILS
        out.update(status=status.value, residuals=res, assoc_forms_ok=ok)
    elif name == "integrability":
        rows = _each(
            name, lambda x: [manifold.nijenhuis_max(M, x, a) for a in (1, 2, 3)], sc.ambient_points()
        )
        res = {f"N{a}": _summary(r[a - 1] for r in rows) for a in (1, 2, 3)}
        out.update(status=_worst(th.status(v["max"]) for v in res.values()).value, residuals=res)
    elif name in ("classify", "lee"):
        pts = sc.ambient_points()
        rows = _each(name, lambda x: hypercomplex.point_class_residuals(M, x), pts)
        r_K = max(r.r_K for r in rows)
        r_w = max(max(r.r_W1, *r.r_W, r.r_lee) for r in rows)
        verdict = hypercomplex.classify_residuals(r_K, r_w, th).value
        if name == "classify":
            res = {
                "r_K": _summary(r.r_K for r in rows),
                "r_W1": _summary(r.r_W1 for r in rows),
                "r_W2": _summary(r.r_W[0] for r in rows),
                "r_W3": _summary(r.r_W[1] for r in rows),
                "r_lee": _summary(r.r_lee for r in rows),
            }
            status = _verdict_status(verdict, {"K", "W"}, sc.expect.get("classify"), "Indeterminate")
        else:
            res = {
                "lee_relation": _summary(r.r_lee for r in rows),
                "lee_vector_relation": _summary(r.r_p for r in rows),
                "theta_size": _summary(r.theta_size for r in rows),
            }
            status = _worst([th.status(res["lee_relation"]["max"]), th.status(res["lee_vector_relation"]["max"])])
        out.update(status=status.value, verdict=verdict, residuals=res)
    elif name == "holomorphy":
        imm = sc.immersion
        vals = _each(name, lambda s: submanifold.holomorphy_residual(imm, s), sc.source_points())
        out.update(status=th.status(max(vals)).value, residuals={"holomorphy": _summary(vals)})
    elif name == "theorem31":
        imm = sc.immersion
        rows = _each(name, lambda s: submanifold.holomorphic_identity_residuals(imm, s, th), sc.source_points())
        res = {k: _summary(r.residuals[k] for r in rows) for k in submanifold.IDENTITY_NAMES}
        ambient_ok = all(r.ambient_is_W for r in rows)
        status = _worst(th.status(v["max"]) for v in res.values())
        out.update(status=status.value, residuals=res, ambient_is_W=ambient_ok)
    elif name == "lee-restriction":
        imm = sc.immersion
        pts = sc.source_points()
        _each(name, lambda s: submanifold.frame_at(imm, s), pts)
        rep = submanifold.lee_restriction_check(imm, pts, th)
        res = {
            "lee_restriction": _summary(r[0] for r in rep.per_point),
            "theta_bar_on_TM": _summary(r[1] for r in rep.per_point),
            "theta_induced": _summary(r[2] for r in rep.per_point),
        }
        status = th.status(rep.residual)
        verdict = rep.induced_verdict.value
        expected = sc.expect.get("induced")
        if expected is not None and status is Status.HOLDS and verdict != expected:
            status = Status.FAILS
        out.update(status=status.value, verdict=verdict, residuals=res)
    elif name == "umbilicity":
        imm = sc.immersion
        pts = sc.source_points()
        _each(name, lambda s: submanifold.frame_at(imm, s), pts)
        rep = submanifold.umbilicity_classify(imm, pts, th)
        verdict = rep.verdict.value
        status = _verdict_status(
            verdict, {"TotallyGeodesic", "TotallyUmbilical"}, sc.expect.get("umbilicity"), "Indeterminate"
        )
        if not rep.consistent and status is Status.HOLDS:
            status = Status.FAILS
        out.update(
            status=status.value,
            verdict=verdict,
            lee_prediction=None if rep.expected is None else rep.expected.value,
            consistent=rep.consistent,
            residuals={
                "h_size": _summary(r[0] for r in rep.per_point),
                "umbilic": _summary(r[1] for r in rep.per_point),
                "mean_curvature": _summary(r[2] for r in rep.per_point),
            },
            theta_on_normal=list(rep.theta_on_normal),
        )
    elif name == "product-relations":
        first, second, _, _ = sc.factors
        rows = _each(
            name, lambda x: catalog.verify_product_relations(M, first, second, [x]), sc.ambient_points()
        )
        res = {k: _summary(r[k] for r in rows) for k in ("r_F", "r_theta")}
        res["r_primed"] = _summary(r["r_primed"] for r in rows)
        out.update(status=_worst(th.status(res[k]["max"]) for k in ("r_F", "r_theta")).value, residuals=res)
    return out


def build_report(sc: Scenario) -> tuple[dict, int]:
    report = {
        "engine": {"name": "hypernorden", "version": __version__},
        "scenario": sc.table,
        "sampling": {"points": sc.points, "box": sc.box, "sequence": "halton"},
        "thresholds": {"hold": sc.thresholds.hold, "fail": sc.thresholds.fail},
        "verdict_scope": "local: holds at the sampled points only",
        "checks": [],
    }
    code = EXIT_OK
    for name in sc.checks:
        try:
            result = run_check(sc, name)
        except CheckError as err:
            report["checks"].append(
                {"name": name, "status": "error", "error": str(err.err), "error_type": type(err.err).__name__, "point": err.point}
            )
            code = max(code, EXIT_ENGINE)
            continue
        report["checks"].append(result)
        if result["status"] == Status.FAILS.value and code < EXIT_CONFIG:
            code = EXIT_FAIL
        elif result["status"] == Status.INDETERMINATE.value and code == EXIT_OK:
            code = EXIT_INDETERMINATE
    report["exit_code"] = code
    return report, code


def load_scenario(path, **overrides) -> Scenario:
    text = Path(path).read_text(encoding="utf-8")
    try:
        table = tomllib.loads(text)
    except tomllib.TOMLDecodeError as err:
        raise ScenarioError("<file>", str(err)) from None
    return Scenario(table, **overrides)


def render(report: dict) -> str:
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="hypernorden", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the checks of a scenario file")
    run.add_argument("scenario", help="path to a TOML scenario file")
    run.add_argument("--points", type=int, default=None, help=f"sample points (default {DEFAULT_POINTS})")
    run.add_argument("--box", type=float, default=None, help=f"sampling half-width (default {DEFAULT_BOX})")
    run.add_argument("--tol-hold", type=float, default=None)
    run.add_argument("--tol-fail", type=float, default=None)
    run.add_argument("--out", default=None, help="write the report here instead of stdout")
    run.add_argument("--json", action="store_true", default=True, help="JSON report (the only format)")
    sub.add_parser("checks", help="list the known check names")
    args = parser.parse_args(argv)

    if args.command == "checks":
        print("\n".join(CHECKS))
        return EXIT_OK

    try:
        sc = load_scenario(args.scenario, points=args.points, box=args.box, hold=args.tol_hold, fail=args.tol_fail)
    except (ScenarioError, OSError) as err:
        print(f"hypernorden: invalid scenario: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except GeometryError as err:
        print(f"hypernorden: invalid scenario: {err}", file=sys.stderr)
        return EXIT_CONFIG

    report, code = build_report(sc)
    text = render(report)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    for check in report["checks"]:
        if check["status"] == "error":
            print(f"hypernorden: {check['name']}: {check['error_type']} at {check['point']}: {check['error']}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
