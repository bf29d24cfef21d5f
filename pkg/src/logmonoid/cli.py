"""Command-line front end.

Exit codes: 0 ok, 1 selftest failure, 2 parse error, 3 budget exhaustion,
4 violated algorithm hypothesis (the message names the hypothesis).
All numeric output is exact rationals.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from fractions import Fraction

from . import log_connection as lc
from . import monoid_core as mc
from . import selftest as st
from . import weighted_series as ws
from .documents import (
    MonoidContext,
    load_json,
    parse_connection,
    parse_monoid,
    parse_radius,
    parse_sigma,
    render_rational,
)
from .errors import BudgetExceeded, HypothesisError, ParseError


@dataclass(frozen=True)
class RunConfig:
    prime: int = 5
    truncation: int = 12
    weight_bound: int = 10
    output_format: str = "text"

    def __post_init__(self):
        if self.prime < 2 or any(self.prime % q == 0 for q in range(2, int(self.prime ** 0.5) + 1)):
            raise ValueError(f"--prime must be a prime number, got {self.prime}")
        if self.truncation <= 0 or self.weight_bound <= 0:
            raise ValueError("bounds must be positive")
        if self.output_format not in ("json", "text"):
            raise ValueError("format must be json or text")


def _render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2)
    lines: list[str] = []

    def walk(obj, indent):
        pad = "  " * indent
        if isinstance(obj, dict):
            for k in sorted(obj):
                v = obj[k]
                if isinstance(v, (dict, list)):
                    lines.append(f"{pad}{k}:")
                    walk(v, indent + 1)
                else:
                    lines.append(f"{pad}{k}: {v}")
        elif isinstance(obj, list):
            for v in obj:
                if isinstance(v, (dict, list)):
                    lines.append(f"{pad}-")
                    walk(v, indent + 1)
                else:
                    lines.append(f"{pad}- {v}")

    walk(report, 0)
    return "\n".join(lines)


def _describe_element(ctx: MonoidContext, g) -> dict:
    return ctx.render_element(g)


def _describe_vector(v) -> list[str]:
    return [render_rational(x) for x in v]


def cmd_monoid_analyze(path: str, config: RunConfig) -> dict:
    ctx = parse_monoid(load_json(path))
    m = ctx.monoid
    faces = mc.faces(m)
    facets = mc.facets(m)
    sharp = mc.is_sharp(m)
    report = {
        "gp": {
            "free_rank": m.gp.free_rank,
            "torsion": list(m.gp.torsion_invariants),
        },
        "generators": [_describe_element(ctx, g) for g in m.generators],
        "weighting": list(ctx.weighting.values),
        "units": [_describe_element(ctx, u) for u in mc.units(m)],
        "sharp": sharp,
        "faces": [sorted(f.generator_indices) for f in faces],
        "facets": [sorted(f.generator_indices) for f in facets],
        "semi_saturated": mc.is_semi_saturated(m),
    }
    if sharp:
        verdict = mc.is_saturated_bounded(m, config.weight_bound)
        report["saturated"] = "unknown" if verdict is None else verdict
    else:
        report["saturated"] = "not-applicable (monoid has units)"
    return report


def _load_sigma(ctx: MonoidContext, path):
    if path is None:
        raise ParseError("this subcommand needs --sigma")
    return parse_sigma(ctx, load_json(path))


def cmd_connection(args, config: RunConfig) -> dict:
    ctx, module = parse_connection(load_json(args.input))
    sub = args.subcommand
    if sub == "exponents":
        dec = lc.exponents(module)
        return {
            "integrable": lc.validate_integrability(module),
            "exponents": [_describe_vector(xi) for xi in dec.exponents],
            "phi_eigentuples": [_describe_vector(t) for t in dec.eigentuples],
            "multiplicities": list(dec.multiplicities),
        }
    if sub == "shear":
        result = lc.shear(module, p=config.prime)
        gauge_terms = []
        for key in sorted(lc.smat_keys(result.gauge)):
            gauge_terms.append(
                {
                    "m": _describe_element(ctx, key),
                    "entries": [
                        [render_rational(x.coeff(key)) for x in row]
                        for row in result.gauge
                    ],
                }
            )
        bounds = [
            {
                "m": _describe_element(ctx, r.key),
                "weight": r.weight,
                "log_norm": "-inf" if r.actual is None else render_rational(r.actual),
                "log_bound": render_rational(r.bound),
                "ok": r.ok,
            }
            for r in result.bound_report
        ]
        return {
            "constant_model": [
                [[render_rational(x) for x in row] for row in a]
                for a in result.constant_model
            ],
            "gauge_terms": gauge_terms,
            "bound_report": bounds,
            "bound_violations": sum(0 if r.ok else 1 for r in result.bound_report),
            "log_C": render_rational(result.norm_constant_log),
            "nilpotency_e": result.nilpotency_exponent,
        }
    if sub == "unipotent":
        sigma = _load_sigma(ctx, args.sigma)
        faces = mc.faces(ctx.monoid)
        chosen: list
        if args.all_faces:
            chosen = list(faces)
        else:
            if args.face is None or not 0 <= args.face < len(faces):
                raise ParseError(
                    f"--face must be an index into the {len(faces)} faces (or use --all-faces)"
                )
            chosen = [faces[args.face]]
        table = []
        for f in chosen:
            rep = lc.is_sigma_unipotent(module, sigma, f)
            table.append(
                {
                    "face": sorted(f.generator_indices),
                    "verdict": rep.verdict,
                    "exponent_images": [_describe_vector(v) for v in rep.face_images],
                    "filtration_ranks": list(rep.filtration_ranks),
                }
            )
        return {
            "sigma": [_describe_vector(s) for s in sigma.elements],
            "faces": table,
            "all_unipotent": all(row["verdict"] for row in table),
        }
    if sub == "dl":
        polys = lc.default_projection_polynomials(module)
        n = module.rank
        basis = []
        m, w, t = module.monoid, module.weighting, module.truncation
        for comp in range(n):
            basis.append(
                tuple(
                    ws.constant_series(m, w, 1 if j == comp else 0, t) for j in range(n)
                )
            )
        witnesses = []
        for comp in range(n):
            wvec = lc.dl_limit(module, basis[comp], polys)
            witnesses.append(_describe_vector(wvec))
        return {
            "projection_polynomials": [[render_rational(c) for c in q] for q in polys],
            "h0_witnesses": witnesses,
            "l": args.l,
        }
    if sub == "homotopy":
        sigma = _load_sigma(ctx, args.sigma)
        if len(sigma.elements) < 2:
            raise ParseError("homotopy needs a --sigma document with two elements (xi, xi')")
        xi, xi_p = sigma.elements[0], sigma.elements[1]
        emb = module.embedding
        ball = mc._sharp_ball(module.monoid, module.weighting.values, min(4, config.weight_bound))
        forms = []
        import itertools as it

        for key in sorted(ball):
            for size in range(0, min(emb.r, 2) + 1):
                for wedge in it.combinations(range(emb.r), size):
                    forms.append({(key, wedge): Fraction(1)})
        rep = lc.homotopy_check(emb, xi, xi_p, forms)
        return {
            "xi": _describe_vector(xi),
            "xi_prime": _describe_vector(xi_p),
            "forms_checked": len(forms),
            "residuals_zero": rep.all_zero,
        }
    if sub == "logconv":
        radius = parse_radius(args.radius) if args.radius else ws.Radius.p_power(1)
        eta = parse_radius(args.eta) if args.eta else ws.Radius.p_power(Fraction(1, 2))
        verdict = lc.log_convergence_check(module, radius, eta, args.depth, config.prime)
        return {
            "radius_log": render_rational(radius.value_exponent()),
            "eta_log": render_rational(eta.value_exponent()),
            "depth": args.depth,
            "log_convergent": verdict,
        }
    raise ParseError(f"unknown connection subcommand {sub!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="logmonoid",
        description="Exact computations with fine monoids, polyannulus series and log connections.",
    )
    parser.add_argument("--prime", type=int, default=5, help="prime for p-adic norms (default 5)")
    parser.add_argument("--truncation", type=int, default=12, help="series truncation order")
    parser.add_argument("--weight-bound", type=int, default=10, help="search bound for enumerations")
    parser.add_argument("--format", choices=("json", "text"), default="text", dest="output_format")
    sub = parser.add_subparsers(dest="command", required=True)

    p_monoid = sub.add_parser("monoid-analyze", help="faces, units, semi-saturatedness report")
    p_monoid.add_argument("input", help="monoid document (json)")

    p_conn = sub.add_parser("connection", help="log connection computations")
    p_conn.add_argument(
        "subcommand",
        choices=("exponents", "shear", "unipotent", "dl", "homotopy", "logconv"),
    )
    p_conn.add_argument("input", help="connection document (json)")
    p_conn.add_argument("--sigma", help="exponent-set document (json)")
    p_conn.add_argument("--face", type=int, help="face index for the unipotence verdict")
    p_conn.add_argument("--all-faces", action="store_true", help="verdict table over every face")
    p_conn.add_argument("--l", type=int, default=4, help="D_l order")
    p_conn.add_argument("--radius", help="radius exponent q (radius p^-q) for logconv")
    p_conn.add_argument("--eta", help="eta exponent q (eta = p^-q) for logconv")
    p_conn.add_argument("--depth", type=int, default=6, help="logconv depth")

    sub.add_parser("selftest", help="run the oracle-equivalence and invariant suite")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = RunConfig(args.prime, args.truncation, args.weight_bound, args.output_format)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "monoid-analyze":
            report = cmd_monoid_analyze(args.input, config)
        elif args.command == "connection":
            report = cmd_connection(args, config)
        elif args.command == "selftest":
            return st.main(config.prime)
        else:  # pragma: no cover
            parser.error("unknown command")
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except BudgetExceeded as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return 3
    except HypothesisError as exc:
        print(f"hypothesis violated: {exc}", file=sys.stderr)
        return 4
    print(_render(report, config.output_format))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
