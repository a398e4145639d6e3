"""Command line interface.

Subcommands:
  verify     sampled verification of the declared structure
  integrate  integrate the flow (optionally mu-rescaled), emit CSV
  linearize  certify u_i(t) = u_i(0) e^{s(t)} along one trajectory
  classify   working-set membership of a point
  bracket    evaluate {f, g} at a point

Exit codes: 0 success, 1 verification/certification/domain failure,
2 bad input (arguments, documents, expressions).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .calculus import ScalarField
from .errors import (DomainSetError, EvalDomainError, HamlinError,
                     IntegrationError, ParseError, SystemDocumentError,
                     UnboundParameterError)
from .expr import parse
from .flow import IntegratorConfig, integrate, write_trajectory_csv
from .linearize import (Tolerances, certify_linearization, chart,
                        check_mu_admissibility, classify, identity_residuals)
from .model import (BUILTINS, IntegrableSystem, SampleBox, load_system,
                    nu_is_constant, rescaled_system, sample_points,
                    system_hash)
from .poisson import BracketContext, bracket, verify_bracket_axioms
from .poisson import (verify_conservation, verify_divergence_free,
                      verify_realization)
from .report import dumps17, write_json
from .scales import nu_threshold

_AXIOM_POINT_CAP = 200  # bracket axioms are O(points * extra fields); cap them


class UsageError(Exception):
    """Bad command line input (maps to exit code 2)."""


def _parse_params(pairs) -> dict:
    out = {}
    for item in pairs or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise UsageError(f"--param expects K=V, got {item!r}")
        try:
            out[key] = float(value)
        except ValueError:
            raise UsageError(f"--param {key}: {value!r} is not a number") from None
    return out


def _load_target(args) -> IntegrableSystem:
    if (args.system is None) == (args.builtin is None):
        raise UsageError("exactly one of --system or --builtin is required")
    params = _parse_params(args.param)
    if args.builtin is not None:
        factory = BUILTINS[args.builtin]
        try:
            return factory(**params)
        except TypeError:
            raise UsageError(
                f"builtin {args.builtin!r} does not accept parameters "
                f"{sorted(params)}") from None
    try:
        with open(args.system) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {args.system}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise SystemDocumentError(f"invalid JSON: {exc}", path="") from None
    if params:
        if not isinstance(doc, dict):
            raise SystemDocumentError("document must be a JSON object", path="")
        merged = dict(doc.get("parameters") or {})
        merged.update(params)
        doc["parameters"] = merged
    return load_system(doc)


def _parse_x0(text: str, n: int) -> np.ndarray:
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"--x0 must be comma separated numbers, got {text!r}") from None
    if len(values) != n:
        raise UsageError(f"--x0 needs {n} components, got {len(values)}")
    return np.array(values, dtype=np.float64)


def _parse_box(text: str, n: int) -> tuple:
    pairs = []
    for chunk in text.split(","):
        lo, sep, hi = chunk.partition(":")
        if not sep:
            raise UsageError(f"--box axis must be lo:hi, got {chunk!r}")
        try:
            pair = (float(lo), float(hi))
        except ValueError:
            raise UsageError(f"--box bounds must be numbers, got {chunk!r}") from None
        if not pair[0] < pair[1]:
            raise UsageError(f"--box needs lo < hi, got {chunk!r}")
        pairs.append(pair)
    if len(pairs) == 1:
        pairs = pairs * n
    if len(pairs) != n:
        raise UsageError(f"--box needs 1 or {n} axes, got {len(pairs)}")
    return tuple(pairs)


def _config_from_args(args) -> IntegratorConfig:
    try:
        return IntegratorConfig(t1=args.t1, t0=args.t0, method=args.method,
                                step=args.step, rtol=args.rtol,
                                atol=args.atol, max_steps=args.max_steps)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _add_system_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--system", help="path to a system document (JSON)")
    p.add_argument("--builtin", choices=sorted(BUILTINS),
                   help="name of a built-in system")
    p.add_argument("--param", action="append", metavar="K=V",
                   help="override a parameter (repeatable)")


def _add_integrator_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--t1", type=float, required=True)
    p.add_argument("--method", choices=("rk4", "rk45"), default="rk45")
    p.add_argument("--step", type=float, help="fixed step for rk4")
    p.add_argument("--rtol", type=float, default=1e-10)
    p.add_argument("--atol", type=float, default=1e-12)
    p.add_argument("--max-steps", type=int, default=100000)


def _fmt_report_line(name: str, rep) -> str:
    status = "pass" if rep.passed else "FAIL"
    return (f"{name}: {status}  max {rep.max_residual:.3e}  "
            f"({rep.n_points} pts, {rep.n_skipped} skipped)")


def _cmd_verify(args) -> int:
    system = _load_target(args)
    box = _parse_box(args.box, system.n)
    pts, _ = sample_points(SampleBox(box, args.samples, args.seed))
    axiom_pts = pts[:min(len(pts), _AXIOM_POINT_CAP)]

    def suite(target: IntegrableSystem) -> dict:
        checks = {
            "conservation": verify_conservation(target, pts),
            "realization": verify_realization(target, pts),
            "divergence-free": verify_divergence_free(target, pts),
            "chart-identities": identity_residuals(target, pts),
        }
        for key, rep in verify_bracket_axioms(target, axiom_pts,
                                              seed=args.seed).items():
            checks[f"axiom-{key}"] = rep
        return checks

    checks = suite(system)
    report = {
        "system": system.name,
        "system_hash": system_hash(system),
        "seed": args.seed,
        "samples": args.samples,
        "box": [list(b) for b in box],
        "tolerances": Tolerances().to_dict(),
        "checks": {k: r.to_dict() for k, r in checks.items()},
    }
    ok = all(r.passed for r in checks.values())
    for key, rep in checks.items():
        print(_fmt_report_line(key, rep))

    if nu_is_constant(system) and system.mu is not None:
        adm = check_mu_admissibility(system, SampleBox(box, args.samples,
                                                       args.seed))
        report["admissibility"] = adm.to_dict()
        print(f"admissibility: {'pass' if adm.admissible else 'FAIL'}  "
              f"div(muX) nonzero {adm.div_mu_x_nonzero_fraction:.0%}, "
              f"chart Jacobian nonzero {adm.chart_jacobian_nonzero_fraction:.0%}")
        ok = ok and adm.admissible
        resc_checks = suite(rescaled_system(system))
        report["rescaled_checks"] = {k: r.to_dict()
                                     for k, r in resc_checks.items()}
        for key, rep in resc_checks.items():
            print(_fmt_report_line(f"rescaled-{key}", rep))
        ok = ok and all(r.passed for r in resc_checks.values())

    report["pass"] = ok
    if args.out:
        write_json(args.out, report)
    print(f"verify: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def _cmd_integrate(args) -> int:
    system = _load_target(args)
    target = rescaled_system(system) if args.rescaled else system
    x0 = _parse_x0(args.x0, system.n)
    if args.rescaled:
        nu = target.nu_field.value(x0)
        if abs(nu) <= nu_threshold(x0):
            raise DomainSetError(
                "x0 is in the Z(nu) band of the rescaled system "
                "(not in Omega0)")
    traj = integrate(target, x0, _config_from_args(args))
    chart_fn = None
    if args.chart:
        chart_fn = lambda x: chart(target, x)  # noqa: E731
    if args.out:
        write_trajectory_csv(args.out, traj, chart=chart_fn)
        print(f"{len(traj)} samples, t in [{traj.t[0]:.17g}, "
              f"{traj.t[-1]:.17g}], s(t1) = {traj.s[-1]:.17g}")
        print(f"wrote {args.out}")
    else:
        import io
        buf = io.StringIO()
        n = target.n
        header = ["t"] + [f"x{i+1}" for i in range(n)] + ["s"]
        if chart_fn is not None:
            header += [f"u{i+1}" for i in range(n)]
        buf.write(",".join(header) + "\n")
        for i in range(len(traj)):
            cells = [format(traj.t[i], ".17g")]
            cells += [format(v, ".17g") for v in traj.x[i]]
            cells.append(format(traj.s[i], ".17g"))
            if chart_fn is not None:
                try:
                    cells += [format(v, ".17g") for v in chart_fn(traj.x[i])]
                except HamlinError:
                    cells += ["nan"] * n
            buf.write(",".join(cells) + "\n")
        sys.stdout.write(buf.getvalue())
    if traj.truncated is not None:
        print(f"integration truncated: {traj.truncated}", file=sys.stderr)
        return 1
    return 0


def _cmd_linearize(args) -> int:
    system = _load_target(args)
    x0 = _parse_x0(args.x0, system.n)
    tols = Tolerances(defect=args.defect_tol)
    cert = certify_linearization(system, x0, _config_from_args(args), tols)
    if args.out:
        write_json(args.out, cert.to_json_dict())
    print(f"samples {len(cert.trajectory)}  retained "
          f"{len(cert.retained)}  excluded {cert.excluded_samples}")
    print(f"max defect  {cert.max_defect:.6e}")
    print(f"mean defect {cert.mean_defect:.6e}")
    print(f"linearize: {'PASS' if cert.passed else 'FAIL'} "
          f"(defect tolerance {tols.defect:g})")
    return 0 if cert.passed else 1


def _cmd_classify(args) -> int:
    system = _load_target(args)
    x0 = _parse_x0(args.x0, system.n)
    verdict = classify(system, x0, Tolerances().scaled(args.tol_factor))
    text = dumps17(verdict.to_dict(), indent=2)
    print(text)
    if args.out:
        write_json(args.out, verdict.to_dict())
    return 0


def _cmd_bracket(args) -> int:
    system = _load_target(args)
    x0 = _parse_x0(args.x0, system.n)
    names = frozenset(system.parameters)
    f = ScalarField.from_expression(parse(args.f, system.n, names),
                                    system.parameters)
    if args.g is not None:
        g = ScalarField.from_expression(parse(args.g, system.n, names),
                                        system.parameters)
    else:
        g = system.hamiltonian_field
    value = bracket(BracketContext.from_system(system), f, g, x0)
    print(format(value, ".17g"))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hamlin",
        description="Hamilton-Poisson realization and linearization tools")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="sampled structure verification")
    _add_system_args(p)
    p.add_argument("--box", default="-2:2",
                   help="sampling box, lo:hi per axis (one pair = all axes)")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(fn=_cmd_verify)

    p = sub.add_parser("integrate", help="integrate the flow, emit CSV")
    _add_system_args(p)
    _add_integrator_args(p)
    p.add_argument("--x0", required=True)
    p.add_argument("--rescaled", action="store_true",
                   help="integrate mu X instead of X (constant-nu systems)")
    p.add_argument("--chart", action="store_true",
                   help="append the chart columns u1..un")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(fn=_cmd_integrate)

    p = sub.add_parser("linearize", help="certify u(t) = u(0) e^s")
    _add_system_args(p)
    _add_integrator_args(p)
    p.add_argument("--x0", required=True)
    p.add_argument("--defect-tol", type=float, default=1e-6)
    p.add_argument("--out", help="write the certificate JSON here")
    p.set_defaults(fn=_cmd_linearize)

    p = sub.add_parser("classify", help="working-set membership of a point")
    _add_system_args(p)
    p.add_argument("--x0", required=True)
    p.add_argument("--tol-factor", type=float, default=1.0,
                   help="scale the zero-test coefficients")
    p.add_argument("--out", help="write the verdict JSON here")
    p.set_defaults(fn=_cmd_classify)

    p = sub.add_parser("bracket", help="evaluate {f, g} at a point")
    _add_system_args(p)
    p.add_argument("--x0", required=True)
    p.add_argument("--f", required=True, help="first argument expression")
    p.add_argument("--g", help="second argument (default: the hamiltonian)")
    p.set_defaults(fn=_cmd_bracket)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (UsageError, SystemDocumentError, ParseError,
            UnboundParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DomainSetError, EvalDomainError, IntegrationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
