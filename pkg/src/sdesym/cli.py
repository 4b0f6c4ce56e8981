"""Command-line front end: ``sdesym <command> ...``.

Exit codes: 0 success (symmetry found, checks pass), 1 a negative answer
(not a symmetry, failed check, not integrable), 2 usage, parse or I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

import numpy as np

from . import mc
from .convert import (
    GroupElement, NotOrthogonal, ShapeMismatch, apply_group_element, convert, persistence_condition,
)
from .deteq import build_residuals, check_symmetry
from .expr import (
    ParseError, SampleSpec, UnknownIdentifierError, add, is_zero, mul, parse, render,
)
from .model import (
    ITO, STRATONOVICH, Model, ModelError, SymbolMismatch, VectorField, classify,
    conformality_warnings, lie_bracket, load_model_file, render_model, restrict_field,
)
from .transform import (
    InversionError, NoiseMixingError, NotIntegrable, NotSplitW, characteristic_chi, change_of_vars,
    kozlov, make_substitution, modified_kozlov, pushforward_field, restrict_system,
    straightening_check, substitution_from_spec,
)

EXIT_OK, EXIT_NO, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------


def _spec(args) -> SampleSpec:
    return SampleSpec(points=args.points, eps_zero=args.tol, seed=args.seed)


def _overrides(args):
    out = {}
    for item in args.set or []:
        name, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects name=value, got {item!r}")
        try:
            out[name.strip()] = Fraction(val.strip())
        except ValueError:
            raise UsageError(f"--set value for {name} is not a number: {val!r}") from None
    return out


def _load(args) -> Model:
    return load_model_file(args.model, _overrides(args))


def _field(model: Model, name: str) -> VectorField:
    return model.field(name)


def _system_json(sys_):
    return {
        "calculus": sys_.calculus,
        "vars": list(sys_.symbols.dynamical),
        "drift": [render(e) for e in sys_.drift],
        "noise": [[render(e) for e in row] for row in sys_.noise],
        "proper": sys_.proper,
    }


def _field_json(X: VectorField):
    out = {"phi": [render(p) for p in X.phi], "class": classify(X)}
    if X.general:
        out["xi"] = [render(x) for x in X.xi]
    else:
        out["R"] = [[str(c) for c in row] for row in X.R]
    return out


def _report_json(rep):
    d = rep.to_dict()
    d["residual"] = {r["label"]: r["expr"] for r in d["residuals"]}
    return d


def _emit(args, payload: dict, text: str):
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True, default=str))
    else:
        print(text.rstrip("\n"))


def _report_text(rep, title=""):
    lines = [f"{title}{rep.verdict} ({rep.symmetry_class}, {rep.calculus})"]
    for s in rep.statuses:
        if s.passed:
            lines.append(f"  {s.label}: ok   {render(s.residual)}")
        else:
            lines.append(f"  {s.label}: FAIL {render(s.residual)}")
            lines.append(f"      residual {s.value:.3g} at {s.witness}")
    return "\n".join(lines)


def _sub_text(sub):
    fw = ", ".join(f"{k} = {render(v)}" for k, v in sub.forward)
    inv = ", ".join(f"{k} = {render(v)}" for k, v in sub.inverse)
    return f"substitution: {fw}\ninverse: {inv}"


def _floats(text, what):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{what} must be a comma separated list of numbers") from None


def _pairs(items, what):
    out = {}
    for item in items or []:
        name, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"{what} expects name=expr, got {item!r}")
        out[name.strip()] = val.strip()
    return out


def _params(model):
    return {k: float(v) for k, v in model.system.symbols.fixed_values().items()}


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_check(args):
    model = _load(args)
    sys_ = convert(model.system, args.calculus) if args.calculus else model.system
    rep = check_symmetry(sys_, _field(model, args.field), _spec(args))
    payload = _report_json(rep)
    payload.update(model=args.model, field=args.field)
    _emit(args, payload, _report_text(rep, f"{args.field}: "))
    return EXIT_OK if rep.is_symmetry else EXIT_NO


def cmd_deteqs(args):
    model = _load(args)
    sys_ = convert(model.system, args.calculus) if args.calculus else model.system
    rs = build_residuals(sys_, _field(model, args.field))
    items = rs.items()
    payload = {"calculus": rs.calculus, "dim": rs.dim, "residual": {k: render(e) for k, e in items}}
    _emit(args, payload, "\n".join(f"{k}: {render(e)} = 0" for k, e in items))
    return EXIT_OK


def cmd_convert(args):
    model = _load(args)
    out = convert(model.system, args.to)
    text = render_model(Model(out, model.fields, model.substitutions))
    payload = _system_json(out)
    payload["model"] = text
    _emit(args, payload, text)
    return EXIT_OK


def _post_checks(new_sys, sub, model, spec, names=None):
    out = {}
    for name, X in model.fields.items():
        if names is not None and name not in names:
            continue
        out[name] = check_symmetry(new_sys, pushforward_field(X, sub), spec)
    return out


def cmd_kozlov(args):
    model = _load(args)
    spec = _spec(args)
    X = _field(model, args.field)
    inverse = None
    if args.inverse:
        names = model.system.symbols.names() + [args.name or "y"]
        inverse = {k: parse(v, names) for k, v in _pairs(args.inverse, "--inverse").items()}
    try:
        fn = modified_kozlov if args.modified else kozlov
        res = fn(model.system, X, new_name=args.name, inverse=inverse, spec=spec)
    except NotIntegrable as exc:
        print(f"{exc}; supply a substitution with `sdesym transform --forward NAME=EXPR`", file=sys.stderr)
        return EXIT_NO
    post = _post_checks(res.system, res.substitution, model, spec)
    fields = {n: pushforward_field(F, res.substitution) for n, F in model.fields.items()}
    text = render_model(Model(res.system, fields))
    payload = _system_json(res.system)
    payload.update(
        forward={k: render(v) for k, v in res.substitution.forward},
        inverse={k: render(v) for k, v in res.substitution.inverse},
        field=_field_json(res.field),
        checks=res.checks,
        post={n: _report_json(r) for n, r in post.items()},
        model=text,
    )
    lines = [_sub_text(res.substitution), "", text]
    lines += [f"{k}: {'ok' if v else 'FAIL'}" for k, v in res.checks.items()]
    lines += [_report_text(r, f"{n} after: ") for n, r in post.items()]
    if not res.system.proper:
        lines.append("note: the transformed equation is generalized (coefficients read the noise)")
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK if all(res.checks.values()) else EXIT_NO


def cmd_chi(args):
    model = _load(args)
    X = _field(model, args.field)
    chi = characteristic_chi(X)
    payload = {"chi": render(chi)}
    lines = [f"chi = {render(chi)}"]
    code = EXIT_OK
    if args.psi or args.theta or args.zeta:
        names = model.system.symbols.names()
        t = model.system.symbols.time
        psi = parse(args.psi or "0", names)
        theta = parse(args.theta or t, names)
        zeta = parse(args.zeta, names) if args.zeta else chi
        chk = straightening_check(X, psi, theta, zeta, _spec(args))
        payload["straightening"] = {
            k: {"pass": v["pass"], "residual": None if v["residual"] is None else render(v["residual"])}
            for k, v in chk.items()
        }
        for k, v in chk.items():
            lines.append(f"  {k}: {'ok' if v['pass'] else 'FAIL'}")
        if not all(v["pass"] for v in chk.values()):
            code = EXIT_NO
    _emit(args, payload, "\n".join(lines))
    return code


def cmd_bracket(args):
    model = _load(args)
    Z = lie_bracket(_field(model, args.a), _field(model, args.b))
    payload = _field_json(Z)
    text = f"[{args.a}, {args.b}]: phi = {payload['phi']}"
    text += f", xi = {payload['xi']}" if "xi" in payload else f", R = {payload['R']}"
    _emit(args, payload, text + f"  ({payload['class']})")
    return EXIT_OK


def cmd_classify(args):
    model = _load(args)
    X = _field(model, args.field)
    warn = conformality_warnings(X)
    payload = {"class": classify(X), "warnings": warn}
    _emit(args, payload, "\n".join([payload["class"]] + [f"warning: {w}" for w in warn]))
    return EXIT_OK


def cmd_transform(args):
    model = _load(args)
    spec = _spec(args)
    symbols = model.system.symbols
    if args.substitution:
        if args.forward:
            raise UsageError("give either a substitution name or --forward, not both")
        try:
            sub_spec = model.substitutions[args.substitution]
        except KeyError:
            known = ", ".join(model.substitutions) or "none"
            raise UsageError(f"no substitution {args.substitution!r} (available: {known})") from None
        sub = substitution_from_spec(symbols, sub_spec, spec)
    else:
        fw = _pairs(args.forward, "--forward")
        if not fw:
            raise UsageError("transform needs a substitution name or --forward NAME=EXPR")
        names = symbols.names()
        fw = {k: parse(v, names) for k, v in fw.items()}
        inv = _pairs(args.inverse, "--inverse")
        inv = {k: parse(v, names + list(fw)) for k, v in inv.items()} or None
        sub = make_substitution(symbols, fw, inv, name="cli", spec=spec)
    new_sys = change_of_vars(model.system, sub)
    fields = {n: pushforward_field(X, sub) for n, X in model.fields.items()}
    if args.restrict:
        keep = [v.strip() for v in args.restrict.split(",") if v.strip()]
        new_sys = restrict_system(new_sys, keep)
        fields = {n: restrict_field(X, new_sys.symbols, keep) for n, X in fields.items()}
    reports = {}
    for name in args.check or []:
        if name not in fields:
            raise UsageError(f"no field {name!r} to check")
        reports[name] = check_symmetry(new_sys, fields[name], spec)
    text = render_model(Model(new_sys, fields))
    payload = _system_json(new_sys)
    payload.update(
        forward={k: render(v) for k, v in sub.forward},
        inverse={k: render(v) for k, v in sub.inverse},
        fields={n: _field_json(X) for n, X in fields.items()},
        post={n: _report_json(r) for n, r in reports.items()},
        model=text,
    )
    lines = [_sub_text(sub), "", text] + [_report_text(r, f"{n}: ") for n, r in reports.items()]
    _emit(args, payload, "\n".join(lines))
    return EXIT_OK if all(r.is_symmetry for r in reports.values()) else EXIT_NO


def cmd_persistence(args):
    from .convert import to_stratonovich

    model = _load(args)
    spec = _spec(args)
    X = _field(model, args.field)
    sys_ = model.system
    if sys_.calculus != ITO:
        raise UsageError("persistence expects the Ito form of the equation")
    cond = persistence_condition(sys_, X)
    zero = bool(is_zero(cond, spec, sys_.symbols))
    ito = check_symmetry(sys_, X, spec)
    strat = check_symmetry(to_stratonovich(sys_), X, spec)
    same = ito.verdict == strat.verdict
    payload = {
        "condition": render(cond), "vanishes": zero, "ito": ito.verdict,
        "stratonovich": strat.verdict, "agree": zero == same,
    }
    text = (f"r (sigma_w + sigma sigma_x) = {render(cond)}  ({'vanishes' if zero else 'nonzero'})\n"
            f"ito: {ito.verdict}, stratonovich: {strat.verdict}")
    _emit(args, payload, text)
    return EXIT_OK if zero else EXIT_NO


def _group_element(args, model):
    if args.from_field:
        return GroupElement.from_field(_field(model, args.from_field), args.lam)
    if args.exponents:
        exps = {}
        for k, v in _pairs(args.exponents.split(","), "--exponents").items():
            try:
                exps[k] = Fraction(v)
            except ValueError:
                raise UsageError(f"exponent for {k} is not a number: {v!r}") from None
        return GroupElement.dilation(args.lam, exps)
    if args.rotation:
        rows = [[c.strip() for c in r.split(",")] for r in args.rotation.split(";")]
        s = model.system.symbols
        vars_ = args.vars.split(",") if args.vars else list(s.dynamical[: len(rows)])
        noises = args.noises.split(",") if args.noises else list(s.noises[: len(rows)])
        names = s.names()
        M = [[parse(c, names) for c in r] for r in rows]
        return GroupElement.rotation(M, [v.strip() for v in vars_], [w.strip() for w in noises])
    raise UsageError("group-apply needs --from-field, --exponents or --rotation")


def cmd_group_apply(args):
    model = _load(args)
    spec = _spec(args)
    g = _group_element(args, model)
    out = apply_group_element(model.system, g, discharge=not args.no_discharge, spec=spec)
    s = model.system
    invariant = all(
        bool(is_zero(add(a, mul(-1, b)), spec, s.symbols)) for a, b in zip(out.entries(), s.entries())
    )
    text = render_model(Model(out, {}))
    payload = _system_json(out)
    payload.update(invariant=invariant, model=text)
    _emit(args, payload, text + f"\ninvariant: {invariant}")
    return EXIT_OK


def _grid(args):
    if args.h <= 0 or args.t1 <= 0:
        raise UsageError("--h and --t1 must be positive")
    return mc.Grid.over(args.t1, args.h)


def cmd_simulate(args):
    if args.paths < 1:
        raise UsageError("--paths must be at least 1")
    model = _load(args)
    grid = _grid(args)
    batch = mc.simulate(model.system, _floats(args.x0, "--x0"), grid, args.paths, args.seed,
                        params=_params(model), clip=args.clip)
    if args.out:
        if args.out.endswith(".npz"):
            mc.export_npz(batch, args.out)
        else:
            mc.export_csv(batch, args.out)
    summ = mc.summary(batch)
    lines = [f"{k}: {v}" for k, v in summ.items()]
    _emit(args, summ, "\n".join(lines))
    return EXIT_OK


def cmd_pathcheck(args):
    if args.paths < 1:
        raise UsageError("--paths must be at least 1")
    model = _load(args)
    grid = _grid(args)
    params = _params(model)
    x0 = _floats(args.x0, "--x0")
    if args.closed_form:
        if args.closed_form != "linear":
            raise UsageError("the only closed form available is 'linear' (dx = lambda x dt + mu dw)")
        if "lambda" not in params or "mu" not in params:
            raise UsageError("fix lambda and mu with --set for the closed-form check")
        res = mc.closed_form_check_ex5(params["lambda"], params["mu"], x0[0], grid, args.paths,
                                       args.seed, args.levels)
        res["mode"] = "closed-form"
    elif args.coherence:
        g = GroupElement.from_field(_field(model, args.coherence), args.lam)
        mapped = apply_group_element(model.system, g, discharge=True, spec=_spec(args))
        s = model.system.symbols
        if not _is_number(args.lam):
            raise UsageError("--lam must be a number for the coherence check")
        lam = float(Fraction(args.lam))
        exps = dict(g.exponents)
        G = np.diag([lam ** float(exps.get(v, 0)) for v in s.dynamical])
        res = mc.scaling_coherence_check(model.system, mapped, G, x0, grid, args.paths, args.seed,
                                         args.levels, params)
        res["decreasing"] = mc.rms_decreasing(res["rms"])
        res["mode"] = "coherence"
    else:
        spec = _spec(args)
        if args.substitution:
            sub = substitution_from_spec(model.system.symbols, model.substitutions[args.substitution], spec)
            new_sys = change_of_vars(model.system, sub)
        elif args.field:
            fn = modified_kozlov if args.modified else kozlov
            kz = fn(model.system, _field(model, args.field), spec=spec)
            sub, new_sys = kz.substitution, kz.system
        else:
            raise UsageError("pathcheck needs --field, --substitution, --closed-form or --coherence")
        res = mc.pathwise_transform_check(model.system, sub, new_sys, x0, grid, args.paths, args.seed,
                                          args.levels, params)
        res["mode"] = "transform"
    if "ratios" not in res:
        r = res["rms"]
        # ratios are undefined once the finer error is exactly zero
        res["ratios"] = [r[i] / r[i + 1] if r[i + 1] > 0 else None for i in range(len(r) - 1)]
    finite = [q for q in res["ratios"] if q is not None]
    res["min_ratio"] = min(finite) if finite else None
    lines = [f"h = {h:.6g}: rms = {r:.6g}" for h, r in zip(res["h"], res["rms"])]
    lines.append("ratios: " + ", ".join("n/a" if q is None else f"{q:.3f}" for q in res["ratios"]))
    _emit(args, res, "\n".join(lines))
    return EXIT_OK


def _is_number(text):
    try:
        float(Fraction(str(text)))
        return True
    except ValueError:
        return False


def cmd_corpus(args):
    from .runner import run_corpus

    return run_corpus(filter_=args.filter, cases_file=args.cases, as_json=args.json,
                      seed=args.seed, points=args.points, tol=args.tol)


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def _common(p, top=False):
    d = (lambda v: v) if top else (lambda v: argparse.SUPPRESS)
    p.add_argument("--seed", type=int, default=d(42), help="sampling / RNG seed (default 42)")
    p.add_argument("--points", type=int, default=d(64), help="zero-test sample points (default 64)")
    p.add_argument("--tol", type=float, default=d(1e-9), help="zero-test tolerance (default 1e-9)")
    p.add_argument("--json", action="store_true", default=d(False), help="machine-readable output")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sdesym", description="Lie-point symmetries of stochastic equations")
    _common(p, top=True)
    sub = p.add_subparsers(dest="command", required=True)

    def cmd(name, fn, help_, model=True):
        q = sub.add_parser(name, help=help_)
        _common(q)
        if model:
            q.add_argument("model", help="model file")
            q.add_argument("--set", action="append", metavar="NAME=VALUE", help="fix a parameter")
        q.set_defaults(func=fn)
        return q

    calc = dict(choices=[ITO, STRATONOVICH], help="convert the system before checking")
    q = cmd("check", cmd_check, "verify a symmetry")
    q.add_argument("field")
    q.add_argument("--calculus", **calc)
    q = cmd("deteqs", cmd_deteqs, "print the determining equations")
    q.add_argument("field")
    q.add_argument("--calculus", **calc)
    q = cmd("convert", cmd_convert, "Ito <-> Stratonovich")
    q.add_argument("--to", required=True, choices=[ITO, STRATONOVICH])
    q = cmd("kozlov", cmd_kozlov, "Kozlov substitution for a symmetry")
    q.add_argument("field")
    q.add_argument("--modified", action="store_true", help="use the scaling form for W-symmetries")
    q.add_argument("--name", help="name of the new variable (default y)")
    q.add_argument("--inverse", action="append", metavar="OLD=EXPR", help="explicit inverse map")
    q = cmd("chi", cmd_chi, "characteristic variable of a W-symmetry")
    q.add_argument("field")
    q.add_argument("--psi")
    q.add_argument("--theta")
    q.add_argument("--zeta")
    q = cmd("bracket", cmd_bracket, "Lie bracket of two fields")
    q.add_argument("a")
    q.add_argument("b")
    q = cmd("classify", cmd_classify, "symmetry class of a field")
    q.add_argument("field")
    q = cmd("transform", cmd_transform, "change variables")
    q.add_argument("substitution", nargs="?", help="name of a [substitution] section")
    q.add_argument("--forward", action="append", metavar="NEW=EXPR")
    q.add_argument("--inverse", action="append", metavar="OLD=EXPR")
    q.add_argument("--restrict", metavar="VARS", help="keep only these variables")
    q.add_argument("--check", action="append", metavar="FIELD", help="check a pushed-forward field")
    q = cmd("persistence", cmd_persistence, "persistence condition for a scalar W-symmetry")
    q.add_argument("field")
    q = cmd("group-apply", cmd_group_apply, "apply a finite group element")
    q.add_argument("--from-field", metavar="FIELD", help="dilation generated by a diagonal field")
    q.add_argument("--exponents", metavar="NAME=A,...", help="dilation exponents")
    q.add_argument("--rotation", metavar="M", help="matrix rows separated by ';'")
    q.add_argument("--vars")
    q.add_argument("--noises")
    q.add_argument("--lam", default="lambda", help="group parameter (expression)")
    q.add_argument("--no-discharge", action="store_true", help="map the noise together with x")

    def mc_args(q):
        q.add_argument("--x0", required=True)
        q.add_argument("--t1", type=float, default=1.0)
        q.add_argument("--h", type=float, default=2.0**-8)
        q.add_argument("--paths", type=int, default=512)

    q = cmd("simulate", cmd_simulate, "Euler-Maruyama simulation")
    mc_args(q)
    q.add_argument("--out", help="CSV or .npz export")
    q.add_argument("--clip", action="store_true", help="project negative states onto 0")
    q = cmd("pathcheck", cmd_pathcheck, "pathwise Monte Carlo checks")
    mc_args(q)
    q.add_argument("--levels", type=int, default=3)
    q.add_argument("--field")
    q.add_argument("--modified", action="store_true")
    q.add_argument("--substitution")
    q.add_argument("--closed-form", choices=["linear"])
    q.add_argument("--coherence", metavar="FIELD")
    q.add_argument("--lam", default="2")
    q = cmd("corpus", cmd_corpus, "run the bundled example corpus", model=False)
    q.add_argument("--filter", help="glob over case ids, e.g. 'c*'")
    q.add_argument("--cases", help="alternative cases file")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (NotIntegrable, NotSplitW, InversionError, mc.AllPathsInvalid) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO
    except (OSError, ModelError, ParseError, UnknownIdentifierError, UsageError, KeyError,
            SymbolMismatch, ShapeMismatch, NotOrthogonal, NoiseMixingError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
