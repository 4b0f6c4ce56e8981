"""Euler-Maruyama Monte Carlo oracle with shared, counter-based Wiener increments.

Each path draws its increments from a Philox stream keyed by (seed, path),
so a path's noise does not depend on how many other paths are simulated or
in what order.  Coarser grids reuse the finest increments by summation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .expr import Sym, evaluate_batch, free_symbols
from .model import ITO, SdeSystem


class AllPathsInvalid(RuntimeError):
    pass


@dataclass(frozen=True)
class Grid:
    t0: float = 0.0
    h: float = 2.0**-8
    steps: int = 256

    @classmethod
    def over(cls, t1: float, h: float, t0: float = 0.0) -> "Grid":
        n = int(round((t1 - t0) / h))
        if n < 1 or abs(n * h - (t1 - t0)) > 1e-9 * max(1.0, abs(t1)):
            raise ValueError(f"step {h} does not divide [{t0}, {t1}]")
        return cls(t0, h, n)

    @property
    def t1(self):
        return self.t0 + self.h * self.steps

    def times(self):
        return self.t0 + self.h * np.arange(self.steps + 1)

    def refine(self, k: int) -> "Grid":
        return Grid(self.t0, self.h / 2**k, self.steps * 2**k)


@dataclass
class PathBatch:
    grid: Grid
    increments: np.ndarray  # paths x steps x noises
    w: np.ndarray  # paths x (steps+1) x noises, cumulative
    states: np.ndarray  # paths x (steps+1) x dyn vars
    valid: np.ndarray  # paths
    seed: int
    var_names: tuple = ()
    noise_names: tuple = ()
    clipped: np.ndarray = None
    scheme: str = "euler-maruyama"

    @property
    def paths(self):
        return self.states.shape[0]

    @property
    def excluded(self) -> int:
        return int((~self.valid).sum())

    def final(self):
        return self.states[:, -1, :]


def wiener_increments(seed: int, paths: int, steps: int, noises: int, h: float) -> np.ndarray:
    """N(0, h) increments; path p uses the Philox stream keyed (seed, p)."""
    out = np.empty((paths, steps, noises))
    sd = math.sqrt(h)
    for p in range(paths):
        gen = np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), p]))
        out[p] = gen.standard_normal((steps, noises)) * sd
    return out


def coarsen(dw: np.ndarray, k: int) -> np.ndarray:
    """Sum consecutive blocks of 2^k increments."""
    if k == 0:
        return dw
    p, n, m = dw.shape
    f = 2**k
    return dw.reshape(p, n // f, f, m).sum(axis=2)


def _bind_params(sys: SdeSystem, params: Optional[dict]):
    fixed = dict(sys.symbols.fixed_values())
    fixed.update(params or {})
    names = set(sys.symbols.dynamical) | {sys.symbols.time} | set(sys.symbols.noises)
    exprs = list(sys.entries())
    loose = set()
    for e in exprs:
        loose |= free_symbols(e) - names - set(fixed)
    if loose:
        raise ValueError(f"give values for parameters {sorted(loose)} before simulating")
    return {k: float(v) for k, v in fixed.items()}


def simulate(sys: SdeSystem, init: Sequence[float], grid: Grid, paths: int, seed: int = 42,
             increments: Optional[np.ndarray] = None, params: Optional[dict] = None,
             clip: bool = False, eps_sing: float = 0.0) -> PathBatch:
    """Euler-Maruyama: x_{n+1} = x_n + f(x_n, t_n, w_n) h + sigma(x_n, t_n, w_n) dw_n.

    Paths whose coefficients leave their domain (or overflow) are frozen and
    marked invalid.  ``clip`` instead projects negative states onto 0 and
    records the paths where that happened.
    """
    if sys.calculus != ITO:
        raise ValueError("simulate integrates Ito systems; convert first")
    if paths < 1:
        raise ValueError("paths must be positive")
    n, m = sys.n, sys.m
    init = np.asarray(init, dtype=float).reshape(-1)
    if init.size != n:
        raise ValueError(f"need {n} initial values, got {init.size}")
    pvals = _bind_params(sys, params)
    if increments is None:
        increments = wiener_increments(seed, paths, grid.steps, m, grid.h)
    if increments.shape != (paths, grid.steps, m):
        raise ValueError(f"increments have shape {increments.shape}, expected {(paths, grid.steps, m)}")
    w = np.zeros((paths, grid.steps + 1, m))
    np.cumsum(increments, axis=1, out=w[:, 1:, :])
    X = np.empty((paths, grid.steps + 1, n))
    X[:, 0, :] = init
    valid = np.ones(paths, dtype=bool)
    clipped = np.zeros(paths, dtype=bool)
    xs, t, ws = sys.symbols.dynamical, sys.symbols.time, sys.symbols.noises
    drift = list(sys.drift)
    noise = sys.noise
    times = grid.times()
    with np.errstate(all="ignore"):
        for step in range(grid.steps):
            env = {name: X[:, step, i] for i, name in enumerate(xs)}
            env.update({name: w[:, step, k] for k, name in enumerate(ws)})
            env[t] = np.full(paths, times[step])
            env.update({k: np.full(paths, v) for k, v in pvals.items()})
            ok = valid.copy()
            nxt = X[:, step, :].copy()
            for i in range(n):
                fv, fo = evaluate_batch(drift[i], env, eps_sing, size=paths)
                ok &= fo
                inc = fv * grid.h
                for k in range(m):
                    sv, so = evaluate_batch(noise[i][k], env, eps_sing, size=paths)
                    ok &= so
                    inc = inc + sv * increments[:, step, k]
                nxt[:, i] += inc
            ok &= np.isfinite(nxt).all(axis=1)
            if clip:
                neg = (nxt < 0).any(axis=1) & ok
                clipped |= neg
                nxt = np.maximum(nxt, 0.0)
            valid &= ok
            X[:, step + 1, :] = np.where(valid[:, None], nxt, X[:, step, :])
    if not valid.any():
        raise AllPathsInvalid("every path left the coefficient domain")
    return PathBatch(grid, increments, w, X, valid, seed, tuple(xs), tuple(ws), clipped)


def pathwise_transform_check(sys: SdeSystem, sub, transformed: SdeSystem, init, grid: Grid,
                             paths: int = 512, seed: int = 42, levels: int = 3,
                             params: Optional[dict] = None) -> dict:
    """Simulate x and y = Psi(x) with common noise; RMS of Psi(x_N) - y_N per level."""
    fine = grid.refine(levels - 1)
    dw_fine = wiener_increments(seed, paths, fine.steps, sys.m, fine.h)
    pvals = _bind_params(sys, params)
    xs, t, ws = sys.symbols.dynamical, sys.symbols.time, sys.symbols.noises
    env0 = {v: np.array([float(x)]) for v, x in zip(xs, np.atleast_1d(init))}
    env0[t] = np.array([grid.t0])
    env0.update({w: np.array([0.0]) for w in ws})
    env0.update({k: np.array([v]) for k, v in pvals.items()})
    y0 = []
    for psi in sub.psi():
        val, ok = evaluate_batch(psi, env0, 0.0, size=1)
        if not ok[0]:
            raise ValueError("the substitution is undefined at the initial point")
        y0.append(float(val[0]))
    rms, hs, excluded = [], [], []
    for k in range(levels):
        g = grid.refine(k)
        dw = coarsen(dw_fine, levels - 1 - k)
        bx = simulate(sys, init, g, paths, seed, dw, params)
        by = simulate(transformed, y0, g, paths, seed, dw, params)
        env = {v: bx.states[:, -1, i] for i, v in enumerate(xs)}
        env[t] = np.full(paths, g.t1)
        env.update({w: bx.w[:, -1, j] for j, w in enumerate(ws)})
        env.update({kk: np.full(paths, v) for kk, v in pvals.items()})
        ok = bx.valid & by.valid
        err2 = np.zeros(paths)
        for i, psi in enumerate(sub.psi()):
            val, vo = evaluate_batch(psi, env, 0.0, size=paths)
            ok &= vo
            err2 += (val - by.states[:, -1, i]) ** 2
        rms.append(float(np.sqrt(err2[ok].mean())) if ok.any() else float("nan"))
        hs.append(g.h)
        excluded.append(int((~ok).sum()))
    ratios = [rms[i] / rms[i + 1] if rms[i + 1] > 0 else float("inf") for i in range(levels - 1)]
    return {"h": hs, "rms": rms, "ratios": ratios, "excluded": excluded, "max_rms": max(rms)}


def closed_form_ex5(lam: float, mu: float, x0: float, grid: Grid, dw: np.ndarray) -> np.ndarray:
    """x(t) = x0 e^{lam (t - t0)} + mu e^{lam t} sum_n e^{-lam t_n} dw_n (left point sums)."""
    tn = grid.times()[:-1]
    stoch = np.cumsum(np.exp(-lam * tn)[None, :] * dw[:, :, 0], axis=1)
    t = grid.times()[1:]
    out = np.empty((dw.shape[0], grid.steps + 1))
    out[:, 0] = x0
    out[:, 1:] = x0 * np.exp(lam * (t - grid.t0)) + mu * np.exp(lam * t)[None, :] * stoch
    return out


def ex5_system(lam: float, mu: float) -> SdeSystem:
    from fractions import Fraction

    from .expr import Const, SymbolTable, mul

    s = SymbolTable(("x",), "t", ("w",))
    return SdeSystem(s, [mul(Const(Fraction(lam)), Sym("x"))], [[Const(Fraction(mu))]])


def closed_form_check_ex5(lam: float = 1.0, mu: float = 1.0, x0: float = 1.0, grid: Grid = None,
                          paths: int = 512, seed: int = 42, levels: int = 3) -> dict:
    """RMS gap at final time between the closed form and Euler-Maruyama, per level."""
    grid = grid or Grid.over(1.0, 2.0**-10)
    sys = ex5_system(lam, mu)
    fine = grid.refine(levels - 1)
    dw_fine = wiener_increments(seed, paths, fine.steps, 1, fine.h)
    rms, hs = [], []
    for k in range(levels):
        g = grid.refine(k)
        dw = coarsen(dw_fine, levels - 1 - k)
        b = simulate(sys, [x0], g, paths, seed, dw)
        exact = closed_form_ex5(lam, mu, x0, g, dw)
        rms.append(float(np.sqrt(((b.states[:, -1, 0] - exact[:, -1]) ** 2).mean())))
        hs.append(g.h)
    ratios = [rms[i] / rms[i + 1] if rms[i + 1] > 0 else float("inf") for i in range(levels - 1)]
    return {"h": hs, "rms": rms, "ratios": ratios}


def scaling_coherence_check(sys: SdeSystem, mapped: SdeSystem, G: np.ndarray, init, grid: Grid,
                            paths: int = 512, seed: int = 42, levels: int = 3,
                            params: Optional[dict] = None) -> dict:
    """Compare paths of ``mapped`` started at G x0 with G times paths of ``sys``,
    both driven by the same realization."""
    G = np.atleast_2d(np.asarray(G, dtype=float))
    init = np.atleast_1d(np.asarray(init, dtype=float))
    fine = grid.refine(levels - 1)
    dw_fine = wiener_increments(seed, paths, fine.steps, sys.m, fine.h)
    rms, hs = [], []
    for k in range(levels):
        g = grid.refine(k)
        dw = coarsen(dw_fine, levels - 1 - k)
        a = simulate(sys, init, g, paths, seed, dw, params)
        b = simulate(mapped, G @ init, g, paths, seed, dw, params)
        ok = a.valid & b.valid
        diff = b.states[:, -1, :] - a.states[:, -1, :] @ G.T
        rms.append(float(np.sqrt((diff[ok] ** 2).sum(axis=1).mean())))
        hs.append(g.h)
    return {"h": hs, "rms": rms}


def rms_decreasing(rms, floor: float = 1e-12) -> bool:
    """Non-increasing errors under refinement, or errors at rounding level."""
    if max(rms) <= floor:
        return True
    return all(b < a or b <= floor for a, b in zip(rms, rms[1:]))


def export_csv(batch: PathBatch, path) -> None:
    times = batch.grid.times()
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["path", "step", "t", *batch.var_names, *batch.noise_names])
        for p in range(batch.paths):
            for s in range(batch.grid.steps + 1):
                wr.writerow([p, s, repr(float(times[s])),
                             *(repr(float(v)) for v in batch.states[p, s]),
                             *(repr(float(v)) for v in batch.w[p, s])])


def export_npz(batch: PathBatch, path) -> None:
    np.savez(path, t=batch.grid.times(), states=batch.states, w=batch.w,
             increments=batch.increments, valid=batch.valid,
             var_names=np.array(batch.var_names), noise_names=np.array(batch.noise_names),
             seed=np.array(batch.seed))


def summary(batch: PathBatch) -> dict:
    fin = batch.states[batch.valid, -1, :]
    k = fin.shape[0]
    mean = fin.mean(axis=0)
    sd = fin.std(axis=0, ddof=1) if k > 1 else np.zeros_like(mean)
    return {
        "paths": batch.paths,
        "valid": int(batch.valid.sum()),
        "excluded": batch.excluded,
        "clipped": int(batch.clipped.sum()) if batch.clipped is not None else 0,
        "t1": batch.grid.t1,
        "mean": {v: float(mu) for v, mu in zip(batch.var_names, mean)},
        "stderr": {v: float(s / math.sqrt(max(k, 1))) for v, s in zip(batch.var_names, sd)},
    }
