"""Symbol declarations shared by every expression of a model."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

DEFAULT_DOMAIN = (0.2, 2.0)


@dataclass(frozen=True)
class Param:
    name: str
    lo: float = DEFAULT_DOMAIN[0]
    hi: float = DEFAULT_DOMAIN[1]
    value: Optional[object] = None  # Fraction when fixed

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"parameter {self.name}: empty interval [{self.lo}, {self.hi}]")
        if self.value is not None and not (self.lo <= float(self.value) <= self.hi):
            raise ValueError(f"parameter {self.name}: fixed value {self.value} outside [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class SymbolTable:
    dynamical: tuple = ("x",)
    time: str = "t"
    noises: tuple = ("w",)
    params: tuple = ()
    # sampling domains for variables; anything missing uses DEFAULT_DOMAIN
    domains: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "dynamical", tuple(self.dynamical))
        object.__setattr__(self, "noises", tuple(self.noises))
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "domains", tuple(sorted(dict(self.domains).items())))
        names = self.names()
        if len(set(names)) != len(names):
            dup = sorted({n for n in names if names.count(n) > 1})
            raise ValueError(f"duplicate symbol names: {', '.join(dup)}")
        for n, (lo, hi) in self.domains:
            if not lo < hi:
                raise ValueError(f"domain of {n} is empty")

    def names(self) -> list:
        return list(self.dynamical) + [self.time] + list(self.noises) + [p.name for p in self.params]

    def param(self, name) -> Optional[Param]:
        for p in self.params:
            if p.name == name:
                return p
        return None

    def domain(self, name: str):
        d = dict(self.domains)
        if name in d:
            return d[name]
        p = self.param(name)
        if p is not None:
            return (p.lo, p.hi)
        return DEFAULT_DOMAIN

    def fixed_values(self) -> dict:
        return {p.name: p.value for p in self.params if p.value is not None}

    @property
    def n(self) -> int:
        return len(self.dynamical)

    @property
    def m(self) -> int:
        return len(self.noises)

    def with_domains(self, extra: dict) -> "SymbolTable":
        d = dict(self.domains)
        d.update(extra)
        return replace(self, domains=tuple(d.items()))

    def merged(self, other: "SymbolTable") -> "SymbolTable":
        """Union used to compare expressions living in two related models."""
        params = {p.name: p for p in self.params}
        for p in other.params:
            params.setdefault(p.name, p)
        dyn = list(self.dynamical) + [v for v in other.dynamical if v not in self.dynamical and v not in params]
        doms = dict(other.domains)
        doms.update(dict(self.domains))
        return SymbolTable(dyn, self.time, self.noises, tuple(params.values()), tuple(doms.items()))
