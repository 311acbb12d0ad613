"""Seeded random instances with multimodular costs."""

from __future__ import annotations

import random
from fractions import Fraction

from .costs import (CostModel, PiecewiseLinear, Quadratic, SeparableConvex, Table,
                    validate_multimodular)
from .errors import DockAllocError
from .model import Instance

DEFAULT_TABLE_RETRIES = 200


class GenerationError(DockAllocError, ValueError):
    pass


def _rat(rng: random.Random, lo: int, hi: int, dens=(1, 1, 2, 3, 4)) -> Fraction:
    den = rng.choice(dens)
    return Fraction(rng.randint(lo * den, hi * den), den)


def random_convex(rng: random.Random, span: int):
    """A random discretely convex piece: quadratic or piecewise linear."""
    if rng.random() < 0.5:
        a = rng.choice([Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(1), Fraction(2)])
        return Quadratic(a, _rat(rng, -2 * span, span), _rat(rng, 0, 4))
    k = rng.randint(0, 3)
    bps = sorted(rng.sample(range(1, max(span, 2) + 1), min(k, max(span, 1))))
    slopes = sorted(_rat(rng, -4, 4) for _ in range(len(bps) + 1))
    return PiecewiseLinear(tuple(bps), tuple(slopes), _rat(rng, 0, 4))


def random_separable(rng: random.Random, span: int) -> SeparableConvex:
    return SeparableConvex(random_convex(rng, span), random_convex(rng, span), random_convex(rng, span))


def _convex_sequence(rng: random.Random, length: int) -> list[Fraction]:
    """Values g(0..length-1) with nonnegative second differences."""
    slope = _rat(rng, -3, 1)
    vals = [Fraction(0)]
    for _ in range(length - 1):
        vals.append(vals[-1] + slope)
        slope += _rat(rng, 0, 2, dens=(1, 2))
    return vals


def random_table_grid(rng: random.Random, d_max: int, b_max: int, noise: Fraction = Fraction(0)):
    """Sum of multimodular building blocks, optionally perturbed by uniform noise.

    Blocks are convex functions of d, b and d + b plus terms like
    ``w * max(d + b - s, b - t, 0)``, which are multimodular but not separable.
    """
    top = d_max + b_max + 1
    gd = _convex_sequence(rng, top)
    gb = _convex_sequence(rng, top)
    gx = _convex_sequence(rng, top)
    atoms = []
    for _ in range(rng.randint(1, 3)):
        w = _rat(rng, 1, 3, dens=(1, 2))
        s, t = rng.randint(0, top), rng.randint(0, b_max + 1)
        kind = rng.randrange(3)
        if kind == 0:
            atoms.append(lambda d, b, w=w, s=s, t=t: w * max(d + b - s, b - t, 0))
        elif kind == 1:
            atoms.append(lambda d, b, w=w, s=s, t=t: w * max(s - d - b, t - b, 0))
        else:
            atoms.append(lambda d, b, w=w, s=s, t=t: w * max(d + b - s, b - t))
    grid = []
    for d in range(d_max + 1):
        row = []
        for b in range(b_max + 1):
            v = gd[d] + gb[b] + gx[d + b] + sum((f(d, b) for f in atoms), Fraction(0))
            if noise:
                v += Fraction(rng.randint(-12, 12), 12) * noise
            row.append(v)
        grid.append(tuple(row))
    return tuple(grid)


def random_table(rng: random.Random, d_max: int, b_max: int, noise: Fraction = Fraction(0),
                 retries: int = DEFAULT_TABLE_RETRIES) -> Table:
    """Sample grids until one passes the multimodularity validator."""
    for _ in range(retries):
        table = Table(random_table_grid(rng, d_max, b_max, noise))
        if validate_multimodular(CostModel((table,)), 0, (d_max, b_max)) is None:
            return table
    raise GenerationError(f"no multimodular table after {retries} attempts (noise={noise})")


def random_instance(rng: random.Random, n: int, u_max: int, gamma_max: int, family: str,
                    noise: Fraction = Fraction(0), retries: int = DEFAULT_TABLE_RETRIES) -> Instance:
    if n < 1 or u_max < 1 or gamma_max < 0:
        raise GenerationError(f"impossible parameters n={n}, u_max={u_max}, gamma_max={gamma_max}")
    if family not in ("separable_convex", "table"):
        raise GenerationError(f"unknown cost family {family!r}")
    while True:
        u = [rng.randint(1, u_max) for _ in range(n)]
        x_bar = [rng.randint(0, u[i]) for i in range(n)]
        b_bar = [rng.randint(0, x_bar[i]) for i in range(n)]
        d_bar = [x_bar[i] - b_bar[i] for i in range(n)]
        ell = []
        for i in range(n):
            if rng.random() < 0.2:
                ell.append(rng.randint(0, u[i]))
            else:
                ell.append(rng.randint(0, x_bar[i]) if rng.random() < 0.5 else 0)
        # docks that must move just to respect the lower bounds; DR is feasible iff gamma >= shortfall
        shortfall = sum(max(ell[i] - x_bar[i], 0) for i in range(n))
        if sum(ell) <= sum(x_bar) and shortfall <= gamma_max:
            break
    # skewed toward small budgets so that the budget usually binds
    gamma = shortfall + int((gamma_max - shortfall + 1) * rng.random() ** 2)
    B = sum(b_bar)
    if family == "separable_convex":
        stations = tuple(random_separable(rng, u[i]) for i in range(n))
    else:
        stations = tuple(random_table(rng, u[i], min(u[i], B), noise, retries) for i in range(n))
    return Instance(n, tuple(d_bar), tuple(b_bar), tuple(ell), tuple(u), gamma, CostModel(stations))


def gen(seed: int, n: int, u_max: int, gamma_max: int, cost_family: str, count: int,
        noise: Fraction = Fraction(0), retries: int = DEFAULT_TABLE_RETRIES) -> list[Instance]:
    """``count`` instances, deterministic in ``seed``.

    ``cost_family`` may be ``"separable_convex"``, ``"table"`` or ``"mixed"``
    (alternating the two).
    """
    rng = random.Random(seed)
    out = []
    for k in range(count):
        fam = cost_family
        if fam == "mixed":
            fam = "separable_convex" if k % 2 == 0 else "table"
        out.append(random_instance(rng, n, u_max, gamma_max, fam, noise, retries))
    return out
