"""Binary IRS-element allocation search: genetic algorithm, exhaustive search, baselines."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .channel import ChannelTaps
from .rate import RateEvaluator, RatePair, SystemParams, check_allocation

ES_MAX_ELEMENTS = 24


class TooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 50
    generations: int = 30
    crossover_prob: float = 0.8
    mutation_prob: float | None = None  # None -> 1 / N_irs
    tournament_size: int = 3
    elite_count: int = 2
    rng_seed: int = 0

    def __post_init__(self):
        if self.population_size < 1:
            raise ValueError("population size must be >= 1")
        if self.generations < 0:
            raise ValueError("number of generations must be >= 0")
        if not 0 <= self.crossover_prob <= 1:
            raise ValueError(f"crossover probability must lie in [0, 1], got {self.crossover_prob}")
        if self.mutation_prob is not None and not 0 <= self.mutation_prob <= 1:
            raise ValueError(f"mutation probability must lie in [0, 1], got {self.mutation_prob}")
        if self.tournament_size < 1:
            raise ValueError("tournament size must be >= 1")
        # elite_count == population_size is allowed: it freezes the population
        if not 0 <= self.elite_count <= self.population_size:
            raise ValueError("elite count must lie in [0, population size]")
        if not 0 <= self.rng_seed < 2**64:
            raise ValueError("rng seed must be a 64-bit unsigned integer")

    def mutation_rate(self, n_elements: int) -> float:
        if self.mutation_prob is not None:
            return self.mutation_prob
        return 1.0 / n_elements if n_elements else 0.0

    @property
    def offspring_per_generation(self) -> int:
        return self.population_size - self.elite_count


@dataclass
class OptimizationResult:
    best_allocation: np.ndarray
    best_fitness: float
    fitness_history: list[float] = field(default_factory=list)
    evaluations: int = 0

    @property
    def bits(self) -> str:
        return bits_to_str(self.best_allocation)


def bits_to_str(s) -> str:
    return "".join(str(int(b)) for b in s)


def str_to_bits(text: str) -> np.ndarray:
    text = text.strip()
    if any(c not in "01" for c in text):
        raise ValueError(f"allocation bitstring may contain only 0 and 1: {text!r}")
    return np.array([int(c) for c in text], dtype=np.uint8)


class SecrecyContext:
    """Everything the objective needs: both users' taps, power and system parameters."""

    def __init__(self, taps_bob: ChannelTaps, taps_eve: ChannelTaps, led_power: float,
                 params: SystemParams):
        if taps_bob.n_elements != taps_eve.n_elements:
            raise ValueError("Bob's and Eve's taps come from different panels")
        self.taps_bob = taps_bob
        self.taps_eve = taps_eve
        self.led_power = led_power
        self.params = params
        self.bob = RateEvaluator(taps_bob, params)
        self.eve = RateEvaluator(taps_eve, params)

    @classmethod
    def from_evaluators(cls, bob: RateEvaluator, eve: RateEvaluator, led_power: float):
        """Reuse precomputed evaluators (e.g. across a power sweep)."""
        ctx = cls.__new__(cls)
        ctx.taps_bob, ctx.taps_eve = bob.taps, eve.taps
        ctx.bob, ctx.eve = bob, eve
        ctx.led_power = led_power
        ctx.params = bob.params
        return ctx

    @property
    def n_elements(self) -> int:
        return self.bob.n_elements

    def rate_batch(self, masks: np.ndarray):
        masks = np.atleast_2d(np.asarray(masks, dtype=float))
        return self.bob.rates(masks, self.led_power), self.eve.rates(1.0 - masks, self.led_power)

    def fitness_batch(self, masks: np.ndarray) -> np.ndarray:
        rb, re = self.rate_batch(masks)
        return rb - re

    def rates(self, s) -> RatePair:
        s = check_allocation(s, self.n_elements)
        rb, re = self.rate_batch(s[None, :])
        return RatePair(float(rb[0]), float(re[0]))

    def los_only(self) -> RatePair:
        z = np.zeros((1, self.n_elements))
        return RatePair(float(self.bob.rates(z, self.led_power)[0]),
                        float(self.eve.rates(z, self.led_power)[0]))

    def los_equivalent(self) -> np.ndarray:
        """Allocation that keeps reflected power as low as possible.

        Each element goes to the user who receives less from it; elements a
        user cannot see at all are thereby made irrelevant.
        """
        return (self.taps_bob.nlos_gains <= self.taps_eve.nlos_gains).astype(np.uint8)


def fitness(s, context: SecrecyContext) -> float:
    """Secrecy capacity C_s = R_B - R_E (bit/s) of allocation ``s``."""
    return context.rates(s).secrecy


class _CachedFitness:
    def __init__(self, context: SecrecyContext):
        self.context = context
        self.cache: dict[bytes, float] = {}
        self.calls = 0

    def __call__(self, pop: np.ndarray) -> np.ndarray:
        self.calls += len(pop)
        keys = [row.tobytes() for row in pop]
        pending = {}
        for k, row in zip(keys, pop):
            if k not in self.cache and k not in pending:
                pending[k] = row
        if pending:
            vals = self.context.fitness_batch(np.array(list(pending.values())))
            self.cache.update(zip(pending.keys(), vals.tolist()))
        return np.array([self.cache[k] for k in keys])


def _tournament(rng: np.random.Generator, fit: np.ndarray, size: int) -> int:
    idx = rng.integers(0, fit.size, size=size)
    return int(idx[np.argmax(fit[idx])])


def ga_optimize(config: GaConfig, context: SecrecyContext, inject=None) -> OptimizationResult:
    """Genetic search for the secrecy-maximising allocation.

    The initial population holds the all-Bob, all-Eve and LoS-equivalent
    allocations, any extra ``inject`` vectors, and random vectors for the
    rest.  Each generation: tournament selection, single-point crossover,
    per-bit mutation, evaluation of the offspring, and elitist replacement.
    ``fitness_history[g]`` is the best fitness present in generation g
    (g = 0 is the initial population).
    """
    n = context.n_elements
    rng = np.random.default_rng(config.rng_seed)
    sp = config.population_size
    pm = config.mutation_rate(n)
    evaluate = _CachedFitness(context)

    seeds = [np.ones(n, np.uint8), np.zeros(n, np.uint8), context.los_equivalent()]
    if inject is not None:
        seeds.extend(check_allocation(s, n) for s in inject)
    seeds = seeds[:sp]
    pop = np.empty((sp, n), dtype=np.uint8)
    pop[:len(seeds)] = seeds
    pop[len(seeds):] = rng.integers(0, 2, size=(sp - len(seeds), n), dtype=np.uint8)
    fit = evaluate(pop)

    best_i = int(np.argmax(fit))
    best, best_fit = pop[best_i].copy(), float(fit[best_i])
    history = [best_fit]

    n_off = config.offspring_per_generation
    for _ in range(config.generations):
        children = []
        while len(children) < n_off:
            a = pop[_tournament(rng, fit, config.tournament_size)].copy()
            b = pop[_tournament(rng, fit, config.tournament_size)].copy()
            if n > 1 and rng.random() < config.crossover_prob:
                cut = int(rng.integers(1, n))
                a[cut:], b[cut:] = b[cut:].copy(), a[cut:].copy()
            for c in (a, b):
                c ^= (rng.random(n) < pm).astype(np.uint8)
            children.extend((a, b))
        children = np.array(children[:n_off], dtype=np.uint8).reshape(n_off, n)
        child_fit = evaluate(children)

        elite = np.argsort(-fit, kind="stable")[:config.elite_count]
        pop = np.concatenate([pop[elite], children])
        fit = np.concatenate([fit[elite], child_fit])

        gi = int(np.argmax(fit))
        if fit[gi] > best_fit:
            best, best_fit = pop[gi].copy(), float(fit[gi])
        history.append(float(fit[gi]))

    return OptimizationResult(best, best_fit, history, evaluate.calls)


def exhaustive_search(context: SecrecyContext, max_elements: int = ES_MAX_ELEMENTS) -> OptimizationResult:
    """Evaluate all 2^N allocations; ties go to the smallest binary value (s_1 most significant)."""
    n = context.n_elements
    if n > max_elements:
        raise TooLargeError(
            f"exhaustive search over {n} IRS elements means 2^{n} candidates; "
            f"the limit is {max_elements} elements (use the genetic algorithm instead)")
    total = 1 << n
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    block = 1 << min(n, 12)
    best_val, best_code = -np.inf, 0
    for start in range(0, total, block):
        codes = np.arange(start, min(start + block, total), dtype=np.int64)
        masks = ((codes[:, None] >> shifts) & 1).astype(np.uint8)
        vals = context.fitness_batch(masks)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val, best_code = float(vals[i]), int(codes[i])
    best = ((best_code >> shifts) & 1).astype(np.uint8)
    return OptimizationResult(best, best_val, [best_val], total)


class Baseline(NamedTuple):
    label: str
    allocation: np.ndarray | None  # None: no reflected path for either user
    rates: RatePair

    @property
    def fitness(self) -> float:
        return self.rates.secrecy


def random_allocation(n: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).integers(0, 2, size=n, dtype=np.uint8)


def baselines(context: SecrecyContext, seed: int = 0) -> list[Baseline]:
    n = context.n_elements
    out = [Baseline("los_only", None, context.los_only())]
    for label, s in (("all_bob", np.ones(n, np.uint8)),
                     ("all_eve", np.zeros(n, np.uint8)),
                     ("random", random_allocation(n, seed))):
        out.append(Baseline(label, s, context.rates(s)))
    return out
