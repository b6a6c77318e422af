"""Searching the lattice of context-bag subsets for the best configuration.

The search starts from the full candidate pool and walks down the subset
lattice, keeping every child that scores at least as well as the parent it
came from (a conservative beam over a DAG of configurations). A greedy
variant keeps only the single best child per level, and an exhaustive oracle
enumerates every nonempty subset for small pools.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.2
EXHAUSTIVE_GUARD = 12

# conjlr and conjll are distinct pool members, but a configuration holding
# both reports them as the single merged label below.
CONJ_PAIR = frozenset(("conjlr", "conjll"))
CONJ_MERGED = "conj"


class SearchInfeasibleError(RuntimeError):
    """No bag reaches the pool threshold; carries the per-bag fitness table."""

    def __init__(self, per_bag_fitness: dict[str, float], threshold: float):
        self.per_bag_fitness = dict(per_bag_fitness)
        self.threshold = threshold
        table = ", ".join(f"{b}={v:.3f}" for b, v in sorted(per_bag_fitness.items()))
        super().__init__(f"no context bag reaches fitness threshold {threshold}: {table}")


@dataclass(frozen=True)
class Configuration:
    """A nonempty set of context-bag labels, identified by its canonical form."""

    bags: frozenset[str]

    def __post_init__(self):
        if not self.bags:
            raise ValueError("a configuration must contain at least one bag")

    @property
    def canonical(self) -> str:
        """Unique sorted "a+b+c" form, with conjlr+conjll merged to "conj"."""
        labels = set(self.bags)
        if CONJ_PAIR <= labels:
            labels -= CONJ_PAIR
            labels.add(CONJ_MERGED)
        return "+".join(sorted(labels))

    @property
    def size(self) -> int:
        return len(self.bags)

    def sort_key(self) -> tuple[int, str]:
        return (self.size, self.canonical)

    def children(self) -> Iterator["Configuration"]:
        """All configurations one bag smaller, in deterministic order."""
        if self.size <= 1:
            return
        for bag in sorted(self.bags):
            yield Configuration(self.bags - {bag})

    @classmethod
    def from_bags(cls, bags: Iterable[str]) -> "Configuration":
        return cls(frozenset(bags))

    @classmethod
    def from_string(cls, canonical: str) -> "Configuration":
        labels = set(canonical.split("+"))
        if CONJ_MERGED in labels:
            labels.discard(CONJ_MERGED)
            labels |= CONJ_PAIR
        return cls(frozenset(labels))

    def __str__(self) -> str:
        return self.canonical


@dataclass(frozen=True)
class ConfigurationSpace:
    """The full bag inventory, the threshold-passing pool, and its fitnesses."""

    all_bags: tuple[str, ...]
    pool: tuple[str, ...]
    threshold: float = DEFAULT_THRESHOLD
    per_bag_fitness: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        unknown = set(self.pool) - set(self.all_bags)
        if unknown:
            raise ValueError(f"pool bags not in all_bags: {sorted(unknown)}")

    @property
    def M(self) -> int:
        return len(self.all_bags)

    @property
    def K(self) -> int:
        return len(self.pool)


def build_pool(
    per_bag_fitness: dict[str, float],
    threshold: float = DEFAULT_THRESHOLD,
    all_bags: Iterable[str] | None = None,
) -> ConfigurationSpace:
    """Keep the bags whose standalone fitness reaches the threshold.

    Every bag needs a fitness value (one 1-set evaluation each); an empty
    pool raises :class:`SearchInfeasibleError` carrying the full table.
    """
    bags = tuple(sorted(all_bags)) if all_bags is not None else tuple(sorted(per_bag_fitness))
    missing = [b for b in bags if b not in per_bag_fitness]
    if missing:
        raise KeyError(f"missing per-bag fitness for: {', '.join(missing)}")
    pool = tuple(b for b in bags if per_bag_fitness[b] >= threshold)
    if not pool:
        raise SearchInfeasibleError(per_bag_fitness, threshold)
    return ConfigurationSpace(
        all_bags=bags,
        pool=pool,
        threshold=threshold,
        per_bag_fitness={b: per_bag_fitness[b] for b in bags},
    )


@dataclass
class TraceEntry:
    canonical: str
    level: int
    fitness: float
    status: str
    origin: str | None = None


class SearchTrace:
    """Ordered log of evaluated configurations; no configuration repeats."""

    def __init__(self):
        self.entries: list[TraceEntry] = []
        self._by_canonical: dict[str, TraceEntry] = {}

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[TraceEntry]:
        return iter(self.entries)

    def get(self, canonical: str) -> TraceEntry | None:
        return self._by_canonical.get(canonical)

    def record(
        self,
        config: Configuration,
        fitness: float,
        status: str,
        origin: str | None = None,
    ) -> TraceEntry:
        """Add a new entry, or restamp status/origin if the config reappears.

        A 1-set evaluated during pool construction may be revisited as a
        descent child; it keeps a single entry.
        """
        entry = self._by_canonical.get(config.canonical)
        if entry is None:
            entry = TraceEntry(config.canonical, config.size, fitness, status, origin)
            self.entries.append(entry)
            self._by_canonical[config.canonical] = entry
        else:
            entry.status = status
            entry.origin = origin
        return entry

    def to_tsv(self, path: str | Path) -> None:
        lines = ["configuration\tlevel\tfitness\tstatus\torigin"]
        for e in self.entries:
            lines.append(
                f"{e.canonical}\t{e.level}\t{e.fitness!r}\t{e.status}\t{e.origin or '-'}"
            )
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


class MemoizedFitness:
    """Memoizing wrapper so no configuration is ever evaluated twice per run."""

    def __init__(self, fn: Callable[[Configuration], float]):
        self._fn = fn
        self.cache: dict[str, float] = {}
        self.evaluations: list[str] = []

    def seed(self, config: Configuration, fitness: float) -> None:
        self.cache.setdefault(config.canonical, fitness)

    def __call__(self, config: Configuration) -> float:
        key = config.canonical
        if key not in self.cache:
            try:
                value = float(self._fn(config))
            except Exception as exc:
                raise RuntimeError(f"fitness evaluation failed for {key}: {exc}") from exc
            self.cache[key] = value
            self.evaluations.append(key)
        return self.cache[key]


def _as_memo(fitness_fn) -> MemoizedFitness:
    if isinstance(fitness_fn, MemoizedFitness):
        return fitness_fn
    return MemoizedFitness(fitness_fn)


def _seed_pool_entries(
    space: ConfigurationSpace, memo: MemoizedFitness, trace: SearchTrace
) -> None:
    """Log the per-bag evaluations behind pool construction and warm the memo."""
    pool = set(space.pool)
    for bag in space.all_bags:
        single = Configuration.from_bags([bag])
        if bag in space.per_bag_fitness:
            memo.seed(single, space.per_bag_fitness[bag])
        if bag in pool:
            trace.record(single, memo(single), "pool")
        elif bag in space.per_bag_fitness:
            trace.record(single, space.per_bag_fitness[bag], "pool-excluded")


def _argmax_entry(trace: SearchTrace) -> TraceEntry:
    candidates = [e for e in trace.entries if e.status != "pool-excluded"]
    return min(candidates, key=lambda e: (-e.fitness, e.level, e.canonical))


def best_configuration_search(
    space: ConfigurationSpace,
    fitness_fn,
    follow_best_when_worse: bool = False,
) -> tuple[Configuration, SearchTrace]:
    """Conservative top-down beam over the subset lattice.

    Starting from the full pool configuration, each level keeps every child
    (origin minus one bag) whose fitness is at least its origin's; children
    are deduplicated by canonical form before evaluation. The returned best
    is the argmax over everything evaluated, the pool 1-sets included; ties
    break toward smaller, then lexicographically earlier configurations.

    ``follow_best_when_worse`` switches to the non-conservative variant that
    descends through the best-scoring child even when no child matches its
    origin.
    """
    memo = _as_memo(fitness_fn)
    trace = SearchTrace()
    _seed_pool_entries(space, memo, trace)

    root = Configuration.from_bags(space.pool)
    trace.record(root, memo(root), "root")
    frontier = [root]
    level = root.size

    while level > 1 and frontier:
        edges: dict[str, tuple[Configuration, list[Configuration]]] = {}
        for origin in sorted(frontier, key=lambda c: c.canonical):
            for child in origin.children():
                key = child.canonical
                if key in edges:
                    edges[key][1].append(origin)
                else:
                    edges[key] = (child, [origin])
        next_frontier = []
        level_children = []
        for key in sorted(edges):
            child, origins = edges[key]
            child_fitness = memo(child)
            level_children.append((child, child_fitness, origins))
            qualifying = [o for o in origins if child_fitness >= memo(o)]
            if qualifying:
                trace.record(child, child_fitness, "kept", qualifying[0].canonical)
                next_frontier.append(child)
            else:
                trace.record(child, child_fitness, "pruned", origins[0].canonical)
        if not next_frontier and follow_best_when_worse and level_children:
            forced = min(level_children, key=lambda it: (-it[1], it[0].sort_key()))
            trace.record(forced[0], forced[1], "kept-forced", forced[2][0].canonical)
            next_frontier = [forced[0]]
        frontier = next_frontier
        level -= 1

    best_entry = _argmax_entry(trace)
    best = Configuration.from_string(best_entry.canonical)
    trace.record(best, best_entry.fitness, "best", best_entry.origin)
    logger.info("search done: best %s (fitness %.4f)", best_entry.canonical, best_entry.fitness)
    return best, trace


def greedy_search(
    space: ConfigurationSpace, fitness_fn
) -> tuple[Configuration, SearchTrace]:
    """Like the beam descent, but at most one configuration survives per level."""
    memo = _as_memo(fitness_fn)
    trace = SearchTrace()
    _seed_pool_entries(space, memo, trace)

    current = Configuration.from_bags(space.pool)
    trace.record(current, memo(current), "root")

    while current.size > 1:
        current_fitness = memo(current)
        scored = [(child, memo(child)) for child in current.children()]
        best_child, best_fitness = min(scored, key=lambda it: (-it[1], it[0].sort_key()))
        for child, child_fitness in scored:
            if child is best_child and child_fitness >= current_fitness:
                trace.record(child, child_fitness, "kept", current.canonical)
            else:
                trace.record(child, child_fitness, "pruned", current.canonical)
        if best_fitness < current_fitness:
            break
        current = best_child

    best_entry = _argmax_entry(trace)
    best = Configuration.from_string(best_entry.canonical)
    trace.record(best, best_entry.fitness, "best", best_entry.origin)
    return best, trace


def exhaustive_search(
    space: ConfigurationSpace,
    fitness_fn,
    max_pool: int = EXHAUSTIVE_GUARD,
    force: bool = False,
) -> tuple[Configuration, SearchTrace]:
    """Evaluate every nonempty subset of the pool; the true optimum, small pools only."""
    if space.K > max_pool and not force:
        raise ValueError(
            f"exhaustive search over K={space.K} means {2 ** space.K - 1} evaluations; "
            f"pass force=True to override the K<={max_pool} guard"
        )
    memo = _as_memo(fitness_fn)
    trace = SearchTrace()
    _seed_pool_entries(space, memo, trace)
    pool = sorted(space.pool)
    for size in range(1, len(pool) + 1):
        for combo in itertools.combinations(pool, size):
            config = Configuration.from_bags(combo)
            trace.record(config, memo(config), "visited")
    best_entry = _argmax_entry(trace)
    best = Configuration.from_string(best_entry.canonical)
    trace.record(best, best_entry.fitness, "best", best_entry.origin)
    return best, trace


def count_space(M: int, K: int) -> int:
    """Configurations the full protocol considers: every pool subset plus the
    non-pool 1-sets that still needed a probe evaluation."""
    if not 0 <= K <= M:
        raise ValueError(f"need 0 <= K <= M, got M={M}, K={K}")
    return (2**K - 1) + (M - K)


@dataclass
class CacheRecord:
    rho: float
    wall_time: float
    pair_count: int


class FitnessCache:
    """Append-only persistent map (configuration canonical form, fold) -> rho.

    Records are write-once: a second put for an existing key is ignored, so
    reruns always see the original value. Wall time and pair count ride along
    for reporting.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._records: dict[tuple[str, str], CacheRecord] = {}
        if self.path.exists():
            self._load()

    def _load(self) -> None:
        for line_no, line in enumerate(
            self.path.read_text(encoding="utf-8").splitlines(), start=1
        ):
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 5:
                raise ValueError(f"{self.path}:{line_no}: expected 5 fields")
            canonical, fold, rho, wall, pairs = fields
            self._records.setdefault(
                (canonical, fold), CacheRecord(float(rho), float(wall), int(pairs))
            )

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, key: tuple[str, str]) -> bool:
        return key in self._records

    def get(self, canonical: str, fold: str) -> CacheRecord | None:
        return self._records.get((canonical, fold))

    def put(
        self, canonical: str, fold: str, rho: float, wall_time: float, pair_count: int
    ) -> CacheRecord:
        key = (canonical, fold)
        existing = self._records.get(key)
        if existing is not None:
            logger.debug("cache hit for %s/%s; keeping original record", canonical, fold)
            return existing
        record = CacheRecord(rho, wall_time, pair_count)
        self._records[key] = record
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as f:
            f.write(f"{canonical}\t{fold}\t{rho!r}\t{wall_time:.3f}\t{pair_count}\n")
        return record

    def records(self) -> dict[tuple[str, str], CacheRecord]:
        return dict(self._records)
