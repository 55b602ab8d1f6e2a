"""Binary particle swarm optimizer.

Particles carry real velocities that a transfer function maps to bit-change
probabilities: the s-shaped variant samples each bit from the sigmoid of
its velocity, the v-shaped variant flips the current bit with probability
|tanh(v)|. Every particle owns an RNG stream derived from the master seed,
so evaluation order (or any future parallel evaluation) cannot change a
run's trajectory; pbest/gbest reductions always happen in ascending
particle order.

A step evaluates the current positions, folds the results into the
personal/global bests, then moves the swarm. The global best cost is
therefore exactly non-increasing over steps. Evaluations are memoized on a
canonical key supplied by the evaluator (for antenna problems: the
post-repair bit pattern, so phenotypically identical particles share one
field-solver run).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import PixelGrid, repair_floating

__all__ = [
    "S_SHAPED",
    "V_SHAPED",
    "SwarmConfig",
    "CostSpec",
    "Particle",
    "EvalCache",
    "FunctionEvaluator",
    "AntennaEvaluator",
    "Swarm",
    "HistoryRow",
    "OptResult",
    "transfer",
    "velocity_update",
    "position_update",
    "hinge_cost",
    "evaluate_cost",
    "run",
]

S_SHAPED = "s-shaped"
V_SHAPED = "v-shaped"

INF = float("inf")


def transfer(v, kind: str):
    """Velocity -> probability in [0, 1]."""
    v = np.asarray(v, dtype=float)
    if kind == S_SHAPED:
        out = 1.0 / (1.0 + np.exp(-v))
    elif kind == V_SHAPED:
        out = np.abs(np.tanh(v))
    else:
        raise ValueError(f"unknown transfer kind {kind!r}")
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SwarmConfig:
    n_particles: int = 30
    n_iters: int = 200
    w_start: float = 0.9
    w_end: float = 0.4
    c1: float = 2.0
    c2: float = 2.0
    v_max: float = 6.0
    transfer: str = S_SHAPED
    seed: int = 0

    def __post_init__(self):
        if self.n_particles < 2:
            raise ValueError(f"need >= 2 particles, got {self.n_particles}")
        if self.n_iters < 0:
            raise ValueError(f"n_iters must be >= 0, got {self.n_iters}")
        if self.v_max <= 0:
            raise ValueError(f"v_max must be > 0, got {self.v_max}")
        if self.w_start <= 0 or self.w_end <= 0:
            raise ValueError("inertia weights must be > 0")
        if self.transfer not in (S_SHAPED, V_SHAPED):
            raise ValueError(f"transfer must be {S_SHAPED!r} or {V_SHAPED!r}")

    def inertia(self, it: int) -> float:
        """Linear schedule over steps 1..n_iters."""
        if self.n_iters <= 1:
            return self.w_start
        t = (it - 1) / (self.n_iters - 1)
        return self.w_start + (self.w_end - self.w_start) * min(max(t, 0.0), 1.0)


@dataclass(frozen=True)
class CostSpec:
    """Two-goal hinge objective: reflection at the design frequency and
    element isolation. Zero cost iff both targets are met."""

    f0: float = 5.4e9
    t_match_db: float = -10.0
    t_iso_db: float = -40.0
    alpha: float = 1.0
    beta: float = 1.0
    band: tuple = (3e9, 8e9)

    def __post_init__(self):
        if self.t_match_db >= 0:
            raise ValueError("match target must be negative dB")
        if self.t_iso_db >= self.t_match_db:
            raise ValueError("isolation target must be below the match target")
        if self.alpha < 0 or self.beta < 0 or (self.alpha == 0 and self.beta == 0):
            raise ValueError("weights must be >= 0 and not both zero")
        if not self.band[0] < self.f0 < self.band[1]:
            raise ValueError(f"f0 {self.f0} outside band {self.band}")


def hinge_cost(s11_db: float, s21_db: float, spec: CostSpec) -> float:
    return spec.alpha * max(0.0, s11_db - spec.t_match_db) \
        + spec.beta * max(0.0, s21_db - spec.t_iso_db)


@dataclass
class Particle:
    position: np.ndarray       # uint8 bits
    velocity: np.ndarray       # float per bit
    pbest_position: np.ndarray
    pbest_cost: float
    pbest_s11: float
    pbest_s21: float
    stream_id: int
    rng: np.random.Generator


def velocity_update(velocity, position, pbest, gbest, w, c1, c2, r1, r2, v_max):
    """Clamped inertial + cognitive + social update; r1/r2 are the per-bit
    uniforms drawn from the particle's own stream."""
    x = position.astype(float)
    v = w * velocity + c1 * r1 * (pbest.astype(float) - x) + c2 * r2 * (gbest.astype(float) - x)
    return np.clip(v, -v_max, v_max)


def position_update(position, velocity, kind: str, r):
    """S-shaped: set each bit by sampling its sigmoid probability.
    V-shaped: flip each bit with probability |tanh(v)|."""
    prob = transfer(velocity, kind)
    if kind == S_SHAPED:
        return (r < prob).astype(np.uint8)
    flip = r < prob
    out = position.copy()
    out[flip] ^= 1
    return out


# ---------------------------------------------------------------------------
# evaluators
# ---------------------------------------------------------------------------

class FunctionEvaluator:
    """Plain bit-vector objective for calibration problems; the canonical
    key is the raw bit pattern."""

    def __init__(self, n_bits: int, fn):
        self.n_bits = n_bits
        self.fn = fn

    def canonical_key(self, bits: np.ndarray) -> str:
        return "".join("1" if b else "0" for b in bits)

    def evaluate(self, bits: np.ndarray):
        return float(self.fn(bits)), math.nan, math.nan


class AntennaEvaluator:
    """Bit vector -> pixel pair -> two-port response -> hinge cost.

    The searchable bits exclude the feed cell (it is always metal); in the
    default symmetric mode one bit pattern serves both elements, in
    asymmetric mode the vector concatenates independent element patterns.
    ``pair_fn`` maps two repaired grids to an SParamSet-like object.
    """

    def __init__(self, nx: int, ny: int, pitch: float, feed: tuple[int, int],
                 costspec: CostSpec, pair_fn, asymmetric: bool = False):
        self.nx, self.ny, self.pitch = nx, ny, pitch
        self.feed = (int(feed[0]), int(feed[1]))
        self.costspec = costspec
        self.pair_fn = pair_fn
        self.asymmetric = asymmetric
        bits_per_element = nx * ny - 1
        self.n_bits = 2 * bits_per_element if asymmetric else bits_per_element

    def _decode_one(self, bits: np.ndarray) -> PixelGrid:
        fx, fy = self.feed
        full = np.insert(np.asarray(bits, dtype=np.uint8), fy * self.nx + fx, 1)
        g = PixelGrid(self.nx, self.ny, full, self.pitch, self.feed)
        return repair_floating(g)

    def decode(self, bits: np.ndarray) -> tuple[PixelGrid, PixelGrid]:
        """Repaired element pair for a position vector."""
        if self.asymmetric:
            half = self.n_bits // 2
            return self._decode_one(bits[:half]), self._decode_one(bits[half:])
        g = self._decode_one(bits)
        return g, g

    def canonical_key(self, bits: np.ndarray) -> str:
        a, b = self.decode(bits)
        return a.bitstring() if not self.asymmetric else a.bitstring() + ":" + b.bitstring()

    def grids_from_key(self, key: str) -> tuple[PixelGrid, PixelGrid]:
        """Element pair for a canonical key (the full post-repair patterns,
        e.g. an OptResult's best_key or a history row's gbest_key)."""
        parts = key.split(":")
        grids = [PixelGrid(self.nx, self.ny,
                           np.frombuffer(p.encode(), dtype=np.uint8) - ord("0"),
                           self.pitch, self.feed)
                 for p in parts]
        if len(grids) == 1:
            return grids[0], grids[0]
        return grids[0], grids[1]

    def evaluate(self, bits: np.ndarray):
        a, b = self.decode(bits)
        sset = self.pair_fn(a, b)
        s11 = sset.s11_db_at(self.costspec.f0)
        s21 = sset.s21_db_at(self.costspec.f0)
        return hinge_cost(s11, s21, self.costspec), s11, s21


def evaluate_cost(bits: np.ndarray, costspec: CostSpec,
                  evaluator: AntennaEvaluator) -> tuple[float, float, float]:
    """Cost triple (J, S11dB(f0), S21dB(f0)) for one bit vector.

    ``evaluator`` holds the grid geometry and the pair function (field
    pipeline or a test stub); ``costspec`` overrides its objective when it
    differs, e.g. to rescore one design against other targets.
    """
    if costspec != evaluator.costspec:
        evaluator = AntennaEvaluator(evaluator.nx, evaluator.ny, evaluator.pitch,
                                     evaluator.feed, costspec, evaluator.pair_fn,
                                     evaluator.asymmetric)
    return evaluator.evaluate(bits)


class EvalCache:
    """Memo table over an evaluator's canonical keys with hit/miss counters.

    A lookup returns exactly the stored triple, so cached results are
    byte-identical to recomputation (the evaluator must be deterministic).
    Failed evaluations are not cached.
    """

    def __init__(self, evaluator):
        self.evaluator = evaluator
        self.n_bits = evaluator.n_bits
        self.memo: dict[str, tuple[float, float, float]] = {}
        self.hits = 0
        self.misses = 0

    def canonical_key(self, bits: np.ndarray) -> str:
        return self.evaluator.canonical_key(bits)

    def evaluate(self, bits: np.ndarray):
        key = self.canonical_key(bits)
        hit = self.memo.get(key)
        if hit is not None:
            self.hits += 1
            return hit
        self.misses += 1
        result = tuple(float(x) for x in self.evaluator.evaluate(bits))
        self.memo[key] = result
        return result

    @property
    def hit_rate(self) -> float:
        total = self.hits + self.misses
        return self.hits / total if total else 0.0


# ---------------------------------------------------------------------------
# swarm
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HistoryRow:
    iteration: int
    gbest_cost: float
    s11_db: float
    s21_db: float
    cache_hit_rate: float
    gbest_key: str


@dataclass(frozen=True)
class OptResult:
    best_key: str              # post-repair canonical bit pattern
    best_cost: float
    best_s11_db: float
    best_s21_db: float
    history: tuple
    evaluations: int
    cache_hit_rate: float


class EvaluationFailure(RuntimeError):
    """Recorded when the evaluator raised; the particle keeps its pbest."""


class Swarm:
    STATE_VERSION = 1

    def __init__(self, config: SwarmConfig, evaluator, *, _restore: bool = False):
        self.config = config
        self.cache = evaluator if isinstance(evaluator, EvalCache) else EvalCache(evaluator)
        self.n_bits = self.cache.n_bits
        self.iteration = 0
        self.history: list[HistoryRow] = []
        self.gbest_position: np.ndarray | None = None
        self.gbest_cost = INF
        self.gbest_s11 = math.nan
        self.gbest_s21 = math.nan
        self.gbest_key = ""
        self.failures: list[tuple[int, int, str]] = []   # (iteration, particle, message)
        self.particles: list[Particle] = []
        if _restore:
            return
        seeds = np.random.SeedSequence(config.seed).spawn(config.n_particles)
        for sid in range(config.n_particles):
            rng = np.random.Generator(np.random.PCG64(seeds[sid]))
            position = (rng.random(self.n_bits) < 0.5).astype(np.uint8)
            self.particles.append(Particle(
                position=position,
                velocity=np.zeros(self.n_bits),
                pbest_position=position.copy(),
                pbest_cost=INF,
                pbest_s11=math.nan,
                pbest_s21=math.nan,
                stream_id=sid,
                rng=rng,
            ))

    # -- evaluation + best bookkeeping ------------------------------------

    def _evaluate_all(self) -> None:
        results = []
        for q, p in enumerate(self.particles):
            try:
                results.append(self.cache.evaluate(p.position))
            except Exception as exc:   # evaluator failure: +inf sentinel
                if getattr(exc, "fatal_to_run", False):
                    raise
                self.failures.append((self.iteration + 1, q, str(exc)))
                results.append((INF, math.nan, math.nan))
        # reduction in ascending particle order, after all evaluations
        for p, (cost, s11, s21) in zip(self.particles, results):
            if cost < p.pbest_cost:
                p.pbest_cost = cost
                p.pbest_s11 = s11
                p.pbest_s21 = s21
                p.pbest_position = p.position.copy()
            if cost < self.gbest_cost:
                self.gbest_cost = cost
                self.gbest_s11 = s11
                self.gbest_s21 = s21
                self.gbest_position = p.position.copy()
                self.gbest_key = self.cache.canonical_key(p.position)

    def _move_all(self, w: float) -> None:
        cfg = self.config
        for p in self.particles:
            r1 = p.rng.random(self.n_bits)
            r2 = p.rng.random(self.n_bits)
            p.velocity = velocity_update(p.velocity, p.position, p.pbest_position,
                                         self.gbest_position, w, cfg.c1, cfg.c2,
                                         r1, r2, cfg.v_max)
            r = p.rng.random(self.n_bits)
            p.position = position_update(p.position, p.velocity, cfg.transfer, r)

    def step(self) -> None:
        """Evaluate current positions, update bests, then move the swarm."""
        self._evaluate_all()
        self.iteration += 1
        self.history.append(HistoryRow(
            iteration=self.iteration,
            gbest_cost=self.gbest_cost,
            s11_db=self.gbest_s11,
            s21_db=self.gbest_s21,
            cache_hit_rate=self.cache.hit_rate,
            gbest_key=self.gbest_key,
        ))
        self._move_all(self.config.inertia(self.iteration))

    def evaluate_only(self) -> None:
        """Degenerate pass for zero-iteration runs: score the population
        without moving it and without a history row."""
        self._evaluate_all()

    def result(self) -> OptResult:
        return OptResult(
            best_key=self.gbest_key,
            best_cost=self.gbest_cost,
            best_s11_db=self.gbest_s11,
            best_s21_db=self.gbest_s21,
            history=tuple(self.history),
            evaluations=self.cache.hits + self.cache.misses,
            cache_hit_rate=self.cache.hit_rate,
        )

    # -- checkpointing ------------------------------------------------------

    @staticmethod
    def _bits_str(bits: np.ndarray) -> str:
        return "".join("1" if b else "0" for b in bits)

    @staticmethod
    def _bits_arr(s: str) -> np.ndarray:
        return np.frombuffer(s.encode(), dtype=np.uint8) - ord("0")

    def state_dict(self) -> dict:
        """JSON-serializable snapshot sufficient for bit-identical resume."""
        cfg = self.config
        return {
            "version": self.STATE_VERSION,
            "config": {
                "n_particles": cfg.n_particles, "n_iters": cfg.n_iters,
                "w_start": cfg.w_start, "w_end": cfg.w_end,
                "c1": cfg.c1, "c2": cfg.c2, "v_max": cfg.v_max,
                "transfer": cfg.transfer, "seed": cfg.seed,
            },
            "n_bits": self.n_bits,
            "iteration": self.iteration,
            "particles": [
                {
                    "position": self._bits_str(p.position),
                    "velocity": [v.hex() for v in p.velocity.tolist()],
                    "pbest_position": self._bits_str(p.pbest_position),
                    "pbest_cost": p.pbest_cost.hex(),
                    "pbest_s11": p.pbest_s11.hex(),
                    "pbest_s21": p.pbest_s21.hex(),
                    "stream_id": p.stream_id,
                    "rng_state": p.rng.bit_generator.state,
                }
                for p in self.particles
            ],
            "gbest": {
                "position": self._bits_str(self.gbest_position)
                if self.gbest_position is not None else None,
                "cost": self.gbest_cost.hex(),
                "s11": self.gbest_s11.hex(),
                "s21": self.gbest_s21.hex(),
                "key": self.gbest_key,
            },
            "history": [
                {
                    "iteration": h.iteration,
                    "gbest_cost": h.gbest_cost.hex(),
                    "s11_db": h.s11_db.hex(),
                    "s21_db": h.s21_db.hex(),
                    "cache_hit_rate": h.cache_hit_rate.hex(),
                    "gbest_key": h.gbest_key,
                }
                for h in self.history
            ],
            "cache": {
                "memo": {k: [v[0].hex(), v[1].hex(), v[2].hex()]
                         for k, v in self.cache.memo.items()},
                "hits": self.cache.hits,
                "misses": self.cache.misses,
            },
            "failures": list(self.failures),
        }

    @classmethod
    def from_state(cls, state: dict, evaluator, config: SwarmConfig | None = None) -> "Swarm":
        """Rebuild a swarm for bit-identical continuation.

        ``config`` may extend ``n_iters`` (continuing a finished run); every
        other setting must match the checkpoint, since changing them would
        silently alter the already-taken trajectory's meaning.
        """
        if state.get("version") != cls.STATE_VERSION:
            raise ValueError(f"unsupported checkpoint version {state.get('version')!r}")
        stored = SwarmConfig(**state["config"])
        if config is None:
            config = stored
        else:
            a = {k: v for k, v in stored.__dict__.items() if k != "n_iters"}
            b = {k: v for k, v in config.__dict__.items() if k != "n_iters"}
            if a != b:
                diff = sorted(k for k in a if a[k] != b[k])
                raise ValueError(f"checkpoint swarm settings differ from the "
                                 f"requested config: {diff}")
        swarm = cls(config, evaluator, _restore=True)
        if swarm.cache.n_bits != state["n_bits"]:
            raise ValueError(f"checkpoint has {state['n_bits']} bits, "
                             f"evaluator expects {swarm.cache.n_bits}")
        swarm.iteration = state["iteration"]
        fh = float.fromhex
        for rec in state["particles"]:
            rng = np.random.Generator(np.random.PCG64())
            rng.bit_generator.state = rec["rng_state"]
            swarm.particles.append(Particle(
                position=cls._bits_arr(rec["position"]),
                velocity=np.array([fh(v) for v in rec["velocity"]]),
                pbest_position=cls._bits_arr(rec["pbest_position"]),
                pbest_cost=fh(rec["pbest_cost"]),
                pbest_s11=fh(rec["pbest_s11"]),
                pbest_s21=fh(rec["pbest_s21"]),
                stream_id=rec["stream_id"],
                rng=rng,
            ))
        g = state["gbest"]
        swarm.gbest_position = cls._bits_arr(g["position"]) if g["position"] is not None else None
        swarm.gbest_cost = fh(g["cost"])
        swarm.gbest_s11 = fh(g["s11"])
        swarm.gbest_s21 = fh(g["s21"])
        swarm.gbest_key = g["key"]
        swarm.history = [
            HistoryRow(h["iteration"], fh(h["gbest_cost"]), fh(h["s11_db"]),
                       fh(h["s21_db"]), fh(h["cache_hit_rate"]), h["gbest_key"])
            for h in state["history"]
        ]
        swarm.cache.memo = {k: (fh(v[0]), fh(v[1]), fh(v[2]))
                            for k, v in state["cache"]["memo"].items()}
        swarm.cache.hits = state["cache"]["hits"]
        swarm.cache.misses = state["cache"]["misses"]
        swarm.failures = [tuple(f) for f in state["failures"]]
        return swarm


def run(config: SwarmConfig, evaluator, *, checkpoint_every: int = 0,
        checkpoint_fn=None, swarm: Swarm | None = None) -> OptResult:
    """Execute a full swarm run and return the best design found.

    ``evaluator`` carries the objective (see :class:`AntennaEvaluator` /
    :class:`FunctionEvaluator`); pass a restored ``swarm`` to resume a
    checkpointed run, which continues bit-identically.
    """
    if swarm is None:
        swarm = Swarm(config, evaluator)
    if config.n_iters == 0 and swarm.iteration == 0:
        swarm.evaluate_only()
        return swarm.result()
    while swarm.iteration < config.n_iters:
        swarm.step()
        if checkpoint_every and checkpoint_fn and swarm.iteration % checkpoint_every == 0:
            checkpoint_fn(swarm)
    return swarm.result()
