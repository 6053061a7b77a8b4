"""Pauli-frame simulation of repeated parity-measurement rounds.

The simulator never tracks a quantum state.  It propagates the X/Z flip
record of every qubit (the Pauli frame) through the CNOT schedule, relative
to a noiseless reference run, so a measurement outcome here is the *flip*
of the ideal outcome.  All shots of a batch are propagated together as
``(qubits, shots)`` bit arrays.

Noise locations, in circuit order for each round:

* ``prepare``: after each ancilla preparation, a uniformly random
  non-identity single-qubit Pauli with probability ``eps1``;
* ``cnot``: after each CNOT, one of the 15 non-identity two-qubit Paulis
  with probability ``eps2``;
* ``measure``: the recorded outcome is flipped with probability ``epsm``.

Optionally ``data_flip`` puts an X on each data qubit before the first
round (code-capacity noise).  The final data readout is noiseless.

Randomness: shot ``i`` of a run with master seed ``S`` draws one uniform
per noise location from numpy's Philox4x64-10 keyed by ``shot_seed(S, i)``,
a 64-bit BLAKE2b digest of ``(S, i)``.  A shot's outcome therefore depends
only on ``(S, i)`` and the circuit, never on batching or worker count.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import asdict, dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .codes import CodeSpec
from .errors import DomainError

RNG_ALGORITHM = f"numpy-{np.__version__}:Philox4x64-10/key=blake2b64(master_seed,shot_index)"

_MASK64 = (1 << 64) - 1


def shot_seed(master_seed: int, index: int) -> int:
    """Counter-derived 64-bit seed for shot ``index``."""
    payload = struct.pack("<QQ", master_seed & _MASK64, index & _MASK64)
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


def derive_seed(master_seed: int, *labels: object) -> int:
    """Stable 64-bit sub-seed for a labelled stream (e.g. one sweep cell)."""
    h = hashlib.blake2b(digest_size=8)
    h.update(struct.pack("<Q", master_seed & _MASK64))
    for label in labels:
        h.update(b"\x1f" + repr(label).encode())
    return int.from_bytes(h.digest(), "little")


@dataclass(frozen=True)
class NoiseParams:
    eps1: float = 0.0
    eps2: float = 0.0
    epsm: float = 0.0
    uniform_eps: float | None = None
    data_flip: float = 0.0

    def __post_init__(self):
        if self.uniform_eps is not None:
            for name in ("eps1", "eps2", "epsm"):
                object.__setattr__(self, name, float(self.uniform_eps))
        for name in ("eps1", "eps2", "epsm", "uniform_eps", "data_flip"):
            value = getattr(self, name)
            if value is None:
                continue
            if not (isinstance(value, (int, float)) and 0.0 <= value <= 0.5):
                raise DomainError(f"{name} must be a probability in [0, 0.5], got {value!r}")

    @classmethod
    def uniform(cls, eps: float) -> "NoiseParams":
        return cls(uniform_eps=eps)

    @classmethod
    def code_capacity(cls, eps: float) -> "NoiseParams":
        """X flips on data before the first round only; perfect circuit."""
        return cls(data_flip=eps)

    @property
    def eps(self) -> float | None:
        """The single physical error rate, when the model has one."""
        if self.uniform_eps is not None and self.data_flip == 0:
            return self.uniform_eps
        if self.data_flip and not (self.eps1 or self.eps2 or self.epsm):
            return self.data_flip
        return None

    @property
    def is_noiseless(self) -> bool:
        return not (self.eps1 or self.eps2 or self.epsm or self.data_flip)

    def to_dict(self) -> dict:
        return asdict(self)


class Injection(NamedTuple):
    """A deterministic error applied at the start of ``round``.

    ``pauli`` is ``"X"``, ``"Y"`` or ``"Z"`` on global qubit ``qubit``, or
    ``"M"`` to flip the recorded outcome of ancilla ``qubit`` in ``round``.
    ``round == rounds`` places a Pauli just before the final data readout.
    """

    round: int
    qubit: int
    pauli: str


@dataclass
class PauliFrame:
    x_flips: np.ndarray
    z_flips: np.ndarray

    def __eq__(self, other):
        return (
            isinstance(other, PauliFrame)
            and np.array_equal(self.x_flips, other.x_flips)
            and np.array_equal(self.z_flips, other.z_flips)
        )

    def data_part(self, code: CodeSpec) -> "PauliFrame":
        idx = list(code.data_qubits)
        return PauliFrame(self.x_flips[idx], self.z_flips[idx])


@dataclass
class SyndromeHistory:
    rounds: int
    outcomes: np.ndarray
    detection_events: np.ndarray

    def __eq__(self, other):
        return (
            isinstance(other, SyndromeHistory)
            and self.rounds == other.rounds
            and np.array_equal(self.outcomes, other.outcomes)
            and np.array_equal(self.detection_events, other.detection_events)
        )


@dataclass(eq=True)
class ShotResult:
    syndrome: SyndromeHistory
    true_residual_error: PauliFrame
    seed: int | None


@dataclass
class BatchResult:
    """Outputs of many shots; shot index is the leading axis."""

    outcomes: np.ndarray  # (shots, rounds, n_ancilla)
    detection_events: np.ndarray  # (shots, rounds + 1, n_ancilla)
    residual_x: np.ndarray  # (shots, total_qubits)
    residual_z: np.ndarray

    @property
    def shots(self) -> int:
        return self.outcomes.shape[0]

    def shot(self, i: int, seed: int | None = None) -> ShotResult:
        rounds = self.outcomes.shape[1]
        return ShotResult(
            SyndromeHistory(rounds, self.outcomes[i].copy(), self.detection_events[i].copy()),
            PauliFrame(self.residual_x[i].copy(), self.residual_z[i].copy()),
            seed,
        )


class FaultLocation(NamedTuple):
    kind: str  # data_flip | prepare | cnot | measure
    qubits: tuple[int, ...]
    round: int
    layer: int


_CHOICES = {"data_flip": 1, "prepare": 3, "cnot": 15, "measure": 1}


class Circuit:
    """A code's schedule unrolled over ``rounds`` with its noise locations."""

    def __init__(self, code: CodeSpec, rounds: int, noise: NoiseParams | None = None):
        if isinstance(rounds, bool) or int(rounds) != rounds or rounds < 1:
            raise DomainError(f"rounds must be an integer >= 1, got {rounds!r}")
        self.code = code
        self.rounds = int(rounds)
        self.noise = noise if noise is not None else NoiseParams()
        self._anc_pos = code.ancilla_position()
        self.locations: list[FaultLocation] = []
        rates = []
        self._program: list[tuple] = []

        def add(kind: str, qubits_list, r: int, layer: int, rate: float) -> np.ndarray:
            start = len(self.locations)
            for qs in qubits_list:
                self.locations.append(FaultLocation(kind, tuple(qs), r, layer))
                rates.append(rate)
            return np.arange(start, len(self.locations))

        data = np.array(code.data_qubits)
        if self.noise.data_flip:
            idx = add("data_flip", [(q,) for q in code.data_qubits], 0, -1, self.noise.data_flip)
            self._program.append(("pauli1", idx, data))

        for r in range(self.rounds):
            self._program.append(("inject", r))
            for layer_i, layer in enumerate(code.schedule):
                by_kind: dict[str, list] = {}
                for op in layer:
                    by_kind.setdefault(op.kind, []).append(op)
                for kind, ops in by_kind.items():
                    qs = np.array([op.qubits[0] for op in ops])
                    if kind == "prepare":
                        self._program.append(("reset", qs))
                        if self.noise.eps1:
                            idx = add("prepare", [op.qubits for op in ops], r, layer_i, self.noise.eps1)
                            self._program.append(("pauli1", idx, qs))
                    elif kind == "hadamard":
                        self._program.append(("h", qs))
                        if self.noise.eps1:
                            idx = add("prepare", [op.qubits for op in ops], r, layer_i, self.noise.eps1)
                            self._program.append(("pauli1", idx, qs))
                    elif kind == "cnot":
                        ts = np.array([op.qubits[1] for op in ops])
                        self._program.append(("cnot", qs, ts))
                        if self.noise.eps2:
                            idx = add("cnot", [op.qubits for op in ops], r, layer_i, self.noise.eps2)
                            self._program.append(("pauli2", idx, qs, ts))
                    elif kind == "measure":
                        pos = np.array([self._anc_pos[op.qubits[0]] for op in ops])
                        xbasis = np.array([op.basis == "X" for op in ops])
                        idx = None
                        if self.noise.epsm:
                            idx = add("measure", [op.qubits for op in ops], r, layer_i, self.noise.epsm)
                        self._program.append(("measure", r, qs, pos, xbasis, idx))
                    else:
                        raise DomainError(f"unknown operation {kind!r}")
        self._program.append(("inject", self.rounds))

        self.rates = np.array(rates, dtype=np.float64)
        self.choices = np.array([_CHOICES[loc.kind] for loc in self.locations], dtype=np.int64)
        self._hx = code.parity_check_matrix("X")
        self._hz = code.parity_check_matrix("Z")

    @property
    def n_locations(self) -> int:
        return len(self.locations)

    def sample_faults(self, seeds: Sequence[int]) -> np.ndarray:
        """Fault choices ``(n_locations, shots)``: 0 = none, else 1..choices."""
        L = self.n_locations
        u = np.empty((len(seeds), L), dtype=np.float64)
        for i, s in enumerate(seeds):
            u[i] = np.random.Generator(np.random.Philox(key=s)).random(L)
        u = u.T
        with np.errstate(divide="ignore", invalid="ignore"):
            scaled = np.floor(u / self.rates[:, None] * self.choices[:, None]).astype(np.int64)
        hit = u < self.rates[:, None]
        return np.where(hit, 1 + np.minimum(scaled, self.choices[:, None] - 1), 0).astype(np.uint8)

    def run(self, faults: np.ndarray | None, shots: int | None = None,
            injections: Iterable[Injection] = ()) -> BatchResult:
        """Propagate frames for a batch given explicit fault choices."""
        if faults is None:
            shots = 1 if shots is None else shots
            faults = np.zeros((self.n_locations, shots), dtype=np.uint8)
        shots = faults.shape[1]
        code = self.code
        nq = max(code.coords) + 1
        x = np.zeros((nq, shots), dtype=np.uint8)
        z = np.zeros((nq, shots), dtype=np.uint8)
        outcomes = np.zeros((self.rounds, code.n_ancilla, shots), dtype=np.uint8)

        pending: dict[int, list[Injection]] = {}
        for inj in injections:
            self._validate_injection(inj)
            pending.setdefault(inj.round, []).append(inj)
        meas_flips: dict[tuple[int, int], int] = {}

        for step in self._program:
            kind = step[0]
            if kind == "inject":
                for inj in pending.get(step[1], ()):
                    if inj.pauli == "M":
                        key = (inj.round, self._anc_pos[inj.qubit])
                        meas_flips[key] = meas_flips.get(key, 0) ^ 1
                    else:
                        x[inj.qubit] ^= inj.pauli in "XY"
                        z[inj.qubit] ^= inj.pauli in "ZY"
            elif kind == "reset":
                x[step[1]] = 0
                z[step[1]] = 0
            elif kind == "h":
                qs = step[1]
                x[qs], z[qs] = z[qs].copy(), x[qs].copy()
            elif kind == "cnot":
                c, t = step[1], step[2]
                x[t] ^= x[c]
                z[c] ^= z[t]
            elif kind == "pauli1":
                k = faults[step[1]]
                qs = step[2]
                x[qs] ^= k & 1
                z[qs] ^= (k >> 1) & 1
            elif kind == "pauli2":
                k = faults[step[1]]
                c, t = step[2], step[3]
                x[c] ^= k & 1
                z[c] ^= (k >> 1) & 1
                x[t] ^= (k >> 2) & 1
                z[t] ^= (k >> 3) & 1
            elif kind == "measure":
                r, qs, pos, xbasis, idx = step[1:]
                out = np.where(xbasis[:, None], z[qs], x[qs])
                if idx is not None:
                    out ^= faults[idx] & 1
                outcomes[r, pos] = out
        for (r, a), flip in meas_flips.items():
            outcomes[r, a] ^= flip

        data = list(code.data_qubits)
        final = (self._hz @ x[data] + self._hx @ z[data]) % 2
        det = np.empty((self.rounds + 1, code.n_ancilla, shots), dtype=np.uint8)
        det[0] = outcomes[0]
        det[1:-1] = outcomes[1:] ^ outcomes[:-1]
        det[-1] = final.astype(np.uint8) ^ outcomes[-1]

        all_q = sorted(code.coords)
        return BatchResult(
            outcomes=np.ascontiguousarray(outcomes.transpose(2, 0, 1)),
            detection_events=np.ascontiguousarray(det.transpose(2, 0, 1)),
            residual_x=np.ascontiguousarray(x[all_q].T),
            residual_z=np.ascontiguousarray(z[all_q].T),
        )

    def _validate_injection(self, inj: Injection) -> None:
        if not 0 <= inj.round <= self.rounds:
            raise DomainError(f"injection round {inj.round} outside 0..{self.rounds}")
        if inj.qubit not in self.code.coords:
            raise DomainError(f"qubit {inj.qubit} out of range")
        if inj.pauli == "M":
            if inj.qubit not in self._anc_pos or inj.round >= self.rounds:
                raise DomainError("measurement flips need an ancilla and a measured round")
        elif inj.pauli not in ("X", "Y", "Z"):
            raise DomainError(f"unknown injected Pauli {inj.pauli!r}")

    def run_seeded(self, seeds: Sequence[int]) -> BatchResult:
        return self.run(self.sample_faults(seeds))

    def single_faults(self) -> list[tuple[int, int]]:
        """Every (location, choice) pair with exactly one fault."""
        return [(i, k) for i, c in enumerate(self.choices) for k in range(1, c + 1)]

    def run_single_faults(self, faults: Sequence[tuple[int, int]] | None = None) -> tuple[list, BatchResult]:
        """Run one shot per single fault; ``faults`` defaults to all of them."""
        faults = self.single_faults() if faults is None else list(faults)
        f = np.zeros((self.n_locations, len(faults)), dtype=np.uint8)
        for j, (i, k) in enumerate(faults):
            f[i, j] = k
        return faults, self.run(f)

    def describe(self) -> dict:
        return {
            "rounds": self.rounds,
            "noise": self.noise.to_dict(),
            "n_locations": self.n_locations,
            "rng": RNG_ALGORITHM,
        }


def default_rounds(code: CodeSpec) -> int:
    return code.distance


def run_shot(code: CodeSpec, noise: NoiseParams, rounds: int, seed: int) -> ShotResult:
    """Simulate one memory experiment with ``seed`` as its Philox key."""
    if not isinstance(noise, NoiseParams):
        raise DomainError("noise must be a NoiseParams instance")
    circuit = Circuit(code, rounds, noise)
    return circuit.run_seeded([seed]).shot(0, seed)


def inject_and_run(code: CodeSpec, injections: Iterable[Injection], rounds: int) -> ShotResult:
    """Noiseless run with the given deterministic error insertions."""
    injections = [Injection(*inj) for inj in injections]
    circuit = Circuit(code, rounds, NoiseParams())
    return circuit.run(None, 1, injections).shot(0)
