"""Gate templates for the 4-qubit QCNN: encodings, conv/pool blocks, assembly.

A circuit is a flat list of :class:`Gate` templates. Every parameterized gate
is a Pauli rotation exp(-i angle P / 2) whose angle comes from a slot:

* ``param k``     -- trainable parameter k (shared by every gate naming k)
* ``data i``      -- input feature x[i]
* ``dataprod i,j``-- product x[i] * x[j] (CHE entangling phases)
* ``const v``     -- fixed angle v

Fixed Clifford gates (S, S-dagger, H) are written as constant rotations; they
differ from the textbook gates by a global phase only.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from . import statevec as sv
from .errors import ConfigurationError, ParseError, ShapeError

HALF_PI = np.pi / 2


class EncodingKind(str, enum.Enum):
    TPE = "TPE"
    HEE1 = "HEE1"
    HEE2 = "HEE2"
    CHE = "CHE"


class ConvKind(str, enum.Enum):
    SO4 = "SO4"
    SU4 = "SU4"


CONV_PARAMS = {ConvKind.SO4: 6, ConvKind.SU4: 15}
POOL_PARAMS = 9
HEE_LAYERS = {EncodingKind.HEE1: 1, EncodingKind.HEE2: 2}


def parse_encoding(name) -> EncodingKind:
    if isinstance(name, EncodingKind):
        return name
    try:
        return EncodingKind(str(name).upper())
    except ValueError:
        allowed = ", ".join(e.value for e in EncodingKind)
        raise ConfigurationError(f"unknown encoding {name!r}; allowed: {allowed}") from None


def parse_conv(name) -> ConvKind:
    if isinstance(name, ConvKind):
        return name
    try:
        return ConvKind(str(name).upper())
    except ValueError:
        allowed = ", ".join(c.value for c in ConvKind)
        raise ConfigurationError(f"unknown circuit {name!r}; allowed: {allowed}") from None


@dataclass(frozen=True)
class Gate:
    name: str  # "R" or "CNOT"
    axis: str
    target: int
    control: int | None = None
    slot: str = "none"  # param | data | dataprod | const | none
    index: int | tuple[int, int] | None = None
    value: float | None = None

    @property
    def is_param(self) -> bool:
        return self.slot == "param"

    def qubits(self) -> tuple[int, ...]:
        if self.control is None:
            return (self.target,)
        return (self.control, self.target)


def rot(axis: str, target: int, slot: str, index=None, value=None) -> Gate:
    return Gate("R", axis, target, None, slot, index, value)


def cnot(control: int, target: int) -> Gate:
    return Gate("CNOT", "X", target, control)


def const(axis: str, target: int, angle: float) -> Gate:
    return rot(axis, target, "const", value=float(angle))


def _s(q):
    return const("Z", q, HALF_PI)


def _sdg(q):
    return const("Z", q, -HALF_PI)


def _hadamard(q):
    # H = i R_Y(pi/2) R_Z(pi)
    return [const("Z", q, np.pi), const("Y", q, HALF_PI)]


def composite(q: int, offset: int, middle: str = "Y") -> list[Gate]:
    """R(a, b, c) = R_Z(c) R_mid(b) R_Z(a) on qubit ``q`` with slots offset..offset+2."""
    return [
        rot("Z", q, "param", offset),
        rot(middle, q, "param", offset + 1),
        rot("Z", q, "param", offset + 2),
    ]


# ---------------------------------------------------------------- encodings

def encoding_gates(kind: EncodingKind, num_qubits: int = 4, ring: bool = True) -> list[Gate]:
    kind = parse_encoding(kind)
    n = num_qubits
    if kind is EncodingKind.TPE:
        return [rot("Y", q, "data", q) for q in range(n)]
    if kind in HEE_LAYERS:
        gates = []
        for _ in range(HEE_LAYERS[kind]):
            gates += [rot("Y", q, "data", q) for q in range(n)]
            gates += [cnot(q, q + 1) for q in range(n - 1)]
            if ring and n > 2:
                gates.append(cnot(n - 1, 0))
        return gates
    # CHE: H on every qubit, then exp of single-Z and all-pairs ZZ data terms
    gates = []
    for q in range(n):
        gates += _hadamard(q)
    gates += [rot("Z", q, "data", q) for q in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            gates += [cnot(i, j), rot("Z", j, "dataprod", (i, j)), cnot(i, j)]
    return gates


# ------------------------------------------------------------ conv and pool

def conv_block(kind: ConvKind, pair: tuple[int, int], offset: int = 0) -> list[Gate]:
    """Two-qubit convolutional unitary acting on ``pair`` = (a, b).

    SO4: S x S, R_Y(pi/2) on b, CNOT(b->a), R(.) x R(.), CNOT(b->a),
    R_Y(-pi/2) on b, S^dag x S^dag -- 2 CNOTs, 12 single-qubit gates, 6 slots.

    SU4: R(.) x R(.), CNOT(b->a), R_Z on a, R_Y on b, CNOT(a->b), R_Y on b,
    CNOT(b->a), R(.) x R(.) -- 3 CNOTs, 15 single-qubit gates, 15 slots.
    """
    kind = parse_conv(kind)
    a, b = pair
    if a == b:
        raise ConfigurationError("conv block needs two distinct qubits")
    o = offset
    if kind is ConvKind.SO4:
        return (
            [_s(a), _s(b), const("Y", b, HALF_PI), cnot(b, a)]
            + composite(a, o)
            + composite(b, o + 3)
            + [cnot(b, a), const("Y", b, -HALF_PI), _sdg(a), _sdg(b)]
        )
    return (
        composite(a, o)
        + composite(b, o + 3)
        + [cnot(b, a), rot("Z", a, "param", o + 6), rot("Y", b, "param", o + 7)]
        + [cnot(a, b), rot("Y", b, "param", o + 8), cnot(b, a)]
        + composite(a, o + 9)
        + composite(b, o + 12)
    )


def pool_block(source: int, sink: int, offset: int = 0) -> list[Gate]:
    """R(.) on source, R'(.) on sink, CNOT(source->sink), R(.) on sink."""
    if source == sink:
        raise ConfigurationError("pool block needs distinct source and sink")
    return (
        composite(source, offset)
        + composite(sink, offset + 3, middle="X")
        + [cnot(source, sink)]
        + composite(sink, offset + 6)
    )


def block_matrix(gates: Sequence[Gate], theta: Sequence[float], qubits: Sequence[int]) -> np.ndarray:
    """Dense unitary of a block on its own qubits (ordered as ``qubits``)."""
    theta = np.asarray(theta, dtype=float)
    n_slots = 1 + max((g.index for g in gates if g.is_param), default=-1)
    if theta.shape != (n_slots,):
        raise ShapeError(f"block expects {n_slots} parameters, got {theta.shape}")
    local = {q: i for i, q in enumerate(qubits)}
    n = len(qubits)
    remapped = [replace(g, target=local[g.target],
                        control=None if g.control is None else local[g.control]) for g in gates]
    amps = np.eye(2**n, dtype=complex)
    return _run(remapped, theta, np.zeros(0), amps, n).T


# -------------------------------------------------------------- the circuit

@dataclass(frozen=True)
class CircuitSpec:
    num_qubits: int
    gates: tuple[Gate, ...]
    param_count: int
    measured_qubit: int
    frozen: tuple[tuple[int, float], ...] = ()
    label: str = field(default="", compare=False)

    def __post_init__(self):
        for g in self.gates:
            if g.is_param and not 0 <= g.index < self.param_count:
                raise ConfigurationError(f"parameter slot {g.index} out of range")
            if g.slot == "data" and not 0 <= g.index < self.num_qubits:
                raise ConfigurationError(f"data slot {g.index} out of range")
        for k, _ in self.frozen:
            if not 0 <= k < self.param_count:
                raise ConfigurationError(f"frozen slot {k} out of range")

    @property
    def frozen_values(self) -> dict[int, float]:
        return dict(self.frozen)

    @property
    def frozen_mask(self) -> np.ndarray:
        mask = np.zeros(self.param_count, dtype=bool)
        for k, _ in self.frozen:
            mask[k] = True
        return mask

    @property
    def trainable_slots(self) -> np.ndarray:
        return np.flatnonzero(~self.frozen_mask)

    @property
    def n_trainable(self) -> int:
        return self.param_count - len(self.frozen)

    def full_params(self, theta: Sequence[float]) -> np.ndarray:
        """Full-length parameter vector with frozen values substituted.

        Accepts either all ``param_count`` entries or only the trainable ones.
        """
        theta = np.asarray(theta, dtype=float)
        if theta.shape == (self.param_count,):
            full = theta.copy()
        elif theta.shape == (self.n_trainable,):
            full = np.zeros(self.param_count)
            full[self.trainable_slots] = theta
        else:
            raise ShapeError(
                f"expected {self.param_count} or {self.n_trainable} parameters, got {theta.shape}"
            )
        for k, v in self.frozen:
            full[k] = v
        return full

    def freeze(self, values: dict[int, float]) -> "CircuitSpec":
        merged = self.frozen_values
        merged.update({int(k): float(v) for k, v in values.items()})
        return replace(self, frozen=tuple(sorted(merged.items())))

    def slot_order(self) -> list[int]:
        """Parameter slots in order of first appearance in the gate list."""
        seen, order = set(), []
        for g in self.gates:
            if g.is_param and g.index not in seen:
                seen.add(g.index)
                order.append(g.index)
        return order

    # text round-trip
    def to_text(self) -> str:
        lines = [f"qubits={self.num_qubits} params={self.param_count} measured={self.measured_qubit}"]
        for k, v in self.frozen:
            lines.append(f"FROZEN {k} {v:.17g}")
        for g in self.gates:
            if g.name == "CNOT":
                lines.append(f"CNOT X {g.target} {g.control} none -")
            elif g.slot == "const":
                lines.append(f"R {g.axis} {g.target} const {g.value:.17g}")
            elif g.slot == "dataprod":
                lines.append(f"R {g.axis} {g.target} dataprod {g.index[0]},{g.index[1]}")
            else:
                lines.append(f"R {g.axis} {g.target} {g.slot} {g.index}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "CircuitSpec":
        lines = [ln.strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln and not ln.startswith("#")]
        if not lines:
            raise ParseError("empty circuit file")
        try:
            head = dict(item.split("=") for item in lines[0].split())
            nq, npar, meas = int(head["qubits"]), int(head["params"]), int(head["measured"])
        except (KeyError, ValueError):
            raise ParseError(f"bad header {lines[0]!r}", 1) from None
        gates, frozen = [], []
        for lineno, ln in enumerate(lines[1:], start=2):
            tok = ln.split()
            try:
                if tok[0] == "FROZEN":
                    frozen.append((int(tok[1]), float(tok[2])))
                elif tok[0] == "CNOT":
                    gates.append(cnot(int(tok[3]), int(tok[2])))
                elif tok[0] == "R":
                    axis, target, slot, ref = tok[1], int(tok[2]), tok[3], tok[4]
                    if axis not in sv.PAULI:
                        raise ValueError(axis)
                    if slot == "const":
                        gates.append(const(axis, target, float(ref)))
                    elif slot == "dataprod":
                        i, j = ref.split(",")
                        gates.append(rot(axis, target, slot, (int(i), int(j))))
                    elif slot in ("param", "data"):
                        gates.append(rot(axis, target, slot, int(ref)))
                    else:
                        raise ValueError(slot)
                else:
                    raise ValueError(tok[0])
            except (IndexError, ValueError):
                raise ParseError(f"bad gate line {ln!r}", lineno) from None
        return cls(nq, tuple(gates), npar, meas, tuple(sorted(frozen)))


def build_qcnn(conv: ConvKind, enc: EncodingKind, ring: bool = False) -> CircuitSpec:
    """Encoding + conv/pool layers on 4 qubits, weights shared within a layer.

    Layer 1 convolves the line pairs (0,1), (1,2), (2,3) (plus (3,0) when
    ``ring``), pools 0->1 and 2->3; layer 2 convolves (1,3) and pools 1->3.
    Qubit 3 is measured.
    """
    conv, enc = parse_conv(conv), parse_encoding(enc)
    w = CONV_PARAMS[conv]
    gates = encoding_gates(enc, 4)
    pairs = [(0, 1), (1, 2), (2, 3)] + ([(3, 0)] if ring else [])
    for pair in pairs:
        gates += conv_block(conv, pair, 0)
    gates += pool_block(0, 1, w) + pool_block(2, 3, w)
    gates += conv_block(conv, (1, 3), w + POOL_PARAMS)
    gates += pool_block(1, 3, 2 * w + POOL_PARAMS)
    return CircuitSpec(4, tuple(gates), 2 * (w + POOL_PARAMS), 3, (),
                       label=f"{conv.value}+{enc.value}")


# --------------------------------------------------------------- simulation

def _angle(g: Gate, theta: np.ndarray, x: np.ndarray):
    if g.slot == "param":
        return theta[g.index]
    if g.slot == "data":
        return x[..., g.index]
    if g.slot == "dataprod":
        return x[..., g.index[0]] * x[..., g.index[1]]
    return g.value


def _run(gates, theta, x, amps, n, shifts=None):
    """Propagate a batch of states (B, 2**n); ``x`` is (B, n_features) or 1-D."""
    for pos, g in enumerate(gates):
        if g.name == "CNOT":
            amps = sv.apply_cnot_batch(amps, g.control, g.target, n)
            continue
        ang = _angle(g, theta, x)
        if shifts and pos in shifts:
            ang = ang + shifts[pos]
        if np.ndim(ang) == 0:
            mat = sv.rotation(g.axis, float(ang))
        else:
            mat = sv.rotation_batch(g.axis, ang)
        amps = sv.apply_1q(amps, mat, g.target, n)
    return amps


def _check_x(spec: CircuitSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (spec.num_qubits,):
        raise ShapeError(f"expected {spec.num_qubits} input features, got shape {x.shape}")
    return x


def encode(x: Sequence[float], kind: EncodingKind, num_qubits: int = 4) -> sv.State:
    x = np.asarray(x, dtype=float)
    if x.shape != (num_qubits,):
        raise ShapeError(f"expected {num_qubits} input features, got shape {x.shape}")
    amps = sv.zero_state(num_qubits).amplitudes[None, :]
    out = _run(encoding_gates(kind, num_qubits), np.zeros(0), x, amps, num_qubits)
    return sv.State(num_qubits, out[0])


def simulate(spec: CircuitSpec, theta, x, shifts: dict[int, float] | None = None) -> sv.State:
    """Full output state U_QCNN(theta) U_enc(x) |0...0>.

    ``shifts`` maps gate positions to angle offsets added to that single gate
    occurrence only.
    """
    full = spec.full_params(theta)
    x = _check_x(spec, x)
    amps = sv.zero_state(spec.num_qubits).amplitudes[None, :]
    out = _run(spec.gates, full, x, amps, spec.num_qubits, shifts)
    return sv.State(spec.num_qubits, out[0])


def forward(spec: CircuitSpec, theta, x) -> float:
    """<Z> on the measured qubit after the full circuit."""
    return sv.expect_z(simulate(spec, theta, x), spec.measured_qubit)


def pooled_out(spec: CircuitSpec) -> list[tuple[int, int]]:
    """(qubit, position of the CNOT that pools it out) for each pooled qubit.

    A pool block is recognised as a CNOT whose control never appears in any
    later gate.
    """
    result = []
    for pos, g in enumerate(spec.gates):
        if g.name != "CNOT":
            continue
        if all(g.control not in later.qubits() for later in spec.gates[pos + 1:]):
            result.append((g.control, pos))
    return result


# ------------------------------------------------------- compiled fast path

class CompiledCircuit:
    """Batched evaluation of one CircuitSpec.

    The data-dependent prefix (every gate before the first trainable one) is
    simulated per sample; the trainable remainder is compiled into dense
    ``2**n x 2**n`` matrices so a whole batch shares one unitary. Runs of
    fixed gates between trainable ones are pre-multiplied.
    """

    def __init__(self, spec: CircuitSpec):
        self.spec = spec
        n = spec.num_qubits
        self.n = n
        first = next((i for i, g in enumerate(spec.gates) if g.is_param), len(spec.gates))
        self.prefix = spec.gates[:first]
        body = spec.gates[first:]
        if any(g.slot in ("data", "dataprod") for g in body):
            raise ConfigurationError("data-dependent gates after the first trainable gate")
        self.eye = np.eye(2**n, dtype=complex)
        self.z = sv.z_diagonal(spec.measured_qubit, n)
        steps, paulis, slots = [], [], []
        pending = None
        for g in body:
            if g.is_param:
                if pending is not None:
                    steps.append(pending)
                    pending = None
                steps.append(len(slots))
                slots.append(g.index)
                paulis.append(sv.embed_1q(sv.PAULI[g.axis], g.target, n))
                continue
            if g.name == "CNOT":
                m = sv.cnot_matrix(g.control, g.target, n)
            else:
                m = sv.embed_1q(sv.rotation(g.axis, g.value), g.target, n)
            pending = m if pending is None else m @ pending
        if pending is not None:
            steps.append(pending)
        self._steps = steps
        self.param_slot = np.array(slots, dtype=int)
        self._paulis = np.stack(paulis) if paulis else np.zeros((0, 2**n, 2**n), complex)

    def encode(self, X) -> np.ndarray:
        X = _check_x(self.spec, X)
        X2 = np.atleast_2d(X)
        amps = np.zeros((X2.shape[0], 2**self.n), dtype=complex)
        amps[:, 0] = 1.0
        return _run(self.prefix, np.zeros(0), X2, amps, self.n)

    def _rotations(self, theta_full: np.ndarray, shifts=(0.0,)) -> np.ndarray:
        """Rotation matrices per occurrence, shape (len(shifts), K, d, d)."""
        angles = theta_full[self.param_slot][None, :] + np.asarray(shifts)[:, None]
        c = np.cos(angles / 2)[..., None, None]
        s = np.sin(angles / 2)[..., None, None]
        return c * self.eye - 1j * s * self._paulis[None]

    def unitary(self, theta) -> np.ndarray:
        full = self.spec.full_params(theta)
        rots = self._rotations(full)[0]
        u = self.eye
        for step in self._steps:
            u = (rots[step] if isinstance(step, int) else step) @ u
        return u

    def expectations(self, theta, states: np.ndarray) -> np.ndarray:
        """<Z_measured> for each encoded state row."""
        out = states @ self.unitary(theta).T
        val = (np.abs(out) ** 2) @ self.z
        return np.clip(val, -1.0, 1.0)

    def forward(self, theta, X) -> np.ndarray:
        return self.expectations(theta, self.encode(X))

    def shift_gradient(self, theta, states: np.ndarray, weights: np.ndarray) -> np.ndarray:
        """d/dtheta of sum_i weights[i] * yhat_i by the parameter-shift rule.

        Every gate occurrence of a slot is shifted by +-pi/2 on its own and the
        halved differences are summed per slot. The weighted batch sum of
        shifted expectations is evaluated as tr(M G rho G^dag), with rho the
        weighted state projector propagated to just before the gate and M the
        measured observable pulled back to just after it. Returns the gradient
        over all ``param_count`` slots (frozen ones included).
        """
        full = self.spec.full_params(theta)
        grad = np.zeros(self.spec.param_count)
        k_occ = len(self.param_slot)
        if not k_occ:
            return grad
        rots = self._rotations(full, (0.0, HALF_PI, -HALF_PI))
        mats = [rots[0, st] if isinstance(st, int) else st for st in self._steps]
        dim = 2**self.n
        rho_before = np.empty((k_occ, dim, dim), dtype=complex)
        obs_after = np.empty((k_occ, dim, dim), dtype=complex)
        rho = (states.T * weights) @ states.conj()
        for st, m in zip(self._steps, mats):
            if isinstance(st, int):
                rho_before[st] = rho
            rho = m @ rho @ m.conj().T
        obs = np.diag(self.z).astype(complex)
        for st, m in zip(reversed(self._steps), reversed(mats)):
            if isinstance(st, int):
                obs_after[st] = obs
            obs = m.conj().T @ obs @ m
        shifted = []
        for g in (rots[1], rots[2]):
            moved = g @ rho_before @ np.conj(np.swapaxes(g, 1, 2))
            shifted.append(np.einsum("kij,kji->k", obs_after, moved).real)
        np.add.at(grad, self.param_slot, (shifted[0] - shifted[1]) / 2)
        return grad


def random_params(spec: CircuitSpec, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(0.0, 2 * np.pi, spec.param_count)


def iter_param_gates(spec: CircuitSpec) -> Iterable[tuple[int, Gate]]:
    return ((pos, g) for pos, g in enumerate(spec.gates) if g.is_param)
