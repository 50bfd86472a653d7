"""Gate-level lowering of QAOA rounds and entangling-gate accounting.

Qubit ``i`` carries variable ``i`` with truth value 1 stored as |1>.
Ancillas are numbered after the problem qubits.  Costs are counted in
entangling-equivalents: ZZ and CNOT weigh 1, Toffoli and the
double-controlled phase weigh 5.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .cnf import CnfFormula

# kind -> (number of qubits, takes an angle)
GATE_KINDS = {
    "H": (1, False),
    "X": (1, False),
    "RZ": (1, True),
    "ZZ": (2, True),
    "CNOT": (2, False),
    "TOFFOLI": (3, False),
    "CCZ_PHASE": (3, True),
}
ENTANGLING_WEIGHTS = {"ZZ": 1, "CNOT": 1, "TOFFOLI": 5, "CCZ_PHASE": 5}

GROVER_ORACLE_MS_PER_CLAUSE = 50
GROVER_ORACLE_ANCILLAS_PER_CLAUSE = 2

_HEADER = "# gqaoa circuit v1"


@dataclass(frozen=True)
class Gate:
    """One gate.  RZ(t) = exp(-i t Z/2), ZZ(t) = exp(-i t ZZ/2),
    CCZ_PHASE(t) multiplies |111> by exp(-i t); controls come first."""

    kind: str
    qubits: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        arity, has_angle = GATE_KINDS[self.kind]
        qubits = tuple(int(q) for q in self.qubits)
        if len(qubits) != arity or len(set(qubits)) != arity:
            raise ValueError(f"{self.kind} needs {arity} distinct qubits, got {qubits}")
        if has_angle != (self.angle is not None):
            raise ValueError(f"{self.kind} {'needs' if has_angle else 'takes no'} angle")
        object.__setattr__(self, "qubits", qubits)
        if self.angle is not None:
            object.__setattr__(self, "angle", float(self.angle))

    @property
    def weight(self) -> int:
        return ENTANGLING_WEIGHTS.get(self.kind, 0)


@dataclass
class GateList:
    num_problem: int
    num_ancillas: int = 0
    gates: list[Gate] = field(default_factory=list)

    @property
    def num_qubits(self) -> int:
        return self.num_problem + self.num_ancillas

    def add(self, kind: str, *qubits: int, angle: float | None = None) -> None:
        gate = Gate(kind, qubits, angle)
        if max(gate.qubits) >= self.num_qubits:
            raise ValueError(f"qubit index out of range in {gate}")
        self.gates.append(gate)

    def extend(self, other: "GateList") -> "GateList":
        if other.num_problem != self.num_problem:
            raise ValueError("problem registers differ")
        self.num_ancillas = max(self.num_ancillas, other.num_ancillas)
        self.gates.extend(other.gates)
        return self

    def entangling_count(self) -> int:
        return sum(g.weight for g in self.gates)

    def __len__(self) -> int:
        return len(self.gates)


def lower_problem_unitary(formula: CnfFormula, gamma: float) -> GateList:
    """exp(-i gamma H_P) up to a global phase, clause by clause."""
    out = GateList(formula.n)
    q = gamma / 4.0
    for clause in formula.clauses:
        (a, sa), (b, sb), (c, sc) = clause.literals
        out.add("RZ", a, angle=q * sa)
        out.add("RZ", b, angle=q * sb)
        out.add("RZ", c, angle=q * sc)
        out.add("ZZ", a, b, angle=q * sa * sb)
        out.add("ZZ", a, c, angle=q * sa * sc)
        out.add("ZZ", b, c, angle=q * sb * sc)
        # CNOT(b -> c) turns Z_c into Z_b Z_c, so the middle ZZ acts as ZZZ
        out.add("CNOT", b, c)
        out.add("ZZ", a, c, angle=q * sa * sb * sc)
        out.add("CNOT", b, c)
    return out


def lower_grover_mixer(n: int, beta: float) -> GateList:
    """exp(-i beta |+><+|) with a Toffoli AND-ladder on n-3 ancillas."""
    if n < 3:
        raise ValueError("Grover mixer lowering needs n >= 3")
    out = GateList(n, n - 3)
    for q in range(n):
        out.add("H", q)
    for q in range(n):
        out.add("X", q)
    ladder = []
    if n > 3:
        ladder.append((0, 1, n))
        for j in range(1, n - 3):
            ladder.append((n + j - 1, j + 1, n + j))
        last = n + (n - 4)
        phase_qubits = (last, n - 2, n - 1)
    else:
        phase_qubits = (0, 1, 2)
    for c1, c2, t in ladder:
        out.add("TOFFOLI", c1, c2, t)
    out.add("CCZ_PHASE", *phase_qubits, angle=beta)
    for c1, c2, t in reversed(ladder):
        out.add("TOFFOLI", c1, c2, t)
    for q in range(n):
        out.add("X", q)
    for q in range(n):
        out.add("H", q)
    return out


def lower_x_mixer(n: int, beta: float) -> GateList:
    """exp(-i beta X) on each qubit as H RZ(2 beta) H."""
    out = GateList(n)
    for q in range(n):
        out.add("H", q)
        out.add("RZ", q, angle=2.0 * beta)
        out.add("H", q)
    return out


def lower_round(formula: CnfFormula, beta: float, gamma: float, mixer: str = "grover") -> GateList:
    out = lower_problem_unitary(formula, gamma)
    if mixer == "grover":
        return out.extend(lower_grover_mixer(formula.n, beta))
    if mixer == "transverse_x":
        return out.extend(lower_x_mixer(formula.n, beta))
    raise ValueError(f"unknown mixer {mixer!r}")


# -- cost accounting ---------------------------------------------------------------


@dataclass
class GateCostReport:
    algorithm: str
    n: int
    m: int
    rounds: int
    entangling_per_round: int
    entangling_total: int
    ancillas: int
    estimate: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def grover_iterations(P: float) -> int:
    """Grover iterations needed to lift success probability P to one half."""
    if not 0 < P <= 1:
        raise ValueError("P must lie in (0, 1]")
    return math.ceil(math.pi / (8.0 * math.sqrt(P)))


def cost_report(algorithm: str, n: int, m: int, rounds: int | None = None,
                P: float | None = None) -> GateCostReport:
    """Entangling-gate and ancilla totals.

    ``x_qaoa`` and ``g_qaoa`` take ``rounds``; ``grover_baseline`` takes the
    solution fraction ``P`` and derives its iteration count.  The Grover
    oracle cost is a rough per-clause estimate and is flagged as such.
    """
    if algorithm == "grover_baseline":
        if P is None:
            raise ValueError("grover_baseline needs P")
        iterations = grover_iterations(P)
        per = GROVER_ORACLE_MS_PER_CLAUSE * m
        return GateCostReport(algorithm, n, m, iterations, per, per * iterations,
                              GROVER_ORACLE_ANCILLAS_PER_CLAUSE * m, estimate=True)
    if rounds is None or rounds < 0:
        raise ValueError(f"{algorithm} needs a non-negative round count")
    if algorithm == "x_qaoa":
        per, anc = 6 * m, 0
    elif algorithm == "g_qaoa":
        if n < 3:
            raise ValueError("g_qaoa needs n >= 3")
        per, anc = 6 * m + 5 * (2 * n - 5), n - 3
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    return GateCostReport(algorithm, n, m, rounds, per, per * rounds, anc)


# -- text format -----------------------------------------------------------------


def emit_circuit_text(gates: GateList) -> str:
    lines = [_HEADER, f"qubits {gates.num_problem} ancillas {gates.num_ancillas}"]
    for g in gates.gates:
        parts = [g.kind]
        if g.angle is not None:
            parts.append(repr(g.angle))
        parts.extend(str(q) for q in g.qubits)
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def parse_circuit_text(text: str) -> GateList:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ValueError("missing qubit header")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "qubits" or head[2] != "ancillas":
        raise ValueError(f"bad header {lines[0]!r}")
    out = GateList(int(head[1]), int(head[3]))
    for ln in lines[1:]:
        kind, *rest = ln.split()
        if kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {kind!r}")
        angle = float(rest.pop(0)) if GATE_KINDS[kind][1] else None
        out.add(kind, *(int(x) for x in rest), angle=angle)
    return out


# -- dense simulation for verification -----------------------------------------------


def apply_gates(gates: GateList, state: np.ndarray) -> np.ndarray:
    """Apply the gate list to ``state`` of shape (2**num_qubits, k)."""
    dim = 1 << gates.num_qubits
    if state.shape[0] != dim:
        raise ValueError("state dimension does not match the register")
    idx = np.arange(dim)
    bit = lambda q: (idx >> q) & 1  # noqa: E731
    psi = np.array(state, dtype=complex)
    for g in gates.gates:
        qs = g.qubits
        if g.kind == "H":
            b = bit(qs[0])
            psi = ((1 - 2 * b)[:, None] * psi + psi[idx ^ (1 << qs[0])]) / math.sqrt(2.0)
        elif g.kind == "X":
            psi = psi[idx ^ (1 << qs[0])]
        elif g.kind == "RZ":
            z = 1 - 2 * bit(qs[0])
            psi = np.exp(-0.5j * g.angle * z)[:, None] * psi
        elif g.kind == "ZZ":
            zz = (1 - 2 * bit(qs[0])) * (1 - 2 * bit(qs[1]))
            psi = np.exp(-0.5j * g.angle * zz)[:, None] * psi
        elif g.kind == "CNOT":
            psi = psi[idx ^ (bit(qs[0]) << qs[1])]
        elif g.kind == "TOFFOLI":
            psi = psi[idx ^ ((bit(qs[0]) & bit(qs[1])) << qs[2])]
        elif g.kind == "CCZ_PHASE":
            on = bit(qs[0]) & bit(qs[1]) & bit(qs[2])
            psi = np.where(on[:, None] == 1, np.exp(-1j * g.angle) * psi, psi)
    return psi


def problem_unitary_matrix(gates: GateList) -> tuple[np.ndarray, float]:
    """Action on the problem register with ancillas starting in |0>.

    Returns the 2**n x 2**n block and the largest amplitude left on any
    ancilla state other than |0...0> (zero for a clean circuit).
    """
    n = gates.num_problem
    cols = np.zeros((1 << gates.num_qubits, 1 << n), dtype=complex)
    cols[np.arange(1 << n), np.arange(1 << n)] = 1.0
    out = apply_gates(gates, cols)
    leak = float(np.abs(out[1 << n:]).max(initial=0.0))
    return out[: 1 << n], leak


def same_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    k = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(b[k]) < tol:
        return bool(np.abs(a).max() < tol)
    phase = a[k] / b[k]
    if abs(abs(phase) - 1.0) > tol:
        return False
    return bool(np.abs(a - phase * b).max() < tol)
