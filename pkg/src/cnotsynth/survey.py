"""CNOT-configuration surveys, the minimal single-qubit gate search, and verification batteries."""

from __future__ import annotations

import itertools
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import __version__, qmat
from .circuit import (
    CNOT_CODES,
    Circuit,
    Cnot,
    ParamSingle,
    ccy_cz_target,
    config_to_template,
    control_wire_gates,
    controlled_matrix,
    decompose_controlled_u,
    eval_circuit,
    flip_cnot,
    format_config,
    margolus_reference_circuit,
    margolus_target,
    single_matrix,
    toffoli,
    two_wire_template,
    zyz_angles,
)
from .entangle import (
    Bipartition,
    apply_controlled,
    entangling_connectivity,
    haar_unitary,
    lemma1_predicate,
    lemma2_output,
    local_operator,
    product_state,
    random_state,
    schmidt_rank,
)
from .synth import (
    FEASIBLE,
    FREE,
    IDENTITY,
    OptimizerSettings,
    SynthesisProblem,
    SynthesisResult,
    nontrivial_count,
    optimize_local,
    restart_rng,
    solved_gates,
    synthesize,
)

TARGET_UNDER_TOUCHED = "TargetUnderTouched"
NOT_CONNECTING = "NotConnecting"

# Slots of the (0,1,0) template that carry the four single-qubit gates of the reference circuit.
WIRE0_SLOTS = (0, 3, 6, 9)


@dataclass(frozen=True)
class ExclusionReason:
    kind: str
    detail: str

    def to_dict(self) -> dict:
        return {"kind": self.kind, "detail": self.detail}


def enumerate_configs(k: int) -> list[tuple[int, ...]]:
    if k not in (1, 2, 3):
        raise ValueError(f"number of CNOTs must be 1, 2 or 3, got {k}")
    return list(itertools.product(sorted(CNOT_CODES), repeat=k))


def exclusion_filter(cfg: Sequence[int]) -> ExclusionReason | None:
    cfg = tuple(cfg)
    on_target = sum(c in (0, 1) for c in cfg)
    if on_target < 2:
        return ExclusionReason(TARGET_UNDER_TOUCHED, f"only {on_target} CNOT(s) act on wire 0")
    if not entangling_connectivity(cfg):
        isolated = {0, 1, 2} - {w for c in cfg for w in CNOT_CODES[c]}
        detail = f"wire {min(isolated)} is never touched" if isolated else "CNOT graph is disconnected"
        return ExclusionReason(NOT_CONNECTING, detail)
    return None


def case_group(cfg: Sequence[int]) -> int | None:
    """Case 1, 2 or 3 of the three-CNOT analysis; ``None`` for excluded or shorter configs."""
    cfg = tuple(cfg)
    if len(cfg) != 3 or exclusion_filter(cfg) is not None:
        return None
    on_target = [c for c in cfg if c in (0, 1)]
    if len(on_target) == 3:
        return 3
    return 1 if len(set(on_target)) == 2 else 2


def case_label(cfg: Sequence[int]) -> str | None:
    if len(cfg) != 3:
        return None
    group = case_group(cfg)
    if group is None:
        return "excluded"
    if tuple(cfg) == (0, 1, 0):
        return "final"
    return f"case{group}"


def derive_seed(seed: int, index: int) -> int:
    """Seed for work item ``index``, independent of scheduling."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, index])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class SurveyRecord:
    config: tuple
    case: str | None = None
    excluded: ExclusionReason | None = None
    result: SynthesisResult | None = None
    slots: tuple | None = None
    nontrivial_gates: int | None = None

    @property
    def verdict(self) -> str | None:
        return self.result.verdict if self.result else None

    def to_dict(self) -> dict:
        d = {
            "config": format_config(self.config),
            "case": self.case,
            "excluded": self.excluded.to_dict() if self.excluded else None,
            "verdict": self.verdict,
            "best_cost": self.result.best_cost if self.result else None,
            "evals": self.result.evals if self.result else None,
            "restarts_run": self.result.restarts_run if self.result else None,
        }
        if self.slots is not None:
            d["slots"] = list(self.slots)
            d["raw_gates"] = len(self.slots)
            d["nontrivial_gates"] = self.nontrivial_gates
        return d


@dataclass
class SurveyReport:
    command: str
    seed: int
    settings: OptimizerSettings
    records: list = field(default_factory=list)
    wall_time_s: float = 0.0
    target: str = "m"

    def feasible(self) -> list[SurveyRecord]:
        return [r for r in self.records if r.verdict == FEASIBLE]

    def synthesized(self) -> list[SurveyRecord]:
        return [r for r in self.records if r.result is not None]

    def excluded(self) -> list[SurveyRecord]:
        return [r for r in self.records if r.excluded is not None]

    def to_dict(self, timing: bool = False) -> dict:
        return {
            "tool_version": __version__,
            "command": self.command,
            "target": self.target,
            "seed": self.seed,
            "settings": self.settings.to_dict(),
            "records": [r.to_dict() for r in self.records],
            # null unless requested so that reports are reproducible byte for byte
            "wall_time_s": self.wall_time_s if timing else None,
        }

    def to_json(self, timing: bool = False) -> str:
        return json.dumps(self.to_dict(timing), indent=2) + "\n"

    def to_markdown(self) -> str:
        out = [
            f"# {self.command} (target {self.target}, seed {self.seed})",
            "",
            "| config | case | excluded | verdict | best_cost | restarts | evals |",
            "|---|---|---|---|---|---|---|",
        ]
        for r in self.records:
            d = r.to_dict()
            ex = f"{r.excluded.kind}: {r.excluded.detail}" if r.excluded else ""
            cost = f"{d['best_cost']:.3e}" if d["best_cost"] is not None else ""
            cfg = d["config"] if r.slots is None else f"{d['config']} slots {','.join(map(str, r.slots))}"
            out.append(
                f"| {cfg} | {d['case'] or ''} | {ex} | {d['verdict'] or ''} | {cost} "
                f"| {d['restarts_run'] or ''} | {d['evals'] or ''} |"
            )
        n_feas = len(self.feasible())
        out += ["", f"{len(self.records)} records, {len(self.excluded())} excluded, {n_feas} feasible."]
        return "\n".join(out) + "\n"


def _map(fn: Callable, items: list, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def _synth_item(item) -> SynthesisResult:
    template, slots, target, settings = item
    return synthesize(SynthesisProblem(template, target, slots), settings)


def run_survey(
    k: int,
    settings: OptimizerSettings = OptimizerSettings(),
    target: np.ndarray | None = None,
    workers: int = 1,
    target_name: str = "m",
) -> SurveyReport:
    """Synthesize every non-excluded ``k``-CNOT configuration against ``target`` (default ``M``)."""
    t0 = time.perf_counter()
    target = margolus_target() if target is None else qmat.require_unitary(target)
    configs = enumerate_configs(k)
    records, work, where = [], [], []
    for i, cfg in enumerate(configs):
        rec = SurveyRecord(cfg, case=case_label(cfg), excluded=exclusion_filter(cfg))
        records.append(rec)
        if rec.excluded is None:
            item_settings = replace(settings, seed=derive_seed(settings.seed, i))
            work.append((config_to_template(cfg), None, target, item_settings))
            where.append(i)
    for i, res in zip(where, _map(_synth_item, work, workers)):
        records[i].result = res
    return SurveyReport(
        command=f"survey --cnots {k}",
        seed=settings.seed,
        settings=settings,
        records=records,
        wall_time_s=time.perf_counter() - t0,
        target=target_name,
    )


def slot_subsets(n_slots: int, k_gates: int) -> list[tuple[int, ...]]:
    if not 0 <= k_gates <= n_slots:
        raise ValueError(f"k_gates must be in 0..{n_slots}, got {k_gates}")
    return list(itertools.combinations(range(n_slots), k_gates))


def min_single_qubit_search(
    cfg: Sequence[int] = (0, 1, 0),
    k_gates: int = 4,
    settings: OptimizerSettings = OptimizerSettings(),
    workers: int = 1,
    target: np.ndarray | None = None,
) -> SurveyReport:
    """Synthesize with exactly ``k_gates`` free slots (every subset); the other slots are identities."""
    t0 = time.perf_counter()
    cfg = tuple(cfg)
    target = margolus_target() if target is None else qmat.require_unitary(target)
    template = config_to_template(cfg)
    n_slots = 3 * (len(cfg) + 1)
    subsets = slot_subsets(n_slots, k_gates)
    work = []
    for i, sub in enumerate(subsets):
        slots = tuple(FREE if s in sub else IDENTITY for s in range(n_slots))
        work.append((template, slots, target, replace(settings, seed=derive_seed(settings.seed, i))))
    results = _map(_synth_item, work, workers)
    records = []
    for (_, slots, _, _), sub, res in zip(work, subsets, results):
        rec = SurveyRecord(cfg, case=case_label(cfg), result=res, slots=sub)
        if res.verdict == FEASIBLE:
            rec.nontrivial_gates = nontrivial_count(SynthesisProblem(template, target, slots), res.best_params)
        records.append(rec)
    return SurveyReport(
        command=f"mingates --k {k_gates} --config {format_config(cfg)}",
        seed=settings.seed,
        settings=settings,
        records=records,
        wall_time_s=time.perf_counter() - t0,
    )


# -- verification batteries ---------------------------------------------------


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""
    dump: str | None = None

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail, "dump": self.dump}


@dataclass
class VerificationRecord:
    command: str
    checks: list = field(default_factory=list)
    table: list | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        d = {
            "tool_version": __version__,
            "command": self.command,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
        }
        if self.table is not None:
            d["table"] = self.table
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_markdown(self) -> str:
        out = [f"# {self.command}", ""]
        if self.table is not None:
            out += ["| input | output |", "|---|---|"]
            esc = lambda ket: str(ket).replace("|", "\\|")  # kets contain table pipes
            out += [f"| {esc(row['input'])} | {esc(row['output'])} |" for row in self.table]
            out.append("")
        out += ["| check | result | detail |", "|---|---|---|"]
        for c in self.checks:
            out.append(f"| {c.name} | {'pass' if c.passed else 'FAIL'} | {c.detail} |")
        for c in self.checks:
            if not c.passed and c.dump:
                out += ["", f"## {c.name}", "```", c.dump.rstrip(), "```"]
        out += ["", "all checks passed" if self.passed else "FAILED"]
        return "\n".join(out) + "\n"


# Basis action of M: input bits -> (sign, output bits).
EXPECTED_TABLE = {
    "000": (1, "000"),
    "001": (1, "001"),
    "010": (1, "010"),
    "011": (1, "011"),
    "100": (1, "100"),
    "101": (-1, "101"),
    "110": (1, "111"),
    "111": (1, "110"),
}


def basis_table(u: np.ndarray, tol: float = 1e-12) -> list[dict]:
    """Action of ``u`` on the 8 basis states; ``output`` is ``None`` for columns that are not signed basis states."""
    rows = []
    for col in range(8):
        v = u[:, col]
        j = int(np.argmax(np.abs(v)))
        bits_in = format(col, "03b")
        ok = abs(abs(v[j]) - 1) <= tol and np.linalg.norm(np.delete(v, j)) <= tol and abs(v[j].imag) <= tol
        if ok:
            sign = 1 if v[j].real > 0 else -1
            rows.append({"input": f"|{bits_in}>", "output": f"{'-' if sign < 0 else ''}|{format(j, '03b')}>",
                         "sign": sign, "bits": format(j, "03b")})
        else:
            rows.append({"input": f"|{bits_in}>", "output": None, "sign": None, "bits": None})
    return rows


def _align_phase(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    t = np.vdot(u, v)
    return u * (t / abs(t)) if t != 0 else u


def verify_margolus(circuit: Circuit | None = None) -> VerificationRecord:
    """Check the reference circuit against the simplified Toffoli map and its relatives."""
    circuit = margolus_reference_circuit() if circuit is None else circuit
    m = margolus_target()
    u = eval_circuit(circuit)
    rec = VerificationRecord("verify")

    d = qmat.phase_dist(u, m)
    rec.checks.append(Check("circuit_equals_M", d <= 1e-12, f"phase_dist = {d:.3e}",
                            None if d <= 1e-12 else qmat.format_matrix(u)))

    aligned = _align_phase(u, m)
    table = basis_table(aligned)
    rec.table = [{"input": r["input"], "output": r["output"]} for r in table]
    mismatched = [r["input"] for r in table if (r["sign"], r["bits"]) != EXPECTED_TABLE[r["input"][1:4]]]
    rec.checks.append(Check("basis_table", not mismatched,
                            "8/8 rows match" if not mismatched else f"rows differ: {', '.join(mismatched)}",
                            None if not mismatched else qmat.format_matrix(aligned)))

    f = qmat.frob_dist(ccy_cz_target(), m)
    rec.checks.append(Check("ccy_cz_equals_M", f <= 1e-12, f"frob_dist = {f:.3e}",
                            None if f <= 1e-12 else qmat.format_matrix(ccy_cz_target())))

    equiv = qmat.is_diag_phase_equiv(m, toffoli())
    diag = qmat.diag_phase_factors(m, toffoli())
    expected = np.ones(8)
    expected[5] = -1
    diag_ok = equiv and float(np.max(np.abs(diag - expected))) <= 1e-12
    rec.checks.append(Check("diag_phase_equiv_toffoli", diag_ok,
                            "diagonal = " + " ".join(f"{z.real:+.0f}" for z in diag),
                            None if diag_ok else qmat.format_matrix(m @ toffoli().conj().T)))
    return rec


def _flip_check(rng: np.random.Generator) -> Check:
    worst = 0.0
    for code, (c, t) in sorted(CNOT_CODES.items()):
        gates = [ParamSingle(w, *rng.uniform(-math.pi, math.pi, 3)) for w in range(3)]
        gates += [Cnot(c, t)]
        gates += [ParamSingle(w, *rng.uniform(-math.pi, math.pi, 3)) for w in range(3)]
        circ = Circuit(3, gates)
        flipped = flip_cnot(circ, 3)
        worst = max(worst, qmat.frob_dist(eval_circuit(flipped), eval_circuit(circ)))
    two = Circuit(2, [Cnot(0, 1)])
    worst = max(worst, qmat.frob_dist(eval_circuit(flip_cnot(two, 0)), eval_circuit(two)))
    return Check("flip_identity", worst <= 1e-12, f"3 placements + 2-wire case, max frob_dist = {worst:.3e}")


def _entanglement_sweep(rng: np.random.Generator, samples: int) -> Check:
    agree = 0
    cut = Bipartition({1}, {0})
    for i in range(samples):
        u = haar_unitary(rng, 2)
        psi, phi = random_state(rng, 2), random_state(rng, 2)
        kind = i % 4
        if kind == 0:  # eigenvector input on the target
            phi = np.linalg.eig(u)[1][:, rng.integers(2)]
            phi = phi / np.linalg.norm(phi)
        elif kind == 1:  # control in a basis state
            psi = np.zeros(2, dtype=complex)
            psi[rng.integers(2)] = np.exp(1j * rng.uniform(0, 2 * math.pi))
        elif kind == 2:  # scalar multiple of the identity
            u = np.exp(1j * rng.uniform(0, 2 * math.pi)) * np.eye(2)
        out = apply_controlled(u, psi, phi)
        if lemma1_predicate(psi, phi, u, 1e-8) == (schmidt_rank(out, cut, 1e-8) == 2):
            agree += 1
    return Check("entanglement_predicate", agree == samples, f"{agree}/{samples} agree with Schmidt rank")


def _eigen_control_check(rng: np.random.Generator, samples: int = 100) -> Check:
    worst = float(np.linalg.norm(
        lemma2_output(np.array([1, 1]) / math.sqrt(2), np.array([0, 1]), qmat.Z)
        - apply_controlled(qmat.Z, np.array([1, 1]) / math.sqrt(2), np.array([0, 1]))
    ))
    for _ in range(samples):
        u = haar_unitary(rng, 2)
        phi = np.linalg.eig(u)[1][:, rng.integers(2)]
        phi = phi / np.linalg.norm(phi)
        psi = random_state(rng, 2)
        worst = max(worst, float(np.linalg.norm(lemma2_output(psi, phi, u) - apply_controlled(u, psi, phi))))
    return Check("eigen_control_output", worst <= 1e-12, f"{samples + 1} eigenpairs, max deviation = {worst:.3e}")


CUTS = (Bipartition({2}, {1, 0}), Bipartition({1}, {2, 0}), Bipartition({0}, {2, 1}))


def _local_invariance_sweep(rng: np.random.Generator, samples: int) -> Check:
    kept = 0
    entangled = 0
    for i in range(samples):
        cut = CUTS[i % 3]
        if i % 5 == 4:  # product state across the cut
            state = product_state(random_state(rng, 2 ** len(cut.side_a)), random_state(rng, 2 ** len(cut.side_b)), cut)
        else:
            state = random_state(rng, 8)
        before = schmidt_rank(state, cut, 1e-8)
        entangled += before > 1
        op = local_operator(haar_unitary(rng, 2 ** len(cut.side_a)), haar_unitary(rng, 2 ** len(cut.side_b)), cut)
        after = schmidt_rank(op @ state, cut, 1e-8)
        kept += before == after
    return Check("local_unitary_invariance", kept == samples,
                 f"{kept}/{samples} ranks preserved ({entangled} entangled inputs)")


def _sparse_first_implies_all(circ: Circuit) -> bool | None:
    a = control_wire_gates(circ)
    if not qmat.is_sparse(a[0], 1e-9):
        return None
    return all(qmat.is_sparse(g, 1e-9) for g in a[1:])


def gauge_variation(circ: Circuit, rng: np.random.Generator) -> Circuit:
    """Insert commuting local pairs around each CNOT of a 2-wire ``[L1, C, L2, C, L3]`` decomposition.

    ``C (P (x) T) = (P (x) X^b T) C`` for ``P = D X^b`` with ``D`` diagonal and ``T``
    a rotation about X, so the evaluated unitary is unchanged.
    """
    layers = [[qmat.I2, qmat.I2]]  # per layer: [control gate, target gate] as 2x2 matrices
    for g in circ.gates:
        if isinstance(g, Cnot):
            layers.append([qmat.I2, qmat.I2])
            continue
        m = single_matrix(g)
        idx = 0 if g.wire == 1 else 1
        layers[-1][idx] = m @ layers[-1][idx]
    for k in range(len(layers) - 1):
        b = int(rng.integers(2))
        d = np.diag(np.exp(1j * rng.uniform(-math.pi, math.pi, 2)))
        p = d @ (qmat.X if b else qmat.I2)
        t_ang = rng.uniform(-math.pi, math.pi)
        t = math.cos(t_ang / 2) * qmat.I2 - 1j * math.sin(t_ang / 2) * qmat.X
        t_after = (qmat.X if b else qmat.I2) @ t
        layers[k] = [p @ layers[k][0], t @ layers[k][1]]
        layers[k + 1] = [layers[k + 1][0] @ p.conj().T, layers[k + 1][1] @ t_after.conj().T]
    gates = []
    for k, (a, b_) in enumerate(layers):
        gates.append(ParamSingle(1, *zyz_angles(a)[1:]))
        gates.append(ParamSingle(0, *zyz_angles(b_)[1:]))
        if k < len(layers) - 1:
            gates.append(Cnot(1, 0))
    return Circuit(2, gates)


def _controlled_u_check(rng: np.random.Generator, haar_samples: int = 100) -> Check:
    worst = 0.0
    for _ in range(haar_samples):
        u = haar_unitary(rng, 2)
        worst = max(worst, qmat.phase_dist(eval_circuit(decompose_controlled_u(u)), controlled_matrix(u, 1, 0, 2)))
    return Check("controlled_u_roundtrip", worst <= 1e-10, f"{haar_samples} Haar gates, max phase_dist = {worst:.3e}")


def sparse_instances(rng: np.random.Generator, n_random: int = 8) -> list[np.ndarray]:
    out = [qmat.Z, qmat.X, qmat.Y, qmat.H, qmat.G]
    for _ in range(n_random):
        ph = np.exp(1j * rng.uniform(-math.pi, math.pi, 2))
        out.append(np.diag(ph))
        out.append(np.array([[0, ph[0]], [ph[1], 0]]))
        out.append(haar_unitary(rng, 2))
    return out


def _sparse_propagation_check(rng: np.random.Generator, gauges: int = 5) -> Check:
    tested = violations = 0
    worst = 0.0
    for u in sparse_instances(rng):
        base = decompose_controlled_u(u)
        for circ in [base] + [gauge_variation(base, rng) for _ in range(gauges)]:
            worst = max(worst, qmat.phase_dist(eval_circuit(circ), controlled_matrix(u, 1, 0, 2)))
            verdict = _sparse_first_implies_all(circ)
            if verdict is not None:
                tested += 1
                violations += not verdict
    ok = violations == 0 and tested > 0 and worst <= 1e-10
    return Check("sparse_propagation", ok,
                 f"{tested} decompositions with sparse first control gate, {violations} violations, "
                 f"max phase_dist = {worst:.3e}")


def solved_decompositions(u: np.ndarray, starts: int, seed: int, settings: OptimizerSettings | None = None):
    """Control-wire gates of two-CNOT decompositions of controlled-``u`` found from random starts."""
    settings = settings or OptimizerSettings()
    problem = SynthesisProblem(two_wire_template(2), controlled_matrix(u, 1, 0, 2))
    found = []
    for r in range(starts):
        res = optimize_local(problem, restart_rng(seed, r).uniform(-math.pi, math.pi, problem.n_params), settings)
        if res.cost <= settings.feasible_tol:
            gates = solved_gates(problem, res.params)
            found.append([gates[s] for s in (1, 3, 5)])  # wire-1 slots of layers 0..2
    return found


def _solved_sparsity_check(rng: np.random.Generator, n_unitaries: int = 6, starts: int = 8) -> Check:
    sparse_first = dense_first = violations = 0
    for i in range(n_unitaries):
        u = haar_unitary(rng, 2) if i >= 2 else (qmat.Z, qmat.X)[i]
        for a1, a2, a3 in solved_decompositions(u, starts, seed=int(rng.integers(2**31))):
            if qmat.is_sparse(a1, 1e-6):
                sparse_first += 1
                violations += not (qmat.is_sparse(a2, 1e-6) and qmat.is_sparse(a3, 1e-6))
            else:
                dense_first += 1
                violations += qmat.is_sparse(a2, 1e-6) or qmat.is_sparse(a3, 1e-6)
    ok = violations == 0 and sparse_first > 0 and dense_first > 0
    return Check("solved_decomposition_sparsity", ok,
                 f"{sparse_first} sparse-first and {dense_first} non-sparse-first solutions, {violations} violations")


def check_identities(seed: int = 7, samples: int = 1000, local_samples: int = 500) -> VerificationRecord:
    """Run the identity battery with a seeded generator."""
    rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
    rec = VerificationRecord("identities")
    rec.checks.append(_flip_check(rng))
    rec.checks.append(_entanglement_sweep(rng, samples))
    rec.checks.append(_eigen_control_check(rng))
    rec.checks.append(_local_invariance_sweep(rng, local_samples))
    rec.checks.append(_controlled_u_check(rng))
    rec.checks.append(_sparse_propagation_check(rng))
    rec.checks.append(_solved_sparsity_check(rng))
    return rec
