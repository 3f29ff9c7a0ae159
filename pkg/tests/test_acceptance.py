"""Exit criteria. Each test records one PASS/FAIL line, printed at session end."""
import itertools
import json
import random
import time
from fractions import Fraction
from math import comb

import numpy as np

from conftest import ACCEPTANCE_RESULTS, H, SX, SXDG, I2, X, cnot_dense, embed
from qkdlab.bb84 import bb84_run, prepare, receive
from qkdlab.channel import HADAMARD, SX as SX_FAMILY, EveConfig, NoiseConfig, intercept_branches, qber
from qkdlab.cli import main
from qkdlab.e91 import apply_flags, e91_run, make_bell_pair
from qkdlab.harness import dumps, strip_header
from qkdlab.qsim import GateKind, apply_1q, apply_cnot, basis_state, gate_matrix, new_state, probabilities
from qkdlab.randtest import (
    BitSample,
    binomial_balance_p,
    ind_test_p,
    longest_repeat_length,
    mcv_min_entropy,
    validate,
)

FAMILIES = (HADAMARD, SX_FAMILY)
ALT_ENTROPY_100K = 0.9882953172258476


def record(n: int, ok: bool, detail: str):
    ACCEPTANCE_RESULTS[n] = (ok, detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def test_criterion_1_gate_algebra():
    t0 = time.perf_counter()
    sx, sxdg, h, x = (gate_matrix(k) for k in (GateKind.SQRT_X, GateKind.SQRT_X_INV, GateKind.HADAMARD, GateKind.NOT_X))
    errs = [
        np.abs(sx @ sx - x).max(),
        np.abs(sxdg @ sx - np.eye(2)).max(),
        np.abs(h @ h - np.eye(2)).max(),
    ]
    for kind in GateKind:
        u = gate_matrix(kind)
        errs.append(np.abs(u.conj().T @ u - np.eye(2)).max())
    elapsed = time.perf_counter() - t0
    worst = max(errs)
    record(1, worst <= 1e-12 and elapsed < 1e-3, f"max entry error {worst:.3g}, {elapsed * 1e3:.3f} ms")


def test_criterion_2_reference_distributions():
    def dev(state, expected):
        p = probabilities(state)
        return max(abs(p[k] - expected.get(k, 0.0)) for k in p)

    half = {"0": 0.5, "1": 0.5}
    bell = {"00": 0.5, "11": 0.5}
    quarter = {k: 0.25 for k in ("00", "01", "10", "11")}
    devs = {
        "plus via H": dev(apply_1q(new_state(1), GateKind.HADAMARD, 0), half),
        "plus via SX": dev(apply_1q(new_state(1), GateKind.SQRT_X, 0), half),
        "bell pair": dev(make_bell_pair(), bell),
    }
    for fam in FAMILIES:
        devs[f"{fam.name} intermediate"] = dev(apply_flags(make_bell_pair(), 1, 0, fam), quarter)
        devs[f"{fam.name} final"] = dev(apply_flags(make_bell_pair(), 1, 1, fam), bell)
    # two independent pairs (q0, q2) and (q1, q3), matched Hadamard flags
    pair = probabilities(apply_flags(make_bell_pair(), 1, 1, HADAMARD))
    four = {}
    for a, pa in pair.items():
        for b, pb in pair.items():
            key = b[0] + a[0] + b[1] + a[1]
            four[key] = four.get(key, 0.0) + pa * pb
    two_pairs = {"0000": 0.25, "0101": 0.25, "1010": 0.25, "1111": 0.25}
    devs["two_pairs"] = max(abs(four.get(k, 0.0) - two_pairs.get(k, 0.0)) for k in set(four) | set(two_pairs))
    worst = max(devs.values())
    record(2, worst <= 1e-12, f"max deviation {worst:.3g} over {len(devs)} distributions")


def _dense_1q(kind):
    return {GateKind.IDENTITY: I2, GateKind.NOT_X: X, GateKind.HADAMARD: H,
            GateKind.SQRT_X: SX, GateKind.SQRT_X_INV: SXDG}[kind]


def test_criterion_3_oracle_equivalence():
    t0 = time.perf_counter()
    worst, count = 0.0, 0
    for n in (1, 2):
        ops = [("1q", k, q) for k in GateKind for q in range(n)]
        if n == 2:
            ops += [("cx", 0, 1), ("cx", 1, 0)]
        inputs = [basis_state(format(i, f"0{n}b")) for i in range(1 << n)]
        for depth in range(4):
            for circuit in itertools.product(ops, repeat=depth):
                dense = np.eye(1 << n, dtype=complex)
                for op in circuit:
                    m = embed(_dense_1q(op[1]), op[2], n) if op[0] == "1q" else cnot_dense(op[1], op[2])
                    dense = m @ dense
                for s in inputs:
                    out = s
                    for op in circuit:
                        out = apply_1q(out, op[1], op[2]) if op[0] == "1q" else apply_cnot(out, op[1], op[2])
                    worst = max(worst, float(np.abs(out.to_array() - dense @ s.to_array()).max()))
                    count += 1
    elapsed = time.perf_counter() - t0
    record(3, worst <= 1e-12 and elapsed < 10,
           f"{count} circuit/input pairs, max amp diff {worst:.3g}, {elapsed:.2f} s")


def test_criterion_4_noiseless_protocols():
    t0 = time.perf_counter()
    results = []
    for fam in FAMILIES:
        for name, run in (("bb84", bb84_run), ("e91", e91_run)):
            t = run(10_000, fam, master_seed=2026)
            results.append((f"{name}/{fam.name}", qber(t.alice_key, t.bob_key), t.sift_fraction))
    elapsed = time.perf_counter() - t0
    ok = all(q == 0.0 and 0.48 <= f <= 0.52 for _, q, f in results) and elapsed < 5
    detail = ", ".join(f"{n} qber={q:g} sift={f:.4f}" for n, q, f in results)
    record(4, ok, f"{detail}; {elapsed:.2f} s")


def test_criterion_5_calibrated_error():
    t0 = time.perf_counter()
    noise = NoiseConfig(readout_epsilon=0.05)
    e = e91_run(100_000, SX_FAMILY, noise, master_seed=94)
    b = bb84_run(100_000, SX_FAMILY, noise, master_seed=94)
    q_e, q_b = qber(e.alice_key, e.bob_key), qber(b.alice_key, b.bob_key)
    elapsed = time.perf_counter() - t0
    ok = 0.082 <= q_e <= 0.108 and 0.042 <= q_b <= 0.058 and q_e > q_b and elapsed < 30
    record(5, ok, f"e91 qber {q_e:.6f} (target 0.095), bb84 qber {q_b:.6f} (target 0.05), {elapsed:.2f} s")


def test_criterion_6_eavesdropper():
    t = bb84_run(10_000, HADAMARD, eve=EveConfig(True), master_seed=25)
    q = qber(t.alice_key, t.bob_key)
    worst = 0.0
    for fam in FAMILIES:
        enc, dec = (H, H) if fam is HADAMARD else (SX, SXDG)
        for bit, flag, eve_flag in itertools.product((0, 1), repeat=3):
            sim = sum(p * probabilities(receive(post, flag, fam))[str(1 - bit)]
                      for p, post in intercept_branches(prepare(bit, flag, fam), 0, fam, eve_flag))
            # dense branch enumeration
            psi = np.linalg.matrix_power(X, bit) @ np.array([1, 0], dtype=complex)
            psi = enc @ psi if flag else psi
            seen = dec @ psi if eve_flag else psi
            exact = 0.0
            for o in (0, 1):
                resent = np.eye(2, dtype=complex)[o]
                resent = enc @ resent if eve_flag else resent
                at_bob = dec @ resent if flag else resent
                exact += abs(seen[o]) ** 2 * abs(at_bob[1 - bit]) ** 2
            worst = max(worst, abs(sim - exact))
    ok = 0.23 <= q <= 0.27 and worst <= 1e-12
    record(6, ok, f"sifted qber {q:.6f} (derived 0.25), branch enumeration max diff {worst:.3g}")


def _key_bits(run, family, seed, n_bits=100_000):
    t = run(205_000, family, master_seed=seed)
    assert len(t.alice_key) >= n_bits
    return t.alice_key[:n_bits]


def test_criterion_7_randomness_suite():
    t0 = time.perf_counter()
    lines, ok = [], True
    variants = [(name, run, fam) for fam in FAMILIES for name, run in (("bb84", bb84_run), ("e91", e91_run))]
    for name, run, fam in variants:
        r = validate(BitSample(_key_bits(run, fam, seed=42), f"{name}/{fam.name}"))
        ok &= r.entropy_per_bit >= 0.98 and all(v == "pass" for v in r.verdicts.values())
        lines.append(f"{name}/{fam.name} H={r.entropy_per_bit:.4f} bin={r.binomial_p:.3g} "
                     f"ind={r.ind_p:.3g} gof={r.gof_p:.3g} lrs={r.lrs_p:.3g}")
    alt = "01" * 50_000
    h_alt, _ = mcv_min_entropy(alt)
    ind_alt = ind_test_p(alt)
    ok &= abs(h_alt - ALT_ENTROPY_100K) <= 0.001 and abs(h_alt - 0.988) <= 0.001 and ind_alt < 0.001
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 60
    record(7, ok, "; ".join(lines) + f"; alternating H={h_alt:.6f} ind p={ind_alt:.3g}; {elapsed:.1f} s")


def _naive_repeat(s):
    x = np.frombuffer(s.encode(), dtype=np.uint8)
    best = 0
    for d in range(1, len(x)):
        eq = np.concatenate([[0], (x[:-d] == x[d:]).astype(np.int8), [0]])
        edges = np.flatnonzero(np.diff(eq))
        if edges.size:
            best = max(best, int((edges[1::2] - edges[::2]).max()))
    return best


def test_criterion_8_statistical_oracles():
    rng = random.Random(8)
    worst_rel = 0.0
    for _ in range(1000):
        n = rng.randint(1, 20)
        bits = "".join(rng.choice("01") for _ in range(n))
        k = bits.count("1")
        m = max(k, n - k)
        exact = min(Fraction(1), 2 * Fraction(sum(comb(n, j) for j in range(m, n + 1)), 2 ** n))
        worst_rel = max(worst_rel, abs(binomial_balance_p(bits) - float(exact)) / float(exact))
    lrs_ok, cases = True, 0
    for length in list(range(2, 40)) + [rng.randint(40, 2000) for _ in range(40)] + [2000]:
        p1 = rng.choice([0.5, 0.7, 0.9])
        s = "".join("1" if rng.random() < p1 else "0" for _ in range(length))
        lrs_ok &= longest_repeat_length(s) == _naive_repeat(s)
        cases += 1
    record(8, worst_rel <= 1e-12 and lrs_ok,
           f"binomial max rel err {worst_rel:.3g} over 1000 cases; LRS agreed on {cases} inputs: {lrs_ok}")


def test_criterion_9_determinism(tmp_path):
    variants = [
        ["--protocol", "bb84", "--family", "sx", "--eve"],
        ["--protocol", "e91", "--family", "hadamard", "--readout-eps", "0.05", "--depol-p", "0.01"],
    ]
    ok = True
    for i, v in enumerate(variants):
        docs = []
        for rep in ("a", "b"):
            out = tmp_path / rep / f"v{i}.json"
            main(["run", *v, "--rounds", "3000", "--seed", "123", "--out", str(out)])
            docs.append((out, json.loads(out.read_text())))
        (pa, da), (pb, db) = docs
        ok &= dumps(strip_header(da)) == dumps(strip_header(db))
        for suffix in (".alice.txt", ".bob.txt", ".transcript.json"):
            ok &= pa.with_name(f"v{i}{suffix}").read_bytes() == pb.with_name(f"v{i}{suffix}").read_bytes()
        # without a header the report files themselves are byte-identical
        raw = []
        for rep in ("c", "d"):
            out = tmp_path / rep / f"v{i}.json"
            main(["run", *v, "--rounds", "3000", "--seed", "123", "--out", str(out), "--no-timestamp"])
            raw.append(out.read_bytes())
        ok &= raw[0] == raw[1]
    record(9, ok, f"{len(variants)} run configurations reproduced byte-for-byte (header excluded)")
