from pathlib import Path

import numpy as np
import pytest

from qudit_concurrence import gate_model as gm
from qudit_concurrence.ion import (
    AncillaIonLevel as A,
    Ion,
    IonLevelScheme,
    Pulse,
    PulseKind,
    PulseProgram,
    TargetLevel as T,
    carrier_unitary,
    compile_protocol,
    compile_readout,
    execute,
    format_program,
    format_readout,
    parse_program,
    parse_readout,
    program_unitary,
    pulse_area,
    sideband_unitary,
)
from qudit_concurrence.linalg import StateVector
from tests.oracles import SX, SY, random_state, taylor_expm

GOLDEN = Path(__file__).parent / "golden"
SCHEME = IonLevelScheme(2)


def embed_block(m, j, k, dim):
    """Place a 2x2 matrix on levels (j, k) of a dim-level space, identity elsewhere."""
    out = np.eye(dim, dtype=complex)
    idx = [j, k]
    out[np.ix_(idx, idx)] = m
    return out


def level_fock(level, n, n_levels, n_fock):
    v = np.zeros(n_levels * n_fock, dtype=complex)
    v[int(level) * n_fock + n] = 1.0
    return v


# --- carrier ---

def test_carrier_ry_half_pi():
    u = carrier_unitary(np.pi / 2, -np.pi / 2, T.g, T.e)
    out = u @ np.array([1, 0, 0], dtype=complex)
    assert np.allclose(out, np.array([1, -1, 0]) / np.sqrt(2), atol=1e-15)


@pytest.mark.parametrize("phi", [0.0, 0.3, -np.pi / 2, 2.0])
def test_carrier_zero_area_is_identity(phi):
    assert np.allclose(carrier_unitary(0.0, phi, A.G, A.E), np.eye(8), atol=0)


@pytest.mark.parametrize("theta", [0.4, np.pi / 2, np.pi, -1.3])
def test_carrier_phase_zero_is_rx(theta):
    rx = taylor_expm(-0.5j * theta * SX)
    assert np.max(np.abs(carrier_unitary(theta, 0.0, T.g, T.e) - embed_block(rx, 0, 1, 3))) < 1e-13


def test_carrier_phase_minus_half_pi_is_ry():
    theta = 1.1
    ry = taylor_expm(-0.5j * theta * SY)
    assert np.max(np.abs(carrier_unitary(theta, -np.pi / 2, A.Gp, A.Ep) - embed_block(ry, 1, 3, 8))) < 1e-13


def test_carrier_rejects_bad_pairs():
    with pytest.raises(ValueError):
        carrier_unitary(1.0, 0.0, A.G, A.G)
    with pytest.raises(ValueError):
        carrier_unitary(1.0, 0.0, A.G, T.e)


# --- sidebands ---

def test_blue_pi_gp_to_ep_one_phonon():
    nf = SCHEME.n_fock
    u = sideband_unitary("blue", np.pi, A.Gp, A.Ep, SCHEME)
    out = u @ level_fock(A.Gp, 0, 8, nf)
    assert np.allclose(out, level_fock(A.Ep, 1, 8, nf), atol=1e-15)


def test_red_pi_e_to_minus_g_one_phonon():
    nf = SCHEME.n_fock
    u = sideband_unitary("red", np.pi, A.G, A.E, SCHEME)
    out = u @ level_fock(A.E, 0, 8, nf)
    assert np.allclose(out, -level_fock(A.G, 1, 8, nf), atol=1e-15)


def test_red_two_pi_on_aux_flips_sign_with_phonon():
    nf = SCHEME.n_fock
    u = sideband_unitary(PulseKind.red_sideband, 2 * np.pi, T.g, T.e_aux, SCHEME)
    assert np.allclose(u @ level_fock(T.g, 1, 3, nf), -level_fock(T.g, 1, 3, nf), atol=1e-15)
    assert np.allclose(u @ level_fock(T.g, 0, 3, nf), level_fock(T.g, 0, 3, nf), atol=0)


@pytest.mark.parametrize("kind", ["red", "blue"])
def test_sideband_is_block_diagonal_in_excitation_number(kind):
    scheme = IonLevelScheme(4)
    nf = scheme.n_fock
    u = sideband_unitary(kind, 1.234, A.G, A.E, scheme)
    excited = np.zeros(8)
    excited[A.E] = 1.0
    number = np.kron(np.eye(8), np.diag(np.arange(nf)))
    # red conserves n_phonon + n_excited, blue conserves n_phonon - n_excited
    sign = 1.0 if kind == "red" else -1.0
    k = number + sign * np.kron(np.diag(excited), np.eye(nf))
    assert np.max(np.abs(u @ k - k @ u)) < 1e-12


def test_sideband_rejects_carrier_kind():
    with pytest.raises(ValueError):
        sideband_unitary(PulseKind.carrier, 1.0, A.G, A.E, SCHEME)


# --- pulse records ---

def test_pulse_validation():
    with pytest.raises(ValueError):
        Pulse(Ion.ancilla, PulseKind.carrier, A.G, A.G, 1.0)
    with pytest.raises(ValueError):
        Pulse(Ion.target, PulseKind.carrier, 0, 5, 1.0)
    with pytest.raises(ValueError):
        Pulse(Ion.ancilla, PulseKind.red_sideband, A.G, A.E, 1.0, phi=0.2)


def test_pulse_area():
    assert pulse_area(PulseKind.carrier, 2.0, 0.5) == 1.0
    assert pulse_area(PulseKind.blue_sideband, 2.0, 0.5, lamb_dicke=0.1) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        pulse_area(PulseKind.red_sideband, 2.0, 0.5)


def test_scheme_rejects_small_cutoff():
    with pytest.raises(ValueError):
        IonLevelScheme(1)


# --- the compiled protocol ---

def test_program_length():
    assert len(compile_protocol(SCHEME)) == 3 + 5 + 5 + 3 + 4


def test_first_three_pulses_prepare_ancilla():
    rng = np.random.default_rng(31)
    chi = random_state(rng)
    prog = compile_protocol(SCHEME)[:3]
    res = execute(prog, SCHEME.embed(chi), SCHEME)
    ref = gm.prepare_ancilla(gm.initial_state(chi)).state.amplitudes
    assert np.max(np.abs(SCHEME.gate_projection(res.state) - ref)) < 1e-14
    assert res.phonon_excitation() < 1e-28


def test_pulse_level_matches_gate_model():
    rng = np.random.default_rng(32)
    prog = compile_protocol(SCHEME)
    for _ in range(10):
        chi = random_state(rng)
        res = execute(prog, SCHEME.embed(chi), SCHEME)
        ref = gm.run_protocol(chi).state.amplitudes
        fid = abs(np.vdot(ref, SCHEME.gate_projection(res.state))) ** 2
        assert fid >= 1 - 1e-10
        assert res.phonon_excitation() < 1e-10
        assert res.valid


def test_no_global_phase_between_models():
    chi = random_state(np.random.default_rng(33))
    res = execute(compile_protocol(SCHEME), SCHEME.embed(chi), SCHEME)
    ref = gm.run_protocol(chi).state.amplitudes
    assert np.max(np.abs(SCHEME.gate_projection(res.state) - ref)) < 1e-12


def test_program_then_inverse_is_identity():
    rng = np.random.default_rng(34)
    prog = compile_protocol(SCHEME)
    init = SCHEME.embed(random_state(rng))
    back = execute(prog + prog.inverse(), init, SCHEME).state
    assert np.max(np.abs(back.amplitudes - init.amplitudes)) < 1e-10


def test_norms_preserved_per_pulse():
    res = execute(compile_protocol(SCHEME), SCHEME.embed(random_state(np.random.default_rng(35))), SCHEME)
    assert len(res.norms) == 20
    assert max(abs(n - 1) for n in res.norms) < 1e-12


def test_empty_program_is_identity():
    init = SCHEME.embed(random_state(np.random.default_rng(36)))
    res = execute(PulseProgram(), init, SCHEME)
    assert np.array_equal(res.state.amplitudes, init.amplitudes)
    assert res.leakage == 0.0


def test_unaddressed_levels_keep_their_population():
    rng = np.random.default_rng(37)
    dims = SCHEME.dims + (2,)
    psi = rng.normal(size=int(np.prod(dims))) + 1j * rng.normal(size=int(np.prod(dims)))
    # keep the guard level empty so sidebands stay inside the truncation
    t = psi.reshape(dims)
    t[:, :, -1, :] = 0.0
    state = StateVector(dims, t / np.linalg.norm(t))
    prog = compile_protocol(SCHEME) + compile_readout(SCHEME).mapping
    for pulse in prog:
        out = execute([pulse], state, SCHEME).state
        factor = SCHEME.factor(pulse.ion)
        before = state.marginal_probabilities(factor)
        after = out.marginal_probabilities(factor)
        untouched = [i for i in range(len(before)) if i not in (pulse.lower, pulse.upper)]
        assert np.max(np.abs(before[untouched] - after[untouched])) < 1e-14


def test_leakage_into_guard_level_is_flagged():
    prog = PulseProgram((Pulse(Ion.ancilla, PulseKind.blue_sideband, A.Gp, A.Ep, np.pi / np.sqrt(2)),))
    init = SCHEME.embed(np.array([1, 0, 0, 0]), ancilla_level=A.Gp, phonon=1)
    res = execute(prog, init, SCHEME)
    assert res.leakage > 0.99
    assert not res.valid


def test_execute_rejects_mismatched_dims():
    with pytest.raises(ValueError):
        execute(PulseProgram(), IonLevelScheme(3).embed(np.array([1, 0, 0, 0])), SCHEME)


def test_higher_cutoff_gives_same_unitary_on_low_sectors():
    prog = compile_protocol(SCHEME)
    chi = random_state(np.random.default_rng(38))
    big = IonLevelScheme(4)
    a = SCHEME.gate_projection(execute(prog, SCHEME.embed(chi), SCHEME).state)
    b = big.gate_projection(execute(prog, big.embed(chi), big).state)
    assert np.max(np.abs(a - b)) < 1e-13


def test_program_unitary_is_unitary():
    u = program_unitary(compile_protocol(SCHEME)[:5], SCHEME)
    assert np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) < 1e-12


# --- serialisation ---

def test_protocol_golden_file():
    text = format_program(compile_protocol(SCHEME))
    assert text == (GOLDEN / "protocol_program.txt").read_text()


def test_readout_golden_file():
    text = format_readout(compile_readout(SCHEME))
    assert text == (GOLDEN / "readout_program.txt").read_text()


def test_program_round_trip():
    prog = compile_protocol(SCHEME)
    back = parse_program(format_program(prog))
    assert back.label == prog.label
    assert len(back) == len(prog)
    for p, q in zip(prog, back):
        assert (p.ion, p.kind, p.lower, p.upper) == (q.ion, q.kind, q.lower, q.upper)
        assert abs(p.theta - q.theta) < 1e-11 * max(1, abs(p.theta))
        assert abs(p.phi - q.phi) < 1e-11
    assert format_program(back) == format_program(prog)


def test_readout_round_trip():
    plan = compile_readout(SCHEME)
    mapping, unshelve = parse_readout(format_readout(plan))
    assert format_program(mapping) == format_program(plan.mapping)
    assert format_program(unshelve) == format_program(plan.unshelve_program)


@pytest.mark.parametrize(
    "line",
    [
        "ancilla carrier G E 1.0",
        "ancilla laser G E 1.0 0.0",
        "ancilla carrier G X 1.0 0.0",
        "target carrier g e one 0.0",
        "ancilla red_sideband G E 1.0 0.5",
    ],
)
def test_parse_errors_report_line(line):
    with pytest.raises(ValueError, match="line 2"):
        parse_program("# header\n" + line + "\n")
