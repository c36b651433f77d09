"""Compiled extension against the numpy reference, plus backend selection."""

import os
import subprocess
import sys

import numpy as np
import pytest

from waveplate import kernels
from waveplate.kernels import reference

compiled = pytest.importorskip(
    "waveplate.kernels._fast",
    reason="compiled backend not built; agreement checks need both")


def rnd(shape, seed):
    return np.random.default_rng(seed).standard_normal(shape)


def test_wave_apply_2d_agreement():
    u = rnd((33, 33), 51)
    neu = rnd(33, 52)
    a = compiled.wave_apply_2d(u, neu, 1 / 32, 1 / 32)
    b = reference.wave_apply_2d(u, neu, 1 / 32, 1 / 32)
    assert np.allclose(a, b, rtol=1e-13, atol=1e-11)


def test_wave_apply_3d_agreement():
    u = rnd((9, 9, 9), 53)
    neu = rnd((9, 9), 54)
    a = compiled.wave_apply_3d(u, neu, 0.125, 0.125, 0.125)
    b = reference.wave_apply_3d(u, neu, 0.125, 0.125, 0.125)
    assert np.allclose(a, b, rtol=1e-13, atol=1e-11)


def test_grad_sq_agreement():
    u = rnd((33, 33), 55)
    wx = rnd(33, 56) ** 2
    wy = rnd(33, 57) ** 2
    a = compiled.grad_sq_2d(u, 1 / 32, 1 / 32, wx, wy)
    b = reference.grad_sq_2d(u, 1 / 32, 1 / 32, wx, wy)
    assert a == pytest.approx(b, rel=1e-12)
    v = rnd((9, 9, 9), 58)
    w3 = [rnd(9, 60 + i) ** 2 for i in range(3)]
    a3 = compiled.grad_sq_3d(v, 0.125, 0.125, 0.125, *w3)
    b3 = reference.grad_sq_3d(v, 0.125, 0.125, 0.125, *w3)
    assert a3 == pytest.approx(b3, rel=1e-12)


def test_damping_solve_agreement_and_equation():
    v = 4.0 * rnd((40, 40), 61)
    kappa, expo = 0.35, 2.0
    xa, ia = compiled.damping_solve_power(v, kappa, expo)
    xb, ib = reference.damping_solve_power(v, kappa, expo)
    # both solve to ~1e-12; allow a few of those tolerances between them
    assert np.max(np.abs(xa - xb)) < 1e-11 * (1.0 + np.max(np.abs(v)))
    resid = xa + kappa * np.abs(xa) ** (expo - 1.0) * xa - v
    assert np.max(np.abs(resid)) < 1e-10 * (1.0 + np.max(np.abs(v)))
    assert ia <= 60 and ib <= 60


def test_fractional_exponent_damping():
    v = rnd(500, 62)
    xa, _ = compiled.damping_solve_power(v, 1.7, 1.5)
    xb, _ = reference.damping_solve_power(v, 1.7, 1.5)
    assert np.max(np.abs(xa - xb)) < 1e-11 * (1.0 + np.max(np.abs(v)))


def test_env_var_forces_reference_backend():
    code = ("import waveplate.kernels as k; print(k.backend_name)")
    env = dict(os.environ, WAVEPLATE_KERNELS="py")
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "reference"
    env = dict(os.environ, WAVEPLATE_KERNELS="cy")
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "compiled"


def test_active_backend_is_compiled_here():
    # the import of waveplate.kernels._fast above proves the build exists,
    # so the default selection must have picked it
    assert kernels.backend_name == "compiled"


def test_bench_reports_both_backends():
    from waveplate.bench import run_bench
    text = run_bench(n=65, dim=2, repeats=2)
    assert "compiled" in text and "reference" in text
    assert "speedup" in text
