#!/usr/bin/env python3
# propagate_reference.py — independent reference values for the propagation tests.
#
# Integrates the isolated two-level system i dc/dt = H(t) c with a classical
# RK4 scheme written directly in numpy, with no code shared with the C++
# implementation.  Prints frozen decimals that the C++ test suite pins.
import numpy as np

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def hamiltonian(delta, eps):
    return 0.5 * delta * SX + 0.5 * eps * SZ


def rk4_sweep(delta, kappa, t0, t_max, dt):
    """Integrate i dc/dt = H(t) c, eps(t) = kappa*t, from c(t0) = (1, 0).

    Returns the sigma_z(t) series on the node grid including both endpoints.
    """
    n = int(round((t_max - t0) / dt))

    def rhs(t, c):
        return -1j * (hamiltonian(delta, kappa * t) @ c)

    c = np.array([1.0 + 0j, 0.0 + 0j])
    sz = np.empty(n + 1)
    sz[0] = 1.0
    t = t0
    for k in range(n):
        k1 = rhs(t, c)
        k2 = rhs(t + 0.5 * dt, c + 0.5 * dt * k1)
        k3 = rhs(t + 0.5 * dt, c + 0.5 * dt * k2)
        k4 = rhs(t + dt, c + dt * k3)
        c = c + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t0 + (k + 1) * dt
        sz[k + 1] = (abs(c[0]) ** 2 - abs(c[1]) ** 2).real
    return sz


def boxed_asymptote(sz, t0, dt, t_max):
    """Mean of sigma_z from the first local maximum after the global minimum."""
    i_min = int(np.argmin(sz))
    if i_min == 0 or i_min == len(sz) - 1:
        raise RuntimeError("no interior minimum")
    i_max = None
    for k in range(i_min + 1, len(sz) - 1):
        if sz[k] >= sz[k - 1] and sz[k] >= sz[k + 1]:
            i_max = k
            break
    if i_max is None:
        raise RuntimeError("no maximum after the minimum")
    return sz[i_max:].mean(), t0 + i_max * dt


def window_mean(sz, t0, dt, a, b):
    i0 = int(round((a - t0) / dt))
    i1 = int(round((b - t0) / dt))
    return sz[i0:i1 + 1].mean()


def closed_form_limit(delta, kappa):
    return 2.0 * np.exp(-np.pi * delta**2 / (2.0 * kappa)) - 1.0


def main():
    np.set_printoptions(precision=17)

    print("== closed forms ==")
    print(f"2*exp(-pi/10)-1          = {closed_form_limit(1.0, 5.0):.17g}")
    print(f"tanh(sqrt(2)/2)/sqrt(2)  = {np.tanh(np.sqrt(2.0) / 2.0) / np.sqrt(2.0):.17g}")
    print(f"20^(-1/19)               = {20.0 ** (-1.0 / 19.0):.17g}")

    print("\n== driven two-level endpoint (delta=1, kappa=2, t in [0,1], c0=(1,0)) ==")
    for dt in (1e-4, 1e-5, 2e-6):
        sz = rk4_sweep(1.0, 2.0, 0.0, 1.0, dt)
        print(f"  dt={dt:g}: sz(1) = {sz[-1]:.17g}")

    print("\n== finite-preparation sweep asymptotes (delta=1, kappa=5, t_max=10) ==")
    lz = closed_form_limit(1.0, 5.0)
    for t0 in (-5.0, -10.0, -10.06, -20.0, -40.0):
        for dt in (1e-4, 2e-5):
            sz = rk4_sweep(1.0, 5.0, t0, 10.0, dt)
            asym, win_start = boxed_asymptote(sz, t0, dt, 10.0)
            dev = asym - lz
            extra = ""
            if dt == 1e-4:
                late = window_mean(sz, t0, dt, 3.5, 10.0)
                extra = f"  mean[3.5,10]={late:.10g} (diff {late - asym:+.3g})"
            print(f"  t0={t0:<7g} dt={dt:g}: asym={asym:.12g} dev={dev:+.6g} "
                  f"window_start={win_start:.4g}{extra}")

    print("\n== degenerate sweep (delta=0) has no interior minimum ==")
    sz = rk4_sweep(0.0, 5.0, -1.0, 10.0, 1e-3)
    try:
        boxed_asymptote(sz, -1.0, 1e-3, 10.0)
        print("  UNEXPECTED: asymptote found")
    except RuntimeError as e:
        print(f"  as expected: {e}")


if __name__ == "__main__":
    main()
