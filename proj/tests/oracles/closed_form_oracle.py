#!/usr/bin/env python3
"""Independent scalar oracle for the closed-form equilibrium.

Evaluates every quantity straight from its defining formula with mpmath at
50 digits, using adaptive quadrature for the integrals. Nothing here shares
code with the C++ library. The printed constants are frozen into the unit
and acceptance tests; rerun this script to regenerate them.
"""
import mpmath as mp

mp.mp.dps = 50


class Agent:
    def __init__(self, w, x0, gamma, theta, alpha, h, s, s0):
        self.w, self.x0, self.g, self.th, self.al = map(mp.mpf, (w, x0, gamma, theta, alpha))
        # constant coefficients only; the oracle is used for constant scenarios
        self.h, self.s, self.s0 = map(mp.mpf, (h, s, s0))

    @property
    def S(self):
        return self.s ** 2 + self.s0 ** 2


def E(pop, f):
    return mp.fsum(a.w * f(a) for a in pop)


def phi_psi(pop):
    phi = E(pop, lambda a: a.h * a.s0 / ((1 - a.g) * a.S))
    psi = E(pop, lambda a: a.s0 ** 2 * a.th * a.g / ((1 - a.g) * a.S))
    return phi, psi


def coeff_A(pop, k):
    phi, psi = phi_psi(pop)
    a = pop[k]
    tg = a.th * a.g
    t1 = -a.g / (2 * (1 - a.g) * a.S) * (a.h - tg * a.s0 * phi / (1 + psi)) ** 2
    t2 = -phi ** 2 * tg ** 2 / (2 * (1 + psi) ** 2)
    t3 = tg * E(pop, lambda b: (b.h ** 2 - b.th * b.g * b.s0 * b.h * phi / (1 + psi)) / ((1 - b.g) * b.S))
    t4 = -tg / 2 * E(pop, lambda b: (b.h - b.th * b.g * b.s0 * phi / (1 + psi)) ** 2 / ((1 - b.g) ** 2 * b.S))
    return t1 + t2 + t3 + t4


def kappa(pop):
    return E(pop, lambda b: b.th * b.g / (1 - b.g))


def coeff_B(pop, k):
    a = pop[k]
    EA = mp.fsum(b.w * coeff_A(pop, j) / (1 - b.g) for j, b in enumerate(pop))
    return a.th * a.g / (1 - a.g) * EA / (1 + kappa(pop)) - coeff_A(pop, k) / (1 - a.g)


def coeff_D(pop, k):
    a = pop[k]
    L = E(pop, lambda b: mp.log(b.al) / (1 - b.g))
    return mp.exp(mp.log(a.al) / (1 - a.g) - a.th * a.g * L / ((1 - a.g) * (1 + kappa(pop))))


def pi_star(pop, k):
    phi, psi = phi_psi(pop)
    a = pop[k]
    den = (1 - a.g) * a.S
    return a.h / den - a.th * a.g * a.s0 * phi / (den * (1 + psi))


def c_star(pop, k, T, t):
    """Time-integral form with adaptive quadrature (constant B)."""
    B, D = coeff_B(pop, k), coeff_D(pop, k)
    num = D * mp.exp(-B * (T - t))
    den = 1 + D * mp.quad(lambda s: mp.exp(-B * (T - s)), [t, T])
    return num / den


def G(pop, k, T, t):
    B, D = coeff_B(pop, k), coeff_D(pop, k)
    return mp.exp(B * (T - t)) + D * mp.quad(lambda s: mp.exp(B * (s - t)), [t, T])


def y_tilde(pop, k, T, t):
    a = pop[k]
    tg = a.th * a.g
    ElogD = mp.fsum(b.w * mp.log(coeff_D(pop, j)) for j, b in enumerate(pop))
    ElogG = mp.fsum(b.w * mp.log(G(pop, j, T, t)) for j, b in enumerate(pop))
    return (-tg * ElogD - (1 - a.g) * mp.log(coeff_D(pop, k)) + tg * ElogG
            + (1 - a.g) * mp.log(G(pop, k, T, t)) + mp.log(a.al))


def value_function(pop, k, T):
    a = pop[k]
    Elogx = E(pop, lambda b: mp.log(b.x0))
    Y0 = y_tilde(pop, k, T, 0) - a.th * a.g * Elogx
    return mp.exp(a.g * mp.log(a.x0) + Y0) / a.g


def const_consumption(B, D, tau):
    B, D, tau = map(mp.mpf, (B, D, tau))
    if B == 0:
        return 1 / (tau + 1 / D)
    return 1 / (-1 / B + (1 / D + 1 / B) * mp.exp(B * tau))


def show(name, v):
    print(f"{name:48s} {mp.nstr(v, 20)}")


if __name__ == "__main__":
    single = [Agent(1, 1, 0.5, 1, 1, 0.1, 0.0, 0.2)]
    show("A single{h=.1,s=0,s0=.2,g=.5,th=1}", coeff_A(single, 0))
    show("pi single", pi_star(single, 0))
    two = single[:] + [Agent(0.5, 1, 0.5, 0.5, 1, 0.2, 0.2, 0.2)]
    two[0] = Agent(0.5, 1, 0.5, 1, 1, 0.1, 0.0, 0.2)
    show("phi two", phi_psi(two)[0]); show("psi two", phi_psi(two)[1])
    merton = [Agent(1, 1, 0.5, 0, 1, 0.1, 0.2, 0.0)]
    show("A merton", coeff_A(merton, 0)); show("B merton", coeff_B(merton, 0))
    show("c*(0) merton T=1", c_star(merton, 0, 1, 0))
    show("const_consumption(0.25,1,1)", const_consumption(0.25, 1, 1))
    show("const_consumption(1e-9,1,1)", const_consumption(mp.mpf('1e-9'), 1, 1))
    for t in (0, 0.25, 0.5):
        show(f"Ytilde merton t={t}", y_tilde(merton, 0, 1, t))

    # Reference two-type scenario used in several tests (constant coefficients, T=1)
    ref = [Agent(0.6, 1.0, 0.5, 0.5, 1.2, 0.08, 0.25, 0.15),
           Agent(0.4, 1.5, -1.0, 0.8, 0.8, 0.05, 0.20, 0.20)]
    for k in range(2):
        show(f"ref A[{k}]", coeff_A(ref, k))
        show(f"ref B[{k}]", coeff_B(ref, k))
        show(f"ref D[{k}]", coeff_D(ref, k))
        show(f"ref pi[{k}]", pi_star(ref, k))
        show(f"ref c*(0)[{k}]", c_star(ref, k, 1, 0))
        show(f"ref c*(0.5)[{k}]", c_star(ref, k, 1, mp.mpf('0.5')))
        show(f"ref Ytilde(0)[{k}]", y_tilde(ref, k, 1, 0))
        show(f"ref V[{k}]", value_function(ref, k, 1))
    # log-alpha shift by +0.3 on every type
    shifted = [Agent(a.w, a.x0, a.g, a.th, a.al * mp.exp(mp.mpf('0.3')), a.h, a.s, a.s0) for a in ref]
    for k in range(2):
        show(f"ref shifted-log-alpha V[{k}]", value_function(shifted, k, 1))

    # Monte-Carlo reference scenarios (single type, T=1)
    mc_pos = [Agent(1, 1.0, 0.5, 0.5, 1.0, 0.06, 0.25, 0.15)]
    mc_neg = [Agent(1, 1.0, -1.0, 0.5, 1.0, 0.06, 0.25, 0.15)]
    for name, p in (("mc gamma=0.5", mc_pos), ("mc gamma=-1", mc_neg)):
        show(f"{name} pi", pi_star(p, 0))
        show(f"{name} c*(0)", c_star(p, 0, 1, 0))
        show(f"{name} V", value_function(p, 0, 1))
