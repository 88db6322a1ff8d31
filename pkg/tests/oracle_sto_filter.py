"""Independent oracle for timing-filter tap values.

Evaluates the piecewise raised-cosine expression with sympy at high precision
and prints literals that are frozen into test_channel.py.  Run manually:

    python tests/oracle_sto_filter.py
"""

import sympy as sp


def g(t, beta):
    t = sp.Rational(t) if not isinstance(t, sp.Expr) else t
    beta = sp.Rational(beta)
    if t == 0:
        return sp.Integer(1)
    if abs(t) == 1 / (2 * beta):
        arg = sp.pi / (2 * beta)
        return sp.pi / 4 * sp.sin(arg) / arg
    return sp.cos(beta * t) / (sp.pi * t) * sp.sin(sp.pi * t) / (sp.pi * t)


def main():
    cases = [
        # (tau_sto, beta, tap index)  -> t = idx - 8 + tau_sto
        ("0.5", "0.3", 8),     # t = 0.5
        ("0.5", "0.3", 7),     # t = -0.5
        ("0.25", "0.3", 10),   # t = 2.25
        ("0.5", "0.2", 10),    # t = 2.5 == T/(2 beta), the edge branch
        ("0.0", "0.25", 10),   # t = 2   == T/(2 beta) for beta = 1/4
        ("0.125", "0.3", 1),   # t = -6.875
    ]
    for tau, beta, idx in cases:
        t = sp.Rational(idx) - 8 + sp.Rational(tau)
        val = g(t, sp.Rational(beta))
        print(f"tau_sto={tau} beta={beta} idx={idx} t={t}: "
              f"{sp.N(val, 20)}")


if __name__ == "__main__":
    main()
