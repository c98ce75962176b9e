"""Computer-algebra oracles: curvature from first principles via sympy.

Everything here derives curvature straight from the metric tensor
(Christoffel -> Ricci -> scalar), independently of the formulas coded in the
package, so agreement is a genuine two-route check.
"""

from functools import lru_cache

import sympy as sp


def curvature_from_metric(gdiag, coords):
    """(Ricci matrix, scalar curvature) of a diagonal metric, symbolically."""
    n = len(coords)
    g = sp.diag(*gdiag)
    ginv = g.inv()
    Gam = [
        [
            [
                sp.simplify(
                    sum(
                        ginv[k, l]
                        * (
                            sp.diff(g[i, l], coords[j])
                            + sp.diff(g[j, l], coords[i])
                            - sp.diff(g[i, j], coords[l])
                        )
                        for l in range(n)
                    )
                    / 2
                )
                for j in range(n)
            ]
            for i in range(n)
        ]
        for k in range(n)
    ]
    Ric = sp.zeros(n, n)
    for i in range(n):
        for j in range(n):
            expr = 0
            for k in range(n):
                expr += sp.diff(Gam[k][i][j], coords[k]) - sp.diff(Gam[k][i][k], coords[j])
                for l in range(n):
                    expr += Gam[k][k][l] * Gam[l][i][j] - Gam[k][j][l] * Gam[l][i][k]
            Ric[i, j] = sp.simplify(expr)
    R = sp.simplify(sum(ginv[i, i] * Ric[i, i] for i in range(n)))
    return Ric, R


@lru_cache(maxsize=None)
def warped_R_lambdified(w_code: str):
    """Numeric R(r) for g = dr^2 + 2 w^2 (dth^2 + sin^2 dph^2), w given as code."""
    r, th = sp.symbols("r theta", positive=True)
    w = sp.sympify(w_code, locals={"r": r})
    _, R = curvature_from_metric([1, 2 * w**2, 2 * w**2 * sp.sin(th) ** 2], [r, th, sp.Symbol("phi")])
    return sp.lambdify(r, sp.simplify(R), "numpy")


@lru_cache(maxsize=None)
def warped_sectionals_lambdified(w_code: str):
    """(K_rad, K_sph) from the Riemann tensor of the same metric, numerically."""
    r, th, ph = sp.symbols("r theta phi", positive=True)
    w = sp.sympify(w_code, locals={"r": r})
    coords = [r, th, ph]
    g = sp.diag(1, 2 * w**2, 2 * w**2 * sp.sin(th) ** 2)
    ginv = g.inv()
    n = 3
    Gam = [
        [
            [
                sum(
                    ginv[k, l]
                    * (sp.diff(g[i, l], coords[j]) + sp.diff(g[j, l], coords[i]) - sp.diff(g[i, j], coords[l]))
                    for l in range(n)
                )
                / 2
                for j in range(n)
            ]
            for i in range(n)
        ]
        for k in range(n)
    ]
    def Riem(a, b, c, d):  # R^a_{bcd}
        expr = sp.diff(Gam[a][b][d], coords[c]) - sp.diff(Gam[a][b][c], coords[d])
        for e in range(n):
            expr += Gam[a][c][e] * Gam[e][b][d] - Gam[a][d][e] * Gam[e][b][c]
        return expr
    # K(plane r, th) and K(plane th, ph)
    K_rad = sp.simplify(sum(g[0, e] * Riem(e, 1, 0, 1) for e in range(n)) / (g[0, 0] * g[1, 1]))
    K_sph = sp.simplify(sum(g[1, e] * Riem(e, 2, 1, 2) for e in range(n)) / (g[1, 1] * g[2, 2]))
    return (
        sp.lambdify(r, sp.simplify(K_rad), "numpy"),
        sp.lambdify(r, sp.simplify(K_sph), "numpy"),
    )
