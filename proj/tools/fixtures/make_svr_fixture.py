"""Regenerates tests/oracles/svr_qp_fixture.hpp: small epsilon-SVR duals solved as dense QPs."""
import numpy as np
from cvxopt import matrix, solvers

solvers.options.update(show_progress=False, abstol=1e-13, reltol=1e-13, feastol=1e-13, maxiters=200)


def solve_dual(x, y, eps, cost):
    n = len(y)
    k = x @ x.T
    # variables z = [alpha; alpha_star], beta = alpha - alpha_star
    e = np.hstack([np.eye(n), -np.eye(n)])
    p = e.T @ k @ e + 1e-14 * np.eye(2 * n)
    q = eps * np.ones(2 * n) - np.concatenate([y, -y])
    g = np.vstack([-np.eye(2 * n), np.eye(2 * n)])
    h = np.concatenate([np.zeros(2 * n), cost * np.ones(2 * n)])
    a = np.concatenate([np.ones(n), -np.ones(n)])[None, :]
    sol = solvers.qp(matrix(p), matrix(q), matrix(g), matrix(h), matrix(a), matrix(0.0))
    z = np.array(sol["x"]).ravel()
    beta = e @ z
    dual = -(0.5 * beta @ k @ beta + eps * z.sum() - y @ beta)
    return float(dual), beta


def solve_primal(x, y, eps, cost):
    # variables [w (p), b, xi (n), xi_star (n)]
    n, p = x.shape
    m = p + 1 + 2 * n
    qm = np.zeros((m, m))
    qm[:p, :p] = np.eye(p)
    qm += 1e-12 * np.eye(m)
    q = np.concatenate([np.zeros(p + 1), cost * np.ones(2 * n)])
    rows, rhs = [], []
    for i in range(n):
        r = np.zeros(m); r[:p] = -x[i]; r[p] = -1; r[p + 1 + i] = -1
        rows.append(r); rhs.append(eps - y[i])
        r = np.zeros(m); r[:p] = x[i]; r[p] = 1; r[p + 1 + n + i] = -1
        rows.append(r); rhs.append(eps + y[i])
    for j in range(2 * n):
        r = np.zeros(m); r[p + 1 + j] = -1
        rows.append(r); rhs.append(0.0)
    sol = solvers.qp(matrix(qm), matrix(q), matrix(np.array(rows)), matrix(np.array(rhs)))
    z = np.array(sol["x"]).ravel()
    w, b = z[:p], z[p]
    r = y - x @ w - b
    return float(0.5 * w @ w + cost * np.maximum(0, np.abs(r) - eps).sum())


def main():
    rng = np.random.default_rng(20240601)
    out = []
    for i in range(10):
        n = int(rng.integers(3, 9))
        p = int(rng.integers(1, 4))
        x = np.round(rng.normal(size=(n, p)), 3)
        y = np.clip(np.round(1.5 * (x @ rng.normal(size=p)) + rng.normal(scale=1.5, size=n) + 5.0), 1, 14)
        eps = float(rng.choice([0.1, 0.25, 0.5]))
        cost = float(rng.choice([0.3, 1.0, 4.0, 20.0]))
        dual, _ = solve_dual(x, y, eps, cost)
        primal = solve_primal(x, y, eps, cost)
        assert abs(primal - dual) < 1e-8 * max(1.0, abs(primal)), (i, primal, dual)
        out.append((x, y, eps, cost, dual))

    def arr(v):
        return "{" + ", ".join(repr(float(t)) for t in v) + "}"

    def ints(v):
        return "{" + ", ".join(str(int(t)) for t in v) + "}"

    lines = [
        "#pragma once",
        "",
        "// Generated by tools/fixtures/make_svr_fixture.py (cvxopt dense QP, tolerances 1e-13).",
        "",
        "#include <vector>",
        "",
        "namespace oracle {",
        "",
        "struct SvrQpCase {",
        "  int n;",
        "  int p;",
        "  std::vector<double> x;  // row-major n x p",
        "  std::vector<int> y;  // semesters",
        "  double epsilon;",
        "  double cost;",
        "  double dual_objective;  // maximization form",
        "};",
        "",
        "inline const std::vector<SvrQpCase>& svr_qp_cases() {",
        "  static const std::vector<SvrQpCase> cases{",
    ]
    for x, y, eps, cost, dual in out:
        lines.append(f"      {{{x.shape[0]}, {x.shape[1]}, {arr(x.ravel())},")
        lines.append(f"       {ints(y)}, {eps!r}, {cost!r}, {dual!r}}},")
    lines += ["  };", "  return cases;", "}", "", "}  // namespace oracle", ""]
    with open("tests/oracles/svr_qp_fixture.hpp", "w") as f:
        f.write("\n".join(lines))


if __name__ == "__main__":
    main()
