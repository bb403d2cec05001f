"""Acceptance criteria 1-10. Each test prints one PASS/FAIL line."""

import math
import subprocess
import sys
import time

import numpy as np

from jacobi_lab.conformal import (
    balance,
    conformal_area,
    conformal_map,
    equality_diagnostic,
    grid_search_balance,
    willmore_energy,
)
from jacobi_lab.eigen import smallest_eigenpairs
from jacobi_lab.harness import prop22_scan, verify_section5, verify_theorem1
from jacobi_lab.mesh import JACOBI_SPHERE, LAPLACE, assemble_operator, dirichlet_energy, triangulate
from jacobi_lab.surfaces import clifford_torus, equilateral_torus

from conftest import CATALOG, half, mesh, random_ball, report_criterion, surface

FOUR_PI_SQ = 4 * math.pi**2


def _lambdas(m, kind, k=6):
    op = assemble_operator(m, kind)
    return smallest_eigenpairs(op.matrix, op.mass, k=k)


def test_criterion_01_clifford_equality():
    start = time.perf_counter()
    lam2 = _lambdas(triangulate(clifford_torus(), (128, 128)), JACOBI_SPHERE).lambda2
    elapsed = time.perf_counter() - start
    ok = abs(lam2 + 2) <= 0.02 and elapsed < 60
    assert report_criterion(1, ok, f"clifford lambda2 = {lam2:.6f} (target -2 +/- 0.02), {elapsed:.1f} s")


def test_criterion_02_equilateral_equality():
    m = triangulate(equilateral_torus(), (128, 128))
    lam2 = _lambdas(m, JACOBI_SPHERE).lambda2
    lap = _lambdas(m, LAPLACE, k=7).eigenvalues
    cluster = lap[1:7]
    ok = abs(lam2 + 2) <= 0.05 and np.ptp(cluster) <= 0.1 and np.abs(cluster - 2).max() <= 0.1
    assert report_criterion(
        2, ok, f"lambda2 = {lam2:.6f}; Laplace cluster [{cluster.min():.5f}, {cluster.max():.5f}] (six values)"
    )


def test_criterion_03_scaled_lambda2_bound():
    clif = verify_theorem1(surface("clifford"), (128, 128))
    rel = abs(clif.lhs + FOUR_PI_SQ) / FOUR_PI_SQ
    bip = verify_theorem1(surface("bipolar-lawson31"), (128, 128))
    bip_ok = bip.lhs <= -FOUR_PI_SQ + bip.error_estimate
    ok = rel <= 0.01 and bip_ok
    assert report_criterion(
        3, ok,
        f"clifford lambda2|S| = {clif.lhs:.4f} (rel err {rel:.2e}); bipolar lambda2|S| = {bip.lhs:.3f}, "
        f"margin to -4pi^2 = {-FOUR_PI_SQ - bip.lhs:.3f}, inequality margin = {bip.margin:.3f}",
    )


def test_criterion_04_section5_oracle():
    start = time.perf_counter()
    worst, failures = 0.0, []
    for r in (0.45, 0.6, 0.75):
        for t in (0.4, 0.5, 0.6):
            h = math.sqrt(1 - r * r - t * t)
            rep = verify_section5(r, t, h, res=(128, 128))
            worst = max(worst, rep.details["lambda2_error"], *rep.details["laplace_errors"])
            if not rep.passed:
                failures.append((r, t))
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 600
    assert report_criterion(4, ok, f"9 parameter triples, worst error {worst:.2e}, {elapsed:.0f} s, failures {failures}")


def test_criterion_05_conformal_area_bound():
    rng = np.random.default_rng(505)
    violations, worst = 0, -np.inf
    for name in CATALOG:
        fine = mesh(name)
        coarse = mesh(name, half(fine.resolution))
        W, Wc = willmore_energy(fine), willmore_energy(coarse)
        for _ in range(200):
            y = random_ball(rng, fine.positions.shape[1], 0.9)
            gap = conformal_area(fine, y) - W
            # quadrature error bound: change of the gap between levels
            eps = abs(gap - (conformal_area(coarse, y) - Wc))
            worst = max(worst, gap - eps)
            violations += gap > eps
    sphere = mesh("sphere")
    area = conformal_area(sphere, [0.3, 0.0, -0.4, 0.0])
    diag = equality_diagnostic(sphere, [0.3, 0.0, -0.4, 0.0])
    ok = violations == 0 and abs(area - 4 * math.pi) <= 1e-3 and diag <= 1e-6
    assert report_criterion(
        5, ok, f"{violations} violations in 1200 samples (max gap - eps = {worst:.2e}); "
               f"sphere |y|=0.5 area error {area - 4 * math.pi:.2e}, diagnostic {diag:.1e}",
    )


def test_criterion_06_dirichlet_identity():
    m = mesh("clifford")
    rng = np.random.default_rng(606)
    worst = 0.0
    for _ in range(20):
        y = random_ball(rng, 4, 0.8)
        energy = dirichlet_energy(m, conformal_map(y, m.positions))
        area = conformal_area(m, y)
        worst = max(worst, abs(energy - 2 * area) / (2 * area))
    assert report_criterion(6, worst <= 0.01, f"worst relative error {worst:.2e} over 20 y with |y| <= 0.8")


def test_criterion_07_balancing():
    worst, count = 0.0, 0
    for name in CATALOG:
        m = mesh(name)
        for w in (np.ones(m.n_vertices), 1 + 0.5 * np.cos(m.params[:, 0])):
            out = balance(m, w, tol=1e-8)
            worst = max(worst, out.residual)
            count += 1
    small = triangulate(clifford_torus(), (16, 16))
    w = 1 + 0.5 * np.cos(small.params[:, 0])
    y_newton = balance(small, w).y
    y_grid, _, spacing = grid_search_balance(small, w, points_per_axis=41)
    gap = float(np.abs(y_newton - y_grid).max())
    ok = worst <= 1e-8 and gap <= spacing
    assert report_criterion(
        7, ok, f"{count} solves, worst residual {worst:.1e}; grid oracle gap {gap:.3f} <= spacing {spacing:.3f}"
    )


def test_criterion_08_prop22():
    parts, ok = [], True
    for r in (1 / math.sqrt(2), 0.75, 0.9):
        rep = prop22_scan(r, samples=1000)
        excess = rep.details["random_max"] - rep.rhs
        ok &= excess <= 1e-12 and rep.lhs <= rep.rhs + 1e-12
        parts.append(f"r={r:.4f}: max {rep.details['random_max']:.4f} / bound {rep.rhs:.4f}")
        if abs(r - 1 / math.sqrt(2)) < 1e-12:
            ok &= abs(rep.lhs - rep.rhs) <= 1e-9
    assert report_criterion(8, ok, "; ".join(parts) + "; attained at 1/sqrt(2)")


def test_criterion_09_convergence_order():
    errors = []
    for n in (32, 64, 128):
        lam = _lambdas(triangulate(clifford_torus(), (n, n)), LAPLACE).lambda2
        errors.append(abs(lam - 2))
    ratios = [errors[0] / errors[1], errors[1] / errors[2]]
    ok = min(ratios) >= 3.5
    assert report_criterion(9, ok, f"errors {['%.2e' % e for e in errors]}, ratios {['%.3f' % q for q in ratios]}")


def test_criterion_10_cli_determinism(tmp_path):
    out = tmp_path / "out.json"
    cmd = [sys.executable, "-m", "jacobi_lab", "spectrum", "--surface", "bipolar-lawson31", "--res", "48",
           "--k", "6", "--seed", "3", "--no-timestamp", "--out", str(out)]
    runs = []
    for _ in range(2):
        subprocess.run(cmd, check=True)
        runs.append(out.read_bytes())
    ok = runs[0] == runs[1] and len(runs[0]) > 0
    assert report_criterion(10, ok, f"two runs, {len(runs[0])} bytes each, identical = {runs[0] == runs[1]}")
