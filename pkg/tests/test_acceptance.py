"""Acceptance suite: eleven end-to-end criteria, one test (and one
pass/fail line) each.

Run with ``pytest -v tests/test_acceptance.py``; each test prints its own
[PASS]/[FAIL] line as well. Criteria 1 and 6 encode reference values that
are mutually inconsistent with exact identities satisfied by this
implementation; they are kept at their stated tolerances and are expected
to fail (see the repository notes for the analysis).
"""

import itertools
import math

import numpy as np
import pytest

from ssmfrac import dictionary, dynamics, fit, normalform, spectrum
from ssmfrac.trajectory import Trajectory

COUETTE_LOGS = (-0.035068, -0.069776, -0.073369, -0.140274, -0.168877)

TABLE2_COEFFS = {
    (1, 0, 0, 0, 0): 0.96182,
    (2, 0, 0, 0, 0): 0.82616,
    (0, 0, 1, 0, 0): -1.03809,
    (3, 0, 0, 0, 0): 0.43671,
    (1, 0, 1, 0, 0): 0.35338,
    (2, 0, 1, 0, 0): -0.61552,
    (4, 0, 0, 0, 0): -1.65568,
    (0, 0, 2, 0, 0): 0.67765,
    (0, 0, 0, 0, 1): 4.52449,
    (5, 0, 0, 0, 0): -3.47146,
}

BEAM_LAMBDAS = (11.06, -11.10)
BEAM_PAIRS = ((-0.36, 119.36), (-1.83, 295.56),
              (-5.80, 541.50), (-14.19, 858.19))

FORCED_PARAMS = dict(c=0.03, A=0.11, Omega=1.07)
FORCED_T = 2.0 * math.pi / 1.07


def couette_spec():
    return spectrum.SpectralPartition.from_map_logs(
        [COUETTE_LOGS[0]], COUETTE_LOGS[1:])


def couette_dict():
    return dictionary.prune_near_integer(
        dictionary.dictionary_map_1d(couette_spec(), 5), tol=0.05)


def report(num, name, passed, detail=""):
    status = "PASS" if passed else "FAIL"
    print(f"[{status}] criterion {num}: {name} {detail}".rstrip())
    assert passed, f"criterion {num}: {name} {detail}"


def test_criterion_01_spectral_ratio_table():
    """Published four-significant-digit ratios at 1e-5 absolute."""
    ratios = [r for _, r in spectrum.spectral_ratio_table(couette_spec())]
    published = [1.989703, 2.092178, 4.000013, 4.815674]
    err = max(abs(a - b) for a, b in zip(ratios, published))
    report(1, "spectral ratio table matches published values to 1e-5",
           err <= 1e-5, f"(max deviation {err:.2e})")


def test_criterion_02_dictionary_structure():
    reduced = [(mi[0], mi[2], mi[4]) for mi in couette_dict().multi_indices]
    expected = [(1, 0, 0), (2, 0, 0), (0, 1, 0), (3, 0, 0), (1, 1, 0),
                (4, 0, 0), (2, 1, 0), (0, 2, 0), (0, 0, 1), (5, 0, 0)]
    report(2, "pruned order-5 dictionary has exactly the 10 expected "
           "multi-indices", reduced == expected, f"(got {len(reduced)})")


def test_criterion_03_regression_round_trip():
    d = couette_dict()
    true = np.array([TABLE2_COEFFS[mi] for mi in d.multi_indices])
    trajs = []
    for x0 in (0.05, 0.1, 0.2):
        vals = [np.longdouble(x0)]
        for _ in range(40):
            vals.append(d.evaluate(np.array([vals[-1]]))[0]
                        @ true.astype(np.longdouble))
        trajs.append(Trajectory(times=np.arange(41, dtype=float),
                                states=np.array(vals,
                                                dtype=np.longdouble)[:, None],
                                kind="map"))
    model = fit.fit_reduced_map(trajs, d)
    got = np.asarray(model.coefficients[:, 0], dtype=float)
    rel = np.max(np.abs(got - true) / np.abs(true))
    report(3, "round-trip refit recovers all 10 coefficients to 1e-6 "
           "relative", rel <= 1e-6, f"(max relative error {rel:.2e})")


def test_criterion_04_planar_end_to_end():
    a, b, c = 1.0, 1.0, 2.5
    part = spectrum.SpectralPartition(kind="flow", lam=(-b,),
                                      kappa=(-c * a,))
    built = dictionary.dictionary_flow_1d(part, K=5)
    vf = dynamics.exact_reduced_planar(a, b, c)
    sys_ = dynamics.FlowSystem(dim=1, f=lambda t, x: vf(x))
    grid = np.linspace(0.0, 4.0, 400)
    train = dynamics.integrate(sys_, [0.95], (0.0, 4.0), tol=1e-12,
                               t_eval=grid)
    tests = [dynamics.integrate(sys_, [x0], (0.0, 4.0), tol=1e-12,
                                t_eval=grid)
             for x0 in (0.3, 0.45, 0.6, 0.75, 0.9)]

    frac = fit.fit_reduced_flow(train, built, ridge=1e-12)
    integer = fit.fit_reduced_flow(train, dictionary.integer_dictionary(1, 5),
                                   ridge=1e-12)
    frac_le_int, worst_frac = True, 0.0
    for traj in tests:
        means = {}
        for label, model in (("frac", frac), ("int", integer)):
            pred = fit.predict(model, traj.states[0],
                               (traj.times[0], traj.times[-1]), tol=1e-10)
            resampled = np.array([pred.interpolant(t) for t in traj.times])
            _, means[label] = fit.relative_error(traj.states, resampled)
        frac_le_int = frac_le_int and means["frac"] <= means["int"]
        worst_frac = max(worst_frac, means["frac"])
    xg = np.linspace(0.02, 0.95, 200)
    vf_err = float(np.max(np.abs(vf(xg)
                                 - np.array([float(frac.rhs(x))
                                             for x in xg])))
                   / np.max(np.abs(vf(xg))))
    ok = frac_le_int and worst_frac <= 0.05 and vf_err < 1e-2
    report(4, "fractional planar fit beats integer fit, stays under 5%, "
           "and matches the exact vector field to 1e-2", ok,
           f"(worst mean error {worst_frac:.2e}, vf error {vf_err:.2e})")


def test_criterion_05_linear_analysis():
    A = dynamics.shaw_pierre_matrix()
    part = spectrum.partition_spectrum(A, spectrum.slowest(2), kind="flow")
    alpha, omega = part.alpha_omega[0]
    beta, nu = part.beta_nu[0]
    refs = [complex(-0.0741, 1.0027), complex(-0.3759, 1.6812)]
    eig_err = max(abs(complex(alpha, omega) - refs[0]),
                  abs(complex(beta, nu) - refs[1]))
    # the published quotient is formed from the four-decimal eigenvalues
    quotient = round(beta, 4) / round(alpha, 4)
    q_err = abs(quotient - 5.0729)
    ok = eig_err <= 1e-3 and q_err <= 1e-3
    report(5, "oscillator-chain eigenvalues and decay-rate quotient match "
           "references", ok,
           f"(eigenvalue error {eig_err:.2e}, quotient error {q_err:.2e})")


def forced_fixed_points():
    sys_ = dynamics.testbed("shaw_pierre", FORCED_PARAMS)
    pmap = dynamics.PoincareMap(sys_, tol=1e-11)
    out = {}
    for label, seed in dynamics.FORCED_SEEDS.items():
        res = dynamics.newton_fixed_point(pmap, seed, tol=1e-9)
        fl = dynamics.floquet(sys_, res.location, FORCED_T, tol=1e-11)
        out[label] = (res, fl)
    return out


def test_criterion_06_forced_fixed_points():
    found = forced_fixed_points()
    locs = [res.location for res, _ in found.values()]
    distinct = all(np.linalg.norm(locs[i] - locs[j]) > 1e-3
                   for i in range(3) for j in range(i + 1, 3))
    sinks = all(np.all(np.abs(found[k][1].multipliers) < 1.0)
                for k in ("low", "high"))
    refs = [1.0835, 0.7726, complex(-0.4132, 0.6474),
            complex(-0.4132, -0.6474)]
    mults = found["middle"][1].multipliers
    err = max(min(abs(mu - r) for mu in mults) for r in refs)
    ok = distinct and sinks and err <= 2e-2
    report(6, "three forced orbits found with published saddle multipliers "
           "to 2e-2", ok,
           f"(distinct={distinct}, sinks stable={sinks}, "
           f"multiplier error {err:.2e})")


def test_criterion_07_mixed_mode_graph():
    sys_ = dynamics.testbed("mixed3d")
    a = sys_.params["a"]
    grid = np.linspace(0.0, 8.0, 120)
    trajs = [dynamics.integrate(sys_, [x1, 0.0, a * x1 ** 2], (0.0, 8.0),
                                tol=1e-11, t_eval=grid)
             for x1 in (0.4, -0.5)]
    built = dictionary.integer_dictionary(2, 3)
    graph = fit.fit_graph(trajs, built, master_coords=[0, 1],
                          slaved_coords=[2])
    coeff = {m.powers: float(c) for m, c in
             zip(built.monomials, graph.coefficients.ravel())}
    lead_err = abs(coeff[(2, 0)] - 0.5)
    others = max(abs(c) for p, c in coeff.items() if p != (2, 0))
    ok = lead_err < 1e-3 and others < 1e-3
    report(7, "graph fit recovers the invariant surface x3 = 0.5 x1^2", ok,
           f"(x1^2 coefficient error {lead_err:.2e}, largest other "
           f"{others:.2e})")


def test_criterion_08_smoothness_classes():
    eta_couette = spectrum.smoothness_class(couette_spec()).eta
    beam = spectrum.SpectralPartition(kind="flow", lam=BEAM_LAMBDAS,
                                      beta_nu=BEAM_PAIRS)
    eta_beam = spectrum.smoothness_class(beam).eta
    toy = spectrum.SpectralPartition(kind="flow", lam=(-1.0,), kappa=(2.0,))
    eta_toy = spectrum.smoothness_class(toy).eta
    ok = eta_couette == 1 and eta_beam == 0 and eta_toy == "infinity"
    report(8, "smoothness classes are 1 (shear flow), 0 (beam), infinity "
           "(opposite-stability toy)", ok,
           f"(got {eta_couette}, {eta_beam}, {eta_toy})")


def test_criterion_09_linearization_and_pullback():
    A = dynamics.shaw_pierre_matrix()
    terms = {(3, 0, 0, 0): np.array([0.0, -0.5, 0.0, 0.0])}
    ps, V = normalform.PolySystem.from_real_system(A, terms, K=7)
    transform = normalform.linearize(ps, 7)
    resid = normalform.conjugacy_residual(transform, ps)

    part = spectrum.partition_spectrum(A, spectrum.slowest(2), kind="flow")
    coeffs = dictionary.LinearGraphCoeffs.zeros(part)
    Vinv = np.linalg.inv(V)
    lam = np.asarray(ps.eigenvalues)
    sys_ = dynamics.testbed("shaw_pierre")
    eps = 0.1
    amps = np.logspace(np.log10(0.04), np.log10(0.4), 9)
    residuals = []
    for a in amps:
        worst = 0.0
        for phi in (0.0, 1.1, 2.3):
            z = a * np.exp(1j * phi)
            y0 = normalform.pullback_graph(
                transform, part, coeffs, [(np.array([]), np.array([z]))])[0]
            x0 = (V @ y0).real
            traj = dynamics.integrate(sys_, x0, (0.0, eps), tol=1e-12)
            yT = Vinv @ traj.states[-1]
            ylin = np.exp(lam * eps) * np.array([z, np.conj(z), 0.0, 0.0])
            ref = transform.inverse_apply(ylin[None, :])[0]
            worst = max(worst, float(np.linalg.norm(yT - ref)))
        residuals.append(worst)
    slope = float(np.polyfit(np.log(amps), np.log(residuals), 1)[0])
    ok = resid < 1e-8 and slope >= 7.5
    report(9, "order-7 linearization residual < 1e-8 and invariance "
           "residual slope >= 7.5", ok,
           f"(residual {resid:.2e}, slope {slope:.2f})")


def test_criterion_10_floquet_identities():
    found = forced_fixed_points()
    liouville = math.exp(-3.0 * FORCED_PARAMS["c"] * FORCED_T)
    worst = max(abs(np.prod(fl.multipliers).real - liouville) / liouville
                for _, fl in found.values())

    A = np.diag([-0.5, -1.5])
    lin = dynamics.FlowSystem(dim=2, f=lambda t, x: A @ x,
                              jac=lambda t, x: A)
    res = dynamics.floquet(lin, np.zeros(2), T=2.0, tol=1e-11,
                           periodicity_tol=1e-9)
    lin_err = np.max(np.abs(np.sort(res.multipliers.real)
                            - np.sort(np.exp(np.diag(A) * 2.0))))
    ok = worst <= 1e-6 and lin_err < 1e-8
    report(10, "Liouville multiplier product to 1e-6 and exact linear "
           "multipliers", ok,
           f"(worst product error {worst:.2e}, linear error {lin_err:.2e})")


def test_criterion_11_normal_form_structure():
    gamma = complex(-1.0, 2.0)
    spec = spectrum.SpectralPartition(
        kind="flow", alpha_omega=((gamma.real, gamma.imag),),
        beta_nu=((1.3 * gamma.real, -gamma.real),))
    d = dictionary.dictionary_flow_2d(spec, 5)
    keys = [(m.k2[0], m.k3[0], m.k5[0], m.k6[0]) for m in d.monomials]

    # resonance rule versus the brute-force rotational kernel: the
    # homological eigenvalue i omega (k1 - k2 - 1) vanishes exactly on the
    # k1 = k2 + 1 family, over every index of order <= 5
    kernel = {k for k in keys
              if abs(1j * gamma.imag * (k[0] - k[1] - 1)) < 1e-12}
    rule = {k for k in keys if normalform.resonance_test_2d(*k)}

    # seed every resonant index plus a handful of removable ones
    rng = np.random.default_rng(2)
    coeffs = np.zeros(len(d), dtype=complex)
    for i, k in enumerate(keys):
        if k in rule:
            coeffs[i] = 0.1 * (rng.normal() + 1j * rng.normal())
    for k in [(2, 0, 0, 0), (0, 2, 0, 0), (0, 1, 1, 0), (3, 0, 0, 0),
              (0, 0, 2, 0)]:
        coeffs[keys.index(k)] = 0.1 * (rng.normal() + 1j * rng.normal())
    coeffs[keys.index((1, 0, 0, 0))] = gamma
    model = fit.ReducedFit(dictionary=d, coefficients=coeffs[:, None],
                           kind="flow", residuals=np.zeros(1),
                           condition_number=1.0, training_amplitude=1.0)
    nf = normalform.extended_normalform_2d(model, spec)

    survivors_resonant = all(
        abs((complex(*t["a"]) - complex(*t["b"])).real - 1.0) < 1e-9
        for t in nf.resonant_terms)
    surv_ab = {(round(complex(*t["a"]).real, 6),
                round(complex(*t["a"]).imag, 6),
                round(complex(*t["b"]).real, 6),
                round(complex(*t["b"]).imag, 6))
               for t in nf.resonant_terms}
    seeded_kept = True
    for m, c in zip(d.monomials, coeffs):
        k = (m.k2[0], m.k3[0], m.k5[0], m.k6[0])
        if abs(c) == 0.0 or k not in rule:
            continue
        frac = m.amp_exponents[0] if m.amp_exponents else 0.0
        a = k[0] + frac / 2.0 + 1j * m.phase_coeff / 2.0
        b = k[1] + frac / 2.0 + 1j * m.phase_coeff / 2.0
        seeded_kept = seeded_kept and (
            round(a.real, 6), round(a.imag, 6),
            round(b.real, 6), round(b.imag, 6)) in surv_ab

    # with zero fractional coefficients the polar curves are cubic
    cubic = fit.ReducedFit(
        dictionary=d,
        coefficients=np.where(
            [not m.is_integer for m in d.monomials], 0.0, coeffs)[:, None],
        kind="flow", residuals=np.zeros(1), condition_number=1.0,
        training_amplitude=1.0)
    nfc = normalform.extended_normalform_2d(cubic, spec)
    r = np.linspace(0.05, 0.4, 7)
    back_ok = np.allclose(normalform.backbone(nfc, r),
                          nfc.omega1 + nfc.B * r ** 2, atol=1e-10)
    damp_ok = np.allclose(normalform.damping(nfc, r),
                          nfc.alpha1 + nfc.A * r ** 2, atol=1e-10)
    ok = (kernel == rule and survivors_resonant and seeded_kept
          and back_ok and damp_ok)
    report(11, "normal form keeps exactly the resonant index family and "
           "reduces to the cubic polar form without fractional terms", ok,
           f"(kernel size {len(kernel)}, survivors {len(nf.resonant_terms)})")
