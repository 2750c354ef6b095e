import csv
import io
import math

import numpy as np
import pytest
import scipy.special as sc

from depthsep import verify
from depthsep.hardfn import HardFunction, SignVector, build_family, random_signs, shell_spectra
from depthsep.radial import QuadratureSpec, RadialProfile, build_density, radial_integrate
from depthsep.verify import (
    CHECK_IDS, HARDNESS, LemmaReport, SuiteConfig, SuiteContext, besind_integral,
    check_besind, check_fgg_identity, check_flat, check_lipapprox, check_nothinsh,
    check_rd_bounds, lipapprox_gap, normalize_check_id, reports_to_csv, run_suite,
    summary_lines,
)

SMALL = SuiteConfig(d=2, alpha=3.0, N=60, trials=8, n_mc=20_000, fgg_d=2)


@pytest.fixture(scope="module")
def small_ctx():
    return SuiteContext(SMALL)


@pytest.fixture(scope="module")
def small_reports(small_ctx):
    return run_suite(SMALL, ctx=small_ctx)


class TestReport:
    def test_consistency_enforced(self):
        LemmaReport("x", {}, 1.0, 2.0, 1.0, "hard_pass")
        with pytest.raises(ValueError):
            LemmaReport("x", {}, 1.0, 2.0, -1.0, "hard_pass")
        with pytest.raises(ValueError):
            LemmaReport("x", {}, 1.0, 2.0, 1.0, "fail")
        with pytest.raises(ValueError):
            LemmaReport("x", {}, 1.0, 2.0, 1.0, "maybe")

    def test_hardness_table(self):
        assert HARDNESS["nothinsh"] and HARDNESS["lipapprox"] and HARDNESS["besind"]
        assert not HARDNESS["flat"] and not HARDNESS["bigmass"] and not HARDNESS["signschoice"]


class TestSpecialFunctionChecks:
    def test_rd_bounds(self):
        rep = check_rd_bounds(200)
        assert rep.verdict == "hard_pass" and rep.margin >= 0
        assert check_rd_bounds(1).measured == pytest.approx(0.5, abs=2e-16)

    def test_lipmag_derivative_identity(self):
        # J'_nu = (nu/x) J_nu - J_{nu+1}: finite differences agree with it
        nu, x, h = 5.0, 20.0, 1e-4
        fd = (sc.jv(nu, x + h) - sc.jv(nu, x - h)) / (2 * h)
        assert fd == pytest.approx(nu / x * sc.jv(nu, x) - sc.jv(nu + 1, x), abs=1e-8)

    def test_besind_truncation(self):
        val, full = besind_integral(2, 64.0)
        assert 0 < val <= full
        assert check_besind(2, 64.0).verdict == "hard_pass"
        with pytest.raises(ValueError):
            check_besind(2, 10.0)


class TestHardFunctionChecks:
    def test_nothinsh_informational_below_threshold(self, small_ctx):
        rep = check_nothinsh(small_ctx.family, small_ctx.spectra)
        assert rep.verdict.startswith("informational")

    def test_nothinsh_totals_closed_form(self, small_ctx):
        sp = small_ctx.spectra
        fam = small_ctx.family
        for i in fam.good_indices[:4]:
            lo, hi = fam.lo[i], fam.hi[i]
            quad = radial_integrate(RadialProfile((lo, hi), np.ones_like, 0.0, (lo, hi)),
                                    "lebesgue_radial", 2, QuadratureSpec(rel_tol=1e-9))
            assert sp.total_g[i] == pytest.approx(quad, rel=1e-6)

    def test_lipapprox_gap_oracle(self):
        fam = build_family(2, 3.0, 20)
        h = HardFunction(fam, SignVector(random_signs(20, 0, 0), 0.0, 0, 0), slope=30.0)
        from depthsep.hardfn import eval_gtilde, eval_surrogate
        spec = QuadratureSpec(rel_tol=1e-8)
        total = 0.0
        for i in fam.good_indices:
            lo, hi = fam.lo[i], fam.hi[i]
            ramp = min(1 / 30.0, (hi - lo) / 2)
            prof = RadialProfile((lo, hi), lambda r: (eval_surrogate(h, r) - eval_gtilde(h, r)) ** 2,
                                 None, (lo, lo + ramp, hi - ramp, hi))
            total += radial_integrate(prof, "phi_squared", 2, spec)
        assert lipapprox_gap(h) == pytest.approx(total, rel=1e-6)
        assert check_lipapprox(h).bound == pytest.approx(3 / (9 * math.sqrt(2)))

    def test_flat_no_good(self):
        fam = build_family(2, 3.0, 10)
        from depthsep.hardfn import IntervalFamily
        bad = IntervalFamily(2, 3.0, 10, fam.lo, fam.hi, np.zeros(10, bool), np.zeros(10, bool))
        rep = check_flat(bad)
        assert not rep.hard


@pytest.fixture(scope="module")
def dens():
    return build_density(2, 1e-3)


class TestFgg:
    def test_equal_functions(self, dens):
        f = lambda r: np.exp(-np.asarray(r))
        rep = check_fgg_identity(f, f, dens, 10_000, 0)
        assert rep.measured == 0.0 and rep.verdict == "hard_pass"

    def test_reproducible(self, dens):
        f = RadialProfile((0.0, 2.0), lambda r: np.ones_like(r), 0.0, (2.0,))
        g = lambda r: np.zeros_like(np.asarray(r, dtype=float))
        a = check_fgg_identity(f, g, dens, 20_000, 4, sup_diff=1.0)
        b = check_fgg_identity(f, g, dens, 20_000, 4, sup_diff=1.0)
        assert a == b and a.passed

    def test_standard_error_scaling(self, dens):
        f = RadialProfile((0.0, 2.0), lambda r: np.ones_like(r), 0.0, (2.0,))
        g = lambda r: np.zeros_like(np.asarray(r, dtype=float))
        se = []
        for n in (10_000, 160_000):
            rep = check_fgg_identity(f, g, dens, n, 1, sup_diff=1.0)
            se.append(float(rep.notes.split("se=")[1].split()[0]))
        assert se[0] / se[1] == pytest.approx(4.0, rel=0.1)


class TestSuite:
    def test_ids(self):
        assert normalize_check_id("flat") == "check_flat"
        assert normalize_check_id("check_flat") == "check_flat"
        with pytest.raises(ValueError):
            normalize_check_id("nonsense")
        assert len(CHECK_IDS) == 12

    def test_small_suite(self, small_reports):
        ids = {r.lemma_id for r in small_reports}
        assert ids == {i[len("check_"):] for i in CHECK_IDS}
        assert sum(r.lemma_id == "besind" for r in small_reports) == 3
        assert sum(r.lemma_id == "fgg_identity" for r in small_reports) == 3
        assert all(r.passed for r in small_reports if r.hard)

    def test_csv(self, small_reports):
        text = reports_to_csv(small_reports)
        rows = list(csv.DictReader(io.StringIO(text)))
        assert len(rows) == len(small_reports)
        assert set(rows[0]) == {"lemma_id", "params", "measured", "bound", "margin", "verdict", "notes"}
        assert len(summary_lines(small_reports)) == len(small_reports)

    def test_only_and_threads(self, small_ctx, small_reports):
        only = ["flat", "check_bigmass", "rd_bounds"]
        a = run_suite(SMALL, only=only, ctx=small_ctx)
        b = run_suite(SMALL, only=only, threads=3, ctx=SuiteContext(SMALL))
        assert [r.lemma_id for r in a] == ["bigmass", "flat", "rd_bounds"]
        assert a == b
        assert reports_to_csv(a) == reports_to_csv([r for r in small_reports if r.lemma_id in
                                                    {"bigmass", "flat", "rd_bounds"}])

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SuiteConfig(d=1)
        with pytest.raises(ValueError):
            SuiteConfig(N=0)
        with pytest.raises(ValueError):
            SuiteConfig(delta=0.0)

    def test_spectra_shared(self, small_ctx):
        assert small_ctx.spectra is small_ctx.spectra
        fresh = shell_spectra(small_ctx.family, None, small_ctx.spec_2d, small_ctx.sign_matrix)
        assert np.array_equal(fresh.low_signed, small_ctx.spectra.low_signed)


def test_module_exports():
    for name in verify.__all__:
        assert hasattr(verify, name)
