from egk.data import Method
from egk.egk import (
    envelope_ccdf,
    envelope_ccdf_result,
    envelope_cdf,
    envelope_cdf_result,
    envelope_pdf,
    envelope_pdf_result,
    load_catalog,
    mgf,
    mgf_result,
    moment,
    preset,
    snr_cdf,
    snr_moment,
    snr_pdf,
)
from egk.errors import ConfigError, ConvergenceError, DomainError, UnknownPresetError
from egk.params import ChannelParams, OmegaSplit, Shadowing, derive_betas, egk_params
from egk.specfun import ext_upper_gamma, integrate
import math
import mpmath
import os
import tempfile
import unittest
from unittest import mock

# (m, xi, m_s, xi_s, omega) tuples with distinct shapes near the origin and in the tail
COMPOSITE = [
    (2.5, 0.8, 1.7, 1.2, 1.0),
    (0.6, 2.5, 3.0, 0.4, 4.0),
    (5.5, 0.35, 0.7, 2.8, 0.5),
    (3.0, 1.5, 0.5, 1.0, 1.0),
]


def generalized_k_pdf(r, m, m_s, omega):
    c = m * m_s / omega
    value = (
        4
        * mpmath.power(c, (m + m_s) / 2)
        * mpmath.power(r, m + m_s - 1)
        * mpmath.besselk(m_s - m, 2 * r * mpmath.sqrt(c))
        / (mpmath.gamma(m) * mpmath.gamma(m_s))
    )
    return float(value)


def gnm_pdf(r, m, xi, omega):
    beta = math.gamma(m + 1 / xi) / math.gamma(m)
    return (
        2
        * xi
        * (beta / omega) ** (m * xi)
        * r ** (2 * m * xi - 1)
        * math.exp(-((beta * r * r / omega) ** xi))
        / math.gamma(m)
    )


class TestParams(unittest.TestCase):
    def test_ranges(self):
        with self.assertRaises(DomainError):
            egk_params(0.4, 1)
        with self.assertRaises(DomainError):
            egk_params(1, 0)
        with self.assertRaises(DomainError):
            egk_params(1, 1, 0.3, 1)
        with self.assertRaises(DomainError):
            egk_params(1, 1, omega=-1)
        with self.assertRaises(DomainError):
            egk_params(1, 1, float("nan"), 1)
        with self.assertRaises(DomainError):
            egk_params(1, 1, m_s=2)
        with self.assertRaises(DomainError):
            ChannelParams(1, 1, "gamma")

    def test_no_shadowing_mode(self):
        params = egk_params(2, 1, omega=3)
        self.assertIsNone(params.shadowing)
        self.assertIsNone(params.m_s)
        self.assertEqual(derive_betas(params).beta_s, 1.0)
        self.assertEqual(params.as_dict()["omega"], 3)

    def test_derived_betas(self):
        betas = derive_betas(egk_params(2, 1, 1.5, 0.5))
        self.assertAlmostEqual(betas.beta, 2.0, places=12)
        self.assertAlmostEqual(betas.beta_s, math.gamma(3.5) / math.gamma(1.5), places=12)

    def test_omega_split(self):
        params = egk_params(2, 1, 2, 1, omega=4)
        self.assertEqual(OmegaSplit.default(params), OmegaSplit(4, 1))
        OmegaSplit(2, 2).check(params)
        with self.assertRaises(DomainError):
            OmegaSplit(2, 3).check(params)
        with self.assertRaises(DomainError):
            OmegaSplit(0, 1)


class TestDensity(unittest.TestCase):
    def test_rayleigh(self):
        rayleigh = egk_params(1, 1)
        self.assertAlmostEqual(envelope_pdf(rayleigh, 1.0), 0.7357588823, places=9)
        self.assertAlmostEqual(envelope_pdf(rayleigh, 1.0, Method.FOXH), 0.7357588823, places=9)
        self.assertEqual(envelope_pdf(rayleigh, 0.0), 0.0)

    def test_generalized_k_reduction(self):
        m, m_s, omega = 2.0, 1.5, 1.3
        params = egk_params(m, 1, m_s, 1, omega)
        for r in (0.05, 0.3, 0.8, 1.0, 1.7, 3.0, 5.0):
            expected = generalized_k_pdf(r, m, m_s, omega)
            self.assertAlmostEqual(envelope_pdf(params, r) / expected, 1, places=8)

    def test_generalized_nakagami_without_shadowing(self):
        for m, xi, omega in ((2.5, 1.0, 1.0), (1.0, 1.7, 2.0), (0.7, 0.6, 0.5)):
            params = egk_params(m, xi, omega=omega)
            for r in (0.2, 1.0, 2.5):
                expected = gnm_pdf(r, m, xi, omega)
                self.assertAlmostEqual(envelope_pdf(params, r) / expected, 1, places=10)

    def test_foxh_matches_closed_form(self):
        for m, xi, m_s, xi_s, omega in COMPOSITE[:2]:
            params = egk_params(m, xi, m_s, xi_s, omega)
            for r in (0.3, 1.0, 2.2):
                direct = envelope_pdf(params, r)
                res = envelope_pdf_result(params, r, Method.FOXH)
                self.assertEqual(res.method, Method.FOXH)
                self.assertAlmostEqual(res.value / direct, 1, places=7)

    def test_normalization(self):
        for m, xi, m_s, xi_s, omega in COMPOSITE:
            params = egk_params(m, xi, m_s, xi_s, omega)
            total, _ = integrate(
                lambda r: envelope_pdf(params, r), 0, math.inf, points=[math.sqrt(omega)]
            )
            self.assertAlmostEqual(total, 1, delta=1e-7)

    def test_printed_exponent_does_not_normalize(self):
        # with (β_sβ/Ω)^(mξ) as the third argument the density loses mass
        m, xi, m_s, xi_s = 2.0, 2.0, 1.0, 1.0
        betas = derive_betas(egk_params(m, xi, m_s, xi_s))
        k = betas.beta * betas.beta_s

        def printed(r):
            return (
                2
                * xi
                / (math.gamma(m_s) * math.gamma(m))
                * k ** (m * xi)
                * r ** (2 * m * xi - 1)
                * ext_upper_gamma(m_s - m * xi / xi_s, 0, k ** (m * xi) * r ** (2 * xi), xi / xi_s)
            )

        total, _ = integrate(printed, 0, math.inf, points=[1.0])
        self.assertGreater(abs(total - 1), 0.1)

    def test_monotone_in_fading_figure(self):
        r = math.sqrt(2)
        values = [envelope_pdf(egk_params(m, 1, 2, 1), r) for m in (0.5, 1, 2, 4)]
        self.assertEqual(values, sorted(values))
        self.assertEqual(len(set(values)), 4)

    def test_origin(self):
        half_normal = egk_params(0.5, 1)
        self.assertAlmostEqual(envelope_pdf(half_normal, 0.0), math.sqrt(2 / math.pi), places=12)
        composite = egk_params(0.5, 1, 2, 1)
        self.assertAlmostEqual(
            envelope_pdf(composite, 0.0) / envelope_pdf(composite, 1e-9), 1, places=6
        )
        with self.assertRaises(DomainError):
            envelope_pdf(egk_params(0.5, 0.8), 0.0)
        with self.assertRaises(DomainError):
            envelope_pdf(egk_params(0.5, 1, 0.5, 1), 0.0)
        with self.assertRaises(DomainError):
            envelope_pdf(egk_params(1, 1), -1.0)

    def test_snr_density(self):
        # Rayleigh fading gives an exponential SNR with mean gamma_bar
        rayleigh = egk_params(1, 1)
        self.assertAlmostEqual(snr_pdf(rayleigh, 2.0, 1.0), 0.5 * math.exp(-0.5), places=10)
        with self.assertRaises(DomainError):
            snr_pdf(rayleigh, 2.0, 0.0)

    def test_unknown_method(self):
        with self.assertRaises(DomainError):
            envelope_pdf(egk_params(1, 1), 1.0, "gcq")
        with self.assertRaises(DomainError):
            envelope_pdf(egk_params(1, 1), 1.0, "simpson")


class TestDistribution(unittest.TestCase):
    def test_rayleigh(self):
        rayleigh = egk_params(1, 1)
        for method in (Method.QUADRATURE, Method.FOXH):
            self.assertAlmostEqual(envelope_cdf(rayleigh, 1.0, method), 0.6321205588, places=9)
        self.assertAlmostEqual(envelope_ccdf(rayleigh, 1.0, Method.FOXH), math.exp(-1), places=9)
        self.assertAlmostEqual(snr_cdf(rayleigh, 2.0, 1.0), 1 - math.exp(-0.5), places=9)

    def test_paths_agree(self):
        params = egk_params(2.5, 0.8, 1.7, 1.2)
        for r in (0.3, 1.0, 2.0):
            quad = envelope_cdf(params, r)
            self.assertAlmostEqual(envelope_cdf(params, r, Method.FOXH), quad, delta=1e-8)
            self.assertAlmostEqual(envelope_cdf(params, r, Method.GCQ), quad, delta=5e-4)

    def test_gcq_converges(self):
        params = egk_params(2.5, 0.8, 1.7, 1.2)
        for r in (0.5, 1.5):
            res = envelope_cdf_result(params, r, Method.GCQ, nodes=1000)
            self.assertEqual(res.method, Method.GCQ)
            self.assertAlmostEqual(res.value, envelope_cdf(params, r), delta=1e-6)
            self.assertGreaterEqual(res.err_est, 0)
        with self.assertRaises(DomainError):
            envelope_cdf(params, 1.0, Method.GCQ, nodes=10)

    def test_complement(self):
        for m, xi, m_s, xi_s, omega in COMPOSITE[:2]:
            params = egk_params(m, xi, m_s, xi_s, omega)
            for r in (0.5, 2.0):
                for method in (Method.QUADRATURE, Method.FOXH):
                    total = envelope_cdf(params, r, method) + envelope_ccdf(params, r, method)
                    self.assertAlmostEqual(total, 1, delta=1e-8)

    def test_limits(self):
        params = egk_params(2.5, 0.8, 1.7, 1.2)
        self.assertEqual(envelope_cdf(params, 0.0), 0.0)
        self.assertEqual(envelope_cdf(params, math.inf), 1.0)
        self.assertEqual(envelope_ccdf(params, 0.0), 1.0)
        with self.assertRaises(DomainError):
            envelope_cdf(params, -0.5)
        with self.assertRaises(DomainError):
            snr_cdf(params, 1.0, -0.5)

    def test_foxh_failure_falls_back_to_quadrature(self):
        params = egk_params(2, 1, 2, 1)
        with mock.patch(
            "egk.foxh.foxh_eval_with_error", side_effect=ConvergenceError("no decay")
        ):
            res = envelope_cdf_result(params, 1.0, Method.FOXH)
            ccdf = envelope_ccdf_result(params, 1.0, Method.FOXH)
        self.assertEqual(res.method, Method.QUADRATURE)
        self.assertIn("downgraded", res.note)
        self.assertAlmostEqual(res.value + ccdf.value, 1, delta=1e-8)


class TestMoments(unittest.TestCase):
    def test_mean_power(self):
        for m, xi, m_s, xi_s, omega in COMPOSITE:
            params = egk_params(m, xi, m_s, xi_s, omega)
            self.assertAlmostEqual(moment(params, 2) / omega, 1, places=12)
            self.assertAlmostEqual(snr_moment(params, 3.0, 1), 3.0, places=12)
        self.assertAlmostEqual(moment(egk_params(1, 1, omega=5), 2), 5, places=12)

    def test_against_density(self):
        for m, xi, m_s, xi_s, omega in COMPOSITE[:3]:
            params = egk_params(m, xi, m_s, xi_s, omega)
            for k in (1.0, 3.0):
                value, _ = integrate(
                    lambda r: r ** k * envelope_pdf(params, r),
                    0,
                    math.inf,
                    points=[math.sqrt(omega)],
                )
                self.assertAlmostEqual(value / moment(params, k), 1, places=6)

    def test_rayleigh(self):
        self.assertAlmostEqual(moment(egk_params(1, 1), 1), math.sqrt(math.pi) / 2, places=12)
        self.assertEqual(moment(egk_params(1, 1), 0), 1.0)
        with self.assertRaises(DomainError):
            moment(egk_params(1, 1), -1)


class TestMgf(unittest.TestCase):
    def test_rayleigh(self):
        rayleigh = egk_params(1, 1)
        for method in (Method.QUADRATURE, Method.FOXH):
            self.assertAlmostEqual(mgf(rayleigh, 2.0, 0.5, method), 0.5, places=9)

    def test_paths_agree(self):
        params = egk_params(2.5, 0.8, 1.7, 1.2)
        quad = mgf(params, 5.0, 0.3)
        res = mgf_result(params, 5.0, 0.3, Method.FOXH)
        self.assertEqual(res.method, Method.FOXH)
        self.assertAlmostEqual(res.value / quad, 1, places=6)

    def test_derivative_at_origin_is_mean(self):
        params = egk_params(2, 1, 2, 1)
        s0, h = 1e-4, 5e-5
        slope = (mgf(params, 1.0, s0) - mgf(params, 1.0, s0 + h)) / h
        self.assertAlmostEqual(slope, 1.0, delta=1e-3)

    def test_domain(self):
        with self.assertRaises(DomainError):
            mgf(egk_params(1, 1), 1.0, 0.0)
        with self.assertRaises(DomainError):
            mgf(egk_params(1, 1), -1.0, 1.0)


class TestCatalog(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.catalog = load_catalog()

    def test_packaged_catalog(self):
        self.assertEqual(len(self.catalog), 23)
        self.assertEqual(self.catalog["rayleigh"].template_string(), "(1, 1, inf, -)")
        self.assertEqual(self.catalog["generalized-gamma"].template_string(), "(m, xi/2, inf, -)")
        self.assertEqual(self.catalog["egk"].free_names, ("m", "xi", "m_s", "xi_s"))

    def test_presets(self):
        self.assertEqual(preset("rayleigh", catalog=self.catalog), ChannelParams(1.0, 1.0))
        self.assertEqual(preset("Rayleigh", catalog=self.catalog), ChannelParams(1.0, 1.0))
        gk = preset("generalized-k", 2.0, self.catalog, m=2, m_s=1.5)
        self.assertEqual(gk, ChannelParams(2.0, 1.0, Shadowing(1.5, 1.0), 2.0))
        self.assertEqual(preset("gamma", catalog=self.catalog, m=2).xi, 0.5)
        self.assertEqual(preset("generalized-gamma", catalog=self.catalog, m=2, xi=3).xi, 1.5)

    def test_composite_names_read_multipath_first(self):
        shadowing = {"exponential": (1, 1), "gamma": ("m_s", 1), "weibull": (1, "xi_s")}
        shadowing["gnm"] = ("m_s", "xi_s")
        single = [n for n, p in self.catalog.items() if p.template["m_s"] is None]
        composites = 0
        for name, row in self.catalog.items():
            heads = [s for s in single if name.startswith(s + "-")]
            if not heads:
                continue
            head = max(heads, key=len)
            tail = name[len(head) + 1 :]
            with self.subTest(preset=name):
                self.assertIn(tail, shadowing)
                multipath = self.catalog[head].template
                self.assertEqual((row.template["m"], row.template["xi"]), (multipath["m"], multipath["xi"]))
                self.assertEqual((row.template["m_s"], row.template["xi_s"]), shadowing[tail])
            composites += 1
        self.assertEqual(composites, 11)
        mg = preset("maxwell-gamma", catalog=self.catalog, m_s=2)
        self.assertEqual(mg, ChannelParams(1.5, 1.0, Shadowing(2.0, 1.0)))
        self.assertEqual(self.catalog["weibull-exponential"].free_names, ("xi",))
        self.assertEqual(self.catalog["gnm-gamma"].template_string(), "(m, xi, m_s, 1)")

    def test_preset_errors(self):
        with self.assertRaises(UnknownPresetError) as ctx:
            preset("rician", catalog=self.catalog)
        self.assertIn("rayleigh", str(ctx.exception))
        self.assertIsInstance(ctx.exception, KeyError)
        with self.assertRaises(DomainError):
            preset("nakagami-m", catalog=self.catalog)
        with self.assertRaises(DomainError):
            preset("weibull", catalog=self.catalog, xi=1, shape=2)
        with self.assertRaises(DomainError):
            preset("nakagami-m", catalog=self.catalog, m=0.2)

    def test_invalid_catalogs(self):
        rows = (
            "presets:\n  broken: {m: 1}\n",
            "presets:\n  broken: {m: 1, xi: 1, m_s: 2}\n",
            "presets:\n  broken: {m: 0.1, xi: 1}\n",
            "presets:\n  broken: {m: q, xi: 1}\n",
        )
        for text in rows:
            with tempfile.TemporaryDirectory() as tmp:
                path = os.path.join(tmp, "catalog.yaml")
                with open(path, "w") as fh:
                    fh.write(text)
                with self.assertRaises(ConfigError):
                    load_catalog(path)
        with self.assertRaises(ConfigError):
            load_catalog("/nonexistent/catalog.yaml")


if __name__ == "__main__":
    unittest.main()
