from egk.data import Method
from egk.egk import envelope_cdf
from egk.errors import DomainError
from egk.params import OmegaSplit, egk_params
from egk.secondorder import (
    DopplerSpec,
    ProcessConfig,
    TimeSeries,
    afd,
    afd_result,
    cond_variance,
    empirical_second_order,
    export_time_series,
    lcr_approx,
    lcr_integral,
    lcr_integral_result,
    lcr_result,
    lcr_series,
    lcr_series_result,
    simulate_process,
)
import math
import numpy as np
import os
import tempfile
import unittest

RAYLEIGH_LCR = math.sqrt(2 * math.pi) * math.exp(-1)  # f = 1, rho = 1
RAYLEIGH_AFD = (math.e - 1) / math.sqrt(2 * math.pi)


class TestConditionalVariance(unittest.TestCase):
    def setUp(self):
        self.params = egk_params(2, 1, 2, 1)
        self.split = OmegaSplit(1, 1)
        self.dop = DopplerSpec(1, 2)
        # σ² = 2π²f², weights A = σ_S²/(2β_s), B = σ_X²/(2β) with β = β_s = 2
        self.A = math.pi ** 2 / 2
        self.B = 2 * math.pi ** 2

    def test_product_form(self):
        r, u = 1.3, 0.7
        expected = self.A * (r / u) ** 2 + self.B * u ** 2
        value = cond_variance(self.params, self.split, self.dop, r, u, form="product")
        self.assertAlmostEqual(value / expected, 1, places=12)

    def test_printed_form(self):
        value = cond_variance(self.params, self.split, self.dop, 1.3, 0.7, form="printed")
        self.assertAlmostEqual(value / (self.A + self.B), 1, places=12)

    def test_default_is_constant_for_unit_shaping(self):
        for r in (0.1, 0.5, 1.0, 2.0, 5.0):
            for u in (0.2, 0.5, 1.5, 4.0):
                value = cond_variance(self.params, self.split, self.dop, r, u)
                self.assertAlmostEqual(value / (self.A + self.B), 1, places=12)

    def test_default_depends_on_level_otherwise(self):
        params = egk_params(2, 0.7, 2, 1.4)
        low = cond_variance(params, None, self.dop, 0.5, 0.5)
        high = cond_variance(params, None, self.dop, 2.0, 1.5)
        self.assertNotAlmostEqual(low, high, places=6)
        self.assertEqual(low, cond_variance(params, None, self.dop, 0.5, 0.5, form="printed"))

    def test_domain(self):
        with self.assertRaises(DomainError):
            cond_variance(self.params, self.split, self.dop, 1.0, 1.0, form="sum")
        with self.assertRaises(DomainError):
            cond_variance(self.params, self.split, self.dop, 1.0, 0.0)
        with self.assertRaises(DomainError):
            cond_variance(self.params, OmegaSplit(2, 1), self.dop, 1.0, 1.0)

    def test_doppler_spec(self):
        self.assertAlmostEqual(DopplerSpec(0, 1).sigma_x, math.sqrt(2) * math.pi, places=12)
        self.assertEqual(DopplerSpec(1, 2).scaled(3), DopplerSpec(3, 6))
        with self.assertRaises(DomainError):
            DopplerSpec(-1, 1)
        with self.assertRaises(DomainError):
            DopplerSpec(1, 0)


class TestLevelCrossingRate(unittest.TestCase):
    def test_rayleigh(self):
        rayleigh = egk_params(1, 1)
        res = lcr_result(rayleigh, None, DopplerSpec(0, 1), 1.0)
        self.assertEqual(res.method, Method.CLOSED_FORM)
        self.assertAlmostEqual(res.value, RAYLEIGH_LCR, places=9)
        self.assertAlmostEqual(afd(rayleigh, None, DopplerSpec(0, 1), 1.0), RAYLEIGH_AFD, places=8)
        # rho = r/√Ω and L scales with f
        scaled = lcr_integral(egk_params(1, 1, omega=3), None, DopplerSpec(0, 2), math.sqrt(3))
        self.assertAlmostEqual(scaled, 2 * RAYLEIGH_LCR, places=9)

    def test_constant_shadowing_limit(self):
        params = egk_params(1, 1, 150, 1)
        value = lcr_integral(params, OmegaSplit(1, 1), DopplerSpec(0, 1), 1.0)
        self.assertAlmostEqual(value / RAYLEIGH_LCR, 1, delta=0.02)
        afd_value = afd(params, OmegaSplit(1, 1), DopplerSpec(0, 1), 1.0)
        self.assertAlmostEqual(afd_value / RAYLEIGH_AFD, 1, delta=0.02)

    def test_series_matches_integral(self):
        params = egk_params(2, 1, 2, 1)
        dop = DopplerSpec(10, 10)
        for r in (0.1, 0.5, 1.0, 2.0):
            integral = lcr_integral(params, None, dop, r)
            res = lcr_series_result(params, None, dop, r, n_terms=8)
            self.assertEqual(res.method, Method.SERIES)
            self.assertGreater(res.err_est, 0)
            self.assertAlmostEqual(res.value / integral, 1, delta=1e-3)

    def test_series_is_exact_without_shadowing_doppler(self):
        # f_s = 0 leaves only the n = 0 term
        for m, xi, m_s, xi_s in ((2, 1, 2, 1), (1.5, 0.7, 2.5, 1.3)):
            params = egk_params(m, xi, m_s, xi_s)
            dop = DopplerSpec(0, 5)
            for r in (0.4, 1.0, 1.8):
                integral = lcr_integral(params, None, dop, r)
                series = lcr_series(params, None, dop, r, n_terms=3)
                self.assertAlmostEqual(series / integral, 1, places=7)

    def test_approximation_is_first_order_series(self):
        params = egk_params(2, 1, 2, 1)
        dop = DopplerSpec(1, 10)
        self.assertAlmostEqual(
            lcr_approx(params, None, dop, 0.8) / lcr_series(params, None, dop, 0.8, n_terms=1),
            1,
            places=12,
        )

    def test_printed_variant(self):
        params = egk_params(2, 1, 2, 1)
        res = lcr_series_result(params, None, DopplerSpec(1, 10), 1.0, variant="printed")
        self.assertTrue(math.isfinite(res.value))
        self.assertEqual(res.note, "printed series variant")
        with self.assertRaises(DomainError):
            lcr_series(params, None, DopplerSpec(0, 10), 1.0, variant="printed")
        with self.assertRaises(DomainError):
            lcr_series(params, None, DopplerSpec(1, 10), 1.0, variant="other")

    def test_doppler_scaling(self):
        params = egk_params(2.5, 0.8, 1.7, 1.2)
        dop = DopplerSpec(1.5, 7)
        base = lcr_integral(params, None, dop, 0.9)
        self.assertAlmostEqual(lcr_integral(params, None, dop.scaled(3), 0.9) / base, 3, places=9)

    def test_shadowing_severity_ordering(self):
        dop = DopplerSpec(1, 10)
        severe = lcr_integral(egk_params(1, 1, 0.5, 1), None, dop, 1.0)
        mild = lcr_integral(egk_params(1, 1, 2, 1), None, dop, 1.0)
        self.assertLess(severe, mild)

    def test_split_invariance_of_integral(self):
        params = egk_params(2, 1.2, 1.5, 0.9, omega=2)
        dop = DopplerSpec(1, 4)
        default = lcr_integral(params, None, dop, 1.1)
        other = lcr_integral(params, OmegaSplit(0.5, 4), dop, 1.1)
        self.assertAlmostEqual(other / default, 1, places=8)

    def test_afd_is_cdf_over_lcr(self):
        params = egk_params(2.5, 0.8, 1.7, 1.2)
        dop = DopplerSpec(1, 10)
        for method in (Method.QUADRATURE, Method.SERIES):
            res = afd_result(params, None, dop, 0.7, method)
            lcr = lcr_result(params, None, dop, 0.7, method).value
            self.assertAlmostEqual(res.value * lcr / envelope_cdf(params, 0.7), 1, places=10)
            self.assertEqual(res.method, method)

    def test_afd_unbounded_at_vanishing_rate(self):
        res = afd_result(egk_params(1, 1), None, DopplerSpec(0, 1), 40.0)
        self.assertEqual(res.value, math.inf)
        self.assertIn("level crossing rate", res.note)

    def test_domain(self):
        params = egk_params(2, 1, 2, 1)
        dop = DopplerSpec(1, 10)
        with self.assertRaises(DomainError):
            lcr_integral(params, None, dop, 0.0)
        with self.assertRaises(DomainError):
            lcr_result(params, None, dop, 1.0, Method.GCQ)
        with self.assertRaises(DomainError):
            lcr_series(params, None, dop, 1.0, n_terms=-1)
        res = lcr_integral_result(params, None, dop, 1.0)
        self.assertEqual(res.method, Method.QUADRATURE)


class TestTimeSeries(unittest.TestCase):
    def test_empirical_statistics(self):
        series = TimeSeries(np.arange(5.0), np.array([2.0, 0.0, 2.0, 0.0, 2.0]))
        est = empirical_second_order(series, 1.0)
        self.assertEqual(est.crossings, 2)
        self.assertAlmostEqual(est.cdf, 0.4)
        self.assertAlmostEqual(est.lcr, 0.4)
        self.assertAlmostEqual(est.afd, 1.0)
        above = TimeSeries(np.arange(3.0), np.array([2.0, 3.0, 2.5]))
        never = empirical_second_order(above, 1.0)
        self.assertEqual(never.crossings, 0)
        self.assertEqual(never.afd, math.inf)

    def test_process_config(self):
        with self.assertRaises(DomainError):
            ProcessConfig(duration=1.0, dt=1e-3)
        with self.assertRaises(DomainError):
            ProcessConfig(n_sinusoids=0)
        with self.assertRaises(DomainError):
            ProcessConfig(dt=1e-2, duration=500).check(DopplerSpec(1, 10))

    def test_simulator_needs_integer_figures(self):
        cfg = ProcessConfig(duration=20, dt=1e-3)
        with self.assertRaises(DomainError):
            simulate_process(egk_params(1.5, 1), None, DopplerSpec(0, 10), cfg)
        with self.assertRaises(DomainError):
            simulate_process(egk_params(1, 1, 2.5, 1), None, DopplerSpec(1, 10), cfg)

    def test_simulated_power_and_export(self):
        cfg = ProcessConfig(duration=50, dt=1e-3, seed=5)
        params = egk_params(2, 1, omega=2)
        series = simulate_process(params, None, DopplerSpec(0, 20), cfg)
        self.assertEqual(len(series.envelope), 50_000)
        self.assertAlmostEqual(series.dt, 1e-3)
        self.assertAlmostEqual(float(np.mean(series.envelope ** 2)) / 2, 1, delta=0.05)
        again = simulate_process(params, None, DopplerSpec(0, 20), cfg)
        np.testing.assert_array_equal(series.envelope, again.envelope)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "series.csv")
            export_time_series(series, path)
            with open(path) as fh:
                self.assertEqual(fh.readline().strip(), "time,envelope")
            data = np.loadtxt(path, delimiter=",", skiprows=1)
        self.assertEqual(data.shape, (50_000, 2))


if __name__ == "__main__":
    unittest.main()
