import io

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal
from django.test import SimpleTestCase

from shrinklasso.exceptions import InvalidParameter, SchemaError
from shrinklasso.lasso import LambdaMode
from shrinklasso.reporting import SCHEMA_VERSION
from shrinklasso.simulation import (
    EfficiencyTable, SimDesign, beta_for_delta2, gen_design, realized_delta2,
    run_cell, run_experiment,
)


def combined_se(table, *keys):
    return np.sqrt(sum(table.mc_se(*key) ** 2 for key in keys))


class DesignGenerationTests(SimpleTestCase):
    def test_independent_columns(self):
        X = gen_design(10 ** 4, 5, 0.0, seed=1)
        corr = np.corrcoef(X, rowvar=False)
        off = corr[~np.eye(5, dtype=bool)]
        self.assertLess(np.max(np.abs(off)), 0.1)

    def test_equicorrelated_columns(self):
        X = gen_design(10 ** 4, 5, 0.9, seed=2)
        corr = np.corrcoef(X, rowvar=False)
        off = corr[~np.eye(5, dtype=bool)]
        assert_allclose(off, 0.9, atol=0.02)

    def test_deterministic(self):
        assert_array_equal(gen_design(50, 4, 0.2, seed=3),
                           gen_design(50, 4, 0.2, seed=3))

    def test_invalid_correlation(self):
        self.assertRaises(InvalidParameter, gen_design, 10, 3, 1.0, 0)


class BetaForDelta2Tests(SimpleTestCase):
    def test_null_truth(self):
        beta, restriction = beta_for_delta2(10, 5, 0.0)
        assert_array_equal(beta, [1, 1, 1, 1, 1, 0, 0, 0, 0, 0])
        self.assertEqual(restriction.q, 5)
        assert_array_equal(restriction.h, np.zeros(5))

    def test_round_trip(self):
        for p, k, r, delta2 in ((10, 1, 0.0, 4.0), (20, 3, 0.9, 10.0),
                                (11, 10, 0.0, 4.0), (30, 5, 0.2, 50.0)):
            beta, restriction = beta_for_delta2(p, k, delta2, n=100, r=r,
                                                sigma_eps=5.0)
            self.assertAlmostEqual(
                realized_delta2(beta, restriction, 100, r, 5.0), delta2,
                delta=1e-8,
            )

    def test_invalid(self):
        self.assertRaises(InvalidParameter, beta_for_delta2, 5, 5, 1.0)
        self.assertRaises(InvalidParameter, beta_for_delta2, 5, 2, -1.0)


class SimDesignTests(SimpleTestCase):
    def test_defaults(self):
        design = SimDesign.paper_default()
        self.assertEqual(design.n, 100)
        self.assertEqual(design.p_list, (10, 20, 30))
        self.assertEqual(design.k_list, (1, 3, 4, 5, 6))
        self.assertEqual(design.r_list, (0.0, 0.2, 0.9))
        self.assertEqual(design.reps, 2000)
        self.assertEqual(design.sigma_eps, 5.0)
        self.assertIs(design.lambda_mode, LambdaMode.SQRT_N)
        cells = design.cells()
        self.assertEqual(len(cells), 3 * 5 * 9)
        self.assertEqual(sorted({r for r, _, _ in cells}), [0.0, 0.2, 0.9])
        self.assertEqual(sorted({k for _, k, _ in cells}), [1, 3, 4, 5, 6])

    def test_validation(self):
        self.assertRaises(InvalidParameter, SimDesign, reps=0)
        self.assertRaises(InvalidParameter, SimDesign, r_list=(1.0,))
        self.assertRaises(InvalidParameter, SimDesign, p_list=(10,),
                          k_list=(10,))
        self.assertRaises(InvalidParameter, SimDesign, n=20, p_list=(20,))

    def test_document(self):
        design = SimDesign(p_list=[10], reps=5, lambda_mode='cv')
        again = SimDesign.from_dict(design.to_dict())
        self.assertEqual(again, design)
        self.assertRaises(SchemaError, SimDesign.from_dict,
                          {'schema_version': SCHEMA_VERSION, 'replicates': 3})
        self.assertRaises(SchemaError, SimDesign.from_dict, {'reps': 3})


class RunCellTests(SimpleTestCase):
    def setUp(self):
        self.design = SimDesign(p_list=(10,), k_list=(3,), delta2_list=(0.0,),
                                reps=20, alpha_list=(0.15,), seed=4)

    def test_reference_efficiency(self):
        table = run_cell(self.design, 10, 3, 0.0)
        self.assertEqual(table.rel_eff(10, 3, 0.0, 0.0, 'ULE'), 1.0)
        self.assertEqual(table.mc_se(10, 3, 0.0, 0.0, 'ULE'), 0.0)
        self.assertEqual(
            list(table.frame.estimator),
            ['ULE', 'RLE', 'PTLE', 'SSLE', 'PRSSLE'],
        )
        self.assertEqual(tuple(table.frame.columns), EfficiencyTable.COLUMNS)

    def test_restricted_beats_unrestricted_at_the_null(self):
        table = run_cell(self.design, 10, 3, 0.0)
        self.assertLess(table.risk(10, 3, 0.0, 0.0, 'RLE'),
                        table.risk(10, 3, 0.0, 0.0, 'ULE'))

    def test_deterministic_across_threads(self):
        design = SimDesign(p_list=(10,), k_list=(1, 3), r_list=(0.0, 0.5),
                           delta2_list=(0.0, 5.0), reps=12, seed=9)
        outputs = []
        for threads in (1, 4, 1):
            buf = io.StringIO()
            run_experiment(design, threads=threads).to_csv(buf)
            outputs.append(buf.getvalue())
        self.assertEqual(outputs[0], outputs[1])
        self.assertEqual(outputs[0], outputs[2])

    def test_text_layout(self):
        text = run_cell(self.design, 10, 3, 0.0).to_text()
        self.assertIn('PTLE(0.15)', text)
        self.assertIn('PRSSLE', text)


class EfficiencyTrendTests(SimpleTestCase):
    """
    Desk-scale relative-efficiency experiment: p = 10, one active
    coefficient, equicorrelation 0 and 0.9.
    """

    @classmethod
    def setUpClass(cls):
        super(EfficiencyTrendTests, cls).setUpClass()
        cls.design = SimDesign(
            p_list=(10,), k_list=(1,), r_list=(0.0, 0.9),
            delta2_list=(0.0, 10.0, 50.0), reps=300,
            alpha_list=(0.15, 0.25), seed=2024,
        )
        cls.table = run_experiment(cls.design)

    def key(self, r, delta2, estimator, alpha=None):
        return (10, 1, r, delta2, estimator, alpha)

    def assertAbove(self, upper, lower, n_se=2.0):
        t = self.table
        margin = n_se * combined_se(t, upper, lower)
        self.assertGreater(t.rel_eff(*upper), t.rel_eff(*lower) - margin,
                           (upper, lower))

    def test_null_ordering(self):
        for r in (0.0, 0.9):
            rle = self.key(r, 0.0, 'RLE')
            pr = self.key(r, 0.0, 'PRSSLE')
            ss = self.key(r, 0.0, 'SSLE')
            pt15 = self.key(r, 0.0, 'PTLE', 0.15)
            pt25 = self.key(r, 0.0, 'PTLE', 0.25)
            self.assertAbove(rle, pr)
            self.assertAbove(pr, ss)
            self.assertAbove(ss, pt15)
            self.assertAbove(pt15, pt25)
            self.assertGreater(self.table.rel_eff(*pt25), 1.0)

    def test_efficiency_decays_with_noncentrality(self):
        t = self.table
        for r in (0.0, 0.9):
            for name, alpha in (('RLE', None), ('PTLE', 0.15),
                                ('PTLE', 0.25), ('SSLE', None),
                                ('PRSSLE', None)):
                self.assertLess(t.rel_eff(*self.key(r, 50.0, name, alpha)),
                                t.rel_eff(*self.key(r, 0.0, name, alpha)))
                if name != 'RLE':
                    self.assertTrue(
                        0.7 < t.rel_eff(*self.key(r, 50.0, name, alpha))
                        < 2.2
                    )

    def test_correlated_designs_gain_more(self):
        t = self.table
        self.assertGreater(t.rel_eff(*self.key(0.9, 0.0, 'RLE')),
                           t.rel_eff(*self.key(0.0, 0.0, 'RLE')))
        for name in ('SSLE', 'PRSSLE'):
            self.assertAbove(self.key(0.9, 10.0, name),
                             self.key(0.0, 10.0, name), n_se=3.0)

    def test_positive_rule_not_worse(self):
        for r in (0.0, 0.9):
            for delta2 in (0.0, 10.0, 50.0):
                self.assertAbove(self.key(r, delta2, 'PRSSLE'),
                                 self.key(r, delta2, 'SSLE'))
