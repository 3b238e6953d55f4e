import unittest
import warnings

import numpy as np
import pandas as pd
import scipy.integrate

import gazepy.analysis as analysis
import gazepy.gaze as gaze
import gazepy.synthetic as synthetic
from gazepy.raster import Normalize_Raster
from gazepy.utils import Constants


def Exhaustive_Auc(saliency_map, fixation_map):
    """Threshold at every distinct value, largest first"""

    values = Normalize_Raster(saliency_map)
    fixated = fixation_map != 0
    positives = values[fixated]
    negatives = values[~fixated]

    fpr, tpr = [0.0], [0.0]
    for threshold in sorted(set(values.ravel().tolist()), reverse=True):
        tpr.append(np.count_nonzero(positives >= threshold) / positives.size)
        fpr.append(np.count_nonzero(negatives >= threshold) / negatives.size)

    fpr.append(1.0)
    tpr.append(1.0)

    return float(scipy.integrate.trapezoid(np.array(tpr), np.array(fpr)))


def Pair_Probability(saliency_map, fixation_map):
    """P(positive > negative) + P(tie) / 2 over every pair"""

    fixated = fixation_map != 0
    positives = saliency_map[fixated][:, np.newaxis]
    negatives = saliency_map[~fixated][np.newaxis, :]

    return float(np.mean(positives > negatives) + 0.5 * np.mean(positives == negatives))


def Point_Dataset(points_by_group, width=64, height=48, image_ids=("a",)):
    rows = []
    for group, points in points_by_group.items():
        for image_id in image_ids:
            for ordinal, (x, y) in enumerate(points):
                rows.append((f"{group}_o", group, image_id, x, y, ordinal))

    return gaze.CohortDataset(
        images={image_id: np.zeros((height, width, 3)) for image_id in image_ids},
        fixations=pd.DataFrame(rows, columns=gaze.FIXATION_COLUMNS),
    )


class Test_Entropy(unittest.TestCase):

    def test_constant(self):
        self.assertEqual(analysis.Entropy(np.full((10, 10), 0.3)), 0)
        self.assertEqual(analysis.Entropy(np.zeros((5, 7)), num_bins=2), 0)

    def test_two_bins(self):
        saliency_map = np.zeros((8, 8))
        saliency_map[:4] = 1

        self.assertAlmostEqual(analysis.Entropy(saliency_map, 256), 1.0, delta=1e-12)

    def test_three_bins(self):
        saliency_map = np.array([0] * 8 + [0.5] * 4 + [1] * 4, dtype=float).reshape(4, 4)
        self.assertAlmostEqual(analysis.Entropy(saliency_map), 1.5, delta=1e-12)

    def test_bounds(self):
        saliency_map = np.random.default_rng(0).random((64, 64))

        for num_bins in [2, 16, 256]:
            entropy = analysis.Entropy(saliency_map, num_bins)
            self.assertGreaterEqual(entropy, 0)
            self.assertLessEqual(entropy, np.log2(num_bins) + 1e-12)

    def test_permutation(self):
        rng = np.random.default_rng(1)
        saliency_map = rng.random((20, 20))
        shuffled = rng.permutation(saliency_map.ravel()).reshape(20, 20)

        self.assertEqual(analysis.Entropy(saliency_map), analysis.Entropy(shuffled))

    def test_invalid(self):
        with self.assertRaises(ValueError):
            analysis.Entropy(np.zeros((4, 4)), num_bins=1)
        with self.assertRaises(ValueError):
            analysis.Entropy(np.full((4, 4), 2.0))


class Test_Roc(unittest.TestCase):

    def test_perfect(self):
        fixation_map = np.zeros((10, 10))
        fixation_map[2:4, 5:8] = 1

        self.assertEqual(analysis.Roc_Auc(fixation_map, fixation_map).auc, 1.0)

    def test_constant(self):
        fixation_map = np.zeros((10, 10))
        fixation_map[1, 1] = 1

        result = analysis.Roc_Auc(np.full((10, 10), 0.7), fixation_map)
        self.assertAlmostEqual(result.auc, 0.5, delta=1e-12)

    def test_small_example(self):
        saliency_map = np.array([[0.9, 0.1], [0.6, 0.2]])
        fixation_map = np.array([[1, 0], [0, 0]])

        exact = analysis.Roc_Auc(saliency_map, fixation_map, exact=True)

        self.assertEqual(exact.auc, Exhaustive_Auc(saliency_map, fixation_map))
        self.assertAlmostEqual(exact.auc, 1.0, delta=1e-12)

    def test_random_maps(self):
        rng = np.random.default_rng(42)

        for _ in range(200):
            saliency_map = rng.random((16, 16))
            fixation_map = (rng.random((16, 16)) < rng.uniform(0.05, 0.5)).astype(float)
            fixation_map[0, 0] = 1
            fixation_map[15, 15] = 0

            oracle = Exhaustive_Auc(saliency_map, fixation_map)

            self.assertEqual(
                analysis.Roc_Auc(saliency_map, fixation_map, exact=True).auc, oracle
            )
            self.assertLess(
                abs(analysis.Roc_Auc(saliency_map, fixation_map, 256).auc - oracle), 0.005
            )
            self.assertAlmostEqual(
                oracle, Pair_Probability(saliency_map, fixation_map), delta=1e-12
            )

    def test_curve(self):
        rng = np.random.default_rng(3)
        fixation_map = (rng.random((12, 12)) < 0.2).astype(float)
        fixation_map[0, 0] = 1

        result = analysis.Roc_Auc(rng.random((12, 12)), fixation_map, 64)

        self.assertTrue(np.array_equal(result.points[0], [0, 0]))
        self.assertTrue(np.array_equal(result.points[-1], [1, 1]))
        self.assertTrue(np.all(np.diff(result.fpr) >= 0))
        self.assertAlmostEqual(
            result.auc, scipy.integrate.trapezoid(result.tpr, result.fpr), delta=1e-12
        )

    def test_monotone_transform(self):
        rng = np.random.default_rng(4)
        saliency_map = rng.random((16, 16))
        fixation_map = (rng.random((16, 16)) < 0.3).astype(float)
        fixation_map[0, 0] = 1
        fixation_map[0, 1] = 0

        base = analysis.Roc_Auc(saliency_map, fixation_map, exact=True).auc

        for transformed in [saliency_map**3, np.exp(saliency_map)]:
            self.assertEqual(
                analysis.Roc_Auc(transformed, fixation_map, exact=True).auc, base
            )

        self.assertAlmostEqual(
            analysis.Roc_Auc(2 * saliency_map + 3, fixation_map).auc,
            analysis.Roc_Auc(saliency_map, fixation_map).auc,
            delta=1 / 256,
        )

    def test_reversal(self):
        rng = np.random.default_rng(5)
        saliency_map = rng.random((16, 16))
        fixation_map = (rng.random((16, 16)) < 0.25).astype(float)
        fixation_map[0, 0] = 1
        fixation_map[0, 1] = 0

        forward = analysis.Roc_Auc(saliency_map, fixation_map, exact=True).auc
        backward = analysis.Roc_Auc(-saliency_map, fixation_map, exact=True).auc

        self.assertAlmostEqual(forward + backward, 1, delta=1e-12)

    def test_degenerate(self):
        with self.assertRaises(ValueError):
            analysis.Roc_Auc(np.random.default_rng(0).random((4, 4)), np.zeros((4, 4)))
        with self.assertRaises(ValueError):
            analysis.Roc_Auc(np.random.default_rng(0).random((4, 4)), np.ones((4, 4)))
        with self.assertRaises(ValueError):
            analysis.Roc_Auc(np.zeros((4, 4)), np.ones((3, 3)))

    def test_literal_fpr(self):
        fixation_map = np.zeros((4, 4))
        fixation_map[0, 0] = 1

        result = analysis.Roc_Auc(np.full((4, 4), 0.5), fixation_map, literal_fpr=True)

        self.assertEqual(result.fpr.max(), 15)
        self.assertFalse(np.array_equal(result.points[-1], [1, 1]))

    def test_negative_sampling(self):
        rng = np.random.default_rng(6)
        saliency_map = rng.random((32, 32))
        fixation_map = (rng.random((32, 32)) < 0.1).astype(float)

        first = analysis.Roc_Auc(saliency_map, fixation_map, negative_samples=100, seed=2)
        second = analysis.Roc_Auc(saliency_map, fixation_map, negative_samples=100, seed=2)

        self.assertEqual(first.auc, second.auc)
        self.assertGreaterEqual(first.auc, 0)
        self.assertLessEqual(first.auc, 1)


class Test_Explorativeness(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cohort = synthetic.Synth_Cohort(
            synthetic.Preset_Config("explorativeness", width=512, height=384, seed=0)
        )
        cls.report = analysis.Explorativeness_Report(cohort)

    def test_increasing(self):
        means = self.report.group_means

        self.assertEqual(list(means.index), list(Constants.AGE_GROUPS))
        self.assertTrue(np.all(np.diff(means.to_numpy()) > 0))
        self.assertAlmostEqual(self.report.spearman_rho, 1.0, delta=1e-12)
        self.assertGreater(self.report.pearson_r, 0)

    def test_per_image(self):
        self.assertEqual(len(self.report.per_image), 4 * 10)
        self.assertEqual(
            self.report.per_image.columns.tolist(), ["group", "image_id", "entropy"]
        )

    def test_least_explored(self):
        least = analysis.Least_Explored_Images(self.report, "Y4", count=3)

        self.assertEqual(len(least), 3)
        self.assertTrue(np.all(np.diff(least["entropy"].to_numpy()) >= 0))
        self.assertLessEqual(
            least["entropy"].iloc[-1],
            self.report.per_image.loc[self.report.per_image["group"] == "Y4", "entropy"].median(),
        )

    def test_identical_groups(self):
        points = [(10, 10), (30, 20), (50, 40)]
        dataset = Point_Dataset({group: points for group in Constants.AGE_GROUPS})

        report = analysis.Explorativeness_Report(dataset, sigma=4)

        self.assertEqual(report.group_means.nunique(), 1)
        self.assertTrue(np.isnan(report.spearman_rho))

    def test_single_fixations(self):
        dataset = Point_Dataset(
            {"Y4": [(32, 24)], "Y8": [(32, 24)]}, image_ids=("a", "b")
        )

        with self.assertWarns(UserWarning):
            report = analysis.Explorativeness_Report(dataset, sigma=4)

        self.assertEqual(report.group_means["Y4"], report.group_means["Y8"])


class Test_Agreement(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cohort = synthetic.Synth_Cohort(
            synthetic.Preset_Config("agreement", image_count=4, seed=1)
        )
        cls.matrix = analysis.Agreement_Matrix(cohort)

    def test_shape(self):
        self.assertEqual(self.matrix.scores.shape, (4, 4))
        self.assertTrue(np.all(self.matrix.image_counts.to_numpy() == 4))
        self.assertTrue(np.all((self.matrix.scores >= 0) & (self.matrix.scores <= 1)))

    def test_diagonal_dominates(self):
        scores = self.matrix.scores.to_numpy()

        for k in range(4):
            others_row = np.delete(scores[k], k)
            others_column = np.delete(scores[:, k], k)

            self.assertTrue(np.all(scores[k, k] > others_row))
            self.assertTrue(np.all(scores[k, k] > others_column))

    def test_identical_groups(self):
        points = [(5, 5), (20, 30), (40, 12), (60, 44)]
        dataset = Point_Dataset({group: points for group in Constants.AGE_GROUPS})

        matrix = analysis.Agreement_Matrix(dataset, sigma=3)

        self.assertEqual(len(np.unique(matrix.scores.to_numpy())), 1)

    def test_hand_placed(self):
        rows = [
            ("o1", "Y4", "a", 0, 0, 0),
            ("o2", "Y6", "a", 3, 3, 0),
            ("o1", "Y4", "b", 1, 2, 0),
            ("o2", "Y6", "b", 1, 1, 0),
            ("o3", "Y8", "b", 2, 2, 0),
            ("o4", "ADULT", "a", 3, 0, 0),
            ("o4", "ADULT", "b", 0, 3, 0),
        ]
        dataset = gaze.CohortDataset(
            images={"a": np.zeros((4, 4, 3)), "b": np.zeros((4, 4, 3))},
            fixations=pd.DataFrame(rows, columns=gaze.FIXATION_COLUMNS),
        )

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            matrix = analysis.Agreement_Matrix(dataset, sigma=1, num_thresholds=256)

        def Auc(source, target, image_id):
            return analysis.Roc_Auc(
                gaze.Build_Human_Saliency_Map(
                    gaze.Build_Fixation_Map(dataset, source, image_id), 1
                ),
                gaze.Build_Fixation_Map(dataset, target, image_id),
            ).auc

        self.assertEqual(
            matrix.scores.loc["Y4", "Y6"], np.mean([Auc("Y4", "Y6", "a"), Auc("Y4", "Y6", "b")])
        )
        self.assertEqual(matrix.scores.loc["Y8", "Y4"], Auc("Y8", "Y4", "b"))
        self.assertEqual(matrix.image_counts.loc["Y8", "Y8"], 1)

        # Own fixation pixel is the map's peak
        self.assertAlmostEqual(matrix.scores.loc["Y4", "Y4"], 1.0, delta=1e-12)

    def test_missing_group_warns(self):
        dataset = Point_Dataset({"Y4": [(4, 4)], "ADULT": [(40, 30)]})

        with self.assertWarns(UserWarning):
            matrix = analysis.Agreement_Matrix(dataset, sigma=3)

        self.assertEqual(list(matrix.scores.index), ["Y4", "ADULT"])

    def test_intra_trend(self):
        intra, spearman_rho, pearson_r = analysis.Intra_Group_Trend(self.matrix)

        self.assertEqual(list(intra.index), list(Constants.AGE_GROUPS))
        self.assertTrue(np.array_equal(intra.to_numpy(), np.diag(self.matrix.scores.to_numpy())))
        self.assertTrue(-1 <= spearman_rho <= 1)
        self.assertTrue(-1 <= pearson_r <= 1)


class Test_Center_Map(unittest.TestCase):

    def test_single_image(self):
        dataset = Point_Dataset({"Y6": [(10, 30), (40, 5)]})

        center_map = analysis.Build_Center_Map(dataset, "Y6", sigma=6)
        expected = gaze.Build_Human_Saliency_Map(
            gaze.Build_Fixation_Map(dataset, "Y6", "a"), 6
        )

        self.assertTrue(np.array_equal(center_map.map, expected))
        self.assertEqual(center_map.group, "Y6")

    def test_centered(self):
        dataset = Point_Dataset({"Y4": [(32, 24)]}, image_ids=("a", "b", "c"))
        center_map = analysis.Build_Center_Map(dataset, "Y4", sigma=5).map

        self.assertEqual(np.unravel_index(np.argmax(center_map), center_map.shape), (24, 32))

    def test_mirrored(self):
        rows = [("o1", "Y8", "a", 40, 20, 0), ("o1", "Y8", "b", 20, 20, 0)]
        dataset = gaze.CohortDataset(
            images={"a": np.zeros((41, 61, 3)), "b": np.zeros((41, 61, 3))},
            fixations=pd.DataFrame(rows, columns=gaze.FIXATION_COLUMNS),
        )

        center_map = analysis.Build_Center_Map(dataset, "Y8", sigma=4).map

        self.assertTrue(np.allclose(center_map, center_map[:, ::-1], atol=1e-9))

    def test_empty_group(self):
        dataset = Point_Dataset({"Y4": [(3, 3)]})
        with self.assertRaises(ValueError):
            analysis.Build_Center_Map(dataset, "ADULT")


class Test_Center_Bias(unittest.TestCase):

    def test_ordering(self):
        cohort = synthetic.Synth_Cohort(
            synthetic.Preset_Config("centerbias", image_count=32, observers=10, seed=5)
        )
        scores = analysis.Center_Bias_Scores(cohort)

        self.assertGreater(scores["Y4"], scores["Y6"])
        self.assertGreater(scores["Y6"], scores["Y8"])
        self.assertGreater(scores["Y6"], scores["ADULT"])
        self.assertLess(abs(scores["Y8"] - scores["ADULT"]), 0.02)

    def test_single_fixation(self):
        dataset = Point_Dataset({"Y8": [(20, 14)]})
        scores = analysis.Center_Bias_Scores(dataset, sigma=5)

        self.assertAlmostEqual(scores["Y8"], 1.0, delta=1e-12)


if __name__ == "__main__":
    unittest.main()
