import os
import tempfile
import unittest

import numpy as np
import pandas as pd

import gazepy.learning as learning
import gazepy.synthetic as synthetic
from gazepy.gaze import FIXATION_COLUMNS, CohortDataset
from gazepy.itti import Combine_Conspicuity, ConspicuityMaps, Extract_Feature_Maps
from gazepy.raster import Normalize_Raster, Resize_Bilinear
from gazepy.utils import Constants


def Samples(points, labels):
    points = np.asarray(points, dtype=np.float64)
    columns = {
        channel: points[:, i] if i < points.shape[1] else np.zeros(len(points))
        for i, channel in enumerate(learning.CHANNELS)
    }
    table = pd.DataFrame(columns)
    table["label"] = labels
    return table


class Test_Center_Weight(unittest.TestCase):

    def test_center_and_corner(self):
        surface = learning.Center_Weight_Surface(101, 101)

        self.assertEqual(surface[50, 50], 1)
        self.assertEqual(surface[0, 0], 0)
        self.assertEqual(surface[100, 100], 0)

    def test_half_distance(self):
        surface = learning.Center_Weight_Surface(101, 101)
        self.assertAlmostEqual(surface[25, 25], 0.5, delta=1e-9)

    def test_range(self):
        surface = learning.Center_Weight_Surface(64, 48)

        self.assertEqual(surface.shape, (48, 64))
        self.assertGreaterEqual(surface.min(), 0)
        self.assertLessEqual(surface.max(), 1)

    def test_single_pixel(self):
        self.assertTrue(np.array_equal(learning.Center_Weight_Surface(1, 1), np.ones((1, 1))))

    def test_blend(self):
        rng = np.random.default_rng(0)
        saliency_map = rng.random((20, 30))
        surface = learning.Center_Weight_Surface(30, 20)

        self.assertTrue(np.array_equal(learning.Blend_Center_Weight(saliency_map, 0), saliency_map))
        self.assertTrue(np.array_equal(learning.Blend_Center_Weight(saliency_map, 1), surface))

        with self.assertRaises(ValueError):
            learning.Blend_Center_Weight(saliency_map, 1.5)

    def test_blend_monotone(self):
        saliency_map = np.zeros((21, 21))
        saliency_map[0, 0] = 1

        values = [
            learning.Blend_Center_Weight(saliency_map, weight)[10, 10]
            for weight in [0, 0.1, 0.25, 0.5]
        ]
        self.assertTrue(np.all(np.diff(values) > 0))


class Test_Training_Samples(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        rng = np.random.default_rng(2)
        cls.conspicuity = ConspicuityMaps(
            intensity=rng.random((4, 4)),
            color=rng.random((4, 4)),
            orientation=rng.random((4, 4)),
            subset_start=1,
        )

    def test_single(self):
        human_map = np.zeros((8, 8))
        human_map[3, 5] = 1
        human_map[6, 1] = -1

        samples = learning.Extract_Training_Samples(human_map, self.conspicuity, 1)

        self.assertEqual(samples["pixel"].tolist(), [3 * 8 + 5, 6 * 8 + 1])
        self.assertEqual(samples["label"].tolist(), [1, -1])

    def test_balance(self):
        human_map = np.random.default_rng(1).random((16, 16))
        samples = learning.Extract_Training_Samples(human_map, self.conspicuity, 10)

        self.assertEqual(len(samples), 20)
        self.assertEqual((samples["label"] == 1).sum(), 10)
        self.assertEqual((samples["label"] == -1).sum(), 10)

    def test_ties(self):
        samples = learning.Extract_Training_Samples(np.zeros((8, 8)), self.conspicuity, 3)
        self.assertEqual(samples["pixel"].tolist(), [0, 1, 2, 61, 62, 63])

    def test_features(self):
        human_map = np.random.default_rng(4).random((8, 8))
        samples = learning.Extract_Training_Samples(human_map, self.conspicuity, 2)

        color = Resize_Bilinear(self.conspicuity.color, 8, 8).ravel()
        self.assertTrue(np.array_equal(samples["color"].to_numpy(), color[samples["pixel"]]))

    def test_too_many(self):
        with self.assertRaises(ValueError):
            learning.Extract_Training_Samples(np.zeros((4, 4)), self.conspicuity, 9)


class Test_Training(unittest.TestCase):

    def test_separable_1d(self):
        model = learning.Train_Linear_Model(Samples([[1.0], [0.0]], [1, -1]))

        self.assertGreater(model.weights[0], 0)
        self.assertEqual(model.training_accuracy, 1)

    def test_xor(self):
        model = learning.Train_Linear_Model(
            Samples([[0, 0], [1, 1], [0, 1], [1, 0]], [1, 1, -1, -1])
        )
        self.assertLessEqual(model.training_accuracy, 0.75)

    def test_margin_axis(self):
        points = [[x, y] for x in [-1, 1] for y in [-1, 0, 1]]
        labels = [1 if x > 0 else -1 for x, _ in points]

        model = learning.Train_Linear_Model(Samples(points, labels), regularization=1e-3)

        self.assertGreaterEqual(abs(model.weights[0]), 10 * abs(model.weights[1]))

        # Direction agrees with a grid search over unit directions
        angles = np.linspace(0, 2 * np.pi, 3600, endpoint=False)
        points = np.asarray(points, dtype=np.float64)
        margins = [
            np.min(np.array(labels) * (points @ [np.cos(a), np.sin(a)])) for a in angles
        ]
        best = angles[int(np.argmax(margins))]
        learned = np.arctan2(model.weights[1], model.weights[0]) % (2 * np.pi)
        self.assertLess(abs(np.angle(np.exp(1j * (learned - best)))), 0.05)

    def test_objective_history(self):
        rng = np.random.default_rng(8)
        points = rng.normal(size=(60, 3))
        labels = np.where(points[:, 1] + 0.3 * rng.normal(size=60) > 0, 1, -1)

        model = learning.Train_Linear_Model(Samples(points, labels))

        self.assertGreater(len(model.objective_history), 1)
        self.assertTrue(np.all(np.diff(model.objective_history) <= 0))
        self.assertTrue(np.all(np.isfinite(model.weights)))

    def test_objective_trace(self):
        rng = np.random.default_rng(8)
        points = rng.normal(size=(60, 3))
        labels = np.where(points[:, 1] + 0.3 * rng.normal(size=60) > 0, 1, -1)

        model = learning.Train_Linear_Model(Samples(points, labels))

        self.assertEqual(len(model.objective_trace), len(model.objective_history))
        self.assertTrue(
            np.array_equal(
                np.minimum.accumulate(model.objective_trace), model.objective_history
            )
        )
        self.assertTrue(np.all(np.isfinite(model.objective_trace)))

    def test_deterministic(self):
        rng = np.random.default_rng(6)
        samples = Samples(rng.normal(size=(40, 3)), rng.choice([-1, 1], 40))

        first = learning.Train_Linear_Model(samples, seed=3)
        second = learning.Train_Linear_Model(samples, seed=3)

        self.assertTrue(np.array_equal(first.weights, second.weights))
        self.assertEqual(first.bias, second.bias)

    def test_single_class(self):
        with self.assertRaises(ValueError):
            learning.Train_Linear_Model(Samples([[1.0], [2.0]], [1, 1]))

    def test_bad_regularization(self):
        with self.assertRaises(ValueError):
            learning.Train_Linear_Model(Samples([[1.0], [0.0]], [1, -1]), regularization=0)


class Test_Model_File(unittest.TestCase):

    def test_round_trip(self):
        model = learning.LinearModel(
            group="Y6",
            weights=[0.1, -2.0 / 3.0, np.pi],
            bias=1e-17,
            subset=3,
            subset_end=5,
            center_weight=0.35,
            regularization=1e-2,
            training_accuracy=0.95,
        )

        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, "y6.model")
            learning.Save_Linear_Model(model, path)
            loaded = learning.Load_Linear_Model(path)

            second_path = os.path.join(directory, "again.model")
            learning.Save_Linear_Model(loaded, second_path)

            with open(path, "rb") as first, open(second_path, "rb") as second:
                self.assertEqual(first.read(), second.read())

        self.assertTrue(np.array_equal(loaded.weights, model.weights))
        self.assertEqual(loaded.bias, model.bias)
        self.assertEqual((loaded.group, loaded.subset, loaded.subset_end), ("Y6", 3, 5))
        self.assertEqual(loaded.center_weight, 0.35)

    def test_version(self):
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, "old.model")
            with open(path, "w") as file:
                file.write("gazepy-linear-model 0\ngroup Y4\n")

            with self.assertRaises(ValueError):
                learning.Load_Linear_Model(path)

    def test_missing(self):
        with self.assertRaises(FileNotFoundError):
            learning.Load_Linear_Model("Some/path/y4.model")

    def test_channel_count(self):
        with self.assertRaises(ValueError):
            learning.LinearModel(group="Y4", weights=[1.0, 2.0], bias=0)


class Test_Predict_SIC(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.image = synthetic.Synth_Image(192, 160, np.random.default_rng(11))
        cls.features = Extract_Feature_Maps(cls.image)
        cls.conspicuity = Combine_Conspicuity(cls.features, 2)

    def test_one_hot(self):
        for index, channel in enumerate(learning.CHANNELS):
            weights = np.zeros(3)
            weights[index] = 1
            model = learning.LinearModel(group="Y8", weights=weights, bias=0, subset=2)

            saliency_map = learning.Predict_SIC(self.image, model, 0, features=self.features)
            expected = Normalize_Raster(
                Resize_Bilinear(getattr(self.conspicuity, channel), 192, 160)
            )

            self.assertTrue(np.array_equal(saliency_map, expected))

    def test_full_center(self):
        model = learning.LinearModel(group="Y8", weights=[1, 2, 3], bias=0.5)
        saliency_map = learning.Predict_SIC(self.image, model, 1, features=self.features)

        self.assertTrue(
            np.array_equal(saliency_map, learning.Center_Weight_Surface(192, 160))
        )

    def test_model_center_weight(self):
        model = learning.LinearModel(
            group="Y8", weights=[1, 0, 0], bias=0, subset=2, center_weight=0.3
        )

        self.assertTrue(
            np.array_equal(
                learning.Predict_SIC(self.image, model, features=self.features),
                learning.Predict_SIC(self.image, model, 0.3, features=self.features),
            )
        )


class Test_Group_Training(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.cohort = synthetic.Synth_Cohort(
            synthetic.Preset_Config("centerbias", image_count=3, seed=2)
        )

    def test_pooled_samples(self):
        samples = learning.Extract_Group_Samples(self.cohort, "Y4", samples=5)

        self.assertEqual(len(samples), 3 * 10)
        self.assertEqual(set(samples["image_id"]), set(self.cohort.image_ids))
        self.assertTrue((samples["group"] == "Y4").all())

    def test_single_grid_value(self):
        model = learning.LinearModel(group="Y4", weights=[1, 1, 1], bias=0)
        weight, scores = learning.Fit_Group_Center_Weight(
            self.cohort, "Y4", model, grid=(0.15,)
        )

        self.assertEqual(weight, 0.15)
        self.assertEqual(len(scores), 1)

    def test_centered_cohort(self):
        model = learning.LinearModel(group="Y4", weights=[1, 1, 1], bias=0)
        weight, _ = learning.Fit_Group_Center_Weight(self.cohort, "Y4", model)

        self.assertGreaterEqual(weight, 0.2)

    def test_no_center_cohort(self):
        rng = np.random.default_rng(9)
        image_ids = ["a", "b"]
        corners = [(0, 0), (127, 0), (0, 127), (127, 127)]

        cohort = CohortDataset(
            images={
                image_id: synthetic.Synth_Image(128, 128, rng) for image_id in image_ids
            },
            fixations=pd.DataFrame(
                [
                    ("o1", "Y8", image_id, x, y, ordinal)
                    for image_id in image_ids
                    for ordinal, (x, y) in enumerate(corners)
                ],
                columns=FIXATION_COLUMNS,
            ),
        )

        model = learning.LinearModel(group="Y8", weights=[1, 1, 1], bias=0)
        weight, scores = learning.Fit_Group_Center_Weight(cohort, "Y8", model)

        self.assertEqual(weight, 0.0)
        self.assertEqual(scores.idxmax(), 0.0)

    def test_train_group_model(self):
        model = learning.Train_Group_Model(self.cohort, "Y6", subset=4, samples=5)

        self.assertEqual((model.group, model.subset), ("Y6", 4))
        self.assertIn(model.center_weight, [float(w) for w in Constants.CENTER_WEIGHT_GRID])
        self.assertTrue(np.all(np.isfinite(model.weights)))


if __name__ == "__main__":
    unittest.main()
