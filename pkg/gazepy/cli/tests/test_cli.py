import contextlib
import io
import os
import tempfile
import unittest

import numpy as np
import pandas as pd
from PIL import Image

import gazepy.evaluation as evaluation
from gazepy.cli import main
from gazepy.gaze import Load_Dataset


def Run(*argv):
    with contextlib.redirect_stderr(io.StringIO()), contextlib.redirect_stdout(
        io.StringIO()
    ):
        return main(list(argv))


def Synth(directory, preset="agreement", images=4):
    return Run(
        "synth",
        "--preset",
        preset,
        "--images",
        str(images),
        "--observers",
        "3",
        "--fixations",
        "6",
        "--width",
        "128",
        "--height",
        "128",
        "--seed",
        "3",
        "--output",
        directory,
    )


def Body(path):
    """File bytes without '#' header lines, which carry the manifest path"""

    with open(path, "rb") as file:
        return b"".join(line for line in file if not line.startswith(b"#"))


class Test_Cli(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.directory = tempfile.TemporaryDirectory()
        cls.data = os.path.join(cls.directory.name, "data")
        cls.manifest = os.path.join(cls.data, "manifest.json")

        cls.synth_status = Synth(cls.data)

    @classmethod
    def tearDownClass(cls):
        cls.directory.cleanup()

    def Output(self, name):
        return os.path.join(self.directory.name, name)

    def test_synth(self):
        self.assertEqual(self.synth_status, 0)
        self.assertEqual(len(Load_Dataset(self.manifest).image_ids), 4)
        self.assertTrue(os.path.exists(os.path.join(self.data, "fingerprint.json")))

    def test_analysis_commands(self):
        output = self.Output("analysis")

        for command in ["analyze", "agreement", "centerbias"]:
            status = Run(
                command,
                "--manifest",
                self.manifest,
                "--thresholds",
                "64",
                "--output",
                output,
            )
            self.assertEqual(status, 0)

        for name in [
            "entropy.csv",
            "entropy_summary.csv",
            "least_explored.csv",
            "agreement.csv",
            "agreement_counts.csv",
            "intra_trend.csv",
            "centerbias.csv",
            "center_Y4.png",
            "fingerprint.json",
        ]:
            self.assertTrue(os.path.exists(os.path.join(output, name)), name)

        matrix = evaluation.Read_Report_Csv(os.path.join(output, "agreement.csv"))
        self.assertEqual(matrix.shape, (4, 4))

    def test_train_then_predict(self):
        models = self.Output("models")
        maps = self.Output("maps")

        status = Run(
            "train",
            "--manifest",
            self.manifest,
            "--group",
            "Y6",
            "--subset",
            "3",
            "--train-count",
            "2",
            "--samples",
            "4",
            "--grid",
            "0,0.2",
            "--thresholds",
            "32",
            "--output",
            models,
        )
        self.assertEqual(status, 0)

        objective = evaluation.Read_Report_Csv(os.path.join(models, "Y6_objective.csv"))
        self.assertEqual(objective.columns.tolist(), ["objective", "best_objective"])
        self.assertTrue(np.all(np.diff(objective["best_objective"]) <= 0))

        image_path = os.path.join(self.data, "images", "synth_000.png")
        status = Run(
            "predict",
            "--model",
            os.path.join(models, "Y6.model"),
            "--image",
            image_path,
            "--output",
            maps,
        )
        self.assertEqual(status, 0)

        with Image.open(os.path.join(maps, "synth_000.png")) as image:
            self.assertEqual(image.size, (128, 128))
            self.assertEqual(np.asarray(image).max(), 255)

    def test_predict_formats(self):
        maps = self.Output("center_maps")

        for format in ["heatmap", "csv"]:
            status = Run(
                "predict",
                "--model",
                "CENTER",
                "--manifest",
                self.manifest,
                "--format",
                format,
                "--output",
                maps,
            )
            self.assertEqual(status, 0)

        self.assertTrue(os.path.exists(os.path.join(maps, "synth_001_heatmap.png")))
        values = pd.read_csv(os.path.join(maps, "synth_001.csv"), header=None)
        self.assertEqual(values.shape, (128, 128))

    def test_evaluate_matches_library(self):
        output = self.Output("evaluate")

        status = Run(
            "evaluate",
            "--manifest",
            self.manifest,
            "--model",
            "CENTER",
            "--group",
            "Y4",
            "--train-count",
            "1",
            "--thresholds",
            "64",
            "--output",
            output,
        )
        self.assertEqual(status, 0)

        summary = pd.read_csv(
            os.path.join(output, "CENTER_Y4_summary.csv"),
            comment="#",
            float_precision="round_trip",
        )

        _, test = evaluation.Split_Dataset(Load_Dataset(self.manifest), 1)
        report = evaluation.Evaluate_Model(
            evaluation.Build_Predictor("CENTER"), test, "Y4", num_thresholds=64
        )

        self.assertEqual(summary["mean_auc"].iloc[0], report.mean_auc)
        self.assertEqual(summary["images"].iloc[0], 3)

    def test_subset_table(self):
        output = self.Output("table")

        status = Run(
            "evaluate",
            "--manifest",
            self.manifest,
            "--table",
            "subset",
            "--group",
            "ADULT",
            "--train-count",
            "2",
            "--thresholds",
            "32",
            "--output",
            output,
        )
        self.assertEqual(status, 0)

        table = evaluation.Read_Report_Csv(os.path.join(output, "subset_table.csv"))
        self.assertEqual(table.index.tolist(), ["ADULT"])
        self.assertEqual(table.shape[1], 6)

    def test_invalid_input(self):
        missing = os.path.join(self.directory.name, "missing.json")

        self.assertEqual(Run("analyze", "--manifest", missing), 1)
        self.assertEqual(Run("analyze", "--bins"), 1)
        self.assertEqual(Run("unknown"), 1)
        self.assertEqual(Run("synth", "--preset", "none", "--output", missing), 1)
        self.assertEqual(
            Run("predict", "--model", "SIC", "--manifest", self.manifest), 1
        )
        self.assertEqual(
            Run("train", "--manifest", self.manifest, "--group", "Y4", "--subset", "x"),
            1,
        )

    def test_help(self):
        self.assertEqual(Run("--help"), 0)


class Test_Reproducible(unittest.TestCase):

    def test_byte_identical(self):
        with tempfile.TemporaryDirectory() as directory:
            for run in ["first", "second"]:
                data = os.path.join(directory, run, "data")
                output = os.path.join(directory, run, "centerbias")

                Synth(data, preset="centerbias", images=2)
                Run(
                    "centerbias",
                    "--manifest",
                    os.path.join(data, "manifest.json"),
                    "--output",
                    output,
                )

            for name in [
                os.path.join("data", "fixations.csv"),
                os.path.join("data", "images", "synth_001.png"),
                os.path.join("centerbias", "centerbias.csv"),
                os.path.join("centerbias", "center_ADULT.png"),
            ]:
                first, second = [
                    Body(os.path.join(directory, run, name))
                    for run in ["first", "second"]
                ]
                self.assertEqual(first, second, name)


if __name__ == "__main__":
    unittest.main()
