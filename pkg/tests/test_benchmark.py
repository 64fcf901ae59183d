"""Box metrics, evaluation curves and sequence ingestion."""

import numpy as np
import pytest

from spixtrack.benchmark import (
    Sequence,
    load_sequence,
    parse_ground_truth_line,
    precision_at,
    precision_curve,
    read_results_csv,
    success_curve,
    write_curves,
)
from spixtrack.boxes import BoundingBox, center_error, iou
from spixtrack.errors import ParameterError, SequenceFormatError

from synthetic import make_scene, write_sequence_dir


class TestIou:
    def test_identical_boxes(self):
        box = BoundingBox(3, 4, 10, 12)
        assert iou(box, box) == 1.0

    def test_disjoint_boxes(self):
        assert iou(BoundingBox(0, 0, 2, 2), BoundingBox(10, 10, 2, 2)) == 0.0

    def test_one_third_case(self):
        assert iou(BoundingBox(0, 0, 2, 2), BoundingBox(1, 0, 2, 2)) == pytest.approx(1 / 3)

    def test_symmetry_on_random_boxes(self, rng):
        for _ in range(50):
            a = BoundingBox(*rng.uniform(0, 20, 2), *rng.uniform(1, 10, 2))
            b = BoundingBox(*rng.uniform(0, 20, 2), *rng.uniform(1, 10, 2))
            assert iou(a, b) == iou(b, a)
            assert 0.0 <= iou(a, b) <= 1.0

    def test_degenerate_box_rejected(self):
        with pytest.raises(ParameterError):
            BoundingBox(0, 0, 0, 5)


class TestCenterError:
    def test_identical(self):
        box = BoundingBox(1, 2, 3, 4)
        assert center_error(box, box) == 0.0

    def test_three_four_five(self):
        a = BoundingBox(0, 0, 2, 2)  # center (1, 1)
        b = BoundingBox(3, 4, 2, 2)  # center (4, 5)
        assert center_error(a, b) == 5.0

    def test_symmetric(self, rng):
        a = BoundingBox(0, 0, 5, 5)
        b = BoundingBox(7, 2, 3, 9)
        assert center_error(a, b) == center_error(b, a)


class TestSuccessCurve:
    def test_all_perfect_overlap(self):
        curve = success_curve([1.0] * 7)
        assert curve.values[0] == 1.0
        assert curve.values[-1] == 0.0  # strict inequality at threshold 1.0
        assert (curve.values[:-1] == 1.0).all()
        assert curve.auc == pytest.approx(50 / 51)

    def test_all_zero_overlap(self):
        curve = success_curve([0.0, 0.0])
        assert (curve.values == 0.0).all()
        assert curve.auc == 0.0

    def test_hand_staircase(self):
        curve = success_curve([0.3, 0.6])
        expected = [np.mean([v > t for v in (0.3, 0.6)]) for t in curve.thresholds]
        np.testing.assert_array_equal(curve.values, expected)

    def test_monotone_non_increasing(self, rng):
        curve = success_curve(rng.uniform(0, 1, 100))
        assert (np.diff(curve.values) <= 0).all()
        assert 0.0 <= curve.auc <= 1.0

    def test_threshold_zero_counts_positive_overlap(self, rng):
        ious = [0.0, 0.5, 0.0, 0.2]
        curve = success_curve(ious)
        assert curve.values[0] == np.mean([v > 0 for v in ious])


class TestPrecisionCurve:
    def test_all_exact(self):
        curve = precision_curve([0.0, 0.0, 0.0])
        assert (curve.values == 1.0).all()

    def test_half_within_twenty(self):
        curve = precision_curve([10.0, 30.0])
        assert precision_at(curve, 20.0) == 0.5

    def test_matches_counting_oracle(self, rng):
        errors = rng.uniform(0, 60, 200)
        curve = precision_curve(errors)
        for t, v in zip(curve.thresholds, curve.values):
            assert v == np.mean(errors <= t)

    def test_monotone_non_decreasing(self, rng):
        curve = precision_curve(rng.uniform(0, 60, 100))
        assert (np.diff(curve.values) >= 0).all()

    def test_threshold_zero_counts_exact_hits(self):
        curve = precision_curve([0.0, 1.0, 0.0])
        assert curve.values[0] == pytest.approx(2 / 3)


class TestSequenceIngestion:
    def test_loads_written_sequence(self, tmp_path):
        frames, boxes = make_scene(n_frames=3)
        seq_dir = write_sequence_dir(tmp_path, frames, boxes)
        seq = load_sequence(seq_dir)
        assert len(seq) == 3
        assert seq.name == "synthetic"
        assert seq.ground_truth[0] == boxes[0]

    def test_parse_comma_row(self):
        assert parse_ground_truth_line("10,20,30,40") == BoundingBox(10, 20, 30, 40)

    def test_parse_tab_row(self):
        assert parse_ground_truth_line("10\t20\t30\t40") == BoundingBox(10, 20, 30, 40)

    def test_row_count_mismatch(self, tmp_path):
        frames, boxes = make_scene(n_frames=3)
        seq_dir = write_sequence_dir(tmp_path, frames, boxes)
        gt = seq_dir / "groundtruth_rect.txt"
        lines = gt.read_text().splitlines()
        gt.write_text("\n".join(lines[:2]) + "\n")
        with pytest.raises(SequenceFormatError, match="3 frames vs 2"):
            load_sequence(seq_dir)

    def test_unparsable_row(self, tmp_path):
        frames, boxes = make_scene(n_frames=3)
        seq_dir = write_sequence_dir(tmp_path, frames, boxes)
        gt = seq_dir / "groundtruth_rect.txt"
        gt.write_text("10,20,30,40\nnot,a,row,!\n5,5,5,5\n")
        with pytest.raises(SequenceFormatError):
            load_sequence(seq_dir)

    def test_missing_img_dir(self, tmp_path):
        with pytest.raises(SequenceFormatError, match="img"):
            load_sequence(tmp_path)

    def test_frames_sorted_numerically(self, tmp_path):
        frames, boxes = make_scene(n_frames=12)
        seq_dir = write_sequence_dir(tmp_path, frames, boxes)
        seq = load_sequence(seq_dir)
        names = [p.name for p in seq.frames]
        assert names == sorted(names, key=lambda n: int(n.split(".")[0]))

    def test_single_frame_rejected(self, tmp_path):
        frames, boxes = make_scene(n_frames=2)
        with pytest.raises(SequenceFormatError):
            Sequence(name="x", frames=(frames[0],), ground_truth=(boxes[0],))


class TestResultFiles:
    def test_write_curves_and_read_back(self, tmp_path, rng):
        ious = rng.uniform(0, 1, 40)
        errors = rng.uniform(0, 50, 40)
        summary = write_curves(ious, errors, tmp_path)
        assert (tmp_path / "success_curve.csv").exists()
        assert (tmp_path / "precision_curve.csv").exists()
        assert 0.0 <= summary["success_auc"] <= 1.0
        import csv

        with (tmp_path / "success_curve.csv").open() as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 51
        values = np.array([float(r["value"]) for r in rows])
        np.testing.assert_array_equal(values, success_curve(ious).values)

    def test_read_results_rejects_wrong_csv(self, tmp_path):
        path = tmp_path / "results.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(SequenceFormatError):
            read_results_csv(path)
