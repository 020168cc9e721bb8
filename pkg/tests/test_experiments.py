"""Grid sweeps, clip-length study, and the nearest-neighbour baseline."""

import json

import numpy as np
import pytest

from chirpnet.errors import ParameterError
from chirpnet.experiments import (
    CellResult,
    GridResult,
    cell_key,
    clip_descriptor,
    duration_study,
    grid_search,
    knn_baseline,
)
from chirpnet.synth import make_clip, make_desk_dataset
from chirpnet.training import FeatureSpec, TrainConfig

SPEC16 = FeatureSpec(kind="mel-db", n_mels=16, n_mfcc=8)


def tiny_dataset():
    clips, labels, _ = make_desk_dataset(n_per_class=6, duration=0.3, seed=21)
    keep = [i for i, y in enumerate(labels) if y < 2]
    return [clips[i] for i in keep], [labels[i] for i in keep], ["tone-low", "tone-high"]


def tiny_tc():
    return TrainConfig(epochs_max=2, batch_size=4, early_stop_patience=2, seed=0)


def cell(key_parts, mean_test, params, error=None):
    depth, width, activation, descriptor = key_parts
    return CellResult(
        depth=depth, width=width, activation=activation, descriptor=descriptor,
        mean_train=1.0, mean_test=mean_test, std_test=0.0,
        param_total=params, error=error,
    )


class TestCellBookkeeping:
    def test_cell_key(self):
        assert cell_key(4, 400, "adaptive", "mel-db") == "d4-w400-adaptive-mel-db"

    def test_best_picks_highest_accuracy(self):
        grid = GridResult(cells=[
            cell((3, 100, "relu", "mel-db"), 0.8, 1000),
            cell((4, 100, "relu", "mel-db"), 0.9, 2000),
        ])
        assert grid.best().depth == 4

    def test_best_tie_goes_to_smaller_model(self):
        grid = GridResult(cells=[
            cell((4, 400, "relu", "mel-db"), 0.9, 723217),
            cell((4, 100, "relu", "mel-db"), 0.9, 50000),
        ])
        assert grid.best().param_total == 50000

    def test_best_skips_failed_cells(self):
        grid = GridResult(cells=[
            cell((3, 100, "relu", "mel-db"), 0.99, 1000, error="DivergenceError: boom"),
            cell((4, 100, "relu", "mel-db"), 0.5, 2000),
        ])
        assert grid.best().mean_test == 0.5

    def test_best_requires_a_survivor(self):
        grid = GridResult(cells=[cell((3, 100, "relu", "mel-db"), 0.0, 0, error="x")])
        with pytest.raises(ParameterError, match="no grid cell"):
            grid.best()


class TestGridSearch:
    def test_single_cell_sweep(self, tmp_path):
        clips, labels, names = tiny_dataset()
        result = grid_search(
            clips, labels, names, tiny_tc(),
            depths=(3,), widths=(100,), activations=("tanh",), descriptors=("mel-db",),
            checkpoint_dir=tmp_path, n_folds=2, spec=SPEC16,
        )
        assert result.cells_trained == 1
        assert len(result.cells) == 1
        c = result.cells[0]
        assert c.error is None
        assert c.param_total > 0
        assert (tmp_path / "d3-w100-tanh-mel-db.json").exists()

    def test_resume_skips_finished_cells(self, tmp_path):
        clips, labels, names = tiny_dataset()
        record = cell((3, 100, "tanh", "mel-db"), 0.77, 1234).to_dict()
        (tmp_path / "d3-w100-tanh-mel-db.json").write_text(json.dumps(record))
        result = grid_search(
            clips, labels, names, tiny_tc(),
            depths=(3,), widths=(100,), activations=("tanh",), descriptors=("mel-db",),
            checkpoint_dir=tmp_path, n_folds=2, spec=SPEC16,
        )
        assert result.cells_trained == 0
        assert result.cells[0].mean_test == 0.77

    def test_failing_cell_recorded_and_sweep_continues(self, tmp_path):
        clips, labels, names = tiny_dataset()
        # depth 6 needs 32 frames; 0.3 s clips only have 29, so the cell fails
        result = grid_search(
            clips, labels, names, tiny_tc(),
            depths=(6, 3), widths=(100,), activations=("tanh",), descriptors=("mel-db",),
            checkpoint_dir=tmp_path, n_folds=2, spec=SPEC16,
        )
        by_depth = {c.depth: c for c in result.cells}
        assert by_depth[6].error is not None
        assert by_depth[3].error is None
        assert result.best().depth == 3

    def test_descriptor_switches_features(self, tmp_path):
        clips, labels, names = tiny_dataset()
        result = grid_search(
            clips, labels, names, tiny_tc(),
            depths=(3,), widths=(100,), activations=("tanh",),
            descriptors=("mel-db", "mfcc"),
            n_folds=2, spec=SPEC16,
        )
        assert sorted(c.descriptor for c in result.cells) == ["mel-db", "mfcc"]
        assert all(c.error is None for c in result.cells)


class TestDurationStudy:
    def test_capping_semantics(self, tone_model):
        rng = np.random.default_rng(33)
        labeled = [
            (make_clip("tone-low", duration=2.0, rng=rng), 0),
            (make_clip("tone-high", duration=2.0, rng=rng), 1),
        ]
        out = duration_study(
            tone_model, labeled, durations=(1.0, 2.0, 20.0), spec=SPEC16
        )
        assert set(out) == {1.0, 2.0, 20.0}
        # clips are 2 s, so any cap at or above that evaluates whole clips
        assert out[2.0] == out[20.0]

    def test_too_short_duration_skipped(self, tone_model):
        rng = np.random.default_rng(34)
        labeled = [(make_clip("tone-low", duration=2.0, rng=rng), 0)]
        with pytest.warns(UserWarning, match="skipped"):
            out = duration_study(tone_model, labeled, durations=(0.05, 1.0), spec=SPEC16)
        assert set(out) == {1.0}

    def test_empty_rejected(self, tone_model):
        with pytest.raises(ParameterError, match="no clips"):
            duration_study(tone_model, [], durations=(1.0,), spec=SPEC16)


class TestClipDescriptor:
    def test_time_average_of_features(self):
        mat = np.arange(12, dtype=float).reshape(3, 4)
        np.testing.assert_allclose(clip_descriptor(mat), mat.mean(axis=1))

    def test_accepts_clip(self):
        clip = make_clip("tone-low", duration=0.3, rng=np.random.default_rng(35))
        vec = clip_descriptor(clip, spec=SPEC16)
        assert vec.shape == (16,)


class TestKnnBaseline:
    def test_obvious_clusters(self):
        train = [(np.array([0.0, 0.0]), 0)] * 3 + [(np.array([10.0, 10.0]), 1)] * 3
        test = [(np.array([0.5, 0.5]), 0), (np.array([9.0, 9.5]), 1)]
        assert knn_baseline(train, test, k=3) == 1.0

    def test_majority_vote(self):
        train = [
            (np.array([0.0]), 0),
            (np.array([1.0]), 1),
            (np.array([2.0]), 1),
        ]
        # all three are neighbours; class 1 outvotes the nearer class 0
        assert knn_baseline(train, [(np.array([0.1]), 1)], k=3) == 1.0

    def test_tie_goes_to_nearest_member(self):
        train = [
            (np.array([1.0]), 0),
            (np.array([2.0]), 1),
            (np.array([3.0]), 0),
            (np.array([4.0]), 1),
        ]
        # k=4: two votes each; class 0 owns the closest neighbour
        assert knn_baseline(train, [(np.array([0.0]), 0)], k=4) == 1.0
        # from the other side the nearest is class 1
        assert knn_baseline(train, [(np.array([5.0]), 1)], k=4) == 1.0

    def test_k_validation(self):
        train = [(np.zeros(2), 0), (np.ones(2), 1)]
        with pytest.raises(ParameterError, match="at least 1"):
            knn_baseline(train, [(np.zeros(2), 0)], k=0)
        with pytest.raises(ParameterError, match="exceeds"):
            knn_baseline(train, [(np.zeros(2), 0)], k=3)

    def test_empty_test_rejected(self):
        train = [(np.zeros(2), 0), (np.ones(2), 1)]
        with pytest.raises(ParameterError, match="empty"):
            knn_baseline(train, [], k=1)
