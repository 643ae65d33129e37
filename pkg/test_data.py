"""
Tests for raw-file ingestion, standardization, stratified splitting and
age-window partitioning.
"""

import math
import os
from pathlib import Path

import numpy as np
import pytest

from data_ingest import (
    CONTINUOUS_MASK,
    FEATURE_NAMES,
    StandardizationParams,
    apply_standardizer,
    clean_records,
    dataset_profile,
    fit_standardizer,
    load_cleveland,
    stratified_split,
)
from errors import (
    ConfigurationError,
    DataFormatError,
    DatasetNotFoundError,
    DegenerateFeatureWarning,
    DimensionMismatchError,
    EmptyDatasetError,
    StratificationError,
)
from models import WindowSpec, default_window_specs
from partitioner import ClientPartition, build_clients, partition_by_age, summarize_clients, window_slice

PUBLISHED_ROW = "63.0,1.0,1.0,145.0,233.0,1.0,2.0,150.0,0.0,2.3,3.0,0.0,6.0,0"
REAL_DATA = Path(os.getenv("FEDSIM_DATA_PATH", "data/processed.cleveland.data"))


class TestLoadCleveland:
    """Test parsing of the published file layout."""

    def test_published_row(self, tmp_path):
        """Test the first row of the published file."""
        path = tmp_path / "one.data"
        path.write_text(PUBLISHED_ROW + "\n", encoding="utf-8")
        raw = load_cleveland(path)
        assert len(raw) == 1
        record = raw.records[0]
        assert record.age == 63.0
        assert record.oldpeak == 2.3
        assert record.thal == 6.0
        assert record.label == 0
        assert raw.dropped_count == 0

    def test_missing_marker_dropped(self, tmp_path):
        """Test that a row with ca='?' is dropped and counted."""
        path = tmp_path / "missing.data"
        path.write_text(
            PUBLISHED_ROW + "\n" + "67.0,1.0,4.0,160.0,286.0,0.0,2.0,108.0,1.0,1.5,2.0,?,3.0,2\n",
            encoding="utf-8",
        )
        raw = load_cleveland(path)
        assert len(raw) == 1
        assert raw.raw_count == 2
        assert raw.dropped_count == 1

    def test_label_binarization(self, tmp_path):
        """Test every raw target maps to 1 iff it is at least 1."""
        base = PUBLISHED_ROW.rsplit(",", 1)[0]
        path = tmp_path / "targets.data"
        path.write_text("\n".join(f"{base},{t}" for t in range(5)) + "\n", encoding="utf-8")
        assert load_cleveland(path).labels().tolist() == [0, 1, 1, 1, 1]

    def test_row_order_preserved(self, rows, write_rows):
        raw = load_cleveland(write_rows(rows))
        assert raw.ages().tolist() == [row[0] for row in rows]
        assert raw.features().shape == (len(rows), len(FEATURE_NAMES))

    def test_dropped_count_matches_oracle(self, rows, write_rows):
        """Test the retained count against a line scan for '?'."""
        path = write_rows(rows, missing_every=7)
        lines = path.read_text(encoding="utf-8").splitlines()
        expected_dropped = sum(1 for line in lines if "?" in line)
        raw = load_cleveland(path)
        assert raw.dropped_count == expected_dropped
        assert len(raw) == len(lines) - expected_dropped

    def test_wrong_width_names_line(self, tmp_path):
        """Test that a malformed row reports its line number."""
        path = tmp_path / "bad.data"
        path.write_text(PUBLISHED_ROW + "\n" + "1.0,2.0,3.0\n", encoding="utf-8")
        with pytest.raises(DataFormatError) as exc_info:
            load_cleveland(path)
        assert exc_info.value.line_number == 2
        assert "line 2" in exc_info.value.message

    def test_non_numeric_cell(self, tmp_path):
        path = tmp_path / "text.data"
        path.write_text(PUBLISHED_ROW.replace("145.0", "high") + "\n", encoding="utf-8")
        with pytest.raises(DataFormatError):
            load_cleveland(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.data"
        path.write_text("", encoding="utf-8")
        with pytest.raises(EmptyDatasetError):
            load_cleveland(path)

    def test_missing_file(self, tmp_path):
        """Test a missing path is a not-found error, distinct from an empty file."""
        with pytest.raises(DatasetNotFoundError) as exc_info:
            load_cleveland(tmp_path / "absent.data")
        assert isinstance(exc_info.value, FileNotFoundError)
        assert not isinstance(exc_info.value, EmptyDatasetError)
        assert exc_info.value.details["path"].endswith("absent.data")

    def test_cleaning_is_idempotent(self, rows, write_rows):
        raw = load_cleveland(write_rows(rows, missing_every=5))
        once = clean_records(raw)
        twice = clean_records(once)
        assert len(twice) == len(once) == len(raw)
        assert twice.dropped_count == raw.dropped_count

    def test_dataset_profile(self, rows, write_rows):
        raw = load_cleveland(write_rows(rows, missing_every=10))
        profile = dataset_profile(raw)
        assert profile.raw_count == len(rows)
        assert profile.retained_count == len(rows) - len(rows) // 10
        assert profile.retention_ratio == pytest.approx(profile.retained_count / len(rows))
        assert 0.0 < profile.prevalence < 1.0
        assert sum(profile.chest_pain_distribution.values()) == pytest.approx(1.0)

    @pytest.mark.skipif(not REAL_DATA.exists(), reason="published Cleveland file not available")
    def test_published_file_counts(self):
        """Test the real file against a line scan: 303 rows, '?' rows dropped."""
        lines = [line for line in REAL_DATA.read_text(encoding="utf-8").splitlines() if line.strip()]
        raw = load_cleveland(REAL_DATA)
        assert raw.raw_count == len(lines) == 303
        assert len(raw) == sum(1 for line in lines if "?" not in line)


class TestStandardizer:
    """Test per-client standardization."""

    def test_population_std(self):
        """Test a masked column [1, 2, 3]: mean 2, std sqrt(2/3)."""
        params = fit_standardizer(np.array([[1.0], [2.0], [3.0]]), [True])
        assert params.means[0] == pytest.approx(2.0)
        assert params.std_devs[0] == pytest.approx(math.sqrt(2.0 / 3.0))

    def test_categorical_passthrough(self):
        params = fit_standardizer(np.array([[1.0, 4.0], [2.0, 3.0]]), [True, False])
        assert params.means[1] == 0.0
        assert params.std_devs[1] == 1.0

    def test_constant_column_warns(self):
        """Test the degenerate-variance rule."""
        with pytest.warns(DegenerateFeatureWarning):
            params = fit_standardizer(np.array([[5.0], [5.0], [5.0]]), [True])
        assert params.means[0] == 5.0
        assert params.std_devs[0] == 1.0

    def test_centering(self):
        params = StandardizationParams(means=np.array([2.0]), std_devs=np.array([3.0]))
        assert apply_standardizer(np.array([[2.0]]), params)[0, 0] == 0.0

    def test_identity(self):
        x = np.arange(12.0).reshape(4, 3)
        assert np.array_equal(apply_standardizer(x, StandardizationParams.identity(3)), x)

    def test_own_moments(self, rows):
        """Test standardized train columns have mean 0 and std 1."""
        x = np.array([row[:-1] for row in rows], dtype=float)
        z = apply_standardizer(x, fit_standardizer(x, CONTINUOUS_MASK))
        assert np.allclose(z[:, CONTINUOUS_MASK].mean(axis=0), 0.0, atol=1e-9)
        assert np.allclose(z[:, CONTINUOUS_MASK].std(axis=0), 1.0, atol=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            apply_standardizer(np.zeros((2, 4)), StandardizationParams.identity(3))

    def test_fit_is_local(self):
        """Test parameters fitted on one input are unaffected by another."""
        a = np.array([[1.0], [3.0]])
        b = np.array([[10.0], [30.0]])
        params_a = fit_standardizer(a, [True])
        fit_standardizer(b, [True])
        assert params_a.means[0] == 2.0
        assert params_a.std_devs[0] == 1.0


class TestStratifiedSplit:
    """Test the seeded stratified split."""

    def test_exact_stratification(self):
        """Test 5 per class at 20% puts exactly one of each class in test."""
        labels = np.array([0] * 5 + [1] * 5)
        split = stratified_split(np.arange(10.0).reshape(10, 1), labels, 0.2, rng_seed=3)
        assert sorted(split.test_y.tolist()) == [0, 1]
        assert split.train_y.shape[0] == 8

    def test_same_seed_same_split(self):
        labels = np.array([0, 1] * 20)
        x = np.zeros((40, 2))
        a = stratified_split(x, labels, 0.2, rng_seed=11)
        b = stratified_split(x, labels, 0.2, rng_seed=11)
        assert np.array_equal(a.test_idx, b.test_idx)

    def test_indices_partition(self):
        """Test train and test indices are disjoint and exhaustive for many seeds."""
        labels = np.array([0] * 23 + [1] * 17)
        x = np.zeros((40, 1))
        for seed in range(20):
            split = stratified_split(x, labels, 0.2, rng_seed=seed)
            assert np.intersect1d(split.train_idx, split.test_idx).size == 0
            assert np.array_equal(np.union1d(split.train_idx, split.test_idx), np.arange(40))

    def test_prevalence_tolerance(self):
        """Test 100 samples at 46% prevalence keep test prevalence within 1/|test|."""
        labels = np.array([1] * 46 + [0] * 54)
        split = stratified_split(np.zeros((100, 1)), labels, 0.2, rng_seed=5)
        assert split.test_y.shape[0] == 20
        assert abs(split.test_prevalence - 0.46) <= 1.0 / 20
        assert abs(split.train_prevalence - split.test_prevalence) <= 1.0 / 20

    def test_too_small_class(self):
        with pytest.raises(StratificationError):
            stratified_split(np.zeros((5, 1)), np.array([0, 0, 0, 0, 1]), 0.2)


class TestPartitioner:
    """Test age-window client synthesis."""

    def test_window_slice_nearest_rank(self):
        spec = WindowSpec(client_name="mid", lo_percentile=0.3, hi_percentile=0.7, target_count=1)
        assert window_slice(10, spec) == range(3, 7)

    def test_default_sizes(self, clients):
        """Test default windows yield 95/83/44/71 samples."""
        assert [c.sample_count for c in clients] == [95, 83, 44, 71]
        assert [c.client_id for c in clients] == [1, 2, 3, 4]

    def test_members_unique_and_in_window(self, cleveland_file):
        raw = clean_records(load_cleveland(cleveland_file))
        order = np.argsort(raw.ages(), kind="stable")
        specs = default_window_specs()
        for part, spec in zip(partition_by_age(raw, specs, 42), specs):
            window = set(order[window_slice(len(raw), spec)].tolist())
            members = part.member_indices.tolist()
            assert len(set(members)) == spec.target_count
            assert set(members) <= window

    def test_same_seed_same_membership(self, cleveland_file):
        raw = clean_records(load_cleveland(cleveland_file))
        a = partition_by_age(raw, default_window_specs(), 42)
        b = partition_by_age(raw, default_window_specs(), 42)
        for pa, pb in zip(a, b):
            assert np.array_equal(pa.member_indices, pb.member_indices)

    def test_identity_window_is_lossless(self, cleveland_file):
        """Test a single [0, 1] window at full size returns the whole dataset in age order."""
        raw = clean_records(load_cleveland(cleveland_file))
        spec = WindowSpec(client_name="all", lo_percentile=0.0, hi_percentile=1.0, target_count=len(raw))
        (part,) = partition_by_age(raw, [spec], 1)
        assert np.array_equal(part.member_indices, np.argsort(raw.ages(), kind="stable"))
        assert sorted(part.labels.tolist()) == sorted(raw.labels().tolist())

    def test_age_ordering_of_default_windows(self, clients):
        """Test older windows have higher mean age than younger ones."""
        by_name = {c.name: c.mean_age for c in clients}
        assert by_name["younger"] <= by_name["small"] <= by_name["middle"] <= by_name["older"]

    def test_oversized_target(self, cleveland_file):
        raw = clean_records(load_cleveland(cleveland_file))
        spec = WindowSpec(client_name="greedy", lo_percentile=0.0, hi_percentile=0.1, target_count=200)
        with pytest.raises(ConfigurationError, match="greedy"):
            partition_by_age(raw, [spec], 42)

    def test_client_split_and_scaling(self, clients):
        """Test each client keeps all samples and is standardized on its own train split."""
        for client in clients:
            split = client.split
            assert split.train_y.shape[0] + split.test_y.shape[0] == client.sample_count
            train_cont = split.train_x[:, CONTINUOUS_MASK]
            assert np.allclose(train_cont.mean(axis=0), 0.0, atol=1e-9)

    def test_build_clients_deterministic(self, clients, cleveland_file):
        raw = clean_records(load_cleveland(cleveland_file))
        again = build_clients(partition_by_age(raw, default_window_specs(), 42), 0.2, 42)
        for a, b in zip(clients, again):
            assert np.array_equal(a.split.test_idx, b.split.test_idx)
            assert np.array_equal(a.split.train_x, b.split.train_x)

    def test_build_clients_rejects_empty_split(self):
        """Test a client too small for the test fraction is named in the error."""
        tiny = ClientPartition(
            client_id=7,
            name="Tiny Clinic",
            member_indices=np.arange(4),
            features=np.random.default_rng(0).normal(size=(4, 13)),
            labels=np.array([0, 0, 1, 1]),
        )
        with pytest.raises(ConfigurationError) as exc_info:
            build_clients([tiny], 0.2, 42)
        assert "Tiny Clinic" in exc_info.value.message
        assert exc_info.value.details["split"] == "test"

        with pytest.raises(ConfigurationError) as exc_info:
            build_clients([tiny], 0.9, 42)
        assert exc_info.value.details["split"] == "train"


class TestClientSummary:
    """Test the client heterogeneity summary table."""

    def test_summary_spans(self, clients):
        table = summarize_clients(clients)
        sizes = [row.n for row in table.rows]
        assert table.size_ratio == pytest.approx(95 / 44)
        assert sizes == [95, 83, 44, 71]
        rates = [row.disease_rate for row in table.rows]
        assert table.prevalence_span_pp == pytest.approx((max(rates) - min(rates)) * 100)

    def test_identical_ages_zero_std(self, tmp_path):
        base = PUBLISHED_ROW.rsplit(",", 1)[0]
        path = tmp_path / "same_age.data"
        path.write_text("\n".join(f"{base},{t % 2}" for t in range(6)) + "\n", encoding="utf-8")
        raw = load_cleveland(path)
        spec = WindowSpec(client_name="all", lo_percentile=0.0, hi_percentile=1.0, target_count=6)
        table = summarize_clients(partition_by_age(raw, [spec], 0))
        assert table.rows[0].age_std == 0.0

    def test_prevalence_span(self):
        """Test prevalences 0.338 and 0.600 span 26.2 points."""
        class _Stub:
            def __init__(self, cid, rate):
                self.client_id = cid
                self.name = f"c{cid}"
                self.sample_count = 1000
                self.ages = np.full(1000, 50.0)
                self.labels = np.array([1] * int(rate * 1000) + [0] * (1000 - int(rate * 1000)))

        table = summarize_clients([_Stub(1, 0.338), _Stub(2, 0.600)])
        assert table.prevalence_span_pp == pytest.approx(26.2)
