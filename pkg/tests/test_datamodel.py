import numpy as np
import pytest
from hypothesis import given, strategies as st

from causalcdf import (ColumnSpec, Dataset, EmptyDataError, SchemaError,
                       ValidationError, arm_split, load_csv)


def write_csv(path, text):
    path.write_text(text)
    return str(path)


BASIC = "y,a,x1,x2\n1.5,1,0.1,0.2\n2.5,0,0.3,0.4\n3.5,1,0.5,0.6\n"


class TestColumnSpec:
    def test_duplicate_names_rejected(self):
        with pytest.raises(ValidationError):
            ColumnSpec(outcome="y", treatment="y", confounders=("x",))

    def test_empty_confounders_rejected(self):
        with pytest.raises(ValidationError):
            ColumnSpec(outcome="y", treatment="a", confounders=())


class TestDataset:
    def test_rejects_non_binary_treatment(self, rng):
        with pytest.raises(ValidationError):
            Dataset(y=[1.0, 2.0], a=[0, 2], x=[[1.0], [2.0]], col_names=("x",))

    def test_rejects_single_arm(self):
        with pytest.raises(ValidationError):
            Dataset(y=[1.0, 2.0], a=[1, 1], x=[[1.0], [2.0]], col_names=("x",))

    def test_rejects_non_finite(self):
        with pytest.raises(ValidationError):
            Dataset(y=[np.nan, 2.0], a=[0, 1], x=[[1.0], [2.0]], col_names=("x",))
        with pytest.raises(ValidationError):
            Dataset(y=[1.0, 2.0], a=[0, 1], x=[[np.inf], [2.0]], col_names=("x",))

    def test_rejects_tiny_sample(self):
        with pytest.raises(ValidationError):
            Dataset(y=[1.0], a=[1], x=[[1.0]], col_names=("x",))

    def test_arrays_locked_after_construction(self):
        d = Dataset(y=[1.0, 2.0], a=[0, 1], x=[[1.0], [2.0]], col_names=("x",))
        with pytest.raises(ValueError):
            d.y[0] = 9.0

    def test_json_dump_round_trips(self):
        d = Dataset(y=[1.0, 2.0], a=[0, 1], x=[[1.0, 3.0], [2.0, 4.0]],
                    col_names=("u", "v"))
        blob = d.to_json_dict()
        d2 = Dataset(y=blob["y"], a=blob["a"], x=blob["x"],
                     col_names=tuple(blob["col_names"]))
        assert np.array_equal(d.y, d2.y)
        assert np.array_equal(d.x, d2.x)


class TestLoadCsv:
    spec = ColumnSpec(outcome="y", treatment="a", confounders=("x1", "x2"))

    def test_clean_file_drops_nothing(self, tmp_path):
        d, dropped = load_csv(write_csv(tmp_path / "c.csv", BASIC), self.spec)
        assert d.n == 3 and dropped == 0
        assert d.col_names == ("x1", "x2")

    def test_blank_cell_dropped_and_counted(self, tmp_path):
        text = BASIC + "4.5,0,,0.8\n"
        d, dropped = load_csv(write_csv(tmp_path / "c.csv", text), self.spec)
        assert d.n == 3 and dropped == 1

    def test_fail_policy_raises_on_missing(self, tmp_path):
        text = BASIC + "4.5,0,,0.8\n"
        with pytest.raises(ValidationError):
            load_csv(write_csv(tmp_path / "c.csv", text), self.spec, "fail")

    def test_missing_column_is_schema_error(self, tmp_path):
        bad = ColumnSpec(outcome="y", treatment="a", confounders=("nope",))
        with pytest.raises(SchemaError):
            load_csv(write_csv(tmp_path / "c.csv", BASIC), bad)

    def test_non_binary_treatment_rejected(self, tmp_path):
        text = "y,a,x1,x2\n1,2,0.1,0.2\n2,0,0.3,0.4\n"
        with pytest.raises(ValidationError):
            load_csv(write_csv(tmp_path / "c.csv", text), self.spec)

    def test_all_rows_dropped_is_empty_data_error(self, tmp_path):
        text = "y,a,x1,x2\n,1,0.1,0.2\n,0,0.3,0.4\n"
        with pytest.raises(EmptyDataError):
            load_csv(write_csv(tmp_path / "c.csv", text), self.spec)

    def test_deterministic_reload(self, tmp_path):
        path = write_csv(tmp_path / "c.csv", BASIC)
        d1, _ = load_csv(path, self.spec)
        d2, _ = load_csv(path, self.spec)
        assert d1.y.tobytes() == d2.y.tobytes()
        assert d1.x.tobytes() == d2.x.tobytes()

    def test_nine_confounder_layout(self, tmp_path):
        cols = [f"c{j}" for j in range(9)]
        header = "wt,qsmk," + ",".join(cols)
        row1 = "70,1," + ",".join("1" for _ in cols)
        row2 = "65,0," + ",".join("2" for _ in cols)
        spec = ColumnSpec(outcome="wt", treatment="qsmk", confounders=tuple(cols))
        d, _ = load_csv(write_csv(tmp_path / "n.csv", f"{header}\n{row1}\n{row2}\n"), spec)
        assert d.p == 9


class TestArmSplit:
    def test_basic_partition(self):
        d = Dataset(y=[1.0, 2.0, 3.0], a=[1, 0, 1], x=[[0.0], [0.0], [0.0]],
                    col_names=("x",))
        treated, control = arm_split(d)
        assert treated.tolist() == [0, 2]
        assert control.tolist() == [1]

    def test_two_row_split(self):
        d = Dataset(y=[1.0, 2.0], a=[0, 1], x=[[0.0], [0.0]], col_names=("x",))
        treated, control = arm_split(d)
        assert treated.tolist() == [1]
        assert control.tolist() == [0]

    @given(st.lists(st.integers(0, 1), min_size=2, max_size=60))
    def test_partition_property(self, bits):
        if sum(bits) in (0, len(bits)):
            bits[0] = 1 - bits[0]
        n = len(bits)
        d = Dataset(y=np.arange(n, dtype=float), a=bits,
                    x=np.zeros((n, 1)), col_names=("x",))
        treated, control = arm_split(d)
        merged = sorted(treated.tolist() + control.tolist())
        assert merged == list(range(n))
        assert set(treated.tolist()).isdisjoint(control.tolist())
