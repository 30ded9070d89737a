import csv

import pytest

from fewnet.series import Month


@pytest.fixture
def write_series_csv(tmp_path):
    """Write a (date, value) CSV starting at the given month; returns the path."""

    def _write(values, start=Month(2003, 1), name="series.csv", date_column="date", value_column="value"):
        path = tmp_path / name
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([date_column, value_column])
            for i, v in enumerate(values):
                writer.writerow([str(start + i), v])
        return path

    return _write
