from __future__ import annotations

import random
from dataclasses import replace

import pytest

from rpyspect.errors import (
    CreFormatError,
    DomainError,
    EmptyDatasetError,
    FormatVersionError,
    RpysError,
)
from rpyspect.formats import (
    cre_bytes,
    csv_cr_bytes,
    csv_graph_bytes,
    export_csv_cr,
    export_csv_graph,
    load_cre,
    save_cre,
    union_cre,
)
from rpyspect.model import Dataset, Occurrence, Spectrogram, SpectroRow, aggregate
from rpyspect.spectroscopy import compute_spectrogram
from rpyspect.wos import parse_cr_line

from conftest import dataset_fields


def random_dataset(seed: int) -> Dataset:
    """A dataset with absent fields, undated variants, and cluster ids."""
    rng = random.Random(seed)
    occs = []
    for i in range(rng.randint(1, 40)):
        year = rng.choice([None, rng.randint(1970, 2010)])
        bits = [f"AUTHOR {chr(65 + i % 26)}{i}"]
        if year is not None:
            bits.append(str(year))
        bits.append(rng.choice(["NATURE", "SCIENCE", "J THING", "WEIRD, SRC"]))
        if rng.random() < 0.5:
            bits.append(f"V{rng.randint(1, 99)}")
        if rng.random() < 0.5:
            bits.append(f"P{rng.randint(1, 999)}")
        if rng.random() < 0.2:
            bits.append(f"DOI 10.1000/{i}")
        raw = ", ".join(bits)
        for _ in range(rng.randint(1, 4)):
            occs.append(Occurrence(parse_cr_line(raw), rng.randint(1980, 2014)))
    ds = aggregate(occs, n_citing=rng.randint(0, 60), provenance=f"synthetic {seed}")
    if rng.random() < 0.5:
        clustered = [
            replace(v, cluster_id=rng.randrange(5) if rng.random() < 0.7 else None)
            for v in ds.variants.values()
        ]
        ds = ds.with_variants(clustered, "assigned ids")
    return ds


class TestCreRoundTrip:
    def test_empty_dataset(self, tmp_path):
        path = tmp_path / "empty.cre"
        save_cre(Dataset(provenance="nothing"), path)
        loaded = load_cre(path)
        assert loaded.variants == {}
        assert loaded.provenance == "nothing"

    def test_two_saves_are_byte_identical(self, tmp_path):
        ds = random_dataset(1)
        a, b = tmp_path / "a.cre", tmp_path / "b.cre"
        save_cre(ds, a, settings={"median_range": 2})
        save_cre(ds, b, settings={"median_range": 2})
        assert a.read_bytes() == b.read_bytes()

    @pytest.mark.parametrize("seed", range(20))
    def test_roundtrip_identity(self, tmp_path, seed):
        ds = random_dataset(seed)
        path = tmp_path / "rt.cre"
        save_cre(ds, path, settings={"n_pct_range": 0, "median_range": 2})
        loaded = load_cre(path)
        assert dataset_fields(loaded) == dataset_fields(ds)

    def test_checksum_detects_corruption(self, tmp_path):
        path = tmp_path / "c.cre"
        save_cre(random_dataset(2), path)
        data = bytearray(path.read_bytes())
        for pos in (7, len(data) // 2, len(data) - 3):
            corrupted = bytearray(data)
            corrupted[pos] ^= 0x01
            path.write_bytes(bytes(corrupted))
            with pytest.raises(RpysError):
                load_cre(path)

    def test_version_mismatch_rejected(self, tmp_path):
        path = tmp_path / "v.cre"
        save_cre(Dataset(), path)
        text = path.read_text().replace("#CRE\t1", "#CRE\t2", 1)
        # Re-stamp the checksum so only the version differs.
        import hashlib

        lines = text.split("\n")
        body = "\n".join(lines[:-3]) + "\n"
        digest = hashlib.sha256(body.encode()).hexdigest()
        lines[-3] = f"#CHECKSUM\t{digest}"
        path.write_text("\n".join(lines))
        with pytest.raises(FormatVersionError):
            load_cre(path)

    def test_row_count_must_match_summary(self, tmp_path):
        path = tmp_path / "rows.cre"
        save_cre(random_dataset(3), path)
        text = path.read_text()
        lines = text.split("\n")
        del lines[5]  # drop one variant row
        import hashlib

        body = "\n".join(lines[:-3]) + "\n"
        lines[-3] = f"#CHECKSUM\t{hashlib.sha256(body.encode()).hexdigest()}"
        path.write_text("\n".join(lines))
        with pytest.raises(CreFormatError):
            load_cre(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_cre(tmp_path / "absent.cre")


def tiny_dataset():
    a = parse_cr_line("ALPHA A, 2000, NATURE, V5, P10")
    b = parse_cr_line("BETA B, 2000, SCIENCE")
    occs = [Occurrence(a, 2010)] * 3 + [Occurrence(b, 2011)] * 1
    return aggregate(occs, n_citing=4)


class TestCsvCr:
    def test_hand_computed_rows(self):
        content = csv_cr_bytes(tiny_dataset(), n_pct_range=0).decode()
        lines = content.splitlines()
        assert lines[0] == "ID,CR,RPY,N_CR,PCT_RPY,CID,CID_SIZE"
        assert lines[1] == '1,"ALPHA A, 2000, NATURE, V5, P10",2000,3,0.75,,1'
        assert lines[2] == '2,"BETA B, 2000, SCIENCE",2000,1,0.25,,1'
        assert len(lines) == 3

    def test_empty_dataset_header_only(self):
        assert csv_cr_bytes(Dataset()).decode() == "ID,CR,RPY,N_CR,PCT_RPY,CID,CID_SIZE\n"

    def test_comma_key_is_quoted(self, tmp_path):
        ds = aggregate([Occurrence(parse_cr_line("X Y, 1990, J"), 2000)])
        path = tmp_path / "q.csv"
        export_csv_cr(ds, path)
        assert '"X Y, 1990, J"' in path.read_text()

    def test_sorted_by_rpy_then_ncr_desc(self):
        occs = []
        for raw, n in (("B, 1990, J", 2), ("A, 1990, J", 2), ("C, 1980, J", 1)):
            occs.extend([Occurrence(parse_cr_line(raw), 2000)] * n)
        content = csv_cr_bytes(aggregate(occs)).decode()
        names = [line.split(",")[1] for line in content.splitlines()[1:]]
        assert names == ['"C', '"A', '"B']


class TestCsvGraph:
    def test_single_year_row(self):
        ds_occs = [Occurrence(parse_cr_line("W, 2000, J"), 2005)] * 7
        spect = compute_spectrogram(aggregate(ds_occs), median_range=2)
        assert csv_graph_bytes(spect).decode() == "RPY,N_CR,MEDIAN_DEV\n2000,7,0\n"

    def test_rows_match_spectrogram(self, tmp_path):
        rng = random.Random(4)
        occs = []
        for i in range(30):
            raw = f"W {i}, {rng.randint(1990, 1999)}, J"
            occs.extend([Occurrence(parse_cr_line(raw), 2005)] * rng.randint(1, 4))
        spect = compute_spectrogram(aggregate(occs), median_range=2)
        path = tmp_path / "g.csv"
        export_csv_graph(spect, path)
        lines = path.read_text().splitlines()[1:]
        assert len(lines) == len(spect.rows)
        for line, row in zip(lines, spect.rows):
            y, n, dev = line.split(",")
            assert (int(y), int(n)) == (row.rpy, row.ncr)
            assert float(dev) == row.median_dev

    def test_empty_spectrogram_writes_nothing(self, tmp_path):
        path = tmp_path / "never.csv"
        with pytest.raises(EmptyDatasetError):
            export_csv_graph(Spectrogram(rows=()), path)
        assert not path.exists()

    def test_half_devs_are_written_as_decimals(self):
        spect = Spectrogram(
            rows=(SpectroRow(2000, 3, 0.5), SpectroRow(2001, 4, -1.5))
        )
        body = csv_graph_bytes(spect).decode()
        assert "2000,3,0.5" in body and "2001,4,-1.5" in body


class TestUnionCre:
    def save_datasets(self, tmp_path, datasets):
        paths = []
        for i, ds in enumerate(datasets):
            p = tmp_path / f"u{i}.cre"
            save_cre(ds, p)
            paths.append(p)
        return paths

    def test_unary_union_clears_cluster_ids(self, tmp_path):
        ds = random_dataset(5)
        (path,) = self.save_datasets(tmp_path, [ds])
        out = union_cre([path])
        loaded = load_cre(path)
        assert set(out.variants) == set(loaded.variants)
        assert all(v.cluster_id is None for v in out.variants.values())
        assert {k: v.ncr for k, v in out.variants.items()} == {
            k: v.ncr for k, v in loaded.variants.items()
        }

    def test_union_sums_ncr_per_key(self, tmp_path):
        base = aggregate([Occurrence(parse_cr_line("W A, 1990, J"), 2000)] * 3, n_citing=1)
        other = aggregate(
            [Occurrence(parse_cr_line("W A, 1990, J"), 2001)] * 2
            + [Occurrence(parse_cr_line("W B, 1991, J"), 2001)],
            n_citing=2,
        )
        paths = self.save_datasets(tmp_path, [base, other])
        out = union_cre(paths)
        assert out.variants["W A, 1990, J"].ncr == 5
        assert out.variants["W B, 1991, J"].ncr == 1
        assert out.n_citing == 3
        assert out.n_cr_total == 6

    def test_order_independent(self, tmp_path):
        datasets = [random_dataset(s) for s in (6, 7, 8)]
        paths = self.save_datasets(tmp_path, datasets)
        a = union_cre(paths)
        b = union_cre(list(reversed(paths)))
        assert a == b

    def test_additivity(self, tmp_path):
        datasets = [random_dataset(s) for s in (9, 10, 11)]
        paths = self.save_datasets(tmp_path, datasets)
        out = union_cre(paths)
        assert out.sum_ncr() == sum(ds.sum_ncr() for ds in datasets)

    def test_empty_path_list_rejected(self):
        with pytest.raises(DomainError):
            union_cre([])
