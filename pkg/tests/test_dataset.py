import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowfeat.dataset import (
    ColumnKind,
    ColumnSpec,
    DataError,
    FeatureTable,
    LabelVector,
    NormStats,
    Profile,
    drop_identifiers,
    encode,
    load_csv,
    load_profile,
    minmax_apply,
    minmax_fit,
    prepare,
    sanitize,
    stratified_kfold,
    stratified_split,
)


def write(tmp_path, text, name="flows.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_load_infers_kinds(tmp_path):
    path = write(tmp_path, "PROTOCOL,IN_BYTES,Label\ntcp,10,0\nudp,20,1\nicmp,30,1\n")
    raw = load_csv(path)
    assert raw.row_count == 3
    kinds = {c.name: c.kind for c in raw.columns}
    assert kinds == {
        "PROTOCOL": ColumnKind.CATEGORICAL,
        "IN_BYTES": ColumnKind.NUMERIC,
        "Label": ColumnKind.LABEL,
    }


def test_load_header_only(tmp_path):
    raw = load_csv(write(tmp_path, "a,b,Label\n"))
    assert raw.row_count == 0
    assert len(raw.columns) == 3


def test_load_ragged_row_names_row(tmp_path):
    lines = ["a,b,Label"] + ["1,2,0"] * 16 + ["1,0"] + ["1,2,1"] * 3
    with pytest.raises(DataError, match="row 17"):
        load_csv(write(tmp_path, "\n".join(lines) + "\n"))


def test_load_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_csv(tmp_path / "nope.csv")


def test_load_explicit_spec_mismatch(tmp_path):
    path = write(tmp_path, "a,b,Label\n1,2,0\n")
    spec = [
        ColumnSpec("a", ColumnKind.NUMERIC, 0),
        ColumnSpec("c", ColumnKind.NUMERIC, 1),
        ColumnSpec("Label", ColumnKind.LABEL, 2),
    ]
    with pytest.raises(DataError, match="spec expects 'c'"):
        load_csv(path, spec)
    spec[1] = ColumnSpec("b", ColumnKind.CATEGORICAL, 1)
    raw = load_csv(path, spec)
    assert raw.columns[1].kind == ColumnKind.CATEGORICAL


def test_load_requires_one_label(tmp_path):
    with pytest.raises(DataError, match="exactly one label"):
        load_csv(write(tmp_path, "a,b\n1,2\n"))


def test_drop_identifiers_keeps_order(tmp_path):
    header = "Flow ID,a,Src IP,b,Src Port,c,Dst IP,d,Timestamp,Label"
    row = "x,1,10.0.0.1,2,80,3,10.0.0.2,4,2020,0"
    raw = load_csv(write(tmp_path, f"{header}\n{row}\n"))
    assert len(raw.columns) == 10
    out = drop_identifiers(raw)
    assert out.names == ["a", "b", "c", "d", "Label"]
    assert out.rows == (("1", "2", "3", "4", "0"),)
    assert [c.position for c in out.columns] == list(range(5))


def test_drop_identifiers_identity(tmp_path):
    raw = load_csv(write(tmp_path, "a,Label\n1,0\n"))
    assert drop_identifiers(raw) is raw


def test_drop_identifiers_all_but_label_warns(tmp_path, caplog):
    raw = load_csv(write(tmp_path, "Flow ID,Timestamp,Label\nx,1,0\n"))
    out = drop_identifiers(raw)
    assert out.names == ["Label"]
    assert "only the label column" in caplog.text


def test_encode_sorted_codes_and_labels(tmp_path):
    raw = load_csv(write(tmp_path, "proto,bytes,Label\ntcp,1,0\nudp,2,1\nicmp,3,1\n"))
    table, y = encode(raw, attack_values=())
    assert table.feature_names == ("proto", "bytes")
    np.testing.assert_array_equal(table.values[:, 0], [1, 2, 0])
    np.testing.assert_array_equal(y.labels, [0, 1, 1])
    assert y.positive_count == 2


def test_encode_attack_values_and_strict(tmp_path):
    raw = load_csv(write(tmp_path, "x,Label\n1,Benign\n2,DDoS\n3,Weird\n"))
    _, y = encode(raw, attack_values={"DDoS"})
    np.testing.assert_array_equal(y.labels, [0, 1, 0])
    with pytest.raises(DataError, match="Weird"):
        encode(raw, attack_values={"DDoS"}, strict=True)


def test_encode_single_value_column(tmp_path):
    raw = load_csv(write(tmp_path, "proto,Label\ntcp,0\ntcp,1\n"))
    table, _ = encode(raw)
    np.testing.assert_array_equal(table.values[:, 0], [0, 0])


def test_encode_rejects_bad_numeric(tmp_path):
    spec = [ColumnSpec("x", ColumnKind.NUMERIC, 0), ColumnSpec("Label", ColumnKind.LABEL, 1)]
    raw = load_csv(write(tmp_path, "x,Label\n1,0\nabc,1\n"), spec)
    with pytest.raises(DataError, match="abc"):
        encode(raw)


def test_encode_permutation_keeps_codes(tmp_path):
    rows = ["tcp,0", "udp,1", "icmp,0", "gre,1", "tcp,1"]
    a = encode(load_csv(write(tmp_path, "p,Label\n" + "\n".join(rows) + "\n", "a.csv")))[0]
    b = encode(load_csv(write(tmp_path, "p,Label\n" + "\n".join(rows[::-1]) + "\n", "b.csv")))[0]
    codes_a = dict(zip(rows, a.values[:, 0]))
    codes_b = dict(zip(rows[::-1], b.values[:, 0]))
    assert codes_a == codes_b


def test_sanitize_policies():
    values = np.array([[1.0, np.nan], [np.inf, 2.0], [np.nan, np.nan], [3.0, -np.inf]])
    t = FeatureTable(values, ["a", "b"])
    out = sanitize(t)
    np.testing.assert_array_equal(out.values, [[1, 0], [0, 2], [0, 0], [3, 0]])
    assert "replaced 5 non-finite" in out.provenance[-1]
    dropped = sanitize(FeatureTable(values, ["a", "b"]), "drop-row")
    assert dropped.n_rows == 0
    clean = FeatureTable([[1.0, 2.0]], ["a", "b"])
    assert sanitize(clean) is clean


def test_sanitize_three_nans_and_drop_row_alignment():
    values = np.array([[np.nan, 1.0], [2.0, np.nan], [3.0, 4.0], [np.nan, 5.0]])
    out = sanitize(FeatureTable(values, ["a", "b"]))
    assert out.values.shape == (4, 2)
    assert "replaced 3" in out.provenance[-1]
    dr = sanitize(FeatureTable(values, ["a", "b"]), "drop-row")
    np.testing.assert_array_equal(dr.row_index, [2])
    y = LabelVector([0, 1, 1, 0]).take(dr.row_index)
    np.testing.assert_array_equal(y.labels, [1])


@given(st.lists(st.sampled_from([0.0, 1.5, np.nan, np.inf, -np.inf, -2.0]), min_size=2, max_size=30))
def test_sanitize_idempotent(cells):
    t = FeatureTable(np.array(cells).reshape(-1, 1), ["a"])
    once = sanitize(t)
    twice = sanitize(once)
    assert np.isfinite(once.values).all()
    np.testing.assert_array_equal(once.values, twice.values)


def test_minmax_fit_examples():
    stats = minmax_fit(FeatureTable([[2.0, 5.0], [4.0, 5.0], [6.0, 5.0]], ["a", "b"]))
    np.testing.assert_array_equal(stats.min, [2, 5])
    np.testing.assert_array_equal(stats.max, [6, 5])
    single = minmax_fit(FeatureTable([[1.0, 7.0]], ["a", "b"]))
    np.testing.assert_array_equal(single.min, single.max)
    with pytest.raises(DataError):
        minmax_fit(FeatureTable(np.empty((0, 2)), ["a", "b"]))


def test_minmax_apply_examples():
    t = FeatureTable([[2.0, 5.0], [4.0, 5.0], [6.0, 5.0]], ["a", "b"])
    out = minmax_apply(t, minmax_fit(t))
    np.testing.assert_array_equal(out.values[:, 0], [0.0, 0.5, 1.0])
    np.testing.assert_array_equal(out.values[:, 1], [0.0, 0.0, 0.0])
    stats = NormStats(np.array([2.0]), np.array([6.0]))
    clipped = minmax_apply(FeatureTable([[8.0], [0.0]], ["a"]), stats)
    np.testing.assert_array_equal(clipped.values[:, 0], [1.0, 0.0])
    with pytest.raises(DataError):
        minmax_apply(t, stats)


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1))
def test_minmax_self_fit_attains_bounds(seed):
    rng = np.random.default_rng(seed)
    values = rng.integers(-5, 5, size=(12, 4)).astype(float)
    out = minmax_apply(FeatureTable(values, list("abcd")), minmax_fit(FeatureTable(values, list("abcd"))))
    assert ((out.values >= 0) & (out.values <= 1)).all()
    for j in range(4):
        if len(np.unique(values[:, j])) >= 2:
            assert out.values[:, j].min() == 0.0 and out.values[:, j].max() == 1.0


def test_stratified_split_arithmetic_and_determinism():
    y = LabelVector([1] * 20 + [0] * 80)
    plan = stratified_split(y, 0.7, seed=3)
    train = y.labels[plan.train_indices]
    assert (train == 1).sum() == 14 and (train == 0).sum() == 56
    assert sorted(np.concatenate([plan.train_indices, plan.test_indices])) == list(range(100))
    again = stratified_split(y, 0.7, seed=3)
    np.testing.assert_array_equal(plan.train_indices, again.train_indices)
    np.testing.assert_array_equal(plan.test_indices, again.test_indices)
    with pytest.raises(DataError):
        stratified_split(LabelVector([0] * 10), 0.7, 0)


def test_stratified_kfold_arithmetic():
    y = LabelVector([1] * 10 + [0] * 40)
    plan = stratified_kfold(y, 5, seed=11)
    for f in range(5):
        in_fold = y.labels[plan.assignments == f]
        assert (in_fold == 1).sum() == 2 and (in_fold == 0).sum() == 8
    np.testing.assert_array_equal(plan.assignments, stratified_kfold(y, 5, seed=11).assignments)
    with pytest.raises(DataError):
        stratified_kfold(LabelVector([1] * 3 + [0] * 20), 5, 0)
    with pytest.raises(ValueError):
        stratified_kfold(y, 1, 0)


def test_split_and_fold_deviation_property():
    # 100 seeded random label vectors
    for case in range(100):
        rng = np.random.default_rng(case)
        n = int(rng.integers(20, 300))
        labels = (rng.random(n) < rng.uniform(0.1, 0.9)).astype(int)
        labels[:5] = 1
        labels[5:10] = 0
        y = LabelVector(labels)
        ratio = float(rng.uniform(0.2, 0.8))
        sp = stratified_split(y, ratio, seed=case)
        for cls in (0, 1):
            total = (labels == cls).sum()
            assert abs((labels[sp.train_indices] == cls).sum() - ratio * total) <= 1
        k = int(rng.integers(2, 6))
        fp = stratified_kfold(y, k, seed=case)
        for cls in (0, 1):
            total = (labels == cls).sum()
            for f in range(k):
                assert abs(((fp.assignments == f) & (labels == cls)).sum() - total / k) <= 1


def test_profile_and_prepare(tmp_path):
    prof_path = write(
        tmp_path,
        "# NF-style profile\nlabel_column = Label\nattack_values = DDoS, Scan\n"
        "extra_identifier_columns = flow_hash\ndelimiter = semicolon\n",
        "p.conf",
    )
    prof = load_profile(prof_path)
    assert prof.delimiter == ";"
    assert prof.attack_values == frozenset({"DDoS", "Scan"})
    data = write(tmp_path, "flow_hash;IPV4_SRC_ADDR;proto;bytes;Label\nh1;1.1.1.1;tcp;;Benign\nh2;2.2.2.2;udp;5;DDoS\n")
    from flowfeat.dataset import load_with_profile

    table, y = prepare(load_with_profile(data, prof), prof)
    assert table.feature_names == ("proto", "bytes")
    np.testing.assert_array_equal(table.values, [[0, 0], [1, 5]])
    np.testing.assert_array_equal(y.labels, [0, 1])


def test_profile_unknown_key(tmp_path):
    with pytest.raises(DataError, match="unknown profile keys"):
        load_profile(write(tmp_path, "labl = x\n", "p.conf"))


def test_default_profile():
    assert Profile().delimiter == ","
