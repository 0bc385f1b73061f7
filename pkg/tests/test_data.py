import numpy as np
import pytest

from oltrsim.data import (
    Dataset,
    DatasetValidationError,
    FoldSplit,
    LetorParseError,
    QueryGroup,
    generate_synthetic,
    load_fold_dirs,
    normalize_per_query,
    parse_letor,
    serialize_letor,
    split_single_fold,
)
from oltrsim.metrics import ndcg_at_k


def test_parse_single_line_sparse_fill():
    ds = parse_letor('1 qid:7 1:0.5 3:1.0')
    assert list(ds.queries) == ["7"]
    qg = ds.queries["7"]
    assert ds.dimensionality == 3
    np.testing.assert_array_equal(qg.features, [[0.5, 0.0, 1.0]])
    assert qg.relevances.tolist() == [1]


def test_parse_grouping_by_first_appearance():
    ds = parse_letor("0 qid:a 1:0.0\n2 qid:a 2:3.5\n")
    assert list(ds.queries) == ["a"]
    qg = ds.queries["a"]
    assert len(qg) == 2
    assert ds.dimensionality == 2
    np.testing.assert_array_equal(qg.features, [[0.0, 0.0], [0.0, 3.5]])
    assert qg.relevances.tolist() == [0, 2]


def _oracle_parse(text):
    """Independent line-splitting parse: qid -> list of (label, {fid: val})."""
    out = {}
    for line in text.strip().splitlines():
        data = line.split("#")[0].split()
        label = int(data[0])
        qid = data[1].split(":")[1]
        feats = {}
        for tok in data[2:]:
            fid, val = tok.split(":")
            feats[int(fid)] = float(val)
        out.setdefault(qid, []).append((label, feats))
    return out


HAND_FIXTURE = """\
2 qid:q1 1:0.1 2:0.2 4:0.9 # d1
0 qid:q1 2:0.5 # d2
1 qid:q2 1:1.0 3:-0.25
0 qid:q2 4:0.125
3 qid:q1 1:0.75 4:0.5
0 qid:q3 1:0.0 2:0.0 3:0.0 4:0.0
1 qid:q3 2:2.5
2 qid:q2 1:0.3 2:0.3 3:0.3 4:0.3
0 qid:q3 3:7.5
1 qid:q1 4:1.0
"""


def test_parse_hand_fixture_against_oracle():
    ds = parse_letor(HAND_FIXTURE)
    oracle = _oracle_parse(HAND_FIXTURE)
    assert list(ds.queries) == list(oracle)
    assert ds.dimensionality == 4
    for qid, rows in oracle.items():
        qg = ds.queries[qid]
        assert len(qg) == len(rows)
        for i, (label, feats) in enumerate(rows):
            assert int(qg.relevances[i]) == label
            dense = np.zeros(4)
            for fid, val in feats.items():
                dense[fid - 1] = val
            np.testing.assert_array_equal(qg.features[i], dense)
    # comment-carried doc ids
    assert ds.queries["q1"].doc_ids[:2] == ("d1", "d2")


@pytest.mark.parametrize(
    "line, fragment",
    [
        ("x qid:1 1:0.5", "label"),
        ("1 quid:1 1:0.5", "qid"),
        ("1 qid: 1:0.5", "query id"),
        ("1 qid:1 1:abc", "pair"),
        ("1 qid:1 1", "pair"),
        ("1 qid:1 0:0.5", ">= 1"),
        ("1 qid:1 2:0.5 2:0.6", "increasing"),
        ("1 qid:1 3:0.5 2:0.6", "increasing"),
        ("-1 qid:1 1:0.5", "label"),
    ],
)
def test_parse_errors_carry_line_numbers(line, fragment):
    with pytest.raises(LetorParseError) as err:
        parse_letor(f"1 qid:0 1:1.0\n{line}\n")
    assert "line 2" in str(err.value)
    assert fragment in str(err.value)


def test_parse_dimensionality_hint():
    ds = parse_letor("1 qid:1 1:0.5", dimensionality=4)
    assert ds.dimensionality == 4
    assert ds.queries["1"].features.shape == (1, 4)
    with pytest.raises(DatasetValidationError):
        parse_letor("1 qid:1 3:0.5", dimensionality=2)


def test_parse_empty_input_rejected():
    with pytest.raises(LetorParseError):
        parse_letor("   \n# only a comment? no, comments need data lines\n")


def test_roundtrip_serialize_parse():
    rng = np.random.default_rng(11)
    queries = {}
    for qi in range(5):
        n = int(rng.integers(2, 7))
        feats = rng.standard_normal((n, 6)) * rng.uniform(0.1, 100)
        rel = rng.integers(0, 4, n)
        queries[f"q{qi}"] = QueryGroup(
            f"q{qi}", feats, rel, [f"q{qi}.{i}" for i in range(n)]
        )
    ds = Dataset(6, queries)
    assert parse_letor(serialize_letor(ds)) == ds


def test_normalize_minmax_and_constant_columns():
    qg = QueryGroup(
        "q", np.array([[2.0, 5.0], [4.0, 5.0], [6.0, 5.0]]), [0, 1, 0],
        ["a", "b", "c"],
    )
    out = normalize_per_query(Dataset(2, {"q": qg}))
    np.testing.assert_allclose(out.queries["q"].features[:, 0], [0.0, 0.5, 1.0])
    np.testing.assert_array_equal(out.queries["q"].features[:, 1], [0.0, 0.0, 0.0])


def test_normalize_matches_two_pass_oracle_and_is_idempotent():
    rng = np.random.default_rng(4)
    queries = {}
    for qi in range(3):
        feats = rng.standard_normal((8, 5)) * 13 + 2
        feats[:, 2] = 7.0  # constant column
        queries[f"q{qi}"] = QueryGroup(
            f"q{qi}", feats, rng.integers(0, 2, 8), [str(i) for i in range(8)]
        )
    ds = Dataset(5, queries)
    out = normalize_per_query(ds)
    for qid, qg in ds.queries.items():
        got = out.queries[qid].features
        for col in range(5):
            lo = min(qg.features[:, col])
            hi = max(qg.features[:, col])
            for row in range(8):
                if hi == lo:
                    expected = 0.0
                else:
                    expected = (qg.features[row, col] - lo) / (hi - lo)
                assert got[row, col] == pytest.approx(expected, abs=1e-12)
    assert normalize_per_query(out) == out
    # labels untouched
    for qid in ds.queries:
        np.testing.assert_array_equal(
            out.queries[qid].relevances, ds.queries[qid].relevances
        )


def test_parsed_documents_share_dimensionality():
    ds = parse_letor(HAND_FIXTURE)
    for qg in ds.queries.values():
        for doc in qg.documents:
            assert doc.features.shape == (ds.dimensionality,)


def test_synthetic_deterministic_for_seed():
    a = generate_synthetic(6, 10, 4, seed=0)
    b = generate_synthetic(6, 10, 4, seed=0)
    assert a == b
    c = generate_synthetic(6, 10, 4, seed=1)
    assert a != c


def test_synthetic_noiseless_feature_equals_scaled_grade():
    ds = generate_synthetic(10, 12, 3, relevant_fraction=0.25, noise_level=0.0, seed=2)
    for qg in ds.queries.values():
        np.testing.assert_array_equal(qg.features[:, 0], qg.relevances.astype(float))


def test_synthetic_feature_one_ranks_nearly_perfectly():
    ds = generate_synthetic(20, 50, 5, noise_level=0.0, seed=1)
    scores = []
    for qg in ds.queries.values():
        order = np.argsort(-qg.features[:, 0], kind="stable")
        scores.append(ndcg_at_k(qg.relevances[order], qg.relevances, 10))
    assert np.mean(scores) >= 0.99


def test_synthetic_invalid_bounds():
    with pytest.raises(DatasetValidationError):
        generate_synthetic(5, 1, 4)
    with pytest.raises(DatasetValidationError):
        generate_synthetic(5, 10, 1)
    with pytest.raises(DatasetValidationError):
        generate_synthetic(0, 10, 4)
    with pytest.raises(DatasetValidationError):
        generate_synthetic(5, 10, 4, relevant_fraction=1.5)
    with pytest.raises(DatasetValidationError):
        generate_synthetic(5, 10, 4, noise_level=-0.1)


def test_synthetic_split_counts():
    ds = generate_synthetic(150, 4, 3, seed=0, split_fractions=(2 / 3, 0.0))
    split = ds.fold(1)
    assert len(split.train) == 100
    assert len(split.validation) == 0
    assert len(split.test) == 50


def test_split_single_fold_is_positional():
    ds = generate_synthetic(10, 4, 3, seed=0)
    resplit = split_single_fold(ds, 0.5, 0.2)
    split = resplit.fold(1)
    assert split.train == ds.query_ids[:5]
    assert split.validation == ds.query_ids[5:7]
    assert split.test == ds.query_ids[7:]


def test_dataset_split_validation():
    qg = QueryGroup("q1", np.ones((2, 2)), [0, 1], ["a", "b"])
    with pytest.raises(DatasetValidationError):
        Dataset(2, {"q1": qg}, {1: FoldSplit(("q1",), (), ("missing",))})
    with pytest.raises(DatasetValidationError):
        Dataset(2, {"q1": qg}, {1: FoldSplit(("q1",), (), ("q1",))})


def test_load_fold_dirs(tmp_path):
    base = generate_synthetic(9, 5, 3, seed=5)
    qids = base.query_ids
    thirds = [qids[:3], qids[3:6], qids[6:]]
    for fold_no in (1, 2):
        fold_dir = tmp_path / f"Fold{fold_no}"
        fold_dir.mkdir()
        parts = {
            "train.txt": thirds[(fold_no - 1) % 3] + thirds[fold_no % 3],
            "vali.txt": thirds[(fold_no + 1) % 3][:1],
            "test.txt": thirds[(fold_no + 1) % 3][1:],
        }
        for fname, part_qids in parts.items():
            sub = Dataset(
                3, {q: base.queries[q] for q in part_qids}, max_grade=base.max_grade
            )
            (fold_dir / fname).write_text(serialize_letor(sub))
    ds = load_fold_dirs(tmp_path)
    assert sorted(ds.splits) == [1, 2]
    assert set(ds.queries) == set(qids)
    for fold_no in (1, 2):
        split = ds.fold(fold_no)
        assert set(split.train) | set(split.validation) | set(split.test) == set(qids)
    # query data identical to the source
    for qid in qids:
        assert ds.queries[qid] == base.queries[qid]


def test_load_fold_dirs_conflicting_query_data(tmp_path):
    fold = tmp_path / "Fold1"
    fold.mkdir()
    (fold / "train.txt").write_text("1 qid:q 1:0.5 2:0.5 # a\n")
    (fold / "vali.txt").write_text("1 qid:q 1:0.5 2:0.9 # a\n")
    (fold / "test.txt").write_text("1 qid:r 1:0.5 2:0.5 # b\n")
    with pytest.raises(DatasetValidationError, match="conflicting"):
        load_fold_dirs(tmp_path)
