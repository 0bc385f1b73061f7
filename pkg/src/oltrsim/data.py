"""LETOR-format ranking datasets: parsing, normalization, synthesis.

The on-disk format is the SVMLight-style line format used by the public
LETOR distributions::

    <label> qid:<qid> <fid>:<val> ... [# comment]

Feature ids are 1-based and strictly increasing within a line; ids absent
from a line are 0.0. A directory of ``Fold1..FoldK`` subdirectories, each
holding ``train.txt``/``vali.txt``/``test.txt``, loads into one dataset
with per-fold splits.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator, Mapping, Sequence

import numpy as np


class LetorParseError(ValueError):
    """Malformed LETOR input; carries the 1-based line number."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class DatasetValidationError(ValueError):
    pass


@dataclass(frozen=True)
class Document:
    doc_id: str
    features: np.ndarray
    relevance: int


class QueryGroup:
    """All judged documents of one query, as a dense feature matrix."""

    __slots__ = ("query_id", "features", "relevances", "doc_ids")

    def __init__(
        self,
        query_id: str,
        features: np.ndarray,
        relevances: np.ndarray,
        doc_ids: Sequence[str],
    ):
        features = np.asarray(features, dtype=np.float64)
        relevances = np.asarray(relevances, dtype=np.int64)
        if features.ndim != 2 or features.shape[0] < 1:
            raise DatasetValidationError(
                f"query {query_id!r} needs a (n_docs >= 1, dim) feature matrix"
            )
        if relevances.shape != (features.shape[0],):
            raise DatasetValidationError(
                f"query {query_id!r}: one relevance grade per document required"
            )
        if len(doc_ids) != features.shape[0]:
            raise DatasetValidationError(
                f"query {query_id!r}: one doc_id per document required"
            )
        self.query_id = query_id
        self.features = features
        self.relevances = relevances
        self.doc_ids = tuple(doc_ids)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def documents(self) -> list[Document]:
        return [
            Document(self.doc_ids[i], self.features[i], int(self.relevances[i]))
            for i in range(len(self))
        ]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, QueryGroup)
            and self.query_id == other.query_id
            and self.doc_ids == other.doc_ids
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.relevances, other.relevances)
        )

    def __repr__(self) -> str:
        return f"QueryGroup({self.query_id!r}, {len(self)} docs)"


@dataclass(frozen=True)
class FoldSplit:
    train: tuple[str, ...]
    validation: tuple[str, ...]
    test: tuple[str, ...]


class Dataset:
    """Immutable corpus of query groups plus fold splits.

    Safe to share across concurrently running experiment repeats.
    """

    def __init__(
        self,
        dimensionality: int,
        queries: Mapping[str, QueryGroup] | Sequence[QueryGroup],
        splits: Mapping[int, FoldSplit] | None = None,
        max_grade: int | None = None,
    ):
        if not isinstance(queries, Mapping):
            queries = {qg.query_id: qg for qg in queries}
        if dimensionality < 1:
            raise DatasetValidationError("dimensionality must be positive")
        observed_max = 0
        for qid, qg in queries.items():
            if qg.features.shape[1] != dimensionality:
                raise DatasetValidationError(
                    f"query {qid!r} has dimensionality {qg.features.shape[1]}, "
                    f"dataset declares {dimensionality}"
                )
            if len(qg):
                low = int(qg.relevances.min())
                high = int(qg.relevances.max())
                if low < 0:
                    raise DatasetValidationError(
                        f"query {qid!r} has a negative relevance grade"
                    )
                observed_max = max(observed_max, high)
        if max_grade is None:
            max_grade = observed_max
        elif observed_max > max_grade:
            raise DatasetValidationError(
                f"observed grade {observed_max} exceeds declared max_grade {max_grade}"
            )
        splits = dict(splits) if splits else {}
        for fold, split in splits.items():
            seen: set[str] = set()
            for part in (split.train, split.validation, split.test):
                for qid in part:
                    if qid not in queries:
                        raise DatasetValidationError(
                            f"fold {fold} references unknown query {qid!r}"
                        )
                    if qid in seen:
                        raise DatasetValidationError(
                            f"fold {fold}: query {qid!r} appears in more than one part"
                        )
                    seen.add(qid)
        self.dimensionality = dimensionality
        self.queries: dict[str, QueryGroup] = dict(queries)
        self.splits: dict[int, FoldSplit] = splits
        self.max_grade = max_grade

    @property
    def query_ids(self) -> tuple[str, ...]:
        return tuple(self.queries)

    def groups(self, query_ids: Iterable[str]) -> list[QueryGroup]:
        return [self.queries[qid] for qid in query_ids]

    def fold(self, fold: int) -> FoldSplit:
        try:
            return self.splits[fold]
        except KeyError:
            raise DatasetValidationError(f"dataset has no fold {fold}") from None

    def num_documents(self) -> int:
        return sum(len(qg) for qg in self.queries.values())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Dataset)
            and self.dimensionality == other.dimensionality
            and self.max_grade == other.max_grade
            and self.splits == other.splits
            and list(self.queries) == list(other.queries)
            and all(self.queries[q] == other.queries[q] for q in self.queries)
        )

    def __repr__(self) -> str:
        return (
            f"Dataset(D={self.dimensionality}, {len(self.queries)} queries, "
            f"{len(self.splits)} folds, max_grade={self.max_grade})"
        )


def _iter_lines(source: str | Path | IO[str] | Iterable[str]) -> Iterator[str]:
    if isinstance(source, Path):
        with source.open("r", encoding="utf-8") as handle:
            yield from handle
    elif isinstance(source, str):
        yield from io.StringIO(source)
    else:
        yield from source


def parse_letor(
    source: str | Path | IO[str] | Iterable[str],
    dimensionality: int | None = None,
    max_grade: int | None = None,
) -> Dataset:
    """Parse LETOR lines into a dataset with no fold splits.

    ``dimensionality`` is an optional hint; data exceeding it is a
    validation error, data below it is zero-padded up to it. The first
    whitespace-separated token of a line comment, when present, becomes
    the document id.
    """
    sparse_rows: dict[str, list[tuple[list[tuple[int, float]], int, str | None]]] = {}
    max_fid = 0
    for line_no, raw in enumerate(_iter_lines(source), start=1):
        body, _, comment = raw.partition("#")
        tokens = body.split()
        if not tokens:
            continue
        try:
            label = int(tokens[0])
        except ValueError:
            raise LetorParseError(f"bad relevance label {tokens[0]!r}", line_no)
        if label < 0:
            raise LetorParseError(f"negative relevance label {label}", line_no)
        if len(tokens) < 2 or not tokens[1].startswith("qid:"):
            raise LetorParseError("expected 'qid:<id>' after the label", line_no)
        qid = tokens[1][4:]
        if not qid:
            raise LetorParseError("empty query id", line_no)
        pairs: list[tuple[int, float]] = []
        prev_fid = 0
        for token in tokens[2:]:
            fid_str, sep, val_str = token.partition(":")
            if not sep:
                raise LetorParseError(f"bad feature pair {token!r}", line_no)
            try:
                fid = int(fid_str)
                val = float(val_str)
            except ValueError:
                raise LetorParseError(f"bad feature pair {token!r}", line_no)
            if fid < 1:
                raise LetorParseError(f"feature id {fid} must be >= 1", line_no)
            if fid <= prev_fid:
                raise LetorParseError(
                    f"feature ids must be strictly increasing, got {fid} "
                    f"after {prev_fid}",
                    line_no,
                )
            prev_fid = fid
            pairs.append((fid, val))
        max_fid = max(max_fid, prev_fid)
        comment_tokens = comment.split()
        doc_id = comment_tokens[0] if comment_tokens else None
        sparse_rows.setdefault(qid, []).append((pairs, label, doc_id))

    if not sparse_rows:
        raise LetorParseError("no data lines found", 0)
    if dimensionality is not None:
        if max_fid > dimensionality:
            raise DatasetValidationError(
                f"declared dimensionality {dimensionality} but saw feature id {max_fid}"
            )
        dim = dimensionality
    else:
        dim = max_fid

    queries: dict[str, QueryGroup] = {}
    for qid, rows in sparse_rows.items():
        features = np.zeros((len(rows), dim), dtype=np.float64)
        relevances = np.empty(len(rows), dtype=np.int64)
        doc_ids = []
        for i, (pairs, label, doc_id) in enumerate(rows):
            for fid, val in pairs:
                features[i, fid - 1] = val
            relevances[i] = label
            doc_ids.append(doc_id if doc_id is not None else f"{qid}.{i}")
        queries[qid] = QueryGroup(qid, features, relevances, doc_ids)
    return Dataset(dim, queries, max_grade=max_grade)


def serialize_letor(ds: Dataset, destination: IO[str] | None = None) -> str:
    """Write canonical dense LETOR lines, round-trippable through parse_letor.

    Values use repr precision so parse(serialize(ds)) reproduces features
    exactly; the doc id travels in the line comment.
    """
    out = destination if destination is not None else io.StringIO()
    for qg in ds.queries.values():
        for i in range(len(qg)):
            row = qg.features[i].tolist()
            pairs = " ".join(f"{j + 1}:{v!r}" for j, v in enumerate(row))
            out.write(
                f"{int(qg.relevances[i])} qid:{qg.query_id} {pairs} # {qg.doc_ids[i]}\n"
            )
    return out.getvalue() if destination is None else ""


def normalize_per_query(ds: Dataset) -> Dataset:
    """Min-max scale each feature column to [0, 1] within each query.

    Constant columns map to 0.0. Relevance labels and splits are untouched.
    Idempotent.
    """
    queries = {}
    for qid, qg in ds.queries.items():
        lo = qg.features.min(axis=0)
        hi = qg.features.max(axis=0)
        span = hi - lo
        scaled = np.divide(
            qg.features - lo,
            span,
            out=np.zeros_like(qg.features),
            where=span != 0,
        )
        queries[qid] = QueryGroup(qid, scaled, qg.relevances, qg.doc_ids)
    return Dataset(ds.dimensionality, queries, ds.splits, ds.max_grade)


def split_single_fold(
    ds: Dataset, train_fraction: float = 0.6, validation_fraction: float = 0.2
) -> Dataset:
    """Assign queries to one fold's train/validation/test by position.

    Deterministic: queries keep their first-appearance order; the first
    floor(train_fraction * Q) go to train, the next block to validation,
    the remainder to test.
    """
    if train_fraction < 0 or validation_fraction < 0:
        raise DatasetValidationError("split fractions must be non-negative")
    if train_fraction + validation_fraction > 1.0 + 1e-12:
        raise DatasetValidationError("split fractions must sum to at most 1")
    qids = ds.query_ids
    n_train = int(len(qids) * train_fraction)
    n_vali = int(len(qids) * validation_fraction)
    split = FoldSplit(
        train=qids[:n_train],
        validation=qids[n_train : n_train + n_vali],
        test=qids[n_train + n_vali :],
    )
    return Dataset(ds.dimensionality, ds.queries, {1: split}, ds.max_grade)


def load_fold_dirs(root: str | Path) -> Dataset:
    """Load a LETOR distribution laid out as ``Fold1..FoldK`` directories.

    Each fold directory holds train.txt, vali.txt and test.txt. A query
    appearing in several files must carry identical documents everywhere.
    """
    root = Path(root)
    fold_dirs = sorted(
        (p for p in root.iterdir() if p.is_dir() and p.name.startswith("Fold")),
        key=lambda p: p.name,
    )
    if not fold_dirs:
        raise DatasetValidationError(f"no Fold* directories under {root}")
    parsed: dict[int, dict[str, Dataset]] = {}
    dim = 0
    max_grade = 0
    for fold_no, fold_dir in enumerate(fold_dirs, start=1):
        parts = {}
        for part, fname in (
            ("train", "train.txt"),
            ("validation", "vali.txt"),
            ("test", "test.txt"),
        ):
            path = fold_dir / fname
            if not path.exists():
                raise DatasetValidationError(f"missing {path}")
            part_ds = parse_letor(path)
            parts[part] = part_ds
            dim = max(dim, part_ds.dimensionality)
            max_grade = max(max_grade, part_ds.max_grade)
        parsed[fold_no] = parts

    queries: dict[str, QueryGroup] = {}

    def _merge(qg: QueryGroup) -> None:
        if qg.features.shape[1] < dim:
            padded = np.zeros((len(qg), dim), dtype=np.float64)
            padded[:, : qg.features.shape[1]] = qg.features
            qg = QueryGroup(qg.query_id, padded, qg.relevances, qg.doc_ids)
        existing = queries.get(qg.query_id)
        if existing is None:
            queries[qg.query_id] = qg
        elif existing != qg:
            raise DatasetValidationError(
                f"query {qg.query_id!r} has conflicting data across fold files"
            )

    splits = {}
    for fold_no, parts in parsed.items():
        for part_ds in parts.values():
            for qg in part_ds.queries.values():
                _merge(qg)
        splits[fold_no] = FoldSplit(
            train=parts["train"].query_ids,
            validation=parts["validation"].query_ids,
            test=parts["test"].query_ids,
        )
    return Dataset(dim, queries, splits, max_grade)


def generate_synthetic(
    num_queries: int,
    docs_per_query: int,
    dim: int,
    relevant_fraction: float = 0.2,
    noise_level: float = 0.0,
    seed: int = 0,
    split_fractions: tuple[float, float] = (0.6, 0.2),
) -> Dataset:
    """Generate a binary-relevance dataset learnable through feature 1.

    Feature 1 equals the relevance grade (scaled to [0, 1]) plus Gaussian
    noise of scale ``noise_level``, clipped back to [0, 1]; the remaining
    features are uniform noise. Deterministic for a fixed seed. The result
    carries a single positional fold split.
    """
    if dim < 2:
        raise DatasetValidationError("dim must be >= 2")
    if docs_per_query < 2:
        raise DatasetValidationError("docs_per_query must be >= 2")
    if num_queries < 1:
        raise DatasetValidationError("num_queries must be >= 1")
    if not 0.0 <= relevant_fraction <= 1.0:
        raise DatasetValidationError("relevant_fraction must be in [0, 1]")
    if noise_level < 0.0:
        raise DatasetValidationError("noise_level must be >= 0")
    rng = np.random.default_rng(seed)
    queries = {}
    n_relevant = int(round(relevant_fraction * docs_per_query))
    for qi in range(num_queries):
        qid = f"q{qi}"
        relevances = np.zeros(docs_per_query, dtype=np.int64)
        relevances[rng.permutation(docs_per_query)[:n_relevant]] = 1
        features = rng.random((docs_per_query, dim))
        signal = relevances.astype(np.float64)
        noise = noise_level * rng.standard_normal(docs_per_query)
        features[:, 0] = np.clip(signal + noise, 0.0, 1.0)
        doc_ids = [f"{qid}.{i}" for i in range(docs_per_query)]
        queries[qid] = QueryGroup(qid, features, relevances, doc_ids)
    ds = Dataset(dim, queries, max_grade=1)
    return split_single_fold(ds, split_fractions[0], split_fractions[1])
