"""Ingestion and preprocessing of KDD-style connection records.

Raw records are 41 comma-separated feature fields plus a label field.
Categorical fields are encoded frequency-ordinally (most frequent value
gets code 1), labels collapse onto five classes (0 = normal, then the four
attack categories), features are min-max scaled to [0, 1], and stratified
subsets feed the selection engine. Feature identities are the 1-based
column positions of the original file and survive every removal.
"""

from __future__ import annotations

import csv
import gzip
import logging
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionError, EncodeError, LafsError, ParseError

log = logging.getLogger(__name__)

N_FEATURES = 41

KDD_FEATURE_NAMES = (
    "duration", "protocol_type", "service", "flag", "src_bytes", "dst_bytes",
    "land", "wrong_fragment", "urgent", "hot", "num_failed_logins",
    "logged_in", "num_compromised", "root_shell", "su_attempted", "num_root",
    "num_file_creations", "num_shells", "num_access_files",
    "num_outbound_cmds", "is_host_login", "is_guest_login", "count",
    "srv_count", "serror_rate", "srv_serror_rate", "rerror_rate",
    "srv_rerror_rate", "same_srv_rate", "diff_srv_rate", "srv_diff_host_rate",
    "dst_host_count", "dst_host_srv_count", "dst_host_same_srv_rate",
    "dst_host_diff_srv_rate", "dst_host_same_src_port_rate",
    "dst_host_srv_diff_host_rate", "dst_host_serror_rate",
    "dst_host_srv_serror_rate", "dst_host_rerror_rate",
    "dst_host_srv_rerror_rate",
)

# 1-based ids of the string-valued columns; everything else parses as a number.
CATEGORICAL_COLUMNS = (2, 3, 4)  # protocol_type, service, flag
BINARY_COLUMNS = (7, 12, 21, 22)  # land, logged_in, is_host_login, is_guest_login

CATEGORY_CODES = {"dos": 1, "u2r": 2, "r2l": 3, "probe": 4}
CLASS_NAMES = ("normal", "dos", "u2r", "r2l", "probe")

DEFAULT_ATTACK_MAP = {
    # DoS
    "back": 1, "land": 1, "neptune": 1, "pod": 1, "smurf": 1, "teardrop": 1,
    "apache2": 1, "mailbomb": 1, "processtable": 1, "udpstorm": 1,
    # U2R
    "buffer_overflow": 2, "loadmodule": 2, "perl": 2, "rootkit": 2,
    "httptunnel": 2, "ps": 2, "sqlattack": 2, "xterm": 2,
    # R2L
    "ftp_write": 3, "guess_passwd": 3, "imap": 3, "multihop": 3, "phf": 3,
    "spy": 3, "warezclient": 3, "warezmaster": 3, "named": 3, "sendmail": 3,
    "snmpgetattack": 3, "snmpguess": 3, "worm": 3, "xlock": 3, "xsnoop": 3,
    # PROBE
    "ipsweep": 4, "nmap": 4, "portsweep": 4, "satan": 4, "mscan": 4,
    "saint": 4,
}

# Automatic quota rule: this fraction of the available class rows, capped.
# The cap reproduces the reference setup on full-size data; the fraction
# keeps desk-scale subsets random while validation stays low-variance.
AUTO_QUOTA_CAP = 5000
AUTO_QUOTA_FRACTION = 0.85


def column_kind(col_id: int) -> str:
    if col_id in CATEGORICAL_COLUMNS:
        return "categorical"
    if col_id in BINARY_COLUMNS:
        return "binary"
    return "continuous"


@dataclass(frozen=True)
class RawRecord:
    """One parsed connection record: 41 feature tokens plus a clean label."""

    features: tuple[str, ...]
    label: str

    def __post_init__(self):
        if len(self.features) != N_FEATURES:
            raise LafsError(f"expected {N_FEATURES} feature tokens")
        if not self.label:
            raise LafsError("empty label token")


@dataclass(frozen=True)
class Schema:
    """Per-column vocabularies plus the attack-name to category map."""

    vocabularies: dict[int, tuple[str, ...]]  # categorical column id -> values
    attack_map: dict[str, int]

    def code_for(self, col_id: int, value: str):
        """1 + frequency rank, or None when the value is unknown."""
        vocab = self.vocabularies[col_id]
        try:
            return 1 + vocab.index(value)
        except ValueError:
            return None

    def to_dict(self) -> dict:
        return {
            "vocabularies": {str(k): list(v) for k, v in self.vocabularies.items()},
            "attack_map": dict(self.attack_map),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Schema":
        return cls(
            vocabularies={int(k): tuple(v) for k, v in doc["vocabularies"].items()},
            attack_map={k: int(v) for k, v in doc["attack_map"].items()},
        )


@dataclass(frozen=True)
class Dataset:
    """Numeric feature matrix, labels in {0..4}, and stable feature identities."""

    X: np.ndarray
    y: np.ndarray
    feature_ids: tuple[int, ...]
    feature_names: tuple[str, ...]

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.int64)
        if X.ndim != 2:
            raise DimensionError(f"feature matrix must be 2-d, got {X.shape}")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DimensionError(
                f"{X.shape[0]} rows but {y.shape[0]} labels"
            )
        if y.size and (y.min() < 0 or y.max() > 4):
            raise LafsError("labels must be in {0..4}")
        if len(self.feature_ids) != X.shape[1]:
            raise DimensionError(
                f"{len(self.feature_ids)} feature ids for {X.shape[1]} columns"
            )
        if len(self.feature_names) != len(self.feature_ids):
            raise DimensionError("feature names and ids differ in length")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_ids", tuple(int(i) for i in self.feature_ids))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def class_counts(self) -> dict[int, int]:
        values, counts = np.unique(self.y, return_counts=True)
        return {int(v): int(c) for v, c in zip(values, counts)}


@dataclass(frozen=True)
class ScalingParams:
    """Per-column min/max fitted on training data."""

    col_min: np.ndarray
    col_max: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.col_min, dtype=np.float64)
        hi = np.asarray(self.col_max, dtype=np.float64)
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "col_min", lo)
        object.__setattr__(self, "col_max", hi)

    def to_dict(self) -> dict:
        return {"min": self.col_min.tolist(), "max": self.col_max.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "ScalingParams":
        return cls(np.array(doc["min"], dtype=np.float64),
                   np.array(doc["max"], dtype=np.float64))


@dataclass(frozen=True)
class SubsetSpec:
    """Row quotas for the two majority classes; minority classes ride along.

    A quota of None picks min(5000, ceil(available / 2)) at sampling time,
    which reproduces the reference setup on full-size data while keeping
    subsets properly random on desk-scale sets.
    """

    normal_quota: int | None = None
    attack_quota: int | None = None
    include_minority: bool = True

    def __post_init__(self):
        for q in (self.normal_quota, self.attack_quota):
            if q is not None and q < 0:
                raise ConfigError(f"quota must be >= 0, got {q}")

    def to_dict(self) -> dict:
        return {
            "normal_quota": self.normal_quota,
            "attack_quota": self.attack_quota,
            "include_minority": self.include_minority,
        }


def _open_text(source):
    if isinstance(source, (str, Path)):
        path = Path(source)
        if path.suffix == ".gz":
            return gzip.open(path, "rt", encoding="utf-8", newline="")
        return open(path, encoding="utf-8", newline="")
    return source


def parse_kdd(source) -> list[RawRecord]:
    """Parse newline-delimited KDD records from a path or open text stream.

    Gzip-compressed paths are read transparently. A trailing period on the
    label token is stripped. Lines with anything other than 42 fields raise
    a ParseError carrying the 1-based line number; empty input is an empty
    list.
    """
    records = []
    fh = _open_text(source)
    close = fh is not source
    try:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            tokens = line.split(",")
            if len(tokens) != N_FEATURES + 1:
                raise ParseError(
                    line_no, f"expected {N_FEATURES + 1} fields, got {len(tokens)}"
                )
            label = tokens[-1].strip()
            if label.endswith("."):
                label = label[:-1]
            if not label:
                raise ParseError(line_no, "empty label")
            records.append(RawRecord(tuple(tokens[:-1]), label))
    finally:
        if close:
            fh.close()
    return records


def build_schema(records, attack_map: dict[str, int] | None = None) -> Schema:
    """Collect categorical vocabularies in descending frequency order.

    Frequency ties break lexicographically so the schema is a pure function
    of the record multiset.
    """
    if not records:
        raise LafsError("cannot build a schema from zero records")
    vocabularies = {}
    for col_id in CATEGORICAL_COLUMNS:
        counts = Counter(rec.features[col_id - 1] for rec in records)
        ordered = sorted(counts, key=lambda v: (-counts[v], v))
        vocabularies[col_id] = tuple(ordered)
    return Schema(vocabularies, dict(attack_map or DEFAULT_ATTACK_MAP))


def encode(records, schema: Schema, allow_unknown: bool = True) -> Dataset:
    """Map raw records onto the numeric matrix and 0..4 label vector.

    Categorical values become 1 + frequency rank; unknown values encode to
    the reserved code 0 when allowed, otherwise raise. Numeric fields parse
    as floats. Labels map normal -> 0 and attack names through the schema's
    category map.
    """
    if not records:
        raise LafsError("cannot encode zero records")
    n = len(records)
    X = np.empty((n, N_FEATURES), dtype=np.float64)
    columns = list(zip(*(rec.features for rec in records)))
    for col_id in range(1, N_FEATURES + 1):
        tokens = columns[col_id - 1]
        if col_id in CATEGORICAL_COLUMNS:
            vocab = {v: 1 + r for r, v in enumerate(schema.vocabularies[col_id])}
            codes = np.empty(n, dtype=np.float64)
            unknown_seen = set()
            for i, tok in enumerate(tokens):
                code = vocab.get(tok)
                if code is None:
                    if not allow_unknown:
                        raise EncodeError(
                            f"unknown value {tok!r} in column "
                            f"{KDD_FEATURE_NAMES[col_id - 1]!r}"
                        )
                    unknown_seen.add(tok)
                    code = 0
                codes[i] = code
            if unknown_seen:
                log.warning(
                    "column %s: %d unknown value(s) encoded to 0: %s",
                    KDD_FEATURE_NAMES[col_id - 1], len(unknown_seen),
                    sorted(unknown_seen),
                )
            X[:, col_id - 1] = codes
        else:
            try:
                X[:, col_id - 1] = np.asarray(tokens, dtype=np.float64)
            except ValueError:
                for i, tok in enumerate(tokens):
                    try:
                        float(tok)
                    except ValueError:
                        raise EncodeError(
                            f"record {i + 1}: cannot parse {tok!r} in column "
                            f"{KDD_FEATURE_NAMES[col_id - 1]!r}"
                        ) from None
                raise
    y = np.empty(n, dtype=np.int64)
    for i, rec in enumerate(records):
        if rec.label == "normal":
            y[i] = 0
        else:
            code = schema.attack_map.get(rec.label)
            if code is None:
                raise EncodeError(
                    f"record {i + 1}: attack name {rec.label!r} missing from the "
                    "attack map"
                )
            y[i] = code
    return Dataset(X, y, tuple(range(1, N_FEATURES + 1)), KDD_FEATURE_NAMES)


def scale_fit(dataset: Dataset) -> ScalingParams:
    """Per-column min and max of the training data."""
    return ScalingParams(dataset.X.min(axis=0), dataset.X.max(axis=0))


def scale_apply(dataset: Dataset, params: ScalingParams) -> Dataset:
    """Min-max transform with clamping to [0, 1]; constant columns map to 0."""
    if params.col_min.shape[0] != dataset.n_features:
        raise DimensionError(
            f"scaling params cover {params.col_min.shape[0]} columns, "
            f"dataset has {dataset.n_features}"
        )
    span = params.col_max - params.col_min
    safe = np.where(span > 0, span, 1.0)
    scaled = (dataset.X - params.col_min) / safe
    scaled[:, span <= 0] = 0.0
    np.clip(scaled, 0.0, 1.0, out=scaled)
    return Dataset(scaled, dataset.y, dataset.feature_ids, dataset.feature_names)


def _resolve_quota(quota: int | None, available: int) -> int:
    if quota is None:
        return min(AUTO_QUOTA_CAP, math.ceil(available * AUTO_QUOTA_FRACTION))
    return quota


def sample_subset(dataset: Dataset, spec: SubsetSpec,
                  rng: np.random.Generator) -> Dataset:
    """Quota-sized samples of classes 0 and 1 plus every minority-class row.

    Quota shortfall degrades to taking all available rows (logged). The
    assembled subset is shuffled.
    """
    picks = []
    for cls, quota in ((0, spec.normal_quota), (1, spec.attack_quota)):
        rows = np.flatnonzero(dataset.y == cls)
        want = _resolve_quota(quota, rows.size)
        if want >= rows.size:
            if quota is not None and want > rows.size:
                log.warning(
                    "class %d quota %d exceeds %d available rows; taking all",
                    cls, want, rows.size,
                )
            picks.append(rows)
        else:
            picks.append(rng.choice(rows, size=want, replace=False))
    if spec.include_minority:
        picks.append(np.flatnonzero(dataset.y >= 2))
    chosen = np.concatenate(picks)
    chosen = chosen[rng.permutation(chosen.size)]
    return Dataset(dataset.X[chosen], dataset.y[chosen],
                   dataset.feature_ids, dataset.feature_names)


def build_subset_pool(dataset: Dataset, r: int, spec: SubsetSpec,
                      rng: np.random.Generator) -> list[Dataset]:
    """r independently sampled subsets, one derived RNG stream each."""
    if r < 2:
        raise ConfigError(f"pool size must be >= 2, got {r}")
    return [sample_subset(dataset, spec, child) for child in rng.spawn(r)]


def remove_features(dataset: Dataset, indices) -> Dataset:
    """Drop the named columns; surviving columns keep their original ids."""
    drop = {int(i) for i in indices}
    unknown = drop - set(dataset.feature_ids)
    if unknown:
        raise LafsError(f"unknown feature indices: {sorted(unknown)}")
    keep = [k for k, fid in enumerate(dataset.feature_ids) if fid not in drop]
    return Dataset(
        dataset.X[:, keep],
        dataset.y,
        tuple(dataset.feature_ids[k] for k in keep),
        tuple(dataset.feature_names[k] for k in keep),
    )


def stratified_split(dataset: Dataset, holdout_fraction: float,
                     rng: np.random.Generator) -> tuple[Dataset, Dataset]:
    """Per-class shuffle split into (train, holdout)."""
    if not 0.0 < holdout_fraction < 1.0:
        raise ConfigError(f"holdout fraction must be in (0, 1), got {holdout_fraction}")
    train_rows, test_rows = [], []
    for cls in np.unique(dataset.y):
        rows = np.flatnonzero(dataset.y == cls)
        rows = rows[rng.permutation(rows.size)]
        n_test = int(round(rows.size * holdout_fraction))
        n_test = min(max(n_test, 1), rows.size - 1) if rows.size > 1 else 0
        test_rows.append(rows[:n_test])
        train_rows.append(rows[n_test:])
    train_rows = np.sort(np.concatenate(train_rows))
    test_rows = np.sort(np.concatenate(test_rows))
    make = lambda idx: Dataset(dataset.X[idx], dataset.y[idx],
                               dataset.feature_ids, dataset.feature_names)
    return make(train_rows), make(test_rows)


def parse_attack_map(path) -> dict[str, int]:
    """Read `attack_name,category` lines; merges over the built-in default."""
    mapping = dict(DEFAULT_ATTACK_MAP)
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 2:
                raise ParseError(line_no, f"expected `attack,category`, got {line!r}")
            name, category = parts
            code = CATEGORY_CODES.get(category.lower())
            if code is None:
                raise ParseError(
                    line_no,
                    f"category {category!r} not one of {sorted(CATEGORY_CODES)}",
                )
            mapping[name] = code
    return mapping


def save_csv(dataset: Dataset, path) -> None:
    """Generic CSV: header of feature names plus `label`, floats via repr."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(dataset.feature_names) + ["label"])
        for row, label in zip(dataset.X, dataset.y):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


def load_csv(path) -> Dataset:
    """Load the generic CSV format (header row, last column = integer label)."""
    with _open_text(path) as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(0, "empty file") from None
        if len(header) < 2:
            raise ParseError(1, "need at least one feature column and a label")
        names = tuple(header[:-1])
        rows = []
        labels = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    line_no, f"expected {len(header)} fields, got {len(row)}"
                )
            try:
                rows.append([float(v) for v in row[:-1]])
                labels.append(int(row[-1]))
            except ValueError as exc:
                raise ParseError(line_no, str(exc)) from None
    if not rows:
        raise LafsError(f"{path}: no data rows")
    X = np.array(rows, dtype=np.float64)
    y = np.array(labels, dtype=np.int64)
    return Dataset(X, y, tuple(range(1, len(names) + 1)), names)
